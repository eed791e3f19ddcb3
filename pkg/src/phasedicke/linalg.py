"""Dense Hermitian operators over explicit (possibly restricted) bases."""

from __future__ import annotations

import json
from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence as Seq

import numpy as np

from .basis import PureState, Sequence, seq_to_text, text_to_seq, union_basis
from .errors import NumericalError, PreconditionError, TargetNotFixed

HERMITIAN_TOL = 1e-12
EIG_CAP = 8192
CLUSTER_GAP = 1e-8
FIX_TOL = 1e-9


class HermitianOperator:
    """Hermitian matrix whose rows and columns are labelled by `basis`.

    Sequences outside the basis are implicitly annihilated, so an operator
    restricted to its support stands for the full operator on (C^d)^n.
    """

    def __init__(self, basis: Iterable[Seq[int]], matrix, d: int, check: bool = True):
        self.basis: tuple[Sequence, ...] = tuple(tuple(u) for u in basis)
        m = np.array(matrix, dtype=complex)
        if m.shape != (len(self.basis), len(self.basis)):
            raise PreconditionError(f"matrix shape {m.shape} does not match basis size {len(self.basis)}")
        if self.basis:
            n = len(self.basis[0])
            if any(len(u) != n for u in self.basis):
                raise PreconditionError("basis sequences differ in length")
            if any(a < 0 or a >= d for u in self.basis for a in u):
                raise PreconditionError(f"basis symbol outside local dimension {d}")
        if check and m.size:
            dev = np.max(np.abs(m - m.conj().T))
            if dev > HERMITIAN_TOL * max(1.0, np.max(np.abs(m))):
                raise PreconditionError(f"operator not Hermitian (deviation {dev:.3e})")
        m.flags.writeable = False
        self.matrix = m
        self.d = int(d)

    # construction helpers

    @classmethod
    def zero(cls, basis, d: int) -> "HermitianOperator":
        k = len(tuple(basis))
        return cls(basis, np.zeros((k, k)), d, check=False)

    @classmethod
    def identity(cls, basis, d: int) -> "HermitianOperator":
        basis = tuple(basis)
        return cls(basis, np.eye(len(basis)), d, check=False)

    @classmethod
    def projector(cls, state: PureState, basis=None) -> "HermitianOperator":
        basis = tuple(basis) if basis is not None else tuple(state.support())
        v = state.vector(basis)
        return cls(basis, np.outer(v, v.conj()), state.d, check=False)

    @classmethod
    def diagonal(cls, basis, d: int) -> "HermitianOperator":
        """Projector onto span of the given basis sequences."""
        return cls.identity(sorted(set(tuple(u) for u in basis)), d)

    @property
    def n(self) -> int:
        return len(self.basis[0]) if self.basis else 0

    @property
    def dim(self) -> int:
        return len(self.basis)

    @cached_property
    def index(self) -> dict[Sequence, int]:
        return {u: i for i, u in enumerate(self.basis)}

    # basis changes

    def on_basis(self, basis: Iterable[Seq[int]], atol: float = 0.0) -> "HermitianOperator":
        """Same operator written on another basis; dropped sequences must carry no weight."""
        basis = tuple(tuple(u) for u in basis)
        if basis == self.basis:
            return self
        new_index = {u: i for i, u in enumerate(basis)}
        src = []
        dst = []
        dropped = []
        for i, u in enumerate(self.basis):
            j = new_index.get(u)
            if j is None:
                dropped.append(i)
            else:
                src.append(i)
                dst.append(j)
        if dropped and np.max(np.abs(self.matrix[dropped, :]), initial=0.0) > atol:
            raise PreconditionError("target basis drops sequences where the operator is nonzero")
        m = np.zeros((len(basis), len(basis)), dtype=complex)
        src_a = np.array(src, dtype=int)
        dst_a = np.array(dst, dtype=int)
        m[np.ix_(dst_a, dst_a)] = self.matrix[np.ix_(src_a, src_a)]
        return HermitianOperator(basis, m, self.d, check=False)

    def restrict(self, basis: Iterable[Seq[int]]) -> "HermitianOperator":
        """Principal submatrix on a subset of the basis."""
        basis = tuple(tuple(u) for u in basis)
        try:
            idx = np.array([self.index[u] for u in basis], dtype=int)
        except KeyError as exc:
            raise PreconditionError(f"sequence {exc.args[0]} not in basis") from exc
        return HermitianOperator(basis, self.matrix[np.ix_(idx, idx)], self.d, check=False)

    def support(self, atol: float = 0.0) -> list[Sequence]:
        mask = np.max(np.abs(self.matrix), axis=1, initial=0.0) > atol
        return [u for u, keep in zip(self.basis, mask) if keep]

    def compact(self, atol: float = 0.0) -> "HermitianOperator":
        return self.restrict(self.support(atol))

    # algebra

    def _aligned(self, other: "HermitianOperator"):
        if self.d != other.d:
            raise PreconditionError("local dimensions differ")
        if self.basis == other.basis:
            return self, other
        basis = union_basis(self.basis, other.basis)
        return self.on_basis(basis), other.on_basis(basis)

    def __add__(self, other: "HermitianOperator") -> "HermitianOperator":
        a, b = self._aligned(other)
        return HermitianOperator(a.basis, a.matrix + b.matrix, self.d, check=False)

    def __sub__(self, other: "HermitianOperator") -> "HermitianOperator":
        a, b = self._aligned(other)
        return HermitianOperator(a.basis, a.matrix - b.matrix, self.d, check=False)

    def __mul__(self, c: float) -> "HermitianOperator":
        return HermitianOperator(self.basis, self.matrix * float(c), self.d, check=False)

    __rmul__ = __mul__

    def __matmul__(self, other: "HermitianOperator") -> np.ndarray:
        """Matrix product on the union basis (not Hermitian in general, so returned raw)."""
        a, b = self._aligned(other)
        return a.matrix @ b.matrix

    def dist(self, other: "HermitianOperator") -> float:
        """Operator-norm distance."""
        diff = self - other
        if diff.dim == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvalsh(diff.matrix))))

    def max_abs_diff(self, other: "HermitianOperator") -> float:
        diff = self - other
        return float(np.max(np.abs(diff.matrix), initial=0.0))

    def trace(self) -> float:
        return float(np.real(np.trace(self.matrix)))

    def norm(self) -> float:
        if self.dim == 0:
            return 0.0
        return float(np.max(np.abs(np.linalg.eigvalsh(self.matrix))))

    def expectation(self, state: PureState) -> float:
        v = _vector_on(state, self.basis)
        return float(np.real(np.vdot(v, self.matrix @ v)))

    def apply(self, state: PureState) -> np.ndarray:
        """Ω|ψ> as a vector on self.basis (the state must live inside the basis)."""
        return self.matrix @ state.vector(self.basis)

    def is_projector(self, tol: float = 1e-9) -> bool:
        if self.dim == 0:
            return True
        return float(np.max(np.abs(self.matrix @ self.matrix - self.matrix))) <= tol

    def fixes(self, state: PureState, tol: float = FIX_TOL) -> bool:
        return fixed_residual(self, state) <= tol

    # serialization

    def to_json(self) -> dict:
        entries = []
        rows, cols = np.nonzero(np.triu(self.matrix))
        for r, c in zip(rows.tolist(), cols.tolist()):
            z = self.matrix[r, c]
            entries.append([r, c, float(z.real), float(z.imag)])
        return {"d": self.d, "basis": [seq_to_text(u, self.d) for u in self.basis], "entries": entries}

    @classmethod
    def from_json(cls, obj: dict | str) -> "HermitianOperator":
        if isinstance(obj, str):
            obj = json.loads(obj)
        basis = [text_to_seq(s) for s in obj["basis"]]
        d = int(obj.get("d", 1 + max((max(u) for u in basis if u), default=0)))
        m = np.zeros((len(basis), len(basis)), dtype=complex)
        for r, c, re, im in obj["entries"]:
            m[r, c] = complex(re, im)
            if r != c:
                m[c, r] = complex(re, -im)
            elif abs(im) > HERMITIAN_TOL:
                raise PreconditionError("diagonal entry with imaginary part")
        return cls(basis, m.real if not np.any(m.imag) else m, d)

    def __repr__(self) -> str:
        return f"HermitianOperator(dim={self.dim}, d={self.d}, n={self.n})"


def _vector_on(state: PureState, basis: Seq[Sequence]) -> np.ndarray:
    """State vector on basis, silently dropping amplitude outside it (annihilated there)."""
    index = {u: i for i, u in enumerate(basis)}
    v = np.zeros(len(basis), dtype=complex)
    for u, a in state.amplitudes.items():
        i = index.get(u)
        if i is not None:
            v[i] = a
    return v


def fixed_residual(op: HermitianOperator, state: PureState) -> float:
    """‖opΨ − Ψ‖, counting any part of Ψ outside op.basis as annihilated."""
    v = _vector_on(state, op.basis)
    index = op.index
    outside = sum(abs(a) ** 2 for u, a in state.amplitudes.items() if u not in index)
    r = op.matrix @ v - v
    return float(np.sqrt(float(np.vdot(r, r).real) + outside))


class DensityOperator(HermitianOperator):
    def __init__(self, basis, matrix, d: int, check: bool = True):
        super().__init__(basis, matrix, d, check=check)
        if check:
            tr = self.trace()
            if abs(tr - 1) > 1e-10:
                raise PreconditionError(f"density trace {tr!r} != 1")
            if self.dim and np.linalg.eigvalsh(self.matrix)[0] < -1e-10:
                raise PreconditionError("density operator not positive semidefinite")

    @classmethod
    def from_state(cls, state: PureState, basis=None) -> "DensityOperator":
        basis = tuple(basis) if basis is not None else tuple(state.support())
        v = state.vector(basis)
        return cls(basis, np.outer(v, v.conj()), state.d, check=False)

    @classmethod
    def maximally_mixed(cls, basis, d: int) -> "DensityOperator":
        basis = tuple(basis)
        return cls(basis, np.eye(len(basis)) / len(basis), d)

    @classmethod
    def mixture(cls, weights: Seq[float], states: Seq[HermitianOperator]) -> "DensityOperator":
        total = HermitianOperator.zero((), states[0].d)
        for w, s in zip(weights, states):
            total = total + float(w) * s
        return cls(total.basis, total.matrix, total.d)

    @classmethod
    def of(cls, op: HermitianOperator) -> "DensityOperator":
        return cls(op.basis, op.matrix, op.d)


@dataclass(frozen=True, eq=False)
class Spectrum:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis: tuple[Sequence, ...]

    def distinct(self, gap: float = CLUSTER_GAP) -> list[tuple[float, int]]:
        """Eigenvalue clusters (mean value, multiplicity), descending."""
        out: list[list[float]] = []
        for x in self.eigenvalues:
            if out and out[-1][-1] - x <= gap:
                out[-1].append(float(x))
            else:
                out.append([float(x)])
        return [(float(np.mean(c)), len(c)) for c in out]

    def reconstruction_error(self, H: HermitianOperator) -> float:
        V = self.eigenvectors
        return float(np.max(np.abs(H.matrix - (V * self.eigenvalues) @ V.conj().T), initial=0.0))


def canonicalize_columns(V: np.ndarray, atol: float = 1e-10) -> np.ndarray:
    """Rotate each column so its first non-negligible component is real positive."""
    V = np.array(V, dtype=complex)
    for c in range(V.shape[1]):
        nz = np.flatnonzero(np.abs(V[:, c]) > atol)
        if nz.size:
            z = V[nz[0], c]
            V[:, c] *= np.conj(z) / abs(z)
    return V


def eig_hermitian(H: HermitianOperator, cap: int = EIG_CAP) -> Spectrum:
    if H.dim > cap:
        raise PreconditionError(f"dimension {H.dim} exceeds eigensolver cap {cap}")
    dev = np.max(np.abs(H.matrix - H.matrix.conj().T), initial=0.0)
    if dev > HERMITIAN_TOL * max(1.0, np.max(np.abs(H.matrix), initial=0.0)):
        raise PreconditionError("eigensolver input not Hermitian")
    if H.dim == 0:
        return Spectrum(np.zeros(0), np.zeros((0, 0), dtype=complex), H.basis)
    m = H.matrix
    if not np.any(m.imag):
        m = m.real
    w, V = np.linalg.eigh(m)
    w = w[::-1].copy()
    V = canonicalize_columns(V[:, ::-1])
    return Spectrum(w, V, H.basis)


def second_largest_eigenvalue(omega: HermitianOperator, target: PureState, tol: float = FIX_TOL) -> float:
    """‖Ω − |Ψ⟩⟨Ψ|‖ for Ω with Ψ as eigenvalue-1 eigenvector."""
    res = fixed_residual(omega, target)
    if res > tol:
        raise TargetNotFixed(f"target not fixed: residual {res:.3e}")
    bar = omega - HermitianOperator.projector(target)
    if bar.dim == 0:
        return 0.0
    m = bar.matrix if np.any(bar.matrix.imag) else bar.matrix.real
    w = np.linalg.eigvalsh(m)
    return float(max(abs(w[0]), abs(w[-1])))


def insert_pair(w: Seq[int], i: int, a: int, j: int, b: int) -> Sequence:
    """Sequence with symbol a at party i, b at party j and w on the remaining parties in order."""
    n = len(w) + 2
    out = []
    it = iter(w)
    for k in range(n):
        if k == i:
            out.append(a)
        elif k == j:
            out.append(b)
        else:
            out.append(next(it))
    return tuple(out)


def embed_two_party(op2: np.ndarray, i: int, j: int, rest_basis: Iterable[Seq[int]], d: int) -> HermitianOperator:
    """op2 on parties (i, j) tensored with the projector onto span(rest_basis) elsewhere.

    op2 is a d²×d² matrix with row index a*d + b for symbol a on party i, b on party j.
    The result lives on the sequences reachable from rest_basis and the support of op2.
    """
    if i == j:
        raise PreconditionError("party indices collide")
    op2 = np.asarray(op2, dtype=complex)
    if op2.shape != (d * d, d * d):
        raise PreconditionError(f"two-party operator must be {d*d}x{d*d}")
    rest = [tuple(w) for w in rest_basis]
    active = np.flatnonzero(np.max(np.abs(op2), axis=1) > 0)
    sub = op2[np.ix_(active, active)]
    pairs = [(int(x) // d, int(x) % d) for x in active]
    blocks = [[insert_pair(w, i, a, j, b) for a, b in pairs] for w in rest]
    basis = sorted({u for blk in blocks for u in blk})
    index = {u: t for t, u in enumerate(basis)}
    m = np.zeros((len(basis), len(basis)), dtype=complex)
    for blk in blocks:
        idx = np.array([index[u] for u in blk], dtype=int)
        m[np.ix_(idx, idx)] += sub
    return HermitianOperator(basis, m, d)


def sum_operators(ops: Seq[HermitianOperator], weights: Seq[float] | None = None) -> HermitianOperator:
    """Weighted sum on the union basis."""
    if not ops:
        raise PreconditionError("empty operator list")
    weights = [1.0] * len(ops) if weights is None else list(weights)
    basis = union_basis(*(op.basis for op in ops))
    m = np.zeros((len(basis), len(basis)), dtype=complex)
    index = {u: t for t, u in enumerate(basis)}
    for w, op in zip(weights, ops):
        if op.dim:
            idx = np.array([index[u] for u in op.basis], dtype=int)
            m[np.ix_(idx, idx)] += float(w) * op.matrix
    return HermitianOperator(basis, m, ops[0].d, check=False)


def check_numerics(value: float, label: str) -> float:
    if not np.isfinite(value):
        raise NumericalError(f"{label} is not finite")
    return value
