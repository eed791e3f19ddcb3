"""Finite-group averaging of operators and strategies, the groups R and K, and W3 irreducible blocks.

A group element acts as U = (permutation of parties) · diag(e^{iθ_0}, …)^{⊗n}.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Iterable, Sequence as Seq

import numpy as np

from .basis import Sequence, TypeVector, content_of, full_basis, permute_sequence, w_state
from .errors import PreconditionError
from .linalg import HermitianOperator
from . import protocols as pr
from .strategies import Strategy, build_dicke_strategy



@dataclass(frozen=True)
class GroupElement:
    perm: tuple[int, ...]
    phases: tuple[float, ...]

    def __post_init__(self):
        perm = tuple(int(x) for x in self.perm)
        object.__setattr__(self, "perm", perm)
        object.__setattr__(self, "phases", tuple(float(x) for x in self.phases))
        if sorted(perm) != list(range(len(perm))):
            raise PreconditionError(f"not a permutation: {perm}")

    def act(self, u: Sequence) -> tuple[Sequence, complex]:
        """U|u⟩ = e^{iΘ(u)}|σ(u)⟩."""
        theta = sum(self.phases[a] for a in u)
        return permute_sequence(u, self.perm), complex(np.exp(1j * theta))

    def to_json(self) -> dict:
        return {"perm": list(self.perm), "phases": list(self.phases)}

    @classmethod
    def from_json(cls, obj: dict) -> "GroupElement":
        return cls(tuple(obj["perm"]), tuple(obj["phases"]))

    @classmethod
    def identity(cls, n: int, d: int) -> "GroupElement":
        return cls(tuple(range(n)), (0.0,) * d)


def _images(basis: Seq[Sequence], g: GroupElement) -> tuple[list[Sequence], np.ndarray]:
    out, ph = [], []
    for u in basis:
        w, z = g.act(u)
        out.append(w)
        ph.append(z)
    return out, np.array(ph)


def apply_group_element(H: HermitianOperator, g: GroupElement) -> HermitianOperator:
    if len(g.phases) != H.d or (H.dim and len(g.perm) != H.n):
        raise PreconditionError("group element does not match the operator's system")
    images, ph = _images(H.basis, g)
    basis = sorted(set(H.basis) | set(images))
    index = {u: t for t, u in enumerate(basis)}
    idx = np.array([index[w] for w in images], dtype=int)
    m = np.zeros((len(basis), len(basis)), dtype=complex)
    m[np.ix_(idx, idx)] = ph[:, None] * H.matrix * ph.conj()[None, :]
    return HermitianOperator(basis, m, H.d, check=False)


def pairwise_sum(mats: Iterable[np.ndarray]) -> np.ndarray:
    """Sum in a fixed binary-tree order, using O(log n) partial sums."""
    stack: list[tuple[int, np.ndarray]] = []
    for m in mats:
        level, acc = 0, m
        while stack and stack[-1][0] == level:
            _, prev = stack.pop()
            acc = prev + acc
            level += 1
        stack.append((level, acc))
    if not stack:
        raise PreconditionError("empty sum")
    total = stack.pop()[1]
    while stack:
        total = stack.pop()[1] + total
    return total


def average_over_group(H: HermitianOperator, elements: Seq[GroupElement]) -> HermitianOperator:
    """(1/|S|) Σ_g U_g H U_g† on the closure of H's basis under S."""
    if not elements:
        raise PreconditionError("empty group element list")
    mapped = [_images(H.basis, g) for g in elements]
    basis = sorted(set(H.basis).union(*(set(im) for im, _ in mapped)))
    index = {u: t for t, u in enumerate(basis)}
    dim = len(basis)

    def conjugates():
        for images, ph in mapped:
            idx = np.array([index[w] for w in images], dtype=int)
            m = np.zeros((dim, dim), dtype=complex)
            m[np.ix_(idx, idx)] = ph[:, None] * H.matrix * ph.conj()[None, :]
            yield m

    total = pairwise_sum(conjugates()) / len(elements)
    total = 0.5 * (total + total.conj().T)
    return HermitianOperator(basis, total, H.d, check=False)


def diagonal_group_average(H: HermitianOperator) -> HermitianOperator:
    """Average over all diagonal local unitaries: drop entries between sequences of different content."""
    types = [content_of(u, H.d) for u in H.basis]
    lookup = {c: t for t, c in enumerate(sorted(set(types)))}
    lab = np.array([lookup[c] for c in types])
    mask = lab[:, None] == lab[None, :]
    return HermitianOperator(H.basis, np.where(mask, H.matrix, 0), H.d, check=False)


def cyclic_shifts(n: int, d: int) -> list[GroupElement]:
    return [GroupElement(tuple((k + c) % n for k in range(n)), (0.0,) * d) for c in range(n)]


def all_permutations(n: int, d: int) -> list[GroupElement]:
    return [GroupElement(p, (0.0,) * d) for p in itertools.permutations(range(n))]


def w_symmetrization_subgroup(n: int) -> list[GroupElement]:
    """Cyclic party shifts times powers of diag(1, e^{2πi/(n+1)})^{⊗n}; order n(n+1)."""
    if n < 2:
        raise PreconditionError("need n >= 2")
    out = []
    for c in range(n):
        perm = tuple((k + c) % n for k in range(n))
        for m in range(n + 1):
            out.append(GroupElement(perm, (0.0, 2 * math.pi * m / (n + 1))))
    return out


def w3_subgroup_K() -> list[GroupElement]:
    """All party permutations of three qubits times powers of diag(1, i)^{⊗3}; order 24."""
    return [
        GroupElement(perm, (0.0, m * math.pi / 2))
        for perm in itertools.permutations(range(3))
        for m in range(4)
    ]


def average_strategy(strategy: Strategy, elements: Seq[GroupElement], label: str | None = None) -> Strategy:
    tests = tuple((p, average_over_group(op, elements)) for p, op in strategy.tests)
    return Strategy(strategy.target, tests, label or f"{strategy.label} (averaged)")


def diagonal_average_strategy(strategy: Strategy) -> Strategy:
    tests = tuple((p, diagonal_group_average(op)) for p, op in strategy.tests)
    return Strategy(strategy.target, tests, f"{strategy.label} (diagonal average)")


# W3 irreducible blocks

W3_TAU_NAMES = ("W3", "tau0", "tau1", "tau2", "tau3", "tau4", "tau5", "tau6")


def w3_tau_basis() -> np.ndarray:
    """Columns |W3⟩, τ0..τ6 over the computational basis 000..111."""
    s2, s3, s6 = math.sqrt(2), math.sqrt(3), math.sqrt(6)
    basis = full_basis(3, 2)
    idx = {"".join(map(str, u)): t for t, u in enumerate(basis)}

    def vec(entries):
        v = np.zeros(8)
        for key, a in entries.items():
            v[idx[key]] = a
        return v

    cols = [
        vec({"001": 1 / s3, "010": 1 / s3, "100": 1 / s3}),
        vec({"000": 1}),
        vec({"111": 1}),
        vec({"001": 1 / s2, "010": -1 / s2}),
        vec({"001": 1 / s6, "010": 1 / s6, "100": -2 / s6}),
        vec({"011": 1 / s3, "101": 1 / s3, "110": 1 / s3}),
        vec({"011": 1 / s2, "101": -1 / s2}),
        vec({"011": 1 / s6, "101": 1 / s6, "110": -2 / s6}),
    ]
    return np.column_stack(cols)


def w3_mu_vector(H: HermitianOperator) -> np.ndarray:
    """(μ0, μ1, μ2, μ3, μ4): diagonal weights of H on τ0, τ1, span(τ2, τ3), span(τ5, τ6), τ4."""
    m = H.on_basis(full_basis(3, 2)).matrix
    T = w3_tau_basis()
    diag = np.real(np.einsum("ia,ij,ja->a", T.conj(), m, T))
    return np.array([diag[1], diag[2], (diag[3] + diag[4]) / 2, (diag[6] + diag[7]) / 2, diag[5]])


def w3_block_form(H: HermitianOperator) -> np.ndarray:
    """H written in the (W3, τ0..τ6) basis."""
    m = H.on_basis(full_basis(3, 2)).matrix
    T = w3_tau_basis()
    return T.conj().T @ m @ T


# symmetrized builders

def build_dicke_symmetrized_strategy(k: TypeVector, d: int) -> Strategy:
    return diagonal_average_strategy(build_dicke_strategy(k, d))


def w_symmetrized_tests(n: int) -> list[HermitianOperator]:
    group = w_symmetrization_subgroup(n)
    p1 = pr.w_standard_test(n)[0].op
    p2 = pr.w_adaptive_test(n)[0].op
    return [average_over_group(p1, group), average_over_group(p2, group)]


def build_w_symmetrized_strategy(n: int, p: float | None = None) -> Strategy:
    """p P₁ + (1−p) P₂^R; p = None picks the optimum by the cutting-plane optimizer."""
    from .optimizer import optimize_probabilities

    tests = w_symmetrized_tests(n)
    target = w_state(n)
    if p is None:
        probs = optimize_probabilities(tests, target).probabilities
    else:
        probs = (float(p), 1 - float(p))
    return Strategy(target, tuple(zip(probs, tests)), f"w symmetrized n={n}")


def w3_symmetrized_tests() -> list[HermitianOperator]:
    group = w3_subgroup_K()
    return [average_over_group(t.op, group) for t, _ in pr.w3_tests()]


def build_w3_symmetrized_strategy(p1: float | None = None, p2: float | None = None) -> Strategy:
    from .optimizer import optimize_probabilities

    tests = w3_symmetrized_tests()
    target = w_state(3)
    if p1 is None or p2 is None:
        probs = optimize_probabilities(tests, target).probabilities
    else:
        probs = (float(p1), float(p2), 1 - float(p1) - float(p2))
    return Strategy(target, tuple(zip(probs, tests)), "w3 symmetrized")
