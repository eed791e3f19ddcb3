"""Sequence classes B(k), target states and basis text forms.

Sequences are tuples of ints. A *content* is a tuple of symbol counts indexed
by symbol (zeros allowed); a TypeVector is a validated nonincreasing content.
Every ordered collection of sequences in this package is lexicographic.
"""

from __future__ import annotations

import itertools
import math
import re
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Iterable, Mapping, Sequence as Seq

import numpy as np

from .errors import DimensionTooSmall, PreconditionError

Sequence = tuple[int, ...]
Content = tuple[int, ...]

NORM_TOL = 1e-12


@dataclass(frozen=True)
class TypeVector:
    parts: tuple[int, ...]

    def __post_init__(self):
        parts = tuple(int(x) for x in self.parts)
        object.__setattr__(self, "parts", parts)
        if not parts or any(x < 1 for x in parts):
            raise PreconditionError(f"type vector parts must be positive: {parts}")
        if any(a < b for a, b in zip(parts, parts[1:])):
            raise PreconditionError(f"type vector parts must be nonincreasing: {parts}")
        if sum(parts) < 1:
            raise PreconditionError("empty type vector")

    @property
    def n(self) -> int:
        return sum(self.parts)

    @property
    def r(self) -> int:
        return len(self.parts) - 1

    @classmethod
    def parse(cls, text: str) -> "TypeVector":
        try:
            return cls(tuple(int(x) for x in text.replace(" ", "").split(",") if x))
        except ValueError as exc:
            raise PreconditionError(f"cannot parse type vector {text!r}") from exc

    def __str__(self) -> str:
        return ",".join(str(x) for x in self.parts)


def as_content(k: TypeVector | Seq[int]) -> Content:
    if isinstance(k, TypeVector):
        return k.parts
    c = tuple(int(x) for x in k)
    if any(x < 0 for x in c):
        raise PreconditionError(f"negative count in content {c}")
    return c


def _check_dim(content: Content, d: int) -> None:
    used = [s for s, c in enumerate(content) if c]
    if used and used[-1] >= d:
        raise DimensionTooSmall(f"content {content} needs local dimension > {used[-1]}, got d={d}")


@lru_cache(maxsize=512)
def _enumerate(content: Content) -> tuple[Sequence, ...]:
    counts = list(content)
    n = sum(counts)
    out: list[Sequence] = []
    cur: list[int] = []

    def rec():
        if len(cur) == n:
            out.append(tuple(cur))
            return
        for s, c in enumerate(counts):
            if c:
                counts[s] -= 1
                cur.append(s)
                rec()
                cur.pop()
                counts[s] += 1

    rec()
    return tuple(out)


def enumerate_type_class(k: TypeVector | Seq[int], d: int) -> list[Sequence]:
    """All sequences with content k, in lexicographic order."""
    content = as_content(k)
    _check_dim(content, d)
    return list(_enumerate(content))


def class_size(k: TypeVector | Seq[int]) -> int:
    content = as_content(k)
    m = math.factorial(sum(content))
    for c in content:
        m //= math.factorial(c)
    return m


def content_of(u: Seq[int], d: int) -> Content:
    c = [0] * d
    for a in u:
        c[a] += 1
    return tuple(c)


def derived_type(k: TypeVector | Seq[int], mode: str, s: int, t: int | None = None) -> Content:
    """Content obtained from k by one of the modes transfer, remove_pair, remove_two.

    transfer(s, t) moves one symbol t to symbol s; remove_pair(s, t) drops one
    of each; remove_two(s) drops two copies of s. Parts are not re-sorted.
    """
    c = list(as_content(k))
    top = max(s, t if t is not None else s)
    if s < 0 or (t is not None and t < 0):
        raise PreconditionError("negative symbol index")
    if top >= len(c):
        c.extend([0] * (top + 1 - len(c)))
    if mode == "transfer":
        if t is None or s == t:
            raise PreconditionError("transfer needs two distinct symbols")
        c[s] += 1
        c[t] -= 1
    elif mode == "remove_pair":
        if t is None or not s < t:
            raise PreconditionError("remove_pair needs s < t")
        c[s] -= 1
        c[t] -= 1
    elif mode == "remove_two":
        if t is not None:
            raise PreconditionError("remove_two takes a single symbol")
        c[s] -= 2
    else:
        raise PreconditionError(f"unknown mode {mode!r}")
    if any(x < 0 for x in c):
        raise PreconditionError(f"underflow: {mode}({s}, {t}) on {as_content(k)}")
    return tuple(c)


# text forms

def seq_to_text(u: Seq[int], d: int) -> str:
    if d <= 10:
        return "".join(str(a) for a in u)
    return ",".join(str(a) for a in u)


def text_to_seq(text: str) -> Sequence:
    text = text.strip()
    if "," in text:
        return tuple(int(x) for x in text.split(","))
    if not text.isdigit():
        raise PreconditionError(f"bad sequence text {text!r}")
    return tuple(int(ch) for ch in text)


def permutation_parity(u: Seq[int]) -> int:
    """0 for even, 1 for odd; u must have distinct entries."""
    inv = sum(1 for a in range(len(u)) for b in range(a + 1, len(u)) if u[a] > u[b])
    return inv & 1


def permute_sequence(u: Seq[int], perm: Seq[int]) -> Sequence:
    """Move the symbol of party k to party perm[k]."""
    w = [0] * len(u)
    for k, a in enumerate(u):
        w[perm[k]] = a
    return tuple(w)


# states

@dataclass(frozen=True, eq=False)
class PureState:
    n: int
    d: int
    amplitudes: Mapping[Sequence, complex] = field(repr=False)

    def __post_init__(self):
        amps = {}
        for u, a in self.amplitudes.items():
            u = tuple(int(x) for x in u)
            if len(u) != self.n or any(x < 0 or x >= self.d for x in u):
                raise PreconditionError(f"sequence {u} incompatible with n={self.n}, d={self.d}")
            a = complex(a)
            if a != 0:
                amps[u] = a
        norm2 = sum(abs(a) ** 2 for a in amps.values())
        if abs(norm2 - 1) > NORM_TOL:
            raise PreconditionError(f"state not normalized: |psi|^2 = {norm2!r}")
        object.__setattr__(self, "amplitudes", dict(sorted(amps.items())))

    def support(self) -> list[Sequence]:
        return list(self.amplitudes)

    def vector(self, basis: Seq[Sequence]) -> np.ndarray:
        index = {u: i for i, u in enumerate(basis)}
        v = np.zeros(len(basis), dtype=complex)
        for u, a in self.amplitudes.items():
            if u not in index:
                raise PreconditionError(f"state support {u} missing from basis")
            v[index[u]] = a
        return v

    def overlap(self, other: "PureState") -> complex:
        """<self|other>."""
        return sum(np.conj(a) * other.amplitudes.get(u, 0) for u, a in self.amplitudes.items())

    def permuted(self, perm: Seq[int]) -> "PureState":
        return PureState(self.n, self.d, {permute_sequence(u, perm): a for u, a in self.amplitudes.items()})

    def allclose(self, other: "PureState", tol: float = 1e-12) -> bool:
        keys = set(self.amplitudes) | set(other.amplitudes)
        return all(abs(self.amplitudes.get(u, 0) - other.amplitudes.get(u, 0)) <= tol for u in keys)

    @classmethod
    def from_vector(cls, n: int, d: int, basis: Seq[Sequence], vec: np.ndarray, atol: float = 0.0) -> "PureState":
        vec = np.asarray(vec, dtype=complex)
        vec = vec / np.linalg.norm(vec)
        return cls(n, d, {u: a for u, a in zip(basis, vec) if abs(a) > atol})


@dataclass(frozen=True)
class PhaseFunction:
    """Phase assignment on B(k): "zero", "antisymmetric-sign", "random" (seeded) or "explicit"."""

    kind: str = "zero"
    seed: int | None = None
    table: Mapping[Sequence, float] | None = field(default=None, compare=False, hash=False)

    def __post_init__(self):
        if self.kind not in ("zero", "antisymmetric-sign", "random", "explicit"):
            raise PreconditionError(f"unknown phase function {self.kind!r}")
        if self.kind == "random" and self.seed is None:
            raise PreconditionError("random phases need a seed")
        if self.kind == "explicit" and self.table is None:
            raise PreconditionError("explicit phases need a table")

    @classmethod
    def explicit(cls, table: Mapping[Sequence, float]) -> "PhaseFunction":
        return cls("explicit", table={tuple(u): float(v) for u, v in table.items()})

    @classmethod
    def random(cls, seed: int) -> "PhaseFunction":
        return cls("random", seed=int(seed))

    @classmethod
    def parse(cls, text: str) -> "PhaseFunction":
        text = text.strip()
        if text in ("zero", "antisymmetric-sign"):
            return cls(text)
        m = re.fullmatch(r"random\((\d+)\)", text)
        if m:
            return cls.random(int(m.group(1)))
        raise PreconditionError(f"cannot parse phase function {text!r}")

    def __str__(self) -> str:
        if self.kind == "random":
            return f"random({self.seed})"
        return self.kind

    def phases(self, k: TypeVector | Seq[int], d: int) -> dict[Sequence, float]:
        seqs = enumerate_type_class(k, d)
        if self.kind == "zero":
            return {u: 0.0 for u in seqs}
        if self.kind == "antisymmetric-sign":
            content = as_content(k)
            if any(c != 1 for c in content):
                raise PreconditionError("antisymmetric-sign phases need k = (1,...,1)")
            return {u: math.pi * permutation_parity(u) for u in seqs}
        if self.kind == "random":
            vals = np.random.default_rng(self.seed).uniform(0.0, 2 * math.pi, size=len(seqs))
            return dict(zip(seqs, vals.tolist()))
        missing = [u for u in seqs if u not in self.table]
        if missing:
            raise PreconditionError(f"phase undefined on {missing[0]}")
        return {u: float(self.table[u]) for u in seqs}


def _phase_factor(phi: float) -> complex:
    # exact signs for multiples of pi/2 keep sign-type states real
    q = phi / (math.pi / 2)
    if abs(q - round(q)) < 1e-15 * max(1.0, abs(q)):
        return (1, 1j, -1, -1j)[int(round(q)) % 4]
    return complex(np.exp(1j * phi))


def dicke_state(k: TypeVector | Seq[int], d: int) -> PureState:
    seqs = enumerate_type_class(k, d)
    a = 1 / math.sqrt(len(seqs))
    return PureState(len(seqs[0]), d, {u: a for u in seqs})


def phased_dicke_state(k: TypeVector | Seq[int], phi: PhaseFunction, d: int) -> PureState:
    phases = phi.phases(k, d)
    a = 1 / math.sqrt(len(phases))
    n = len(next(iter(phases)))
    return PureState(n, d, {u: a * _phase_factor(p) for u, p in phases.items()})


def antisymmetric_state(n: int) -> PureState:
    if n < 2:
        raise PreconditionError("antisymmetric state needs n >= 2")
    return phased_dicke_state((1,) * n, PhaseFunction("antisymmetric-sign"), n)


def w_state(n: int) -> PureState:
    if n < 2:
        raise PreconditionError("W state needs n >= 2")
    return dicke_state((n - 1, 1), 2)


def full_basis(n: int, d: int) -> list[Sequence]:
    return list(itertools.product(range(d), repeat=n))


def union_basis(*bases: Iterable[Sequence]) -> list[Sequence]:
    s = set()
    for b in bases:
        s.update(b)
    return sorted(s)
