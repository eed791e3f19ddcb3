"""Schur-Weyl blocks of (C^d)^{⊗n}: partitions, hook dimensions, characters and the optimal
antisymmetric-state operator Σ_μ (d_μ/D_μ) P_μ.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache
from typing import Sequence as Seq

import numpy as np

from .basis import antisymmetric_state, full_basis
from .errors import PreconditionError
from .linalg import HermitianOperator

Partition = tuple[int, ...]
EXPLICIT_MAX_N = 5


def partitions(n: int) -> list[Partition]:
    """Partitions of n in reverse lexicographic order, (n) first."""
    if n < 0:
        raise PreconditionError("n must be nonnegative")

    def rec(m: int, cap: int):
        if m == 0:
            yield ()
            return
        for first in range(min(m, cap), 0, -1):
            for rest in rec(m - first, first):
                yield (first,) + rest

    return list(rec(n, n))


def parse_partition(text: str) -> Partition:
    mu = tuple(int(x) for x in text.split(",") if x.strip())
    check_partition(mu)
    return mu


def check_partition(mu: Seq[int]) -> None:
    if any(x < 1 for x in mu) or any(a < b for a, b in zip(mu, mu[1:])):
        raise PreconditionError(f"not a partition: {tuple(mu)}")


def conjugate(mu: Partition) -> Partition:
    return tuple(sum(1 for x in mu if x > j) for j in range(mu[0])) if mu else ()


def hook_lengths(mu: Partition) -> list[int]:
    mt = conjugate(mu)
    return [mu[i] - j + mt[j] - i - 1 for i in range(len(mu)) for j in range(mu[i])]


def symmetric_dim(mu: Partition) -> int:
    """d_μ by the hook-length formula."""
    n = sum(mu)
    return math.factorial(n) // math.prod(hook_lengths(mu))


def unitary_dim_ratio(mu: Partition, d: int) -> Fraction:
    """D_μ/d_μ = (1/n!) ∏_{j=1}^{d} (d+μ_j−j)!/(d−j)!, zero when μ has more than d rows."""
    if len(mu) > d:
        return Fraction(0)
    n = sum(mu)
    num = 1
    den = 1
    for j in range(1, d + 1):
        mj = mu[j - 1] if j <= len(mu) else 0
        num *= math.factorial(d + mj - j)
        den *= math.factorial(d - j)
    return Fraction(num, den * math.factorial(n))


def hook_dims(mu: Partition, d: int | None = None) -> tuple[int, int]:
    """(d_μ, D_μ) with D_μ the dimension of the U(d) irrep (d defaults to n)."""
    check_partition(mu)
    n = sum(mu)
    d = n if d is None else d
    dmu = symmetric_dim(mu)
    big = unitary_dim_ratio(mu, d) * dmu
    if big.denominator != 1:
        raise ArithmeticError(f"non-integer unitary dimension for {mu}")
    return dmu, int(big)


def majorization_leq(mu: Partition, nu: Partition) -> bool:
    """μ ≺ ν: every prefix sum of μ is at most that of ν."""
    if sum(mu) != sum(nu):
        raise PreconditionError("partitions of different sizes")
    a = list(itertools.accumulate(mu)) + [sum(mu)] * max(0, len(nu) - len(mu))
    b = list(itertools.accumulate(nu)) + [sum(nu)] * max(0, len(mu) - len(nu))
    return all(x <= y for x, y in zip(a, b))


def dim_ratio_monotone_check(n: int) -> bool:
    """D_μ/d_μ ≤ D_ν/d_ν whenever μ ≺ ν (d = n)."""
    parts = partitions(n)
    ratio = {mu: unitary_dim_ratio(mu, n) for mu in parts}
    return all(
        ratio[a] <= ratio[b] for a in parts for b in parts if a != b and majorization_leq(a, b)
    )


# characters

def cycle_type(perm: Seq[int]) -> Partition:
    seen = [False] * len(perm)
    lengths = []
    for start in range(len(perm)):
        if not seen[start]:
            k, length = start, 0
            while not seen[k]:
                seen[k] = True
                k = perm[k]
                length += 1
            lengths.append(length)
    return tuple(sorted(lengths, reverse=True))


@lru_cache(maxsize=None)
def _mn(beta: tuple[int, ...], rho: tuple[int, ...]) -> int:
    if not rho:
        return 1
    r, rest = rho[0], rho[1:]
    bset = set(beta)
    total = 0
    for b in beta:
        c = b - r
        if c < 0 or c in bset:
            continue
        sign = -1 if sum(1 for x in beta if c < x < b) % 2 else 1
        nb = tuple(sorted((bset - {b}) | {c}, reverse=True))
        total += sign * _mn(nb, rest)
    return total


def character(mu: Partition, rho: Partition) -> int:
    """χ_μ on the class of cycle type ρ (Murnaghan-Nakayama via bead removal on β-sets)."""
    if sum(mu) != sum(rho):
        raise PreconditionError("partition and cycle type of different sizes")
    L = len(mu)
    beta = tuple(mu[j] + (L - 1 - j) for j in range(L))
    return _mn(beta, tuple(sorted(rho, reverse=True)))


# explicit operators on (C^n)^{⊗n}

def _permutation_index_maps(n: int, d: int) -> list[tuple[tuple[int, ...], np.ndarray]]:
    seqs = np.array(full_basis(n, d), dtype=int).reshape(-1, n)
    out = []
    for perm in itertools.permutations(range(n)):
        img = np.empty_like(seqs)
        img[:, list(perm)] = seqs  # symbol of party k moves to party perm[k]
        out.append((perm, np.ravel_multi_index(img.T, (d,) * n)))
    return out


def _class_sum_operator(n: int, coeff) -> np.ndarray:
    """Σ_σ coeff(cycle type σ) U_σ on (C^n)^{⊗n}."""
    d = n
    dim = d**n
    m = np.zeros((dim, dim))
    cols = np.arange(dim)
    for perm, img in _permutation_index_maps(n, d):
        c = coeff(cycle_type(perm))
        if c:
            m[img, cols] += c
    return m


def young_projector(mu: Partition) -> HermitianOperator:
    """P_μ = (d_μ/n!) Σ_σ χ_μ(σ) U_σ on (C^n)^{⊗n}."""
    n = sum(mu)
    if n > EXPLICIT_MAX_N:
        raise PreconditionError(f"explicit projectors only for n <= {EXPLICIT_MAX_N}")
    dmu = symmetric_dim(mu)
    m = _class_sum_operator(n, lambda ct: dmu * character(mu, ct) / math.factorial(n))
    return HermitianOperator(full_basis(n, n), m, n)


@dataclass(frozen=True, eq=False)
class SchurWeylResult:
    n: int
    dims: dict  # μ -> (d_μ, D_μ)
    ratios: dict  # μ -> d_μ/D_μ as Fraction
    operator: HermitianOperator | None

    @property
    def spectrum(self) -> dict:
        return {mu: float(r) for mu, r in self.ratios.items()}

    @property
    def lambda2(self) -> float:
        return float(max(r for r in self.ratios.values() if r < 1))

    @property
    def nu(self) -> float:
        return 1.0 - self.lambda2

    @property
    def second_partition(self) -> Partition:
        vals = {mu: r for mu, r in self.ratios.items() if r < 1}
        return max(vals, key=vals.get)

    @property
    def strategy(self):
        from .strategies import Strategy

        if self.operator is None:
            raise PreconditionError("explicit operator was not built")
        return Strategy(antisymmetric_state(self.n), ((1.0, self.operator),), f"as optimal n={self.n}")

    def pass_probability(self, weights: dict) -> float:
        """tr(Ωσ) from block weights tr(P_μ σ)."""
        return float(sum(float(self.ratios[tuple(mu)]) * w for mu, w in weights.items()))


def schur_weyl_strategy(n: int, explicit: bool = False) -> SchurWeylResult:
    if n < 3:
        raise PreconditionError("need n >= 3")
    if explicit and n > EXPLICIT_MAX_N:
        raise PreconditionError(f"explicit operator only for n <= {EXPLICIT_MAX_N}")
    dims = {mu: hook_dims(mu, n) for mu in partitions(n)}
    ratios = {mu: Fraction(dm, big) for mu, (dm, big) in dims.items()}
    op = None
    if explicit:
        fact = math.factorial(n)
        coeffs = {
            ct: sum(float(ratios[mu]) * dims[mu][0] * character(mu, ct) for mu in dims) / fact
            for ct in partitions(n)
        }
        op = HermitianOperator(full_basis(n, n), _class_sum_operator(n, coeffs.get), n)
    return SchurWeylResult(n, dims, ratios, op)


def schur_weyl_twirl(H: HermitianOperator) -> dict:
    """Block coefficients tr(H P_μ)/(d_μ D_μ) of the collective-unitary and permutation twirl of H."""
    n = H.n
    if H.d != n:
        raise PreconditionError("twirl implemented for local dimension equal to n")
    full = H.on_basis(full_basis(n, n)).matrix
    out = {}
    for mu in partitions(n):
        dm, big = hook_dims(mu, n)
        p = young_projector(mu).matrix
        out[mu] = float(np.real(np.sum(full * p.T))) / (dm * big)
    return out
