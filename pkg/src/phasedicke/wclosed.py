"""Closed-form W-state quantities: h(n), the two-test overlap q, spectral gaps and their bounds."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import PreconditionError

# tanh/coth constants of the large-n limits
A_CONST = math.sqrt(math.pi / 2) * math.tanh(math.pi / 2)
B_CONST = math.sqrt(math.pi / 2) / math.tanh(math.pi / 2)

# rounded values used for the finite-n proximity checks
H_LIMIT_ODD, H_LIMIT_EVEN = 1.15, 1.37
NU_LIMIT_ODD, NU_LIMIT_EVEN = 0.342, 0.287
FIT_ODD = (1.37, 1.37)
FIT_EVEN = (1.15, 1.11)


def _h_from_row(n: int, half_row) -> float:
    den = 1 << n
    terms = []
    for j, c in enumerate(half_row):
        m = n - 2 * j
        terms.append((1.0 if m == 0 else 2.0) * (c / den) / (1 + m * m))
    return math.fsum(terms)


@lru_cache(maxsize=4)
def h_table(n_max: int) -> tuple[float, ...]:
    """h(0..n_max) from Pascal rows of exact integers (only the left half of each row is kept)."""
    if n_max < 0:
        raise PreconditionError("n_max must be nonnegative")
    out = [1.0]
    half = [1]
    for n in range(1, n_max + 1):
        prev, m = half, n - 1
        half = [1] + [prev[j - 1] + (prev[j] if j <= m // 2 else prev[m - j]) for j in range(1, n // 2 + 1)]
        out.append(_h_from_row(n, half))
    return tuple(out)


def h(n: int) -> float:
    """(1/2ⁿ) Σ_j C(n,j)/(1+(n−2j)²), exact binomials then floating division."""
    if n < 0 or int(n) != n:
        raise PreconditionError("h(n) needs an integer n >= 0")
    n = int(n)
    return _h_from_row(n, [math.comb(n, j) for j in range(n // 2 + 1)])


def _check_n(n: int) -> None:
    if n < 3:
        raise PreconditionError("W-state formulas need n >= 3")


def q_closed_form(n: int) -> float:
    _check_n(n)
    return 0.4 if n == 3 else 1.0 - h(n - 3)


def nu_w_closed_form(n: int) -> float:
    """Gap of the balanced two-test strategy, (1 − √q)/2."""
    _check_n(n)
    if n == 3:
        return 0.5 - 1 / math.sqrt(10)
    return (1 - math.sqrt(1 - h(n - 3))) / 2


def symmetrized_w_closed_form(n: int) -> tuple[float, float, float]:
    """(p, λ2, ν) of p P₁ + (1−p) P₂^G at the balancing probability p.

    p equalizes the W-sector eigenvalue with the bound 1 − p on the complement of P₁.
    """
    _check_n(n)
    hv = h(n - 1)
    p = (1 + (n - 2) * hv) / (n + (n - 2) * hv)
    lam2 = (n - 1) / (n + (n - 2) * hv)
    return p, lam2, 1 - lam2


def trace_p1p2_closed_form(n: int) -> float:
    _check_n(n)
    return n - 1 - (n - 2) * h(n - 1)


def nu_dicke_w(n: int) -> float:
    """Gap of the pairwise Dicke strategy for the W state."""
    _check_n(n)
    return 1 / 3 if n == 3 else 1 / (n - 1)


def fit_value(n: int) -> float:
    a, b = FIT_ODD if n % 2 else FIT_EVEN
    return a / (math.sqrt(n) + b)


@dataclass(frozen=True)
class WGapRow:
    n: int
    h_nm3: float
    q: float
    nu_two_test: float
    nu_symmetrized: float
    p_opt: float


@dataclass(frozen=True)
class WGapTable:
    rows: tuple[WGapRow, ...]

    @classmethod
    def build(cls, n_values) -> "WGapTable":
        rows = []
        for n in n_values:
            p, _, nu_s = symmetrized_w_closed_form(n)
            rows.append(WGapRow(n, h(n - 3), q_closed_form(n), nu_w_closed_form(n), nu_s, p))
        table = cls(tuple(rows))
        table.check()
        return table

    def check(self) -> None:
        for r in self.rows:
            vals = (r.h_nm3, r.q, r.nu_two_test, r.nu_symmetrized, r.p_opt)
            if not all(math.isfinite(v) for v in vals):
                raise ArithmeticError(f"non-finite entry at n={r.n}")
            if not (0 < r.nu_two_test < 1 and 0 < r.nu_symmetrized < 1):
                raise ArithmeticError(f"gap outside (0, 1) at n={r.n}")

    def to_csv(self) -> str:
        """Columns n, nu_dicke, nu_w_two_test, nu_w_symmetrized, nu_as, nu_as_optimal."""
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["n", "nu_dicke", "nu_w_two_test", "nu_w_symmetrized", "nu_as", "nu_as_optimal"])
        for r in self.rows:
            n = r.n
            w.writerow([n] + [fmt(x) for x in (nu_dicke_w(n), r.nu_two_test, r.nu_symmetrized, 1 / (n - 1), n / (n + 1))])
        return buf.getvalue()


def fmt(x: float) -> str:
    return f"{x:.12g}"


@dataclass(frozen=True)
class BoundsReport:
    n_max: int
    gap_bounds_ok: bool
    gap_bound_failures: list
    h_monotone_ok: bool
    h_monotone_failures: list
    h_limit_rel_error: dict  # parity -> max relative deviation of √n h(n) from the rounded limit, n ≥ 2000
    nu_limit_rel_error: dict
    h_limit_rel_error_exact: dict  # same, against the tanh/coth constants
    fit_residuals: list  # (n, ν_sym − fit) samples

    @property
    def h_limit_ok(self) -> bool:
        return all(v <= 0.01 for v in self.h_limit_rel_error.values())

    @property
    def nu_limit_ok(self) -> bool:
        return all(v <= 0.02 for v in self.nu_limit_rel_error.values())

    def lines(self) -> list[str]:
        out = [
            f"gap bounds 1/(4√n) < ν < 3/(8√n) (1/(2√n) at n=5): {'ok' if self.gap_bounds_ok else 'FAIL'}",
            f"√n h(n) increasing within parity up to {self.n_max}: {'ok' if self.h_monotone_ok else 'FAIL'}",
        ]
        for par in ("odd", "even"):
            if par in self.h_limit_rel_error:
                out.append(
                    f"{par}: max rel. deviation of √n h(n) from rounded limit {fmt(self.h_limit_rel_error[par])}, "
                    f"from exact constant {fmt(self.h_limit_rel_error_exact[par])}; "
                    f"of √n ν from rounded limit {fmt(self.nu_limit_rel_error[par])}"
                )
        return out


def gap_bound_violations(n_max: int = 200) -> list[int]:
    bad = []
    for n in range(3, n_max + 1):
        nu = nu_w_closed_form(n)
        upper = 1 / (2 * math.sqrt(n)) if n == 5 else 3 / (8 * math.sqrt(n))
        if not 1 / (4 * math.sqrt(n)) < nu < upper:
            bad.append(n)
    return bad


def monotonicity_violations(n_max: int) -> list[int]:
    """n with √n h(n) ≤ √(n−2) h(n−2)."""
    tab = h_table(n_max)
    s = [math.sqrt(n) * tab[n] for n in range(n_max + 1)]
    return [n for n in range(2, n_max + 1) if not s[n] > s[n - 2]]


def bounds_and_limits_report(n_max: int, n_limit_from: int = 2000) -> BoundsReport:
    if n_max < 3:
        raise PreconditionError("need n_max >= 3")
    tab = h_table(n_max)
    gap_bad = gap_bound_violations(min(n_max, 200))
    mono_bad = monotonicity_violations(n_max)
    h_err, h_err_exact, nu_err = {}, {}, {}
    for par, parity in (("odd", 1), ("even", 0)):
        ns = [n for n in range(max(n_limit_from, 3), n_max + 1) if n % 2 == parity]
        if not ns:
            continue
        lim_h = H_LIMIT_ODD if parity else H_LIMIT_EVEN
        exact_h = A_CONST if parity else B_CONST
        lim_nu = NU_LIMIT_ODD if parity else NU_LIMIT_EVEN
        sh = np.array([math.sqrt(n) * tab[n] for n in ns])
        snu = np.array([math.sqrt(n) * (1 - math.sqrt(1 - tab[n - 3])) / 2 for n in ns])
        h_err[par] = float(np.max(np.abs(sh / lim_h - 1)))
        h_err_exact[par] = float(np.max(np.abs(sh / exact_h - 1)))
        nu_err[par] = float(np.max(np.abs(snu / lim_nu - 1)))
    fit = [(n, symmetrized_w_closed_form(n)[2] - fit_value(n)) for n in range(3, min(n_max, 200) + 1)]
    return BoundsReport(n_max, not gap_bad, gap_bad, not mono_bad, mono_bad, h_err, nu_err, h_err_exact, fit)
