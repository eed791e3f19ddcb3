"""Minimize λ_max(Σ p_l Ē_l) over the probability simplex, plus the two-projector closed form.

Ē_l = E_l − |Ψ⟩⟨Ψ|. The objective is convex in p; a Kelley cutting-plane
loop linearizes it at top eigenvectors and solves the resulting LP with HiGHS.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Sequence as Seq

import numpy as np
from scipy.optimize import linprog

from .basis import PureState, union_basis
from .errors import NoConvergence, NumericalError, PreconditionError
from .linalg import HermitianOperator, fixed_residual
from .protocols import TestProjector

GAP_TOL = 1e-7
MAX_ITER = 500
TIE_TOL = 1e-12
CUT_WINDOW = 1e-9


@dataclass(frozen=True, eq=False)
class OptimizationResult:
    probabilities: np.ndarray
    f_star: float
    certificate: float  # upper bound minus cutting-plane lower bound at termination
    iterations: int
    history: list = field(default_factory=list, repr=False)

    @property
    def nu(self) -> float:
        return 1.0 - self.f_star

    def to_json(self) -> dict:
        return {
            "p": [float(x) for x in self.probabilities],
            "f_star": float(self.f_star),
            "iterations": int(self.iterations),
            "residual": float(self.certificate),
        }

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2)


def _as_operator(t) -> HermitianOperator:
    return t.op if isinstance(t, TestProjector) else t


def centered_matrices(tests: Seq, target: PureState) -> tuple[list[np.ndarray], list]:
    """Dense Ē_l on the union basis of all tests and the target."""
    ops = [_as_operator(t) for t in tests]
    for idx, op in enumerate(ops):
        res = fixed_residual(op, target)
        if res > 1e-9:
            raise PreconditionError(f"test {idx} does not fix the target (residual {res:.3e})")
    basis = union_basis(target.support(), *(op.basis for op in ops))
    psi = target.vector(basis)
    proj = np.outer(psi, psi.conj())
    mats = [op.on_basis(basis).matrix - proj for op in ops]
    if all(not np.any(m.imag) for m in mats):
        mats = [m.real for m in mats]
    return mats, basis


def lambda_max(mats: Seq[np.ndarray], p: Seq[float]) -> float:
    m = sum(float(w) * a for w, a in zip(p, mats))
    return float(np.linalg.eigvalsh(m)[-1])


def _top(mats, p):
    m = sum(float(w) * a for w, a in zip(p, mats))
    w, v = np.linalg.eigh(m)
    return w, v


def _cut(mats, vec) -> np.ndarray:
    return np.array([float(np.real(np.vdot(vec, a @ vec))) for a in mats])


def _solve_lp(cuts: np.ndarray, L: int):
    # variables (p_1..p_L, f); minimize f s.t. cuts @ p − f ≤ 0, Σp = 1, p ≥ 0
    c = np.zeros(L + 1)
    c[-1] = 1.0
    a_ub = np.hstack([cuts, -np.ones((cuts.shape[0], 1))])
    b_ub = np.zeros(cuts.shape[0])
    a_eq = np.hstack([np.ones((1, L)), np.zeros((1, 1))])
    bounds = [(0, None)] * L + [(None, None)]
    res = linprog(
        c, A_ub=a_ub, b_ub=b_ub, A_eq=a_eq, b_eq=[1.0], bounds=bounds, method="highs",
        options={"primal_feasibility_tolerance": 1e-10, "dual_feasibility_tolerance": 1e-10},
    )
    if res.status != 0:
        raise NumericalError(f"cutting-plane LP failed: {res.message}")
    p = np.clip(res.x[:L], 0, None)
    return p / p.sum(), float(res.x[-1])


def _lex_key(p: np.ndarray) -> tuple:
    return tuple(np.round(p, 12))


def optimize_probabilities(
    tests: Seq, target: PureState, tol: float = GAP_TOL, max_iter: int = MAX_ITER, p0: Seq[float] | None = None
) -> OptimizationResult:
    """Cutting-plane minimization of the second largest eigenvalue of Σ p_l E_l."""
    if not tests:
        raise PreconditionError("need at least one test")
    mats, _ = centered_matrices(tests, target)
    L = len(mats)
    if L == 1:
        f = lambda_max(mats, [1.0])
        return OptimizationResult(np.ones(1), f, 0.0, 0)
    p = np.full(L, 1.0 / L) if p0 is None else np.asarray(p0, dtype=float)
    cuts: list[np.ndarray] = []
    best_p, best_f = p.copy(), math.inf
    lower = -math.inf
    history = []
    for it in range(1, max_iter + 1):
        w, v = _top(mats, p)
        f = float(w[-1])
        if f < best_f - TIE_TOL or (abs(f - best_f) <= TIE_TOL and _lex_key(p) < _lex_key(best_p)):
            best_f, best_p = f, p.copy()
        # one cut per eigenvector within a small window of the top (degenerate maxima)
        for col in np.flatnonzero(w >= f - CUT_WINDOW):
            cuts.append(_cut(mats, v[:, col]))
        p, lower = _solve_lp(np.array(cuts), L)
        history.append((it, best_f, lower))
        if best_f - lower < tol:
            f_check = lambda_max(mats, best_p)
            if abs(f_check - best_f) > 1e-9:
                raise NumericalError("re-verification of the optimum disagrees with the iterate value")
            return OptimizationResult(best_p, f_check, max(best_f - lower, 0.0), it, history)
    raise NoConvergence(f"no convergence after {max_iter} iterations (gap {best_f - lower:.3e})")


def two_test_overlap_q(p1, p2, target: PureState) -> float:
    """‖P̄₁P̄₂P̄₁‖ for two projectors fixing the target, with a variational self-check."""
    (a, b), basis = centered_matrices([p1, p2], target)
    for m, name in ((a, "first"), (b, "second")):
        rank = 1 + int(round(float(np.real(np.trace(m)))))
        if rank < 2:
            raise PreconditionError(f"{name} test has rank 1; two-test formula needs rank >= 2")
    prod = a @ b @ a
    prod = 0.5 * (prod + prod.conj().T)
    q = float(np.linalg.eigvalsh(prod)[-1])
    w, v = np.linalg.eigh(a)
    sup = v[:, w > 0.5]
    q_var = float(np.linalg.eigvalsh(sup.conj().T @ b @ sup)[-1]) if sup.shape[1] else 0.0
    if abs(q - q_var) > 1e-9:
        raise NumericalError(f"overlap self-check failed: {q} vs {q_var}")
    return min(max(q, 0.0), 1.0)


def two_test_optimal(p1, p2, target: PureState) -> tuple[float, float]:
    """(1/2, (1 − √q)/2): the saturating mixture and its spectral gap."""
    q = two_test_overlap_q(p1, p2, target)
    if q >= 1 - 1e-12:
        raise PreconditionError("q = 1: no positive spectral gap is attainable")
    return 0.5, (1 - math.sqrt(q)) / 2
