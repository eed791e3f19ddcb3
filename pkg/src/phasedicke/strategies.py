"""Verification strategies: Ω = Σ p_l E_l, spectral gaps, test counts and estimators."""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from functools import cached_property
from typing import Sequence as Seq

import numpy as np

from .basis import (
    PhaseFunction,
    PureState,
    TypeVector,
    antisymmetric_state,
    dicke_state,
    phased_dicke_state,
    text_to_seq,
    w_state,
)
from .errors import NotHomogeneous, PreconditionError, TargetNotFixed
from .linalg import (
    DensityOperator,
    HermitianOperator,
    eig_hermitian,
    fixed_residual,
    sum_operators,
)
from . import protocols as pr

PROB_TOL = 1e-12
HOMOGENEOUS_TOL = 1e-9
CEIL_SLACK = 1e-9

# comparison constants
W3_LOCC_UPPER_BOUND = (9 - 3 * math.sqrt(2)) / 7


def as_separable_upper_bound(n: int) -> float:
    return n / (n + 1)


@dataclass(frozen=True, eq=False)
class Strategy:
    target: PureState
    tests: tuple[tuple[float, HermitianOperator], ...]
    label: str = ""

    def __post_init__(self):
        tests = tuple((float(p), op) for p, op in self.tests)
        object.__setattr__(self, "tests", tests)
        if not tests:
            raise PreconditionError("strategy needs at least one test")
        probs = np.array([p for p, _ in tests])
        if np.any(probs < 0):
            raise PreconditionError("negative test probability")
        if abs(probs.sum() - 1) > PROB_TOL:
            raise PreconditionError(f"test probabilities sum to {probs.sum()!r}")
        for idx, (_, op) in enumerate(tests):
            if op.d != self.target.d or (op.dim and op.n != self.target.n):
                raise PreconditionError(f"test {idx} lives on a different system")
            res = fixed_residual(op, self.target)
            if res > 1e-9:
                raise PreconditionError(f"test {idx} does not fix the target (residual {res:.3e})")

    @property
    def n(self) -> int:
        return self.target.n

    @property
    def d(self) -> int:
        return self.target.d

    @property
    def probabilities(self) -> np.ndarray:
        return np.array([p for p, _ in self.tests])

    @property
    def operators(self) -> list[HermitianOperator]:
        return [op for _, op in self.tests]

    @cached_property
    def omega(self) -> HermitianOperator:
        target = HermitianOperator.projector(self.target)
        ops = [op for _, op in self.tests] + [target]
        return sum_operators(ops, [p for p, _ in self.tests] + [0.0])

    def check_bounds(self, tol: float = 1e-9) -> bool:
        """0 ≤ E ≤ I for every test."""
        for _, op in self.tests:
            if op.dim:
                w = np.linalg.eigvalsh(op.matrix)
                if w[0] < -tol or w[-1] > 1 + tol:
                    return False
        return True

    def with_probabilities(self, probs: Seq[float], label: str | None = None) -> "Strategy":
        return Strategy(self.target, tuple(zip(probs, self.operators)), self.label if label is None else label)


@dataclass(frozen=True, eq=False)
class GapReport:
    lambda2: float
    nu: float
    eigvec2: np.ndarray
    basis: tuple
    homogeneous: bool
    eigenvalues: np.ndarray  # spectrum of Ω on its support basis, descending

    def distinct(self, gap: float = 1e-8) -> list[tuple[float, int]]:
        out: list[list[float]] = []
        for x in self.eigenvalues:
            if out and out[-1][-1] - x <= gap:
                out[-1].append(float(x))
            else:
                out.append([float(x)])
        return [(float(np.mean(c)), len(c)) for c in out]


def spectral_gap(strategy: Strategy) -> GapReport:
    omega = strategy.omega
    res = fixed_residual(omega, strategy.target)
    if res > 1e-9:
        raise TargetNotFixed(f"target not fixed: residual {res:.3e}")
    psi = strategy.target.vector(omega.basis)
    bar = omega.matrix - np.outer(psi, psi.conj())
    spec = eig_hermitian(HermitianOperator(omega.basis, bar, omega.d, check=False))
    pos = int(np.argmax(np.abs(spec.eigenvalues)))
    lam2 = float(abs(spec.eigenvalues[pos]))
    vec2 = spec.eigenvectors[:, pos]
    # Ω shares eigenvectors with Ω − |Ψ⟩⟨Ψ|; the target's eigenvalue moves from 0 to 1
    eigs = spec.eigenvalues.copy()
    if eigs.size:
        eigs[int(np.argmax(np.abs(spec.eigenvectors.conj().T @ psi)))] += 1.0
    eigs = np.sort(eigs)[::-1]
    full_dim = strategy.d**strategy.n
    resid = bar - lam2 * (np.eye(omega.dim) - np.outer(psi, psi.conj()))
    homogeneous = float(np.max(np.abs(resid), initial=0.0)) <= HOMOGENEOUS_TOL and (
        omega.dim == full_dim or lam2 <= HOMOGENEOUS_TOL
    )
    lam2 = min(lam2, 1.0)
    return GapReport(lam2, 1.0 - lam2, vec2, omega.basis, homogeneous, eigs)


# builders

def uniform(tests: Seq[pr.TestProjector]) -> tuple[tuple[float, HermitianOperator], ...]:
    p = 1.0 / len(tests)
    return tuple((p, t.op) for t in tests)


def dicke_tests(k: TypeVector, d: int) -> list[pr.TestProjector]:
    return [pr.dicke_test(k, d, i, j)[0] for i, j in itertools.combinations(range(k.n), 2)]


def phased_tests(k: TypeVector, d: int, phi: PhaseFunction) -> list[pr.TestProjector]:
    return [pr.phased_dicke_test(k, d, phi, i, j)[0] for i, j in itertools.combinations(range(k.n), 2)]


def as_tests(n: int, variant: str = "plus-minus") -> list[pr.TestProjector]:
    return [pr.as_test(n, i, j, variant)[0] for i, j in itertools.combinations(range(n), 2)]


def build_dicke_strategy(k: TypeVector, d: int) -> Strategy:
    return Strategy(dicke_state(k, d), uniform(dicke_tests(k, d)), f"dicke k={k} d={d}")


def build_phased_strategy(k: TypeVector, d: int, phi: PhaseFunction) -> Strategy:
    return Strategy(phased_dicke_state(k, phi, d), uniform(phased_tests(k, d, phi)), f"phased k={k} d={d} phi={phi}")


def build_as_strategy(n: int, variant: str = "plus-minus") -> Strategy:
    return Strategy(antisymmetric_state(n), uniform(as_tests(n, variant)), f"as n={n} {variant}")


def build_w_two_test_strategy(n: int, p: float = 0.5) -> Strategy:
    if not 0 <= p <= 1:
        raise PreconditionError("p must lie in [0, 1]")
    p1 = pr.w_standard_test(n)[0]
    p2 = pr.w_adaptive_test(n)[0]
    return Strategy(w_state(n), ((p, p1.op), (1 - p, p2.op)), f"w two-test n={n} p={p}")


def build_w3_strategies(p1: float, p2: float) -> Strategy:
    p3 = 1 - p1 - p2
    if min(p1, p2) < 0 or p3 < -PROB_TOL:
        raise PreconditionError("(p1, p2, 1 - p1 - p2) must be a probability vector")
    ops = [t.op for t, _ in pr.w3_tests()]
    return Strategy(w_state(3), tuple(zip((p1, p2, max(p3, 0.0)), ops)), f"w3 p=({p1},{p2})")


# counts and estimators

def ceil_tolerant(x: float) -> int:
    """Ceiling that ignores rounding noise just above an integer."""
    return int(math.ceil(x - CEIL_SLACK * max(1.0, abs(x))))


def num_tests(epsilon: float, delta: float, nu: float) -> int:
    if not 0 < epsilon < 1:
        raise PreconditionError("epsilon must lie in (0, 1)")
    if not 0 < delta < 1:
        raise PreconditionError("delta must lie in (0, 1)")
    if not 0 < nu <= 1:
        raise PreconditionError("nu must lie in (0, 1]")
    if nu * epsilon >= 1:
        raise PreconditionError("need nu * epsilon < 1")
    return ceil_tolerant(math.log(delta) / math.log1p(-nu * epsilon))


def num_tests_asymptotic(epsilon: float, delta: float, nu: float) -> float:
    if epsilon <= 0 or nu <= 0 or not 0 < delta < 1:
        raise PreconditionError("need epsilon > 0, nu > 0, 0 < delta < 1")
    return math.log(1 / delta) / (nu * epsilon)


def fidelity_estimate(pass_rate: float, n_tests: int, lambda2: "float | GapReport") -> tuple[float, float]:
    """Fidelity and its standard deviation from the pass rate of a homogeneous strategy."""
    if isinstance(lambda2, GapReport):
        if not lambda2.homogeneous:
            raise NotHomogeneous("fidelity estimation needs a homogeneous strategy")
        lambda2 = lambda2.lambda2
    if not 0 <= lambda2 < 1:
        raise PreconditionError("need 0 <= lambda2 < 1")
    if n_tests < 1:
        raise PreconditionError("need at least one test")
    f = (pass_rate - lambda2) / (1 - lambda2)
    var = (1 - f) * (f + lambda2 / (1 - lambda2)) / n_tests
    return f, math.sqrt(max(var, 0.0))


def adversarial_num_tests(epsilon: float, delta: float, lambda2: float) -> int:
    if not 0 < lambda2 < 1:
        raise PreconditionError("need 0 < lambda2 < 1")
    if not 0 < epsilon < 1 or not 0 < delta < 1:
        raise PreconditionError("epsilon and delta must lie in (0, 1)")
    return ceil_tolerant(math.log(1 / delta) / (lambda2 * epsilon * math.log(1 / lambda2)))


def gme_cert_tests(n: int, delta: float) -> int:
    if n < 2:
        raise PreconditionError("need n >= 2")
    if not 0 < delta < 1:
        raise PreconditionError("delta must lie in (0, 1)")
    return max(1, ceil_tolerant(math.log(delta) / (math.log(2) - math.log(n + 1))))


def worst_case_state(strategy: Strategy, epsilon: float) -> DensityOperator:
    """(1−ε)|Ψ⟩⟨Ψ| + ε|φ₂⟩⟨φ₂| with φ₂ a λ2-eigenvector of Ω."""
    if not 0 <= epsilon <= 1:
        raise PreconditionError("epsilon must lie in [0, 1]")
    rep = spectral_gap(strategy)
    psi = strategy.target.vector(rep.basis)
    phi = rep.eigvec2 - np.vdot(psi, rep.eigvec2) * psi
    phi = phi / np.linalg.norm(phi)
    rho = (1 - epsilon) * np.outer(psi, psi.conj()) + epsilon * np.outer(phi, phi.conj())
    return DensityOperator(rep.basis, rho, strategy.d)


def pass_probability(strategy: Strategy, sigma: HermitianOperator) -> float:
    omega = strategy.omega
    common = sorted(set(omega.basis) & set(sigma.basis))
    if not common:
        return 0.0
    a = omega.restrict(common).matrix
    b = sigma.restrict(common).matrix
    val = float(np.real(np.sum(a * b.T)))
    if val < -1e-12 or val > 1 + 1e-12:
        raise PreconditionError(f"pass probability {val!r} outside [0, 1]")
    return min(max(val, 0.0), 1.0)


# builder specs and strategy files

def _k(spec) -> TypeVector:
    return spec if isinstance(spec, TypeVector) else TypeVector.parse(str(spec))


def state_from_spec(spec: dict) -> PureState:
    (kind, args), = spec.items()
    if kind == "dicke":
        k = _k(args["k"])
        return dicke_state(k, int(args.get("d", k.r + 1)))
    if kind == "phased":
        k = _k(args["k"])
        return phased_dicke_state(k, PhaseFunction.parse(args.get("phases", "zero")), int(args.get("d", k.r + 1)))
    if kind == "w":
        return w_state(int(args["n"]))
    if kind == "as":
        return antisymmetric_state(int(args["n"]))
    if kind == "amplitudes":
        d = int(args["d"])
        amps = {text_to_seq(u): complex(*a) if isinstance(a, list) else complex(a) for u, a in args["amplitudes"].items()}
        n = len(next(iter(amps)))
        return PureState(n, d, amps)
    raise PreconditionError(f"unknown state spec {kind!r}")


def test_from_spec(spec: dict) -> HermitianOperator:
    if "basis" in spec:
        return HermitianOperator.from_json(spec)
    (kind, args), = spec.items()
    if kind == "dicke-test":
        k = _k(args["k"])
        return pr.dicke_test(k, int(args.get("d", k.r + 1)), int(args["i"]), int(args["j"]))[0].op
    if kind == "phased-test":
        k = _k(args["k"])
        phi = PhaseFunction.parse(args.get("phases", "zero"))
        return pr.phased_dicke_test(k, int(args.get("d", k.r + 1)), phi, int(args["i"]), int(args["j"]))[0].op
    if kind == "as-test":
        return pr.as_test(int(args["n"]), int(args["i"]), int(args["j"]), args.get("variant", "plus-minus"))[0].op
    if kind == "w-standard":
        return pr.w_standard_test(int(args["n"]))[0].op
    if kind == "w-adaptive":
        return pr.w_adaptive_test(int(args["n"]))[0].op
    if kind == "w3-test3":
        return pr.w3_test3()[0].op
    raise PreconditionError(f"unknown test spec {kind!r}")


def strategy_from_spec(spec: dict | str) -> Strategy:
    """Strategy from a builder spec such as {"dicke": {"k": "2,1", "d": 2}} or an explicit test list."""
    if isinstance(spec, str):
        spec = json.loads(spec)
    if "tests" in spec:
        target = state_from_spec(spec["target"])
        tests = []
        for entry in spec["tests"]:
            body = entry.get("operator") or entry.get("test")
            if body is None:
                raise PreconditionError("test entry needs an 'operator' or 'test' field")
            tests.append((float(entry["p"]), test_from_spec(body)))
        return Strategy(target, tuple(tests), spec.get("label", "file"))
    from . import symmetry as sym  # local import: symmetry builds on this module

    (kind, args), = spec.items()
    if kind == "dicke":
        k = _k(args["k"])
        return build_dicke_strategy(k, int(args.get("d", k.r + 1)))
    if kind == "dicke-sym":
        k = _k(args["k"])
        return sym.build_dicke_symmetrized_strategy(k, int(args.get("d", k.r + 1)))
    if kind == "phased":
        k = _k(args["k"])
        return build_phased_strategy(k, int(args.get("d", k.r + 1)), PhaseFunction.parse(args.get("phases", "zero")))
    if kind == "as":
        return build_as_strategy(int(args["n"]), args.get("variant", "plus-minus"))
    if kind == "as-optimal":
        from .schur_weyl import schur_weyl_strategy

        return schur_weyl_strategy(int(args["n"]), explicit=True).strategy
    if kind == "w":
        return build_w_two_test_strategy(int(args["n"]), float(args.get("p", 0.5)))
    if kind == "w-sym":
        return sym.build_w_symmetrized_strategy(int(args["n"]), args.get("p"))
    if kind == "w3":
        return build_w3_strategies(float(args["p1"]), float(args["p2"]))
    if kind == "w3-sym":
        return sym.build_w3_symmetrized_strategy(args.get("p1"), args.get("p2"))
    raise PreconditionError(f"unknown strategy spec {kind!r}")
