"""Monte Carlo runs of verification protocols at operator level and at measurement-tree level.

Randomness comes from counter-keyed substreams: the generator for (seed, block, stage) is
independent of how blocks are distributed over workers, so results do not depend on the
worker count.
"""

from __future__ import annotations

import csv
import io
import json
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence as Seq

import numpy as np

from .basis import full_basis
from .errors import NumericalError, PreconditionError
from .linalg import HermitianOperator
from .protocols import Leaf, Node, Tree, validate_tree
from .schur_weyl import EXPLICIT_MAX_N, schur_weyl_strategy
from .strategies import Strategy, fidelity_estimate, gme_cert_tests, spectral_gap
from .strategies import pass_probability as _strategy_pass_probability

BLOCK = 4096
PROB_FLOOR = 1e-14
NEGATIVE_GUARD = -1e-12
DENSE_TREE_MAX_DIM = 4096

STAGE_CHOOSE, STAGE_PASS, STAGE_REPEAT, STAGE_TREE = 0, 1, 2, 3


def substream(seed: int, index: int, stage: int) -> np.random.Generator:
    """Philox generator keyed by (seed, index, stage)."""
    ss = np.random.SeedSequence(int(seed) % 2**64, spawn_key=(int(index), int(stage)))
    return np.random.Generator(np.random.Philox(ss))


def pass_probability(strategy: Strategy, sigma: HermitianOperator) -> float:
    """tr(Ωσ), clamped to [0, 1]."""
    return _strategy_pass_probability(strategy, sigma)


def per_test_pass_probabilities(strategy: Strategy, sigma: HermitianOperator) -> np.ndarray:
    """tr(E_l σ) for every test of the strategy."""
    out = []
    for _, op in strategy.tests:
        common = sorted(set(op.basis) & set(sigma.basis))
        if not common:
            out.append(0.0)
            continue
        val = float(np.real(np.sum(op.restrict(common).matrix * sigma.restrict(common).matrix.T)))
        if val < NEGATIVE_GUARD or val > 1 - NEGATIVE_GUARD:
            raise NumericalError(f"test pass probability {val!r} outside [0, 1]")
        out.append(min(max(val, 0.0), 1.0))
    return np.array(out)


def infidelity(strategy: Strategy, sigma: HermitianOperator) -> float:
    psi = strategy.target
    common = [u for u in sigma.basis if u in psi.amplitudes]
    if not common:
        return 1.0
    v = psi.vector(common)
    f = float(np.real(np.vdot(v, sigma.restrict(common).matrix @ v)))
    return 1.0 - f


def _check_system(strategy: Strategy, sigma: HermitianOperator) -> None:
    if sigma.d != strategy.d or (sigma.dim and sigma.n != strategy.n):
        raise PreconditionError("state dimensions do not match the strategy")


@dataclass(frozen=True, eq=False)
class RunConfig:
    strategy: Strategy
    sigma: HermitianOperator | Seq[HermitianOperator]
    n_runs: int
    seed: int
    workers: int = 1

    def __post_init__(self):
        if self.n_runs < 1:
            raise PreconditionError("need at least one run")
        if self.workers < 1:
            raise PreconditionError("need at least one worker")
        if isinstance(self.sigma, HermitianOperator):
            _check_system(self.strategy, self.sigma)
        else:
            if len(self.sigma) != self.n_runs:
                raise PreconditionError("per-run state list must have one state per run")
            for s in self.sigma:
                _check_system(self.strategy, s)

    @property
    def per_run(self) -> bool:
        return not isinstance(self.sigma, HermitianOperator)


@dataclass(frozen=True, eq=False)
class RunReport:
    accepted: bool
    runs: int
    chosen: np.ndarray  # times each test was drawn
    passed: np.ndarray  # times each test was passed
    pass_rate: float
    fidelity_estimate: tuple[float, float] | None
    infidelities: np.ndarray
    wall_seconds: float
    outcomes: np.ndarray | None = field(default=None, repr=False)  # (test index, passed) per run

    @property
    def mean_infidelity(self) -> float:
        return float(np.mean(self.infidelities))

    def to_json(self, include_runs: bool = False) -> dict:
        out = {
            "accepted": bool(self.accepted),
            "runs": int(self.runs),
            "pass_rate": float(self.pass_rate),
            "tests": [
                {"index": int(i), "chosen": int(c), "passed": int(p)}
                for i, (c, p) in enumerate(zip(self.chosen, self.passed))
            ],
            "mean_infidelity": self.mean_infidelity,
        }
        if include_runs and self.outcomes is not None:
            out["per_test"] = [
                {"index": r, "chosen": int(t), "passed": bool(p)} for r, (t, p) in enumerate(self.outcomes)
            ]
        if self.fidelity_estimate is not None:
            out["fidelity_estimate"] = {"value": self.fidelity_estimate[0], "std": self.fidelity_estimate[1]}
        return out

    def dumps(self, include_runs: bool = False) -> str:
        return json.dumps(self.to_json(include_runs), indent=2)


def _run_block(seed: int, block: int, lo: int, hi: int, probs: np.ndarray, pass_table: np.ndarray) -> np.ndarray:
    m = hi - lo
    choice = substream(seed, block, STAGE_CHOOSE).choice(len(probs), size=m, p=probs)
    u = substream(seed, block, STAGE_PASS).random(m)
    rows = pass_table if pass_table.ndim == 1 else pass_table[lo:hi]
    a = rows[choice] if rows.ndim == 1 else rows[np.arange(m), choice]
    return np.column_stack([choice, u < a])


def run_protocol(config: RunConfig) -> RunReport:
    """Draw a test l ~ p per run, pass it with probability tr(E_l σ_j); accept iff every run passes."""
    start = time.perf_counter()
    strat = config.strategy
    probs = strat.probabilities / strat.probabilities.sum()
    if config.per_run:
        table = np.array([per_test_pass_probabilities(strat, s) for s in config.sigma])
        eps = np.array([infidelity(strat, s) for s in config.sigma])
    else:
        table = per_test_pass_probabilities(strat, config.sigma)
        eps = np.full(config.n_runs, infidelity(strat, config.sigma))
    blocks = [(b, b * BLOCK, min((b + 1) * BLOCK, config.n_runs)) for b in range(math.ceil(config.n_runs / BLOCK))]

    def work(spec):
        b, lo, hi = spec
        return _run_block(config.seed, b, lo, hi, probs, table)

    if config.workers > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=config.workers) as pool:
            parts = list(pool.map(work, blocks))
    else:
        parts = [work(b) for b in blocks]
    outcomes = np.concatenate(parts).astype(int)
    L = len(probs)
    chosen = np.bincount(outcomes[:, 0], minlength=L)
    passed = np.bincount(outcomes[:, 0], weights=outcomes[:, 1], minlength=L).astype(int)
    rate = float(outcomes[:, 1].mean())
    est = None
    rep = spectral_gap(strat)
    if rep.homogeneous and rep.lambda2 < 1:
        est = fidelity_estimate(rate, config.n_runs, rep.lambda2)
    return RunReport(
        accepted=bool(outcomes[:, 1].all()),
        runs=config.n_runs,
        chosen=chosen,
        passed=passed,
        pass_rate=rate,
        fidelity_estimate=est,
        infidelities=eps,
        wall_seconds=time.perf_counter() - start,
        outcomes=outcomes,
    )


def acceptance_trials(pass_prob: float, n_tests: int, repetitions: int, seed: int) -> np.ndarray:
    """Accept flags of repeated N-test protocols whose tests pass independently with probability pass_prob."""
    if n_tests < 1 or repetitions < 1:
        raise PreconditionError("need n_tests >= 1 and repetitions >= 1")
    out = np.empty(repetitions, dtype=bool)
    chunk = max(1, BLOCK // max(1, min(n_tests, BLOCK)))
    for b, lo in enumerate(range(0, repetitions, chunk)):
        hi = min(lo + chunk, repetitions)
        u = substream(seed, b, STAGE_REPEAT).random((hi - lo, n_tests))
        out[lo:hi] = (u < pass_prob).all(axis=1)
    return out


def repeat_protocol(strategy: Strategy, sigma: HermitianOperator, n_tests: int, repetitions: int, seed: int) -> np.ndarray:
    """Accepted flag of each of `repetitions` independent N-test protocols on i.i.d. copies of σ."""
    _check_system(strategy, sigma)
    return acceptance_trials(pass_probability(strategy, sigma), n_tests, repetitions, seed)


def repetitions_csv(accepted: np.ndarray) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["repetition", "accepted"])
    for r, a in enumerate(accepted):
        w.writerow([r, int(bool(a))])
    return buf.getvalue()


# measurement trees

def _dense_state(sigma: HermitianOperator, n: int, d: int) -> np.ndarray:
    if d**n > DENSE_TREE_MAX_DIM:
        raise PreconditionError(f"dense tree simulation limited to dimension {DENSE_TREE_MAX_DIM}")
    rho = sigma.on_basis(full_basis(n, d)).matrix.astype(complex)
    return rho.reshape((d,) * (2 * n))


def _measure(rho: np.ndarray, party: int, proj: np.ndarray, n: int) -> np.ndarray:
    """Π ρ Π with Π acting on one party of the (d,)*2n tensor."""
    out = np.moveaxis(np.tensordot(proj, rho, axes=([1], [party])), 0, party)
    out = np.moveaxis(np.tensordot(out, proj.conj().T, axes=([n + party], [0])), -1, n + party)
    return out


def _trace(rho: np.ndarray, n: int) -> float:
    dim = int(round(math.sqrt(rho.size)))
    return float(np.real(np.trace(rho.reshape(dim, dim))))


def simulate_tree(tree: Tree, sigma: HermitianOperator, rng: np.random.Generator) -> tuple[tuple[tuple[int, int], ...], bool]:
    """Measure parties along the tree with Born-rule outcomes; returns ((party, branch), ...) and the leaf verdict."""
    d, n = sigma.d, sigma.n
    validate_tree(tree, n, d)
    rho = _dense_state(sigma, n, d)
    path = []
    node = tree
    norm = _trace(rho, n)
    while isinstance(node, Node):
        branches = node.branches()
        posts = [_measure(rho, node.party, proj, n) for proj, _ in branches]
        probs = np.array([_trace(p, n) for p in posts]) / norm
        if np.any(probs < NEGATIVE_GUARD):
            raise NumericalError(f"negative outcome probability {probs.min()!r}")
        probs = np.where(probs < PROB_FLOOR, 0.0, probs)
        if probs.sum() <= 0:
            raise NumericalError("all outcome probabilities vanish")
        probs = probs / probs.sum()
        pick = int(rng.choice(len(branches), p=probs))
        path.append((node.party, pick))
        rho = posts[pick]
        norm = _trace(rho, n)
        node = branches[pick][1]
    return tuple(path), bool(node.accept)


def leaf_paths(tree: Tree, prefix: tuple = ()):
    """(path, accept) for every leaf, path = ((party, projector), ...)."""
    if isinstance(tree, Leaf):
        yield prefix, tree.accept
        return
    for proj, child in tree.branches():
        yield from leaf_paths(child, prefix + ((tree.party, proj),))


def path_probabilities(tree: Tree, sigma: HermitianOperator) -> tuple[np.ndarray, np.ndarray]:
    """Born probability of every leaf path on σ and the accept flag of each leaf."""
    d, n = sigma.d, sigma.n
    validate_tree(tree, n, d)
    B = np.array(sigma.basis, dtype=int).reshape(len(sigma.basis), n)
    m = sigma.matrix
    probs, accept = [], []
    for path, acc in leaf_paths(tree):
        measured = {p: proj for p, proj in path}
        factor = np.ones((len(B), len(B)), dtype=complex)
        for party in range(n):
            col = B[:, party]
            if party in measured:
                factor *= measured[party][col[:, None], col[None, :]]
            else:
                factor *= col[:, None] == col[None, :]
        # tr(Π σ) = Σ_{u,v} Π_{vu} σ_{uv}
        val = float(np.real(np.sum(factor.T * m)))
        if val < NEGATIVE_GUARD:
            raise NumericalError(f"negative path probability {val!r}")
        probs.append(max(val, 0.0))
        accept.append(acc)
    probs = np.array(probs)
    total = probs.sum()
    if abs(total - 1) > 1e-8:
        raise NumericalError(f"path probabilities sum to {total!r}")
    return probs / total, np.array(accept, dtype=bool)


def sample_tree_acceptance(tree: Tree, sigma: HermitianOperator, samples: int, seed: int) -> int:
    """Number of accepts in `samples` independent runs of the tree, via multinomial path counts."""
    probs, accept = path_probabilities(tree, sigma)
    counts = substream(seed, 0, STAGE_TREE).multinomial(samples, probs)
    return int(counts[accept].sum())


# GME certification

@dataclass(frozen=True)
class GmeReport:
    n: int
    delta: float
    n_tests: int
    pass_probability: float
    repetitions: int
    certified: int

    @property
    def certify_frequency(self) -> float:
        return self.certified / self.repetitions

    def to_json(self) -> dict:
        return {
            "n": self.n,
            "delta": self.delta,
            "n_tests": self.n_tests,
            "pass_probability": self.pass_probability,
            "repetitions": self.repetitions,
            "certified": self.certified,
            "certify_frequency": self.certify_frequency,
            "decision": "certify" if self.certified == self.repetitions else ("abstain" if self.certified == 0 else "mixed"),
        }


def gme_certification_run(n: int, delta: float, sigma, seed: int, repetitions: int = 1) -> GmeReport:
    """Run N_E tests of the optimal antisymmetric-state strategy; certify iff all pass.

    sigma is a density operator (n ≤ 5, explicit operator) or a dict of block weights tr(P_μ σ).
    """
    n_tests = gme_cert_tests(n, delta)
    if isinstance(sigma, HermitianOperator):
        if n > EXPLICIT_MAX_N:
            raise PreconditionError("density input needs n <= 5; pass block weights instead")
        res = schur_weyl_strategy(n, explicit=True)
        p = pass_probability(res.strategy, sigma)
    else:
        res = schur_weyl_strategy(n)
        weights = {tuple(k): float(v) for k, v in dict(sigma).items()}
        if abs(sum(weights.values()) - 1) > 1e-10 or min(weights.values()) < 0:
            raise PreconditionError("block weights must be a probability vector")
        p = min(max(res.pass_probability(weights), 0.0), 1.0)
    acc = acceptance_trials(p, n_tests, repetitions, seed)
    return GmeReport(n, float(delta), n_tests, p, repetitions, int(acc.sum()))
