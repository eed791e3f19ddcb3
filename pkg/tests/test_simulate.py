import json
import math

import numpy as np
import pytest

from phasedicke import protocols as pr
from phasedicke import simulate as sim
from phasedicke.basis import TypeVector, antisymmetric_state, full_basis, w_state
from phasedicke.errors import PreconditionError
from phasedicke.linalg import DensityOperator
from phasedicke.schur_weyl import young_projector
from phasedicke.strategies import build_dicke_strategy, num_tests, spectral_gap, worst_case_state
from phasedicke.symmetry import build_w3_symmetrized_strategy

from oracles import random_density


def binomial_sigma(p, m):
    return math.sqrt(p * (1 - p) / m)


def target_density(psi):
    return DensityOperator(psi.support(), np.outer(psi.vector(psi.support()), psi.vector(psi.support()).conj()), psi.d)


def test_target_always_accepted():
    S = build_dicke_strategy(TypeVector((2, 1)), 2)
    rep = sim.run_protocol(sim.RunConfig(S, target_density(S.target), 10_000, seed=1))
    assert rep.accepted and rep.pass_rate == 1
    assert rep.chosen.sum() == 10_000
    assert rep.mean_infidelity == pytest.approx(0)


def test_worst_case_pass_rate():
    S = build_dicke_strategy(TypeVector((2, 1)), 2)
    sigma = worst_case_state(S, 0.3)
    assert sim.pass_probability(S, sigma) == pytest.approx(0.9)
    m = 20_000
    rep = sim.run_protocol(sim.RunConfig(S, sigma, m, seed=3))
    assert abs(rep.pass_rate - 0.9) <= 4 * binomial_sigma(0.9, m)
    assert rep.infidelities[0] == pytest.approx(0.3)


def test_per_test_counts_follow_probabilities():
    S = build_dicke_strategy(TypeVector((2, 1)), 2)
    rep = sim.run_protocol(sim.RunConfig(S, worst_case_state(S, 0.5), 30_000, seed=9))
    for c in rep.chosen:
        assert abs(c / 30_000 - 1 / 3) <= 4 * binomial_sigma(1 / 3, 30_000)


def test_deterministic_and_worker_independent():
    S = build_w3_symmetrized_strategy(1 / 8, 5 / 8)
    sigma = worst_case_state(S, 0.2)
    a = sim.run_protocol(sim.RunConfig(S, sigma, 10_000, seed=42, workers=1))
    b = sim.run_protocol(sim.RunConfig(S, sigma, 10_000, seed=42, workers=3))
    c = sim.run_protocol(sim.RunConfig(S, sigma, 10_000, seed=43))
    assert np.array_equal(a.outcomes, b.outcomes)
    assert not np.array_equal(a.outcomes, c.outcomes)


def test_fidelity_estimate_for_homogeneous_strategy():
    S = build_w3_symmetrized_strategy(1 / 8, 5 / 8)
    rep = sim.run_protocol(sim.RunConfig(S, worst_case_state(S, 0.16), 40_000, seed=5))
    f, df = rep.fidelity_estimate
    assert abs(f - 0.84) <= 4 * df
    obj = json.loads(rep.dumps(include_runs=True))
    assert len(obj["per_test"]) == 40_000
    assert set(obj) >= {"accepted", "runs", "pass_rate", "tests", "mean_infidelity", "fidelity_estimate"}


def test_per_run_states():
    S = build_dicke_strategy(TypeVector((2, 1)), 2)
    states = [target_density(S.target), worst_case_state(S, 1.0)] * 50
    rep = sim.run_protocol(sim.RunConfig(S, states, 100, seed=0))
    assert rep.infidelities[:2] == pytest.approx([0, 1])
    with pytest.raises(PreconditionError):
        sim.RunConfig(S, states, 99, seed=0)


def test_repetition_envelope():
    S = build_w3_symmetrized_strategy(1 / 8, 5 / 8)
    eps, delta = 0.05, 0.01
    n = num_tests(eps, delta, spectral_gap(S).nu)
    acc = sim.repeat_protocol(S, worst_case_state(S, eps), n, 1000, seed=7)
    assert acc.mean() <= delta + 3 * binomial_sigma(delta, 1000)
    assert sim.repetitions_csv(acc[:2]).splitlines()[0] == "repetition,accepted"


def test_acceptance_trials_rate():
    acc = sim.acceptance_trials(0.8, 3, 50_000, seed=2)
    assert abs(acc.mean() - 0.512) <= 4 * binomial_sigma(0.512, 50_000)


def test_tree_target_never_rejected():
    test, tree = pr.dicke_test(TypeVector((2, 1)), 2, 0, 1)
    sigma = target_density(test.target)
    rng = sim.substream(0, 0, sim.STAGE_TREE)
    assert all(sim.simulate_tree(tree, sigma, rng)[1] for _ in range(300))
    assert sim.sample_tree_acceptance(tree, sigma, 10_000, seed=1) == 10_000


def test_tree_orthogonal_state_rejected():
    _, tree = pr.w_standard_test(4)
    zero = DensityOperator([(0, 0, 0, 0)], np.ones((1, 1)), 2)
    rng = sim.substream(0, 0, sim.STAGE_TREE)
    assert not any(sim.simulate_tree(tree, zero, rng)[1] for _ in range(50))


@pytest.mark.parametrize("make", [
    lambda: pr.dicke_test(TypeVector((2, 1, 1)), 3, 0, 3),
    lambda: pr.as_test(3, 0, 2, "circular"),
    lambda: pr.w_adaptive_test(4),
    pr.w3_test3,
])
def test_path_probabilities_match_operator(make):
    test, tree = make()
    n, d = test.target.n, test.target.d
    basis = full_basis(n, d)
    rho = random_density(len(basis), np.random.default_rng(4))
    sigma = DensityOperator(basis, rho, d)
    probs, accept = sim.path_probabilities(tree, sigma)
    expected = float(np.real(np.trace(test.op.on_basis(basis).matrix @ rho)))
    assert probs[accept].sum() == pytest.approx(expected, abs=1e-10)


def test_sequential_simulation_matches_born_rule():
    test, tree = pr.w3_test3()
    basis = full_basis(3, 2)
    rho = random_density(8, np.random.default_rng(8))
    sigma = DensityOperator(basis, rho, 2)
    p = float(np.real(np.trace(test.op.on_basis(basis).matrix @ rho)))
    rng = sim.substream(5, 0, sim.STAGE_TREE)
    m = 4000
    hits = sum(sim.simulate_tree(tree, sigma, rng)[1] for _ in range(m))
    assert abs(hits / m - p) <= 4 * binomial_sigma(p, m)


def test_gme_runs():
    rep = sim.gme_certification_run(3, 0.05, target_density(antisymmetric_state(3)), seed=1, repetitions=100)
    assert rep.n_tests == 5 and rep.certify_frequency == 1
    assert rep.to_json()["decision"] == "certify"
    assert sim.gme_certification_run(39, 0.05, {(1,) * 39: 1.0}, seed=1).n_tests == 1


def test_gme_low_fidelity_state():
    # fidelity 1/3 with the rest in the (2,1) block saturates the pass bound 2/(n+1)
    n = 3
    psi = antisymmetric_state(n)
    basis = full_basis(n, n)
    v = psi.vector(basis)
    p21 = young_projector((2, 1)).matrix
    rho = np.outer(v, v.conj()) / 3 + (2 / 3) * p21 / np.trace(p21).real
    rep = sim.gme_certification_run(n, 0.05, DensityOperator(basis, rho, n), seed=3, repetitions=10_000)
    assert rep.pass_probability == pytest.approx(2 / (n + 1))
    assert rep.certify_frequency <= 0.05 + 3 * binomial_sigma(0.05, 10_000)


def test_gme_weights_validated():
    with pytest.raises(PreconditionError):
        sim.gme_certification_run(6, 0.05, {(1,) * 6: 0.5}, seed=0)


def test_dimension_mismatch_rejected():
    S = build_dicke_strategy(TypeVector((2, 1)), 2)
    other = target_density(w_state(4))
    with pytest.raises(PreconditionError):
        sim.RunConfig(S, other, 10, seed=0)
