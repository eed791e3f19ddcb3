"""Acceptance suite: one test per target property, each printing a single PASS/FAIL line."""

import math
import time

import numpy as np
import pytest

from phasedicke import protocols as pr
from phasedicke import simulate as sim
from phasedicke import symmetry as sy
from phasedicke import wclosed as wc
from phasedicke.basis import PhaseFunction, TypeVector, full_basis, w_state
from phasedicke.graphspec import build_graph, spectrum_extremes
from phasedicke.linalg import DensityOperator
from phasedicke.optimizer import optimize_probabilities, two_test_overlap_q
from phasedicke.schur_weyl import hook_dims, partitions, schur_weyl_strategy
from phasedicke.strategies import (
    Strategy,
    build_as_strategy,
    build_dicke_strategy,
    build_phased_strategy,
    build_w3_strategies,
    build_w_two_test_strategy,
    gme_cert_tests,
    num_tests,
    spectral_gap,
    worst_case_state,
)

from oracles import random_density


@pytest.fixture
def report(capsys):
    """Print one verdict line past pytest's output capture, then assert."""

    def verdict(name, failures):
        line = f"[{'PASS' if not failures else 'FAIL'}] {name}"
        if failures:
            line += " :: " + "; ".join(str(f) for f in failures[:6])
        with capsys.disabled():
            print("\n" + line)
        assert not failures, line

    return verdict


def types_with(n_values, min_parts=2):
    return [TypeVector(mu) for n in n_values for mu in partitions(n) if len(mu) >= min_parts]


def test_dicke_gap_values(report):
    bad = []
    cases = [(TypeVector((1, 1, 1)), d, 0.5) for d in (3, 4)] + [(TypeVector((2, 1)), d, 1 / 3) for d in (2, 3, 4)]
    for k in types_with((4, 5)):
        for d in range(len(k.parts), 5):
            cases.append((k, d, 1 / (k.n - 1)))
    for k, d, want in cases:
        t0 = time.perf_counter()
        nu = spectral_gap(build_dicke_strategy(k, d)).nu
        if abs(nu - want) > 1e-8 or time.perf_counter() - t0 > 10:
            bad.append(f"k={k} d={d}: {nu}")
    report(f"Dicke-state pair-test gap over {len(cases)} (k, d) cases", bad)


def test_phased_dicke_gap_values(report):
    bad = []
    count = 0
    for k in types_with((3, 4, 5)):
        want = 0.5 if k.parts == (1, 1, 1) else 1 / 3 if k.n == 3 else 1 / (k.n - 1)
        d = len(k.parts)
        for seed in range(20):
            nu = spectral_gap(build_phased_strategy(k, d, PhaseFunction.random(1000 + seed))).nu
            count += 1
            if abs(nu - want) > 1e-8:
                bad.append(f"k={k} seed={seed}: {nu}")
    report(f"phased Dicke gap equals the unphased gap ({count} random phase functions)", bad)


def test_antisymmetric_gap_values(report):
    bad = []
    for n in (3, 4, 5):
        for variant in pr.AS_VARIANTS:
            nu = spectral_gap(build_as_strategy(n, variant)).nu
            if abs(nu - 1 / (n - 1)) > 1e-8:
                bad.append(f"n={n} {variant}: {nu}")
    report("antisymmetric-state pair-test gap 1/(n-1) for n=3,4,5, both variants", bad)


def test_optimal_antisymmetric_strategy(report):
    bad = []
    for n in range(3, 9):
        res = schur_weyl_strategy(n)
        if abs(res.lambda2 - 1 / (n + 1)) > 1e-12:
            bad.append(f"n={n}: lambda2={res.lambda2}")
        dims = [hook_dims(mu, n) for mu in partitions(n)]
        if sum(a * b for a, b in dims) != n**n or sum(a * a for a, _ in dims) != math.factorial(n):
            bad.append(f"n={n}: dimension identity")
    res = schur_weyl_strategy(3, explicit=True)
    w = np.linalg.eigvalsh(res.operator.matrix)
    distinct = sorted({round(x, 9) for x in w})
    if not np.allclose(distinct, [0.1, 0.25, 1.0], atol=1e-8):
        bad.append(f"explicit n=3 spectrum {distinct}")
    nu = spectral_gap(res.strategy).nu
    if abs(nu - 0.75) > 1e-8:
        bad.append(f"explicit n=3 nu={nu}")
    report("optimal antisymmetric strategy: second eigenvalue 1/(n+1), explicit n=3 operator, dimension sums", bad)


def test_w_two_test_overlap(report):
    bad = []
    q3 = two_test_overlap_q(pr.w_standard_test(3)[0], pr.w_adaptive_test(3)[0], w_state(3))
    if abs(q3 - 0.4) > 1e-9 or abs(wc.q_closed_form(3) - 0.4) > 1e-15:
        bad.append(f"q(3)={q3}")
    for n in range(4, 10):
        q = two_test_overlap_q(pr.w_standard_test(n)[0], pr.w_adaptive_test(n)[0], w_state(n))
        if abs(q - (1 - wc.h(n - 3))) > 1e-9:
            bad.append(f"n={n}: {q} vs {1 - wc.h(n - 3)}")
    nu = spectral_gap(build_w_two_test_strategy(3, 0.5)).nu
    if abs(nu - (0.5 - 1 / math.sqrt(10))) > 1e-10:
        bad.append(f"nu(W3)={nu}")
    report("W two-test overlap q = 1 - h(n-3) and W3 gap 1/2 - 1/sqrt(10)", bad)


def two_projector_instances():
    out = []
    for n in range(3, 7):
        out.append((f"W n={n}", pr.w_standard_test(n)[0], pr.w_adaptive_test(n)[0], w_state(n)))
    for k in (TypeVector((2, 1)), TypeVector((3, 1)), TypeVector((2, 1, 1)), TypeVector((3, 2)), TypeVector((4, 2))):
        d = len(k.parts)
        a, b = pr.dicke_test(k, d, 0, 1)[0], pr.dicke_test(k, d, 1, 2)[0]
        out.append((f"Dicke k={k} pairs (0,1),(1,2)", a, b, a.target))
    for n in (3, 4):
        a, b = pr.as_test(n, 0, 1)[0], pr.as_test(n, 0, 2, "circular")[0]
        out.append((f"AS n={n} mixed variants", a, b, a.target))
    return out


def test_two_projector_optimum(report):
    bad = []
    cases = two_projector_instances()
    for name, a, b, psi in cases:
        q = two_test_overlap_q(a, b, psi)
        res = optimize_probabilities([a, b], psi, tol=1e-10)
        if np.max(np.abs(res.probabilities - 0.5)) > 1e-6 or abs(res.f_star - (1 + math.sqrt(q)) / 2) > 1e-6:
            bad.append(f"{name}: p={res.probabilities}, f={res.f_star}, q={q}")
    report(f"two-projector optimum p=1/2 with value (1+sqrt q)/2 on {len(cases)} instances", bad)


def test_w3_three_test_optimizer(report):
    t0 = time.perf_counter()
    res = optimize_probabilities([t for t, _ in pr.w3_tests()], w_state(3))
    wall = time.perf_counter() - t0
    bad = []
    if abs(res.f_star - 0.695) > 0.001:
        bad.append(f"f_star={res.f_star}")
    if abs(res.probabilities[0] - 0.246) > 0.002 or abs(res.probabilities[1] - 0.444) > 0.002:
        bad.append(f"p={res.probabilities}")
    if res.iterations >= 500 or wall >= 10:
        bad.append(f"iterations={res.iterations}, seconds={wall:.2f}")
    report("W3 three-test cutting-plane optimum", bad)


def test_w3_symmetrization(report):
    bad = []
    mus = [sy.w3_mu_vector(op) for op in sy.w3_symmetrized_tests()]
    expected = [np.array([0, 0, 1, 0, 0]), np.array([6, 9, 3, 8, 8]) / 15, np.array([3, 0, 3, 1, 1]) / 6]
    for i, (got, want) in enumerate(zip(mus, expected)):
        if np.max(np.abs(got - want)) > 1e-10:
            bad.append(f"mu{i + 1}={got}")
    S = sy.build_w3_symmetrized_strategy()
    if np.max(np.abs(S.probabilities - [1 / 8, 5 / 8, 1 / 4])) > 1e-6:
        bad.append(f"p={S.probabilities}")
    rep = spectral_gap(S)
    if abs(rep.nu - 5 / 8) > 1e-8:
        bad.append(f"nu={rep.nu}")
    fixed = spectral_gap(sy.build_w3_symmetrized_strategy(1 / 8, 5 / 8))
    if not fixed.homogeneous or abs(fixed.lambda2 - 3 / 8) > 1e-10:
        bad.append(f"homogeneous={fixed.homogeneous}, lambda2={fixed.lambda2}")
    report("W3 group-averaged tests: mu-vectors, optimum (1/8, 5/8, 1/4), homogeneous with lambda2 3/8", bad)


def test_symmetrized_w_closed_forms(report):
    bad = []
    for n in range(3, 10):
        p1, p2 = sy.w_symmetrized_tests(n)
        basis = sorted(set(p1.basis) | set(p2.basis))
        tr = float(np.real(np.trace(p1.on_basis(basis).matrix @ p2.on_basis(basis).matrix)))
        if abs(tr - wc.trace_p1p2_closed_form(n)) > 1e-9:
            bad.append(f"trace n={n}: {tr}")
    for n in range(3, 9):
        p_cf, lam_cf, nu_cf = wc.symmetrized_w_closed_form(n)
        S = sy.build_w_symmetrized_strategy(n)  # probabilities from the cutting-plane optimizer
        rep = spectral_gap(S)
        if abs(rep.nu - nu_cf) > 1e-8 or abs(S.probabilities[0] - p_cf) > 1e-8:
            bad.append(f"n={n}: optimized p={S.probabilities[0]:.6f} nu={rep.nu:.6f}, closed form p={p_cf:.6f} nu={nu_cf:.6f}")
    report("symmetrized W: trace of P1 P2 and closed-form optimum versus optimized averaged operator", bad)


def test_diagonal_average_dicke(report):
    bad = []
    for k in types_with((3, 4, 5)):
        d = len(k.parts)
        nu = spectral_gap(sy.build_dicke_symmetrized_strategy(k, d)).nu
        if abs(nu - 1 / (k.n - 1)) > 1e-8:
            bad.append(f"k={k}: {nu}")
    plain = spectral_gap(build_dicke_strategy(TypeVector((2, 1)), 2)).nu
    if not abs(plain - 1 / 3) < 1e-8:
        bad.append(f"plain k=2,1: {plain}")
    report("diagonally averaged Dicke strategy gap 1/(n-1) for n=3,4,5 (n=3 improves on 1/3)", bad)


def test_w_gap_asymptotics(report):
    bad = []
    mono = wc.monotonicity_violations(5000)
    if mono:
        bad.append(f"sqrt(n) h(n) not increasing at n={mono[:5]}")
    rep = wc.bounds_and_limits_report(5000, n_limit_from=2000)
    for par in ("odd", "even"):
        if rep.h_limit_rel_error[par] > 0.01:
            bad.append(f"{par}: sqrt(n) h(n) deviates {rep.h_limit_rel_error[par]:.4f} from rounded limit (bound 0.01)")
        if rep.nu_limit_rel_error[par] > 0.02:
            bad.append(f"{par}: sqrt(n) nu deviates {rep.nu_limit_rel_error[par]:.4f} (bound 0.02)")
    report("sqrt(n) h(n) monotone within parity to 5000; limits of sqrt(n) h and sqrt(n) nu at n=2000..5000", bad)


def test_w_gap_bounds(report):
    bad = wc.gap_bound_violations(200)
    report("W two-test gap between 1/(4 sqrt n) and 3/(8 sqrt n) for n<=200 (1/(2 sqrt n) at n=5)", [f"n={n}" for n in bad])


def test_transposition_graph_spectra(report):
    bad = []
    cases = types_with(range(2, 7))
    for k in cases:
        try:
            spectrum_extremes(k, check=True)
        except Exception as exc:  # the check raises on any violated extreme
            bad.append(f"k={k}: {exc}")
    ev = np.sort(build_graph(TypeVector((1, 1, 1))).eigenvalues())
    if not np.array_equal(np.round(ev, 12) + 0.0, [-3, 0, 0, 0, 0, 3]):
        bad.append(f"k=1,1,1 spectrum {ev}")
    report(f"transposition graph spectral extremes for {len(cases)} types with n<=6", bad)


def built_strategies():
    out = []
    for k in types_with((3, 4)):
        d = len(k.parts)
        out.append((f"dicke {k}", build_dicke_strategy(k, d)))
        out.append((f"phased {k}", build_phased_strategy(k, d, PhaseFunction.random(3))))
        out.append((f"dicke-sym {k}", sy.build_dicke_symmetrized_strategy(k, d)))
    for n in (3, 4):
        for v in pr.AS_VARIANTS:
            out.append((f"as {n} {v}", build_as_strategy(n, v)))
        out.append((f"as-optimal {n}", schur_weyl_strategy(n, explicit=True).strategy))
        out.append((f"w {n}", build_w_two_test_strategy(n)))
        out.append((f"w-sym {n}", sy.build_w_symmetrized_strategy(n, wc.symmetrized_w_closed_form(n)[0])))
    res = optimize_probabilities([t for t, _ in pr.w3_tests()], w_state(3))
    out.append(("w3", build_w3_strategies(*res.probabilities[:2])))
    out.append(("w3-sym", sy.build_w3_symmetrized_strategy()))
    return out


def tree_cases():
    out = []
    for k in types_with((3, 4)):
        d = len(k.parts)
        out.append((f"dicke {k}", pr.dicke_test(k, d, 0, 1)))
        out.append((f"phased {k}", pr.phased_dicke_test(k, d, PhaseFunction.random(3), 1, 2)))
    for n in (3, 4):
        for v in pr.AS_VARIANTS:
            out.append((f"as {n} {v}", pr.as_test(n, 0, 2, v)))
        out.append((f"w-standard {n}", pr.w_standard_test(n)))
        out.append((f"w-adaptive {n}", pr.w_adaptive_test(n)))
    out.append(("w3-test3", pr.w3_test3()))
    return out


def test_simulation(report):
    t0 = time.perf_counter()
    bad = []
    eps, delta, reps = 0.1, 0.05, 10_000
    envelope = delta + 3 * math.sqrt(delta * (1 - delta) / reps)
    strategies = built_strategies()
    for idx, (name, S) in enumerate(strategies):
        psi = S.target
        support = psi.support()
        v = psi.vector(support)
        target = DensityOperator(support, np.outer(v, v.conj()), psi.d)
        runs = sim.run_protocol(sim.RunConfig(S, target, 10_000, seed=100 + idx))
        if runs.pass_rate != 1.0:
            bad.append(f"{name}: target pass rate {runs.pass_rate}")
        nu = spectral_gap(S).nu
        n_tests = num_tests(eps, delta, nu)
        acc = sim.repeat_protocol(S, worst_case_state(S, eps), n_tests, reps, seed=200 + idx)
        if acc.mean() > envelope:
            bad.append(f"{name}: worst-case acceptance {acc.mean():.4f} > {envelope:.4f}")
    samples = 100_000
    trees = tree_cases()
    for idx, (name, (test, tree)) in enumerate(trees):
        n, d = test.target.n, test.target.d
        basis = full_basis(n, d)
        rho = random_density(len(basis), np.random.default_rng(300 + idx), rank=2)
        sigma = DensityOperator(basis, rho, d)
        tree_rate = sim.sample_tree_acceptance(tree, sigma, samples, seed=400 + idx) / samples
        single = Strategy(test.target, ((1.0, test.op),))
        op_rate = sim.run_protocol(sim.RunConfig(single, sigma, samples, seed=500 + idx)).pass_rate
        p = 0.5 * (tree_rate + op_rate)
        sd = math.sqrt(max(2 * p * (1 - p) / samples, 1e-300))
        if abs(tree_rate - op_rate) > 4 * sd:
            bad.append(f"{name}: tree {tree_rate:.5f} vs operator {op_rate:.5f}")
    wall = time.perf_counter() - t0
    report(
        f"simulation: targets always pass, worst cases within delta+3 sigma ({len(strategies)} strategies), "
        f"tree vs operator rates within 4 sigma ({len(trees)} trees), {wall:.0f}s",
        bad,
    )


def test_gme_test_counts(report):
    bad = []
    if gme_cert_tests(39, 0.05) != 1:
        bad.append(f"N_E(39)={gme_cert_tests(39, 0.05)}")
    counts = [gme_cert_tests(n, 0.05) for n in range(2, 201)]
    drops = [n for n, (a, b) in enumerate(zip(counts, counts[1:]), start=3) if b > a]
    if drops:
        bad.append(f"increase at n={drops[:5]}")
    report("GME certification: one test at n=39, counts nonincreasing for n=2..200", bad)
