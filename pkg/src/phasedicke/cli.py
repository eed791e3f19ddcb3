"""Command-line front end: gap, ntests, optimize, symmetrize, simulate, sweep, graph, state."""

from __future__ import annotations

import argparse
import json
import re
import sys
from pathlib import Path

import numpy as np

from . import protocols as pr
from . import strategies as st
from . import symmetry as sym
from . import wclosed
from .basis import PhaseFunction, TypeVector, antisymmetric_state, dicke_state, phased_dicke_state, seq_to_text, w_state
from .errors import NumericalError, PreconditionError
from .graphspec import build_graph, spectrum_extremes
from .linalg import DensityOperator
from .optimizer import optimize_probabilities
from .schur_weyl import schur_weyl_strategy
from . import simulate as sim

EXIT_USAGE, EXIT_PRECONDITION, EXIT_NUMERICAL = 2, 3, 4


def fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _emit(text: str, out: str | None) -> None:
    if out:
        Path(out).write_text(text if text.endswith("\n") else text + "\n")
    else:
        print(text.rstrip("\n"))


def _dump(obj) -> str:
    def conv(x):
        if isinstance(x, float):
            return float(fmt(x))
        if isinstance(x, dict):
            return {k: conv(v) for k, v in x.items()}
        if isinstance(x, (list, tuple)):
            return [conv(v) for v in x]
        return x

    return json.dumps(conv(obj), indent=2)


# strategy selection flags shared by several subcommands

def add_strategy_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("strategy")
    g.add_argument("--dicke", metavar="K", help="Dicke target with type vector K, e.g. 2,1")
    g.add_argument("--phased", metavar="K", help="phased Dicke target with type vector K")
    g.add_argument("--phases", default="zero", help="phase function: zero, antisymmetric-sign, random(SEED), or a JSON file")
    g.add_argument("--d", type=int, help="local dimension (default: number of parts of K)")
    g.add_argument("--w", type=int, metavar="N", help="n-qubit W state, two-test strategy")
    g.add_argument("--w3", action="store_true", help="three-qubit W state, three-test strategy")
    g.add_argument("--as", dest="as_n", type=int, metavar="N", help="antisymmetric basis state of N qudits")
    g.add_argument("--optimal", action="store_true", help="with --as: the optimal (Schur-Weyl) strategy")
    g.add_argument("--variant", choices=pr.AS_VARIANTS, default="plus-minus", help="with --as: test variant")
    g.add_argument("--symmetrized", action="store_true", help="with --dicke, --w or --w3: the group-averaged strategy")
    g.add_argument("--p", type=float, nargs="+", help="test probabilities (W strategies)")
    g.add_argument("--optimal-p", action="store_true", help="with --w --symmetrized: optimize p instead of the closed-form p")
    g.add_argument("--spec", metavar="JSON", help="strategy spec as JSON text or a path to a JSON file")


def _phase_function(text: str) -> PhaseFunction:
    path = Path(text)
    if path.suffix == ".json" and path.exists():
        obj = json.loads(path.read_text())
        table = {tuple(int(c) for c in u): float(v) for u, v in obj.items()}
        return PhaseFunction("explicit", table=table)
    return PhaseFunction.parse(text)


def _load_spec(text: str):
    path = Path(text)
    if path.exists():
        text = path.read_text()
    return json.loads(text)


def _chosen(args) -> list[str]:
    return [name for name, val in (
        ("dicke", args.dicke), ("phased", args.phased), ("w", args.w), ("w3", args.w3 or None),
        ("as", args.as_n), ("spec", args.spec),
    ) if val is not None]


def validate_strategy_flags(parser: argparse.ArgumentParser, args, required: bool = True) -> None:
    chosen = _chosen(args)
    if required and not chosen:
        parser.error("choose a strategy: --dicke, --phased, --w, --w3, --as or --spec")
    if len(chosen) > 1:
        parser.error(f"conflicting strategy flags: {', '.join('--' + c for c in chosen)}")
    if args.optimal and args.as_n is None:
        parser.error("--optimal applies to --as only")
    if args.symmetrized and not (args.dicke or args.w or args.w3):
        parser.error("--symmetrized applies to --dicke, --w and --w3")
    if args.optimal_p and not (args.w and args.symmetrized):
        parser.error("--optimal-p applies to --w N --symmetrized")
    for name in ("dicke", "phased"):
        val = getattr(args, name)
        if val is not None:
            try:
                TypeVector.parse(val)
            except (ValueError, PreconditionError) as exc:
                parser.error(f"--{name}: {exc}")
    if args.p is not None and any(not 0 <= x <= 1 for x in args.p):
        parser.error("--p entries must lie in [0, 1]")
    if args.spec is not None:
        try:
            _load_spec(args.spec)
        except json.JSONDecodeError as exc:
            parser.error(f"--spec: {exc.msg} at line {exc.lineno} column {exc.colno} (char {exc.pos})")


def _k_and_d(k_text: str, d: int | None) -> tuple[TypeVector, int]:
    k = TypeVector.parse(k_text)
    return k, (d if d is not None else len(k.parts))


def build_strategy(args) -> st.Strategy:
    if args.spec is not None:
        return st.strategy_from_spec(_load_spec(args.spec))
    if args.dicke:
        k, d = _k_and_d(args.dicke, args.d)
        return sym.build_dicke_symmetrized_strategy(k, d) if args.symmetrized else st.build_dicke_strategy(k, d)
    if args.phased:
        k, d = _k_and_d(args.phased, args.d)
        return st.build_phased_strategy(k, d, _phase_function(args.phases))
    if args.w:
        if args.symmetrized:
            if args.optimal_p:
                return sym.build_w_symmetrized_strategy(args.w, None)
            p = args.p[0] if args.p else wclosed.symmetrized_w_closed_form(args.w)[0]
            return sym.build_w_symmetrized_strategy(args.w, p)
        return st.build_w_two_test_strategy(args.w, args.p[0] if args.p else 0.5)
    if args.w3:
        p1, p2 = (args.p[0], args.p[1]) if args.p and len(args.p) >= 2 else (None, None)
        if args.symmetrized:
            return sym.build_w3_symmetrized_strategy(p1, p2)
        if p1 is None:
            res = optimize_probabilities([t for t, _ in pr.w3_tests()], w_state(3))
            p1, p2 = res.probabilities[0], res.probabilities[1]
        return st.build_w3_strategies(p1, p2)
    if args.as_n:
        if args.optimal:
            return schur_weyl_strategy(args.as_n, explicit=True).strategy
        return st.build_as_strategy(args.as_n, args.variant)
    raise PreconditionError("no strategy selected")


# subcommands

def cmd_gap(args) -> int:
    if args.as_n and args.optimal:
        res = schur_weyl_strategy(args.as_n)
        print(f"nu = {fmt(res.nu)}")
        print(f"lambda2 = {fmt(res.lambda2)}")
        print(f"homogeneous = {str(len(set(res.ratios.values())) == 2).lower()}")
        print(f"second_block = {','.join(map(str, res.second_partition))}")
        return 0
    rep = st.spectral_gap(build_strategy(args))
    print(f"nu = {fmt(rep.nu)}")
    print(f"lambda2 = {fmt(rep.lambda2)}")
    print(f"homogeneous = {str(rep.homogeneous).lower()}")
    return 0


def cmd_ntests(args) -> int:
    if args.gme:
        if not args.as_n:
            raise PreconditionError("--gme needs --as N")
        print(f"N_E = {st.gme_cert_tests(args.as_n, args.delta)}")
        return 0
    if args.nu is not None:
        nu = args.nu
    elif args.as_n and args.optimal:
        nu = schur_weyl_strategy(args.as_n).nu
    else:
        nu = st.spectral_gap(build_strategy(args)).nu
    if nu * args.epsilon >= 1:
        raise PreconditionError("need nu * epsilon < 1")
    print(f"N = {st.num_tests(args.epsilon, args.delta, nu)}")
    print(f"asymptotic = {fmt(st.num_tests_asymptotic(args.epsilon, args.delta, nu))}")
    return 0


def _tests_for_optimization(args):
    if args.w3:
        if args.symmetrized:
            return sym.w3_symmetrized_tests(), w_state(3)
        return [t for t, _ in pr.w3_tests()], w_state(3)
    if args.w:
        if args.symmetrized:
            return sym.w_symmetrized_tests(args.w), w_state(args.w)
        return [pr.w_standard_test(args.w)[0], pr.w_adaptive_test(args.w)[0]], w_state(args.w)
    if args.spec:
        s = st.strategy_from_spec(_load_spec(args.spec))
        return list(s.operators), s.target
    if args.dicke:
        k, d = _k_and_d(args.dicke, args.d)
        return st.dicke_tests(k, d), dicke_state(k, d)
    if args.as_n:
        return st.as_tests(args.as_n, args.variant), antisymmetric_state(args.as_n)
    raise PreconditionError("optimize supports --w3, --w, --dicke, --as and --spec")


def cmd_optimize(args) -> int:
    tests, target = _tests_for_optimization(args)
    res = optimize_probabilities(tests, target, tol=args.tol, max_iter=args.max_iter)
    out = res.to_json()
    out["nu"] = res.nu
    _emit(_dump(out), args.out)
    return 0


def cmd_symmetrize(args) -> int:
    if args.w3:
        group = sym.w3_subgroup_K()
        ops = sym.w3_symmetrized_tests()
        target = w_state(3)
        extra = {"mu_vectors": [sym.w3_mu_vector(op).tolist() for op in ops]}
    elif args.w:
        group = sym.w_symmetrization_subgroup(args.w)
        ops = sym.w_symmetrized_tests(args.w)
        target = w_state(args.w)
        extra = {}
    elif args.dicke:
        k, d = _k_and_d(args.dicke, args.d)
        s = sym.build_dicke_symmetrized_strategy(k, d)
        group, ops, target, extra = None, list(s.operators), s.target, {}
    else:
        raise PreconditionError("symmetrize supports --w3, --w and --dicke")
    if args.dicke:
        probs = list(st.build_dicke_strategy(*_k_and_d(args.dicke, args.d)).probabilities)
    elif args.p:
        probs = list(args.p) + [1 - sum(args.p)] if len(args.p) < len(ops) else list(args.p)
    else:
        probs = list(optimize_probabilities(ops, target).probabilities)
    strategy = st.Strategy(target, tuple(zip(probs, ops)), "symmetrized")
    rep = st.spectral_gap(strategy)
    out = {
        "group_order": len(group) if group is not None else "diagonal",
        "p": [float(x) for x in probs],
        "nu": rep.nu,
        "lambda2": rep.lambda2,
        "homogeneous": rep.homogeneous,
        **extra,
    }
    if args.operators_out:
        Path(args.operators_out).write_text(json.dumps([op.to_json() for op in ops]))
    _emit(_dump(out), args.out)
    return 0


def _sigma(args, strategy: st.Strategy) -> DensityOperator:
    if args.state == "target":
        return DensityOperator.from_state(strategy.target)
    if args.state == "worst":
        return st.worst_case_state(strategy, args.epsilon)
    if args.state == "mixed":
        from .basis import full_basis

        return DensityOperator.maximally_mixed(full_basis(strategy.n, strategy.d), strategy.d)
    obj = _load_spec(args.state)
    from .linalg import HermitianOperator

    return DensityOperator.of(HermitianOperator.from_json(obj))


def cmd_simulate(args) -> int:
    if args.gme:
        weights = None
        n = args.gme
        if args.state == "target":
            weights = {(1,) * n: 1.0}
        elif args.state == "worst":
            weights = {(1,) * n: 1 - args.epsilon, (2,) + (1,) * (n - 2): args.epsilon}
        else:
            raise PreconditionError("--gme supports --state target or worst")
        rep = sim.gme_certification_run(n, args.delta, weights, args.seed, args.repetitions or 1)
        _emit(_dump(rep.to_json()), args.out)
        return 0
    strategy = build_strategy(args)
    sigma = _sigma(args, strategy)
    gap = st.spectral_gap(strategy)
    n_tests = args.runs or st.num_tests(args.epsilon, args.delta, gap.nu)
    if args.repetitions:
        acc = sim.repeat_protocol(strategy, sigma, n_tests, args.repetitions, args.seed)
        if args.csv:
            Path(args.csv).write_text(sim.repetitions_csv(acc))
        rate = float(acc.mean())
        out = {
            "n_tests": n_tests,
            "repetitions": args.repetitions,
            "accepted": int(acc.sum()),
            "acceptance_rate": rate,
            "pass_probability": sim.pass_probability(strategy, sigma),
            "envelope": (1 - gap.nu * args.epsilon) ** n_tests,
        }
        _emit(_dump(out), args.out)
        return 0
    rep = sim.run_protocol(sim.RunConfig(strategy, sigma, n_tests, args.seed, workers=args.threads))
    _emit(_dump(rep.to_json(include_runs=args.per_run)), args.out)
    return 0


def _parse_range(text: str) -> range:
    if ".." in text:
        lo, hi = text.split("..")
    elif "-" in text:
        lo, hi = text.split("-")
    else:
        lo = hi = text
    return range(int(lo), int(hi) + 1)


_PATTERN_TOKEN = re.compile(r"^(?:(n)([+-]\d+)?|(\d+))$")


def _pattern_k(pattern: str, n: int) -> TypeVector:
    """Type vector from a pattern such as "n-1,1" or "n-2,1,1"."""
    parts = []
    for tok in pattern.replace(" ", "").split(","):
        m = _PATTERN_TOKEN.match(tok)
        if not m:
            raise PreconditionError(f"bad k-pattern token {tok!r}")
        parts.append(int(m.group(3)) if m.group(3) else n + int(m.group(2) or 0))
    return TypeVector(tuple(parts))


def sweep_value(family: str, n: int, pattern: str = "n-1,1", method: str = "default") -> float:
    if family == "dicke":
        k = _pattern_k(pattern, n)
        return st.spectral_gap(st.build_dicke_strategy(k, len(k.parts))).nu
    if family == "w":
        if method == "numeric":
            return st.spectral_gap(st.build_w_two_test_strategy(n)).nu
        return wclosed.nu_w_closed_form(n)
    if family == "w-sym":
        if method == "numeric":
            p = wclosed.symmetrized_w_closed_form(n)[0]
            return st.spectral_gap(sym.build_w_symmetrized_strategy(n, p)).nu
        return wclosed.symmetrized_w_closed_form(n)[2]
    if family == "as":
        return st.spectral_gap(st.build_as_strategy(n)).nu
    if family == "as-optimal":
        return schur_weyl_strategy(n).nu
    raise PreconditionError(f"unknown family {family!r}")


def cmd_sweep(args) -> int:
    lines = ["n,nu"]
    for n in _parse_range(args.n_range):
        lines.append(f"{n},{fmt(sweep_value(args.family, n, args.k_pattern, args.method))}")
    _emit("\n".join(lines) + "\n", args.out)
    return 0


def cmd_graph(args) -> int:
    k = TypeVector.parse(args.k)
    lam_max, mult, lam2, lam_min, lam_min2 = spectrum_extremes(k, check=not args.no_check)
    g = build_graph(k)
    print(f"vertices = {len(g.vertices)}")
    print(f"degree = {g.degree}")
    print(f"lambda_max = {fmt(lam_max + 0.0)} (multiplicity {mult})")
    print(f"lambda_second = {fmt(_clean(lam2))}")
    print(f"lambda_min = {fmt(_clean(lam_min))}")
    print(f"lambda_second_min = {fmt(_clean(lam_min2))}")
    if args.edges:
        Path(args.edges).write_text(g.edge_list_text())
    return 0


def _clean(x: float) -> float:
    """Round eigensolver noise to the nearest integer (adjacency spectra here are integral)."""
    r = round(x)
    return float(r) if abs(x - r) < 1e-8 else x


def cmd_state(args) -> int:
    if args.dicke:
        k, d = _k_and_d(args.dicke, args.d)
        psi = dicke_state(k, d)
    elif args.phased:
        k, d = _k_and_d(args.phased, args.d)
        psi = phased_dicke_state(k, _phase_function(args.phases), d)
    elif args.w:
        psi = w_state(args.w)
    elif args.as_n:
        psi = antisymmetric_state(args.as_n)
    else:
        raise PreconditionError("state supports --dicke, --phased, --w and --as")
    for u, a in psi.amplitudes.items():
        print(f"{seq_to_text(u, psi.d)} {fmt(a.real)} {fmt(a.imag)}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="phasedicke", description=__doc__)
    parser.add_argument("--threads", type=int, default=1, help="cap on worker threads")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gap", help="spectral gap, second eigenvalue and homogeneity")
    add_strategy_flags(p)
    p.set_defaults(func=cmd_gap, needs_strategy=True, subparser=p)

    p = sub.add_parser("ntests", help="number of tests for given infidelity and significance")
    add_strategy_flags(p)
    p.add_argument("--epsilon", type=float, default=0.01)
    p.add_argument("--delta", type=float, default=0.01)
    p.add_argument("--nu", type=float)
    p.add_argument("--gme", action="store_true", help="tests needed to certify genuine multipartite entanglement")
    p.set_defaults(func=cmd_ntests, needs_strategy=False, subparser=p)

    p = sub.add_parser("optimize", help="optimal test probabilities")
    add_strategy_flags(p)
    p.add_argument("--tol", type=float, default=1e-7)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--out")
    p.set_defaults(func=cmd_optimize, needs_strategy=True, subparser=p)

    p = sub.add_parser("symmetrize", help="group-average the tests, then optimize or use --p")
    add_strategy_flags(p)
    p.add_argument("--out")
    p.add_argument("--operators-out", help="write the averaged test operators as JSON")
    p.set_defaults(func=cmd_symmetrize, needs_strategy=True, subparser=p)

    p = sub.add_parser("simulate", help="Monte Carlo protocol runs")
    add_strategy_flags(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--state", default="target", help="target, worst, mixed, or an operator JSON file")
    p.add_argument("--epsilon", type=float, default=0.1)
    p.add_argument("--delta", type=float, default=0.05)
    p.add_argument("--runs", type=int, help="tests per protocol (default: the N needed for epsilon, delta)")
    p.add_argument("--repetitions", type=int, help="repeat the whole protocol this many times")
    p.add_argument("--csv", help="per-repetition accept flags")
    p.add_argument("--per-run", action="store_true", help="include every run in the JSON report")
    p.add_argument("--gme", type=int, metavar="N", help="GME certification with the optimal N-qudit strategy")
    p.add_argument("--out")
    p.set_defaults(func=cmd_simulate, needs_strategy=False, subparser=p)

    p = sub.add_parser("sweep", help="CSV of (n, nu) for a strategy family")
    p.add_argument("--family", choices=("dicke", "w", "w-sym", "as", "as-optimal"), required=True)
    p.add_argument("--n-range", required=True, help="e.g. 3..10")
    p.add_argument("--k-pattern", default="n-1,1", help="type vector pattern in n for the dicke family")
    p.add_argument("--method", choices=("default", "numeric"), default="default")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep, subparser=p)

    p = sub.add_parser("graph", help="transposition-graph spectrum extremes")
    p.add_argument("--k", required=True)
    p.add_argument("--edges", help="write the edge list")
    p.add_argument("--no-check", action="store_true", help="skip the adjacency and bipartite checks")
    p.set_defaults(func=cmd_graph, subparser=p)

    p = sub.add_parser("state", help="print target amplitudes")
    add_strategy_flags(p)
    p.set_defaults(func=cmd_state, needs_strategy=True, subparser=p)
    return parser


def _validate(parser: argparse.ArgumentParser, args) -> None:
    sub = args.subparser
    if hasattr(args, "spec"):
        validate_strategy_flags(sub, args, required=getattr(args, "needs_strategy", False))
    if args.threads < 1:
        parser.error("--threads must be >= 1")
    if args.command == "ntests":
        if args.nu is not None and args.nu * args.epsilon >= 1:
            sub.error("need nu * epsilon < 1")
        if args.nu is None and not _chosen(args):
            sub.error("give --nu or a strategy")
        if not 0 < args.delta < 1:
            sub.error("--delta must lie in (0, 1)")
    if args.command == "simulate":
        if args.gme is None and not _chosen(args):
            sub.error("choose a strategy or --gme N")
        if args.repetitions is not None and args.repetitions < 1:
            sub.error("--repetitions must be >= 1")
    if args.command == "sweep":
        try:
            _parse_range(args.n_range)
        except ValueError:
            sub.error(f"bad --n-range {args.n_range!r}")
    if args.command == "graph":
        try:
            TypeVector.parse(args.k)
        except (ValueError, PreconditionError) as exc:
            sub.error(f"--k: {exc}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    _validate(parser, args)
    np.set_printoptions(precision=12)
    try:
        return args.func(args)
    except PreconditionError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
