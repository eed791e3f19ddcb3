"""Spectral gaps and test counts for the standard strategies at small n."""

import argparse
import csv
import sys

from phasedicke.basis import TypeVector
from phasedicke.schur_weyl import schur_weyl_strategy
from phasedicke.strategies import (
    build_as_strategy,
    build_dicke_strategy,
    build_w_two_test_strategy,
    num_tests,
    spectral_gap,
)
from phasedicke.symmetry import build_dicke_symmetrized_strategy, build_w_symmetrized_strategy
from phasedicke.wclosed import symmetrized_w_closed_form


def rows(n_values, eps, delta):
    for n in n_values:
        k = TypeVector((n - 1, 1))
        entries = {
            "dicke_w": spectral_gap(build_dicke_strategy(k, 2)).nu,
            "dicke_w_diag": spectral_gap(build_dicke_symmetrized_strategy(k, 2)).nu,
            "w_two_test": spectral_gap(build_w_two_test_strategy(n)).nu,
            "w_sym_closed_p": spectral_gap(build_w_symmetrized_strategy(n, symmetrized_w_closed_form(n)[0])).nu,
            "w_sym_opt_p": spectral_gap(build_w_symmetrized_strategy(n)).nu,
            "as_optimal": schur_weyl_strategy(n).nu,
        }
        if n <= 5:  # the pair-test operator lives on n^n amplitudes
            entries["as_pairs"] = spectral_gap(build_as_strategy(n)).nu
        for key, nu in entries.items():
            yield {"n": n, "strategy": key, "nu": nu, "N": num_tests(eps, delta, nu)}


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=6)
    ap.add_argument("--epsilon", type=float, default=0.01)
    ap.add_argument("--delta", type=float, default=0.01)
    args = ap.parse_args()
    w = csv.DictWriter(sys.stdout, fieldnames=["n", "strategy", "nu", "N"], lineterminator="\n")
    w.writeheader()
    for r in rows(range(3, args.n_max + 1), args.epsilon, args.delta):
        w.writerow({**r, "nu": f"{r['nu']:.6f}"})


if __name__ == "__main__":
    main()
