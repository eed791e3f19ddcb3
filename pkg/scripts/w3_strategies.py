"""Three-qubit W state: optimized three-test mixture, then the group-averaged version."""

import argparse
import json

import numpy as np

from phasedicke import protocols as pr
from phasedicke.basis import w_state
from phasedicke.optimizer import optimize_probabilities
from phasedicke.strategies import fidelity_estimate, spectral_gap
from phasedicke.symmetry import build_w3_symmetrized_strategy, w3_mu_vector, w3_symmetrized_tests


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--pass-rate", type=float, default=0.9, help="observed pass rate for the fidelity estimate")
    ap.add_argument("--runs", type=int, default=10_000)
    args = ap.parse_args()

    plain = optimize_probabilities([t for t, _ in pr.w3_tests()], w_state(3))
    sym = build_w3_symmetrized_strategy()
    rep = spectral_gap(sym)
    f, df = fidelity_estimate(args.pass_rate, args.runs, rep)
    out = {
        "three_test": {"p": plain.probabilities.round(6).tolist(), "nu": round(plain.nu, 6), "iterations": plain.iterations},
        "averaged": {
            "p": np.round(sym.probabilities, 6).tolist(),
            "nu": round(rep.nu, 6),
            "homogeneous": rep.homogeneous,
            "mu_vectors": [np.round(w3_mu_vector(op), 6).tolist() for op in w3_symmetrized_tests()],
        },
        "fidelity_estimate": {"pass_rate": args.pass_rate, "runs": args.runs, "F": round(f, 6), "std": round(df, 6)},
    }
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
