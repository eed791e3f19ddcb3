"""Large-n behaviour of the W two-test gap: bounds, monotonicity of sqrt(n) h(n), limit trend."""

import argparse
import time

from phasedicke.wclosed import A_CONST, B_CONST, bounds_and_limits_report, h_table


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-max", type=int, default=5000)
    ap.add_argument("--limit-from", type=int, default=2000)
    ap.add_argument("--trend", type=int, nargs="*", default=[100, 500, 1000, 2000, 5000, 10000, 20000])
    args = ap.parse_args()

    t0 = time.perf_counter()
    rep = bounds_and_limits_report(args.n_max, args.limit_from)
    for line in rep.lines():
        print(line)
    worst = max(rep.fit_residuals, key=lambda r: abs(r[1]))
    print(f"largest fit residual for n<=200: {worst[1]:+.5f} at n={worst[0]}")
    print(f"({time.perf_counter() - t0:.1f}s)")

    # the slow drift toward the constants is what keeps the rounded-limit check above 1%
    tab = h_table(max(args.trend) + 1)
    print("n, sqrt(n) h(n), ratio to limit constant")
    for n in args.trend:
        for m in (n, n + 1):
            c = A_CONST if m % 2 else B_CONST
            print(f"{m}, {m ** 0.5 * tab[m]:.6f}, {m ** 0.5 * tab[m] / c:.6f}")


if __name__ == "__main__":
    main()
