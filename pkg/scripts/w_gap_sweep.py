"""Gap versus n for the W and antisymmetric families, as CSV (closed forms, so large n is cheap)."""

import argparse
from pathlib import Path

from phasedicke.wclosed import WGapTable


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-min", type=int, default=3)
    ap.add_argument("--n-max", type=int, default=60)
    ap.add_argument("--out", type=Path, help="write here instead of stdout")
    args = ap.parse_args()
    text = WGapTable.build(range(args.n_min, args.n_max + 1)).to_csv()
    if args.out:
        args.out.write_text(text)
        print(f"wrote {args.out} ({args.n_max - args.n_min + 1} rows)")
    else:
        print(text, end="")


if __name__ == "__main__":
    main()
