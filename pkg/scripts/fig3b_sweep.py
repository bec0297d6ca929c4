"""Normalized CFRD violation of the order-2 Gaussian PR box versus ell/sigma.

Writes CSV rows (ratio, closed form, full pipeline) and prints the
bracketed zero crossing next to sqrt(1 + sqrt(2)).
"""
import argparse
import math
import sys

from cvns.cli import sigma_grid, sweep_rows


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--ell", type=float, default=1.0)
    ap.add_argument("--sigma-min", type=float, default=0.1)
    ap.add_argument("--sigma-max", type=float, default=2.0)
    ap.add_argument("--sigma-step", type=float, default=0.01)
    args = ap.parse_args(argv)

    rows = sweep_rows(args.ell, sigma_grid(args.sigma_min, args.sigma_max, args.sigma_step))
    print("ratio,normalized_closed,normalized_pipeline")
    for r in rows:
        print(f"{r['ratio']!r},{r['normalized_closed']!r},{r['normalized_pipeline']!r}")
    for r0, r1 in zip(rows, rows[1:]):
        if (r0["signed"] > 0) != (r1["signed"] > 0):
            print(f"zero crossing in ratio [{r1['ratio']:.4f}, {r0['ratio']:.4f}], "
                  f"threshold sqrt(1+sqrt(2)) = {math.sqrt(1 + math.sqrt(2)):.4f}", file=sys.stderr)


if __name__ == "__main__":
    main()
