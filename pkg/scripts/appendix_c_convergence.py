"""Integrals of a probe function along the order-(n+1) PR-box sequence on [0, 1].

Each member is extreme, but the xy=0 cells converge to the uniform
measure on the diagonal, which is not a PR box.
"""
import argparse

from cvns.boxes import appendix_c_sequence
from cvns.cli import diagonal_limit
from cvns.discretization import test_function_integral, to_finite
from cvns.polytope import is_extreme


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--n-list", default="1,2,5,10,20,50,100,200,500,1000")
    ap.add_argument("--f", default="cos(a+b)")
    ap.add_argument("--extreme-max-n", type=int, default=100)
    args = ap.parse_args(argv)

    limit = diagonal_limit(args.f)
    print("n,integral,abs_error,is_extreme")
    for n in (int(t) for t in args.n_list.split(",")):
        bhv = appendix_c_sequence(n)
        val = test_function_integral(bhv[0, 0], args.f)
        ext = is_extreme(to_finite(bhv)) if n <= args.extreme_max_n else "skipped"
        print(f"{n},{val!r},{abs(val - limit)!r},{ext}")


if __name__ == "__main__":
    main()
