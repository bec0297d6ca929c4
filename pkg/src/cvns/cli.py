"""Command-line driver.

Exit codes: 0 success / nothing detected, 1 a self-check failed,
2 input error, 3 nonlocality or supraquantumness certified, 4 domain
guard (mass outside the compact window), 5 catalog size guard.
"""
from __future__ import annotations

import argparse
import csv
import io
import math
import os
import sys
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy import integrate

from . import boxes
from .discretization import (DomainError, bin_behaviour, chsh, convergence_report, discretize_compact,
                             discretize_unbounded, gaps_shrink, probe, reports_to_csv,
                             test_function_integral, to_finite)
from .measures import MeasureError, is_no_signaling
from .moments import cfrd, cross_moment_mc, gaussian_prbox2_violation
from .polytope import CatalogSizeError, DecompositionError, decompose, enumerate_vertices, is_extreme
from .specfile import SpecError, atomic_write, dumps_behaviour, load_behaviour

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_CERTIFIED, EXIT_DOMAIN, EXIT_SIZE = 0, 1, 2, 3, 4, 5
CERTIFY_TOL = 1e-9
DECOMPOSE_TOL = 1e-8
SWEEP_TOL = 1e-9


class InputError(ValueError):
    pass


def _default_seed() -> int:
    raw = os.environ.get("CVNS_SEED")
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"CVNS_SEED must be an integer, got {raw!r}") from None


@dataclass
class RunConfig:
    command: str
    input: Optional[str] = None
    output: Optional[str] = None
    ell: float = 1.0
    sigma_min: float = 0.1
    sigma_max: float = 2.0
    sigma_step: float = 0.01
    K: Optional[float] = None
    n: Optional[int] = None
    n_list: tuple = (10, 40, 160)
    k_max: int = 2
    moment_order: int = 4
    thresholds: str = "0"
    seed: int = 0
    tol: float = 1e-9
    unbounded: bool = False
    clamp_tails: bool = False
    f: str = "cos(a+b)"
    mc_samples: int = 0
    extreme_max_n: int = 200
    box: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.tol > 0:
            raise InputError("--tol must be positive")


def _floats(text: str, what: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise InputError(f"{what}: expected comma-separated numbers, got {text!r}") from None


def _ints(text: str, what: str) -> list[int]:
    vals = _floats(text, what)
    if not vals or any(v != int(v) or v < 1 for v in vals):
        raise InputError(f"{what}: expected positive integers, got {text!r}")
    return [int(v) for v in vals]


def _emit(cfg: RunConfig, text: str) -> None:
    if cfg.output:
        atomic_write(cfg.output, text)
    else:
        sys.stdout.write(text)


def _load(cfg: RunConfig):
    if not cfg.input:
        raise InputError("--input is required")
    return load_behaviour(cfg.input)


# -- commands ---------------------------------------------------------------

def cmd_cfrd(cfg: RunConfig) -> int:
    bhv = _load(cfg)
    rep = cfrd(bhv)
    print(f"lhs={rep.lhs!r} rhs={rep.rhs!r} violation={rep.violation!r}")
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    header = ["x", "y", "AB", "A2B2"]
    if cfg.mc_samples:
        header += ["AB_mc", "AB_mc_stderr", "A2B2_mc", "A2B2_mc_stderr"]
    w.writerow(header)
    for x in (0, 1):
        for y in (0, 1):
            ab, a2b2 = rep.per_cell_moments[x][y]
            row = [x, y, repr(ab), repr(a2b2)]
            print(f"cell ({x},{y}): <AB>={ab!r} <A^2B^2>={a2b2!r}")
            if cfg.mc_samples:
                seed = cfg.seed + 2 * x + y
                for na in (1, 2):
                    est = cross_moment_mc(bhv[x, y], na, na, cfg.mc_samples, seed)
                    row += [repr(est.estimate), repr(est.stderr)]
            w.writerow(row)
    if cfg.output:
        atomic_write(cfg.output, buf.getvalue())
    if rep.violation > CERTIFY_TOL:
        print("CFRD violated: behaviour certified supraquantum")
        return EXIT_CERTIFIED
    return EXIT_OK


def sigma_grid(lo: float, hi: float, step: float) -> np.ndarray:
    if not (step > 0 and lo >= 0 and hi >= lo) or any(map(math.isnan, (lo, hi, step))):
        raise InputError(f"empty or invalid sigma range [{lo}, {hi}] step {step}")
    count = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return np.round(lo + step * np.arange(count), 12)


def sweep_rows(ell: float, sigmas: Sequence[float]) -> list[dict]:
    if ell == 0:
        raise InputError("--ell must be nonzero")
    rows = []
    centres = (ell, -ell)
    for s in sigmas:
        s = float(s)
        closed = gaussian_prbox2_violation(ell, s)
        bhv = (boxes.cv_pr_box(2, centres, centres) if s == 0
               else boxes.gaussian_pr_box(2, centres, centres, (s, s)))
        pipe = cfrd(bhv)
        rows.append({
            "ell": ell, "sigma": s, "ratio": abs(ell) / s if s > 0 else math.inf,
            "signed": closed.signed, "clamped": closed.clamped,
            "normalized_closed": closed.clamped / ell ** 4,
            "normalized_pipeline": pipe.clamped / ell ** 4,
            "signed_pipeline": pipe.violation,
        })
    return rows


def cmd_sweep_gaussian(cfg: RunConfig) -> int:
    rows = sweep_rows(cfg.ell, sigma_grid(cfg.sigma_min, cfg.sigma_max, cfg.sigma_step))
    buf = io.StringIO()
    cols = ["ell", "sigma", "ratio", "signed", "clamped", "normalized_closed", "normalized_pipeline"]
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([repr(r[c]) for c in cols])
    _emit(cfg, buf.getvalue())
    worst = max(abs(r["normalized_closed"] - r["normalized_pipeline"]) for r in rows)
    for r0, r1 in zip(rows, rows[1:]):
        if (r0["signed"] > 0) != (r1["signed"] > 0):
            print(f"zero crossing: ratio between {r1['ratio']!r} and {r0['ratio']!r}", file=sys.stderr)
    if worst > SWEEP_TOL:
        print(f"closed form and pipeline disagree by {worst:.3g}", file=sys.stderr)
        return EXIT_CHECK
    return EXIT_OK


def cmd_discretize(cfg: RunConfig) -> int:
    bhv = _load(cfg)
    if cfg.n is None:
        raise InputError("--n is required")
    if cfg.unbounded:
        out = discretize_unbounded(bhv, cfg.n)
    else:
        if cfg.K is None:
            raise InputError("--K is required unless --unbounded is given")
        out = discretize_compact(bhv, cfg.K, cfg.n, clamp_tails=cfg.clamp_tails)
    ns = is_no_signaling(out, cfg.tol)
    atoms = [len(out[x, y]) for x in (0, 1) for y in (0, 1)]
    if cfg.output:
        atomic_write(cfg.output, dumps_behaviour(out))
    else:
        sys.stdout.write(dumps_behaviour(out))
    print(f"atoms per cell: {atoms}; no-signaling ok={ns.ok} max_deviation={ns.max_deviation!r}",
          file=sys.stderr)
    return EXIT_OK


def cmd_decompose(cfg: RunConfig) -> int:
    bhv = _load(cfg)
    if not bhv.is_atomic or cfg.n is not None:
        if cfg.K is None or cfg.n is None:
            raise InputError("input has Gaussian components: pass --K and --n to discretize first")
        bhv = discretize_compact(bhv, cfg.K, cfg.n, clamp_tails=cfg.clamp_tails)
    fb = to_finite(bhv)
    catalog = enumerate_vertices(fb.alice_outcomes, fb.bob_outcomes, cfg.k_max)
    dec = decompose(fb, catalog)
    _emit(cfg, dec.to_csv(catalog))
    print(f"catalog size {len(catalog)}; residual={dec.residual!r}", file=sys.stderr)
    return EXIT_OK if dec.residual <= DECOMPOSE_TOL else EXIT_CHECK


def cmd_converge(cfg: RunConfig) -> int:
    bhv = _load(cfg)
    if cfg.K is None:
        raise InputError("--K is required")
    reports = convergence_report(bhv, cfg.K, cfg.n_list, cfg.moment_order, clamp_tails=cfg.clamp_tails)
    _emit(cfg, reports_to_csv(reports))
    stuck = gaps_shrink(reports[0], reports[-1]) if len(reports) > 1 else []
    for key, g0, g1 in stuck:
        print(f"gap did not shrink for {key}: {g0!r} -> {g1!r}", file=sys.stderr)
    return EXIT_CHECK if stuck else EXIT_OK


def _parse_thresholds(text: str) -> tuple[list[float], list[float]]:
    parts = text.split(";")
    if len(parts) > 2:
        raise InputError("--thresholds: use 'T1,T2,...' or 'ALICE;BOB'")
    ta = _floats(parts[0], "--thresholds")
    tb = _floats(parts[1], "--thresholds") if len(parts) == 2 else ta
    return ta, tb


def cmd_binning_chsh(cfg: RunConfig) -> int:
    bhv = _load(cfg)
    ta, tb = _parse_thresholds(cfg.thresholds)
    if len(ta) != 1 or len(tb) != 1:
        raise InputError("CHSH needs dichotomic binning: exactly one threshold per party")
    fb = bin_behaviour(bhv, ta, tb)
    s = chsh(fb)
    print(f"CHSH S={s!r}")
    if abs(s) > 2 + CERTIFY_TOL:
        print("local bound exceeded: nonlocality detected")
        return EXIT_CERTIFIED
    return EXIT_OK


def diagonal_limit(f_id: str) -> float:
    """Integral of f(a, a) over [0, 1]: the probe's value on the diagonal limit."""
    f = probe(f_id)
    val, _ = integrate.quad(lambda t: float(f(t, t)), 0.0, 1.0, epsabs=1e-13, epsrel=1e-13, limit=200)
    return val


def cmd_appendix_c(cfg: RunConfig) -> int:
    probe(cfg.f)  # validate early
    limit = diagonal_limit(cfg.f)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "cell", "integral", "limit", "abs_error", "is_extreme"])
    for n in cfg.n_list:
        bhv = boxes.appendix_c_sequence(n)
        extreme = (str(is_extreme(to_finite(bhv))).lower() if n <= cfg.extreme_max_n else "skipped")
        for label, (x, y) in (("xy0", (0, 0)), ("xy1", (1, 1))):
            val = test_function_integral(bhv[x, y], cfg.f)
            w.writerow([n, label, repr(val), repr(limit), repr(abs(val - limit)), extreme])
    _emit(cfg, buf.getvalue())
    return EXIT_OK


def cmd_box(cfg: RunConfig) -> int:
    p = cfg.box
    kind = p["kind"]
    if kind == "appendix-c":
        if cfg.n is None:
            raise InputError("--n is required for appendix-c")
        bhv = boxes.appendix_c_sequence(cfg.n)
    elif kind == "deterministic":
        vals = _floats(p.get("values") or "", "--values")
        if len(vals) != 4:
            raise InputError("--values needs a0,a1,b0,b1")
        bhv = boxes.deterministic_box(*vals)
    else:
        if p.get("a"):
            a = _floats(p["a"], "--a")
            b = _floats(p["b"] or p["a"], "--b")
        else:
            a = b = [cfg.ell, -cfg.ell]
        k = len(a)
        if kind == "cv-pr":
            bhv = boxes.cv_pr_box(k, a, b)
        elif kind == "gaussian-pr":
            if p.get("sigma") is None:
                raise InputError("--sigma is required for gaussian-pr")
            bhv = boxes.gaussian_pr_box(k, a, b, [p["sigma"]] * k)
        else:
            raise InputError(f"unknown box kind {kind!r}")
    _emit(cfg, dumps_behaviour(bhv))
    return EXIT_OK


COMMANDS = {
    "cfrd": cmd_cfrd,
    "sweep-gaussian": cmd_sweep_gaussian,
    "discretize": cmd_discretize,
    "decompose": cmd_decompose,
    "converge": cmd_converge,
    "binning-chsh": cmd_binning_chsh,
    "appendix-c": cmd_appendix_c,
    "box": cmd_box,
}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cvns", description="Continuous-variable no-signaling box toolkit")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--input", help="behaviour spec JSON")
    common.add_argument("--output", help="output path (default: stdout)")
    common.add_argument("--seed", type=int, default=None, help="RNG seed (default: $CVNS_SEED or 0)")
    common.add_argument("--tol", type=float, default=1e-9)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("cfrd", parents=[common], help="evaluate the CFRD inequality")
    p.add_argument("--mc-samples", type=int, default=0, help="add Monte Carlo moment estimates")

    p = sub.add_parser("sweep-gaussian", parents=[common], help="order-2 Gaussian PR box violation vs width")
    p.add_argument("--ell", type=float, default=1.0)
    p.add_argument("--sigma-min", type=float, default=0.1)
    p.add_argument("--sigma-max", type=float, default=2.0)
    p.add_argument("--sigma-step", type=float, default=0.01)

    p = sub.add_parser("discretize", parents=[common], help="grid discretization of a behaviour")
    p.add_argument("--K", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--unbounded", action="store_true")
    p.add_argument("--clamp-tails", action="store_true")

    p = sub.add_parser("decompose", parents=[common], help="decompose into PR boxes and local vertices")
    p.add_argument("--k-max", type=int, default=2)
    p.add_argument("--K", type=float)
    p.add_argument("--n", type=int)
    p.add_argument("--clamp-tails", action="store_true")

    p = sub.add_parser("converge", parents=[common], help="moment and test-function gaps vs grid size")
    p.add_argument("--K", type=float)
    p.add_argument("--n-list", default="10,40,160")
    p.add_argument("--moment-order", type=int, default=4)
    p.add_argument("--clamp-tails", action="store_true")

    p = sub.add_parser("binning-chsh", parents=[common], help="bin outcomes and evaluate CHSH")
    p.add_argument("--thresholds", default="0", help="'T' for both parties or 'TA;TB'")

    p = sub.add_parser("appendix-c", parents=[common], help="integrals along the PR-box sequence on [0,1]")
    p.add_argument("--n-list", default="1,10,100,1000")
    p.add_argument("--f", default="cos(a+b)", help="test function id, e.g. cos(a+b), cos:1,-1, gauss:1")
    p.add_argument("--extreme-max-n", type=int, default=200,
                   help="skip the extremality test above this n (dense rank test)")

    p = sub.add_parser("box", parents=[common], help="write a constructed behaviour as JSON")
    p.add_argument("kind", choices=["cv-pr", "gaussian-pr", "deterministic", "appendix-c"])
    p.add_argument("--ell", type=float, default=1.0, help="centres (ell, -ell) when --a is not given")
    p.add_argument("--a", help="Alice centres, comma-separated")
    p.add_argument("--b", help="Bob centres (default: same as --a)")
    p.add_argument("--sigma", type=float)
    p.add_argument("--values", help="a0,a1,b0,b1 for a deterministic box")
    p.add_argument("--n", type=int)
    return ap


def config_from_args(args: argparse.Namespace) -> RunConfig:
    d = vars(args).copy()
    cfg = RunConfig(command=d.pop("command"))
    if d.get("seed") is None:
        d["seed"] = _default_seed()
    if "n_list" in d:
        d["n_list"] = tuple(_ints(d["n_list"], "--n-list"))
    if cfg.command == "box":
        cfg.box = {k: d.pop(k) for k in ("kind", "a", "b", "sigma", "values")}
    for k, v in d.items():
        setattr(cfg, k, v)
    cfg.__post_init__()
    return cfg


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_INPUT if exc.code else EXIT_OK
    try:
        cfg = config_from_args(args)
        return COMMANDS[cfg.command](cfg)
    except (SpecError, InputError) as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN
    except CatalogSizeError as exc:
        print(f"size guard: {exc}", file=sys.stderr)
        return EXIT_SIZE
    except DecompositionError as exc:
        print(f"decomposition failed: {exc} (best residual {exc.best_residual!r})", file=sys.stderr)
        return EXIT_CHECK
    except MeasureError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except OSError as exc:
        print(f"input error: {exc}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
