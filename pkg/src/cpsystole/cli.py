"""Command line: systole tables, verification suites and the Lefschetz decomposition.

Exit status is 0 when every check passes, 1 when a check fails and 2 on a
configuration error.  Reports are JSON with sorted keys; everything that may
change between identical runs lives under ``"run"``.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import time
from datetime import datetime, timezone

import numpy as np

from . import suites
from .linear_hermitian_algebra import DomainError, GradedForm, LinearComplexStructure, primitive_decompose
from .cpn_fields import form_from_json

SCHEMA_VERSION = 1
SEED_ENV = "CPSYS_SEED"


class ConfigError(Exception):
    pass


def _positive(kind):
    def parse(s):
        try:
            v = kind(s)
        except ValueError:
            raise argparse.ArgumentTypeError(f"not a number: {s!r}")
        if not np.isfinite(v) or v <= 0:
            raise argparse.ArgumentTypeError(f"must be positive: {s!r}")
        return v
    return parse


pos_int, pos_float = _positive(int), _positive(float)


def seed_value(s) -> int:
    try:
        v = int(s)
    except (TypeError, ValueError):
        raise argparse.ArgumentTypeError(f"seed must be an integer: {s!r}")
    if not 0 <= v < 2 ** 64:
        raise argparse.ArgumentTypeError(f"seed must lie in [0, 2^64): {s!r}")
    return v


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None or raw == "":
        return 0
    try:
        return seed_value(raw)
    except argparse.ArgumentTypeError as e:
        raise ConfigError(f"{SEED_ENV}: {e}")


def _json_default(o):
    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return {"re": o.real, "im": o.imag}
    raise TypeError(f"not serializable: {type(o).__name__}")


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, default=_json_default, ensure_ascii=False) + "\n"


def _emit(text: str, out: str | None) -> None:
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _read_json(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as e:
        raise ConfigError(f"cannot read {path}: {e.strerror}")
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: invalid JSON ({e.msg} at line {e.lineno})")


# -- parser -------------------------------------------------------------------

def _common(p, samples=None, workers=True):
    p.add_argument("--seed", type=seed_value, default=None, help=f"master seed (default ${SEED_ENV} or 0)")
    p.add_argument("--out", help="report path (default stdout)")
    if samples is not None:
        p.add_argument("--samples", type=pos_int, default=samples)
    if workers:
        p.add_argument("--workers", type=pos_int, default=1, help="sampling threads; results do not depend on it")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="cpsystole", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="group", required=True)

    table = sub.add_parser("table", help="closed-form tables").add_subparsers(dest="what", required=True)
    ts = table.add_parser("systole", help="normalized systoles of the homogeneous family")
    ts.add_argument("--n", type=pos_int, default=1)
    ts.add_argument("--t-min", type=pos_float, default=1e-2)
    ts.add_argument("--t-max", type=pos_float, default=1e2)
    ts.add_argument("--steps", type=pos_int, default=400)
    ts.add_argument("--format", choices=("csv", "json"), default="csv")
    ts.add_argument("--out")

    verify = sub.add_parser("verify", help="run a verification suite").add_subparsers(dest="what", required=True)

    p = verify.add_parser("systole", help="closed-form curves, continuity and systolic freedom")
    p.add_argument("--n", type=pos_int, nargs="+", default=[1, 2])
    p.add_argument("--t-min", type=pos_float, default=1e-2)
    p.add_argument("--t-max", type=pos_float, default=1e2)
    p.add_argument("--steps", type=pos_int, default=400)
    _common(p, workers=False)

    p = verify.add_parser("crosscheck", help="balanced systole at the Fubini-Study form against the closed form")
    _common(p, samples=1_000_000)

    p = verify.add_parser("balanced", help="balancedness of the homogeneous metrics")
    p.add_argument("--n", type=pos_int, default=1)
    p.add_argument("--t", type=pos_float, nargs="+", default=[0.1, 0.5, 2.0, 10.0])
    p.add_argument("--points", type=pos_int, default=100)
    p.add_argument("--h", type=pos_float, default=1e-4)
    p.add_argument("--tol", type=pos_float, default=1e-5)
    _common(p, workers=False)

    p = verify.add_parser("identities", help="Gray tensors, Lefschetz algebra, curves")
    p.add_argument("--suite", choices=("gray", "algebra", "curves", "all"), default="all")
    p.add_argument("--points", type=pos_int, default=50, help="chart points for the Gray suite")
    p.add_argument("--samples", type=pos_int, default=1000, help="random forms per degree for the algebra suite")
    p.add_argument("--h", type=pos_float, default=1e-4)
    p.add_argument("--tol", type=pos_float, default=1e-5)
    _common(p, workers=False)

    p = verify.add_parser("areas", help="Monte Carlo areas of calibrated cycles")
    p.add_argument("--n", type=pos_int, default=1)
    p.add_argument("--t", type=pos_float, nargs="+", default=[0.5, 2.0])
    _common(p, samples=1_000_000)

    p = verify.add_parser("variation", help="first and second variation at the Fubini-Study form")
    p.add_argument("--n", type=pos_int, default=3)
    p.add_argument("--directions", help="JSON list of directions (default: generated library)")
    p.add_argument("--kahler", type=int, default=10, help="generated Kähler directions")
    p.add_argument("--mixed", type=int, default=20, help="generated mixed directions")
    p.add_argument("--rel-tol", type=pos_float, default=1e-4)
    p.add_argument("--abs-floor", type=pos_float, default=1e-8)
    _common(p, samples=200_000)

    p = verify.add_parser("igf", help="integral geometric formulas and the Hölder chain")
    p.add_argument("--family", choices=("penrose", "equatorial", "both"), default="both")
    p.add_argument("--n", type=pos_int, default=1)
    p.add_argument("--t", type=pos_float, nargs="+", default=[0.5, 2.0])
    p.add_argument("--theta-samples", type=pos_int, default=200_000,
                   help="samples for estimating the equatorial measure normalization")
    p.add_argument("--no-holder", action="store_true")
    _common(p, samples=200_000)

    alg = sub.add_parser("algebra", help="linear algebra utilities").add_subparsers(dest="what", required=True)
    p = alg.add_parser("decompose", help="Lefschetz decomposition of a form")
    p.add_argument("--input", required=True, help='JSON {"dim", "terms": [{"idx", "re", "im"}], "gram"?}')
    p.add_argument("--tol", type=pos_float, default=1e-10)
    p.add_argument("--out")
    return ap


# -- commands ------------------------------------------------------------------

def _load_directions(path: str, n: int):
    data = _read_json(path)
    items = data.get("directions") if isinstance(data, dict) else data
    if not isinstance(items, list) or not items:
        raise ConfigError(f"{path}: expected a non-empty list of directions")
    out = []
    for i, item in enumerate(items):
        try:
            form = form_from_json(item["form"] if "form" in item else item)
        except (KeyError, TypeError, ValueError) as e:
            raise ConfigError(f"{path}: direction {i}: {e}")
        if form.m != n:
            raise ConfigError(f"{path}: direction {i} lives on CP^{form.m}, expected CP^{n}")
        out.append((str(item.get("name", f"direction_{i}")), str(item.get("kind", "mixed")), form))
    return out


def _run_suite(args, seed: int):
    w = getattr(args, "workers", 1)
    what = args.what
    if what == "systole":
        return [suites.systole_suite(args.n, args.steps, args.t_min, args.t_max)]
    if what == "crosscheck":
        return [suites.crosscheck_suite(args.samples, seed, w)]
    if what == "balanced":
        return [suites.balanced_suite(args.n, args.t, args.points, args.h, args.tol, seed)]
    if what == "identities":
        names = ("gray", "algebra", "curves") if args.suite == "all" else (args.suite,)
        out = []
        for name in names:
            if name == "gray":
                out.append(suites.gray_suite(args.points, seed, args.h, args.tol))
            elif name == "algebra":
                out.append(suites.algebra_suite(samples=args.samples, seed=seed))
            else:
                out.append(suites.curves_suite(seed))
        return out
    if what == "areas":
        return [suites.areas_suite(args.n, args.t, args.samples, seed, w)]
    if what == "variation":
        if args.n < 3:
            raise ConfigError("the variational suite needs n >= 3")
        if args.kahler < 0 or args.mixed < 0:
            raise ConfigError("direction counts must be non-negative")
        dirs = _load_directions(args.directions, args.n) if args.directions else None
        return [suites.variation_suite(args.n, args.samples, seed, args.kahler, args.mixed, dirs,
                                       args.rel_tol, args.abs_floor, workers=w)]
    if what == "igf":
        fams = ("penrose", "equatorial") if args.family == "both" else (args.family,)
        return [suites.igf_suite(fams, args.n, args.t, args.samples, seed, w, args.theta_samples,
                                 not args.no_holder)]
    raise ConfigError(f"unknown suite {what!r}")


def _config(args, seed: int) -> dict:
    skip = {"group", "what", "out", "workers", "seed"}
    cfg = {k: v for k, v in vars(args).items() if k not in skip}
    cfg["seed"] = seed
    return cfg


def cmd_verify(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    t0 = time.perf_counter()
    results = _run_suite(args, seed)
    checks = [dict(c.to_dict(), suite=r.suite) for r in results for c in r.checks]
    passed = all(r.passed for r in results)
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": f"verify {args.what}",
        "config": _config(args, seed),
        "suites": [{"suite": r.suite, "config": suites._jsonable(r.config), "passed": r.passed} for r in results],
        "checks": checks,
        "passed": passed,
        "run": {"timestamp": datetime.now(timezone.utc).isoformat(timespec="seconds"),
                "workers": getattr(args, "workers", 1),
                "elapsed_s": round(time.perf_counter() - t0, 3)},
    }
    _emit(dumps(report), args.out)
    failed = [c["name"] for c in checks if not c["passed"]]
    print(f"verify {args.what}: {len(checks) - len(failed)}/{len(checks)} checks passed"
          + (f"; failed: {', '.join(failed)}" if failed else ""), file=sys.stderr)
    return 0 if passed else 1


def cmd_table(args) -> int:
    if args.t_min > args.t_max:
        raise ConfigError("--t-min exceeds --t-max")
    rows = suites.systole_table(args.n, args.t_min, args.t_max, args.steps)
    cols = ("t", "sys2_nor", "sys4n_nor", "vol")
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=cols, lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: repr(r[k]) for k in cols})
        text = buf.getvalue()
    else:
        text = dumps({"schema_version": SCHEMA_VERSION, "command": "table systole",
                      "config": {"n": args.n, "t_min": args.t_min, "t_max": args.t_max, "steps": args.steps},
                      "rows": rows})
    _emit(text, args.out)
    return 0


def cmd_decompose(args) -> int:
    data = _read_json(args.input)
    try:
        form = GradedForm.from_json_dict(data)
        if form.dim % 2:
            raise ValueError(f"odd dimension {form.dim}")
        gram = data.get("gram")
        cs = LinearComplexStructure.standard(form.dim // 2, None if gram is None else np.asarray(gram, float))
        d = primitive_decompose(form, cs, tol=args.tol)
    except (KeyError, TypeError, ValueError) as e:
        raise ConfigError(f"{args.input}: {e}")
    ok = d.residual <= args.tol
    report = {
        "schema_version": SCHEMA_VERSION,
        "command": "algebra decompose",
        "config": {"input": args.input, "tol": args.tol, "degree": form.homogeneous_degree(), "dim": form.dim},
        "pieces": [{"lefschetz_power": j, "primitive": piece.to_json_dict(prune=1e-15)} for j, piece in d],
        "residual": d.residual,
        "condition": d.condition,
        "passed": ok,
    }
    _emit(dumps(report), args.out)
    return 0 if ok else 1


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    try:
        if args.group == "table":
            return cmd_table(args)
        if args.group == "verify":
            return cmd_verify(args)
        return cmd_decompose(args)
    except (ConfigError, DomainError) as e:
        print(f"cpsystole: error: {e}", file=sys.stderr)
        return 2


def main() -> None:
    sys.exit(run())
