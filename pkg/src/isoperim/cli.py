"""``isoperim`` command line.

Every subcommand emits a JSON run report (stdout or ``--out``) and writes
plot-ready CSV side files for tabulated output.  Exit codes: 0 when every
verdict passes, 1 when a check fails, 2 on usage or domain errors.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from . import conditions, influences, product_space, suite, tensorize
from .errors import DomainError, NumericalError, PreconditionError
from .measure1d import check_halfline_optimal, measure_from_profile, parse_measure
from .product_space import ProductMeasure, RectilinearSet
from .profiles import Profile, open_grid, parse_profile, read_table, write_table

SCHEMA_VERSION = "1"


class UsageError(Exception):
    pass


# ------------------------------------------------------------------ serialization
def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        return float(obj)
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def dumps(obj, indent: int = 2, _level: int = 0) -> str:
    """JSON with floats at 17 significant digits and non-finite floats as strings."""
    pad, inner = " " * (indent * _level), " " * (indent * (_level + 1))
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{inner}{json.dumps(k)}: {dumps(obj[k], indent, _level + 1)}" for k in sorted(obj)]
        return "{\n" + ",\n".join(items) + "\n" + pad + "}"
    if isinstance(obj, list):
        if not obj:
            return "[]"
        if all(not isinstance(v, (dict, list)) for v in obj):
            return "[" + ", ".join(dumps(v) for v in obj) + "]"
        return "[\n" + ",\n".join(inner + dumps(v, indent, _level + 1) for v in obj) + "\n" + pad + "]"
    if isinstance(obj, bool) or obj is None:
        return json.dumps(obj)
    if isinstance(obj, int):
        return str(obj)
    if isinstance(obj, float):
        if math.isnan(obj):
            return '"nan"'
        if math.isinf(obj):
            return '"inf"' if obj > 0 else '"-inf"'
        return format(obj, ".17g")
    return json.dumps(obj)


def _hash(*parts) -> str:
    h = hashlib.sha256()
    for p in parts:
        h.update(str(p).encode())
        h.update(b"\0")
    return h.hexdigest()[:16]


def _side_path(args, suffix: str) -> Path | None:
    if not args.out:
        return None
    out = Path(args.out)
    return out.with_name(out.stem + suffix)


# ------------------------------------------------------------------ inputs
def _profile(args) -> Profile:
    if not args.profile:
        raise UsageError("--profile is required")
    return parse_profile(args.profile)


def _measure(args):
    if not args.measure:
        raise UsageError("--measure is required")
    return parse_measure(args.measure)


def _set(args) -> tuple[RectilinearSet, str]:
    if not args.set:
        raise UsageError("--set is required")
    text = Path(args.set).read_text()
    return RectilinearSet.from_json(json.loads(text)), hashlib.sha256(text.encode()).hexdigest()[:16]


def _cached_table(key: str, build):
    """Memoize a (t, J) table in ``$ISOPERIM_CACHE`` when set."""
    root = os.environ.get("ISOPERIM_CACHE")
    if not root:
        return build()
    path = Path(root) / f"{_hash(key)}.csv"
    if path.exists():
        return read_table(path)
    t, y = build()
    path.parent.mkdir(parents=True, exist_ok=True)
    write_table(path, t, y)
    return t, y


# ------------------------------------------------------------------ commands
def cmd_profile(args) -> dict:
    n = args.grid or 512
    if args.measure:
        mu = _measure(args)
        key, fn = f"measure:{args.measure}:{n}", mu.profile_J
    else:
        J = _profile(args)
        key, fn = f"profile:{args.profile}:{n}", J
    t, y = _cached_table(key, lambda: (np.linspace(0.0, 1.0, n), np.asarray(fn(np.linspace(0.0, 1.0, n)), float)))
    return {"inputs": {"measure": args.measure, "profile": args.profile, "grid": n},
            "table": (t, y), "outputs": {"J_max": float(np.max(y)), "argmax": float(t[int(np.argmax(y))])},
            "verdict": "pass"}


def cmd_reconstruct(args) -> dict:
    J = _profile(args)
    n = args.grid or 512
    mu = measure_from_profile(J)
    g = open_grid(n)
    g = g[(g >= 1e-6) & (g <= 1.0 - 1e-6)]
    err = float(np.max(np.abs(mu.profile_J(g) / J(g) - 1.0)))
    tol = args.tol if args.tol is not None else 1e-5
    x = np.asarray(mu.quantile(g), float)
    artifacts = {}
    path = _side_path(args, "_measure.csv")
    if path:
        write_table(path, g, np.column_stack([x, mu.pdf(x)]), columns=("t", "x", "density"))
        artifacts["measure_csv"] = str(path)
    return {"inputs": {"profile": args.profile, "grid": n},
            "outputs": {"support": [mu.support_lo, mu.support_hi], "even": mu.even,
                        "log_concave": mu.log_concave, "roundtrip_max_rel_error": err, "tol": tol},
            "artifacts": artifacts, "verdict": "pass" if err <= tol else "fail"}


CHECKS = ("symmetry", "subadd", "twopoint", "ratio", "ratio-J1", "peetre", "equiv", "bobkov", "limit", "halfline")


def cmd_check(args) -> dict:
    test = args.test
    if test == "halfline":
        mu = _measure(args)
        r = check_halfline_optimal(mu, n=args.grid or 1000, tol=args.tol or 1e-9)
        r.pop("grid", None)
        verdict = "pass" if r["verdict"] == "half-lines optimal" else "fail"
        return {"inputs": {"measure": args.measure, "test": test}, "outputs": r, "verdict": verdict}
    J = _profile(args)
    tol = args.tol if args.tol is not None else conditions.VIOLATION_TOL
    grid = open_grid(args.grid) if args.grid else None
    if test in ("symmetry", "subadd", "twopoint"):
        fn = {"symmetry": conditions.check_symmetry, "subadd": conditions.check_subadditive,
              "twopoint": conditions.check_two_point}[test]
        r = fn(J, grid, tol)
        verdict = r["verdict"]
    elif test in ("ratio", "ratio-J1"):
        D = conditions.check_ratio_monotone(J, "J1", "(0,1)", "nondecreasing", n=args.grid or 512)
        r = {"D": D}
        verdict = "pass" if math.isfinite(D) else "fail"
    elif test == "peetre":
        g = grid if grid is not None else open_grid(512)
        r = {"C2": conditions.peetre_constant(np.asarray(J(g), float), g)}
        verdict = "pass" if math.isfinite(r["C2"]) else "fail"
    elif test == "equiv":
        c = conditions.equivalence_constants(J, n=args.grid or 512)
        r = {**c.as_dict(), **conditions.lem_equiv_crosscheck(c)}
        verdict = r["verdict"]
    elif test == "bobkov":
        r = conditions.bobkov_two_atom_search(J)
        verdict = "pass" if r["min_slack"] >= -tol else "fail"
    else:
        r = conditions.subadditive_limit_check(J)
        verdict = "pass" if r["verdict"] == "pass" else "fail"
    return {"inputs": {"profile": args.profile, "test": test, "tol": tol}, "outputs": r,
            "verdict": "pass" if verdict == "pass" else "fail"}


def cmd_tensorize(args) -> dict:
    J = _profile(args)
    cert = tensorize.certified_lower_bound(J, assume_concave=args.assume_concave, n=args.grid or 512)
    sw = tensorize.sandwich_check(J, cert.c_map)
    g = open_grid(args.grid or 512)
    artifacts = {}
    path = _side_path(args, "_bound.csv")
    if path:
        write_table(path, g, np.column_stack([J(g), cert(g)]), columns=("t", "J", "bound"))
        artifacts["bound_csv"] = str(path)
    ok = sw["lower_margin"] >= -1e-9 and sw["upper_margin"] >= -1e-9
    out = {**cert.as_dict(), "bound_csv_path": str(path) if path else None,
           "sandwich": {k: v for k, v in sw.items() if k != "rows"}}
    return {"inputs": {"profile": args.profile, "assume_concave": args.assume_concave},
            "outputs": out, "artifacts": artifacts,
            "verdict": "pass" if ok else "fail"}


def cmd_product(args) -> dict:
    mu = _measure(args)
    pm = ProductMeasure.power(mu, args.n)
    op, _, radius = args.op.partition(":")
    if op not in ("measure", "boundary", "enlarge", "search"):
        raise UsageError(f"unknown op {args.op!r}")
    try:
        h = float(radius) if radius else args.h
    except ValueError:
        raise UsageError(f"bad enlargement radius in {args.op!r}") from None
    inputs = {"measure": args.measure, "n": args.n, "op": args.op}
    if op == "search":
        fam, k = product_space.parse_family(args.family)
        v, A = product_space.profile_upper_search(pm, args.t, fam, k)
        cert = tensorize.certified_lower_bound(parse_profile(args.profile)) if args.profile else None
        out = {"value": v, "witness": A.to_json(), "t": args.t, "family": args.family}
        verdict = "pass"
        if cert is not None:
            out["certified_bound"] = float(cert(args.t))
            verdict = "pass" if v >= out["certified_bound"] * (1.0 - 1e-9) else "fail"
        return {"inputs": {**inputs, "profile": args.profile}, "outputs": out, "verdict": verdict}
    A, digest = _set(args)
    if A.n != args.n:
        raise DomainError(f"set has dimension {A.n}, --n is {args.n}")
    inputs["set_hash"] = digest
    if op == "measure":
        out = {"measure": product_space.measure(pm, A)}
    elif op == "boundary":
        out = {"boundary": product_space.boundary_exact(pm, A)}
        if A.n <= product_space.EXACT_DIM_CAP:
            fd = product_space.minkowski_content_fd(pm, A)
            out["fd"] = {"value": fd["value"], "error": fd["error"]}
    else:
        E = product_space.enlarge(A, h, pm)
        out = {"h": h, "measure": product_space.measure(pm, A),
               "enlarged_measure": product_space.measure(pm, E), "enlarged": E.to_json()}
    return {"inputs": inputs, "outputs": out, "verdict": "pass"}


def cmd_influence(args) -> dict:
    mu = _measure(args)
    pm = ProductMeasure.power(mu, args.n)
    A, digest = _set(args)
    if A.n != args.n:
        raise DomainError(f"set has dimension {A.n}, --n is {args.n}")
    h = parse_profile(args.h) if args.h else None
    out = {"influences": influences.influences(pm, A, h),
           "measure": product_space.measure(pm, A)}
    verdict = "pass"
    if args.profile:
        r = influences.kkl_bound_check(pm, A, parse_profile(args.profile), tol=args.tol or 1e-6)
        out["kkl"] = r
        verdict = "fail" if r["verdict"] == "fail" else "pass"
    return {"inputs": {"measure": args.measure, "n": args.n, "set_hash": digest, "h": args.h,
                       "profile": args.profile}, "outputs": out, "verdict": verdict}


def _run_one(number: int, quick: bool, seed: int):
    return suite.CRITERIA[number - 1](quick=quick, seed=seed)


def cmd_suite(args) -> dict:
    picked = [int(c) for c in args.criteria.split(",")] if args.criteria else list(range(1, 13))
    if any(not 1 <= c <= 12 for c in picked):
        raise UsageError("criteria are numbered 1..12")
    if (args.jobs or 1) > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            results = list(ex.map(_run_one, picked, [args.quick] * len(picked),
                                  [args.seed] * len(picked)))
    else:
        results = [_run_one(c, args.quick, args.seed) for c in picked]
    for r in results:
        print(r.line(), file=sys.stderr)
    rows = []
    for r in results:
        d = r.as_dict()
        if not args.timing:
            d.pop("seconds")
        rows.append(d)
    return {"inputs": {"quick": args.quick, "criteria": picked}, "outputs": {"criteria": rows},
            "verdict": "pass" if all(r.passed for r in results) else "fail"}


COMMANDS = {"profile": cmd_profile, "reconstruct": cmd_reconstruct, "check": cmd_check,
            "tensorize": cmd_tensorize, "product": cmd_product, "influence": cmd_influence,
            "suite": cmd_suite}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--measure", help="logistic, dexp, gaussian, uniform, exponential, boltzmann:rho=R")
    common.add_argument("--profile", help="J0, J1, Ent, MinExp, Kbeta:B, Ma:A, file:PATH")
    common.add_argument("--set", help="JSON file with a rectilinear set")
    common.add_argument("--grid", type=int, help="number of grid nodes")
    common.add_argument("--tol", type=float, help="pass/fail tolerance")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--jobs", type=int, default=1, help="worker processes (suite)")
    common.add_argument("--out", help="write the report here instead of stdout")
    common.add_argument("--format", choices=("json", "csv"), help="report format")
    common.add_argument("--timing", action="store_true", help="include wall time (not byte-stable)")

    p = argparse.ArgumentParser(prog="isoperim", description="Isoperimetric profile toolkit")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("profile", parents=[common], help="tabulate J_mu or a catalog profile")
    sub.add_parser("reconstruct", parents=[common], help="measure with a given profile")
    c = sub.add_parser("check", parents=[common], help="condition checks on a profile")
    c.add_argument("--test", choices=CHECKS, required=True)
    t = sub.add_parser("tensorize", parents=[common], help="certified dimension-free bound")
    t.add_argument("--assume-concave", action="store_true")
    q = sub.add_parser("product", parents=[common], help="product-space set operations")
    q.add_argument("--n", type=int, default=2)
    q.add_argument("--op", default="measure", help="measure, boundary, enlarge:H or search")
    q.add_argument("--h", type=float, default=0.1, help="enlargement radius")
    q.add_argument("--t", type=float, default=0.5, help="target measure for search")
    q.add_argument("--family", default="halfspaces", help="halfspaces, quadrants, boxes, staircase(k)")
    i = sub.add_parser("influence", parents=[common], help="geometric or h-influences")
    i.add_argument("--n", type=int, default=2)
    i.add_argument("--h", help="profile for h-influences, e.g. ent (default geometric)")
    i.add_argument("--bound-profile", dest="profile", help="profile J for the KKL-type bound")
    s = sub.add_parser("suite", parents=[common], help="run the acceptance criteria")
    s.add_argument("--quick", action="store_true", help="fewer samples, same tolerances")
    s.add_argument("--criteria", help="comma-separated subset, e.g. 1,3,9")
    return p


def _emit(args, report: dict, table) -> None:
    fmt = args.format or ("csv" if args.command == "profile" else "json")
    if fmt == "csv":
        t, y = table
        lines = ["t,J"] + [f"{a:.17g},{b:.17g}" for a, b in zip(t, y)]
        text = "\n".join(lines) + "\n"
    else:
        text = dumps(_plain(report)) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)


def run(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return int(e.code or 0)
    if args.format == "csv" and args.command != "profile":
        print(f"isoperim: error: {args.command} has no tabular output; use --format json",
              file=sys.stderr)
        return 2
    t0 = time.perf_counter()
    table = None
    try:
        body = COMMANDS[args.command](args)
        table = body.pop("table", None)
        if table is not None and (args.format or "csv") == "json" and args.out:
            side = _side_path(args, "_table.csv")
            write_table(side, *table)
            body.setdefault("artifacts", {})["table_csv"] = str(side)
        code = 0 if body["verdict"] == "pass" else 1
    except (UsageError, DomainError, FileNotFoundError, json.JSONDecodeError) as e:
        print(f"isoperim: error: {e}", file=sys.stderr)
        return 2
    except (PreconditionError, NumericalError) as e:
        echo = {k: getattr(args, k, None) for k in ("measure", "profile", "set")}
        body = {"inputs": {k: v for k, v in echo.items() if v is not None},
                "outputs": {"error": str(e)}, "verdict": "fail"}
        if isinstance(e, PreconditionError):
            body["outputs"]["hypothesis"] = e.hypothesis
            body["verdict"] = "precondition-failed"
        code = 1
    report = {"schema_version": SCHEMA_VERSION, "command": list(sys.argv[1:] if argv is None else argv),
              "seed": args.seed, "artifacts": {}, **body}
    report["inputs"]["hash"] = _hash(dumps(_plain(report["inputs"])))
    if args.timing:
        report["wall_time"] = time.perf_counter() - t0
    _emit(args, report, table)
    return code


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
