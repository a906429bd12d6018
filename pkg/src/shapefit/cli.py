"""Command-line front end.

Subcommands: ``decide`` (feasibility of a chain instance), ``fit`` (weighted
minimax fitting of CSV data under a shape), ``greedy-convex`` (exact
unweighted convex fitting), ``oracle`` (elimination-based cross-check), and
``bench`` (throughput measurement of the compiled engine).

Exit codes: 0 success, 1 bad input (parsing, validation, oversized oracle
request), 2 infeasible instance, 3 fit impossible (contradictory difference
bounds or no level below the search cap).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import sys
import time

import numpy as np

from . import __version__
from .decision import ConstraintSystem, InvalidInput, decide
from .oracle import TooLarge, fm_feasible, from_constraint_system
from .regression import (
    FitProblem,
    LevelCapExceeded,
    ShapeInfeasible,
    encode,
    fit,
    greedy_convex,
)

EXIT_OK = 0
EXIT_BAD_INPUT = 1
EXIT_INFEASIBLE = 2
EXIT_NO_FIT = 3


class _Parser(argparse.ArgumentParser):
    """argparse exits with code 2 on usage errors; keep 2 for 'infeasible'."""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_BAD_INPUT)


# --------------------------------------------------------------------------
# file formats
# --------------------------------------------------------------------------


def _bound_from_json(value, side: str) -> float:
    if value is None:
        return -np.inf if side == "lo" else np.inf
    if isinstance(value, str):
        text = value.strip().lower()
        if text in ("-inf", "-infinity"):
            return -np.inf
        if text in ("inf", "+inf", "infinity", "+infinity"):
            return np.inf
        raise InvalidInput(f"unrecognized bound string {value!r}")
    if isinstance(value, (int, float)):
        return float(value)
    raise InvalidInput(f"bound entries must be numbers, null, or '+-inf': {value!r}")


def _bound_to_json(value: float):
    if np.isposinf(value):
        return None
    if np.isneginf(value):
        return None
    return float(value)


def read_instance(path: str) -> ConstraintSystem:
    """Parse an instance file into a validated ConstraintSystem.

    Format: JSON object with ``n``, value bounds ``xlo``/``xhi`` (length n),
    difference bounds ``ylo``/``yhi`` (length n-1), second-difference bounds
    ``zlo``/``zhi`` and spacings ratio ``alpha`` (length n-2).  Unbounded
    entries are ``null`` or the strings ``"-inf"``/``"+inf"``; omitted bound
    arrays mean fully unbounded, omitted ``alpha`` means all ones.
    """
    with open(path) as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise InvalidInput(
                f"{path}: malformed JSON at line {exc.lineno}, column {exc.colno}: "
                f"{exc.msg}"
            ) from exc
    if not isinstance(raw, dict):
        raise InvalidInput(f"{path}: expected a JSON object at the top level")
    try:
        n = int(raw["n"])
    except (KeyError, TypeError, ValueError):
        raise InvalidInput(f"{path}: missing or non-integer field 'n'") from None

    def bounds(key, length, side):
        if key not in raw or raw[key] is None:
            return [_bound_from_json(None, side)] * length
        entries = raw[key]
        if not isinstance(entries, list) or len(entries) != length:
            raise InvalidInput(f"{path}: field {key!r} must be a list of length {length}")
        return [_bound_from_json(v, side) for v in entries]

    xlo = bounds("xlo", n, "lo")
    xhi = bounds("xhi", n, "hi")
    ylo = bounds("ylo", max(n - 1, 0), "lo")
    yhi = bounds("yhi", max(n - 1, 0), "hi")
    zlo = bounds("zlo", max(n - 2, 0), "lo")
    zhi = bounds("zhi", max(n - 2, 0), "hi")
    if "alpha" in raw and raw["alpha"] is not None:
        alpha = raw["alpha"]
        if not isinstance(alpha, list) or len(alpha) != max(n - 2, 0):
            raise InvalidInput(
                f"{path}: field 'alpha' must be a list of length {max(n - 2, 0)}"
            )
        alpha = [float(a) for a in alpha]
    else:
        alpha = [1.0] * max(n - 2, 0)
    return ConstraintSystem(xlo, xhi, ylo, yhi, zlo, zhi, alpha)


def write_instance(path: str, cs: ConstraintSystem) -> None:
    payload = {
        "n": cs.n,
        "xlo": [_bound_to_json(v) for v in cs.xlo],
        "xhi": [_bound_to_json(v) for v in cs.xhi],
        "ylo": [_bound_to_json(v) for v in cs.ylo],
        "yhi": [_bound_to_json(v) for v in cs.yhi],
        "zlo": [_bound_to_json(v) for v in cs.zlo],
        "zhi": [_bound_to_json(v) for v in cs.zhi],
        "alpha": [float(a) for a in cs.alpha],
    }
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def read_data(path: str):
    """Parse a data file: CSV columns x, y and optionally w.

    A non-numeric first row is treated as a header.  Rows are sorted by x;
    duplicate x values are an error.  Returns (xs, ys, ws_or_None).
    """
    rows = []
    has_w = None
    with open(path, newline="") as fh:
        for lineno, rec in enumerate(csv.reader(fh), start=1):
            rec = [c.strip() for c in rec if c.strip() != ""]
            if not rec:
                continue
            try:
                vals = [float(c) for c in rec]
            except ValueError:
                if lineno == 1:
                    continue  # header
                raise InvalidInput(f"{path}:{lineno}: non-numeric row {rec!r}") from None
            if len(vals) not in (2, 3):
                raise InvalidInput(
                    f"{path}:{lineno}: expected 2 or 3 columns, got {len(vals)}"
                )
            if has_w is None:
                has_w = len(vals) == 3
            elif has_w != (len(vals) == 3):
                raise InvalidInput(f"{path}:{lineno}: inconsistent column count")
            rows.append(vals)
    if not rows:
        raise InvalidInput(f"{path}: no data rows")
    rows.sort(key=lambda rec: rec[0])
    xs = np.array([r[0] for r in rows])
    ys = np.array([r[1] for r in rows])
    ws = np.array([r[2] for r in rows]) if has_w else None
    dup = np.nonzero(np.diff(xs) == 0)[0]
    if dup.size:
        raise InvalidInput(f"{path}: duplicate x value {xs[dup[0]]}")
    return xs, ys, ws


def write_fit_csv(path: str, xs, ys, ws, f) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["x", "y", "w", "f", "weighted_abs_err"])
        for x, y, w, fv in zip(xs, ys, ws, f):
            writer.writerow([repr(float(x)), repr(float(y)), repr(float(w)),
                             repr(float(fv)), repr(float(w * abs(fv - y)))])


def write_plot_json(path: str, xs, ys, ws, f, level: float) -> None:
    band = []
    for x, y, w in zip(xs, ys, ws):
        if w > 0:
            band.append([float(x), float(y - level / w), float(y + level / w)])
        else:
            band.append([float(x), None, None])
    payload = {
        "data": [[float(x), float(y), float(w)] for x, y, w in zip(xs, ys, ws)],
        "fit": [[float(x), float(v)] for x, v in zip(xs, f)],
        "band": band,
    }
    with open(path, "w") as fh:
        json.dump(payload, fh)
        fh.write("\n")


# --------------------------------------------------------------------------
# subcommands
# --------------------------------------------------------------------------


def cmd_decide(args) -> int:
    cs = read_instance(args.input)
    result = decide(cs, engine=args.engine)
    if not result.feasible:
        print(json.dumps({"verdict": "infeasible", "fail_step": result.fail_step}))
        return EXIT_INFEASIBLE
    summary = {
        "verdict": "feasible",
        "n": cs.n,
        "stats": {
            "vertices_added": result.stats.vertices_added,
            "vertices_removed": result.stats.vertices_removed,
            "peak_live_vertices": result.stats.peak_live_vertices,
        },
    }
    if args.witness:
        with open(args.witness, "w") as fh:
            json.dump({"b": [float(v) for v in result.witness]}, fh)
            fh.write("\n")
        summary["witness_file"] = args.witness
    else:
        summary["b"] = [float(v) for v in result.witness]
    print(json.dumps(summary))
    return EXIT_OK


def cmd_oracle(args) -> int:
    cs = read_instance(args.input)
    result = fm_feasible(from_constraint_system(cs))
    if not result.feasible:
        print(json.dumps({"verdict": "infeasible"}))
        return EXIT_INFEASIBLE
    print(json.dumps({"verdict": "feasible",
                      "b": [float(v) for v in result.witness]}))
    return EXIT_OK


def _shape_key(shape: str) -> str:
    return shape.replace("-", "_")


def cmd_fit(args) -> int:
    xs, ys, ws = read_data(args.input)
    custom = {}
    if args.custom_bounds:
        with open(args.custom_bounds) as fh:
            try:
                raw = json.load(fh)
            except json.JSONDecodeError as exc:
                raise InvalidInput(
                    f"{args.custom_bounds}: malformed JSON at line {exc.lineno}: "
                    f"{exc.msg}"
                ) from exc
        for key in ("slope_lo", "slope_hi", "curv_lo", "curv_hi"):
            if key in raw and raw[key] is not None:
                val = raw[key]
                side = "lo" if key.endswith("lo") else "hi"
                if isinstance(val, list):
                    custom[key] = [_bound_from_json(v, side) for v in val]
                else:
                    custom[key] = _bound_from_json(val, side)
    fp = FitProblem.with_shape(
        xs, ys, ws, shape=_shape_key(args.shape), k=args.lipschitz_k, **custom
    )
    result = fit(fp, epsilon=args.epsilon, engine=args.engine)
    wvec = fp.ws
    write_fit_csv(args.output, xs, ys, wvec, result.f)
    if args.plot:
        write_plot_json(args.plot, xs, ys, wvec, result.f, result.level)
    if args.dump_instance:
        if fp.n >= 2:
            write_instance(args.dump_instance, encode(fp, result.level))
        else:
            raise InvalidInput("--dump-instance needs at least two data points")
    print(f"level {result.level!r}")
    print(f"certified_lower {result.certified_lower!r}")
    print(f"iterations {result.iterations}")
    return EXIT_OK


def cmd_greedy_convex(args) -> int:
    xs, ys, ws = read_data(args.input)
    if ws is not None and np.any(ws != 1.0):
        raise InvalidInput(
            "greedy-convex handles uniform weights only; use 'fit --shape convex' "
            "for weighted data"
        )
    delta, fitted = greedy_convex(ys, xs)
    wvec = np.ones(xs.size)
    if args.output:
        write_fit_csv(args.output, xs, ys, wvec, fitted)
    print(f"delta {delta!r}")
    return EXIT_OK


def _bench_instance(n: int, seed: int, shape: str = "convex"):
    rng = np.random.default_rng(seed)
    xs = np.arange(n, dtype=float)
    t = np.linspace(-1.0, 1.0, n)
    ys = 3.0 * t * t + rng.uniform(-0.25, 0.25, n)
    fp = FitProblem.with_shape(xs, ys, shape=shape)
    # the full data range is feasible for every preset that admits a constant
    # function, which all of them do
    level = float(np.max(ys) - np.min(ys))
    return fp, encode(fp, level)


def cmd_bench(args) -> int:
    sizes = []
    for part in args.sizes.split(","):
        part = part.strip()
        if part:
            sizes.append(int(float(part)))
    if not sizes:
        raise InvalidInput("no sizes given")

    # warm the compiled kernel outside the timed region
    _, warm_cs = _bench_instance(max(sizes[0], 16), args.seed, args.shape)
    decide(warm_cs, engine="fast")

    print(f"{'n':>9}  {'checksum':>12}  {'median_s':>10}  {'ns_per_elem':>12}  verdict")
    for n in sizes:
        fp, cs = _bench_instance(n, args.seed, args.shape)
        digest = hashlib.sha256(fp.ys.tobytes()).hexdigest()[:12]
        times = []
        verdict = "?"
        for _ in range(args.repeats):
            t0 = time.perf_counter()
            result = decide(cs, engine="fast")
            times.append(time.perf_counter() - t0)
            verdict = result.verdict
        median = sorted(times)[len(times) // 2]
        print(
            f"{n:>9}  {digest:>12}  {median:>10.4f}  {median / n * 1e9:>12.1f}  {verdict}"
        )
    return EXIT_OK


def main(argv=None) -> int:
    parser = _Parser(prog="shapefit", description=__doc__.split("\n")[0])
    parser.add_argument("--version", action="version", version=f"shapefit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decide", help="decide feasibility of an instance file")
    p.add_argument("--input", required=True, help="instance JSON file")
    p.add_argument("--witness", help="write the witness vector to this JSON file")
    p.add_argument("--engine", default="auto", choices=["auto", "python", "fast"])
    p.set_defaults(func=cmd_decide)

    p = sub.add_parser("fit", help="fit CSV data under a shape constraint")
    p.add_argument("--input", required=True, help="CSV data file (x,y[,w])")
    p.add_argument(
        "--shape",
        required=True,
        choices=["isotonic", "antitonic", "lipschitz", "convex", "concave",
                 "convex-isotonic", "custom"],
    )
    p.add_argument("--lipschitz-k", type=float, default=None,
                   help="slope magnitude bound for --shape lipschitz")
    p.add_argument("--custom-bounds",
                   help="JSON file with slope_lo/slope_hi/curv_lo/curv_hi")
    p.add_argument("--epsilon", type=float, default=1e-6,
                   help="bisection stopping width (default 1e-6)")
    p.add_argument("--output", required=True, help="fitted CSV output path")
    p.add_argument("--plot", help="write plot-ready JSON here")
    p.add_argument("--dump-instance",
                   help="write the encoded instance at the found level here")
    p.add_argument("--engine", default="auto", choices=["auto", "python", "fast"])
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("greedy-convex",
                       help="exact unweighted convex fit of CSV data")
    p.add_argument("--input", required=True, help="CSV data file (x,y)")
    p.add_argument("--output", help="fitted CSV output path")
    p.set_defaults(func=cmd_greedy_convex)

    p = sub.add_parser("oracle", help="cross-check an instance by elimination")
    p.add_argument("--input", required=True, help="instance JSON file")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("bench", help="time the compiled engine on synthetic data")
    p.add_argument("--sizes", default="10000,100000,1000000",
                   help="comma-separated instance sizes")
    p.add_argument("--shape", default="convex",
                   choices=["isotonic", "antitonic", "convex", "concave",
                            "convex_isotonic"],
                   help="shape preset for the generated instances")
    p.add_argument("--repeats", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_bench)

    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (InvalidInput, TooLarge) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT
    except (ShapeInfeasible, LevelCapExceeded) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_FIT
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    raise SystemExit(main())
