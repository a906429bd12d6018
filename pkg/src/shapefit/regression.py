"""Weighted L-infinity curve fitting under difference constraints.

A fitting problem fixes sites ``xs``, observations ``ys``, nonnegative
weights ``ws``, and interval bounds on the divided first and second
differences of the fitted vector.  The minimax level is found by bisection:
each probe level turns into a chain constraint system (a band around the data
plus the scaled difference bounds) and goes to the feasibility solver.  An
exact greedy construction covers the classical unweighted convex case.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decision import ConstraintSystem, InvalidInput, decide

PRESET_SHAPES = (
    "isotonic",
    "antitonic",
    "lipschitz",
    "convex",
    "concave",
    "convex_isotonic",
    "custom",
)


class ShapeInfeasible(ValueError):
    """The difference bounds alone are contradictory: no vector satisfies
    them regardless of how far it strays from the data."""


class LevelCapExceeded(RuntimeError):
    """No feasible level was found below the search cap; the problem is
    effectively unbounded for this data/bounds combination."""


def preset(shape: str, n: int, xs=None, k: float | None = None,
           slope_lo=None, slope_hi=None, curv_lo=None, curv_hi=None):
    """Difference bounds for a named shape family.

    Returns ``(slope_lo, slope_hi, curv_lo, curv_hi)`` with lengths
    ``(n-1, n-1, n-2, n-2)``.  ``lipschitz`` needs ``k``; ``custom`` passes
    the caller's arrays through (missing ones stay unbounded).  ``xs`` is
    accepted for symmetry with the encoder but not needed here: these bounds
    constrain the divided differences, which are already per-unit-x.
    """
    if n < 1:
        raise InvalidInput("n must be at least 1")
    s_lo = np.full(max(n - 1, 0), -np.inf)
    s_hi = np.full(max(n - 1, 0), np.inf)
    c_lo = np.full(max(n - 2, 0), -np.inf)
    c_hi = np.full(max(n - 2, 0), np.inf)
    if shape == "isotonic":
        s_lo[:] = 0.0
    elif shape == "antitonic":
        s_hi[:] = 0.0
    elif shape == "lipschitz":
        if k is None or not np.isfinite(k) or k < 0:
            raise InvalidInput("lipschitz preset needs a finite k >= 0")
        s_lo[:] = -float(k)
        s_hi[:] = float(k)
    elif shape == "convex":
        c_lo[:] = 0.0
    elif shape == "concave":
        c_hi[:] = 0.0
    elif shape == "convex_isotonic":
        s_lo[:] = 0.0
        c_lo[:] = 0.0
    elif shape == "custom":
        if slope_lo is not None:
            s_lo[:] = slope_lo
        if slope_hi is not None:
            s_hi[:] = slope_hi
        if curv_lo is not None:
            c_lo[:] = curv_lo
        if curv_hi is not None:
            c_hi[:] = curv_hi
    else:
        raise InvalidInput(
            f"unknown shape {shape!r}; expected one of {PRESET_SHAPES}"
        )
    return s_lo, s_hi, c_lo, c_hi


class FitProblem:
    """Sites, observations, weights, and divided-difference bounds."""

    __slots__ = ("xs", "ys", "ws", "slope_lo", "slope_hi", "curv_lo", "curv_hi")

    def __init__(self, xs, ys, ws=None, slope_lo=None, slope_hi=None,
                 curv_lo=None, curv_hi=None):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        ys = np.atleast_1d(np.asarray(ys, dtype=float))
        n = xs.size
        if n < 1:
            raise InvalidInput("need at least one data point")
        if ys.size != n:
            raise InvalidInput(f"ys has length {ys.size}, expected {n}")
        if not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
            raise InvalidInput("xs and ys must be finite")
        if np.any(np.diff(xs) <= 0):
            raise InvalidInput("xs must be strictly increasing")
        if ws is None:
            ws = np.ones(n)
        else:
            ws = np.atleast_1d(np.asarray(ws, dtype=float))
            if ws.size != n:
                raise InvalidInput(f"ws has length {ws.size}, expected {n}")
            if not np.all(np.isfinite(ws)) or np.any(ws < 0):
                raise InvalidInput("weights must be finite and nonnegative")

        def bound(name, value, length, default):
            if value is None:
                return np.full(length, default)
            arr = np.atleast_1d(np.asarray(value, dtype=float))
            if arr.size == 1 and length > 1:
                arr = np.full(length, float(arr[0]))
            if arr.size != length:
                raise InvalidInput(f"{name} has length {arr.size}, expected {length}")
            if np.isnan(arr).any():
                raise InvalidInput(f"{name} contains NaN")
            return arr

        self.xs, self.ys, self.ws = xs, ys, ws
        self.slope_lo = bound("slope_lo", slope_lo, max(n - 1, 0), -np.inf)
        self.slope_hi = bound("slope_hi", slope_hi, max(n - 1, 0), np.inf)
        self.curv_lo = bound("curv_lo", curv_lo, max(n - 2, 0), -np.inf)
        self.curv_hi = bound("curv_hi", curv_hi, max(n - 2, 0), np.inf)
        if np.any(self.slope_lo > self.slope_hi):
            raise InvalidInput("slope_lo exceeds slope_hi somewhere")
        if np.any(self.curv_lo > self.curv_hi):
            raise InvalidInput("curv_lo exceeds curv_hi somewhere")

    @property
    def n(self) -> int:
        return self.xs.size

    @classmethod
    def with_shape(cls, xs, ys, ws=None, shape="custom", k=None, **custom):
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        bounds = preset(shape, xs.size, xs, k=k, **custom)
        return cls(xs, ys, ws, *bounds)

    def __repr__(self) -> str:
        return f"FitProblem(n={self.n})"


@dataclass
class FitResult:
    f: np.ndarray
    level: float
    certified_lower: float
    iterations: int
    epsilon: float


def encode(fp: FitProblem, level: float) -> ConstraintSystem:
    """Chain constraint system whose feasible vectors are exactly the shapes
    within weighted distance ``level`` of the data.

    Value bands are ``ys_i +- level / ws_i`` (unbounded where the weight is
    zero); slope and curvature bounds are rescaled by the site spacings so
    the chain rows are in terms of raw differences.
    """
    if fp.n < 2:
        raise InvalidInput("encoding needs at least two data points")
    if not np.isfinite(level) or level < 0:
        raise InvalidInput(f"level must be finite and nonnegative, got {level}")
    with np.errstate(divide="ignore"):
        half = np.where(fp.ws > 0, level / np.where(fp.ws > 0, fp.ws, 1.0), np.inf)
    xlo = fp.ys - half
    xhi = fp.ys + half
    dx = np.diff(fp.xs)
    ylo = fp.slope_lo * dx
    yhi = fp.slope_hi * dx
    dx2 = dx[1:]
    zlo = fp.curv_lo * dx2 * dx2
    zhi = fp.curv_hi * dx2 * dx2
    alpha = dx2 / dx[:-1]
    return ConstraintSystem(xlo, xhi, ylo, yhi, zlo, zhi, alpha)


def residual(fp: FitProblem, f) -> float:
    """Weighted worst-case deviation of ``f`` from the data."""
    f = np.asarray(f, dtype=float)
    if f.size != fp.n:
        raise InvalidInput(f"f has length {f.size}, expected {fp.n}")
    return float(np.max(fp.ws * np.abs(f - fp.ys))) if fp.n else 0.0


def fit(fp: FitProblem, epsilon: float = 1e-6, engine: str = "auto") -> FitResult:
    """Minimize the weighted worst-case deviation over the shape family.

    Bisects the level: zero first (frequent in clean data, and exact), then
    the constant-fit level ``max(ws) * (max(ys) - min(ys))``, which bounds the
    optimum whenever the shape family contains constants; if even that is
    infeasible the level doubles until a cap derived from the bound magnitudes
    is hit.  Stops when the bracket is narrower than ``epsilon``; the returned
    level is the realized residual of the witness, and ``certified_lower`` is
    the largest level proven infeasible.
    """
    if not isinstance(fp, FitProblem):
        raise InvalidInput("fit() expects a FitProblem")
    if not np.isfinite(epsilon) or epsilon <= 0:
        raise InvalidInput(f"epsilon must be positive, got {epsilon}")
    if fp.n == 1:
        return FitResult(
            f=fp.ys.copy(), level=0.0, certified_lower=0.0,
            iterations=0, epsilon=epsilon,
        )

    iterations = 0

    def probe(level):
        nonlocal iterations
        iterations += 1
        return decide(encode(fp, level), engine=engine)

    res = probe(0.0)
    if res.feasible:
        f = res.witness
        return FitResult(
            f=f, level=residual(fp, f), certified_lower=0.0,
            iterations=iterations, epsilon=epsilon,
        )

    level0 = float(np.max(fp.ws) * (np.max(fp.ys) - np.min(fp.ys)))
    lo = 0.0
    hi = None
    best = None
    if level0 > 0.0:
        res = probe(level0)
        if res.feasible:
            hi, best = level0, res
    if hi is None:
        # not bracketed by the constant-fit level: either the shape family is
        # empty outright or it just excludes constants; tell the two apart,
        # then hunt for a bracket by doubling
        lo = max(level0, 0.0)
        iterations += 1
        if not decide(encode(fp, 1.0).without_value_bounds(), engine=engine).feasible:
            raise ShapeInfeasible("difference bounds alone are contradictory")
        cap = encode(fp, max(level0, 1.0)).big_m()
        level = max(level0, 1.0)
        while True:
            level *= 2.0
            if level > cap:
                raise LevelCapExceeded(f"no feasible level found below {cap:g}")
            res = probe(level)
            if res.feasible:
                hi, best = level, res
                break
            lo = level

    while hi - lo > epsilon:
        mid = 0.5 * (lo + hi)
        res = probe(mid)
        if res.feasible:
            hi, best = mid, res
        else:
            lo = mid

    f = best.witness
    return FitResult(
        f=f, level=residual(fp, f), certified_lower=lo,
        iterations=iterations, epsilon=epsilon,
    )


def greedy_convex(a, xs=None) -> tuple[float, np.ndarray]:
    """Exact unweighted L-infinity convex fit.

    The optimum is the lower convex hull of the points lifted by half the
    largest hull-to-data gap: the hull is the tightest convex minorant, and
    raising it by half the worst gap splits every deviation evenly.  Returns
    ``(delta, fitted)`` where ``delta`` is the optimal deviation.
    """
    a = np.atleast_1d(np.asarray(a, dtype=float))
    n = a.size
    if n == 0:
        raise InvalidInput("need at least one value")
    if not np.all(np.isfinite(a)):
        raise InvalidInput("values must be finite")
    if xs is None:
        xs = np.arange(n, dtype=float)
    else:
        xs = np.atleast_1d(np.asarray(xs, dtype=float))
        if xs.size != n:
            raise InvalidInput(f"xs has length {xs.size}, expected {n}")
        if not np.all(np.isfinite(xs)) or np.any(np.diff(xs) <= 0):
            raise InvalidInput("xs must be finite and strictly increasing")
    if n <= 2:
        return 0.0, a.copy()

    hull = [0]
    for i in range(1, n):
        while len(hull) >= 2:
            o, p = hull[-2], hull[-1]
            cross = (xs[p] - xs[o]) * (a[i] - a[o]) - (a[p] - a[o]) * (xs[i] - xs[o])
            if cross <= 0.0:
                hull.pop()
            else:
                break
        hull.append(i)
    hull_arr = np.asarray(hull)
    minorant = np.interp(xs, xs[hull_arr], a[hull_arr])
    delta = float(np.max(a - minorant)) / 2.0
    return delta, minorant + delta
