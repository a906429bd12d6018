"""Feasibility decisions for chains of interval constraints.

Input: intervals on the values ``b_i``, on the consecutive differences
``b_i - b_{i-1}``, and on the scaled second differences
``(b_i - b_{i-1}) - alpha_i * (b_{i-1} - b_{i-2})``.  The solver sweeps the
chain once, maintaining the convex polygon of pairs (value, difference) that
some feasible prefix can end with.  Each step shears the previous polygon and
clips it with at most four axis-aligned half-planes; both hull chains are kept
behind lazily composed affine maps, so the sweep is O(n) total.  A mutation
log makes the sweep reversible, which is how the witness backtrace works.
"""

from __future__ import annotations

import os
import warnings
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .geometry import (
    AffineMap,
    HomoPoint,
    HullDeque,
    OpLog,
    apply,
    compose,
    cut_left,
    cut_right,
    invert,
    rollback_step,
)

TOL_ENV_VAR = "SHAPEFIT_TOL"
DEFAULT_TOL_BASE = 1e-12
CHECK_TOL_BASE = 1e-9

# Below this size the pure-Python engine is used by default; beyond it the
# compiled kernel pays for its dispatch overhead many times over.
FAST_ENGINE_MIN_N = 512

# The cumulative transforms are folded into the stored vertices whenever a
# component outgrows this limit (translations are measured relative to the
# coordinate scale).  Unbounded transforms would otherwise erode the absolute
# precision of every vertex read back through them.
REBASE_LIMIT = 256.0


class InvalidInput(ValueError):
    """Raised for malformed constraint systems (sizes, NaN, alpha <= 0, lo > hi)."""


class InternalConsistencyError(RuntimeError):
    """Raised when the backtrace leaves the recorded hull by more than the
    checking tolerance; indicates a bug or pathological conditioning."""


def _as_float_array(name: str, value, length: int | None = None) -> np.ndarray:
    arr = np.atleast_1d(np.asarray(value, dtype=float))
    if arr.ndim != 1:
        raise InvalidInput(f"{name} must be one-dimensional")
    if length is not None and arr.size != length:
        raise InvalidInput(f"{name} has length {arr.size}, expected {length}")
    if np.isnan(arr).any():
        raise InvalidInput(f"{name} contains NaN")
    return arr


class ConstraintSystem:
    """Interval bounds along a chain of n unknowns.

    ``xlo/xhi`` (length n) bound the values; ``ylo/yhi`` (length n-1) bound
    the differences ``b_i - b_{i-1}`` for i = 2..n; ``zlo/zhi`` and ``alpha``
    (length n-2) bound ``(b_i - b_{i-1}) - alpha_i*(b_{i-1} - b_{i-2})`` for
    i = 3..n.  Entries may be ``+-inf`` (no constraint); alphas must be
    positive and finite.
    """

    __slots__ = ("n", "xlo", "xhi", "ylo", "yhi", "zlo", "zhi", "alpha")

    def __init__(self, xlo, xhi, ylo, yhi, zlo=None, zhi=None, alpha=None):
        xlo = _as_float_array("xlo", xlo)
        n = xlo.size
        if n < 2:
            raise InvalidInput(f"need at least two values, got n={n}")
        xhi = _as_float_array("xhi", xhi, n)
        ylo = _as_float_array("ylo", ylo, n - 1)
        yhi = _as_float_array("yhi", yhi, n - 1)
        if zlo is None:
            zlo = np.full(n - 2, -np.inf)
        if zhi is None:
            zhi = np.full(n - 2, np.inf)
        if alpha is None:
            alpha = np.ones(n - 2)
        zlo = _as_float_array("zlo", zlo, n - 2)
        zhi = _as_float_array("zhi", zhi, n - 2)
        alpha = _as_float_array("alpha", alpha, n - 2)
        if not np.all((alpha > 0.0) & np.isfinite(alpha)):
            raise InvalidInput("alpha entries must be positive and finite")
        for name, lo, hi in (("x", xlo, xhi), ("y", ylo, yhi), ("z", zlo, zhi)):
            if np.any(lo > hi):
                bad = int(np.argmax(lo > hi))
                raise InvalidInput(
                    f"{name}lo[{bad}]={lo[bad]} exceeds {name}hi[{bad}]={hi[bad]}"
                )
        self.n = int(n)
        self.xlo, self.xhi = xlo, xhi
        self.ylo, self.yhi = ylo, yhi
        self.zlo, self.zhi = zlo, zhi
        self.alpha = alpha

    def __repr__(self) -> str:
        return f"ConstraintSystem(n={self.n})"

    def __eq__(self, other) -> bool:
        if not isinstance(other, ConstraintSystem):
            return NotImplemented
        return self.n == other.n and all(
            np.array_equal(getattr(self, f), getattr(other, f))
            for f in ("xlo", "xhi", "ylo", "yhi", "zlo", "zhi", "alpha")
        )

    # -- derived scales -----------------------------------------------------

    def magnitude(self) -> float:
        """Largest |finite bound| across all six bound arrays (0 if none)."""
        m = 0.0
        for arr in (self.xlo, self.xhi, self.ylo, self.yhi, self.zlo, self.zhi):
            finite = arr[np.isfinite(arr)]
            if finite.size:
                m = max(m, float(np.abs(finite).max()))
        return m

    def tolerances(self) -> tuple[float, float]:
        """(geometry tolerance, consistency-check tolerance) for this system."""
        base = float(os.environ.get(TOL_ENV_VAR, DEFAULT_TOL_BASE))
        scale = 1.0 + self.magnitude()
        return base * scale, CHECK_TOL_BASE * scale

    def big_m(self) -> float:
        """Stand-in magnitude for unbounded entries.

        Any feasible system that stays feasible after replacing infinities by
        +-big_m admits a witness well inside the box in practice; a witness
        that lands on one of these synthetic walls is treated as suspicious
        and triggers a single re-solve with a wider box (see :func:`decide`).
        """
        xmax = 0.0
        finite_x = np.concatenate(
            [self.xlo[np.isfinite(self.xlo)], self.xhi[np.isfinite(self.xhi)]]
        )
        if finite_x.size:
            xmax = float(np.abs(finite_x).max())
        total = 4.0 * (1.0 + xmax)
        for lo, hi in ((self.ylo, self.yhi), (self.zlo, self.zhi)):
            mag = np.maximum(
                np.where(np.isfinite(lo), np.abs(lo), 0.0),
                np.where(np.isfinite(hi), np.abs(hi), 0.0),
            )
            total += float(mag.sum())
        amax = float(self.alpha.max()) if self.alpha.size else 1.0
        return total * max(1.0, amax)

    def clamped(self, big_m: float | None = None) -> "ConstraintSystem":
        """Copy with every infinite bound replaced by +-big_m."""
        if big_m is None:
            big_m = self.big_m()
        out = ConstraintSystem.__new__(ConstraintSystem)
        out.n = self.n
        for lo_name, hi_name in (("xlo", "xhi"), ("ylo", "yhi"), ("zlo", "zhi")):
            lo = getattr(self, lo_name).copy()
            hi = getattr(self, hi_name).copy()
            lo[~np.isfinite(lo)] = -big_m
            hi[~np.isfinite(hi)] = big_m
            setattr(out, lo_name, lo)
            setattr(out, hi_name, hi)
        out.alpha = self.alpha.copy()
        return out

    def without_value_bounds(self) -> "ConstraintSystem":
        """Copy with the value intervals removed (difference bounds only)."""
        out = ConstraintSystem.__new__(ConstraintSystem)
        out.n = self.n
        out.xlo = np.full(self.n, -np.inf)
        out.xhi = np.full(self.n, np.inf)
        out.ylo, out.yhi = self.ylo.copy(), self.yhi.copy()
        out.zlo, out.zhi = self.zlo.copy(), self.zhi.copy()
        out.alpha = self.alpha.copy()
        return out


def constraint_violation(cs: ConstraintSystem, b) -> float:
    """Largest amount by which ``b`` violates any row of ``cs`` (0 if none)."""
    b = np.asarray(b, dtype=float)
    if b.size != cs.n:
        raise InvalidInput(f"witness has length {b.size}, expected {cs.n}")
    worst = 0.0
    diffs = b[1:] - b[:-1]
    second = diffs[1:] - cs.alpha * diffs[:-1]
    for val, lo, hi in (
        (b, cs.xlo, cs.xhi),
        (diffs, cs.ylo, cs.yhi),
        (second, cs.zlo, cs.zhi),
    ):
        if val.size:
            low = lo - val
            high = val - hi
            low = low[np.isfinite(low)]
            high = high[np.isfinite(high)]
            if low.size:
                worst = max(worst, float(low.max()))
            if high.size:
                worst = max(worst, float(high.max()))
    return max(worst, 0.0)


# --------------------------------------------------------------------------
# Polygon state
# --------------------------------------------------------------------------


class StepOutcome(Enum):
    CONTINUE = "continue"
    EMPTIED = "emptied"


@dataclass
class FeasibilityPolygon:
    """Reachable (value, difference) pairs after a prefix of the chain.

    ``u`` is the upper hull and ``v`` the lower hull; both store vertices
    pre-multiplied by the inverses of the cumulative transforms ``Su``/``Sv``,
    so the actual plane coordinates of a stored vertex are ``apply(S, pt)``.
    """

    u: HullDeque
    v: HullDeque
    Su: AffineMap
    Sv: AffineMap
    step: int
    log: OpLog
    tol: float = 0.0
    scale: float = 1.0

    def is_empty(self) -> bool:
        return self.u.is_empty() or self.v.is_empty()

    def upper_points(self) -> list[HomoPoint]:
        return [apply(self.Su, pt) for pt in self.u.live()]

    def lower_points(self) -> list[HomoPoint]:
        return [apply(self.Sv, pt) for pt in self.v.live()]

    def live_vertices(self) -> int:
        return max(self.u.size(), 0) + max(self.v.size(), 0)

    def vertex_count(self, join_tol: float | None = None) -> int:
        """Number of distinct polygon corners (hull endpoints may coincide)."""
        if self.is_empty():
            return 0
        tol = self.tol if join_tol is None else join_tol
        count = self.u.size() + self.v.size()
        uf, vf = apply(self.Su, self.u.front()), apply(self.Sv, self.v.front())
        if abs(uf.x - vf.x) <= tol and abs(uf.y - vf.y) <= tol:
            count -= 1
        ub, vb = apply(self.Su, self.u.back()), apply(self.Sv, self.v.back())
        if abs(ub.x - vb.x) <= tol and abs(ub.y - vb.y) <= tol:
            count -= 1
        return max(count, 1)

    def min_edge_slope(self) -> float:
        """Smallest slope over consecutive vertices of both transformed hulls."""
        worst = np.inf
        for pts in (self.upper_points(), self.lower_points()):
            for a, b in zip(pts, pts[1:]):
                dx = b.x - a.x
                if dx > 0.0:
                    worst = min(worst, (b.y - a.y) / dx)
        return worst

    def snapshot(self) -> tuple:
        """Exact structural state; equal snapshots mean bitwise-equal states."""
        return (
            self.step,
            tuple((pt.x, pt.y) for pt in self.u.live()),
            tuple((pt.x, pt.y) for pt in self.v.live()),
            (self.Su.p, self.Su.q, self.Su.r, self.Su.s),
            (self.Sv.p, self.Sv.q, self.Sv.r, self.Sv.s),
            (self.u.left_index, self.u.right_index),
            (self.v.left_index, self.v.right_index),
        )


def _chain_xs(x_left: float, breakpoint: float, x_right: float, tol: float) -> list[float]:
    xs = [x_left]
    if x_left + tol < breakpoint < x_right - tol:
        xs.append(breakpoint)
    if x_right > x_left + tol:
        xs.append(x_right)
    return xs


def init_p2(cs: ConstraintSystem, tol: float = 0.0, strict: bool = False) -> FeasibilityPolygon:
    """Polygon for the two-element prefix, built directly.

    The reachable set is the box ``xlo1 <= b1 <= xhi1``, ``xlo2 <= x <= xhi2``
    shadowed onto (x, y) = (b2, b2 - b1) with ``ylo2 <= y <= yhi2``: a
    trapezoid whose oblique edges have slope one.  Empty deques signal an
    infeasible prefix.  Bounds must already be finite (clamped).
    """
    x1lo, x1hi = float(cs.xlo[0]), float(cs.xhi[0])
    x2lo, x2hi = float(cs.xlo[1]), float(cs.xhi[1])
    ylo, yhi = float(cs.ylo[0]), float(cs.yhi[0])

    x_left = max(x2lo, x1lo + ylo)
    x_right = min(x2hi, x1hi + yhi)

    upper: list[HomoPoint] = []
    lower: list[HomoPoint] = []
    if x_left <= x_right + tol:
        xr = max(x_right, x_left)
        for x in _chain_xs(x_left, x1lo + yhi, xr, tol):
            upper.append(HomoPoint(x, min(x - x1lo, yhi)))
        for x in _chain_xs(x_left, x1hi + ylo, xr, tol):
            lower.append(HomoPoint(x, max(x - x1hi, ylo)))

    budget_u = len(upper) + 6 * (cs.n - 2)
    budget_v = len(lower) + 6 * (cs.n - 2)
    u = HullDeque.from_points("u", upper, 2 * budget_u + 16, strict)
    v = HullDeque.from_points("v", lower, 2 * budget_v + 16, strict)
    return FeasibilityPolygon(
        u=u, v=v, Su=AffineMap.identity(), Sv=AffineMap.identity(),
        step=2, log=OpLog(), tol=tol, scale=cs.magnitude(),
    )


def _needs_rebase(m: AffineMap, scale: float) -> bool:
    t = REBASE_LIMIT * (1.0 + scale)
    return (
        abs(m.p) > REBASE_LIMIT
        or abs(m.r) > REBASE_LIMIT
        or abs(m.r) * REBASE_LIMIT < 1.0
        or abs(m.q) > t
        or abs(m.s) > t
    )


def _rebase_hull(d: HullDeque, m: AffineMap, log: OpLog) -> None:
    """Fold a cumulative transform into the stored coordinates."""
    old = tuple(d.live())
    log.record(("rebase", d.name, old))
    idx = d.left_index
    for pt in old:
        d.set_at(idx, apply(m, pt))
        idx += 1


def advance(p: FeasibilityPolygon, cs: ConstraintSystem) -> StepOutcome:
    """Extend the polygon by one chain element, logging every mutation.

    Sequence: shear both transforms; copy each hull's far endpoint onto the
    other hull (the shear maps the old polygon's vertical extent at each end
    onto oblique segments whose endpoints now belong to opposite hulls); clip
    to the value interval, reconcile vertical ends, clip to the difference
    interval, drop duplicate-x vertices, and restore the corners horizontal
    clips may have taken off the opposite hull.

    When either cumulative transform has outgrown REBASE_LIMIT it is folded
    into the stored vertices first, so coordinates are always read through
    maps of bounded magnitude.
    """
    i = p.step + 1
    alpha = float(cs.alpha[i - 3])
    zlo, zhi = float(cs.zlo[i - 3]), float(cs.zhi[i - 3])
    xlo, xhi = float(cs.xlo[i - 1]), float(cs.xhi[i - 1])
    ylo, yhi = float(cs.ylo[i - 2]), float(cs.yhi[i - 2])
    u, v, log, tol = p.u, p.v, p.log, p.tol

    log.begin_step(i)
    log.record(("map", "u", (p.Su.p, p.Su.q, p.Su.r, p.Su.s)))
    log.record(("map", "v", (p.Sv.p, p.Sv.q, p.Sv.r, p.Sv.s)))
    if _needs_rebase(p.Su, p.scale) or _needs_rebase(p.Sv, p.scale):
        _rebase_hull(u, p.Su, log)
        _rebase_hull(v, p.Sv, log)
        p.Su = AffineMap.identity()
        p.Sv = AffineMap.identity()
    p.Su = compose(AffineMap.shear(alpha, zhi), p.Su)
    p.Sv = compose(AffineMap.shear(alpha, zlo), p.Sv)
    p.step = i

    # Far endpoints swap hulls under the shear: the image of the lower-left
    # corner now starts the upper chain, the image of the upper-right corner
    # now ends the lower chain.
    u.push_front(apply(invert(p.Su), apply(p.Sv, v.front())), log)
    v.push_back(apply(invert(p.Sv), apply(p.Su, u.back())), log)

    for d, m in ((u, p.Su), (v, p.Sv)):
        if cut_left(d, m, "x", xlo, log, tol).emptied:
            return StepOutcome.EMPTIED
        if cut_right(d, m, "x", xhi, log, tol).emptied:
            return StepOutcome.EMPTIED

    # Vertical cut edges leave one hull short of the other's extremes.
    if apply(p.Su, u.front()).y > apply(p.Sv, v.front()).y + tol:
        u.push_front(apply(invert(p.Su), apply(p.Sv, v.front())), log)
    if apply(p.Su, u.back()).y > apply(p.Sv, v.back()).y + tol:
        v.push_back(apply(invert(p.Sv), apply(p.Su, u.back())), log)

    ll_u = ur_v = None
    for d, m in ((u, p.Su), (v, p.Sv)):
        if cut_left(d, m, "y", ylo, log, tol).emptied:
            return StepOutcome.EMPTIED
        if cut_right(d, m, "y", yhi, log, tol).emptied:
            return StepOutcome.EMPTIED
        if d is u:
            ll_u = apply(m, d.front())
        else:
            ur_v = apply(m, d.back())
        # Cuts can leave stacked same-x vertices; the upper hull keeps the
        # higher of each stack, the lower hull the lower, so only a dominated
        # end vertex may be dropped.
        keep_high = d is u
        while d.size() >= 2:
            a, c = apply(m, d.front()), apply(m, d.snd_front())
            dominated = a.y <= c.y if keep_high else a.y >= c.y
            if abs(a.x - c.x) > tol or not dominated:
                break
            d.pop_front(log)
        while d.size() >= 2:
            a, c = apply(m, d.back()), apply(m, d.snd_back())
            dominated = a.y <= c.y if keep_high else a.y >= c.y
            if abs(a.x - c.x) > tol or not dominated:
                break
            d.pop_back(log)

    # A horizontal clip of one hull may have moved the polygon's true corner
    # onto the other chain; re-attach it where the spans still disagree.
    if apply(p.Sv, v.front()).x > apply(p.Su, u.front()).x + tol:
        v.push_front(apply(invert(p.Sv), ll_u), log)
    if apply(p.Su, u.back()).x < apply(p.Sv, v.back()).x - tol:
        u.push_back(apply(invert(p.Su), ur_v), log)
    return StepOutcome.CONTINUE


def backtrace(
    p: FeasibilityPolygon,
    cs: ConstraintSystem,
    tol_check: float = 0.0,
    on_state=None,
) -> np.ndarray:
    """Recover one feasible vector from a completed sweep.

    Starts mid-polygon -- the middle of the final hull's x-span at the middle
    of that slice -- and walks the log backwards: after rolling back step i,
    the previous value is ``x - y`` and the previous difference is picked
    from the window where the restored polygon slice meets the exact
    difference and transition intervals.  The upper hull carries a position
    pointer that, apart from tie corrections, only moves right across the
    whole walk (query abscissas never fall behind it because hull slopes
    stay in [0, 1]), so the backtrace is O(n) too.

    The walking point is re-clamped onto the restored polygon slice at every
    step.  Without this, rounding error in y would be multiplied by 1/alpha
    whenever the lower second-difference branch fires, which compounds
    exponentially over long alpha < 1 runs; clamping keeps the accumulated
    error additive.  A query off the polygon by more than ``tol_check`` still
    raises, since that means the walk and the recorded geometry disagree.
    The lower chain gets no monotone pointer (rollbacks resurrect its front
    vertices under the walk, so positions there are not monotone); its height
    is found by binary search instead.
    """
    n = cs.n
    u, v = p.u, p.v
    # Off-geometry guards are bug detectors, not correctness gates: the final
    # witness check validates the complete original system, so a walk that
    # drifts off the recorded hull yet stays inside the exact windows still
    # produces a genuinely valid witness.  Noise-driven drift on adversarial
    # instances reaches tens of budgets; real read bugs sit many orders
    # higher, so the leash is long.
    guard = 128.0 * tol_check
    win = 8.0 * tol_check
    # Enter at the middle of the final polygon, not at a corner.  An extreme
    # vertex is a zero-width slice: its difference coordinate carries no
    # noise margin, and a one-ulp undershoot there is locked in by the
    # transition ratchet for the rest of the walk (e.g. a convexity bound
    # caps every later difference at the entry difference, so the walk rides
    # parallel to the lower chain, a hair below it, forever).  Mid-span,
    # mid-slice maximises the margin every later step inherits.
    tl = apply(p.Su, u.at(u.left_index))
    tr = apply(p.Su, u.back())
    x = 0.5 * (tl.x + tr.x)
    # Exact input bounds stay authoritative over geometry rounding: every
    # committed value is clamped into its exact value window, and every
    # difference pick is intersected with its exact difference window, so the
    # witness can only violate a bound where rounding noise forces a genuine
    # conflict between exact windows and the recorded geometry.
    x = min(max(x, float(cs.xlo[n - 1])), float(cs.xhi[n - 1]))
    pos_u = _seek(u, p.Su, u.left_index, x)
    pos_v = _bisect_pos(v, p.Sv, x)
    y_max = _chain_height(u, p.Su, pos_u, x, guard)
    y_min = _chain_height(v, p.Sv, pos_v, x, guard, lower=True)
    ylo_t = float(cs.ylo[n - 2])
    yhi_t = float(cs.yhi[n - 2])
    lo = max(y_min, ylo_t)
    hi = min(y_max, yhi_t)
    if lo <= hi:
        y = 0.5 * (lo + hi)
    elif y_max < ylo_t:
        y = ylo_t
    elif y_min > yhi_t:
        y = yhi_t
    else:
        y = min(yhi_t, max(ylo_t, 0.5 * (y_min + y_max)))
    b = np.empty(n)
    b[n - 1] = x
    y_up = 0.0  # realized difference one level up; unused on the first step
    for i in range(n, 2, -1):
        p.Su, p.Sv = rollback_step(p.u, p.v, p.Su, p.Sv, p.log, i)
        p.step = i - 1
        if on_state is not None:
            on_state(p)
        x_prev = x - y
        left = apply(p.Su, u.at(u.left_index))
        right = apply(p.Su, u.at(u.right_index))
        if x_prev < left.x:
            if left.x - x_prev > guard:
                raise InternalConsistencyError(
                    f"backtrace query x={x_prev} lies "
                    f"{left.x - x_prev:.3e} left of the hull"
                )
            x_prev = left.x
        elif x_prev > right.x:
            if x_prev - right.x > guard:
                raise InternalConsistencyError(
                    f"backtrace query x={x_prev} lies "
                    f"{x_prev - right.x:.3e} right of the hull"
                )
            x_prev = right.x
        # Snapping moves the realized difference b[i-1] - b[i-2] = x - x_prev
        # away from the picked one, so the snap itself must respect every
        # exact window on it: value bounds on x_prev, difference bounds on
        # x - x_prev, and the transition window linking x - x_prev to the
        # already-realized difference above it.  All hold at the true point,
        # so their intersection is nonempty up to noise; an empty
        # intersection is split like any exact conflict.
        exl = max(float(cs.xlo[i - 2]), x - float(cs.yhi[i - 2]))
        exh = min(float(cs.xhi[i - 2]), x - float(cs.ylo[i - 2]))
        if i < n:
            a_up = float(cs.alpha[i - 2])
            exl = max(exl, x - (y_up - float(cs.zlo[i - 2])) / a_up)
            exh = min(exh, x - (y_up - float(cs.zhi[i - 2])) / a_up)
        if exl > exh:
            x_prev = 0.5 * (exl + exh)
        else:
            x_prev = min(max(x_prev, exl), exh)
        y_real = x - x_prev
        pos_u = _seek(u, p.Su, pos_u, x_prev)
        pos_v = _bisect_pos(v, p.Sv, x_prev)
        y_max = _chain_height(u, p.Su, pos_u, x_prev, guard)
        y_min = _chain_height(v, p.Sv, pos_v, x_prev, guard, lower=True)
        alpha = float(cs.alpha[i - 3])
        zlo = float(cs.zlo[i - 3])
        zhi = float(cs.zhi[i - 3])
        ylo_b = float(cs.ylo[i - 3])
        yhi_b = float(cs.yhi[i - 3])
        # The new difference must satisfy the polygon slice, its exact
        # difference window [ylo, yhi], and the exact transition window
        # z = y - alpha*y_new in [zlo, zhi].  Exact arithmetic makes the
        # triple intersection nonempty.  Under rounding, the exact windows
        # are data and the slice is geometry, so the pick always lands
        # inside the exact windows when they intersect; the slice only
        # chooses where.  A strict read conflicting with the exact windows
        # means a near-vertical edge (an original value bound) rounded wider
        # than the read window, so the chains are re-read over ``guard`` --
        # observed cliff smears occasionally exceed the budget itself, and
        # the radius is only a search window: the vertex found sits at the
        # true corner plus actual noise.  If geometry still conflicts, the
        # walk stays exact-legal and absorbs the excess as path drift, which
        # the span guards bound at ``guard``.  Only a conflict between the
        # two exact windows themselves -- accumulated drift in the incoming
        # difference -- forces a genuine violation, split evenly so the
        # final consistency gate sees half on each side.
        y_hi_z = (y_real - zlo) / alpha
        y_lo_z = (y_real - zhi) / alpha
        ex_lo = max(y_lo_z, ylo_b)
        ex_hi = min(y_hi_z, yhi_b)
        if ex_lo > ex_hi:
            y_new = 0.5 * (ex_lo + ex_hi)
        else:
            y_hi = min(ex_hi, y_max)
            y_lo = max(ex_lo, y_min)
            if y_lo <= y_hi:
                # any interior point of the window extends to a full witness,
                # so take the midpoint: it keeps half the window as noise
                # margin on both sides, where an extremal pick would park the
                # walk knife-edge on a boundary and make every subsequent
                # step a rounding coin-flip
                y_new = 0.5 * (y_lo + y_hi)
            else:
                y_max = _chain_extreme(u, p.Su, pos_u, x_prev, win, y_max)
                y_min = _chain_extreme(v, p.Sv, pos_v, x_prev, win, y_min,
                                       lower=True)
                y_hi = min(ex_hi, y_max)
                y_lo = max(ex_lo, y_min)
                if y_lo <= y_hi:
                    y_new = 0.5 * (y_lo + y_hi)
                elif y_max < ex_lo:
                    y_new = ex_lo
                elif y_min > ex_hi:
                    y_new = ex_hi
                else:
                    y_new = min(ex_hi, max(ex_lo, 0.5 * (y_min + y_max)))
        x, y, y_up = x_prev, y_new, y_real
        b[i - 2] = x
    exl = max(float(cs.xlo[0]), x - float(cs.yhi[0]))
    exh = min(float(cs.xhi[0]), x - float(cs.ylo[0]))
    if n >= 3:
        a_up = float(cs.alpha[0])
        exl = max(exl, x - (y_up - float(cs.zlo[0])) / a_up)
        exh = min(exh, x - (y_up - float(cs.zhi[0])) / a_up)
    b[0] = 0.5 * (exl + exh) if exl > exh else min(max(x - y, exl), exh)
    return b


def _seek(d: HullDeque, m: AffineMap, pos: int, xq: float) -> int:
    """Move a chain pointer to the first live vertex with x >= ``xq``.

    The pointer is carried across backtrace steps and in exact arithmetic
    only ever advances.  Duplicate vertices and sub-tolerance rounding
    inversions can strand it one slot past the first crossing, where the
    interpolation in :func:`_chain_height` would read the wrong segment, so
    a backward pass restores the bracketing; it only ever walks over ties,
    which keeps the whole-walk cost linear.
    """
    if pos < d.left_index:
        pos = d.left_index
    elif pos > d.right_index:
        pos = d.right_index
    while pos < d.right_index and apply(m, d.at(pos)).x < xq:
        pos += 1
    while pos > d.left_index and apply(m, d.at(pos - 1)).x >= xq:
        pos -= 1
    return pos


def _bisect_pos(d: HullDeque, m: AffineMap, xq: float) -> int:
    """First live vertex with transformed x >= ``xq`` (or the last overall)."""
    lo, hi = d.left_index, d.right_index
    while lo < hi:
        mid = (lo + hi) // 2
        if apply(m, d.at(mid)).x < xq:
            lo = mid + 1
        else:
            hi = mid
    # Rounding can leave transformed x locally non-monotone by about one ulp
    # of the map magnitude, which the bisection cannot see; restore the
    # bracketing so interpolation reads the segment that contains the query.
    while lo > d.left_index and apply(m, d.at(lo - 1)).x >= xq:
        lo -= 1
    while lo < d.right_index and apply(m, d.at(lo)).x < xq:
        lo += 1
    return lo


def _chain_height(
    d: HullDeque,
    m: AffineMap,
    pos: int,
    xq: float,
    guard: float,
    lower: bool = False,
) -> float:
    """Height of a transformed hull chain at abscissa ``xq``.

    ``pos`` is the leftmost live vertex with transformed x >= xq (or the
    rightmost vertex overall).  A query outside the chain by more than
    ``guard`` means the recorded geometry and the walk disagree.

    The seek guarantees the landing segment brackets the query, so linear
    interpolation is bounded by the segment's endpoint heights for any
    positive edge width.  Only an edge whose transformed width rounds to
    zero or inverts is x-ambiguous; it collapses to the safe side -- min
    for the upper chain, max for the lower -- because crediting the far
    side of a cliff the query does not actually touch would commit the
    walk to a height the next step cannot honour, while an under-read is
    recoverable (if the exact transition window objects, the caller
    re-reads with :func:`_chain_extreme`).
    """
    tp = apply(m, d.at(pos))
    if tp.x >= xq:
        if pos == d.left_index:
            if tp.x - xq > guard:
                raise InternalConsistencyError(
                    f"backtrace query x={xq} lies {tp.x - xq:.3e} left of the hull"
                )
            return tp.y
        ta = apply(m, d.at(pos - 1))
        dx = tp.x - ta.x
        if dx <= 0.0:
            return max(ta.y, tp.y) if lower else min(ta.y, tp.y)
        frac = (xq - ta.x) / dx
        return ta.y + frac * (tp.y - ta.y)
    if xq - tp.x > guard:
        raise InternalConsistencyError(
            f"backtrace query x={xq} lies {xq - tp.x:.3e} right of the hull"
        )
    return tp.y


def _chain_extreme(
    d: HullDeque,
    m: AffineMap,
    pos: int,
    xq: float,
    win: float,
    base: float,
    lower: bool = False,
) -> float:
    """Extend a strict chain read by vertices within ``win`` of ``xq``.

    Used when a strict read conflicts with an exact transition window: a
    near-vertical edge (an original value bound) may have been rounded up to
    the full consistency budget wide, hiding its top (bottom) from the
    narrow read.  Scanning both directions from the crossing recovers it.
    The result only ever widens the strict read ``base``, never shrinks it.
    """
    val = base
    tp = apply(m, d.at(pos))
    if tp.x <= xq + win:
        val = min(val, tp.y) if lower else max(val, tp.y)
    j = pos
    while j > d.left_index:
        tj = apply(m, d.at(j - 1))
        if tj.x < xq - win:
            break
        val = min(val, tj.y) if lower else max(val, tj.y)
        j -= 1
    j = pos
    while j < d.right_index:
        tj = apply(m, d.at(j + 1))
        if tj.x > xq + win:
            break
        val = min(val, tj.y) if lower else max(val, tj.y)
        j += 1
    return val


# --------------------------------------------------------------------------
# Driver
# --------------------------------------------------------------------------


@dataclass
class DecisionStats:
    vertices_added: int = 0
    vertices_removed: int = 0
    peak_live_vertices: int = 0


@dataclass
class StepRecord:
    """Instrumentation for one forward step (python engine only)."""

    step: int
    live_vertices: int
    polygon_vertices: int
    min_edge_slope: float
    snapshot: tuple


@dataclass
class DecisionResult:
    verdict: str  # "feasible" | "infeasible"
    witness: np.ndarray | None
    fail_step: int | None
    stats: DecisionStats
    witness_error: float = 0.0  # measured worst violation of the witness
    trace: list[StepRecord] | None = None
    backtrace_snapshots: list[tuple] | None = None
    engine: str = "python"
    big_m: float = 0.0
    widened: bool = False

    @property
    def feasible(self) -> bool:
        return self.verdict == "feasible"


def _decide_python(ccs: ConstraintSystem, tol: float, tol_check: float, trace: bool):
    records: list[StepRecord] | None = [] if trace else None
    back_snaps: list[tuple] | None = [] if trace else None

    poly = init_p2(ccs, tol)
    init_count = poly.u.size() + max(poly.v.size(), 0) if not poly.is_empty() else 0
    stats = DecisionStats(vertices_added=max(init_count, 0))
    stats.peak_live_vertices = max(poly.live_vertices(), 0)

    def observe(p: FeasibilityPolygon):
        if records is not None:
            records.append(
                StepRecord(
                    step=p.step,
                    live_vertices=p.live_vertices(),
                    polygon_vertices=p.vertex_count(tol_check),
                    min_edge_slope=p.min_edge_slope(),
                    snapshot=p.snapshot(),
                )
            )

    if poly.is_empty():
        return ("infeasible", None, 2, stats, records, back_snaps)
    observe(poly)

    for _ in range(3, ccs.n + 1):
        outcome = advance(poly, ccs)
        live = poly.live_vertices() if not poly.is_empty() else 0
        stats.peak_live_vertices = max(stats.peak_live_vertices, live)
        if outcome is StepOutcome.EMPTIED:
            stats.vertices_added = init_count + poly.log.pushes
            stats.vertices_removed = poly.log.pops
            return ("infeasible", None, poly.step, stats, records, back_snaps)
        observe(poly)

    stats.vertices_added = init_count + poly.log.pushes
    stats.vertices_removed = poly.log.pops

    on_state = (lambda p: back_snaps.append(p.snapshot())) if trace else None
    witness = backtrace(poly, ccs, tol_check, on_state)
    return ("feasible", witness, None, stats, records, back_snaps)


def _decide_fast(ccs: ConstraintSystem, tol: float, tol_check: float):
    from . import _kernel

    status, fail_step, witness, pushes, pops, peak = _kernel.solve(
        ccs.xlo, ccs.xhi, ccs.ylo, ccs.yhi, ccs.zlo, ccs.zhi, ccs.alpha,
        tol, tol_check,
    )
    if status == 2:
        raise InternalConsistencyError(
            f"kernel backtrace left the recorded hull at step {fail_step}"
        )
    stats = DecisionStats(
        vertices_added=int(pushes),
        vertices_removed=int(pops),
        peak_live_vertices=int(peak),
    )
    if status == 1:
        return ("infeasible", None, int(fail_step), stats, None, None)
    return ("feasible", witness, None, stats, None, None)


def _witness_violation(cs: ConstraintSystem, b: np.ndarray) -> float:
    """Largest amount by which ``b`` breaks any original constraint."""
    worst = max(float(np.max(cs.xlo - b)), float(np.max(b - cs.xhi)), 0.0)
    if cs.n >= 2:
        dy = b[1:] - b[:-1]
        worst = max(worst, float(np.max(cs.ylo - dy)), float(np.max(dy - cs.yhi)))
        if cs.n >= 3:
            dz = dy[1:] - cs.alpha * dy[:-1]
            worst = max(worst, float(np.max(cs.zlo - dz)), float(np.max(dz - cs.zhi)))
    return worst


def _touches_synthetic_wall(
    cs: ConstraintSystem, ccs: ConstraintSystem, b: np.ndarray, tol_check: float
) -> bool:
    """True when the witness is within tolerance of a bound that was +-inf."""
    diffs = b[1:] - b[:-1]
    second = diffs[1:] - cs.alpha * diffs[:-1] if cs.n > 2 else np.empty(0)
    for val, lo, hi, clo, chi in (
        (b, cs.xlo, cs.xhi, ccs.xlo, ccs.xhi),
        (diffs, cs.ylo, cs.yhi, ccs.ylo, ccs.yhi),
        (second, cs.zlo, cs.zhi, ccs.zlo, ccs.zhi),
    ):
        if not val.size:
            continue
        synth_lo = ~np.isfinite(lo)
        synth_hi = ~np.isfinite(hi)
        if np.any(synth_lo & (val - clo <= tol_check)):
            return True
        if np.any(synth_hi & (chi - val <= tol_check)):
            return True
    return False


def decide(
    cs: ConstraintSystem,
    engine: str = "auto",
    trace: bool = False,
) -> DecisionResult:
    """Decide feasibility of ``cs``; on success attach a witness vector.

    ``engine`` is ``"python"`` (reference implementation, supports ``trace``),
    ``"fast"`` (compiled kernel), or ``"auto"``.  With ``trace=True`` the
    python engine records per-step polygon statistics and exact snapshots.

    A feasible result carries ``witness_error``, the measured worst violation
    of any original bound by the witness.  It is zero up to rounding on
    well-conditioned instances and can reach a few consistency budgets when
    the feasible set pinches to rounding width (e.g. at near-critical levels
    of a fit search); errors beyond anything rounding can explain raise
    :class:`InternalConsistencyError` instead.
    """
    if not isinstance(cs, ConstraintSystem):
        raise InvalidInput("decide() expects a ConstraintSystem")
    if engine not in ("auto", "python", "fast"):
        raise InvalidInput(f"unknown engine {engine!r}")
    if engine == "auto":
        engine = "fast" if (cs.n >= FAST_ENGINE_MIN_N and not trace) else "python"
    if trace and engine == "fast":
        raise InvalidInput("trace=True requires the python engine")

    tol, tol_check = cs.tolerances()
    big_m = cs.big_m()
    runner = _decide_python if engine == "python" else _decide_fast

    widened = False
    while True:
        ccs = cs.clamped(big_m)
        if engine == "python":
            verdict, witness, fail_step, stats, records, back_snaps = runner(
                ccs, tol, tol_check, trace
            )
        else:
            verdict, witness, fail_step, stats, records, back_snaps = runner(
                ccs, tol, tol_check
            )
        if (
            verdict == "feasible"
            and not widened
            and _touches_synthetic_wall(cs, ccs, witness, tol_check)
        ):
            warnings.warn(
                "witness touched a synthetic bound; re-solving with a wider box",
                RuntimeWarning,
                stacklevel=2,
            )
            big_m *= 16.0
            widened = True
            continue
        break

    witness_error = 0.0
    if verdict == "feasible":
        witness_error = _witness_violation(cs, witness)
        # The measured error is reported on the result; the raise below is a
        # bug backstop, not a noise gate.  Near-critical instances pinch the
        # feasible set to rounding width, where a few budgets of witness
        # error are unavoidable for any finite-precision walk; genuine read
        # or rollback bugs sit many orders of magnitude higher.
        if witness_error > 64.0 * tol_check:
            raise InternalConsistencyError(
                f"witness violates the system by {witness_error:.3e} "
                f"(64x budget {tol_check:.3e}); the walk and the recorded "
                f"geometry disagree beyond anything rounding can explain"
            )

    return DecisionResult(
        verdict=verdict,
        witness=witness,
        witness_error=witness_error,
        fail_step=fail_step,
        stats=stats,
        trace=records,
        backtrace_snapshots=back_snaps,
        engine=engine,
        big_m=big_m,
        widened=widened,
    )
