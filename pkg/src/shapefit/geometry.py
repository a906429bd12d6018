"""Convex-chain geometry primitives.

Homogeneous points, composable affine maps of the shear/scale/shift family,
array-backed hull deques with half-plane cuts, and a reversible operation log.
Chains are kept sorted by transformed x-coordinate and cuts only ever truncate
a prefix or a suffix, which is what keeps every mutation amortized O(1).
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class SingularMap(ValueError):
    """Raised when inverting a map whose y-scale is (numerically) zero."""


class LogCorrupt(RuntimeError):
    """Raised when the operation log cannot undo the step it was asked to."""


class CapacityError(RuntimeError):
    """Raised in strict mode when a deque would outgrow its preallocation."""


@dataclass(frozen=True)
class HomoPoint:
    """A plane point stored as (x, y, 1): the homogeneous coordinate is fixed."""

    x: float
    y: float
    w: float = 1.0


@dataclass(frozen=True)
class AffineMap:
    """Affine transform of the shear/scale/shift family.

    Acts on the plane as ``(x, y) -> (x + p*y + q, r*y + s)``.  As a 3x3
    homogeneous matrix the first column is (1, 0, 0)^T and the last row is
    (0, 0, 1), so four scalars determine the map; storing only those four
    keeps the structurally fixed entries exact under composition.
    """

    p: float
    q: float
    r: float
    s: float

    @staticmethod
    def identity() -> "AffineMap":
        return AffineMap(0.0, 0.0, 1.0, 0.0)

    @staticmethod
    def shear(alpha: float, z: float) -> "AffineMap":
        """The map (x, y) -> (x + alpha*y + z, alpha*y + z)."""
        return AffineMap(alpha, z, alpha, z)

    def as_matrix(self) -> list[list[float]]:
        return [[1.0, self.p, self.q], [0.0, self.r, self.s], [0.0, 0.0, 1.0]]


IDENTITY = AffineMap.identity()


def apply(m: AffineMap, pt: HomoPoint) -> HomoPoint:
    """Matrix-vector product of the map with (x, y, 1)^T."""
    return HomoPoint(pt.x + m.p * pt.y + m.q, m.r * pt.y + m.s)


def compose(outer: AffineMap, inner: AffineMap) -> AffineMap:
    """The map equal to applying ``inner`` first, then ``outer``."""
    return AffineMap(
        inner.p + outer.p * inner.r,
        inner.q + outer.p * inner.s + outer.q,
        outer.r * inner.r,
        outer.r * inner.s + outer.s,
    )


def invert(m: AffineMap) -> AffineMap:
    """Inverse map; stays in the family.  Requires a nonzero y-scale r."""
    ri = 1.0 / m.r if m.r != 0.0 else math.inf
    if not math.isfinite(ri):
        raise SingularMap(f"map with r={m.r!r} is not invertible")
    return AffineMap(-m.p * ri, m.p * m.s * ri - m.q, ri, -m.s * ri)


# --------------------------------------------------------------------------
# Operation log
#
# Record shapes (tuples, cheap and directly comparable):
#   ("map",  which, (p, q, r, s))   old transform values, written pre-update
#   ("push", which, side)           undone by popping that side again
#   ("pop",  which, side, x, y)     undone by pushing (x, y) back
#   ("rebase", which, old_pts)      undone by rewriting the live window
# `which` is a deque/transform name ("u" or "v"), `side` is "front"/"back".
# --------------------------------------------------------------------------


class OpLog:
    """Append-only log of reversible mutations, grouped by step index."""

    def __init__(self) -> None:
        self._groups: list[tuple[int, list]] = []
        self.pushes = 0
        self.pops = 0

    def __len__(self) -> int:
        return len(self._groups)

    @property
    def last_step(self) -> int | None:
        return self._groups[-1][0] if self._groups else None

    def begin_step(self, step: int) -> None:
        if self._groups and self._groups[-1][0] >= step:
            raise LogCorrupt(
                f"step {step} opened after step {self._groups[-1][0]}"
            )
        self._groups.append((step, []))

    def record(self, entry: tuple) -> None:
        if not self._groups:
            raise LogCorrupt("record() before begin_step()")
        if entry[0] == "push":
            self.pushes += 1
        elif entry[0] == "pop":
            self.pops += 1
        self._groups[-1][1].append(entry)

    def entries_for(self, step: int) -> list:
        for s, entries in self._groups:
            if s == step:
                return list(entries)
        raise LogCorrupt(f"no log group for step {step}")

    def take_step(self, step: int) -> list:
        """Remove and return the record group of ``step`` (the newest group)."""
        if not self._groups:
            raise LogCorrupt(f"rollback of step {step} on an empty log")
        if self._groups[-1][0] != step:
            raise LogCorrupt(
                f"rollback of step {step} but newest group is {self._groups[-1][0]}"
            )
        return self._groups.pop()[1]


class HullDeque:
    """Array-backed deque of untransformed hull vertices.

    The live window is ``buf[left..right]`` (inclusive; empty iff right <
    left).  ``base`` maps physical slots to stable *logical* indices
    (logical = base + physical), so an index held by a caller stays valid
    across a reallocation.  In strict mode outgrowing the preallocated
    capacity raises :class:`CapacityError` instead of reallocating.
    """

    __slots__ = ("name", "buf", "left", "right", "base", "strict")

    def __init__(self, name: str, capacity: int, strict: bool = False):
        capacity = max(int(capacity), 4)
        self.name = name
        self.buf: list = [None] * capacity
        mid = capacity // 2
        self.left = mid
        self.right = mid - 1  # empty
        self.base = 0
        self.strict = strict

    @classmethod
    def from_points(cls, name, points, capacity, strict=False) -> "HullDeque":
        d = cls(name, capacity, strict)
        k = len(points)
        start = max((len(d.buf) - k) // 2, 0)
        for i, pt in enumerate(points):
            d.buf[start + i] = pt
        d.left = start
        d.right = start + k - 1
        return d

    # -- queries ------------------------------------------------------------

    def size(self) -> int:
        return self.right - self.left + 1

    def is_empty(self) -> bool:
        return self.right < self.left

    def front(self) -> HomoPoint:
        return self.buf[self.left]

    def back(self) -> HomoPoint:
        return self.buf[self.right]

    def snd_front(self) -> HomoPoint:
        return self.buf[self.left + 1]

    def snd_back(self) -> HomoPoint:
        return self.buf[self.right - 1]

    @property
    def left_index(self) -> int:
        """Logical index of the first live vertex."""
        return self.base + self.left

    @property
    def right_index(self) -> int:
        """Logical index of the last live vertex."""
        return self.base + self.right

    def at(self, logical: int) -> HomoPoint:
        return self.buf[logical - self.base]

    def set_at(self, logical: int, pt: HomoPoint) -> None:
        self.buf[logical - self.base] = pt

    def live(self) -> list[HomoPoint]:
        return self.buf[self.left : self.right + 1]

    # -- mutation -----------------------------------------------------------

    def push_front(self, pt: HomoPoint, log: OpLog | None = None) -> None:
        if self.left == 0:
            self._grow()
        self.left -= 1
        self.buf[self.left] = pt
        if log is not None:
            log.record(("push", self.name, "front"))

    def push_back(self, pt: HomoPoint, log: OpLog | None = None) -> None:
        if self.right + 1 == len(self.buf):
            self._grow()
        self.right += 1
        self.buf[self.right] = pt
        if log is not None:
            log.record(("push", self.name, "back"))

    def pop_front(self, log: OpLog | None = None) -> HomoPoint:
        if self.is_empty():
            raise IndexError(f"pop_front on empty deque {self.name!r}")
        pt = self.buf[self.left]
        self.left += 1
        if log is not None:
            log.record(("pop", self.name, "front", pt.x, pt.y))
        return pt

    def pop_back(self, log: OpLog | None = None) -> HomoPoint:
        if self.is_empty():
            raise IndexError(f"pop_back on empty deque {self.name!r}")
        pt = self.buf[self.right]
        self.right -= 1
        if log is not None:
            log.record(("pop", self.name, "back", pt.x, pt.y))
        return pt

    def _grow(self) -> None:
        if self.strict:
            raise CapacityError(
                f"deque {self.name!r} exceeded its capacity of {len(self.buf)}"
            )
        old = self.buf
        k = self.size()
        new: list = [None] * (2 * len(old) + 16)
        start = (len(new) - max(k, 0)) // 2
        for i in range(max(k, 0)):
            new[start + i] = old[self.left + i]
        self.base += self.left - start
        self.left = start
        self.right = start + k - 1
        self.buf = new

    # -- inverse primitives used by rollback (never logged) ------------------

    def undo_push(self, side: str) -> None:
        if self.is_empty():
            raise LogCorrupt(f"cannot undo a push on empty deque {self.name!r}")
        if side == "front":
            self.left += 1
        else:
            self.right -= 1

    def undo_pop(self, side: str, pt: HomoPoint) -> None:
        if side == "front":
            if self.left == 0:
                self._grow()
            self.left -= 1
            self.buf[self.left] = pt
        else:
            if self.right + 1 == len(self.buf):
                self._grow()
            self.right += 1
            self.buf[self.right] = pt


@dataclass(frozen=True)
class CutOutcome:
    """Result of clipping a chain against a half-plane."""

    kind: str  # "unchanged" | "truncated" | "emptied"
    removed: int = 0

    @property
    def emptied(self) -> bool:
        return self.kind == "emptied"


UNCHANGED = CutOutcome("unchanged", 0)


def _transformed_coord(m: AffineMap, pt: HomoPoint, axis: str) -> tuple[HomoPoint, float]:
    t = apply(m, pt)
    return t, (t.x if axis == "x" else t.y)


def cut_left(
    deque: HullDeque,
    m: AffineMap,
    axis: str,
    bound: float,
    log: OpLog | None = None,
    tol: float = 0.0,
) -> CutOutcome:
    """Clip the chain against ``{coord >= bound}``, removing a prefix.

    Vertices with transformed coordinate below ``bound - tol`` are popped;
    if any were and the chain survives, the intersection of the cut line with
    the boundary edge joins at the front (stored pre-multiplied by the map's
    inverse so the cumulative transform keeps applying uniformly).  A new
    vertex within ``tol`` of the surviving one is not pushed.
    """
    removed = 0
    last: HomoPoint | None = None
    while not deque.is_empty():
        t, c = _transformed_coord(m, deque.front(), axis)
        if c < bound - tol:
            deque.pop_front(log)
            removed += 1
            last = t
        else:
            break
    if deque.is_empty():
        return CutOutcome("emptied", removed)
    if removed == 0:
        return UNCHANGED
    q, qc = _transformed_coord(m, deque.front(), axis)
    rc = last.x if axis == "x" else last.y
    denom = qc - rc
    t_par = (qc - bound) / denom if denom != 0.0 else 0.0
    t_par = min(max(t_par, 0.0), 1.0)
    ix = q.x + t_par * (last.x - q.x)
    iy = q.y + t_par * (last.y - q.y)
    if axis == "x":
        ix = bound
    else:
        iy = bound
    if max(abs(ix - q.x), abs(iy - q.y)) <= tol:
        return CutOutcome("truncated", removed)
    deque.push_front(apply(invert(m), HomoPoint(ix, iy)), log)
    return CutOutcome("truncated", removed)


def cut_right(
    deque: HullDeque,
    m: AffineMap,
    axis: str,
    bound: float,
    log: OpLog | None = None,
    tol: float = 0.0,
) -> CutOutcome:
    """Clip the chain against ``{coord <= bound}``, removing a suffix.

    Mirror of :func:`cut_left`; the intersection vertex joins at the back.
    """
    removed = 0
    last: HomoPoint | None = None
    while not deque.is_empty():
        t, c = _transformed_coord(m, deque.back(), axis)
        if c > bound + tol:
            deque.pop_back(log)
            removed += 1
            last = t
        else:
            break
    if deque.is_empty():
        return CutOutcome("emptied", removed)
    if removed == 0:
        return UNCHANGED
    q, qc = _transformed_coord(m, deque.back(), axis)
    rc = last.x if axis == "x" else last.y
    denom = rc - qc
    t_par = (bound - qc) / denom if denom != 0.0 else 0.0
    t_par = min(max(t_par, 0.0), 1.0)
    ix = q.x + t_par * (last.x - q.x)
    iy = q.y + t_par * (last.y - q.y)
    if axis == "x":
        ix = bound
    else:
        iy = bound
    if max(abs(ix - q.x), abs(iy - q.y)) <= tol:
        return CutOutcome("truncated", removed)
    deque.push_back(apply(invert(m), HomoPoint(ix, iy)), log)
    return CutOutcome("truncated", removed)


def rollback_step(
    u: HullDeque,
    v: HullDeque,
    Su: AffineMap,
    Sv: AffineMap,
    log: OpLog,
    step: int,
) -> tuple[AffineMap, AffineMap]:
    """Undo every mutation recorded for ``step`` (the log's newest group).

    Deques are restored in place; the restored ``(Su, Sv)`` pair is returned
    because maps are immutable values.  Popped-vertex values come from the
    log, so restoration is exact (bitwise).
    """
    entries = log.take_step(step)
    deques = {u.name: u, v.name: v}
    for entry in reversed(entries):
        kind = entry[0]
        if kind == "push":
            _, name, side = entry
            deques[name].undo_push(side)
        elif kind == "pop":
            _, name, side, x, y = entry
            deques[name].undo_pop(side, HomoPoint(x, y))
        elif kind == "map":
            _, name, old = entry
            if name == "u":
                Su = AffineMap(*old)
            elif name == "v":
                Sv = AffineMap(*old)
            else:
                raise LogCorrupt(f"unknown transform name {name!r}")
        elif kind == "rebase":
            _, name, old_pts = entry
            d = deques[name]
            if len(old_pts) != d.size():
                raise LogCorrupt(
                    f"rebase undo on {name!r} expects {len(old_pts)} live "
                    f"vertices, found {d.size()}"
                )
            idx = d.left_index
            for pt in old_pts:
                d.set_at(idx, pt)
                idx += 1
        else:
            raise LogCorrupt(f"unknown log entry {entry!r}")
    return Su, Sv
