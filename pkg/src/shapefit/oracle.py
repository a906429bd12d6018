"""Brute-force feasibility checking by variable elimination.

Completely independent of the polygon solver: a constraint system becomes an
explicit list of linear inequality rows, variables are eliminated one at a
time in ascending index order (each elimination pairs every lower bound on
the variable with every upper bound), and a witness is rebuilt by walking the
eliminations backwards through interval midpoints.  Row counts can blow up
combinatorially, so this is capped to small systems -- it exists to check the
sweep solver, not to replace it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .decision import ConstraintSystem, InvalidInput

MAX_VARIABLES = 12
SLACK_BASE = 1e-9

# Relative threshold below which a coefficient produced by cancellation is
# treated as exactly zero.
COEFF_EPS = 1e-14


class TooLarge(ValueError):
    """Raised when a system is beyond what elimination can reasonably handle."""


@dataclass
class LinearSystem:
    """Two-sided rows ``lo <= sum(coeffs[j] * b_j) <= hi`` over n variables."""

    nvars: int
    rows: list[tuple[dict[int, float], float, float]]

    def magnitude(self) -> float:
        m = 0.0
        for _, lo, hi in self.rows:
            if np.isfinite(lo):
                m = max(m, abs(lo))
            if np.isfinite(hi):
                m = max(m, abs(hi))
        return m


@dataclass
class OracleResult:
    feasible: bool
    witness: np.ndarray | None


def from_constraint_system(cs: ConstraintSystem, clamp: bool = True) -> LinearSystem:
    """Explicit rows for a chain system: n value rows, n-1 difference rows,
    n-2 second-difference rows.  By default infinities are replaced by the
    same +-big_m box the sweep solver uses, so both routes see one system."""
    if not isinstance(cs, ConstraintSystem):
        raise InvalidInput("expected a ConstraintSystem")
    sys_cs = cs.clamped() if clamp else cs
    rows: list[tuple[dict[int, float], float, float]] = []
    n = sys_cs.n
    for i in range(n):
        rows.append(({i: 1.0}, float(sys_cs.xlo[i]), float(sys_cs.xhi[i])))
    for i in range(n - 1):
        rows.append(
            ({i + 1: 1.0, i: -1.0}, float(sys_cs.ylo[i]), float(sys_cs.yhi[i]))
        )
    for i in range(n - 2):
        a = float(sys_cs.alpha[i])
        rows.append(
            (
                {i + 2: 1.0, i + 1: -(1.0 + a), i: a},
                float(sys_cs.zlo[i]),
                float(sys_cs.zhi[i]),
            )
        )
    return LinearSystem(nvars=n, rows=rows)


def _clean(coeffs: dict[int, float]) -> dict[int, float]:
    if not coeffs:
        return coeffs
    scale = max(abs(c) for c in coeffs.values())
    if scale == 0.0:
        return {}
    return {j: c for j, c in coeffs.items() if abs(c) > COEFF_EPS * scale}


def _one_sided(ls: LinearSystem) -> list[tuple[dict[int, float], float]]:
    """Rows as ``sum(coeffs[j] * b_j) <= ub``; infinite bounds drop out."""
    out = []
    for coeffs, lo, hi in ls.rows:
        coeffs = _clean(dict(coeffs))
        if np.isfinite(hi):
            out.append((dict(coeffs), float(hi)))
        if np.isfinite(lo):
            out.append(({j: -c for j, c in coeffs.items()}, -float(lo)))
    return out


def fm_feasible(ls: LinearSystem) -> OracleResult:
    """Decide ``ls`` by elimination; on success return a midpoint witness."""
    if ls.nvars > MAX_VARIABLES:
        raise TooLarge(
            f"{ls.nvars} variables exceed the elimination cap of {MAX_VARIABLES}"
        )
    slack = SLACK_BASE * (1.0 + ls.magnitude())
    rows = _one_sided(ls)

    # levels[v] = (uppers, lowers), each normalized to coefficient one on v:
    #   upper: b_v <= ub - sum(rest);  lower: b_v >= sum(rest) - ub
    levels: list[tuple[list, list]] = []
    for v in range(ls.nvars):
        uppers = []
        lowers = []
        passthrough = []
        for coeffs, ub in rows:
            c = coeffs.get(v, 0.0)
            if c > 0.0:
                uppers.append(({j: k / c for j, k in coeffs.items() if j != v}, ub / c))
            elif c < 0.0:
                lowers.append(
                    ({j: k / -c for j, k in coeffs.items() if j != v}, ub / -c)
                )
            else:
                passthrough.append((coeffs, ub))
        levels.append((uppers, lowers))

        combined: dict[tuple, float] = {}
        for lo_coeffs, lo_ub in lowers:
            for hi_coeffs, hi_ub in uppers:
                # (sum lo - lo_ub) <= b_v <= (hi_ub - sum hi)
                merged = dict(hi_coeffs)
                for j, c in lo_coeffs.items():
                    merged[j] = merged.get(j, 0.0) + c
                merged = _clean(merged)
                key = tuple(sorted(merged.items()))
                ub = hi_ub + lo_ub
                prev = combined.get(key)
                if prev is None or ub < prev:
                    combined[key] = ub
        rows = passthrough + [(dict(key), ub) for key, ub in combined.items()]

    for coeffs, ub in rows:
        if not coeffs and ub < -slack:
            return OracleResult(False, None)

    # back-substitute in reverse elimination order; later variables are known
    witness = np.zeros(ls.nvars)
    for v in range(ls.nvars - 1, -1, -1):
        uppers, lowers = levels[v]
        lo_val, hi_val = -np.inf, np.inf
        for coeffs, ub in uppers:
            hi_val = min(hi_val, ub - sum(c * witness[j] for j, c in coeffs.items()))
        for coeffs, ub in lowers:
            lo_val = max(lo_val, sum(c * witness[j] for j, c in coeffs.items()) - ub)
        if lo_val > hi_val:
            # numeric disagreement at the slack scale; split the difference
            hi_val = lo_val = 0.5 * (lo_val + hi_val)
        if np.isfinite(lo_val) and np.isfinite(hi_val):
            witness[v] = 0.5 * (lo_val + hi_val)
        elif np.isfinite(lo_val):
            witness[v] = lo_val
        elif np.isfinite(hi_val):
            witness[v] = hi_val
        else:
            witness[v] = 0.0
    return OracleResult(True, witness)


def interval_chain_feasible(cs: ConstraintSystem) -> bool:
    """Forward interval propagation; exact for systems with no second-order
    rows (each reachable-value set is just an interval then)."""
    if np.any(np.isfinite(cs.zlo)) or np.any(np.isfinite(cs.zhi)):
        raise InvalidInput("interval propagation only handles first-order chains")
    slack = SLACK_BASE * (1.0 + cs.magnitude())
    ccs = cs.clamped()
    lo, hi = float(ccs.xlo[0]), float(ccs.xhi[0])
    if lo > hi + slack:
        return False
    for i in range(1, ccs.n):
        lo = max(lo + float(ccs.ylo[i - 1]), float(ccs.xlo[i]))
        hi = min(hi + float(ccs.yhi[i - 1]), float(ccs.xhi[i]))
        if lo > hi + slack:
            return False
    return True


def oracle_optimum(fp, tol: float = 1e-9) -> float:
    """Smallest feasible fit level, found by bisection over the eliminator.

    Uses the same probe ladder as the fast fitting routine: level zero first,
    then the worst-case constant-fit level, then plain bisection.  Returns the
    smallest level verified feasible (within ``tol`` of the true optimum).
    """
    from . import regression

    n = fp.n
    if n > MAX_VARIABLES:
        raise TooLarge(f"{n} variables exceed the elimination cap of {MAX_VARIABLES}")
    if n == 1:
        return 0.0
    if tol <= 0:
        raise InvalidInput("tol must be positive")

    def probe(level: float) -> bool:
        cs = regression.encode(fp, level)
        return fm_feasible(from_constraint_system(cs)).feasible

    if probe(0.0):
        return 0.0
    level0 = float(np.max(fp.ws) * (np.max(fp.ys) - np.min(fp.ys)))
    lo = 0.0
    if level0 > 0.0 and probe(level0):
        hi = level0
    else:
        lo = max(level0, 0.0)
        shape_cs = regression.encode(fp, 1.0).without_value_bounds()
        if not fm_feasible(from_constraint_system(shape_cs)).feasible:
            raise regression.ShapeInfeasible(
                "difference bounds alone are contradictory"
            )
        level = max(level0, 1.0)
        cap = regression.encode(fp, max(level0, 1.0)).big_m()
        while True:
            level *= 2.0
            if level > cap:
                raise regression.LevelCapExceeded(
                    f"no feasible level found below {cap:g}"
                )
            if probe(level):
                hi = level
                break
            lo = level
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if probe(mid):
            hi = mid
        else:
            lo = mid
    return hi
