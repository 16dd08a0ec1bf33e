"""How the optimal inspection period moves with the disruption penalties.

Plan values are affine in ``(d, c)`` for a fixed wait, so comparing two
adjacent plans gives a half-plane in penalty space. Two such half-planes pin
a target inspection period; one gives the penalty increase needed to inspect
a period earlier.

Periods here follow the planner: inspecting in period ``t`` is the plan that
waits ``t - 1`` periods.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import NoEarlierPeriodError
from .markov_core import C, D, Belief, PenaltyParams, TransitionModel, _require_operational
from .planner import DEFAULT_HORIZON, DEFAULT_WINDOW, optimal_inspection_time
from .presets import START_BELIEF
from .value_engine import CLOSED_FORM_CAP, path_coefficients

DEFAULT_D_STEP = 0.01


@dataclass(frozen=True)
class LinearPenaltyConstraint:
    """``coef_d * d + coef_c * c <= rhs`` (``<`` when ``strict``)."""

    coef_d: float
    coef_c: float
    rhs: float
    strict: bool = False
    label: str = ""

    def lhs(self, d: float, c: float) -> float:
        return self.coef_d * d + self.coef_c * c

    def slack(self, d: float, c: float) -> float:
        return self.rhs - self.lhs(d, c)

    def holds(self, d: float, c: float) -> bool:
        s = self.slack(d, c)
        return s > 0 if self.strict else s >= 0

    def d_bound(self, c: float) -> tuple:
        """Bound on ``d`` at fixed ``c`` as ``(kind, value)`` with kind one of
        ``"upper"``, ``"lower"``, ``"all"``, ``"none"``."""
        room = self.rhs - self.coef_c * c
        if self.coef_d > 0:
            return "upper", room / self.coef_d
        if self.coef_d < 0:
            return "lower", room / self.coef_d
        ok = room > 0 if self.strict else room >= 0
        return ("all", math.nan) if ok else ("none", math.nan)


@dataclass(frozen=True)
class PenaltyRegion:
    """Penalties for which inspecting in period ``t_bar`` is optimal.

    ``no_later`` keeps inspection from slipping past ``t_bar``;
    ``no_earlier`` keeps it from moving to ``t_bar - 1``. The latter is
    strict because the planner inspects on ties.
    """

    t_bar: int
    no_later: LinearPenaltyConstraint
    no_earlier: LinearPenaltyConstraint

    @property
    def constraints(self) -> tuple:
        return (self.no_later, self.no_earlier)

    def contains(self, d: float, c: float) -> bool:
        if not 0 <= c <= d:
            return False
        return self.no_later.holds(d, c) and self.no_earlier.holds(d, c)

    def d_interval(self, c: float) -> tuple:
        """``(d_L, d_U)`` of member ``d`` at fixed ``c``; ``(nan, nan)`` if empty."""
        lo, hi = max(c, 0.0), math.inf
        for con in self.constraints:
            kind, val = con.d_bound(c)
            if kind == "upper":
                hi = min(hi, val)
            elif kind == "lower":
                lo = max(lo, val)
            elif kind == "none":
                return math.nan, math.nan
        if lo > hi:
            return math.nan, math.nan
        return lo, hi

    def d_width(self, c: float) -> float:
        lo, hi = self.d_interval(c)
        return 0.0 if math.isnan(lo) else hi - lo


def _f_weights(model: TransitionModel, b1: Belief, keep: int, other: int) -> np.ndarray:
    """Belief-weighted difference of path ``f`` sums, per end state."""
    depth = max(keep, other)
    coef = path_coefficients(model, PenaltyParams(0.0, 0.0), depth, literal=False)
    b = np.asarray(b1.operational_part)
    return b @ (coef.f_sums[keep] - coef.f_sums[other])


def _plan_comparison(model, b1, keep, other, strict, label) -> LinearPenaltyConstraint:
    # V(keep) - V(other) = g . k with k = (1 - pD - pC) - d pD - c pC
    g = _f_weights(model, b1, keep, other)
    p_d, p_c = model.p[:3, D], model.p[:3, C]
    return LinearPenaltyConstraint(
        coef_d=float(g @ p_d),
        coef_c=float(g @ p_c),
        rhs=float(g @ (1.0 - p_d - p_c)),
        strict=strict,
        label=label,
    )


def earlier_shift_inequality(
    model: TransitionModel,
    penalties: PenaltyParams,
    b1: Belief,
    t_star: int,
) -> LinearPenaltyConstraint:
    """Constraint on penalty increases ``(delta, gamma)`` under which
    inspecting in period ``t_star - 1`` is at least as good as ``t_star``.

    Variables are the increases, not the penalties: ``coef_d * delta +
    coef_c * gamma <= rhs``.
    """
    _require_operational(b1)
    if t_star is None or t_star < 2:
        raise NoEarlierPeriodError(f"t_star={t_star} has no earlier period to move to")
    g = _f_weights(model, b1, t_star - 2, t_star - 1)
    p_d, p_c = model.p[:3, D], model.p[:3, C]
    k = 1.0 - (penalties.d + 1.0) * p_d - (penalties.c + 1.0) * p_c
    return LinearPenaltyConstraint(
        coef_d=float(g @ p_d),
        coef_c=float(g @ p_c),
        rhs=float(g @ k),
        label=f"inspect at {t_star - 1} instead of {t_star}",
    )


def min_pure_d_increase(con: LinearPenaltyConstraint) -> float:
    """Smallest ``delta`` satisfying an earlier-shift constraint with ``gamma = 0``."""
    if con.coef_d < 0:
        return max(con.rhs / con.coef_d, 0.0)
    if con.rhs >= 0:
        return 0.0
    return math.inf


def target_time_region(model: TransitionModel, b1: Belief, t_bar: int) -> PenaltyRegion:
    """Half-planes in ``(d, c)`` making ``t_bar`` the optimal inspection period."""
    _require_operational(b1)
    if not 2 <= t_bar <= CLOSED_FORM_CAP:
        raise ValueError(f"t_bar must lie in [2, {CLOSED_FORM_CAP}], got {t_bar}")
    no_later = _plan_comparison(model, b1, t_bar - 1, t_bar, False, f"inspect no later than {t_bar}")
    no_earlier = _plan_comparison(model, b1, t_bar - 1, t_bar - 2, True, f"inspect no earlier than {t_bar}")
    return PenaltyRegion(t_bar, no_later, no_earlier)


@dataclass(frozen=True)
class DRange:
    t: int
    d_lo: float
    d_hi: float

    @property
    def empty(self) -> bool:
        return math.isnan(self.d_lo)

    @property
    def width(self) -> float:
        return 0.0 if self.empty else self.d_hi - self.d_lo


def _t_star_for(args):
    model, b1, d, c, c_tilde, variant, horizon, window = args
    dec = optimal_inspection_time(
        model, PenaltyParams(d, c, c_tilde), b1, variant, horizon, window, check=False
    )
    return dec.t_star


def planner_times(
    model: TransitionModel,
    c: float,
    d_grid,
    b1: Belief = START_BELIEF,
    variant: str = "base",
    c_tilde: float = 0.0,
    horizon: int = DEFAULT_HORIZON,
    window: int = DEFAULT_WINDOW,
    workers: int = 1,
) -> list:
    """Planner ``t_star`` (``None`` for never) at each grid value of ``d``."""
    jobs = [(model, b1, float(d), c, c_tilde, variant, horizon, window) for d in d_grid]
    if workers > 1:
        with ProcessPoolExecutor(workers) as ex:
            return list(ex.map(_t_star_for, jobs, chunksize=max(1, len(jobs) // (4 * workers))))
    return [_t_star_for(j) for j in jobs]


def d_grid(d_min: float, d_max: float, step: float = DEFAULT_D_STEP) -> np.ndarray:
    if step <= 0:
        raise ValueError("grid step must be positive")
    n = int(math.floor((d_max - d_min) / step + 1e-9)) + 1
    # rounding keeps grid points like 34.26 free of accumulated float noise
    return np.round(d_min + step * np.arange(n), 10)


def d_range_sweep(
    model: TransitionModel,
    c: float,
    t_values,
    grid,
    b1: Belief = START_BELIEF,
    variant: str = "base",
    c_tilde: float = 0.0,
    horizon: int = DEFAULT_HORIZON,
    window: int = DEFAULT_WINDOW,
    workers: int = 1,
) -> list:
    """For each requested period, the longest run of grid ``d`` values where
    the planner picks it."""
    grid = np.asarray(grid, dtype=float)
    grid = grid[grid >= c]  # penalties require c <= d
    times = planner_times(model, c, grid, b1, variant, c_tilde, horizon, window, workers)
    out = []
    for t in t_values:
        best, run_start = None, None
        for i, ts in enumerate([*times, object()]):
            if ts == t:
                if run_start is None:
                    run_start = i
            elif run_start is not None:
                if best is None or i - run_start > best[1] - best[0]:
                    best = (run_start, i)
                run_start = None
        if best is None:
            out.append(DRange(int(t), math.nan, math.nan))
        else:
            out.append(DRange(int(t), float(grid[best[0]]), float(grid[best[1] - 1])))
    return out
