import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from inspection_pomdp import NoEarlierPeriodError, PenaltyParams, TransitionModel, optimal_inspection_time
from inspection_pomdp.planner import plan_value_profile
from inspection_pomdp.presets import BASELINE_MODEL, START_BELIEF
from inspection_pomdp.sensitivity import (
    d_grid,
    d_range_sweep,
    earlier_shift_inequality,
    min_pure_d_increase,
    target_time_region,
)

P1 = BASELINE_MODEL


def t_star(model, d, c):
    return optimal_inspection_time(model, PenaltyParams(d, c), START_BELIEF, check=False).t_star


def scale_event_rows(model, factor):
    """Scale p_SD, p_SC in rows V and O, taking the difference from the self-loop."""
    r = list(model.to_rows())
    for diag, d, c in ((5, 7, 8), (9, 10, 11)):
        r[diag] -= (factor - 1) * (r[d] + r[c])
        r[d] *= factor
        r[c] *= factor
    return TransitionModel.from_rows(r, model.p_ic)


def test_zero_shift_is_strictly_violated():
    pen = PenaltyParams(14, 5)
    con = earlier_shift_inequality(P1, pen, START_BELIEF, 27)
    prof = plan_value_profile(P1, pen, START_BELIEF, horizon=30)
    assert prof[25] < prof[26]
    assert not con.holds(0.0, 0.0)
    assert con.slack(0.0, 0.0) == pytest.approx(prof[25] - prof[26], abs=1e-12)


def test_no_earlier_period():
    with pytest.raises(NoEarlierPeriodError):
        earlier_shift_inequality(P1, PenaltyParams(14, 5), START_BELIEF, 1)


def test_shift_boundary_matches_planner_rerun():
    con = earlier_shift_inequality(P1, PenaltyParams(14, 5), START_BELIEF, 27)
    flip = 14 + min_pure_d_increase(con)
    grid = 14 + 1e-3 * np.arange(60)
    first = next(d for d in grid if t_star(P1, d, 5) < 27)
    assert abs(first - flip) <= 1e-3
    assert t_star(P1, flip + 1e-9, 5) == 26


def test_shift_boundary_matches_region_edge():
    con = earlier_shift_inequality(P1, PenaltyParams(14, 5), START_BELIEF, 27)
    _, d_hi = target_time_region(P1, START_BELIEF, 27).d_interval(5)
    assert 14 + min_pure_d_increase(con) == pytest.approx(d_hi, abs=1e-9)


@pytest.mark.parametrize("t_bar", [8, 12, 15, 27])
def test_riskier_model_needs_a_smaller_shift(t_bar):
    # at a matched target period, the pure-d shift from the region's lower
    # edge to the next earlier period is the width of the region
    riskier = scale_event_rows(P1, 1.2)
    shifts = []
    for m in (P1, riskier):
        d_lo, d_hi = target_time_region(m, START_BELIEF, t_bar).d_interval(5)
        d = d_lo + 1e-6
        assert t_star(m, d, 5) == t_bar
        shift = min_pure_d_increase(earlier_shift_inequality(m, PenaltyParams(d, 5), START_BELIEF, t_bar))
        assert t_star(m, d + shift + 1e-6, 5) == t_bar - 1
        shifts.append(shift)
    assert shifts[1] < shifts[0]


def test_baseline_members():
    assert target_time_region(P1, START_BELIEF, 27).contains(14, 5)
    r8 = target_time_region(P1, START_BELIEF, 8)
    assert r8.contains(30, 5) and not r8.contains(14, 5)


def test_region_rejects_out_of_range_target():
    with pytest.raises(ValueError):
        target_time_region(P1, START_BELIEF, 1)


@pytest.mark.parametrize("t_bar", [8, 12, 15, 27])
def test_region_edges_are_sharp(t_bar):
    d_lo, d_hi = target_time_region(P1, START_BELIEF, t_bar).d_interval(5)
    eps = 1e-7
    assert t_star(P1, d_lo + eps, 5) == t_star(P1, d_hi - eps, 5) == t_bar
    assert t_star(P1, d_hi + eps, 5) == t_bar - 1
    assert t_star(P1, d_lo - eps, 5) > t_bar


@settings(max_examples=100)
@given(st.sampled_from([8, 12, 15, 27]), st.floats(0, 8), st.floats(0, 1))
def test_region_membership_agrees_with_planner(t_bar, c, u):
    region = target_time_region(P1, START_BELIEF, t_bar)
    lo, hi = region.d_interval(c)
    if math.isnan(lo):
        return
    # half the samples land inside, half in a band around it
    d = lo - 0.5 * (hi - lo) + 2 * u * (hi - lo)
    if d < c:
        return
    assert region.contains(d, c) == (t_star(P1, d, c) == t_bar)


def test_widths_shrink_with_later_targets():
    widths = [target_time_region(P1, START_BELIEF, t).d_width(5) for t in (8, 12, 15, 27)]
    assert all(a >= b for a, b in zip(widths, widths[1:]))


def test_sweep_matches_regions():
    grid = d_grid(13, 35, 0.01)
    ranges = d_range_sweep(P1, 5, [8, 12, 15, 27], grid)
    for r in ranges:
        lo, hi = target_time_region(P1, START_BELIEF, r.t).d_interval(5)
        assert lo < r.d_lo <= lo + 0.01 + 1e-9
        assert hi - 0.01 - 1e-9 <= r.d_hi <= hi


def test_sweep_intervals_are_ordered_and_disjoint():
    ranges = d_range_sweep(P1, 5, range(8, 28), d_grid(13, 35, 0.05))
    nonempty = [r for r in ranges if not r.empty]
    for earlier, later in zip(nonempty, nonempty[1:]):
        assert later.d_hi < earlier.d_lo
    widths = [r.width for r in nonempty]
    assert all(a >= b for a, b in zip(widths, widths[1:]))


def test_below_every_region_the_planner_waits_longer():
    lows = [target_time_region(P1, START_BELIEF, t).d_interval(5)[0] for t in range(2, 23)]
    d = min(lows) - 0.05
    t = t_star(P1, d, 5)
    assert t is None or t > 22


def test_sweep_skips_grid_points_below_c():
    ranges = d_range_sweep(P1, 5, [27], d_grid(0, 15, 0.5))
    assert ranges[0].d_lo == 14.0


def test_unreached_target_is_empty():
    (r,) = d_range_sweep(P1, 5, [3], d_grid(13, 20, 0.5))
    assert r.empty and r.width == 0


def test_grid_points_are_clean():
    g = d_grid(5, 40, 0.01)
    assert g[0] == 5 and g[-1] == 40 and len(g) == 3501
    assert 34.26 in g
