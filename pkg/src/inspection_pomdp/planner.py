"""Optimal inspection time by comparing "inspect now" with "wait one period".

Under the monotonicity assumptions the comparison of the two plans ``(i)``
and ``(ni, i)`` at each period is enough to find the optimal plan: the first
period where waiting one more period is no better than inspecting is optimal,
and stays so afterwards. The score ``V(ni,i) - V(i)`` is the urgency signal;
the lower it is, the more pressing the inspection.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .markov_core import (
    AssumptionReport,
    Belief,
    BeliefTrajectory,
    ObservationProbs,
    PenaltyParams,
    TransitionModel,
    _require_operational,
    belief_trajectory,
    check_assumptions,
    observation_probs,
    update_belief_nr,
)
from .value_engine import _check_variant, path_coefficients

DEFAULT_HORIZON = 500
DEFAULT_WINDOW = 50


@dataclass(frozen=True)
class StopCondition:
    v_inspect: float
    v_wait_one: float
    score: float

    @property
    def inspect(self) -> bool:
        # ties inspect
        return self.score <= 0.0


def _stop_from_obs(now: ObservationProbs, nxt_cri: float, penalties: PenaltyParams, variant: str) -> StopCondition:
    d, c, ct = penalties.d, penalties.c, penalties.c_tilde
    if variant == "base":
        v_i = 1.0
        v_w = 1.0 - now.p_dr * d - now.p_cr * c + now.p_nr
    else:
        v_i = 1.0 - ct * now.p_cr_given_i
        v_w = 1.0 - now.p_dr * d - now.p_cr * c + now.p_nr * (1.0 - ct * nxt_cri)
    return StopCondition(v_i, v_w, v_w - v_i)


def stop_condition(
    model: TransitionModel,
    penalties: PenaltyParams,
    belief: Belief,
    variant: str = "base",
) -> StopCondition:
    """Values of inspecting now and of waiting exactly one period."""
    _check_variant(variant)
    _require_operational(belief)
    obs = observation_probs(model, belief)
    nxt_cri = 0.0
    if variant != "base" and obs.p_nr > 0.0:
        nxt_cri = observation_probs(model, update_belief_nr(model, belief)).p_cr_given_i
    return _stop_from_obs(obs, nxt_cri, penalties, variant)


@dataclass(frozen=True)
class PlanDecision:
    """Outcome of the two-plan walk.

    ``t_star`` is the first period where inspecting is optimal, or ``None``
    when the belief converged with waiting still preferred (never inspect).
    ``forced_at_T`` marks a decision imposed by the horizon.
    """

    t_star: int | None
    forced_at_T: bool
    score_trace: tuple
    assumption_report: AssumptionReport | None
    variant: str = "base"
    horizon: int = DEFAULT_HORIZON

    @property
    def never(self) -> bool:
        return self.t_star is None

    @property
    def assumptions_ok(self) -> bool:
        return self.assumption_report is None or self.assumption_report.ok


def _scores(traj: BeliefTrajectory, penalties: PenaltyParams, variant: str) -> list:
    steps = traj.steps
    out = []
    for k, step in enumerate(steps):
        nxt = steps[k + 1].obs.p_cr_given_i if k + 1 < len(steps) else step.obs.p_cr_given_i
        out.append(_stop_from_obs(step.obs, nxt, penalties, variant))
    return out


def score_profile(
    model: TransitionModel,
    penalties: PenaltyParams,
    b1: Belief,
    variant: str = "base",
    horizon: int = DEFAULT_HORIZON,
) -> list:
    """Stop conditions at every period ``1..horizon`` of the no-report
    trajectory, without stopping at the first crossing."""
    _check_variant(variant)
    traj = belief_trajectory(model, b1, horizon + 1)
    return _scores(traj, penalties, variant)[:horizon]


def optimal_inspection_time(
    model: TransitionModel,
    penalties: PenaltyParams,
    b1: Belief,
    variant: str = "base",
    horizon: int = DEFAULT_HORIZON,
    window: int = DEFAULT_WINDOW,
    check: bool = True,
) -> PlanDecision:
    """Walk the no-report trajectory from period 1 and stop at the first
    period whose score is ``<= 0``.

    If the belief stops moving (below 1e-12 for ``window`` steps) while the
    score is still positive the decision is "never"; if the horizon comes
    first the inspection is forced at ``T``. Assumption violations are
    reported on the decision, not raised.
    """
    _check_variant(variant)
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    # one step past T supplies the next-period closure probability
    traj = belief_trajectory(model, b1, horizon + 1, converged_window=window)
    report = None
    if check and len(traj) >= 2:
        report = check_assumptions(traj, penalties, variant=(variant != "base"))
    stops = _scores(traj, penalties, variant)
    converged = traj.stopped is not None and traj.stopped.startswith("converged")
    trace = []
    for t, sc in enumerate(stops, start=1):
        if t == horizon:
            trace.append(sc.score)
            if sc.inspect:
                return PlanDecision(t, False, tuple(trace), report, variant, horizon)
            return PlanDecision(horizon, True, tuple(trace), report, variant, horizon)
        trace.append(sc.score)
        if sc.inspect:
            return PlanDecision(t, False, tuple(trace), report, variant, horizon)
    if converged:
        return PlanDecision(None, False, tuple(trace), report, variant, horizon)
    # degenerate trajectory: nothing can be observed after the last step
    return PlanDecision(len(stops), True, tuple(trace), report, variant, horizon)


def plan_value_profile(
    model: TransitionModel,
    penalties: PenaltyParams,
    b1: Belief,
    variant: str = "base",
    horizon: int = DEFAULT_HORIZON,
) -> np.ndarray:
    """``V^1(b1, sigma_j)`` for every wait ``j = 0..T-1`` via the closed form.

    This is the brute-force oracle for the two-plan walk: its first argmax is
    ``t_star - 1``.
    """
    _check_variant(variant)
    _require_operational(b1)
    coef = path_coefficients(model, penalties, horizon, literal=False)
    b = np.asarray(b1.operational_part)
    vals = 1.0 + coef.k_path[:horizon].sum(axis=2) @ b
    if variant != "base":
        vals = vals - coef.c_tilde_path[1:horizon + 1].sum(axis=2) @ b
    return vals


def is_unimodal(profile, slack: float = 1e-9) -> bool:
    """Non-decreasing up to some index, non-increasing after it."""
    x = np.asarray(profile)
    m = int(np.argmax(x))
    up = np.all(np.diff(x[: m + 1]) >= -slack)
    down = np.all(np.diff(x[m:]) <= slack)
    return bool(up and down)

