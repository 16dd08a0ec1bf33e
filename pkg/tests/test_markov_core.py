import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from inspection_pomdp import (
    AlphaUndefinedError,
    Belief,
    CategoryError,
    DegenerateUpdateError,
    DivergenceError,
    PenaltyError,
    PenaltyParams,
    TransitionModel,
    belief_trajectory,
    check_assumptions,
    hitting_times,
    observation_probs,
    update_belief_nr,
    validate_model,
)
from inspection_pomdp.presets import BASELINE_D_VALUES, BASELINE_MODEL, baseline_penalties

from strategies import models, operational_beliefs, random_model

P1 = BASELINE_MODEL


def rows_with(**changes):
    names = ["NN", "NV", "NO", "ND", "NC", "VV", "VO", "VD", "VC", "OO", "OD", "OC"]
    rows = list(P1.to_rows())
    for k, v in changes.items():
        rows[names.index(k[2:])] = v
    return rows


def matrix_power_filter(model, b, steps):
    """Unnormalised b Q^steps, renormalised: the filter without recursion."""
    v = np.asarray(b) @ np.linalg.matrix_power(model.operational_block, steps)
    return v / v.sum()


# validation


def test_baseline_is_valid():
    assert validate_model(P1).ok


def test_identity_matrix_has_no_reachable_absorption():
    report = validate_model(TransitionModel(np.eye(6), (0.0, 0.0, 0.0)))
    assert not report.ok
    assert "absorption_reachable" in report.checks_failed()


def test_row_sum_violation_names_the_row():
    model = TransitionModel.from_rows(rows_with(p_VD=0.5), P1.p_ic)
    report = validate_model(model)
    assert report.checks_failed() == {"row_sum"}
    assert report.violations[0].location == "row V"


def test_upward_transition_is_flagged():
    p = np.array(P1.p)
    p[2, 2] -= 0.1
    p[2, 0] += 0.1
    report = validate_model(TransitionModel(p, P1.p_ic))
    assert "degradation_only" in report.checks_failed()


def test_inspection_closure_probability_out_of_range():
    report = validate_model(TransitionModel.from_rows(P1.to_rows(), (0.0, 1.3, 1.0)))
    assert "p_ic_range" in report.checks_failed()


@given(models)
def test_random_models_are_valid(model):
    assert validate_model(model).ok


# penalties and beliefs


@pytest.mark.parametrize("d,c,ct", [(4, 5, 0), (14, 5, 6), (14, 5, -1)])
def test_penalty_ordering(d, c, ct):
    with pytest.raises(PenaltyError):
        PenaltyParams(d, c, ct)


def test_alpha_undefined_without_closure_penalty():
    with pytest.raises(AlphaUndefinedError):
        PenaltyParams(14, 5).alpha_d
    assert PenaltyParams(14, 5, 1).alpha_c == 5


def test_belief_must_sum_to_one():
    with pytest.raises(ValueError):
        Belief((0.5, 0.4, 0, 0, 0, 0))


def test_mixed_belief_is_rejected():
    with pytest.raises(CategoryError):
        Belief((0.5, 0, 0, 0.5, 0, 0))


def test_non_operational_belief_rejected_by_observation():
    with pytest.raises(CategoryError):
        observation_probs(P1, Belief.certain("D"))


# observation probabilities and the filter


@pytest.mark.parametrize(
    "b,expected",
    [
        ((1, 0, 0), (0, 0, 1)),
        ((0, 0, 1), (0.175, 0.075, 0.75)),
        ((0, 0.5, 0.5), (0.110, 0.04625, 0.84375)),
    ],
)
def test_observation_probs(b, expected):
    obs = observation_probs(P1, Belief.operational(*b))
    assert (obs.p_dr, obs.p_cr, obs.p_nr) == pytest.approx(expected, abs=1e-15)


@given(models, operational_beliefs())
def test_observations_partition_unity(model, b):
    obs = observation_probs(model, b)
    assert obs.p_dr + obs.p_cr + obs.p_nr == pytest.approx(1.0, abs=1e-12)
    assert obs.p_cr_given_i == pytest.approx(np.dot(model.p_ic, b.operational_part), abs=1e-15)


def test_first_update_from_n():
    b2 = update_belief_nr(P1, Belief.certain("N"))
    assert b2.operational_part == pytest.approx((0.9125, 0.0875, 0.0), abs=1e-15)


@given(models)
def test_worst_state_is_a_fixed_point(model):
    b = update_belief_nr(model, Belief.certain("O"))
    assert b.operational_part == pytest.approx((0, 0, 1), abs=1e-15)


def test_second_step_matches_matrix_power():
    b3 = update_belief_nr(P1, Belief.operational(0.9125, 0.0875, 0.0))
    assert b3.operational_part == pytest.approx(matrix_power_filter(P1, (1, 0, 0), 2), abs=1e-14)


@given(models, operational_beliefs(), st.integers(1, 60))
def test_filter_matches_matrix_power(model, b, steps):
    traj = belief_trajectory(model, b, steps + 1)
    assert traj[steps].belief.operational_part == pytest.approx(
        matrix_power_filter(model, b.operational_part, steps), abs=1e-9
    )


def test_degenerate_update():
    model = TransitionModel.from_rows(rows_with(p_OO=0.0, p_OD=0.7, p_OC=0.3), P1.p_ic)
    with pytest.raises(DegenerateUpdateError):
        update_belief_nr(model, Belief.certain("O"))


# hitting times


def test_baseline_hitting_times():
    ht = hitting_times(P1)
    assert ht.mu_o == pytest.approx(4.0, abs=1e-12)
    assert ht.mu_n == pytest.approx(138 / 7, abs=1e-12)
    assert ht.t_e == 19


def test_immediate_failure():
    model = TransitionModel.from_rows([0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 1, 0])
    ht = hitting_times(model)
    assert (ht.mu_n, ht.mu_v, ht.mu_o, ht.t_e) == (1.0, 1.0, 1.0, 0)


def test_integer_mean_uses_largest_integer_strictly_below():
    model = TransitionModel.from_rows([0.95, 0, 0, 0.05, 0, 0.9, 0, 0.1, 0, 0.9, 0.1, 0])
    ht = hitting_times(model)
    assert ht.mu_n == pytest.approx(20.0)
    assert ht.t_e == 19


def test_divergence_when_a_state_never_leaves():
    with pytest.raises(DivergenceError):
        hitting_times(TransitionModel.from_rows(rows_with(p_OO=1.0, p_OD=0.0, p_OC=0.0)))


@given(models)
def test_hitting_times_solve_the_linear_system(model):
    ht = hitting_times(model)
    mu = np.array([ht.mu_n, ht.mu_v, ht.mu_o])
    assert mu == pytest.approx(1.0 + model.operational_block @ mu, rel=1e-12)
    assert ht.t_e == math.ceil(ht.mu_n - 1e-9) - 1


# trajectories


def test_single_step_trajectory():
    traj = belief_trajectory(P1, Belief.certain("N"), 1)
    assert len(traj) == 1
    assert traj[0].belief.operational_part == (1.0, 0.0, 0.0)
    assert (traj[0].obs.p_dr, traj[0].obs.p_cr, traj[0].obs.p_nr) == (0.0, 0.0, 1.0)


def test_three_step_trajectory_matches_matrix_power():
    traj = belief_trajectory(P1, Belief.certain("N"), 3)
    for t in (1, 2):
        assert traj[t].belief.operational_part == pytest.approx(matrix_power_filter(P1, (1, 0, 0), t), abs=1e-14)


def test_trajectory_from_worst_state_is_constant():
    traj = belief_trajectory(P1, Belief.certain("O"), 25)
    assert {s.belief.operational_part for s in traj} == {(0.0, 0.0, 1.0)}


def test_trajectory_truncates_on_degenerate_update():
    model = TransitionModel.from_rows(rows_with(p_OO=0.0, p_OD=0.7, p_OC=0.3), P1.p_ic)
    traj = belief_trajectory(model, Belief.certain("O"), 5)
    assert len(traj) == 1
    assert traj.stopped.startswith("degenerate")


def test_trajectory_stops_when_converged():
    traj = belief_trajectory(P1, Belief.certain("O"), 500, converged_window=10)
    assert len(traj) < 500
    assert traj.stopped.startswith("converged")


# assumption checks


@pytest.mark.parametrize("d", BASELINE_D_VALUES)
def test_baseline_passes_all_assumptions(d):
    traj = belief_trajectory(P1, Belief.certain("N"), 200)
    report = check_assumptions(traj, baseline_penalties(d), variant=True)
    assert report.ok, report.failed()


def test_constant_trajectory_passes():
    traj = belief_trajectory(P1, Belief.certain("O"), 10)
    assert check_assumptions(traj, baseline_penalties(14), variant=True).ok


def test_failure_report_decreasing_is_caught_at_step_one():
    model = TransitionModel.from_rows([0.5, 0.3, 0, 0.2, 0, 0.9, 0, 0.1, 0, 0.9, 0.1, 0])
    traj = belief_trajectory(model, Belief.certain("N"), 10)
    check = check_assumptions(traj, PenaltyParams(14, 5))["dr_nondecreasing"]
    assert not check.passed
    assert check.first_violation == 1


def test_variant_checks_need_closure_penalty():
    traj = belief_trajectory(P1, Belief.certain("N"), 10)
    with pytest.raises(AlphaUndefinedError):
        check_assumptions(traj, PenaltyParams(14, 5), variant=True)


def test_assumptions_need_two_steps():
    with pytest.raises(ValueError):
        check_assumptions(belief_trajectory(P1, Belief.certain("N"), 1), PenaltyParams(14, 5))


@given(st.integers(0, 10_000))
def test_model_fixture_has_degradation_only_rows(seed):
    p = random_model(seed).p
    assert np.all(np.tril(p[:3, :3], -1) == 0)
