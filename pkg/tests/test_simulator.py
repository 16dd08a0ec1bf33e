import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from inspection_pomdp import PenaltyParams, SimulationCapError, TransitionModel, hitting_times, validate_model
from inspection_pomdp.presets import BASELINE_MODEL, baseline_penalties
from inspection_pomdp.simulator import (
    InspectionRule,
    SimConfig,
    Trajectory,
    etd_recommendations,
    evaluate_rule,
    perturb_matrix,
    run_experiment,
    run_stream,
    sample_trajectory,
    survival_fraction,
)

from strategies import random_model

P1 = BASELINE_MODEL
PEN = baseline_penalties(14)


class Scripted:
    """Stand-in generator that replays fixed uniforms."""

    def __init__(self, *values):
        self.values = list(values)

    def random(self):
        return self.values.pop(0)


def test_forced_shortest_path():
    # ic draw, then N -> V (u above p_NN) and V -> D
    traj = sample_trajectory(P1, Scripted(0.5, 0.95, 0.95))
    assert traj.states == ("N", "V", "D")
    assert (traj.t_f, traj.event, traj.ic_draw) == (3, "D", 0.5)


def test_draw_just_below_one_stays_on_the_support():
    top = float(np.nextafter(1.0, 0.0))
    traj = sample_trajectory(P1, Scripted(0.5, top, 0.0, top))
    assert traj.states[:2] == ("N", "V")


def test_step_cap():
    sticky = TransitionModel.from_rows([1 - 1e-12, 0, 0, 1e-12, 0, 0.5, 0, 0.5, 0, 0.5, 0.5, 0])
    with pytest.raises(SimulationCapError):
        sample_trajectory(sticky, run_stream(0, 0), max_steps=50)


def test_uncaught_failure():
    out = evaluate_rule(Trajectory(("N", "V", "D"), 3, "D", 0.5), 24, PenaltyParams(14, 5), False, P1)
    assert (out.value, out.caught) == (-12, False)


def test_caught_base():
    traj = Trajectory(("N",) * 5 + ("V",) * 4 + ("O", "C"), 11, "C", 0.5)
    out = evaluate_rule(traj, 9, PEN, False, P1)
    assert (out.value, out.caught) == (9, True)


def test_caught_with_forced_closure():
    traj = Trajectory(("N",) * 5 + ("V",) * 3 + ("O", "D"), 10, "D", 0.99)
    out = evaluate_rule(traj, 9, PEN, True, P1)
    assert (out.value, out.caught) == (8, True)


def test_inspecting_in_the_event_period_is_too_late():
    traj = Trajectory(("N", "V", "O", "C"), 4, "C", 0.0)
    assert not evaluate_rule(traj, 4, PEN, False, P1).caught
    assert evaluate_rule(traj, 4, PEN, False, P1).value == 3 - 5
    assert evaluate_rule(traj, None, PEN, True, P1).value == 3 - 5


def test_zero_sd_returns_the_model():
    assert perturb_matrix(P1, 0.0, run_stream(0, 0)) is P1


@settings(max_examples=200)
@given(st.integers(0, 2**32 - 1), st.sampled_from([0.01, 0.02, 0.1, 0.5]))
def test_perturbed_models_are_valid(seed, s):
    m = perturb_matrix(P1, s, run_stream(seed, 0))
    assert validate_model(m).ok
    assert np.all((m.p == 0) == (P1.p == 0) | (m.p == 0))
    assert np.all(np.diag(m.p)[:3] <= 0.995)


def test_ten_thousand_perturbations_are_valid():
    for r in range(10_000):
        assert validate_model(perturb_matrix(P1, 0.01, run_stream(7, r))).ok


def test_etd_recommendations_concentrate():
    etd = etd_recommendations(P1, 0.01, 2000, seed=11)
    assert np.mean((etd >= 17) & (etd <= 21)) >= 0.88


def test_single_forced_run():
    chain = TransitionModel.from_rows([0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0])
    rep = run_experiment(SimConfig(PenaltyParams(14, 5), [InspectionRule("one", 1)], n_runs=1), chain)
    assert rep.rule("one").caught_fraction == 1.0
    assert rep.rule("one").mean_value_no_ic == 1.0
    assert rep.end_times.min == rep.end_times.max == 3


def test_never_rule_has_no_caught_fraction():
    rep = run_experiment(SimConfig(PEN, [InspectionRule("never", None)], n_runs=200), P1)
    assert rep.rule("never").caught_fraction is None


def test_determinism_and_worker_independence():
    rules = [InspectionRule("etd", 19), InspectionRule("never", None)]
    cfg = SimConfig(PEN, rules, n_runs=3000, seed=5, perturbation_sd=0.01, raw_records=True)
    a = run_experiment(cfg, P1)
    b = run_experiment(cfg, P1)
    c = run_experiment(SimConfig(PEN, rules, n_runs=3000, seed=5, perturbation_sd=0.01,
                                 raw_records=True, workers=3), P1)
    assert a == b == c
    other = run_experiment(SimConfig(PEN, rules, n_runs=3000, seed=6, perturbation_sd=0.01, raw_records=True), P1)
    assert a != other


def test_batch_perturbation_uses_one_matrix():
    cfg = SimConfig(PEN, [InspectionRule("etd", 19)], n_runs=500, seed=2, perturbation_sd=0.05,
                    perturb_per_run=False)
    assert len(set(run_experiment(cfg, P1).records["t_e_matrix"])) == 1
    per_run = SimConfig(PEN, [InspectionRule("etd", 19)], n_runs=500, seed=2, perturbation_sd=0.05)
    assert len(set(run_experiment(per_run, P1).records["t_e_matrix"])) > 1


def test_capped_runs_are_excluded_and_listed():
    slow = TransitionModel.from_rows([0.99, 0.01, 0, 0, 0, 0.99, 0, 0.01, 0, 0.5, 0.5, 0])
    cfg = SimConfig(PEN, [InspectionRule("r", 5)], n_runs=300, seed=1, max_steps=60)
    rep = run_experiment(cfg, slow)
    assert rep.excluded_runs
    assert rep.rule("r").n_excluded == len(rep.excluded_runs)
    assert rep.n_included == 300 - len(rep.excluded_runs)
    assert rep.end_times.max <= 61


def test_invalid_model_is_rejected():
    bad = TransitionModel.from_rows([0.9, 0.2, 0, 0, 0, 0.8, 0.1, 0.05, 0.05, 0.8, 0.1, 0.1])
    with pytest.raises(ValueError):
        run_experiment(SimConfig(PEN, [InspectionRule("r", 5)], n_runs=10), bad)


def test_config_checks():
    with pytest.raises(ValueError):
        SimConfig(PEN, [InspectionRule("r", 500)], max_steps=100)
    with pytest.raises(ValueError):
        InspectionRule("r", 0)


@pytest.mark.parametrize("seed", [0, 1, 2, 3])
def test_mean_end_time_matches_hitting_time(seed):
    m = random_model(seed, diag=(0.5, 0.9))
    rep = run_experiment(SimConfig(PEN, [InspectionRule("never", None)], n_runs=20_000, seed=seed), m)
    se = rep.end_times.std / np.sqrt(rep.n_included)
    assert abs(rep.end_times.mean - 1 - hitting_times(m).mu_n) < 3 * se


def test_caught_fraction_is_survival_past_the_rule():
    cfg = SimConfig(PEN, [InspectionRule("r", 19)], n_runs=5000, seed=9, raw_records=True)
    rep = run_experiment(cfg, P1)
    assert rep.rule("r").caught_fraction == survival_fraction(rep, 19)


def test_variant_value_never_exceeds_base():
    rules = [InspectionRule(str(t), t) for t in (5, 19, 27, 60)]
    rep = run_experiment(SimConfig(PEN, rules, n_runs=2000, seed=4), P1)
    for r in rep.rules:
        assert r.mean_value_ic <= r.mean_value_no_ic


def test_run_streams_are_distinct():
    a = run_stream(1, 0).random(4)
    assert not np.array_equal(a, run_stream(1, 1).random(4))
    assert not np.array_equal(a, run_stream(2, 0).random(4))
    assert np.array_equal(a, run_stream(1, 0).random(4))
