"""Monte-Carlo evaluation of inspection rules on sampled degradation paths.

Each run starts in ``N`` at period 1 and steps the no-inspect chain until it
first enters ``D`` or ``C`` at period ``t_F``. Every rule is scored on the same
path (common random numbers):

* caught when the rule's period is strictly before ``t_F``; the value is one
  reward per operational period up to and including the inspection period,
  minus ``c_tilde`` when the run's reserved uniform falls below the
  closure-on-inspection probability of the state at that period;
* otherwise the value is ``t_F - 1`` rewards minus the penalty of the event.

Randomness is counter based: run ``r`` draws from a Philox stream keyed by the
seed with ``r`` in the counter, so results do not depend on execution order
or on how runs are split across workers.
"""
from __future__ import annotations

import hashlib
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import SimulationCapError
from .markov_core import (
    C,
    D,
    STATES,
    PenaltyParams,
    TransitionModel,
    hitting_times,
    validate_model,
)

log = logging.getLogger(__name__)

DIAGONAL_CAP = 0.995
DEFAULT_MAX_STEPS = 100_000
VALUE_ACCOUNTING = "reward-through-inspection-period"

# counter word 3 separates the per-run stream from the once-per-batch matrix draw
_RUN_STREAM, _BATCH_STREAM = 0, 1


def run_stream(seed: int, run: int, purpose: int = _RUN_STREAM) -> np.random.Generator:
    """Independent generator for one run, addressed by counter."""
    if not 0 <= seed < 2**64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return np.random.Generator(np.random.Philox(key=seed, counter=[0, 0, run, purpose]))


@dataclass(frozen=True)
class InspectionRule:
    """Inspect in period ``time``; ``None`` never inspects."""

    name: str
    time: int | None

    def __post_init__(self):
        if self.time is not None and self.time < 1:
            raise ValueError(f"rule {self.name!r}: inspection period must be >= 1")


@dataclass(frozen=True)
class SimConfig:
    penalties: PenaltyParams
    rules: tuple = ()
    n_runs: int = 100_000
    seed: int = 0
    perturbation_sd: float = 0.0
    perturb_per_run: bool = True
    max_steps: int = DEFAULT_MAX_STEPS
    raw_records: bool = False
    workers: int = 1

    def __post_init__(self):
        object.__setattr__(self, "rules", tuple(self.rules))
        if self.n_runs < 1:
            raise ValueError("n_runs must be >= 1")
        if self.perturbation_sd < 0:
            raise ValueError("perturbation_sd must be >= 0")
        finite = [r.time for r in self.rules if r.time is not None]
        if finite and self.max_steps < max(finite):
            raise ValueError("max_steps must cover every finite rule time")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")


@dataclass(frozen=True)
class Trajectory:
    """Realised states for periods ``1..t_f``; the last one is the event."""

    states: tuple
    t_f: int
    event: str
    ic_draw: float

    def state_at(self, t: int) -> str:
        return self.states[t - 1]


@lru_cache(maxsize=64)
def _cumulative_rows(p_bytes: bytes) -> tuple:
    p = np.frombuffer(p_bytes).reshape(6, 6)
    out = []
    for s in range(3):
        cum = np.cumsum(p[s, :5])
        # pin the tail to 1 so rounding never routes a draw into a zero entry
        cum[int(np.flatnonzero(p[s, :5])[-1]):] = 1.0
        out.append(tuple(float(x) for x in cum))
    return tuple(out)


def sample_trajectory(model: TransitionModel, rng, max_steps: int = DEFAULT_MAX_STEPS) -> Trajectory:
    """Run the chain from ``N`` until it enters ``D`` or ``C``.

    The first uniform drawn is reserved for inspection-closure outcomes; each
    later one drives one transition by inverse CDF over ``N, V, O, D, C``.
    """
    cum = _cumulative_rows(model.p.tobytes())
    ic = float(rng.random())
    s = 0
    states = ["N"]
    for _ in range(max_steps):
        u = rng.random()
        row = cum[s]
        nxt = 0
        while nxt < 4 and u >= row[nxt]:
            nxt += 1
        states.append(STATES[nxt])
        if nxt in (D, C):
            return Trajectory(tuple(states), len(states), STATES[nxt], ic)
        s = nxt
    raise SimulationCapError(f"no absorption within {max_steps} steps")


@dataclass(frozen=True)
class RuleOutcome:
    value: float
    caught: bool


def evaluate_rule(
    trajectory: Trajectory,
    rule_time: int | None,
    penalties: PenaltyParams,
    variant: bool,
    model: TransitionModel,
) -> RuleOutcome:
    """Score one rule on one path; ``variant`` applies inspection closures."""
    if rule_time is not None and rule_time < trajectory.t_f:
        value = float(rule_time)
        if variant:
            k = "NVO".index(trajectory.state_at(rule_time))
            if trajectory.ic_draw < model.p_ic[k]:
                value -= penalties.c_tilde
        return RuleOutcome(value, True)
    pen = penalties.d if trajectory.event == "D" else penalties.c
    return RuleOutcome(trajectory.t_f - 1 - pen, False)


def _perturb(model: TransitionModel, s: float, rng) -> tuple:
    p = np.array(model.p)
    base = model.p
    renormalized = 0
    for r in range(3):
        cols = [c for c in range(5) if base[r, c] > 0]
        if not cols:
            continue
        remaining = 1.0
        new = {}
        for c in cols[:-1]:
            x = rng.normal(base[r, c], s)
            if c == r:
                x = min(x, DIAGONAL_CAP)
            x = min(max(x, 0.0), remaining)
            new[c] = x
            remaining -= x
        if remaining < 0.0:
            # unreachable with sequential clamping; kept as a guard
            total = sum(new.values())
            new = {c: v / total for c, v in new.items()}
            remaining = 0.0
            renormalized += 1
        new[cols[-1]] = remaining
        p[r, :5] = 0.0
        for c, v in new.items():
            p[r, c] = v
    return TransitionModel(p, model.p_ic), renormalized


def perturb_matrix(model: TransitionModel, s: float, rng) -> TransitionModel:
    """Draw a noisy copy of the no-inspect matrix.

    Each structurally nonzero entry is drawn from ``Normal(p, s)`` in column
    order ``N, V, O, D, C``: the diagonal is capped at 0.995, every entry is
    clamped to ``[0, remaining row mass]``, and the last nonzero entry takes
    the residual. Zero entries stay zero, so the degradation-only pattern is
    preserved.
    """
    if s < 0:
        raise ValueError("s must be >= 0")
    if s == 0:
        return model
    return _perturb(model, s, rng)[0]


def etd_recommendations(model: TransitionModel, s: float, n: int, seed: int) -> np.ndarray:
    """Expected-time-to-disruption periods of ``n`` perturbed copies."""
    out = np.empty(n, dtype=np.int64)
    for r in range(n):
        out[r] = hitting_times(perturb_matrix(model, s, run_stream(seed, r))).t_e
    return out


@dataclass(frozen=True)
class RuleSummary:
    name: str
    time: int | None
    caught_fraction: float | None
    mean_value_no_ic: float
    mean_value_ic: float
    n_excluded: int


@dataclass(frozen=True)
class EndTimeStats:
    mean: float
    std: float
    median: float
    min: int
    max: int


@dataclass(frozen=True, eq=False)
class SimReport:
    rules: tuple
    end_times: EndTimeStats
    n_runs: int
    excluded_runs: tuple
    n_renormalized_rows: int = 0
    records: dict | None = None
    value_accounting: str = VALUE_ACCOUNTING

    @property
    def n_included(self) -> int:
        return self.n_runs - len(self.excluded_runs)

    def rule(self, name: str) -> RuleSummary:
        for r in self.rules:
            if r.name == name:
                return r
        raise KeyError(name)

    def fingerprint(self) -> str:
        h = hashlib.sha256()
        h.update(repr((self.rules, self.end_times, self.n_runs, self.excluded_runs,
                       self.n_renormalized_rows, self.value_accounting)).encode())
        for k in sorted(self.records or {}):
            h.update(k.encode())
            h.update(np.ascontiguousarray(self.records[k]).tobytes())
        return h.hexdigest()

    def __eq__(self, other):
        if not isinstance(other, SimReport):
            return NotImplemented
        return self.fingerprint() == other.fingerprint()

    __hash__ = None


def _simulate_runs(args) -> dict:
    model, config, rules, start, stop, batch_model = args
    pen = config.penalties
    s = config.perturbation_sd
    n = stop - start
    k = len(rules)
    t_f = np.zeros(n, dtype=np.int64)
    event = np.zeros(n, dtype="U1")
    ic = np.zeros(n)
    etd = np.full(n, -1, dtype=np.int64)
    val = np.zeros((n, k))
    val_ic = np.zeros((n, k))
    caught = np.zeros((n, k), dtype=bool)
    ok = np.ones(n, dtype=bool)
    renorm = 0
    for i, run in enumerate(range(start, stop)):
        rng = run_stream(config.seed, run)
        m = batch_model or model
        if s > 0 and batch_model is None:
            m, nr = _perturb(model, s, rng)
            renorm += nr
        if s > 0:
            etd[i] = hitting_times(m).t_e
        try:
            traj = sample_trajectory(m, rng, config.max_steps)
        except SimulationCapError:
            ok[i] = False
            continue
        t_f[i], event[i], ic[i] = traj.t_f, traj.event, traj.ic_draw
        for j, rule in enumerate(rules):
            plain = evaluate_rule(traj, rule.time, pen, False, m)
            val[i, j] = plain.value
            caught[i, j] = plain.caught
            val_ic[i, j] = evaluate_rule(traj, rule.time, pen, True, m).value if plain.caught else plain.value
    return dict(t_f=t_f, event=event, ic=ic, etd=etd, val=val, val_ic=val_ic,
                caught=caught, ok=ok, renorm=renorm)


def _chunks(n: int, parts: int) -> list:
    step = math.ceil(n / parts)
    return [(a, min(a + step, n)) for a in range(0, n, step)]


def run_experiment(config: SimConfig, model: TransitionModel, rules=None) -> SimReport:
    """Simulate ``config.n_runs`` paths and summarise every rule on them."""
    report = validate_model(model)
    if not report.ok:
        raise ValueError("invalid transition model: " + "; ".join(map(str, report.violations)))
    rules = tuple(config.rules if rules is None else rules)
    if not rules:
        raise ValueError("no inspection rules to evaluate")
    batch_model = None
    if config.perturbation_sd > 0 and not config.perturb_per_run:
        batch_model = perturb_matrix(model, config.perturbation_sd, run_stream(config.seed, 0, _BATCH_STREAM))

    spans = _chunks(config.n_runs, config.workers)
    jobs = [(model, config, rules, a, b, batch_model) for a, b in spans]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as ex:
            parts = list(ex.map(_simulate_runs, jobs))
    else:
        parts = [_simulate_runs(j) for j in jobs]
    rec = {k: np.concatenate([p[k] for p in parts]) for k in parts[0] if k != "renorm"}
    renorm = sum(p["renorm"] for p in parts)

    ok = rec["ok"]
    excluded = tuple(int(i) for i in np.flatnonzero(~ok))
    if excluded:
        log.warning("%d runs hit max_steps=%d and were excluded", len(excluded), config.max_steps)
    if not ok.any():
        raise SimulationCapError("every run exceeded max_steps")
    t_f = rec["t_f"][ok]
    summaries = []
    for j, rule in enumerate(rules):
        caught = rec["caught"][ok, j]
        summaries.append(RuleSummary(
            name=rule.name,
            time=rule.time,
            caught_fraction=None if rule.time is None else float(np.mean(caught)),
            mean_value_no_ic=float(np.mean(rec["val"][ok, j])),
            mean_value_ic=float(np.mean(rec["val_ic"][ok, j])),
            n_excluded=len(excluded),
        ))
    stats = EndTimeStats(
        mean=float(np.mean(t_f)),
        std=float(np.std(t_f, ddof=1)) if t_f.size > 1 else 0.0,
        median=float(np.median(t_f)),
        min=int(t_f.min()),
        max=int(t_f.max()),
    )
    records = None
    if config.raw_records or config.perturbation_sd > 0:
        records = {"run": np.arange(config.n_runs), "t_f": rec["t_f"], "event": rec["event"],
                   "ic_draw": rec["ic"], "included": ok}
        if config.perturbation_sd > 0:
            records["t_e_matrix"] = rec["etd"]
        if config.raw_records:
            for j, rule in enumerate(rules):
                records[f"value:{rule.name}"] = rec["val"][:, j]
                records[f"value_ic:{rule.name}"] = rec["val_ic"][:, j]
    return SimReport(tuple(summaries), stats, config.n_runs, excluded, renorm, records)


def survival_fraction(report: SimReport, t: int) -> float:
    """Empirical ``P(t_F > t)`` from a report's raw records."""
    if report.records is None:
        raise ValueError("report has no raw records")
    ok = report.records["included"]
    return float(np.mean(report.records["t_f"][ok] > t))


__all__ = [
    "DIAGONAL_CAP",
    "VALUE_ACCOUNTING",
    "EndTimeStats",
    "InspectionRule",
    "RuleOutcome",
    "RuleSummary",
    "SimConfig",
    "SimReport",
    "Trajectory",
    "etd_recommendations",
    "evaluate_rule",
    "perturb_matrix",
    "run_experiment",
    "run_stream",
    "sample_trajectory",
    "survival_fraction",
]
