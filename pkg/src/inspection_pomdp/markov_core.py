"""State space, transition models, belief filtering and hitting times.

The facility occupies one of three operational quality states ``N``, ``V``,
``O`` (ordered from best to worst) or one of three absorbing states: ``D``
(manufacturing failure), ``C`` (non-mandatory closure) and ``I`` (inspected).
Without inspection quality can only degrade, so the operational block of the
no-inspect matrix is upper triangular.
"""
from __future__ import annotations

import math
from collections.abc import Iterator, Sequence
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from .errors import (
    AlphaUndefinedError,
    CategoryError,
    DegenerateUpdateError,
    DivergenceError,
    PenaltyError,
)

STATES = ("N", "V", "O", "D", "C", "I")
OPERATIONAL = ("N", "V", "O")
IDX = {s: i for i, s in enumerate(STATES)}
N, V, O, D, C, I = range(6)

PROB_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class TransitionModel:
    """No-inspect transition matrix over all six states plus closure-on-inspection
    probabilities for the operational states.

    Construction only checks shapes. Use :func:`validate_model` for the
    stochastic and structural invariants, so that invalid matrices can still
    be loaded and diagnosed.
    """

    p: np.ndarray
    p_ic: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        p = np.array(self.p, dtype=float)
        p_ic = np.array(self.p_ic, dtype=float)
        if p.shape != (6, 6):
            raise ValueError(f"transition matrix must be 6x6, got {p.shape}")
        if p_ic.shape != (3,):
            raise ValueError(f"p_ic must have 3 entries, got {p_ic.shape}")
        p.setflags(write=False)
        p_ic.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "p_ic", p_ic)

    @classmethod
    def from_rows(cls, no_inspect: Sequence[float], p_ic: Sequence[float] = (0.0, 0.0, 0.0)):
        """Build from the 12 structurally allowed no-inspect probabilities.

        Order is row-major: ``p_NN, p_NV, p_NO, p_ND, p_NC, p_VV, p_VO, p_VD,
        p_VC, p_OO, p_OD, p_OC``. Absorbing rows are filled in.
        """
        vals = [float(x) for x in no_inspect]
        if len(vals) != 12:
            raise ValueError(f"expected 12 no-inspect probabilities, got {len(vals)}")
        p = np.zeros((6, 6))
        p[N, [N, V, O, D, C]] = vals[0:5]
        p[V, [V, O, D, C]] = vals[5:9]
        p[O, [O, D, C]] = vals[9:12]
        p[D, D] = p[C, C] = p[I, I] = 1.0
        return cls(p, p_ic)

    def to_rows(self) -> list[float]:
        p = self.p
        return [float(x) for x in (*p[N, :5], *p[V, 1:5], *p[O, 2:5])]

    @property
    def operational_block(self) -> np.ndarray:
        """The 3x3 sub-stochastic block among ``N, V, O``."""
        return self.p[:3, :3]

    @cached_property
    def _rows(self) -> tuple:
        # plain-float copy for the scalar hot loops
        return tuple(tuple(float(x) for x in row) for row in self.p)

    @cached_property
    def _p_ic(self) -> tuple:
        return tuple(float(x) for x in self.p_ic)

    def __eq__(self, other):
        if not isinstance(other, TransitionModel):
            return NotImplemented
        return np.array_equal(self.p, other.p) and np.array_equal(self.p_ic, other.p_ic)

    __hash__ = None


@dataclass(frozen=True)
class PenaltyParams:
    """Penalties in reward units (one reward per operational period)."""

    d: float
    c: float
    c_tilde: float = 0.0

    def __post_init__(self):
        for name in ("d", "c", "c_tilde"):
            val = float(getattr(self, name))
            if not math.isfinite(val):
                raise PenaltyError(f"{name} must be finite, got {val}")
            object.__setattr__(self, name, val)
        if not 0.0 <= self.c_tilde <= self.c <= self.d:
            raise PenaltyError(
                f"penalties must satisfy 0 <= c_tilde <= c <= d, "
                f"got d={self.d}, c={self.c}, c_tilde={self.c_tilde}"
            )

    @property
    def alpha_d(self) -> float:
        if self.c_tilde == 0:
            raise AlphaUndefinedError("alpha_d = d / c_tilde is undefined when c_tilde = 0")
        return self.d / self.c_tilde

    @property
    def alpha_c(self) -> float:
        if self.c_tilde == 0:
            raise AlphaUndefinedError("alpha_c = c / c_tilde is undefined when c_tilde = 0")
        return self.c / self.c_tilde


@dataclass(frozen=True)
class Belief:
    """Probability vector over ``N, V, O, D, C, I``."""

    b: tuple

    def __post_init__(self):
        b = tuple(float(x) for x in self.b)
        if len(b) != 6:
            raise ValueError(f"belief needs 6 components, got {len(b)}")
        if any(x < 0 or not math.isfinite(x) for x in b):
            raise ValueError(f"belief components must be nonnegative and finite: {b}")
        if abs(math.fsum(b) - 1.0) > PROB_TOL:
            raise ValueError(f"belief must sum to 1, got {math.fsum(b)!r}")
        object.__setattr__(self, "b", b)
        self.category  # noqa: B018 - raises on mixed beliefs

    @classmethod
    def operational(cls, b_n: float, b_v: float, b_o: float) -> Belief:
        return cls((b_n, b_v, b_o, 0.0, 0.0, 0.0))

    @classmethod
    def certain(cls, state: str) -> Belief:
        b = [0.0] * 6
        b[IDX[state]] = 1.0
        return cls(tuple(b))

    @property
    def category(self) -> str:
        b = self.b
        if b[D] + b[C] + b[I] <= PROB_TOL:
            return "operational"
        for name, k in (("failed", D), ("closed", C), ("inspected", I)):
            if abs(b[k] - 1.0) <= PROB_TOL:
                return name
        raise CategoryError(f"belief {b} mixes operational and terminal mass")

    @property
    def is_operational(self) -> bool:
        return self.category == "operational"

    @property
    def operational_part(self) -> tuple:
        return self.b[:3]

    def __getitem__(self, state: str) -> float:
        return self.b[IDX[state]]


@dataclass(frozen=True)
class ObservationProbs:
    """One-step-ahead report probabilities, plus the chance that inspecting now
    forces a mandatory closure."""

    p_dr: float
    p_cr: float
    p_nr: float
    p_cr_given_i: float


@dataclass(frozen=True)
class Violation:
    check: str
    location: str
    message: str

    def __str__(self):
        return f"{self.check} [{self.location}]: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def checks_failed(self) -> set:
        return {v.check for v in self.violations}


def validate_model(model: TransitionModel) -> ValidationReport:
    """Check every structural invariant and collect the violations.

    Never raises; an empty report means the model is usable.
    """
    p, p_ic = model.p, model.p_ic
    out = []
    if not (np.all(np.isfinite(p)) and np.all(np.isfinite(p_ic))):
        out.append(Violation("finite", "matrix", "non-finite entries present"))
        return ValidationReport(tuple(out))

    for i, s in enumerate(STATES):
        for j, s2 in enumerate(STATES):
            if not 0.0 <= p[i, j] <= 1.0:
                out.append(Violation("range", f"row {s}, column {s2}", f"p={p[i, j]!r} outside [0, 1]"))
        total = math.fsum(p[i])
        if abs(total - 1.0) > PROB_TOL:
            out.append(Violation("row_sum", f"row {s}", f"sums to {total!r}, expected 1"))

    for i in range(3):
        for j in range(i):
            if p[i, j] != 0.0:
                out.append(Violation(
                    "degradation_only", f"row {STATES[i]}, column {STATES[j]}",
                    f"quality cannot improve without inspection, got {p[i, j]!r}",
                ))
        if p[i, I] != 0.0:
            out.append(Violation(
                "no_inspect_to_I", f"row {STATES[i]}, column I",
                f"state I is only reachable by inspecting, got {p[i, I]!r}",
            ))

    for k in (D, C, I):
        if p[k, k] != 1.0:
            out.append(Violation("absorbing", f"row {STATES[k]}", f"p_{STATES[k]*2}={p[k, k]!r}, expected 1"))

    for i, s in enumerate(OPERATIONAL):
        if not 0.0 <= p_ic[i] <= 1.0:
            out.append(Violation("p_ic_range", f"p_{s}IC", f"{p_ic[i]!r} outside [0, 1]"))

    for i, s in enumerate(OPERATIONAL):
        if not _reaches_disruption(p, i):
            out.append(Violation(
                "absorption_reachable", f"row {s}",
                f"no path from {s} to D or C; hitting times diverge",
            ))
    return ValidationReport(tuple(out))


def _reaches_disruption(p: np.ndarray, start: int) -> bool:
    seen, stack = {start}, [start]
    while stack:
        s = stack.pop()
        if s in (D, C):
            return True
        if s == I:
            continue
        for nxt in np.flatnonzero(p[s] > 0):
            if nxt not in seen:
                seen.add(int(nxt))
                stack.append(int(nxt))
    return False


def _require_operational(belief: Belief):
    if belief.category != "operational":
        raise CategoryError(f"operation needs an operational belief, got {belief.category}")


def _lookahead(rows, p_ic, bn, bv, bo):
    """Scalar core: report probabilities and unnormalized next belief."""
    rn, rv, ro = rows[N], rows[V], rows[O]
    dr = rn[D] * bn + rv[D] * bv + ro[D] * bo
    cr = rn[C] * bn + rv[C] * bv + ro[C] * bo
    nr = (rn[N] + rn[V] + rn[O]) * bn + (rv[V] + rv[O]) * bv + ro[O] * bo
    un = rn[N] * bn
    uv = rn[V] * bn + rv[V] * bv
    uo = rn[O] * bn + rv[O] * bv + ro[O] * bo
    cri = p_ic[0] * bn + p_ic[1] * bv + p_ic[2] * bo
    return dr, cr, nr, cri, (un, uv, uo)


def observation_probs(model: TransitionModel, belief: Belief) -> ObservationProbs:
    _require_operational(belief)
    dr, cr, nr, cri, _ = _lookahead(model._rows, model._p_ic, *belief.operational_part)
    return ObservationProbs(dr, cr, nr, cri)


def update_belief_nr(model: TransitionModel, belief: Belief) -> Belief:
    """Filter the belief one period forward given that nothing was reported."""
    _require_operational(belief)
    _, _, nr, _, (un, uv, uo) = _lookahead(model._rows, model._p_ic, *belief.operational_part)
    if nr <= 0.0:
        raise DegenerateUpdateError("no-report observation has probability 0 under this belief")
    return Belief.operational(un / nr, uv / nr, uo / nr)


@dataclass(frozen=True)
class HittingTimes:
    """Expected periods until ``D`` or ``C`` from each operational state, and the
    expected-time-to-disruption inspection period ``t_E``."""

    mu_n: float
    mu_v: float
    mu_o: float
    t_e: int

    def as_dict(self) -> dict:
        return {"mu_N": self.mu_n, "mu_V": self.mu_v, "mu_O": self.mu_o, "t_E": self.t_e}


def _largest_int_below(x: float) -> int:
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r) - 1
    return math.ceil(x) - 1


def hitting_times(model: TransitionModel) -> HittingTimes:
    """Mean first-passage times into ``{D, C}`` by back substitution.

    The operational block is upper triangular, so ``mu_O`` is solved first and
    ``mu_N`` last.
    """
    p = model.p
    mu = [0.0, 0.0, 0.0]
    for s in (O, V, N):
        stay = 1.0 - p[s, s]
        if stay <= 0.0:
            raise DivergenceError(f"state {STATES[s]} never leaves itself; {{D, C}} unreachable")
        mu[s] = float((1.0 + sum(p[s, s2] * mu[s2] for s2 in range(s + 1, 3) if p[s, s2] > 0)) / stay)
    return HittingTimes(mu[N], mu[V], mu[O], _largest_int_below(mu[N]))


@dataclass(frozen=True)
class TrajectoryStep:
    t: int
    belief: Belief
    obs: ObservationProbs


@dataclass(frozen=True)
class BeliefTrajectory:
    """Beliefs ``b^1..b^n`` under repeated no-report filtering.

    ``steps[t-1].obs`` holds the report probabilities for period ``t+1`` and
    the closure-on-inspection probability at ``b^t``. ``stopped`` explains a
    trajectory shorter than requested.
    """

    steps: tuple
    stopped: str | None = None

    def __len__(self):
        return len(self.steps)

    def __iter__(self) -> Iterator[TrajectoryStep]:
        return iter(self.steps)

    def __getitem__(self, i):
        return self.steps[i]

    def column(self, name: str) -> list:
        return [getattr(s.obs, name) for s in self.steps]


def belief_trajectory(
    model: TransitionModel,
    b1: Belief,
    horizon: int,
    converged_window: int | None = None,
) -> BeliefTrajectory:
    """Iterate the no-report filter for ``horizon`` periods starting at ``b1``.

    With ``converged_window`` set, stop early once the belief has moved by less
    than 1e-12 in every component for that many consecutive steps; later
    entries would repeat the last one.
    """
    _require_operational(b1)
    if horizon < 1:
        raise ValueError("horizon must be a positive integer")
    rows, pic = model._rows, model._p_ic
    b = b1.operational_part
    steps = []
    quiet = 0
    stopped = None
    for t in range(1, horizon + 1):
        dr, cr, nr, cri, (un, uv, uo) = _lookahead(rows, pic, *b)
        steps.append(TrajectoryStep(t, Belief.operational(*b), ObservationProbs(dr, cr, nr, cri)))
        if t == horizon:
            break
        if nr <= 0.0:
            stopped = f"degenerate update after t={t}: no-report probability is 0"
            break
        nb = (un / nr, uv / nr, uo / nr)
        change = max(abs(x - y) for x, y in zip(nb, b))
        b = nb
        quiet = quiet + 1 if change < PROB_TOL else 0
        if converged_window is not None and quiet >= converged_window:
            stopped = f"converged after t={t + 1}"
            dr, cr, nr, cri, _ = _lookahead(rows, pic, *b)
            steps.append(TrajectoryStep(t + 1, Belief.operational(*b), ObservationProbs(dr, cr, nr, cri)))
            break
    return BeliefTrajectory(tuple(steps), stopped)


@dataclass(frozen=True)
class AssumptionCheck:
    name: str
    passed: bool
    first_violation: int | None = None


@dataclass(frozen=True)
class AssumptionReport:
    checks: tuple

    @property
    def ok(self) -> bool:
        return all(c.passed for c in self.checks)

    def __getitem__(self, name: str) -> AssumptionCheck:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def failed(self) -> list:
        return [c for c in self.checks if not c.passed]


def _first_drop(seq, increasing: bool) -> int | None:
    for t in range(len(seq) - 1):
        delta = seq[t + 1] - seq[t]
        if (delta < -PROB_TOL) if increasing else (delta > PROB_TOL):
            return t + 1
    return None


def check_assumptions(
    trajectory: BeliefTrajectory,
    penalties: PenaltyParams,
    variant: bool = False,
) -> AssumptionReport:
    """Report which monotonicity assumptions hold along a trajectory.

    Indices are 1-based: a violation at ``t`` means the step from element
    ``t`` to ``t+1`` breaks the check.

    Base checks: ``dr_nondecreasing``, ``cr_nondecreasing``,
    ``nr_nonincreasing``. With ``variant`` also ``nr_closure_nondecreasing``
    (no-report probability times next-period closure-on-inspection
    probability, the product that enters the wait-one value) and
    ``alpha_bound`` (``alpha_d*d(dr) + alpha_c*d(cr) >= d(closure)``).
    """
    if len(trajectory) < 2:
        raise ValueError("assumption checks need a trajectory of length >= 2")
    dr = trajectory.column("p_dr")
    cr = trajectory.column("p_cr")
    nr = trajectory.column("p_nr")
    checks = [
        ("dr_nondecreasing", _first_drop(dr, True)),
        ("cr_nondecreasing", _first_drop(cr, True)),
        ("nr_nonincreasing", _first_drop(nr, False)),
    ]
    if variant:
        a_d, a_c = penalties.alpha_d, penalties.alpha_c
        cri = trajectory.column("p_cr_given_i")
        prod = [nr[t] * cri[t + 1] for t in range(len(cri) - 1)]
        checks.append(("nr_closure_nondecreasing", _first_drop(prod, True)))
        bad = None
        for t in range(len(dr) - 1):
            lhs = a_d * (dr[t + 1] - dr[t]) + a_c * (cr[t + 1] - cr[t])
            if lhs < cri[t + 1] - cri[t] - PROB_TOL:
                bad = t + 1
                break
        checks.append(("alpha_bound", bad))
    return AssumptionReport(tuple(AssumptionCheck(n, v is None, v) for n, v in checks))
