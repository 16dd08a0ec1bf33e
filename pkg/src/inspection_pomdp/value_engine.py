"""Values of conditional inspection plans.

A plan ``ConditionalPlan(start_t, wait_j)`` keeps the facility running for
``wait_j`` operational periods and then inspects. Two evaluators are provided:

* ``recursive``: unroll the one-step value recursion along the no-report
  belief trajectory (the production path);
* ``closed-form``: weight the starting belief by path coefficients built from
  degradation paths, which depend only on the model and the wait length.

They must agree to floating-point precision; the test-suite holds them to it.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import CapError, PlanDomainError
from .markov_core import (
    C,
    D,
    OPERATIONAL,
    Belief,
    PenaltyParams,
    TransitionModel,
    _lookahead,
)

VARIANTS = ("base", "inspection-outcome")
METHODS = ("recursive", "closed-form")

# literal path enumeration is a transcription self-check only
LITERAL_CAP = 12
# the prefix recurrence is linear in depth; this only guards runaway requests
CLOSED_FORM_CAP = 5000


@dataclass(frozen=True)
class ConditionalPlan:
    """Wait ``wait_j`` operational periods from period ``start_t``, then inspect."""

    start_t: int = 1
    wait_j: int = 0

    def check(self, horizon: int):
        if self.start_t < 1:
            raise PlanDomainError(f"start_t must be >= 1, got {self.start_t}")
        if not 0 <= self.wait_j <= horizon - self.start_t:
            raise PlanDomainError(
                f"wait_j={self.wait_j} outside [0, T - start_t] = [0, {horizon - self.start_t}]"
            )


def _check_variant(variant: str):
    if variant not in VARIANTS:
        raise ValueError(f"unknown variant {variant!r}; expected one of {VARIANTS}")


def k_base(model: TransitionModel, penalties: PenaltyParams, state: str) -> float:
    """Expected one-period gain of waiting from ``state``:
    ``1 - (d+1) p_SD - (c+1) p_SC``."""
    s = OPERATIONAL.index(state)
    p = model.p
    return 1.0 - (penalties.d + 1.0) * p[s, D] - (penalties.c + 1.0) * p[s, C]


def k_vector(model: TransitionModel, penalties: PenaltyParams) -> np.ndarray:
    p = model.p
    return 1.0 - (penalties.d + 1.0) * p[:3, D] - (penalties.c + 1.0) * p[:3, C]


def monotone_paths(start: str, end: str, length: int) -> list:
    """All quality sequences of ``length`` states from ``start`` to ``end`` that
    never improve."""
    if length < 1:
        return []
    lo, hi = OPERATIONAL.index(start), OPERATIONAL.index(end)
    if lo > hi:
        return []
    if length == 1:
        return [(start,)] if lo == hi else []
    out = []
    for mid in itertools.combinations_with_replacement(range(lo, hi + 1), length - 2):
        out.append((start, *(OPERATIONAL[m] for m in mid), end))
    return out


def path_f(model: TransitionModel, path: tuple) -> float:
    """Path weight ``f`` by its defining recursion.

    ``f`` of a two-state path is ``p+1`` on the diagonal and ``p`` otherwise;
    longer paths multiply the first transition into ``f`` of the tail and add
    1 when the path never leaves its starting state.
    """
    p = model.p
    idx = [OPERATIONAL.index(s) for s in path]
    if len(idx) == 1:
        return 1.0
    if len(idx) == 2:
        a, b = idx
        return p[a, b] + 1.0 if a == b else p[a, b]
    head = p[idx[0], idx[1]] * path_f(model, path[1:])
    if idx[0] == idx[1] == idx[-1]:
        head += 1.0
    return head


def path_product(model: TransitionModel, path: tuple) -> float:
    p = model.p
    out = 1.0
    for a, b in zip(path, path[1:]):
        out *= p[OPERATIONAL.index(a), OPERATIONAL.index(b)]
    return out


@dataclass(frozen=True, eq=False)
class PathCoefficients:
    """Closed-form coefficients up to ``depth``.

    ``f_sums[i][S, S']`` is the sum of ``f`` over all degradation paths of
    ``i`` states from ``S`` to ``S'``; ``path_products[i]`` is the plain
    probability sum over the same paths. Index 0 is the empty plan.
    ``f_vals`` maps each literally enumerated path to its ``f``.
    """

    depth: int
    k_base: np.ndarray
    f_sums: np.ndarray
    path_products: np.ndarray
    c_tilde_path: np.ndarray
    f_vals: dict = field(default_factory=dict)

    @property
    def k_path(self) -> np.ndarray:
        return self.f_sums * self.k_base[None, None, :]

    def k(self, s: str, s2: str, i: int) -> float:
        return float(self.k_path[i, OPERATIONAL.index(s), OPERATIONAL.index(s2)])

    def c_tilde_ic(self, s: str, s2: str, i: int) -> float:
        return float(self.c_tilde_path[i, OPERATIONAL.index(s), OPERATIONAL.index(s2)])


def path_coefficients(
    model: TransitionModel,
    penalties: PenaltyParams,
    depth: int,
    literal: bool = True,
) -> PathCoefficients:
    """Coefficients for waits up to ``depth``.

    Sums over paths use the first-step prefix recurrence
    ``F^{i+1}_{SS'} = [S = S'] + sum_x p_Sx F^i_{xS'}`` (and the same without
    the indicator for plain products), which stays linear in ``depth``. With
    ``literal`` the explicit paths up to ``LITERAL_CAP`` states are also
    enumerated into ``f_vals``.
    """
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if depth > CLOSED_FORM_CAP:
        raise CapError(
            f"depth {depth} exceeds closed-form cap {CLOSED_FORM_CAP}; "
            "use the recursive evaluator instead"
        )
    q = np.array(model.operational_block)
    eye = np.eye(3)
    n = depth + 2
    f_sums = np.zeros((n, 3, 3))
    prods = np.zeros((n, 3, 3))
    prods[1] = eye
    f_sums[1] = eye
    for i in range(1, n - 1):
        f_sums[i + 1] = eye + q @ f_sums[i]
        prods[i + 1] = q @ prods[i]
    c_path = penalties.c_tilde * prods * model.p_ic[None, None, :]

    f_vals = {}
    if literal:
        for length in range(2, min(depth, LITERAL_CAP) + 1):
            for s in OPERATIONAL:
                for s2 in OPERATIONAL[OPERATIONAL.index(s):]:
                    for path in monotone_paths(s, s2, length):
                        f_vals[path] = path_f(model, path)
    for arr in (f_sums, prods, c_path):
        arr.setflags(write=False)
    return PathCoefficients(depth, k_vector(model, penalties), f_sums, prods, c_path, f_vals)


def _terminal_value(belief: Belief, penalties: PenaltyParams) -> float | None:
    cat = belief.category
    if cat == "inspected":
        return 0.0
    if cat == "failed":
        return -penalties.d
    if cat == "closed":
        return -penalties.c
    return None


def _recursive_value(model, penalties, b, j, variant) -> float:
    rows, pic = model._rows, model._p_ic
    d, c, ct = penalties.d, penalties.c, penalties.c_tilde
    stages = []
    for _ in range(j):
        dr, cr, nr, _, (un, uv, uo) = _lookahead(rows, pic, *b)
        stages.append((dr, cr, nr))
        if nr <= 0.0:
            break
        b = (un / nr, uv / nr, uo / nr)
    if len(stages) == j:
        val = 1.0
        if variant == "inspection-outcome":
            val -= ct * (pic[0] * b[0] + pic[1] * b[1] + pic[2] * b[2])
    else:
        val = 0.0  # unreachable continuation, multiplied by nr = 0
    for dr, cr, nr in reversed(stages):
        val = 1.0 - dr * d - cr * c + nr * val
    return val


def _closed_form_value(coef: PathCoefficients, b, j, variant) -> float:
    bv = np.asarray(b)
    val = 1.0 + float(bv @ coef.k_path[j].sum(axis=1))
    if variant == "inspection-outcome":
        val -= float(bv @ coef.c_tilde_path[j + 1].sum(axis=1))
    return val


def value_of_plan(
    model: TransitionModel,
    penalties: PenaltyParams,
    belief: Belief,
    plan: ConditionalPlan,
    horizon: int,
    variant: str = "base",
    method: str = "recursive",
    coefficients: PathCoefficients | None = None,
) -> float:
    """Expected reward from ``plan.start_t`` to the end of the game.

    The value depends on the belief and the wait length only; ``start_t`` and
    ``horizon`` fix the admissible waits. Pass precomputed ``coefficients``
    to amortise the closed form over many calls.
    """
    _check_variant(variant)
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    plan.check(horizon)
    term = _terminal_value(belief, penalties)
    if term is not None:
        return term
    b = belief.operational_part
    j = plan.wait_j
    if method == "recursive":
        return _recursive_value(model, penalties, b, j, variant)
    if coefficients is None or coefficients.depth < j:
        coefficients = path_coefficients(model, penalties, j, literal=False)
    return _closed_form_value(coefficients, b, j, variant)
