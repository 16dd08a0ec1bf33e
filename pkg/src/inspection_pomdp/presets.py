"""Reference facility used throughout the experiments and tests."""
from .markov_core import Belief, PenaltyParams, TransitionModel

BASELINE_MODEL = TransitionModel.from_rows(
    [
        0.9125, 0.0875, 0.0, 0.0, 0.0,
        0.825, 0.1125, 0.045, 0.0175,
        0.75, 0.175, 0.075,
    ],
    p_ic=(0.0, 0.3, 1.0),
)

# d varies per experiment; c and c_tilde are held fixed
BASELINE_C = 5.0
BASELINE_C_TILDE = 1.0
BASELINE_D_VALUES = (14.0, 18.0, 22.0, 26.0, 30.0)


def baseline_penalties(d: float = 14.0) -> PenaltyParams:
    return PenaltyParams(d=d, c=BASELINE_C, c_tilde=BASELINE_C_TILDE)


START_BELIEF = Belief.certain("N")
