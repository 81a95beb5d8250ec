"""Multi-state transition probabilities, CIF, and bootstrap intervals."""

from .aalen_johansen import (
    aalen_johansen,
    check_s_grid,
    default_grid,
    landmark_aalen_johansen,
    occupied_at,
    product_integral,
    transition_increments,
)
from .bootstrap import bootstrap_curves, substream
from .cif import cif
from .conditional import breslow_conditional, ipcw_conditional
from .curves import CifCurve, ProbabilityCurve
from .landmark import landmark_idm, presmoothed_landmark_idm
from .per_transition import CLOCK_MODES, TransitionFit, per_transition_cox

TP_METHODS = ("aj", "lm", "plm", "lmaj", "ipcw", "breslow")

__all__ = [
    "CLOCK_MODES",
    "CifCurve",
    "ProbabilityCurve",
    "TP_METHODS",
    "TransitionFit",
    "aalen_johansen",
    "bootstrap_curves",
    "breslow_conditional",
    "check_s_grid",
    "cif",
    "default_grid",
    "ipcw_conditional",
    "landmark_aalen_johansen",
    "landmark_idm",
    "occupied_at",
    "per_transition_cox",
    "presmoothed_landmark_idm",
    "product_integral",
    "substream",
    "transition_increments",
]
