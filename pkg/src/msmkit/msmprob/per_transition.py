"""Per-transition Cox regression over the long-format data."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import LongFormatData
from ..errors import MsmkitError, ValidationError
from ..regression import CoxFit, build_design, fit_cox

CLOCK_MODES = ("markov", "semi_markov")


@dataclass(frozen=True, eq=False)
class TransitionFit:
    transition: int
    from_state: int
    to_state: int
    clock: str
    fit: CoxFit | None
    error: str | None

    def to_json(self) -> dict:
        return {
            "transition": self.transition,
            "from": self.from_state,
            "to": self.to_state,
            "clock": self.clock,
            "fit": self.fit.to_json() if self.fit is not None else None,
            "error": self.error,
        }


def per_transition_cox(
    long: LongFormatData,
    covariates=(),
    clock: str = "markov",
    ties: str = "efron",
) -> list[TransitionFit]:
    """One marginal Cox fit per transition.

    Markov clock uses study time (Tstart, Tstop]; semi-Markov resets the
    clock at state entry, (0, duration]. Unfittable transitions are
    reported inline rather than raised.
    """
    if clock not in CLOCK_MODES:
        raise ValidationError(
            f"unknown clock {clock!r}", detail={"choices": list(CLOCK_MODES)}
        )
    sys = long.system
    out = []
    for k, (h, j) in enumerate(sys.edges, start=1):
        rows = long.rows_for_transition(k)
        if len(rows) == 0:
            out.append(TransitionFit(k, h, j, clock, None, "no rows"))
            continue
        try:
            if covariates:
                design = build_design(long.covariates.select_rows(rows), covariates)
                rr = rows[design.kept]
                X = design.X
                names = design.names
                n_dropped = design.n_dropped
            else:
                rr = rows
                X = np.zeros((len(rows), 0))
                names = ()
                n_dropped = 0
            if clock == "markov":
                start, stop = long.tstart[rr], long.tstop[rr]
            else:
                start = np.zeros(len(rr))
                stop = long.tstop[rr] - long.tstart[rr]
            fit = fit_cox(
                start, stop, long.status[rr], X,
                names=names, ties=ties, n_dropped=n_dropped,
            )
            out.append(TransitionFit(k, h, j, clock, fit, None))
        except MsmkitError as exc:
            out.append(TransitionFit(k, h, j, clock, None, str(exc)))
    return out
