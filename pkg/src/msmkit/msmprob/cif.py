"""Cumulative incidence of the intermediate state in the illness-death model."""

from __future__ import annotations

from fractions import Fraction

import numpy as np

from ..dataio import ValidatedIdmData
from ..errors import ValidationError
from .conditional import censoring_left_limits, continuous_covariate, kernel_weights
from .curves import CifCurve


def _aalen_johansen_cif(data: ValidatedIdmData, grid):
    """Exact competing-risks CIF of entering state 2 (and of direct death)."""
    t1 = data.time1
    e1 = data.event1
    ev = data.event
    leave = np.maximum(e1, ev)
    ill = (leave == 1) & (e1 == 1)
    death = (leave == 1) & (e1 == 0)

    times = np.unique(t1[leave == 1])
    order = np.sort(t1)
    surv = Fraction(1)
    cif_ill = Fraction(0)
    cif_death = Fraction(0)
    steps_ill = []
    steps_death = []
    for u in times:
        n = len(order) - int(np.searchsorted(order, u, side="left"))
        d_ill = int((ill & (t1 == u)).sum())
        d_death = int((death & (t1 == u)).sum())
        cif_ill += surv * Fraction(d_ill, n)
        cif_death += surv * Fraction(d_death, n)
        surv *= Fraction(n - d_ill - d_death, n)
        steps_ill.append(cif_ill)
        steps_death.append(cif_death)
    idx = np.searchsorted(times, np.asarray(grid, dtype=float), side="right") - 1
    at_ill = [steps_ill[i] if i >= 0 else Fraction(0) for i in idx]
    at_death = [steps_death[i] if i >= 0 else Fraction(0) for i in idx]
    return at_ill, at_death


def cif(
    data: ValidatedIdmData,
    grid,
    covariate: str | None = None,
    level: str | None = None,
    x0=None,
    bandwidth=None,
) -> CifCurve:
    """P(entered the intermediate state by t), optionally conditional.

    Categorical conditioning subsets on the level; continuous conditioning
    uses the kernel-IPCW scheme.
    """
    grid = np.sort(np.asarray(grid, dtype=float))
    if len(grid) == 0:
        raise ValidationError("grid must be nonempty")
    flags: list[str] = []
    conditioning = None

    if covariate is not None:
        col = data.covariates.column(covariate)
        if col.kind == "categorical" or level is not None:
            if level is None:
                raise ValidationError(
                    f"categorical covariate {covariate!r} needs a level"
                )
            vals = data.covariates.values(covariate)
            idx = [i for i, v in enumerate(vals) if v == level]
            if not idx:
                raise ValidationError(
                    f"no rows with {covariate!r} == {level!r}",
                    detail={"levels": list(col.levels or ())},
                )
            data = data.subset(idx)
            conditioning = {"covariate": covariate, "level": level}
        else:
            if x0 is None:
                raise ValidationError(
                    f"continuous covariate {covariate!r} needs a value x0"
                )
            data, x, x0 = continuous_covariate(data, covariate, x0, flags)
            w, h = kernel_weights(x, x0, bandwidth, flags)
            G1 = censoring_left_limits(data.stime, data.event, data.time1)
            obs_ill = (data.event1 == 1) & (G1 > 0)
            if ((data.event1 == 1) & (G1 <= 0)).any():
                flags.append("zero_ipcw_weight")
            inv = np.where(obs_ill, 1.0 / np.maximum(G1, 1e-300), 0.0)
            W = w.sum()
            est = np.array(
                [float((w * inv * (data.time1 <= t)).sum() / W) for t in grid]
            )
            if (est > 1).any():
                est = np.clip(est, 0.0, 1.0)
                flags.append("cif_clamped")
            return CifCurve(
                times=grid,
                estimates=est,
                conditioning={"covariate": covariate, "x0": x0, "bandwidth": h},
                flags=tuple(flags),
            )

    at_ill, _ = _aalen_johansen_cif(data, grid)
    return CifCurve(
        times=grid,
        estimates=np.array([float(v) for v in at_ill]),
        conditioning=conditioning,
        flags=tuple(flags),
    )
