"""Covariate-conditional transition probabilities.

IPCW: kernel-weighted estimating equations around a continuous covariate
value, censoring handled by inverse-probability weights from the
Kaplan-Meier estimator of the censoring distribution. Breslow: marginal
Cox models per transition with Breslow baseline hazards, profile-scaled
increments fed through the Aalen-Johansen product integral.
"""

from __future__ import annotations

import numpy as np

from ..dataio import LongFormatData, TransitionSystem, ValidatedIdmData
from ..errors import BadCovariate, BandwidthNonPositive, ValidationError
from ..regression import build_design, fit_cox
from ..survcore import km_step_function
from .aalen_johansen import _reachable, check_s_grid, product_integral
from .curves import ProbabilityCurve
from .landmark import CLAMP_FLAG, EMPTY_FLAG


def kernel_weights(x, x0, bandwidth, flags):
    """Gaussian kernel weights at x0 with the rule-of-thumb default."""
    n = len(x)
    if bandwidth is not None:
        if not np.isfinite(bandwidth) or bandwidth <= 0:
            raise BandwidthNonPositive(f"bandwidth must be positive, got {bandwidth}")
        h = float(bandwidth)
    else:
        h = 1.06 * float(x.std()) * n ** (-0.2)
    if h <= 0:
        flags.append("degenerate_kernel")
        return np.ones(n), h
    w = np.exp(-0.5 * ((x - x0) / h) ** 2)
    if w.sum() <= 0:
        flags.append("degenerate_kernel")
        return np.ones(n), h
    return w, h


def censoring_left_limits(stime, event, at):
    """G(u-) of the censoring distribution at each time in ``at``."""
    ets, surv = km_step_function(stime, 1 - np.asarray(event))
    at = np.asarray(at, dtype=float)
    idx = np.searchsorted(ets, at, side="left") - 1
    out = np.ones(len(at))
    nz = idx >= 0
    out[nz] = surv[idx[nz]]
    return out


def continuous_covariate(data, covariate, x0, flags):
    """Validated (subset data, x values) for kernel conditioning."""
    col = data.covariates.column(covariate)
    if col.kind != "numeric":
        raise BadCovariate(
            f"covariate {covariate!r} must be numeric for kernel conditioning"
        )
    x = data.covariates.numeric(covariate)
    keep = np.where(~np.isnan(x))[0]
    if len(keep) < len(x):
        flags.append("dropped_missing_covariate")
        data = data.subset(keep)
        x = x[keep]
    if len(x) == 0:
        raise BadCovariate(f"covariate {covariate!r} has no observed values")
    x0 = float(x0)
    if x0 < x.min() or x0 > x.max():
        raise ValidationError(
            f"x0={x0} lies outside the observed range of {covariate!r}",
            detail={"min": float(x.min()), "max": float(x.max())},
        )
    lo, hi = np.percentile(x, [5, 95])
    if not (lo <= x0 <= hi):
        flags.append("extrapolation_warning")
    return data, x, x0


def ipcw_conditional(
    data: ValidatedIdmData, s, grid, covariate: str, x0, bandwidth=None
) -> list[ProbabilityCurve]:
    """Kernel-conditional transition probabilities for the illness-death model."""
    s, grid = check_s_grid(s, grid)
    flags: list[str] = []
    data, x, x0 = continuous_covariate(data, covariate, x0, flags)
    w, h = kernel_weights(x, x0, bandwidth, flags)

    t1, st, e1, ev = data.time1, data.stime, data.event1, data.event
    leave1 = np.maximum(e1, ev)
    G1 = censoring_left_limits(st, ev, t1)
    GT = censoring_left_limits(st, ev, st)
    zero = ((leave1 == 1) & (G1 <= 0)) | ((ev == 1) & (GT <= 0))
    if zero.any():
        flags.append("zero_ipcw_weight")
    inv1 = np.where((leave1 == 1) & (G1 > 0), 1.0 / np.maximum(G1, 1e-300), 0.0)
    invT = np.where((ev == 1) & (GT > 0), 1.0 / np.maximum(GT, 1e-300), 0.0)
    W = w.sum()

    def F1(u):
        return float((w * inv1 * (t1 <= u)).sum() / W)

    def J13(u):
        return float((w * invT * (t1 > s) * (st <= u)).sum() / W)

    def J2(u):
        return float((w * invT * (t1 <= s) * (st <= u)).sum() / W)

    conditioning = {"covariate": covariate, "x0": x0, "bandwidth": h}
    curves = []

    def clamp01(v, fl):
        if v < 0 or v > 1:
            if fl not in flags:
                flags.append(fl)
            return min(max(v, 0.0), 1.0)
        return v

    F1s = F1(s)
    S1s = 1.0 - min(F1s, 1.0)
    if S1s <= 0:
        for j in (1, 2, 3):
            curves.append(
                ProbabilityCurve(
                    "ipcw", s, 1, j, grid, None,
                    conditioning=conditioning,
                    flags=tuple(flags + [EMPTY_FLAG]), missing=True,
                )
            )
    else:
        p11 = np.array([(1.0 - min(F1(t), 1.0)) / S1s for t in grid])
        p13 = np.array([clamp01(J13(t) / S1s, "ipcw_clamped") for t in grid])
        p12 = 1.0 - p11 - p13
        if (p12 < 0).any():
            p12 = np.clip(p12, 0.0, None)
            flags.append(CLAMP_FLAG)
        fl = tuple(flags)
        for j, est in ((1, p11), (2, p12), (3, p13)):
            curves.append(
                ProbabilityCurve("ipcw", s, 1, j, grid, est,
                                 conditioning=conditioning, flags=fl)
            )

    denom = F1s - J2(s)
    if denom <= 0:
        for j in (2, 3):
            curves.append(
                ProbabilityCurve(
                    "ipcw", s, 2, j, grid, None,
                    conditioning=conditioning,
                    flags=tuple(flags + [EMPTY_FLAG]), missing=True,
                )
            )
    else:
        p22 = np.array([clamp01((F1s - J2(t)) / denom, "ipcw_clamped") for t in grid])
        p23 = 1.0 - p22
        fl = tuple(flags)
        curves.append(ProbabilityCurve("ipcw", s, 2, 2, grid, p22,
                                       conditioning=conditioning, flags=fl))
        curves.append(ProbabilityCurve("ipcw", s, 2, 3, grid, p23,
                                       conditioning=conditioning, flags=fl))
    return curves


def _weighted_risk_sums(tstart, tstop, w):
    """Callable u -> sum of w over rows with tstart < u <= tstop."""
    o1 = np.argsort(tstart, kind="stable")
    o2 = np.argsort(tstop, kind="stable")
    starts = tstart[o1]
    stops = tstop[o2]
    cs_start = np.concatenate([np.cumsum(w[o1][::-1])[::-1], [0.0]])
    cs_stop = np.concatenate([np.cumsum(w[o2][::-1])[::-1], [0.0]])

    def at(u):
        a = cs_stop[np.searchsorted(stops, u, side="left")]
        b = cs_start[np.searchsorted(starts, u, side="left")]
        return a - b

    return at


def breslow_conditional(
    long: LongFormatData,
    sys: TransitionSystem,
    s,
    grid,
    profile: dict | None = None,
    ties: str = "efron",
) -> tuple[list[ProbabilityCurve], list[dict]]:
    """Cox-Breslow conditional transition probabilities.

    Fits a marginal clock-forward Cox model per transition, scales the
    Breslow baseline increments by the profile's risk score, and runs the
    product integral. With an empty profile the increments reduce to the
    Aalen-Johansen ones exactly.

    Returns (curves, per-transition fit summaries).
    """
    s, grid = check_s_grid(s, grid)
    names = tuple(profile) if profile else ()
    flags: list[str] = []
    fit_reports: list[dict] = []
    incs = {}
    for k, (h, j) in enumerate(sys.edges, start=1):
        rows = long.rows_for_transition(k)
        report = {"transition": k, "from": h, "to": j, "fit": None, "error": None}
        if len(rows) == 0 or (long.status[rows] == 1).sum() == 0:
            incs[k] = (np.zeros(0), np.zeros(0))
            report["error"] = "no events"
            flags.append(f"no_events_transition_{k}")
            fit_reports.append(report)
            continue
        if names:
            design = build_design(long.covariates.select_rows(rows), names)
            rr = rows[design.kept]
            fit = fit_cox(
                long.tstart[rr], long.tstop[rr], long.status[rr],
                design.X, names=design.names, ties=ties,
            )
            report["fit"] = fit.to_json()
            xp = design.encode(profile)
            eta_rel = (design.X - xp[None, :]) @ fit.coef
            w = np.exp(eta_rel)
        else:
            rr = rows
            w = np.ones(len(rows))
        times, counts = np.unique(
            long.tstop[rr][(long.status[rr] == 1)
                           & (long.tstop[rr] > s)
                           & (long.tstop[rr] <= float(grid[-1]))],
            return_counts=True,
        )
        risk_at = _weighted_risk_sums(long.tstart[rr], long.tstop[rr], w)
        dens = np.array([risk_at(u) for u in times])
        incs[k] = (times, counts / dens)
        fit_reports.append(report)
    mats, pflags = product_integral(sys, incs, s, grid)
    flags.extend(pflags)
    conditioning = {"profile": dict(profile) if profile else {}, "ties": ties}
    curves = []
    for h in range(1, sys.n_states + 1):
        for j in range(1, sys.n_states + 1):
            if h != j and not _reachable(sys, h, j):
                continue
            curves.append(
                ProbabilityCurve(
                    "breslow", s, h, j, grid, mats[:, h - 1, j - 1].copy(),
                    conditioning=conditioning, flags=tuple(flags),
                )
            )
    return curves, fit_reports
