"""Landmark estimators for the illness-death model.

LM subsets the cohort by the state occupied at the landmark time s and
applies Kaplan-Meier within each subset. PLM replaces the censoring
indicators with fitted values from a logistic regression of the event
indicator on observed time before forming the product-limit weights.
"""

from __future__ import annotations

from fractions import Fraction

import numpy as np
from scipy.special import expit

from ..dataio import ValidatedIdmData
from ..survcore import km_table
from .aalen_johansen import check_s_grid
from .curves import ProbabilityCurve

EMPTY_FLAG = "empty_landmark_set"
CLAMP_FLAG = "p12_clamped"
FALLBACK_FLAG = "plm_logistic_fallback"


def _km_fractions_at(time, status, grid):
    """Exact KM survival fractions evaluated at each grid time."""
    ets, _, _, fracs, _ = km_table(time, status)
    out = []
    for t in grid:
        idx = int(np.searchsorted(ets, t, side="right")) - 1
        out.append(fracs[idx] if idx >= 0 else Fraction(1))
    return out


def _presmooth_fractions_at(time, status, grid):
    """Presmoothed product-limit survival at grid times, plus a fallback flag.

    Returns (values, fell_back). With zero censoring (or a degenerate or
    separated logistic fit) the plain KM values are returned so PLM
    coincides with LM exactly.
    """
    status = np.asarray(status, dtype=float)
    if status.min() == status.max():
        return _km_fractions_at(time, status, grid), False
    beta = _logistic_fit(np.asarray(time, dtype=float), status)
    if beta is None:
        return _km_fractions_at(time, status, grid), True
    order = np.lexsort((1 - status, time))
    t_sorted = np.asarray(time, dtype=float)[order]
    n = len(t_sorted)
    m = expit(beta[0] + beta[1] * t_sorted)
    factors = 1.0 - m / (n - np.arange(n))
    surv = np.cumprod(factors)
    idx = np.searchsorted(t_sorted, np.asarray(grid, dtype=float), side="right") - 1
    return [surv[i] if i >= 0 else 1.0 for i in idx], False


def _logistic_fit(t, d, max_iter=25, tol=1e-8):
    """IRLS for P(d=1 | t) = expit(b0 + b1 t); None on separation/divergence."""
    mu, sd = t.mean(), t.std()
    if sd == 0:
        return np.array([np.log(d.mean() / (1 - d.mean())), 0.0])
    z = (t - mu) / sd
    X = np.column_stack([np.ones(len(t)), z])
    beta = np.zeros(2)
    for _ in range(max_iter):
        p = expit(X @ beta)
        W = p * (1 - p)
        if W.max() < 1e-10:
            return None
        try:
            step = np.linalg.solve((X.T * W) @ X, X.T @ (d - p))
        except np.linalg.LinAlgError:
            return None
        beta = beta + step
        if np.abs(beta[1]) > 15:
            return None
        if np.max(np.abs(step)) < tol:
            return np.array([beta[0] - beta[1] * mu / sd, beta[1] / sd])
    return None


def _curves_from_values(method, s, grid, rows, conditioning=None):
    out = []
    for (h, j), values, flags, missing in rows:
        est = None if missing else np.array([float(v) for v in values])
        out.append(
            ProbabilityCurve(
                method=method,
                s=s,
                from_state=h,
                to_state=j,
                times=grid,
                estimates=est,
                conditioning=conditioning,
                flags=tuple(flags),
                missing=missing,
            )
        )
    return out


def _landmark_rows(data: ValidatedIdmData, s, grid, surv_at):
    """Shared LM/PLM assembly given a survival-evaluation function."""
    t1 = data.time1
    st = data.stime
    e1 = data.event1
    ev = data.event
    leave1 = np.maximum(e1, ev)

    rows = []
    s1 = np.where(t1 > s)[0]
    flags1: list[str] = []
    if len(s1) == 0:
        miss = [np.nan] * len(grid)
        rows.append(((1, 1), miss, [EMPTY_FLAG], True))
        rows.append(((1, 2), miss, [EMPTY_FLAG], True))
        rows.append(((1, 3), miss, [EMPTY_FLAG], True))
    else:
        p11, fell1 = surv_at(t1[s1], leave1[s1], grid)
        survT, fellT = surv_at(st[s1], ev[s1], grid)
        if fell1 or fellT:
            flags1.append(FALLBACK_FLAG)
        p12 = [a - b for a, b in zip(survT, p11)]
        clamped = [v < 0 for v in p12]
        if any(clamped):
            p12 = [max(v, 0) for v in p12]
            flags1.append(CLAMP_FLAG)
        p13 = [1 - v for v in survT]
        rows.append(((1, 1), p11, flags1, False))
        rows.append(((1, 2), p12, flags1, False))
        rows.append(((1, 3), p13, flags1, False))

    s2 = np.where((t1 <= s) & (s < st) & (e1 == 1))[0]
    flags2: list[str] = []
    if len(s2) == 0:
        miss = [np.nan] * len(grid)
        rows.append(((2, 2), miss, [EMPTY_FLAG], True))
        rows.append(((2, 3), miss, [EMPTY_FLAG], True))
    else:
        p22, fell2 = surv_at(st[s2], ev[s2], grid)
        if fell2:
            flags2.append(FALLBACK_FLAG)
        p23 = [1 - v for v in p22]
        rows.append(((2, 2), p22, flags2, False))
        rows.append(((2, 3), p23, flags2, False))
    return rows


def landmark_idm(data: ValidatedIdmData, s, grid) -> list[ProbabilityCurve]:
    """LM transition probabilities p11, p12, p13, p22, p23."""
    s, grid = check_s_grid(s, grid)

    def surv_at(time, status, g):
        return _km_fractions_at(time, status, g), False

    return _curves_from_values("lm", s, grid, _landmark_rows(data, s, grid, surv_at))


def presmoothed_landmark_idm(data: ValidatedIdmData, s, grid) -> list[ProbabilityCurve]:
    """PLM transition probabilities; falls back to LM per degenerate subset."""
    s, grid = check_s_grid(s, grid)
    return _curves_from_values(
        "plm", s, grid, _landmark_rows(data, s, grid, _presmooth_fractions_at)
    )
