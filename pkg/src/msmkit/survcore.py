"""Kaplan-Meier estimation with Greenwood errors and G-rho family rank tests."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import stats

from .dataio import ValidatedSurvivalData
from .errors import NoEvents, SingleGroup, UnknownGroupColumn

Z_CACHE: dict[float, float] = {}


def _z(conf_level: float) -> float:
    if conf_level not in Z_CACHE:
        Z_CACHE[conf_level] = float(stats.norm.ppf(0.5 + conf_level / 2))
    return Z_CACHE[conf_level]


@dataclass(frozen=True)
class CurvePoint:
    time: float
    n_risk: int
    n_event: int
    estimate: float
    std_err: float | None
    ci_lower: float | None
    ci_upper: float | None


@dataclass(frozen=True, eq=False)
class SurvCurve:
    points: tuple[CurvePoint, ...]
    group: str | None
    n: int
    n_events: int
    conf_level: float
    conf_type: str
    all_censored: bool = False

    def event_times(self) -> np.ndarray:
        return np.array([p.time for p in self.points])

    def estimates(self) -> np.ndarray:
        return np.array([p.estimate for p in self.points])

    def evaluate(self, times) -> np.ndarray:
        """Right-continuous step lookup of S(t)."""
        ts = self.event_times()
        ss = self.estimates()
        idx = np.searchsorted(ts, np.asarray(times, dtype=float), side="right")
        out = np.ones(len(np.atleast_1d(idx)))
        nz = idx > 0
        out[nz] = ss[idx[nz] - 1]
        return out

    def to_json(self) -> dict:
        return {
            "group": self.group,
            "n": self.n,
            "n_events": self.n_events,
            "conf_level": self.conf_level,
            "conf_type": self.conf_type,
            "all_censored": self.all_censored,
            "points": [
                {
                    "time": p.time,
                    "n_risk": p.n_risk,
                    "n_event": p.n_event,
                    "surv": p.estimate,
                    "se": p.std_err,
                    "lower": p.ci_lower,
                    "upper": p.ci_upper,
                }
                for p in self.points
            ],
        }


def km_table(time: np.ndarray, status: np.ndarray):
    """Product-limit machinery over distinct event times.

    Returns (times, n_risk, n_event, surv_fractions, greenwood_factor).
    Survival values are exact rationals; ties follow the deaths-before-
    censorings convention (anyone censored at t is still at risk at t).
    """
    time = np.asarray(time, dtype=float)
    status = np.asarray(status)
    ets = np.unique(time[status == 1])
    n_risk = np.empty(len(ets), dtype=int)
    n_event = np.empty(len(ets), dtype=int)
    order = np.sort(time)
    for i, t in enumerate(ets):
        n_risk[i] = len(order) - np.searchsorted(order, t, side="left")
        n_event[i] = int(((time == t) & (status == 1)).sum())
    fracs = []
    num, den = 1, 1
    factor = 0.0
    factors = []
    for n_i, d_i in zip(n_risk, n_event):
        num *= int(n_i - d_i)
        den *= int(n_i)
        fracs.append(Fraction(num, den))
        factor += d_i / (n_i * (n_i - d_i)) if n_i > d_i else np.inf
        factors.append(factor)
    return ets, n_risk, n_event, fracs, np.array(factors)


def km_step_function(time, status):
    """(event_times, surv_floats) for fast right-continuous evaluation."""
    ets, _, _, fracs, _ = km_table(time, status)
    return ets, np.array([float(f) for f in fracs])


def evaluate_step(event_times, values, at, start_value=1.0):
    at_arr = np.atleast_1d(np.asarray(at, dtype=float))
    idx = np.searchsorted(event_times, at_arr, side="right")
    out = np.full(at_arr.shape, start_value, dtype=float)
    nz = idx > 0
    if nz.any():
        out[nz] = np.asarray(values, dtype=float)[idx[nz] - 1]
    return out if np.ndim(at) else float(out[0])


def _ci_bounds(s: float, factor: float, conf_type: str, z: float):
    if s <= 0.0 or not np.isfinite(factor):
        return None, None, None
    se = s * np.sqrt(factor)
    if conf_type == "plain":
        lo, hi = s - z * se, s + z * se
    elif conf_type == "log":
        half = z * np.sqrt(factor)
        lo, hi = s * np.exp(-half), s * np.exp(half)
    elif conf_type == "log-log":
        if s >= 1.0:
            return se, None, None
        se_theta = np.sqrt(factor) / abs(np.log(s))
        lo, hi = s ** np.exp(z * se_theta), s ** np.exp(-z * se_theta)
    else:
        raise ValueError(f"unknown conf_type {conf_type!r}")
    return se, max(lo, 0.0), min(hi, 1.0)


def _curve(time, status, group, conf_level, conf_type) -> SurvCurve:
    n = len(time)
    n_events = int((np.asarray(status) == 1).sum())
    if n_events == 0:
        return SurvCurve((), group, n, 0, conf_level, conf_type, all_censored=True)
    ets, n_risk, n_event, fracs, factors = km_table(time, status)
    z = _z(conf_level)
    pts = []
    for t, nr, ne, fr, fa in zip(ets, n_risk, n_event, fracs, factors):
        s = float(fr)
        se, lo, hi = _ci_bounds(s, fa, conf_type, z)
        pts.append(CurvePoint(float(t), int(nr), int(ne), s, se, lo, hi))
    return SurvCurve(tuple(pts), group, n, n_events, conf_level, conf_type)


def kaplan_meier(
    data: ValidatedSurvivalData,
    group_by: str | None = None,
    conf_level: float = 0.95,
    conf_type: str = "log",
) -> list[SurvCurve]:
    """One survival curve, or one per level of a categorical covariate."""
    if data.n < 1:
        raise NoEvents("no observations after validation")
    if group_by is None:
        return [_curve(data.time, data.status, None, conf_level, conf_type)]
    levels, masks = _group_masks(data, group_by)
    out = []
    for lev, mask in zip(levels, masks):
        if mask.any():
            out.append(_curve(data.time[mask], data.status[mask], lev, conf_level, conf_type))
    return out


def _group_masks(data: ValidatedSurvivalData, group_by: str):
    if group_by not in data.covariates.names:
        raise UnknownGroupColumn(
            f"grouping column {group_by!r} is not a mapped covariate",
            detail={"column": group_by},
        )
    col = data.covariates.column(group_by)
    if col.kind != "categorical":
        raise UnknownGroupColumn(
            f"grouping column {group_by!r} is {col.kind}, expected categorical",
            detail={"column": group_by},
        )
    vals = data.covariates.values(group_by)
    levels = [l for l in col.levels if l in set(v for v in vals if v is not None)]
    masks = [np.array([v == lev for v in vals]) for lev in levels]
    return levels, masks


@dataclass(frozen=True)
class RankTestResult:
    groups: tuple[str, ...]
    n: tuple[int, ...]
    observed: tuple[float, ...]
    expected: tuple[float, ...]
    chi_squared: float
    df: int
    p_value: float
    rho: float

    def to_json(self) -> dict:
        return {
            "groups": [
                {"group": g, "n": n, "observed": o, "expected": e}
                for g, n, o, e in zip(self.groups, self.n, self.observed, self.expected)
            ],
            "chi_squared": self.chi_squared,
            "df": self.df,
            "p_value": self.p_value,
            "rho": self.rho,
        }


def grho_statistic(
    time: np.ndarray, status: np.ndarray, masks: list, rho: float = 0.0
):
    """G-rho statistic from raw arrays and non-empty group masks.

    Returns (stat, df, p, O, E). Raises NoEvents when no group has an event.
    """
    k = len(masks)
    if not (status == 1).any():
        raise NoEvents("no events in the sample")
    ets = np.unique(time[status == 1])
    # pooled left-continuous KM for the rho weights
    _, _, _, fracs, _ = km_table(time, status)
    pooled = np.array([float(f) for f in fracs])
    s_left = np.concatenate([[1.0], pooled[:-1]])
    w = s_left**rho if rho != 0 else np.ones(len(ets))

    OE = np.zeros(k)
    O = np.zeros(k)
    E = np.zeros(k)
    V = np.zeros((k, k))
    sorted_time = [np.sort(time[m]) for m in masks]
    for idx, t in enumerate(ets):
        n_g = np.array(
            [len(st) - np.searchsorted(st, t, side="left") for st in sorted_time],
            dtype=float,
        )
        d_g = np.array(
            [((time[m] == t) & (status[m] == 1)).sum() for m in masks], dtype=float
        )
        n_t = n_g.sum()
        d_t = d_g.sum()
        if n_t <= 0 or d_t <= 0:
            continue
        e_g = d_t * n_g / n_t
        O += w[idx] * d_g
        E += w[idx] * e_g
        OE += w[idx] * (d_g - e_g)
        if n_t > 1:
            mult = d_t * (n_t - d_t) / (n_t - 1)
            p_g = n_g / n_t
            V += w[idx] ** 2 * mult * (np.diag(p_g) - np.outer(p_g, p_g))
    z = OE[:-1]
    Vsub = V[:-1, :-1]
    try:
        stat = float(z @ np.linalg.solve(Vsub, z))
    except np.linalg.LinAlgError:
        stat = float(z @ np.linalg.pinv(Vsub) @ z)
    df = k - 1
    p = float(stats.chi2.sf(stat, df))
    return stat, df, p, O, E


def rank_test(data: ValidatedSurvivalData, group_by: str, rho: float = 0.0) -> RankTestResult:
    """G-rho family k-sample test; rho=0 is the log-rank test, rho=1 the
    Gehan-Wilcoxon (Peto-Peto) test. Weights are the left-continuous pooled
    Kaplan-Meier estimate raised to rho."""
    levels_all, masks_all = _group_masks(data, group_by)
    pairs = [(l, m) for l, m in zip(levels_all, masks_all) if m.any()]
    levels = [l for l, _ in pairs]
    masks = [m for _, m in pairs]
    if len(masks) < 2:
        raise SingleGroup("need at least two non-empty groups")
    stat, df, p, O, E = grho_statistic(data.time, data.status, masks, rho)
    ns = tuple(int(m.sum()) for m in masks)
    return RankTestResult(
        tuple(levels), ns, tuple(O.tolist()), tuple(E.tolist()), stat, df, p, float(rho)
    )
