"""Local and global tests of the Markov assumption.

Two families of tests are provided. The AUC family measures the signed
integrated discrepancy between the Markov-dependent Aalen-Johansen
estimator and a Markov-free landmark estimator (LM for progressive
illness-death data, LMAJ for general multi-state data), calibrated by a
subject-resampling bootstrap. The log-rank family groups subjects in the
origin state at a landmark time by their history (entry time into the
state, split at the subsample median) and compares the hazard of the
target transition between groups. Global variants aggregate over a
percentile grid of landmark times or add the entry time as a Cox
covariate for the transition of interest.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .dataio import (
    LongFormatData,
    TransitionSystem,
    ValidatedIdmData,
    ValidatedMsmData,
    idm_transition_system,
    to_long_format,
)
from .errors import (
    BootstrapFailure,
    DegenerateCovariate,
    EmptyLandmarkSet,
    MsmkitError,
    NoEvents,
    SingleGroup,
    ValidationError,
)
from .msmprob.aalen_johansen import (
    aalen_johansen,
    landmark_aalen_johansen,
    occupied_at,
)
from .msmprob.bootstrap import MAX_FAILURE_SHARE, substream
from .msmprob.landmark import landmark_idm
from .regression.cox import fit_cox
from .survcore import grho_statistic

DEFAULT_ALPHA = 0.05
DEFAULT_PERCENTILES = (5, 10, 20, 30, 40, 50, 60, 70, 80, 90)
DEGENERATE_VARIANCE_FLAG = "degenerate_variance"


@dataclass(frozen=True)
class LocalTestResult:
    method: str
    s: float
    from_state: int
    to_state: int
    statistic: float
    p_value: float
    n_used: int
    sd: float | None = None
    n_boot: int | None = None
    n_failed: int = 0
    groups: tuple = ()
    split_value: float | None = None
    seed: int | None = None
    flags: tuple = ()

    def to_json(self) -> dict:
        out = {
            "method": self.method,
            "transition": {"from": self.from_state, "to": self.to_state},
            "s": self.s,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "n_used": self.n_used,
            "flags": list(self.flags),
        }
        if self.method == "auc":
            out["sd"] = self.sd
            out["n_boot"] = self.n_boot
            out["n_failed"] = self.n_failed
            out["seed"] = self.seed
        else:
            out["split_value"] = self.split_value
            out["groups"] = [dict(g) for g in self.groups]
        return out


@dataclass(frozen=True)
class GlobalTestResult:
    method: str
    from_state: int
    to_state: int
    alpha: float = DEFAULT_ALPHA
    s_values: tuple = ()
    p_values: tuple = ()
    statistics: tuple = ()
    statistic: float | None = None
    p_value: float | None = None
    proportion_rejections: float | None = None
    n_boot: int | None = None
    n_perm: int | None = None
    n_dropped_landmarks: int = 0
    seed: int | None = None
    detail: dict = field(default_factory=dict)
    flags: tuple = ()

    def to_json(self) -> dict:
        out = {
            "method": self.method,
            "transition": {"from": self.from_state, "to": self.to_state},
            "alpha": self.alpha,
            "flags": list(self.flags),
        }
        if self.s_values:
            out["s_values"] = list(self.s_values)
        if self.p_values:
            out["p_values"] = list(self.p_values)
        if self.statistics:
            out["statistics"] = list(self.statistics)
        if self.statistic is not None:
            out["statistic"] = self.statistic
        if self.p_value is not None:
            out["p_value"] = self.p_value
        if self.proportion_rejections is not None:
            out["proportion_rejections"] = self.proportion_rejections
        if self.n_boot is not None:
            out["n_boot"] = self.n_boot
        if self.n_perm is not None:
            out["n_perm"] = self.n_perm
        if self.method != "cox":
            out["n_dropped_landmarks"] = self.n_dropped_landmarks
        if self.seed is not None:
            out["seed"] = self.seed
        out.update(self.detail)
        return out


def _system_for(data, sys: TransitionSystem | None) -> TransitionSystem:
    if sys is not None:
        return sys
    if isinstance(data, ValidatedIdmData):
        return idm_transition_system()
    if isinstance(data, ValidatedMsmData):
        return data.mapping.system
    raise ValidationError("multi-state (idm or msm) data required")


def _check_transition(sys: TransitionSystem, transition, need_edge: bool):
    try:
        h, j = (int(transition[0]), int(transition[1]))
    except (TypeError, IndexError, ValueError):
        raise ValidationError(
            "transition must be a (from_state, to_state) pair",
            detail={"transition": transition},
        ) from None
    for state in (h, j):
        if not 1 <= state <= sys.n_states:
            raise ValidationError(
                f"state {state} outside 1..{sys.n_states}",
                detail={"transition": [h, j]},
            )
    if need_edge and not sys.has_edge(h, j):
        raise ValidationError(
            f"no direct transition from state {h} to state {j}",
            detail={"transition": [h, j]},
        )
    return h, j


def _pick_curve(curves, h: int, j: int):
    for c in curves:
        if c.from_state == h and c.to_state == j:
            return c
    raise ValidationError(
        f"transition probability p{h}{j} is not produced by this estimator",
        detail={"transition": [h, j]},
    )


def _subseed(seed: int, i: int) -> int:
    ss = np.random.SeedSequence(entropy=seed, spawn_key=(i,))
    return int(ss.generate_state(1, np.uint64)[0])


def _step_integral(grid: np.ndarray, values: np.ndarray, tmax: float) -> float:
    """Integral of the right-continuous step function that equals values[i]
    on [grid[i], grid[i+1]) over (grid[0], tmax]. Both estimators agree on
    the segment before the first event time, so it contributes nothing."""
    edges = np.append(grid, tmax)
    return float(np.sum(values * np.diff(edges)))


def _auc_statistic(data, sys, s, h, j, tmax, is_idm) -> float:
    long = to_long_format(data, sys)
    ets = np.unique(long.tstop[long.status == 1])
    grid = ets[(ets > s) & (ets <= tmax)]
    if grid.size == 0:
        return 0.0
    aj = _pick_curve(aalen_johansen(long, sys, s, grid), h, j)
    if is_idm:
        free = _pick_curve(landmark_idm(data, s, grid), h, j)
        if free.missing:
            raise EmptyLandmarkSet(
                f"no subjects in state {h} at s={s}", detail={"s": s}
            )
    else:
        free = _pick_curve(landmark_aalen_johansen(long, sys, s, h, grid), h, j)
    return _step_integral(grid, aj.estimates - free.estimates, tmax)


def local_auc_test(
    data,
    sys: TransitionSystem | None = None,
    s: float = 0.0,
    transition=(1, 2),
    n_boot: int = 100,
    seed: int = 0,
) -> LocalTestResult:
    """AUC discrepancy test of Markovianity at a single landmark time.

    D integrates AJ(s,t) - LM(s,t) (LMAJ in place of LM for general
    multi-state data) over (s, tmax]; its null distribution is normal with
    a bootstrap standard deviation under subject resampling.
    """
    sys = _system_for(data, sys)
    h, j = _check_transition(sys, transition, need_edge=False)
    is_idm = isinstance(data, ValidatedIdmData)
    if is_idm and (h, j) not in ((1, 1), (1, 2), (1, 3), (2, 2), (2, 3)):
        raise ValidationError(
            "LM covers transitions from states 1 and 2 only",
            detail={"transition": [h, j]},
        )
    if n_boot < 2:
        raise ValidationError("n_boot must be at least 2", detail={"n_boot": n_boot})
    s = float(s)
    long = to_long_format(data, sys)
    n_used = sum(1 for st in occupied_at(long, s).values() if st == h)
    events = long.tstop[long.status == 1]
    tmax = float(events.max()) if events.size else s

    stat = _auc_statistic(data, sys, s, h, j, tmax, is_idm)

    reps = []
    n_failed = 0
    for r in range(n_boot):
        rng = substream(seed, r)
        idx = rng.integers(0, data.n, size=data.n)
        try:
            reps.append(_auc_statistic(data.subset(idx), sys, s, h, j, tmax, is_idm))
        except MsmkitError:
            n_failed += 1
    if n_failed > MAX_FAILURE_SHARE * n_boot:
        raise BootstrapFailure(
            f"{n_failed} of {n_boot} bootstrap replicates failed",
            detail={"n_failed": n_failed, "n_boot": n_boot},
        )

    sd = float(np.std(reps, ddof=1)) if len(reps) >= 2 else 0.0
    flags = []
    if sd == 0.0:
        p = 1.0
        flags.append(DEGENERATE_VARIANCE_FLAG)
    else:
        p = float(2.0 * stats.norm.sf(abs(stat) / sd))
    return LocalTestResult(
        method="auc",
        s=s,
        from_state=h,
        to_state=j,
        statistic=stat,
        p_value=p,
        n_used=n_used,
        sd=sd,
        n_boot=n_boot,
        n_failed=n_failed,
        seed=seed,
        flags=tuple(flags),
    )


def _logrank_arrays(long: LongFormatData, h: int, j: int, s: float):
    """Subjects holding the (h, j) transition row at time s: entry time into
    h, exit time, and the transition-specific event indicator."""
    m = (
        (long.from_state == h)
        & (long.to_state == j)
        & (long.tstart <= s)
        & (s < long.tstop)
    )
    if not m.any():
        raise EmptyLandmarkSet(f"no subjects in state {h} at s={s}", detail={"s": s})
    return long.tstart[m], long.tstop[m], long.status[m]


def _median_split(entry: np.ndarray):
    med = float(np.median(entry))
    g1 = entry <= med
    if not g1.any() or g1.all():
        raise SingleGroup(
            "median split of entry times produces a single group",
            detail={"median": med},
        )
    return med, [g1, ~g1]


def local_logrank_test(
    data,
    sys: TransitionSystem | None = None,
    s: float = 0.0,
    transition=(2, 3),
) -> LocalTestResult:
    """Log-rank test of the (h, j) hazard between history groups.

    Subjects in state h at s are split at the subsample median of their
    entry time into h; competing exits censor the target transition.
    """
    sys = _system_for(data, sys)
    h, j = _check_transition(sys, transition, need_edge=True)
    s = float(s)
    long = to_long_format(data, sys)
    entry, time, ev = _logrank_arrays(long, h, j, s)
    med, masks = _median_split(entry)
    stat, df, p, O, E = grho_statistic(time, ev, masks, rho=0.0)
    labels = (f"entry<={med:g}", f"entry>{med:g}")
    groups = tuple(
        {
            "group": lab,
            "n": int(m.sum()),
            "observed": float(o),
            "expected": float(e),
        }
        for lab, m, o, e in zip(labels, masks, O, E)
    )
    return LocalTestResult(
        method="logrank",
        s=s,
        from_state=h,
        to_state=j,
        statistic=float(stat),
        p_value=float(p),
        n_used=int(len(entry)),
        groups=groups,
        split_value=med,
    )


def global_cox_test(
    data,
    sys: TransitionSystem | None = None,
    transition=(2, 3),
    clock: str = "markov",
    alpha: float = DEFAULT_ALPHA,
) -> GlobalTestResult:
    """Cox-based global Markov test: significance of the entry time into the
    origin state as a covariate for the (h, j) transition intensity."""
    if clock not in ("markov", "semi_markov"):
        raise ValidationError(
            f"unknown clock {clock!r}", detail={"allowed": ["markov", "semi_markov"]}
        )
    sys = _system_for(data, sys)
    h, j = _check_transition(sys, transition, need_edge=True)
    long = to_long_format(data, sys)
    rows = long.rows_for_transition(sys.transition_number(h, j))
    if rows.size == 0:
        raise EmptyLandmarkSet(f"no rows for transition {h}->{j}")
    entry = long.tstart[rows]
    if np.all(entry == entry[0]):
        raise DegenerateCovariate(
            f"entry time into state {h} is constant",
            detail={"value": float(entry[0])},
        )
    status = long.status[rows]
    if clock == "markov":
        start, stop = long.tstart[rows], long.tstop[rows]
    else:
        start = np.zeros(rows.size)
        stop = long.tstop[rows] - long.tstart[rows]
    fit = fit_cox(start, stop, status, entry[:, None], names=("entry_time",))
    p = float(fit.p_values[0])
    return GlobalTestResult(
        method="cox",
        from_state=h,
        to_state=j,
        alpha=alpha,
        statistic=float(fit.z[0]),
        p_value=p,
        detail={
            "clock": clock,
            "coef": float(fit.coef[0]),
            "se": float(fit.se[0]),
            "n": fit.n,
            "n_events": fit.n_events,
            "reject": bool(p < alpha),
        },
    )


def _percentile_grid(long: LongFormatData, h: int, percentiles) -> np.ndarray:
    """Landmark candidates: percentiles of the observed transition times out
    of state h (method "lower" keeps them on the event-time lattice)."""
    exits = long.tstop[(long.from_state == h) & (long.status == 1)]
    exits = np.unique(exits)
    if exits.size == 0:
        raise NoEvents(f"no observed transitions out of state {h}")
    qs = sorted(float(q) for q in percentiles)
    if not qs or qs[0] < 0 or qs[-1] > 100:
        raise ValidationError("percentiles must lie in [0, 100]", detail={"percentiles": qs})
    return np.unique(np.percentile(exits, qs, method="lower"))


def global_auc_test(
    data,
    sys: TransitionSystem | None = None,
    from_state: int = 1,
    to_state: int = 2,
    percentiles=DEFAULT_PERCENTILES,
    n_boot: int = 100,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
) -> GlobalTestResult:
    """AUC local tests over a percentile grid of landmark times, summarised
    by the proportion of rejections at level alpha."""
    sys = _system_for(data, sys)
    h, j = _check_transition(sys, (from_state, to_state), need_edge=False)
    long = to_long_format(data, sys)
    grid = _percentile_grid(long, h, percentiles)
    locals_, dropped = [], 0
    for i, s in enumerate(grid):
        try:
            locals_.append(
                local_auc_test(data, sys, float(s), (h, j), n_boot, _subseed(seed, i))
            )
        except EmptyLandmarkSet:
            dropped += 1
    if len(locals_) < 2:
        raise ValidationError(
            "fewer than two usable percentile landmarks",
            detail={"n_usable": len(locals_), "n_dropped": dropped},
        )
    ps = tuple(r.p_value for r in locals_)
    prop = sum(1 for p in ps if p < alpha) / len(ps)
    return GlobalTestResult(
        method="auc",
        from_state=h,
        to_state=j,
        alpha=alpha,
        s_values=tuple(r.s for r in locals_),
        p_values=ps,
        statistics=tuple(r.statistic for r in locals_),
        proportion_rejections=prop,
        n_boot=n_boot,
        n_dropped_landmarks=dropped,
        seed=seed,
        detail={"local_results": [r.to_json() for r in locals_]},
    )


def global_logrank_test(
    data,
    sys: TransitionSystem | None = None,
    transition=(2, 3),
    s_grid=None,
    n_perm: int = 500,
    alpha: float = DEFAULT_ALPHA,
    seed: int = 0,
) -> GlobalTestResult:
    """Maximum of the local log-rank statistics over the landmark grid,
    calibrated by permuting history-group labels within each subsample."""
    sys = _system_for(data, sys)
    h, j = _check_transition(sys, transition, need_edge=True)
    if n_perm < 1:
        raise ValidationError("n_perm must be positive", detail={"n_perm": n_perm})
    long = to_long_format(data, sys)
    if s_grid is None:
        grid = _percentile_grid(long, h, DEFAULT_PERCENTILES)
    else:
        grid = np.unique(np.asarray(list(s_grid), dtype=float))
        if grid.size == 0:
            raise ValidationError("s_grid must be nonempty")

    usable, dropped = [], 0
    for s in grid:
        try:
            entry, time, ev = _logrank_arrays(long, h, j, float(s))
            med, masks = _median_split(entry)
            stat, _, _, _, _ = grho_statistic(time, ev, masks, rho=0.0)
        except (EmptyLandmarkSet, SingleGroup, NoEvents):
            dropped += 1
            continue
        usable.append((float(s), time, ev, masks, float(stat)))
    if not usable:
        raise ValidationError(
            "no usable landmarks in the grid", detail={"n_dropped": dropped}
        )

    stats_obs = [u[4] for u in usable]
    t_obs = max(stats_obs)
    n_ge = 0
    for b in range(n_perm):
        rng = substream(seed, b)
        t_b = 0.0
        for _, time, ev, masks, _ in usable:
            perm = rng.permutation(len(time))
            pmask = masks[0][perm]
            try:
                stat_b, _, _, _, _ = grho_statistic(time, ev, [pmask, ~pmask], rho=0.0)
            except NoEvents:  # pragma: no cover - events are label-invariant
                continue
            t_b = max(t_b, float(stat_b))
        if t_b >= t_obs:
            n_ge += 1
    p = (1.0 + n_ge) / (n_perm + 1.0)
    return GlobalTestResult(
        method="logrank",
        from_state=h,
        to_state=j,
        alpha=alpha,
        s_values=tuple(u[0] for u in usable),
        statistics=tuple(stats_obs),
        statistic=t_obs,
        p_value=p,
        n_perm=n_perm,
        n_dropped_landmarks=dropped,
        seed=seed,
    )
