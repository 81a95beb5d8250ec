"""Aalen-Johansen product-integral estimation of transition probabilities."""

from __future__ import annotations

import numpy as np

from ..dataio import LongFormatData, TransitionSystem
from ..errors import EmptyLandmarkSet, ValidationError
from .curves import ProbabilityCurve


def check_s_grid(s, grid):
    s = float(s)
    if s < 0:
        raise ValidationError("landmark time s must be nonnegative")
    grid = np.asarray(grid, dtype=float)
    if grid.ndim != 1 or len(grid) == 0:
        raise ValidationError("grid must be a nonempty 1-D sequence of times")
    if np.any(grid < s):
        raise ValidationError("grid times must all be >= s", detail={"s": s})
    return s, np.sort(grid)


def default_grid(long: LongFormatData, s: float) -> np.ndarray:
    """Distinct observed event times in (s, max time]."""
    ev = long.tstop[long.status == 1]
    out = np.unique(ev[ev > s])
    if len(out) == 0:
        out = np.array([s], dtype=float)
    return out


def _risk_counter(long: LongFormatData, sys: TransitionSystem):
    """state -> (sorted entry times, sorted exit times) over episodes."""
    counters = {}
    for h in range(1, sys.n_states + 1):
        outgoing = sys.transitions_from(h)
        if not outgoing:
            continue
        k0 = sys.transition_number(*outgoing[0])
        rows = long.rows_for_transition(k0)
        counters[h] = (np.sort(long.tstart[rows]), np.sort(long.tstop[rows]))
    return counters


def _n_at_risk(counter, u):
    starts, stops = counter
    # at risk at u: tstart < u <= tstop
    return np.searchsorted(starts, u, side="left") - np.searchsorted(
        stops, u, side="left"
    )


def transition_increments(long: LongFormatData, sys: TransitionSystem, s, tmax):
    """Per transition: event times in (s, tmax] and hazard increments d/n."""
    counters = _risk_counter(long, sys)
    out = {}
    for k, (h, j) in enumerate(sys.edges, start=1):
        rows = long.rows_for_transition(k)
        ev = long.tstop[rows][long.status[rows] == 1]
        ev = ev[(ev > s) & (ev <= tmax)]
        if len(ev) == 0:
            out[k] = (np.zeros(0), np.zeros(0))
            continue
        times, counts = np.unique(ev, return_counts=True)
        n = np.array([_n_at_risk(counters[h], u) for u in times], dtype=float)
        out[k] = (times, counts / n)
    return out


def product_integral(
    sys: TransitionSystem, increments: dict, s: float, grid: np.ndarray
):
    """P(s, t) for each grid t from per-transition hazard increments.

    Increment rows are renormalized to keep each elementary matrix
    row-stochastic; a triggered cap is reported in the flags.
    """
    K = sys.n_states
    flags: list[str] = []
    events = {}
    for k, (times, vals) in increments.items():
        h, j = sys.edges[k - 1]
        for t, v in zip(times, vals):
            events.setdefault(float(t), []).append((h - 1, j - 1, float(v)))
    times_sorted = sorted(events)

    P = np.eye(K)
    out = np.empty((len(grid), K, K))
    gi = 0
    for u in times_sorted:
        while gi < len(grid) and grid[gi] < u:
            out[gi] = P
            gi += 1
        A = np.eye(K)
        rowsum = np.zeros(K)
        for h, j, v in events[u]:
            A[h, j] = v
            rowsum[h] += v
        for h in range(K):
            if rowsum[h] > 1.0:
                for _, j, _v in [e for e in events[u] if e[0] == h]:
                    A[h, j] /= rowsum[h]
                if "increment_capped" not in flags:
                    flags.append("increment_capped")
                rowsum[h] = 1.0
            A[h, h] = 1.0 - rowsum[h]
        P = P @ A
    while gi < len(grid):
        out[gi] = P
        gi += 1
    return out, tuple(flags)


def aalen_johansen(
    long: LongFormatData,
    sys: TransitionSystem,
    s: float,
    grid=None,
    method_name: str = "aj",
    conditioning: dict | None = None,
) -> list[ProbabilityCurve]:
    """Plain Aalen-Johansen: all rows of P(s, t) over the grid."""
    if grid is None:
        grid = default_grid(long, s)
    s, grid = check_s_grid(s, grid)
    incs = transition_increments(long, sys, s, float(grid[-1]))
    mats, flags = product_integral(sys, incs, s, grid)
    curves = []
    for h in range(1, sys.n_states + 1):
        for j in range(1, sys.n_states + 1):
            if h != j and not _reachable(sys, h, j):
                continue
            curves.append(
                ProbabilityCurve(
                    method=method_name,
                    s=s,
                    from_state=h,
                    to_state=j,
                    times=grid,
                    estimates=mats[:, h - 1, j - 1].copy(),
                    conditioning=conditioning,
                    flags=flags,
                )
            )
    return curves


def _reachable(sys: TransitionSystem, h: int, j: int) -> bool:
    """True when j can be reached from h through allowed transitions."""
    seen = {h}
    frontier = [h]
    while frontier:
        nxt = []
        for a in frontier:
            for _, b in sys.transitions_from(a):
                if b == j:
                    return True
                if b not in seen:
                    seen.add(b)
                    nxt.append(b)
        frontier = nxt
    return False


def occupied_at(long: LongFormatData, s: float) -> dict:
    """subject -> state occupied at time s (occupancy on [tstart, tstop)).

    Subjects absorbed at or before s map to their absorbing state (no
    censoring there); subjects censored before s are absent.
    """
    state_at = {}
    absorbed = {}
    sys = long.system
    for i in range(long.n):
        sub = long.subject[i]
        if long.tstart[i] <= s < long.tstop[i]:
            state_at[sub] = int(long.from_state[i])
        elif (
            long.status[i] == 1
            and long.tstop[i] <= s
            and sys.is_absorbing(int(long.to_state[i]))
        ):
            absorbed[sub] = int(long.to_state[i])
    for sub, dest in absorbed.items():
        if sub not in state_at:
            state_at[sub] = dest
    return state_at


def landmark_aalen_johansen(
    long: LongFormatData,
    sys: TransitionSystem,
    s: float,
    from_state: int,
    grid=None,
) -> list[ProbabilityCurve]:
    """Aalen-Johansen restricted to subjects occupying from_state at s."""
    occ = occupied_at(long, s)
    selected = {sub for sub, st in occ.items() if st == from_state}
    if not selected:
        raise EmptyLandmarkSet(
            f"no subject occupies state {from_state} at s={s}",
            detail={"s": s, "from_state": from_state},
        )
    mask = np.array([sub in selected for sub in long.subject])
    sub_long = long.subset(np.where(mask)[0])
    if grid is None:
        grid = default_grid(sub_long, s)
    curves = aalen_johansen(sub_long, sys, s, grid, method_name="lmaj")
    keep = []
    for c in curves:
        if c.from_state == from_state:
            # absorbed-before-s subjects never enter the restricted set, so
            # transitions into from_state cannot double count
            keep.append(c)
    return keep
