"""CSV ingestion, variable mappings, transition systems, and wide-to-long expansion.

Three data shapes are supported: plain survival (time, status), the progressive
illness-death model (time1, event1, stime, event), and general wide-format
multi-state data with one (time, status) column pair per non-initial state.
All types are immutable; operations are pure functions.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (
    DuplicateColumnName,
    DuplicateEdge,
    EmptyFile,
    InconsistentTimes,
    MissingColumn,
    NegativeTime,
    NonBinaryStatus,
    PathInconsistent,
    RaggedRows,
    SelfTransition,
    ValidationError,
)

MISSING_TOKENS = ("", "NA")

# Distinct-value threshold above which an all-unique string column is treated
# as free text rather than a categorical factor.
TEXT_CARDINALITY_MIN = 13

# Zero-length occupancy episodes (a transition recorded at the exact entry
# time) are extended by this amount so every long-format row has Tstart < Tstop.
ZERO_LENGTH_OFFSET = 0.5


@dataclass(frozen=True)
class Column:
    name: str
    kind: str  # numeric | categorical | text
    levels: tuple[str, ...] = ()


@dataclass(frozen=True)
class Dataset:
    """An immutable parsed table. Values are float, str, or None (missing)."""

    columns: tuple[Column, ...]
    rows: tuple[tuple, ...]

    @property
    def n(self) -> int:
        return len(self.rows)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    def column(self, name: str) -> Column:
        for c in self.columns:
            if c.name == name:
                return c
        raise MissingColumn(f"column {name!r} not present", detail={"column": name})

    def col_index(self, name: str) -> int:
        for i, c in enumerate(self.columns):
            if c.name == name:
                return i
        raise MissingColumn(f"column {name!r} not present", detail={"column": name})

    def values(self, name: str) -> tuple:
        i = self.col_index(name)
        return tuple(r[i] for r in self.rows)

    def numeric(self, name: str) -> np.ndarray:
        """Column as a float array, NaN where missing. Numeric columns only."""
        col = self.column(name)
        if col.kind != "numeric":
            raise ValidationError(
                f"column {name!r} is {col.kind}, expected numeric",
                detail={"column": name},
            )
        i = self.col_index(name)
        return np.array(
            [np.nan if r[i] is None else float(r[i]) for r in self.rows], dtype=float
        )

    def select_rows(self, indices) -> "Dataset":
        rows = tuple(self.rows[i] for i in indices)
        return Dataset(self.columns, rows)

    def select_columns(self, names) -> "Dataset":
        idx = [self.col_index(n) for n in names]
        cols = tuple(self.columns[i] for i in idx)
        rows = tuple(tuple(r[i] for i in idx) for r in self.rows)
        return Dataset(cols, rows)

    def preview(self, limit: int = 20) -> list[dict]:
        out = []
        for r in self.rows[:limit]:
            out.append({c.name: v for c, v in zip(self.columns, r)})
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.names)
        for r in self.rows:
            w.writerow(["" if v is None else (repr(v) if isinstance(v, float) else v) for v in r])
        return buf.getvalue()


def _infer_column(name: str, raw: list[str]) -> tuple[Column, list]:
    present = [v for v in raw if v not in MISSING_TOKENS]
    numeric = True
    for v in present:
        try:
            x = float(v)
        except ValueError:
            numeric = False
            break
        if not np.isfinite(x):
            numeric = False
            break
    if numeric:
        vals = [None if v in MISSING_TOKENS else float(v) for v in raw]
        return Column(name, "numeric"), vals
    distinct = list(dict.fromkeys(present))
    if len(distinct) == len(present) and len(distinct) >= TEXT_CARDINALITY_MIN:
        kind = "text"
        levels = ()
    else:
        kind = "categorical"
        levels = tuple(distinct)
    vals = [None if v in MISSING_TOKENS else v for v in raw]
    return Column(name, kind, levels), vals


def parse_csv(content: bytes | str, delimiter_hint: str | None = None) -> Dataset:
    """Parse CSV bytes into a Dataset.

    Delimiter: explicit hint wins; otherwise semicolon when the header line
    contains at least one ';' and no ',', else comma. Missing values are empty
    cells or the literal "NA". A column is numeric when every non-missing
    value parses as a finite number.
    """
    if isinstance(content, bytes):
        text = content.decode("utf-8")
    else:
        text = content
    if not text.strip():
        raise EmptyFile("input contains no data")
    first_line = text.splitlines()[0]
    if delimiter_hint:
        delim = delimiter_hint
    elif ";" in first_line and "," not in first_line:
        delim = ";"
    else:
        delim = ","
    reader = csv.reader(io.StringIO(text), delimiter=delim)
    records = [row for row in reader if row]
    if not records:
        raise EmptyFile("input contains no data")
    header = [h.strip() for h in records[0]]
    if len(set(header)) != len(header):
        dupes = sorted({h for h in header if header.count(h) > 1})
        raise DuplicateColumnName(
            f"duplicate column names: {', '.join(dupes)}", detail={"columns": dupes}
        )
    body = records[1:]
    bad = [i + 2 for i, row in enumerate(body) if len(row) != len(header)]
    if bad:
        raise RaggedRows(
            f"{len(bad)} rows have a width different from the header",
            detail={"lines": bad[:50]},
        )
    columns = []
    col_values = []
    for j, name in enumerate(header):
        raw = [row[j].strip() for row in body]
        col, vals = _infer_column(name, raw)
        columns.append(col)
        col_values.append(vals)
    rows = tuple(tuple(cv[i] for cv in col_values) for i in range(len(body)))
    return Dataset(tuple(columns), rows)


# ---------------------------------------------------------------------------
# mappings and validated data


@dataclass(frozen=True)
class SurvivalMapping:
    time: str
    status: str
    covariates: tuple[str, ...] = ()


@dataclass(frozen=True)
class IdmMapping:
    time1: str
    event1: str
    stime: str
    event: str
    covariates: tuple[str, ...] = ()


@dataclass(frozen=True)
class TransitionSystem:
    """State space plus the allowed-transition matrix.

    States are 1-based internally; ``display_base`` only affects rendered
    labels. Transition numbers run 1..K row-major over the allowed cells.
    """

    n_states: int
    labels: tuple[str, ...]
    edges: tuple[tuple[int, int], ...]  # sorted row-major; index+1 = number
    warnings: tuple[str, ...] = ()

    def transition_number(self, h: int, j: int) -> int:
        try:
            return self.edges.index((h, j)) + 1
        except ValueError:
            raise ValidationError(
                f"transition {h}->{j} not in the transition system",
                detail={"from": h, "to": j},
            )

    def has_edge(self, h: int, j: int) -> bool:
        return (h, j) in self.edges

    def transitions_from(self, h: int) -> tuple[tuple[int, int], ...]:
        return tuple(e for e in self.edges if e[0] == h)

    def is_absorbing(self, h: int) -> bool:
        return not any(e[0] == h for e in self.edges)

    def tmat(self) -> list[list[int | None]]:
        m = [[None] * self.n_states for _ in range(self.n_states)]
        for k, (h, j) in enumerate(self.edges, start=1):
            m[h - 1][j - 1] = k
        return m

    def state_label(self, h: int, display_base: int = 1) -> str:
        return self.labels[h - 1] if self.labels else str(h - 1 + display_base)

    def to_json(self) -> dict:
        return {
            "n_states": self.n_states,
            "labels": list(self.labels),
            "edges": [list(e) for e in self.edges],
            "tmat": self.tmat(),
            "warnings": list(self.warnings),
        }


def build_transition_system(n_states: int, labels, edges) -> TransitionSystem:
    if n_states < 2:
        raise ValidationError("a transition system needs at least 2 states")
    labels = tuple(labels) if labels else tuple(f"state {i}" for i in range(1, n_states + 1))
    if len(labels) != n_states:
        raise ValidationError(
            f"{len(labels)} labels given for {n_states} states",
            detail={"labels": list(labels)},
        )
    seen = set()
    for h, j in edges:
        if not (1 <= h <= n_states and 1 <= j <= n_states):
            raise ValidationError(
                f"edge ({h},{j}) outside state range 1..{n_states}",
                detail={"edge": [h, j]},
            )
        if h == j:
            raise SelfTransition(f"self-transition ({h},{j}) not allowed", detail={"edge": [h, j]})
        if (h, j) in seen:
            raise DuplicateEdge(f"edge ({h},{j}) declared twice", detail={"edge": [h, j]})
        seen.add((h, j))
    if not seen:
        raise ValidationError("transition system has no edges")
    ordered = tuple(sorted(seen))
    warnings = []
    if not any(not any(e[0] == s for e in ordered) for s in range(1, n_states + 1)):
        warnings.append("no absorbing state")
    orphans = [
        s
        for s in range(2, n_states + 1)
        if not any(e[1] == s for e in ordered) and any(e[0] == s for e in ordered)
    ]
    if orphans:
        warnings.append("states with outgoing but no incoming transitions: " + str(orphans))
    return TransitionSystem(n_states, labels, ordered, tuple(warnings))


def idm_transition_system(labels=None) -> TransitionSystem:
    """The progressive illness-death system: 1->2 (#1), 1->3 (#2), 2->3 (#3)."""
    if labels is None:
        labels = ("healthy", "recurrence/diseased", "death")
    return build_transition_system(3, labels, [(1, 2), (1, 3), (2, 3)])


@dataclass(frozen=True, eq=False)
class ValidatedSurvivalData:
    time: np.ndarray
    status: np.ndarray
    covariates: Dataset
    mapping: SurvivalMapping
    n_dropped: int

    @property
    def n(self) -> int:
        return len(self.time)


@dataclass(frozen=True, eq=False)
class ValidatedIdmData:
    time1: np.ndarray
    event1: np.ndarray
    stime: np.ndarray
    event: np.ndarray
    covariates: Dataset
    mapping: IdmMapping
    n_dropped: int

    @property
    def n(self) -> int:
        return len(self.time1)

    def subset(self, indices) -> "ValidatedIdmData":
        idx = np.asarray(indices)
        return ValidatedIdmData(
            self.time1[idx],
            self.event1[idx],
            self.stime[idx],
            self.event[idx],
            self.covariates.select_rows(idx),
            self.mapping,
            self.n_dropped,
        )


@dataclass(frozen=True)
class MsmMapping:
    # state number -> (time column, status column) for every non-initial state
    state_columns: tuple[tuple[int, str, str], ...]
    system: TransitionSystem
    covariates: tuple[str, ...] = ()
    # tie resolution order; default is declared state order
    tie_priority: tuple[int, ...] = ()


@dataclass(frozen=True, eq=False)
class ValidatedMsmData:
    # per non-initial state: observed entry time and 0/1 indicator
    state_times: dict
    state_status: dict
    covariates: Dataset
    mapping: MsmMapping
    n_dropped: int

    @property
    def n(self) -> int:
        for v in self.state_times.values():
            return len(v)
        return 0

    @property
    def system(self) -> TransitionSystem:
        return self.mapping.system

    def subset(self, indices) -> "ValidatedMsmData":
        idx = np.asarray(indices)
        return ValidatedMsmData(
            {s: t[idx] for s, t in self.state_times.items()},
            {s: t[idx] for s, t in self.state_status.items()},
            self.covariates.select_rows(idx),
            self.mapping,
            self.n_dropped,
        )


def _require_columns(d: Dataset, names) -> None:
    missing = [n for n in names if n not in d.names]
    if missing:
        raise MissingColumn(
            "columns not present: " + ", ".join(missing), detail={"columns": missing}
        )


def _check_binary(name: str, arr: np.ndarray) -> None:
    bad = ~np.isin(arr[~np.isnan(arr)], (0.0, 1.0))
    if bad.any():
        vals = sorted(set(arr[~np.isnan(arr)][bad].tolist()))
        raise NonBinaryStatus(
            f"column {name!r} must contain only 0/1, found {vals[:5]}",
            detail={"column": name, "values": vals[:5]},
        )


def bind_survival(d: Dataset, m: SurvivalMapping) -> ValidatedSurvivalData:
    _require_columns(d, [m.time, m.status, *m.covariates])
    time = d.numeric(m.time)
    status = d.numeric(m.status)
    _check_binary(m.status, status)
    neg = np.where(time < 0)[0]
    if len(neg):
        raise NegativeTime(
            f"column {m.time!r} contains negative times", detail={"rows": neg.tolist()[:50]}
        )
    keep = ~(np.isnan(time) | np.isnan(status))
    idx = np.where(keep)[0]
    cov = d.select_columns(m.covariates).select_rows(idx)
    return ValidatedSurvivalData(
        time[idx], status[idx].astype(int), cov, m, int((~keep).sum())
    )


def bind_idm(d: Dataset, m: IdmMapping) -> ValidatedIdmData:
    _require_columns(d, [m.time1, m.event1, m.stime, m.event, *m.covariates])
    time1 = d.numeric(m.time1)
    event1 = d.numeric(m.event1)
    stime = d.numeric(m.stime)
    event = d.numeric(m.event)
    _check_binary(m.event1, event1)
    _check_binary(m.event, event)
    keep = ~(np.isnan(time1) | np.isnan(event1) | np.isnan(stime) | np.isnan(event))
    idx = np.where(keep)[0]
    t1, e1, st, ev = time1[idx], event1[idx], stime[idx], event[idx]
    if len(t1) and min(t1.min(), st.min()) < 0:
        raise NegativeTime("negative times in mapped columns")
    bad = (t1 > st) | ((e1 == 0) & (t1 != st))
    if bad.any():
        rows = idx[bad].tolist()
        raise InconsistentTimes(
            "rows violate time1 <= stime (with equality required when event1 = 0)",
            detail={"rows": rows[:50]},
        )
    cov = d.select_columns(m.covariates).select_rows(idx)
    return ValidatedIdmData(
        t1, e1.astype(int), st, ev.astype(int), cov, m, int((~keep).sum())
    )


def bind_msm(d: Dataset, m: MsmMapping) -> ValidatedMsmData:
    sys = m.system
    needed = [c for _, tc, sc in m.state_columns for c in (tc, sc)]
    _require_columns(d, needed + list(m.covariates))
    states = [s for s, _, _ in m.state_columns]
    if sorted(states) != sorted(set(states)):
        raise ValidationError("a state appears twice in the mapping")
    for s in states:
        if not (2 <= s <= sys.n_states):
            raise ValidationError(f"mapped state {s} outside 2..{sys.n_states}")
    times = {}
    status = {}
    keep = np.ones(d.n, dtype=bool)
    for s, tc, sc in m.state_columns:
        t = d.numeric(tc)
        st = d.numeric(sc)
        _check_binary(sc, st)
        keep &= ~(np.isnan(t) | np.isnan(st))
        times[s] = t
        status[s] = st
    idx = np.where(keep)[0]
    times = {s: t[idx] for s, t in times.items()}
    status = {s: st[idx].astype(int) for s, st in status.items()}
    for s, t in times.items():
        if len(t) and t.min() < 0:
            raise NegativeTime(f"negative times for state {s}")
    # wide-format consistency: an observed entry precedes observed entries of
    # downstream states
    down = _downstream_map(sys)
    bad_rows = set()
    for s in states:
        for j in down.get(s, ()):
            if j in times:
                viol = (status[s] == 1) & (status[j] == 1) & (times[s] > times[j])
                bad_rows.update(idx[viol].tolist())
    if bad_rows:
        raise InconsistentTimes(
            "observed state entries out of order for the declared transition system",
            detail={"rows": sorted(bad_rows)[:50]},
        )
    cov = d.select_columns(m.covariates).select_rows(idx)
    return ValidatedMsmData(times, status, cov, m, int((~keep).sum()))


def _downstream_map(sys: TransitionSystem) -> dict:
    # transitive reachability per state
    out = {}
    adj = {h: set() for h in range(1, sys.n_states + 1)}
    for h, j in sys.edges:
        adj[h].add(j)
    for s in range(1, sys.n_states + 1):
        seen = set()
        stack = list(adj[s])
        while stack:
            v = stack.pop()
            if v in seen:
                continue
            seen.add(v)
            stack.extend(adj[v])
        out[s] = seen
    return out


# ---------------------------------------------------------------------------
# long format


@dataclass(frozen=True, eq=False)
class LongFormatData:
    """Stacked per-transition data: one row per at-risk transition per episode."""

    subject: np.ndarray
    from_state: np.ndarray
    to_state: np.ndarray
    trans: np.ndarray
    tstart: np.ndarray
    tstop: np.ndarray
    status: np.ndarray
    covariates: Dataset
    system: TransitionSystem
    n_zero_extended: int = 0

    @property
    def n(self) -> int:
        return len(self.subject)

    @property
    def duration(self) -> np.ndarray:
        return self.tstop - self.tstart

    def rows_for_transition(self, k: int) -> np.ndarray:
        return np.where(self.trans == k)[0]

    def subset(self, indices) -> "LongFormatData":
        idx = np.asarray(indices)
        return LongFormatData(
            self.subject[idx],
            self.from_state[idx],
            self.to_state[idx],
            self.trans[idx],
            self.tstart[idx],
            self.tstop[idx],
            self.status[idx],
            self.covariates.select_rows(idx),
            self.system,
            self.n_zero_extended,
        )


def _as_state_table(data) -> tuple[dict, dict, Dataset, TransitionSystem, tuple[int, ...]]:
    """Normalize IDM or MSM validated data to per-state (time, status) arrays."""
    if isinstance(data, ValidatedIdmData):
        times = {2: data.time1, 3: data.stime}
        status = {2: data.event1, 3: data.event}
        return times, status, data.covariates, idm_transition_system(), (2, 3)
    if isinstance(data, ValidatedMsmData):
        prio = data.mapping.tie_priority or tuple(s for s, _, _ in data.mapping.state_columns)
        return data.state_times, data.state_status, data.covariates, data.system, prio
    raise ValidationError(f"unsupported data type {type(data).__name__}")


def to_long_format(data, sys: TransitionSystem | None = None,
                   zero_length_offset: float = ZERO_LENGTH_OFFSET) -> LongFormatData:
    """Expand wide records into per-transition rows by walking each subject's path.

    Each occupancy episode emits one row per transition allowed out of the
    occupied state; the realized transition (if any) has status 1 and its
    siblings are censored at the transition time. The final episode censors
    each destination at that destination's recorded time. Episodes of zero
    length are extended by ``zero_length_offset`` so Tstart < Tstop holds.
    """
    times, status, covariates, default_sys, priority = _as_state_table(data)
    if sys is None:
        sys = default_sys
    n = len(next(iter(times.values())))
    prio_rank = {s: i for i, s in enumerate(priority)}

    subj, frm, to, trans, tstart, tstop, stat, covidx = [], [], [], [], [], [], [], []
    n_zero = 0
    for i in range(n):
        current = 1
        logical = 0.0  # last raw transition time
        physical = 0.0  # possibly extended start of the current episode
        used = set()
        path = [1]
        while True:
            outgoing = sys.transitions_from(current)
            if not outgoing:
                break
            cands = []
            for (_, j) in outgoing:
                if j in times and j not in used and status[j][i] == 1:
                    tj = float(times[j][i])
                    if tj < logical:
                        raise PathInconsistent(
                            f"subject {i}: observed entry into state {j} at {tj} "
                            f"precedes arrival in state {current} at {logical}",
                            detail={"subject": i, "state": j},
                        )
                    cands.append((tj, prio_rank.get(j, j), j))
            if not cands:
                # censored here: per-destination censoring times
                last_obs = max(
                    [float(times[s][i]) for s in times if float(times[s][i]) >= logical],
                    default=logical,
                )
                for (_, j) in outgoing:
                    if j in times and j not in used and status[j][i] == 0 and float(times[j][i]) >= logical:
                        cens = float(times[j][i])
                    else:
                        cens = last_obs
                    stop = max(cens, physical)
                    if stop <= physical:
                        stop = physical + zero_length_offset
                        n_zero += 1
                    subj.append(i); frm.append(current); to.append(j)
                    trans.append(sys.transition_number(current, j))
                    tstart.append(physical); tstop.append(stop); stat.append(0)
                    covidx.append(i)
                break
            tj, _, jstar = min(cands)
            stop = tj
            if stop <= physical:
                stop = physical + zero_length_offset
                n_zero += 1
            for (_, j) in outgoing:
                subj.append(i); frm.append(current); to.append(j)
                trans.append(sys.transition_number(current, j))
                tstart.append(physical); tstop.append(stop)
                stat.append(1 if j == jstar else 0)
                covidx.append(i)
            used.add(jstar)
            logical = tj
            physical = stop
            current = jstar
            path.append(jstar)
        # unused observed entries must be explainable by the walked path
        for s in times:
            if s not in used and status[s][i] == 1 and s not in path:
                if not any(sys.has_edge(p, s) for p in path):
                    raise PathInconsistent(
                        f"subject {i}: state {s} observed but unreachable from the "
                        f"subject's path {path}",
                        detail={"subject": i, "state": s, "path": path},
                    )
    cov = covariates.select_rows(covidx)
    return LongFormatData(
        np.array(subj, dtype=int),
        np.array(frm, dtype=int),
        np.array(to, dtype=int),
        np.array(trans, dtype=int),
        np.array(tstart, dtype=float),
        np.array(tstop, dtype=float),
        np.array(stat, dtype=int),
        cov,
        sys,
        n_zero,
    )


@dataclass(frozen=True)
class CountMatrix:
    """Transition counts with row proportions, mirroring an events table."""

    labels: tuple[str, ...]
    counts: tuple[tuple[int, ...], ...]
    no_event: tuple[int, ...]
    entering: tuple[int, ...]

    def proportions(self) -> list[list[float]]:
        out = []
        for h, row in enumerate(self.counts):
            tot = self.entering[h]
            prow = [c / tot if tot else 0.0 for c in row]
            prow.append(self.no_event[h] / tot if tot else 0.0)
            out.append(prow)
        return out

    def to_json(self) -> dict:
        return {
            "labels": list(self.labels),
            "counts": [list(r) for r in self.counts],
            "no_event": list(self.no_event),
            "entering": list(self.entering),
            "proportions": self.proportions(),
        }


def count_transitions(long: LongFormatData, sys: TransitionSystem | None = None) -> CountMatrix:
    if sys is None:
        sys = long.system
    H = sys.n_states
    counts = [[0] * H for _ in range(H)]
    for h, j, st in zip(long.from_state, long.to_state, long.status):
        if st == 1:
            counts[h - 1][j - 1] += 1
    entering = []
    no_event = []
    for h in range(1, H + 1):
        k_h = len(sys.transitions_from(h))
        rows_h = int((long.from_state == h).sum())
        episodes = rows_h // k_h if k_h else 0
        entering.append(episodes)
        no_event.append(episodes - sum(counts[h - 1]))
    return CountMatrix(
        sys.labels,
        tuple(tuple(r) for r in counts),
        tuple(no_event),
        tuple(entering),
    )
