import numpy as np
import pytest

from msmkit.dataio import (
    IdmMapping,
    MsmMapping,
    SurvivalMapping,
    bind_idm,
    bind_msm,
    bind_survival,
    build_transition_system,
    parse_csv,
)
from msmkit.fixtures import read_fixture


@pytest.fixture(scope="session")
def veteran_raw():
    return parse_csv(read_fixture("veteran.csv"))


@pytest.fixture(scope="session")
def veteran(veteran_raw):
    return bind_survival(
        veteran_raw, SurvivalMapping("time", "status", ("trt", "celltype", "karno", "diagtime", "age", "prior"))
    )


@pytest.fixture(scope="session")
def aml():
    return bind_survival(
        parse_csv(read_fixture("aml.csv")), SurvivalMapping("time1", "status", ("x",))
    )


@pytest.fixture(scope="session")
def colon_raw():
    return parse_csv(read_fixture("colonIDM.csv"))


@pytest.fixture(scope="session")
def colon(colon_raw):
    return bind_idm(
        colon_raw,
        IdmMapping("time1", "event1", "Stime", "event", ("rx", "sex", "age", "nodes")),
    )


EBMT_EDGES = [
    (1, 2), (1, 3), (1, 5), (1, 6),
    (2, 4), (2, 5), (2, 6),
    (3, 4), (3, 5), (3, 6),
    (4, 5), (4, 6),
]
EBMT_LABELS = ["transplant", "rec", "ae", "rec+ae", "relapse", "death"]
EBMT_STATES = (
    (2, "rec", "rec.s"),
    (3, "ae", "ae.s"),
    (4, "recae", "recae.s"),
    (5, "rel", "rel.s"),
    (6, "srv", "srv.s"),
)


@pytest.fixture(scope="session")
def ebmt_system():
    return build_transition_system(6, EBMT_LABELS, EBMT_EDGES)


@pytest.fixture(scope="session")
def ebmt(ebmt_system):
    return bind_msm(
        parse_csv(read_fixture("ebmt4.csv")),
        MsmMapping(EBMT_STATES, ebmt_system, ("year", "agecl", "proph", "match")),
    )


def make_idm(time1, event1, stime, event, **covs):
    """Bind a small illness-death dataset from literal arrays."""
    names = ["time1", "event1", "Stime", "event", *covs]
    rows = []
    for i in range(len(time1)):
        row = [time1[i], event1[i], stime[i], event[i]]
        row.extend(covs[c][i] for c in covs)
        rows.append(",".join(str(v) for v in row))
    text = ",".join(names) + "\n" + "\n".join(rows) + "\n"
    return bind_idm(
        parse_csv(text.encode()),
        IdmMapping("time1", "event1", "Stime", "event", tuple(covs)),
    )


def make_survival(time, status, **covs):
    names = ["time", "status", *covs]
    rows = []
    for i in range(len(time)):
        row = [time[i], status[i]]
        row.extend(covs[c][i] for c in covs)
        rows.append(",".join(str(v) for v in row))
    text = ",".join(names) + "\n" + "\n".join(rows) + "\n"
    return bind_survival(
        parse_csv(text.encode()), SurvivalMapping("time", "status", tuple(covs))
    )


@pytest.fixture(scope="session")
def uncensored_idm():
    """Fully observed progressive illness-death data on a dyadic time lattice.

    Every subject either goes 1->2->3 or 1->3 directly; no censoring, so
    empirical conditional frequencies are exact references.
    """
    rng = np.random.default_rng(7)
    n = 48
    t1, e1, st, ev = [], [], [], []
    for i in range(n):
        a = float(rng.integers(1, 33)) / 4.0
        if rng.random() < 0.6:
            b = a + float(rng.integers(1, 33)) / 4.0
            t1.append(a)
            e1.append(1)
            st.append(b)
            ev.append(1)
        else:
            t1.append(a)
            e1.append(0)
            st.append(a)
            ev.append(1)
    return make_idm(t1, e1, st, ev)
