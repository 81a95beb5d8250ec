"""Generate the bundled ebmt4.csv fixture.

Simulated cohort in the layout of a six-state bone-marrow-transplant data
set: transplant, platelet recovery, adverse event, recovery plus adverse
event, relapse, and death. The fixture is synthetic; event times come from
a time-homogeneous Markov chain so the Markov diagnostics have a known
ground truth, with mild covariate effects on selected hazards. Deaths that
occur after relapse are recorded in the survival columns even though the
transition structure treats relapse as absorbing, matching how registry
files report follow-up.

Run from the repository root:

    python3 scripts/simulate_ebmt4.py src/msmkit/fixtures/ebmt4.csv
"""

from __future__ import annotations

import csv
import sys

import numpy as np

SEED = 20260816
N = 2000

# states: 1 tx, 2 rec, 3 ae, 4 rec+ae, 5 rel, 6 death
EDGES = {
    1: {2: 1 / 1200, 3: 1 / 1800, 5: 1 / 6000, 6: 1 / 5000},
    2: {4: 1 / 1500, 5: 1 / 2500, 6: 1 / 2000},
    3: {4: 1 / 1200, 5: 1 / 2200, 6: 1 / 1500},
    4: {5: 1 / 2000, 6: 1 / 1600},
}
POST_RELAPSE_DEATH_RATE = 1 / 900

YEAR_LEVELS = ("1985-1989", "1990-1994", "1995-1998")
AGE_LEVELS = ("<=20", "20-40", ">40")
PROPH_LEVELS = ("no", "yes")
MATCH_LEVELS = ("no gender mismatch", "gender mismatch")


def _log_hr(dest, year, agecl, proph, match):
    """Mild log hazard shifts; death and relapse risks move the most."""
    lhr = 0.0
    if dest == 6:
        lhr += (0.0, 0.1, 0.3)[agecl]
        lhr += (0.0, -0.1, -0.2)[year]
        lhr += 0.2 if match == 1 else 0.0
    elif dest == 5:
        lhr += (0.0, 0.0, 0.15)[agecl]
    elif dest in (3, 4):
        # adverse event arrivals (1->3 and 2->4)
        lhr += -0.3 if proph == 1 else 0.0
    elif dest == 2:
        lhr += 0.1 if year == 2 else 0.0
    return lhr


def simulate(rng):
    rows = []
    for sid in range(1, N + 1):
        year = int(rng.choice(3, p=[0.3, 0.4, 0.3]))
        agecl = int(rng.choice(3, p=[0.35, 0.45, 0.20]))
        proph = int(rng.random() < 0.3)
        match = int(rng.random() < 0.2)

        t = 0.0
        state = 1
        entry = {}
        while state in EDGES:
            dests = list(EDGES[state])
            rates = np.array(
                [
                    EDGES[state][d] * np.exp(_log_hr(d, year, agecl, proph, match))
                    for d in dests
                ]
            )
            total = rates.sum()
            t += rng.exponential(1.0 / total)
            state = dests[int(rng.choice(len(dests), p=rates / total))]
            entry[state] = t
        if state == 5:
            entry[6] = t + rng.exponential(1.0 / POST_RELAPSE_DEATH_RATE)

        cens = rng.uniform(500.0, 5500.0)
        # component event times: recovery and adverse event may be recorded
        # through entry to state 4 when that is the second of the two
        t_rec = entry.get(2, entry.get(4) if 3 in entry else None)
        t_ae = entry.get(3, entry.get(4) if 2 in entry else None)
        t_recae = entry.get(4)
        t_rel = entry.get(5)
        t_death = entry.get(6)

        terminal = min(
            [v for k, v in entry.items() if k in (5, 6)] + [cens]
        )

        def cell(t_event, stop_time):
            if t_event is not None and t_event <= cens:
                return int(round(t_event)), 1
            return int(round(min(stop_time, cens))), 0

        rec, rec_s = cell(t_rec, terminal)
        ae, ae_s = cell(t_ae, terminal)
        recae, recae_s = cell(t_recae, terminal)
        rel, rel_s = cell(t_rel, terminal)
        srv, srv_s = cell(t_death, cens)
        rows.append(
            [
                sid,
                rec,
                rec_s,
                ae,
                ae_s,
                recae,
                recae_s,
                rel,
                rel_s,
                srv,
                srv_s,
                YEAR_LEVELS[year],
                AGE_LEVELS[agecl],
                PROPH_LEVELS[proph],
                MATCH_LEVELS[match],
            ]
        )
    return rows


def main(out_path: str) -> None:
    rng = np.random.default_rng(SEED)
    rows = simulate(rng)
    header = [
        "id",
        "rec",
        "rec.s",
        "ae",
        "ae.s",
        "recae",
        "recae.s",
        "rel",
        "rel.s",
        "srv",
        "srv.s",
        "year",
        "agecl",
        "proph",
        "match",
    ]
    with open(out_path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)
    n_rec = sum(r[2] for r in rows)
    n_ae = sum(r[4] for r in rows)
    n_recae = sum(r[6] for r in rows)
    n_rel = sum(r[8] for r in rows)
    n_dead = sum(r[10] for r in rows)
    print(
        f"wrote {len(rows)} subjects: rec={n_rec} ae={n_ae} "
        f"recae={n_recae} rel={n_rel} dead={n_dead}"
    )


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else "src/msmkit/fixtures/ebmt4.csv")
