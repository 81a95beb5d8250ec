"""Design-matrix construction with reference-level dummy coding."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..dataio import Dataset
from ..errors import BadCovariate


@dataclass(frozen=True, eq=False)
class Design:
    X: np.ndarray                 # n_kept x p
    names: tuple[str, ...]        # one per column, "col" or "col=level"
    terms: tuple[tuple[str, tuple[int, ...]], ...]  # covariate -> column indices
    levels: tuple[str | None, ...]  # dummy level per column, None for numeric
    kept: np.ndarray              # indices into the source rows
    n_dropped: int                # rows dropped for missing covariate values

    def encode(self, profile: dict) -> np.ndarray:
        """Encode a covariate profile (name -> value) into this design's columns."""
        out = np.zeros(len(self.names))
        pos = 0
        for nm, idxs in self.terms:
            if nm not in profile:
                raise BadCovariate(
                    f"profile is missing a value for {nm!r}", detail={"column": nm}
                )
            v = profile[nm]
            for i in idxs:
                lev = self.levels[i]
                if lev is None:
                    try:
                        out[i] = float(v)
                    except (TypeError, ValueError):
                        raise BadCovariate(
                            f"profile value for {nm!r} must be numeric",
                            detail={"column": nm, "value": v},
                        )
                else:
                    out[i] = 1.0 if str(v) == lev else 0.0
            pos += len(idxs)
        return out


def build_design(cov: Dataset, names) -> Design:
    """Numeric covariates enter as-is; categorical ones as dummies against the
    first level observed among the kept rows. Rows with any missing covariate
    value are dropped (complete-case)."""
    names = list(names)
    for nm in names:
        col = cov.column(nm)
        if col.kind == "text":
            raise BadCovariate(
                f"column {nm!r} is free text and cannot be used as a covariate",
                detail={"column": nm},
            )
    keep = np.ones(cov.n, dtype=bool)
    for nm in names:
        vals = cov.values(nm)
        keep &= np.array([v is not None for v in vals])
    kept = np.where(keep)[0]
    cols: list[np.ndarray] = []
    colnames: list[str] = []
    col_levels: list[str | None] = []
    terms: list[tuple[str, tuple[int, ...]]] = []
    for nm in names:
        col = cov.column(nm)
        vals = [cov.values(nm)[i] for i in kept]
        start = len(cols)
        if col.kind == "numeric":
            cols.append(np.array([float(v) for v in vals]))
            colnames.append(nm)
            col_levels.append(None)
        else:
            present = set(vals)
            observed = [l for l in col.levels if l in present]
            for lev in observed[1:]:
                cols.append(np.array([1.0 if v == lev else 0.0 for v in vals]))
                colnames.append(f"{nm}={lev}")
                col_levels.append(lev)
        terms.append((nm, tuple(range(start, len(cols)))))
    X = np.column_stack(cols) if cols else np.empty((len(kept), 0))
    return Design(X, tuple(colnames), tuple(terms), tuple(col_levels), kept, int(cov.n - len(kept)))
