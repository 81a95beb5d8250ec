"""Containers for transition-probability and cumulative-incidence curves."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np


def _grid_json(times, estimates, lower, upper):
    out = []
    for i, t in enumerate(times):
        est = estimates[i] if estimates is not None else None
        out.append(
            {
                "t": float(t),
                "est": None if est is None or not np.isfinite(est) else float(est),
                "lower": None if lower is None or not np.isfinite(lower[i]) else float(lower[i]),
                "upper": None if upper is None or not np.isfinite(upper[i]) else float(upper[i]),
            }
        )
    return out


@dataclass(frozen=True, eq=False)
class ProbabilityCurve:
    """p_hj(s, t) over a grid of times t >= s."""

    method: str
    s: float
    from_state: int
    to_state: int
    times: np.ndarray
    estimates: np.ndarray | None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    n_boot: int = 0
    conditioning: dict | None = None
    flags: tuple[str, ...] = ()
    missing: bool = False

    def with_ci(self, lower, upper, n_boot) -> "ProbabilityCurve":
        return replace(self, lower=lower, upper=upper, n_boot=n_boot)

    def to_json(self) -> dict:
        return {
            "method": self.method,
            "s": float(self.s),
            "from": self.from_state,
            "to": self.to_state,
            "grid": _grid_json(
                self.times,
                None if self.missing else self.estimates,
                self.lower,
                self.upper,
            ),
            "n_boot": self.n_boot,
            "conditioning": self.conditioning,
            "flags": list(self.flags),
            "missing": self.missing,
        }


@dataclass(frozen=True, eq=False)
class CifCurve:
    """Cumulative incidence of the intermediate state."""

    times: np.ndarray
    estimates: np.ndarray
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None
    n_boot: int = 0
    conditioning: dict | None = None
    flags: tuple[str, ...] = ()

    def with_ci(self, lower, upper, n_boot) -> "CifCurve":
        return replace(self, lower=lower, upper=upper, n_boot=n_boot)

    def to_json(self) -> dict:
        return {
            "grid": _grid_json(self.times, self.estimates, self.lower, self.upper),
            "n_boot": self.n_boot,
            "conditioning": self.conditioning,
            "flags": list(self.flags),
        }
