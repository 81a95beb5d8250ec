"""Bootstrap percentile confidence intervals for curve estimators."""

from __future__ import annotations

import warnings

import numpy as np

from ..errors import BootstrapFailure, MsmkitError, ValidationError

MAX_FAILURE_SHARE = 0.2


def substream(seed: int, r: int) -> np.random.Generator:
    """Replicate r's private generator; independent of scheduling order."""
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=(r,)))


def bootstrap_curves(point_fn, data, n_boot: int, conf_level: float, seed: int):
    """Pointwise percentile intervals from subject resampling.

    ``point_fn(data) -> dict[key, array over the fixed grid]``. Replicates
    that raise a package error are dropped and counted; more than 20%
    failing aborts. Returns (base, lower, upper, n_failed) keyed like the
    point function's output.
    """
    if n_boot < 2:
        raise ValidationError("n_boot must be at least 2")
    base = point_fn(data)
    n = data.n
    alpha = 1.0 - conf_level
    stacks = {key: [] for key in base}
    n_failed = 0
    for r in range(n_boot):
        rng = substream(seed, r)
        idx = rng.integers(0, n, size=n)
        try:
            est = point_fn(data.subset(idx))
        except MsmkitError:
            n_failed += 1
            continue
        for key, arr in base.items():
            rep = est.get(key)
            if rep is None:
                rep = np.full(len(arr), np.nan)
            stacks[key].append(np.asarray(rep, dtype=float))
    if n_failed > MAX_FAILURE_SHARE * n_boot:
        raise BootstrapFailure(
            f"{n_failed} of {n_boot} bootstrap replicates failed",
            detail={"n_failed": n_failed, "n_boot": n_boot},
        )
    lower = {}
    upper = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        for key, reps in stacks.items():
            if not reps:
                lower[key] = np.full(len(base[key]), np.nan)
                upper[key] = np.full(len(base[key]), np.nan)
                continue
            mat = np.vstack(reps)
            lower[key] = np.nanquantile(mat, alpha / 2, axis=0, method="weibull")
            upper[key] = np.nanquantile(mat, 1 - alpha / 2, axis=0, method="weibull")
    return base, lower, upper, n_failed
