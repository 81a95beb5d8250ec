"""Parametric accelerated failure time models.

Location-scale form g(T) = x'beta + sigma * W, with g the log or the
identity and W one of three error families. Fitting is Newton-Raphson on
(beta, log sigma) with analytic gradient and Hessian; the exponential pins
sigma at 1 and iterates over beta alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats
from scipy.special import expit

from ..dataio import Dataset, ValidatedSurvivalData
from ..errors import (
    Diverged,
    NoEvents,
    NonPositiveTime,
    SingularInformation,
    ValidationError,
)
from .design import build_design

AFT_DISTRIBUTIONS = (
    "exponential",
    "weibull",
    "gaussian",
    "logistic",
    "lognormal",
    "loglogistic",
)


def _extreme_terms(z, d):
    with np.errstate(over="ignore"):
        ez = np.exp(z)
    g0 = d * (z - ez) + (1 - d) * (-ez)
    g1 = d - ez
    g2 = -ez
    return g0, g1, g2


def _logistic_terms(z, d):
    P = expit(z)
    la = np.logaddexp(0.0, z)
    g0 = d * (z - 2 * la) + (1 - d) * (-la)
    g1 = d * (1 - P) - P
    g2 = -(1 + d) * P * (1 - P)
    return g0, g1, g2


def _normal_terms(z, d):
    lf = stats.norm.logpdf(z)
    lS = stats.norm.logsf(z)
    with np.errstate(over="ignore"):
        lam = np.exp(lf - lS)
    g0 = d * lf + (1 - d) * lS
    g1 = d * (-z) + (1 - d) * (-lam)
    g2 = d * (-1.0) + (1 - d) * (-lam * (lam - z))
    return g0, g1, g2


# distribution -> (error family, log transform, free scale)
_SPECS = {
    "exponential": (_extreme_terms, True, False),
    "weibull": (_extreme_terms, True, True),
    "lognormal": (_normal_terms, True, True),
    "loglogistic": (_logistic_terms, True, True),
    "gaussian": (_normal_terms, False, True),
    "logistic": (_logistic_terms, False, True),
}


def _spec(distribution: str):
    try:
        return _SPECS[distribution]
    except KeyError:
        raise ValidationError(
            f"unknown distribution {distribution!r}",
            detail={"choices": list(AFT_DISTRIBUTIONS)},
        )


def _response(time, status, distribution):
    terms, uses_log, free_scale = _spec(distribution)
    time = np.asarray(time, dtype=float)
    status = np.asarray(status, dtype=float)
    if uses_log:
        bad = np.where(time <= 0)[0]
        if len(bad):
            raise NonPositiveTime(
                f"distribution {distribution!r} needs strictly positive times; "
                f"{len(bad)} rows violate this",
                detail={"rows": bad[:20].tolist()},
            )
        y = np.log(time)
    else:
        y = time
    return terms, free_scale, y, status


def aft_loglik(theta, time, status, X, distribution="weibull"):
    """(log likelihood, gradient, Hessian) at theta = (beta, log sigma).

    For the exponential theta is beta alone, sigma being pinned at 1. The
    Jacobian of the log transform is included, so values are comparable
    across distributions.
    """
    terms, free_scale, y, d = _response(time, status, distribution)
    X = np.asarray(X, dtype=float)
    n, p = X.shape
    theta = np.asarray(theta, dtype=float)
    beta = theta[:p]
    tau = float(theta[p]) if free_scale else 0.0
    sigma = np.exp(tau)

    z = (y - X @ beta) / sigma
    g0, g1, g2 = terms(z, d)
    nd = d.sum()
    ll = float(g0.sum()) - nd * tau
    if _SPECS[distribution][1]:
        ll -= float((d * y).sum())

    gb = -(X.T @ g1) / sigma
    Hbb = (X.T * g2) @ X / sigma**2
    if not free_scale:
        return ll, gb, Hbb
    gt = -float((g1 * z).sum()) - nd
    Hbt = X.T @ (g2 * z + g1) / sigma
    Htt = float((g2 * z * z + g1 * z).sum())
    grad = np.concatenate([gb, [gt]])
    H = np.empty((p + 1, p + 1))
    H[:p, :p] = Hbb
    H[:p, p] = H[p, :p] = Hbt
    H[p, p] = Htt
    return ll, grad, H


@dataclass(frozen=True, eq=False)
class AftFit:
    distribution: str
    names: tuple[str, ...]
    coef: np.ndarray
    scale: float
    se: np.ndarray
    log_scale_se: float | None
    cov: np.ndarray
    loglik: float
    n: int
    n_events: int
    converged: bool
    iterations: int
    n_dropped: int = 0

    @property
    def k_params(self) -> int:
        return len(self.names) + (0 if self.log_scale_se is None else 1)

    @property
    def aic(self) -> float:
        return -2.0 * self.loglik + 2.0 * self.k_params

    @property
    def z(self) -> np.ndarray:
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self.se > 0, self.coef / self.se, np.nan)

    @property
    def p_values(self) -> np.ndarray:
        return 2 * stats.norm.sf(np.abs(self.z))

    def to_json(self) -> dict:
        rows = []
        for i, nm in enumerate(self.names):
            rows.append(
                {
                    "term": nm,
                    "coef": float(self.coef[i]),
                    "se": float(self.se[i]),
                    "z": float(self.z[i]),
                    "p": float(self.p_values[i]),
                }
            )
        return {
            "distribution": self.distribution,
            "terms": rows,
            "scale": self.scale,
            "log_scale_se": self.log_scale_se,
            "loglik": self.loglik,
            "aic": self.aic,
            "k_params": self.k_params,
            "n": self.n,
            "n_events": self.n_events,
            "n_dropped_missing": self.n_dropped,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def fit_aft(
    time,
    status,
    X=None,
    names=(),
    distribution: str = "weibull",
    max_iter: int = 50,
    tol: float = 1e-9,
    n_dropped: int = 0,
) -> AftFit:
    """Fit an AFT model. X holds covariates only; an intercept is prepended."""
    terms, free_scale, y, d = _response(time, status, distribution)
    n = len(y)
    if X is None:
        X = np.zeros((n, 0))
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    Xf = np.column_stack([np.ones(n), X])
    all_names = ("(Intercept)",) + tuple(names)
    p = Xf.shape[1]
    n_events = int(d.sum())
    if n_events == 0:
        raise NoEvents("no events: the AFT likelihood has no finite maximum")

    beta, *_ = np.linalg.lstsq(Xf, y, rcond=None)
    resid = y - Xf @ beta
    tau = float(np.log(max(resid.std(), 1e-3)))
    theta = np.concatenate([beta, [tau]]) if free_scale else beta

    ll, grad, H = aft_loglik(theta, time, status, Xf, distribution)
    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        try:
            step = np.linalg.solve(-H, grad)
        except np.linalg.LinAlgError:
            raise SingularInformation("Hessian singular during AFT fit")
        frac = 1.0
        for _ in range(30):
            cand = theta + frac * step
            ll_new, grad_new, H_new = aft_loglik(cand, time, status, Xf, distribution)
            if np.isfinite(ll_new) and ll_new >= ll - 1e-12:
                break
            frac /= 2
        else:
            raise Diverged("step halving failed to improve the AFT likelihood")
        theta, grad, H = cand, grad_new, H_new
        done = abs(ll_new - ll) <= tol * (abs(ll) + tol)
        ll = ll_new
        if done:
            converged = True
            break

    try:
        cov = np.linalg.inv(-H)
    except np.linalg.LinAlgError:
        raise SingularInformation("Hessian singular at the AFT optimum")
    se_all = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    if free_scale:
        coef = theta[:p]
        scale = float(np.exp(theta[p]))
        log_scale_se = float(se_all[p])
    else:
        coef = theta
        scale = 1.0
        log_scale_se = None
    return AftFit(
        distribution=distribution,
        names=all_names,
        coef=coef,
        scale=scale,
        se=se_all[:p],
        log_scale_se=log_scale_se,
        cov=cov,
        loglik=float(ll),
        n=n,
        n_events=n_events,
        converged=converged,
        iterations=iterations,
        n_dropped=n_dropped,
    )


def fit_aft_survival(
    data: ValidatedSurvivalData,
    covariates=(),
    distribution: str = "weibull",
) -> AftFit:
    """Fit an AFT model on bound survival data with named covariates."""
    if covariates:
        design = build_design(data.covariates, covariates)
        k = design.kept
        return fit_aft(
            data.time[k],
            data.status[k],
            design.X,
            names=design.names,
            distribution=distribution,
            n_dropped=design.n_dropped,
        )
    return fit_aft(data.time, data.status, distribution=distribution)


def compare_aft(
    data: ValidatedSurvivalData, covariates=(), distributions=AFT_DISTRIBUTIONS
) -> list[AftFit]:
    """Fit several AFT distributions on the same data, sorted by AIC."""
    fits = [fit_aft_survival(data, covariates, dist) for dist in distributions]
    return sorted(fits, key=lambda f: f.aic)
