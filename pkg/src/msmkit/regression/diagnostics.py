"""Diagnostics for fitted Cox models.

Score test for proportional hazards against a time-varying coefficient,
sequential analysis-of-deviance table, and a restricted cubic spline test
for nonlinearity of a continuous covariate.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import stats

from ..errors import BadCovariate, TooFewDistinctValues, TooFewEvents, ValidationError
from .cox import CoxFit, fit_cox
from .design import build_design

PH_TRANSFORMS = ("km", "identity", "log")
RCS_QUANTILES = (0.05, 0.35, 0.65, 0.95)


@dataclass(frozen=True)
class PhTestResult:
    transform: str
    terms: tuple[str, ...]
    chisq: tuple[float, ...]
    df: tuple[int, ...]
    p_values: tuple[float, ...]
    global_chisq: float
    global_df: int
    global_p: float
    n_events: int

    def to_json(self) -> dict:
        rows = [
            {"term": t, "chisq": c, "df": d, "p": p}
            for t, c, d, p in zip(self.terms, self.chisq, self.df, self.p_values)
        ]
        rows.append(
            {
                "term": "GLOBAL",
                "chisq": self.global_chisq,
                "df": self.global_df,
                "p": self.global_p,
            }
        )
        return {"transform": self.transform, "rows": rows, "n_events": self.n_events}


def _time_transform(transform, times, d, n_risk):
    if transform == "identity":
        return times.astype(float)
    if transform == "log":
        if np.any(times <= 0):
            raise ValidationError("log transform needs positive event times")
        return np.log(times)
    if transform == "km":
        # left-continuous KM over the model's own risk sets; tied deaths
        # share the value from the previous event time
        frac = 1.0 - d / n_risk
        surv = np.cumprod(frac)
        return 1.0 - np.concatenate([[1.0], surv[:-1]])
    raise ValidationError(
        f"unknown transform {transform!r}", detail={"choices": list(PH_TRANSFORMS)}
    )


def ph_test(fit: CoxFit, transform: str = "km") -> PhTestResult:
    """Score test of proportional hazards for each term and globally.

    Tests coefficients of x * g(t) added to the fitted model, evaluated at
    the fitted beta without refitting.
    """
    idx = fit._index
    p = len(fit.names)
    if p == 0:
        raise ValidationError("the model has no covariates to test")
    if fit.n_events < p + 2:
        raise TooFewEvents(
            f"{fit.n_events} events cannot support a {p}-covariate PH test"
        )
    times, d, n_risk, xsum, musum, Vsum = idx.schoenfeld(fit.coef, fit.ties)
    g = _time_transform(transform, times, d, n_risk)
    gc = g - float((g * d).sum() / d.sum())

    resid = xsum - musum
    u = (gc[:, None] * resid).sum(axis=0)
    I11 = Vsum.sum(axis=0)
    I12 = (gc[:, None, None] * Vsum).sum(axis=0)
    I22 = (gc[:, None, None] ** 2 * Vsum).sum(axis=0)
    try:
        D = I22 - I12 @ np.linalg.solve(I11, I12)
    except np.linalg.LinAlgError:
        D = I22 - I12 @ np.linalg.pinv(I11) @ I12

    chisq = []
    pvals = []
    diag = np.diag(D)
    for j in range(p):
        cj = float(u[j] ** 2 / diag[j]) if diag[j] > 0 else 0.0
        chisq.append(cj)
        pvals.append(float(stats.chi2.sf(cj, 1)))
    try:
        gchisq = float(u @ np.linalg.solve(D, u))
    except np.linalg.LinAlgError:
        gchisq = float(u @ np.linalg.pinv(D) @ u)
    gp = float(stats.chi2.sf(gchisq, p))
    return PhTestResult(
        transform=transform,
        terms=fit.names,
        chisq=tuple(chisq),
        df=tuple([1] * p),
        p_values=tuple(pvals),
        global_chisq=gchisq,
        global_df=p,
        global_p=gp,
        n_events=fit.n_events,
    )


@dataclass(frozen=True)
class AnovaTable:
    rows: tuple[dict, ...]
    ties: str

    def to_json(self) -> dict:
        return {"rows": list(self.rows), "ties": self.ties}


def anova_sequential(
    start, stop, status, covariates, names, ties: str = "efron"
) -> AnovaTable:
    """Analysis of deviance: add model terms one at a time, in order.

    ``covariates`` is a Dataset holding the named columns; all models are
    fit on the complete cases of the full design so rows never change
    between nested fits.
    """
    design = build_design(covariates, names)
    k = design.kept
    start = np.asarray(start, dtype=float)[k]
    stop = np.asarray(stop, dtype=float)[k]
    status = np.asarray(status)[k]

    null_fit = fit_cox(start, stop, status, np.zeros((len(k), 0)), names=(), ties=ties)
    rows = [
        {
            "term": "NULL",
            "loglik": null_fit.loglik_final,
            "chisq": None,
            "df": None,
            "p": None,
        }
    ]
    prev_ll = null_fit.loglik_final
    cols: list[int] = []
    for term, term_cols in design.terms:
        cols.extend(term_cols)
        sub = design.X[:, cols]
        sub_names = tuple(design.names[c] for c in cols)
        f = fit_cox(start, stop, status, sub, names=sub_names, ties=ties)
        chisq = 2.0 * (f.loglik_final - prev_ll)
        df = len(term_cols)
        rows.append(
            {
                "term": term,
                "loglik": f.loglik_final,
                "chisq": float(chisq),
                "df": df,
                "p": float(stats.chi2.sf(chisq, df)),
            }
        )
        prev_ll = f.loglik_final
    return AnovaTable(rows=tuple(rows), ties=ties)


def rcs_basis(x, knots):
    """Restricted cubic spline basis, linear-tail normalized.

    Returns the K-2 nonlinear columns for knots t_1 < ... < t_K; the linear
    part is x itself and is not included.
    """
    x = np.asarray(x, dtype=float)
    knots = np.asarray(knots, dtype=float)
    K = len(knots)
    tK, tK1 = knots[-1], knots[-2]
    norm = (knots[-1] - knots[0]) ** 2
    cols = []
    for j in range(K - 2):
        tj = knots[j]
        term = (
            np.clip(x - tj, 0, None) ** 3
            - np.clip(x - tK1, 0, None) ** 3 * (tK - tj) / (tK - tK1)
            + np.clip(x - tK, 0, None) ** 3 * (tK1 - tj) / (tK - tK1)
        )
        cols.append(term / norm)
    return np.column_stack(cols) if cols else np.zeros((len(x), 0))


@dataclass(frozen=True)
class NonlinearityResult:
    covariate: str
    knots: tuple[float, ...]
    loglik_linear: float
    loglik_spline: float
    chisq: float
    df: int
    p_value: float
    n: int
    n_events: int

    def to_json(self) -> dict:
        return {
            "covariate": self.covariate,
            "knots": list(self.knots),
            "loglik_linear": self.loglik_linear,
            "loglik_spline": self.loglik_spline,
            "chisq": self.chisq,
            "df": self.df,
            "p": self.p_value,
        }


def nonlinearity_test(
    start, stop, status, covariates, covariate: str, ties: str = "efron"
) -> NonlinearityResult:
    """Likelihood ratio test of a restricted cubic spline against linearity.

    Four knots at fixed quantiles of the observed covariate give a 2 df
    test of the nonlinear spline components.
    """
    design = build_design(covariates, (covariate,))
    if design.levels[0] is not None or len(design.names) != 1:
        raise BadCovariate(f"covariate {covariate!r} must be numeric for this test")
    k = design.kept
    x = design.X[:, 0]
    knots = np.quantile(x, RCS_QUANTILES)
    if len(np.unique(knots)) < 4:
        raise TooFewDistinctValues(
            f"covariate {covariate!r} has too few distinct values for 4 spline knots",
            detail={"knots": knots.tolist()},
        )
    start = np.asarray(start, dtype=float)[k]
    stop = np.asarray(stop, dtype=float)[k]
    status = np.asarray(status)[k]

    lin = fit_cox(start, stop, status, x[:, None], names=(covariate,), ties=ties)
    spline_X = np.column_stack([x, rcs_basis(x, knots)])
    names = (covariate,) + tuple(covariate + "'" * (j + 1) for j in range(2))
    spl = fit_cox(start, stop, status, spline_X, names=names, ties=ties)
    chisq = 2.0 * (spl.loglik_final - lin.loglik_final)
    df = 2
    return NonlinearityResult(
        covariate=covariate,
        knots=tuple(float(v) for v in knots),
        loglik_linear=lin.loglik_final,
        loglik_spline=spl.loglik_final,
        chisq=float(chisq),
        df=df,
        p_value=float(stats.chi2.sf(chisq, df)),
        n=len(k),
        n_events=spl.n_events,
    )
