"""Cox proportional-hazards regression over (start, stop] risk sets.

Newton-Raphson with step-halving on the partial likelihood, Efron or Breslow
handling of tied event times. The likelihood machinery is exposed so tests can
check gradients directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from ..dataio import ValidatedSurvivalData
from ..errors import Diverged, NoEvents, SingularInformation
from .design import Design, build_design

INFINITE_COEF_THRESHOLD = 15.0


class _RiskSetIndex:
    """Per-event-time risk and tie sums via suffix cumulative sums.

    The risk set at time t is {i: start_i < t <= stop_i}. Because start < stop
    for every row, the at-risk sum equals (suffix over stop >= t) minus
    (suffix over start >= t).
    """

    def __init__(self, start, stop, status, X):
        self.start = np.asarray(start, dtype=float)
        self.stop = np.asarray(stop, dtype=float)
        self.status = np.asarray(status)
        self.X = np.asarray(X, dtype=float)
        self.n, self.p = self.X.shape
        self.order_stop = np.argsort(self.stop, kind="stable")
        self.order_start = np.argsort(self.start, kind="stable")
        self.stop_sorted = self.stop[self.order_stop]
        self.start_sorted = self.start[self.order_start]
        self.event_times = np.unique(self.stop[self.status == 1])
        self.pos_stop = np.searchsorted(self.stop_sorted, self.event_times, side="left")
        self.pos_start = np.searchsorted(self.start_sorted, self.event_times, side="left")
        self.blocks = [
            np.where((self.stop == t) & (self.status == 1))[0] for t in self.event_times
        ]
        # outer products reused every iteration
        self.XX = self.X[:, :, None] * self.X[:, None, :]

    @staticmethod
    def _suffix(arr):
        return np.cumsum(arr[::-1], axis=0)[::-1]

    def loglik(self, beta, ties="efron"):
        """Log partial likelihood with gradient and observed information."""
        X, p = self.X, self.p
        eta = X @ beta if p else np.zeros(self.n)
        shift = eta.max() if self.n else 0.0
        with np.errstate(over="ignore"):
            w = np.exp(eta - shift)
        wX = w[:, None] * X if p else np.zeros((self.n, 0))
        wXX = w[:, None, None] * self.XX if p else np.zeros((self.n, 0, 0))

        s0_stop = self._suffix(w[self.order_stop])
        s0_start = self._suffix(w[self.order_start])
        if p:
            s1_stop = self._suffix(wX[self.order_stop])
            s1_start = self._suffix(wX[self.order_start])
            s2_stop = self._suffix(wXX[self.order_stop])
            s2_start = self._suffix(wXX[self.order_start])

        ll = 0.0
        U = np.zeros(p)
        I = np.zeros((p, p))
        n_at = len(self.stop_sorted)

        def risk0(k):
            ps, pt = self.pos_stop[k], self.pos_start[k]
            a = s0_stop[ps] if ps < n_at else 0.0
            b = s0_start[pt] if pt < n_at else 0.0
            return a - b

        for k, t in enumerate(self.event_times):
            D = self.blocks[k]
            d = len(D)
            S0 = risk0(k)
            if p:
                ps, pt = self.pos_stop[k], self.pos_start[k]
                S1 = (s1_stop[ps] if ps < n_at else 0.0) - (s1_start[pt] if pt < n_at else 0.0)
                S2 = (s2_stop[ps] if ps < n_at else 0.0) - (s2_start[pt] if pt < n_at else 0.0)
            ll += float((eta[D] - shift).sum())
            if ties == "breslow" or d == 1:
                # efron and breslow agree when d == 1
                ll -= d * np.log(S0)
                if p:
                    mu = S1 / S0
                    U += X[D].sum(axis=0) - d * mu
                    I += d * (S2 / S0 - np.outer(mu, mu))
                continue
            # efron with d tied events
            wD = w[D].sum()
            f = np.arange(d) / d
            dens = S0 - f * wD
            ll -= float(np.log(dens).sum())
            if p:
                S1D = wX[D].sum(axis=0)
                S2D = wXX[D].sum(axis=0)
                nums = S1[None, :] - f[:, None] * S1D[None, :]
                mus = nums / dens[:, None]
                U += X[D].sum(axis=0) - mus.sum(axis=0)
                Ms = S2[None, :, :] - f[:, None, None] * S2D[None, :, :]
                I += (Ms / dens[:, None, None]).sum(axis=0) - np.einsum("li,lj->ij", mus, mus)
        return ll, U, I


    def schoenfeld(self, beta, ties="efron"):
        """Per event time: observed x sums, expected sums, variance sums.

        Returns (times, d, n_risk, xsum, musum, Vsum) where musum and Vsum
        aggregate the Efron sub-steps (or the single Breslow step times d).
        Used by the proportional-hazards diagnostic.
        """
        X, p = self.X, self.p
        eta = X @ beta if p else np.zeros(self.n)
        shift = eta.max() if self.n else 0.0
        with np.errstate(over="ignore"):
            w = np.exp(eta - shift)
        wX = w[:, None] * X
        wXX = w[:, None, None] * self.XX
        ones = np.ones(self.n)
        s0_stop = self._suffix(w[self.order_stop])
        s0_start = self._suffix(w[self.order_start])
        s1_stop = self._suffix(wX[self.order_stop])
        s1_start = self._suffix(wX[self.order_start])
        s2_stop = self._suffix(wXX[self.order_stop])
        s2_start = self._suffix(wXX[self.order_start])
        c_stop = self._suffix(ones[self.order_stop])
        c_start = self._suffix(ones[self.order_start])
        n_at = len(self.stop_sorted)

        m = len(self.event_times)
        d_arr = np.zeros(m, dtype=int)
        n_risk = np.zeros(m)
        xsum = np.zeros((m, p))
        musum = np.zeros((m, p))
        Vsum = np.zeros((m, p, p))
        for k in range(m):
            D = self.blocks[k]
            d = len(D)
            ps, pt = self.pos_stop[k], self.pos_start[k]
            S0 = (s0_stop[ps] if ps < n_at else 0.0) - (s0_start[pt] if pt < n_at else 0.0)
            S1 = (s1_stop[ps] if ps < n_at else 0.0) - (s1_start[pt] if pt < n_at else 0.0)
            S2 = (s2_stop[ps] if ps < n_at else 0.0) - (s2_start[pt] if pt < n_at else 0.0)
            d_arr[k] = d
            n_risk[k] = (c_stop[ps] if ps < n_at else 0.0) - (c_start[pt] if pt < n_at else 0.0)
            xsum[k] = X[D].sum(axis=0)
            if ties == "breslow" or d == 1:
                mu = S1 / S0
                musum[k] = d * mu
                Vsum[k] = d * (S2 / S0 - np.outer(mu, mu))
            else:
                f = np.arange(d) / d
                wD = w[D].sum()
                S1D = wX[D].sum(axis=0)
                S2D = wXX[D].sum(axis=0)
                dens = S0 - f * wD
                mus = (S1[None, :] - f[:, None] * S1D[None, :]) / dens[:, None]
                musum[k] = mus.sum(axis=0)
                Ms = S2[None, :, :] - f[:, None, None] * S2D[None, :, :]
                Vsum[k] = (Ms / dens[:, None, None]).sum(axis=0) - np.einsum(
                    "li,lj->ij", mus, mus
                )
        return self.event_times, d_arr, n_risk, xsum, musum, Vsum


def partial_loglik(beta, start, stop, status, X, ties="efron"):
    """(log partial likelihood, gradient, observed information) at beta."""
    idx = _RiskSetIndex(start, stop, status, X)
    return idx.loglik(np.asarray(beta, dtype=float), ties)


@dataclass(frozen=True, eq=False)
class CoxFit:
    names: tuple[str, ...]
    coef: np.ndarray
    se: np.ndarray
    cov: np.ndarray
    loglik_null: float
    loglik_final: float
    lr_test: dict
    wald_test: dict
    score_test: dict
    ties: str
    n: int
    n_events: int
    converged: bool
    iterations: int
    infinite_flags: tuple[bool, ...]
    n_dropped: int = 0
    _index: object = field(default=None, repr=False)

    @property
    def hr(self) -> np.ndarray:
        return np.exp(self.coef)

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
                    "exp_coef": float(self.hr[i]),
                    "se": float(self.se[i]),
                    "z": float(self.z[i]),
                    "p": float(self.p_values[i]),
                    "infinite": bool(self.infinite_flags[i]),
                }
            )
        return {
            "terms": rows,
            "loglik_null": self.loglik_null,
            "loglik": self.loglik_final,
            "tests": [
                {"test": "likelihood_ratio", **self.lr_test},
                {"test": "wald", **self.wald_test},
                {"test": "score", **self.score_test},
            ],
            "ties": self.ties,
            "n": self.n,
            "n_events": self.n_events,
            "n_dropped_missing": self.n_dropped,
            "converged": self.converged,
            "iterations": self.iterations,
        }


def fit_cox(
    start,
    stop,
    status,
    X,
    names=None,
    ties: str = "efron",
    max_iter: int = 25,
    tol: float = 1e-9,
    n_dropped: int = 0,
) -> CoxFit:
    """Maximize the partial likelihood over (start, stop] risk sets.

    Starts at beta = 0, Newton steps with halving whenever a step would lower
    the likelihood, stops when the relative log-likelihood change drops below
    ``tol``. Monotone likelihoods are reported through per-coefficient
    infinite flags rather than an exception.
    """
    start = np.asarray(start, dtype=float)
    stop = np.asarray(stop, dtype=float)
    status = np.asarray(status).astype(int)
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    n, p = X.shape
    if names is None:
        names = tuple(f"x{i}" for i in range(p))
    n_events = int((status == 1).sum())
    if n_events == 0:
        raise NoEvents("no events: the partial likelihood is undefined")

    # center columns; the partial likelihood is translation invariant and this
    # keeps exp(eta) in range
    center = X.mean(axis=0) if p else np.zeros(0)
    sd = X.std(axis=0) if p else np.zeros(0)
    Xc = X - center
    idx = _RiskSetIndex(start, stop, status, Xc)

    beta = np.zeros(p)
    ll, U, I = idx.loglik(beta, ties)
    ll_null = ll
    if p == 0:
        empty = np.zeros(0)
        zerot = {"statistic": 0.0, "df": 0, "p": 1.0}
        return CoxFit(
            tuple(names), empty, empty, np.zeros((0, 0)), ll, ll,
            dict(zerot), dict(zerot), dict(zerot), ties, n, n_events,
            True, 0, (), n_dropped, idx,
        )

    try:
        score_stat = float(U @ np.linalg.solve(I, U))
    except np.linalg.LinAlgError:
        raise SingularInformation(
            "information matrix singular at beta = 0 (collinear covariates?)"
        )

    converged = False
    iterations = 0
    for it in range(1, max_iter + 1):
        iterations = it
        try:
            step = np.linalg.solve(I, U)
        except np.linalg.LinAlgError:
            raise SingularInformation("information matrix became singular")
        frac = 1.0
        for _ in range(30):
            cand = beta + frac * step
            ll_new, U_new, I_new = idx.loglik(cand, ties)
            if np.isfinite(ll_new) and ll_new >= ll - 1e-12:
                break
            frac /= 2
        else:
            raise Diverged("step halving failed to improve the partial likelihood")
        beta, U, I = cand, U_new, I_new
        done = abs(ll_new - ll) <= tol * (abs(ll) + tol)
        ll = ll_new
        if done:
            converged = True
            break

    try:
        cov = np.linalg.inv(I)
    except np.linalg.LinAlgError:
        raise SingularInformation("information matrix singular at the optimum")
    se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    infinite = tuple(bool(abs(b) * (s if s > 0 else 1.0) > INFINITE_COEF_THRESHOLD)
                     for b, s in zip(beta, sd))

    lr = 2 * (ll - ll_null)
    wald = float(beta @ np.linalg.solve(cov, beta))
    tests = {
        "lr": {"statistic": float(lr), "df": p, "p": float(stats.chi2.sf(lr, p))},
        "wald": {"statistic": wald, "df": p, "p": float(stats.chi2.sf(wald, p))},
        "score": {"statistic": score_stat, "df": p, "p": float(stats.chi2.sf(score_stat, p))},
    }
    return CoxFit(
        tuple(names), beta, se, cov, float(ll_null), float(ll),
        tests["lr"], tests["wald"], tests["score"], ties, n, n_events,
        converged, iterations, infinite, n_dropped, idx,
    )


def fit_cox_survival(
    data: ValidatedSurvivalData, covariates, ties: str = "efron"
) -> CoxFit:
    """Convenience wrapper: build the design from mapped covariates, start = 0."""
    design = build_design(data.covariates, covariates)
    k = design.kept
    return fit_cox(
        np.zeros(len(k)),
        data.time[k],
        data.status[k],
        design.X,
        names=design.names,
        ties=ties,
        n_dropped=design.n_dropped,
    )
