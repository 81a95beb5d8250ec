"""Regression models for censored data: Cox PH and parametric AFT."""

from .aft import AFT_DISTRIBUTIONS, AftFit, aft_loglik, compare_aft, fit_aft, fit_aft_survival
from .cox import CoxFit, fit_cox, fit_cox_survival, partial_loglik
from .design import Design, build_design
from .diagnostics import (
    PH_TRANSFORMS,
    AnovaTable,
    NonlinearityResult,
    PhTestResult,
    anova_sequential,
    nonlinearity_test,
    ph_test,
    rcs_basis,
)

__all__ = [
    "AFT_DISTRIBUTIONS",
    "AftFit",
    "AnovaTable",
    "CoxFit",
    "Design",
    "NonlinearityResult",
    "PH_TRANSFORMS",
    "PhTestResult",
    "aft_loglik",
    "anova_sequential",
    "build_design",
    "compare_aft",
    "fit_aft",
    "fit_aft_survival",
    "fit_cox",
    "fit_cox_survival",
    "nonlinearity_test",
    "partial_loglik",
    "ph_test",
    "rcs_basis",
]
