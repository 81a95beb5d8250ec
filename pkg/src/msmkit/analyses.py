"""Shared analysis core behind the CLI and the HTTP service.

Every analysis is a pure function of (bound data, params) returning a
JSON-ready dict with three keys: the analysis name, the effective
parameters after defaults are resolved (including the seed actually
used), and the result. The CLI and the service both call
:func:`run_analysis`, which is what makes their outputs byte-identical
for identical inputs.
"""
from __future__ import annotations

import math

import numpy as np

from . import markovcheck
from .dataio import (
    Dataset,
    IdmMapping,
    MsmMapping,
    SurvivalMapping,
    ValidatedIdmData,
    ValidatedMsmData,
    ValidatedSurvivalData,
    bind_idm,
    bind_msm,
    bind_survival,
    build_transition_system,
    count_transitions,
    to_long_format,
)
from .errors import IncompatibleMapping, UnknownAnalysis, ValidationError
from .msmprob import (
    TP_METHODS,
    aalen_johansen,
    bootstrap_curves,
    breslow_conditional,
    cif,
    default_grid,
    ipcw_conditional,
    landmark_aalen_johansen,
    landmark_idm,
    per_transition_cox,
    presmoothed_landmark_idm,
)
from .regression import (
    AFT_DISTRIBUTIONS,
    PH_TRANSFORMS,
    anova_sequential,
    compare_aft,
    fit_aft_survival,
    fit_cox_survival,
    nonlinearity_test,
    ph_test,
)
from .survcore import kaplan_meier, rank_test

KINDS = ("survival", "idm", "msm")

ANALYSES = (
    "km",
    "ranktest",
    "cox",
    "phtest",
    "anova",
    "aft",
    "counts",
    "msmreg",
    "transprob",
    "cif",
    "markov_local",
    "markov_global",
)

_KIND_FOR_TYPE = {
    ValidatedSurvivalData: "survival",
    ValidatedIdmData: "idm",
    ValidatedMsmData: "msm",
}

ANALYSIS_KINDS = {
    "km": ("survival",),
    "ranktest": ("survival",),
    "cox": ("survival",),
    "phtest": ("survival",),
    "anova": ("survival",),
    "aft": ("survival",),
    "counts": ("idm", "msm"),
    "msmreg": ("idm", "msm"),
    "transprob": ("idm", "msm"),
    "cif": ("idm",),
    "markov_local": ("idm", "msm"),
    "markov_global": ("idm", "msm"),
}

# methods needing the illness-death landmark decomposition
_IDM_ONLY_TP = ("lm", "plm", "ipcw")

_REQUIRED = object()


def jsonable(obj):
    """Recursively convert numpy containers/scalars; NaN and inf become null."""
    if obj is None or isinstance(obj, (bool, int, str)):
        return obj
    if isinstance(obj, float):  # np.float64 subclasses float
        return float(obj) if math.isfinite(obj) else None
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return jsonable(float(obj))
    if isinstance(obj, np.ndarray):
        return [jsonable(x) for x in obj.tolist()]
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(x) for x in obj]
    raise TypeError(f"cannot serialize {type(obj).__name__}")


def fresh_seed() -> int:
    return int(np.random.SeedSequence().generate_state(1, np.uint64)[0])


def _names(value, what: str) -> tuple[str, ...]:
    if value is None:
        return ()
    if isinstance(value, str):
        return (value,)
    if isinstance(value, (list, tuple)) and all(isinstance(v, str) for v in value):
        return tuple(value)
    raise ValidationError(f"{what} must be a list of column names")


def _transition_pair(value):
    if (
        not isinstance(value, (list, tuple))
        or len(value) != 2
        or not all(isinstance(v, (int, np.integer)) for v in value)
    ):
        raise ValidationError(
            "transition must be a [from_state, to_state] pair of integers",
            detail={"transition": value},
        )
    return (int(value[0]), int(value[1]))


def _float_list(value, what: str):
    try:
        return [float(v) for v in value]
    except (TypeError, ValueError):
        raise ValidationError(f"{what} must be a list of numbers") from None


def _resolve(params: dict, schema: dict, analysis: str) -> dict:
    unknown = sorted(set(params) - set(schema))
    if unknown:
        raise ValidationError(
            f"unknown parameters for {analysis}: {', '.join(unknown)}",
            detail={"unknown": unknown},
        )
    eff = {}
    for key, default in schema.items():
        value = params.get(key)
        if value is None:
            if default is _REQUIRED:
                raise ValidationError(f"missing required parameter {key!r} for {analysis}")
            value = default
        eff[key] = value
    return eff


# ---------------------------------------------------------------- binding


def bind_any(dataset: Dataset, kind: str, mapping: dict):
    """Bind a parsed table under one of the three model kinds.

    Returns (validated data, validation report). The mapping dict uses the
    same keys the service's bind endpoint accepts.
    """
    if kind not in KINDS:
        raise ValidationError(f"unknown model kind {kind!r}", detail={"allowed": list(KINDS)})
    if not isinstance(mapping, dict):
        raise ValidationError("mapping must be an object")
    if kind == "survival":
        eff = _resolve(mapping, {"time": _REQUIRED, "status": _REQUIRED, "covariates": ()}, "bind")
        data = bind_survival(
            dataset,
            SurvivalMapping(eff["time"], eff["status"], _names(eff["covariates"], "covariates")),
        )
    elif kind == "idm":
        eff = _resolve(
            mapping,
            {
                "time1": _REQUIRED,
                "event1": _REQUIRED,
                "stime": _REQUIRED,
                "event": _REQUIRED,
                "covariates": (),
            },
            "bind",
        )
        data = bind_idm(
            dataset,
            IdmMapping(
                eff["time1"],
                eff["event1"],
                eff["stime"],
                eff["event"],
                _names(eff["covariates"], "covariates"),
            ),
        )
    else:
        eff = _resolve(
            mapping,
            {
                "n_states": _REQUIRED,
                "edges": _REQUIRED,
                "states": _REQUIRED,
                "labels": None,
                "covariates": (),
                "tie_priority": (),
            },
            "bind",
        )
        edges = [_transition_pair(e) for e in eff["edges"]]
        sys = build_transition_system(int(eff["n_states"]), eff["labels"], edges)
        cols = []
        for row in eff["states"]:
            if isinstance(row, dict):
                missing = {"state", "time", "status"} - set(row)
                if missing:
                    raise ValidationError(
                        f"state mapping entry missing {sorted(missing)}", detail={"entry": row}
                    )
                cols.append((int(row["state"]), str(row["time"]), str(row["status"])))
            elif isinstance(row, (list, tuple)) and len(row) == 3:
                cols.append((int(row[0]), str(row[1]), str(row[2])))
            else:
                raise ValidationError(
                    "states entries must be {state, time, status} objects", detail={"entry": row}
                )
        data = bind_msm(
            dataset,
            MsmMapping(
                tuple(cols),
                sys,
                _names(eff["covariates"], "covariates"),
                tuple(int(s) for s in eff["tie_priority"]),
            ),
        )
    report = {
        "kind": kind,
        "n": data.n,
        "n_dropped": data.n_dropped,
        "covariates": list(data.covariates.names),
    }
    if kind == "msm":
        report["system"] = data.mapping.system.to_json()
    return data, report


def kind_of(data) -> str:
    for cls, kind in _KIND_FOR_TYPE.items():
        if isinstance(data, cls):
            return kind
    raise ValidationError(f"unsupported data type {type(data).__name__}")


# ---------------------------------------------------------------- handlers


def _run_km(data, params):
    eff = _resolve(
        params, {"group_by": None, "conf_level": 0.95, "conf_type": "log"}, "km"
    )
    curves = kaplan_meier(data, eff["group_by"], float(eff["conf_level"]), eff["conf_type"])
    return eff, {"curves": [c.to_json() for c in curves]}


def _run_ranktest(data, params):
    eff = _resolve(params, {"group_by": _REQUIRED, "rho": 0.0}, "ranktest")
    res = rank_test(data, eff["group_by"], float(eff["rho"]))
    return eff, res.to_json()


def _run_cox(data, params):
    eff = _resolve(params, {"covariates": _REQUIRED, "ties": "efron"}, "cox")
    covs = _names(eff["covariates"], "covariates")
    if not covs:
        raise ValidationError("cox requires at least one covariate")
    fit = fit_cox_survival(data, covs, eff["ties"])
    return eff, fit.to_json()


def _run_phtest(data, params):
    eff = _resolve(
        params,
        {"covariates": _REQUIRED, "ties": "efron", "transform": "km", "nonlinearity": None},
        "phtest",
    )
    covs = _names(eff["covariates"], "covariates")
    if not covs:
        raise ValidationError("phtest requires at least one covariate")
    if eff["transform"] not in PH_TRANSFORMS:
        raise ValidationError(
            f"unknown transform {eff['transform']!r}", detail={"allowed": list(PH_TRANSFORMS)}
        )
    fit = fit_cox_survival(data, covs, eff["ties"])
    result = {"ph_test": ph_test(fit, eff["transform"]).to_json()}
    if eff["nonlinearity"] is not None:
        nl = nonlinearity_test(
            np.zeros(data.n),
            data.time,
            data.status,
            data.covariates,
            eff["nonlinearity"],
            eff["ties"],
        )
        result["nonlinearity"] = nl.to_json()
    return eff, result


def _run_anova(data, params):
    eff = _resolve(params, {"covariates": _REQUIRED, "ties": "efron"}, "anova")
    covs = _names(eff["covariates"], "covariates")
    if not covs:
        raise ValidationError("anova requires at least one covariate")
    table = anova_sequential(
        np.zeros(data.n), data.time, data.status, data.covariates, covs, eff["ties"]
    )
    return eff, table.to_json()


def _run_aft(data, params):
    eff = _resolve(params, {"covariates": (), "distribution": None}, "aft")
    covs = _names(eff["covariates"], "covariates")
    if eff["distribution"] is None:
        fits = compare_aft(data, covs)
        return eff, {"fits": [f.to_json() for f in fits]}
    if eff["distribution"] not in AFT_DISTRIBUTIONS:
        raise ValidationError(
            f"unknown distribution {eff['distribution']!r}",
            detail={"allowed": list(AFT_DISTRIBUTIONS)},
        )
    fit = fit_aft_survival(data, covs, eff["distribution"])
    return eff, {"fits": [fit.to_json()]}


def _run_counts(data, params):
    eff = _resolve(params, {}, "counts")
    return eff, count_transitions(to_long_format(data)).to_json()


def _run_msmreg(data, params):
    eff = _resolve(
        params, {"covariates": (), "clock": "markov", "ties": "efron"}, "msmreg"
    )
    covs = _names(eff["covariates"], "covariates")
    fits = per_transition_cox(to_long_format(data), covs, eff["clock"], eff["ties"])
    return eff, {"transitions": [f.to_json() for f in fits]}


def _tp_point_fn(method, sys, s, grid, eff):
    """Estimator closure for transprob: wide data -> {(h, j): estimates}."""

    def curves_of(data):
        if method == "aj":
            return aalen_johansen(to_long_format(data, sys), sys, s, grid)
        if method == "lm":
            return landmark_idm(data, s, grid)
        if method == "plm":
            return presmoothed_landmark_idm(data, s, grid)
        if method == "lmaj":
            return landmark_aalen_johansen(
                to_long_format(data, sys), sys, s, eff["from_state"], grid
            )
        if method == "ipcw":
            return ipcw_conditional(
                data, s, grid, eff["covariate"], eff["x0"], eff["bandwidth"]
            )
        curves, _ = breslow_conditional(
            to_long_format(data, sys), sys, s, grid, eff["profile"], eff["ties"]
        )
        return curves

    def point(data):
        return {(c.from_state, c.to_state): c.estimates for c in curves_of(data)}

    return curves_of, point


def _run_transprob(data, params):
    eff = _resolve(
        params,
        {
            "method": _REQUIRED,
            "s": 0.0,
            "grid": None,
            "from_state": 1,
            "covariate": None,
            "x0": None,
            "bandwidth": None,
            "profile": None,
            "ties": "efron",
            "n_boot": 0,
            "conf_level": 0.95,
            "seed": None,
        },
        "transprob",
    )
    method = eff["method"]
    if method not in TP_METHODS:
        raise ValidationError(
            f"unknown method {method!r}", detail={"allowed": list(TP_METHODS)}
        )
    kind = kind_of(data)
    if kind == "msm" and method in _IDM_ONLY_TP:
        raise ValidationError(
            f"method {method!r} requires illness-death (idm) data",
            detail={"method": method},
        )
    if method == "ipcw":
        if eff["covariate"] is None or eff["x0"] is None:
            raise ValidationError("method 'ipcw' requires covariate and x0")
        eff["x0"] = float(eff["x0"])
        if eff["bandwidth"] is not None:
            eff["bandwidth"] = float(eff["bandwidth"])
    eff["s"] = float(eff["s"])
    eff["from_state"] = int(eff["from_state"])
    eff["n_boot"] = int(eff["n_boot"])
    sys = markovcheck._system_for(data, None)
    long = to_long_format(data, sys)
    if eff["grid"] is None:
        grid = default_grid(long, eff["s"])
    else:
        grid = np.unique(_float_list(eff["grid"], "grid"))
        if grid.size == 0:
            raise ValidationError("grid must be nonempty")
    eff["grid"] = [float(g) for g in grid]

    curves_of, point = _tp_point_fn(method, sys, eff["s"], grid, eff)
    fit_reports = None
    if method == "breslow":
        curves, fit_reports = breslow_conditional(
            long, sys, eff["s"], grid, eff["profile"], eff["ties"]
        )
    else:
        curves = curves_of(data)

    n_failed = 0
    if eff["n_boot"] > 0:
        if eff["seed"] is None:
            eff["seed"] = fresh_seed()
        _, lower, upper, n_failed = bootstrap_curves(
            point, data, eff["n_boot"], float(eff["conf_level"]), eff["seed"]
        )
        curves = [
            c.with_ci(
                lower[(c.from_state, c.to_state)],
                upper[(c.from_state, c.to_state)],
                eff["n_boot"],
            )
            for c in curves
        ]
    result = {"curves": [c.to_json() for c in curves], "n_failed_replicates": n_failed}
    if fit_reports is not None:
        result["fit_reports"] = fit_reports
    return eff, result


def _run_cif(data, params):
    eff = _resolve(
        params,
        {
            "grid": None,
            "covariate": None,
            "level": None,
            "x0": None,
            "bandwidth": None,
            "n_boot": 0,
            "conf_level": 0.95,
            "seed": None,
        },
        "cif",
    )
    if eff["grid"] is None:
        events = np.unique(data.time1[(data.event1 == 1)])
        if events.size == 0:
            raise ValidationError("no illness events to build a default grid from")
        grid = events
    else:
        grid = np.unique(_float_list(eff["grid"], "grid"))
        if grid.size == 0:
            raise ValidationError("grid must be nonempty")
    eff["grid"] = [float(g) for g in grid]
    if eff["x0"] is not None:
        eff["x0"] = float(eff["x0"])
    if eff["bandwidth"] is not None:
        eff["bandwidth"] = float(eff["bandwidth"])
    eff["n_boot"] = int(eff["n_boot"])

    def point(d):
        c = cif(d, grid, eff["covariate"], eff["level"], eff["x0"], eff["bandwidth"])
        return {"cif": c.estimates}

    curve = cif(data, grid, eff["covariate"], eff["level"], eff["x0"], eff["bandwidth"])
    n_failed = 0
    if eff["n_boot"] > 0:
        if eff["seed"] is None:
            eff["seed"] = fresh_seed()
        _, lower, upper, n_failed = bootstrap_curves(
            point, data, eff["n_boot"], float(eff["conf_level"]), eff["seed"]
        )
        curve = curve.with_ci(lower["cif"], upper["cif"], eff["n_boot"])
    return eff, {"curve": curve.to_json(), "n_failed_replicates": n_failed}


def _run_markov_local(data, params):
    eff = _resolve(
        params,
        {"method": "auc", "s": _REQUIRED, "transition": _REQUIRED, "n_boot": 100, "seed": None},
        "markov_local",
    )
    transition = _transition_pair(eff["transition"])
    eff["transition"] = list(transition)
    eff["s"] = float(eff["s"])
    if eff["method"] == "auc":
        if eff["seed"] is None:
            eff["seed"] = fresh_seed()
        res = markovcheck.local_auc_test(
            data, None, eff["s"], transition, int(eff["n_boot"]), eff["seed"]
        )
    elif eff["method"] == "logrank":
        eff["n_boot"] = None
        eff["seed"] = None
        res = markovcheck.local_logrank_test(data, None, eff["s"], transition)
    else:
        raise ValidationError(
            f"unknown method {eff['method']!r}", detail={"allowed": ["auc", "logrank"]}
        )
    return eff, res.to_json()


def _run_markov_global(data, params):
    eff = _resolve(
        params,
        {
            "method": "cox",
            "transition": _REQUIRED,
            "clock": "markov",
            "percentiles": list(markovcheck.DEFAULT_PERCENTILES),
            "s_grid": None,
            "n_boot": 100,
            "n_perm": 500,
            "alpha": markovcheck.DEFAULT_ALPHA,
            "seed": None,
        },
        "markov_global",
    )
    transition = _transition_pair(eff["transition"])
    eff["transition"] = list(transition)
    eff["alpha"] = float(eff["alpha"])
    method = eff["method"]
    if method == "cox":
        eff["seed"] = None
        res = markovcheck.global_cox_test(data, None, transition, eff["clock"], eff["alpha"])
    elif method == "auc":
        if eff["seed"] is None:
            eff["seed"] = fresh_seed()
        res = markovcheck.global_auc_test(
            data,
            None,
            transition[0],
            transition[1],
            _float_list(eff["percentiles"], "percentiles"),
            int(eff["n_boot"]),
            eff["alpha"],
            eff["seed"],
        )
    elif method == "logrank":
        if eff["seed"] is None:
            eff["seed"] = fresh_seed()
        s_grid = None if eff["s_grid"] is None else _float_list(eff["s_grid"], "s_grid")
        res = markovcheck.global_logrank_test(
            data, None, transition, s_grid, int(eff["n_perm"]), eff["alpha"], eff["seed"]
        )
    else:
        raise ValidationError(
            f"unknown method {method!r}", detail={"allowed": ["cox", "auc", "logrank"]}
        )
    return eff, res.to_json()


_HANDLERS = {
    "km": _run_km,
    "ranktest": _run_ranktest,
    "cox": _run_cox,
    "phtest": _run_phtest,
    "anova": _run_anova,
    "aft": _run_aft,
    "counts": _run_counts,
    "msmreg": _run_msmreg,
    "transprob": _run_transprob,
    "cif": _run_cif,
    "markov_local": _run_markov_local,
    "markov_global": _run_markov_global,
}


def run_analysis(name: str, data, params: dict | None = None) -> dict:
    """Run one named analysis against bound data.

    Raises IncompatibleMapping when the bound kind does not support the
    analysis, UnknownAnalysis for names outside the fixed set.
    """
    if name not in _HANDLERS:
        raise UnknownAnalysis(f"unknown analysis {name!r}", detail={"allowed": list(ANALYSES)})
    kind = kind_of(data)
    if kind not in ANALYSIS_KINDS[name]:
        raise IncompatibleMapping(
            f"analysis {name!r} requires {' or '.join(ANALYSIS_KINDS[name])} data, "
            f"session is bound as {kind!r}",
            detail={"analysis": name, "bound": kind, "allowed": list(ANALYSIS_KINDS[name])},
        )
    params = dict(params or {})
    eff, result = _HANDLERS[name](data, params)
    if "seed" not in eff:
        eff["seed"] = None
    return {"analysis": name, "params": jsonable(eff), "result": jsonable(result)}
