"""Command line access to every analysis.

Subcommands mirror the service endpoints and share the analysis core, so
both emit the same result JSON for the same inputs, parameters, and seed.
Exit codes: 0 success, 2 validation/usage error, 3 computation error.
"""
from __future__ import annotations

import argparse
import csv
import json
import sys

from . import __version__, analyses
from .dataio import parse_csv
from .errors import ComputationError, MsmkitError, ValidationError

SURVIVAL_COMMANDS = ("km", "ranktest", "cox", "phtest", "anova", "aft")
MSM_COMMANDS = (
    "counts",
    "msmreg",
    "transprob",
    "cif",
    "markov-local",
    "markov-global",
)


def _csv_names(text: str | None) -> tuple[str, ...]:
    if not text:
        return ()
    return tuple(part.strip() for part in text.split(",") if part.strip())


def _csv_floats(text: str | None):
    if text is None:
        return None
    try:
        return [float(part) for part in text.split(",") if part.strip()]
    except ValueError:
        raise ValidationError(f"expected comma-separated numbers, got {text!r}") from None


def _csv_pair(text: str):
    parts = [part.strip() for part in text.split(",")]
    if len(parts) != 2:
        raise ValidationError(f"expected FROM,TO, got {text!r}")
    try:
        return [int(parts[0]), int(parts[1])]
    except ValueError:
        raise ValidationError(f"transition states must be integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="msmkit",
        description="Survival and multi-state analysis: KM, rank tests, Cox/AFT "
        "regression, transition probabilities, and Markov checks.",
    )
    parser.add_argument("--version", action="version", version=f"msmkit {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, kinds, default_kind):
        p.add_argument("--input", required=True, help="CSV file to analyse")
        p.add_argument("--kind", choices=kinds, default=default_kind, help="model kind")
        p.add_argument(
            "--mapping",
            help="JSON file with the column mapping (overrides the mapping flags)",
        )
        p.add_argument("--seed", type=int, default=None, help="RNG seed for bootstraps")

    def survival_mapping(p):
        p.add_argument("--time", default="time", help="time column")
        p.add_argument("--status", default="status", help="0/1 status column")

    def idm_mapping(p):
        p.add_argument("--time1", default="time1", help="intermediate-state time column")
        p.add_argument("--event1", default="event1", help="intermediate-state status column")
        p.add_argument("--stime", default="Stime", help="absorbing-state time column")
        p.add_argument("--event", default="event", help="absorbing-state status column")
        p.add_argument(
            "--covariates", default="", help="comma-separated covariate columns to map"
        )

    p = sub.add_parser("km", help="Kaplan-Meier survival curves")
    common(p, ("survival",), "survival")
    survival_mapping(p)
    p.add_argument("--group", default=None, help="categorical covariate to stratify by")
    p.add_argument("--conf-level", type=float, default=0.95)
    p.add_argument("--conf-type", choices=("plain", "log", "log-log"), default="log")
    p.add_argument("--emit-plot-data", metavar="PATH", help="write curve points as CSV")

    p = sub.add_parser("ranktest", help="G-rho family k-sample test")
    common(p, ("survival",), "survival")
    survival_mapping(p)
    p.add_argument("--group", required=True, help="categorical covariate defining groups")
    p.add_argument("--rho", type=float, default=0.0, help="0 log-rank, 1 Gehan-Wilcoxon")

    p = sub.add_parser("cox", help="Cox proportional hazards regression")
    common(p, ("survival",), "survival")
    survival_mapping(p)
    p.add_argument("--covariates", required=True, help="comma-separated model terms")
    p.add_argument("--ties", choices=("efron", "breslow"), default="efron")

    p = sub.add_parser("phtest", help="proportional hazards diagnostics")
    common(p, ("survival",), "survival")
    survival_mapping(p)
    p.add_argument("--covariates", required=True, help="comma-separated model terms")
    p.add_argument("--ties", choices=("efron", "breslow"), default="efron")
    p.add_argument("--transform", choices=("km", "identity", "log"), default="km")
    p.add_argument(
        "--nonlinearity",
        default=None,
        help="also test this continuous covariate for nonlinearity (spline LR test)",
    )

    p = sub.add_parser("anova", help="sequential analysis of deviance for Cox terms")
    common(p, ("survival",), "survival")
    survival_mapping(p)
    p.add_argument("--covariates", required=True, help="comma-separated model terms, in order")
    p.add_argument("--ties", choices=("efron", "breslow"), default="efron")

    p = sub.add_parser("aft", help="accelerated failure time models")
    common(p, ("survival",), "survival")
    survival_mapping(p)
    p.add_argument("--covariates", default="", help="comma-separated model terms")
    p.add_argument(
        "--distribution",
        default=None,
        help="one AFT family; omit to compare all by AIC",
    )

    p = sub.add_parser("counts", help="transition count matrix")
    common(p, ("idm", "msm"), "idm")
    idm_mapping(p)

    p = sub.add_parser("msmreg", help="per-transition Cox regression")
    common(p, ("idm", "msm"), "idm")
    idm_mapping(p)
    p.add_argument("--clock", choices=("markov", "semi_markov"), default="markov")
    p.add_argument("--ties", choices=("efron", "breslow"), default="efron")

    p = sub.add_parser("transprob", help="transition probability estimators")
    common(p, ("idm", "msm"), "idm")
    idm_mapping(p)
    p.add_argument(
        "--method", required=True, choices=("aj", "lm", "plm", "lmaj", "ipcw", "breslow")
    )
    p.add_argument("--s", type=float, default=0.0, help="conditioning time")
    p.add_argument("--grid", default=None, help="comma-separated evaluation times")
    p.add_argument("--from-state", type=int, default=1, help="origin state for lmaj")
    p.add_argument("--covariate", default=None, help="continuous covariate for ipcw")
    p.add_argument("--x0", type=float, default=None, help="covariate value for ipcw")
    p.add_argument("--bandwidth", type=float, default=None, help="kernel bandwidth for ipcw")
    p.add_argument("--profile", default=None, help="JSON covariate profile for breslow")
    p.add_argument("--ties", choices=("efron", "breslow"), default="efron")
    p.add_argument("--n-boot", type=int, default=0, help="bootstrap replicates for CIs")
    p.add_argument("--conf-level", type=float, default=0.95)
    p.add_argument("--emit-plot-data", metavar="PATH", help="write curve grids as CSV")

    p = sub.add_parser("cif", help="cumulative incidence of the intermediate state")
    common(p, ("idm",), "idm")
    idm_mapping(p)
    p.add_argument("--grid", default=None, help="comma-separated evaluation times")
    p.add_argument("--covariate", default=None, help="conditioning covariate")
    p.add_argument("--level", default=None, help="categorical level to condition on")
    p.add_argument("--x0", type=float, default=None, help="continuous value to condition on")
    p.add_argument("--bandwidth", type=float, default=None)
    p.add_argument("--n-boot", type=int, default=0)
    p.add_argument("--conf-level", type=float, default=0.95)
    p.add_argument("--emit-plot-data", metavar="PATH", help="write the curve grid as CSV")

    p = sub.add_parser("markov-local", help="local Markov test at a landmark time")
    common(p, ("idm", "msm"), "idm")
    idm_mapping(p)
    p.add_argument("--method", choices=("auc", "logrank"), default="auc")
    p.add_argument("--s", type=float, required=True, help="landmark time")
    p.add_argument("--transition", required=True, help="FROM,TO states (1-based)")
    p.add_argument("--n-boot", type=int, default=100)

    p = sub.add_parser("markov-global", help="global Markov test for a transition")
    common(p, ("idm", "msm"), "idm")
    idm_mapping(p)
    p.add_argument("--method", choices=("cox", "auc", "logrank"), default="cox")
    p.add_argument("--transition", required=True, help="FROM,TO states (1-based)")
    p.add_argument("--clock", choices=("markov", "semi_markov"), default="markov")
    p.add_argument("--percentiles", default=None, help="landmark percentiles for auc")
    p.add_argument("--s-grid", default=None, help="explicit landmark times for logrank")
    p.add_argument("--n-boot", type=int, default=100, help="bootstrap replicates (auc)")
    p.add_argument("--n-perm", type=int, default=500, help="permutations (logrank)")
    p.add_argument("--alpha", type=float, default=0.05)

    return parser


def _mapping_from_args(args) -> tuple[str, dict]:
    if args.mapping:
        with open(args.mapping, "r", encoding="utf-8") as fh:
            body = json.load(fh)
        if "mapping" in body:
            return body.get("kind", args.kind), body["mapping"]
        return args.kind, body
    if args.kind == "survival":
        covs = set()
        covs.update(_csv_names(getattr(args, "covariates", "")))
        for attr in ("group", "nonlinearity"):
            value = getattr(args, attr, None)
            if value:
                covs.add(value)
        return "survival", {
            "time": args.time,
            "status": args.status,
            "covariates": sorted(covs),
        }
    if args.kind == "idm":
        covs = set(_csv_names(getattr(args, "covariates", "")))
        value = getattr(args, "covariate", None)
        if value:
            covs.add(value)
        profile = getattr(args, "profile", None)
        if profile:
            covs.update(json.loads(profile).keys())
        return "idm", {
            "time1": args.time1,
            "event1": args.event1,
            "stime": args.stime,
            "event": args.event,
            "covariates": sorted(covs),
        }
    raise ValidationError("msm data needs --mapping with a transition schema")


def _params_from_args(args) -> tuple[str, dict]:
    cmd = args.command
    if cmd == "km":
        return "km", {
            "group_by": args.group,
            "conf_level": args.conf_level,
            "conf_type": args.conf_type,
        }
    if cmd == "ranktest":
        return "ranktest", {"group_by": args.group, "rho": args.rho}
    if cmd == "cox":
        return "cox", {"covariates": list(_csv_names(args.covariates)), "ties": args.ties}
    if cmd == "phtest":
        return "phtest", {
            "covariates": list(_csv_names(args.covariates)),
            "ties": args.ties,
            "transform": args.transform,
            "nonlinearity": args.nonlinearity,
        }
    if cmd == "anova":
        return "anova", {"covariates": list(_csv_names(args.covariates)), "ties": args.ties}
    if cmd == "aft":
        return "aft", {
            "covariates": list(_csv_names(args.covariates)),
            "distribution": args.distribution,
        }
    if cmd == "counts":
        return "counts", {}
    if cmd == "msmreg":
        return "msmreg", {
            "covariates": list(_csv_names(args.covariates)),
            "clock": args.clock,
            "ties": args.ties,
        }
    if cmd == "transprob":
        return "transprob", {
            "method": args.method,
            "s": args.s,
            "grid": _csv_floats(args.grid),
            "from_state": args.from_state,
            "covariate": args.covariate,
            "x0": args.x0,
            "bandwidth": args.bandwidth,
            "profile": json.loads(args.profile) if args.profile else None,
            "ties": args.ties,
            "n_boot": args.n_boot,
            "conf_level": args.conf_level,
            "seed": args.seed,
        }
    if cmd == "cif":
        return "cif", {
            "grid": _csv_floats(args.grid),
            "covariate": args.covariate,
            "level": args.level,
            "x0": args.x0,
            "bandwidth": args.bandwidth,
            "n_boot": args.n_boot,
            "conf_level": args.conf_level,
            "seed": args.seed,
        }
    if cmd == "markov-local":
        return "markov_local", {
            "method": args.method,
            "s": args.s,
            "transition": _csv_pair(args.transition),
            "n_boot": args.n_boot,
            "seed": args.seed,
        }
    if cmd == "markov-global":
        return "markov_global", {
            "method": args.method,
            "transition": _csv_pair(args.transition),
            "clock": args.clock,
            "percentiles": _csv_floats(args.percentiles),
            "s_grid": _csv_floats(args.s_grid),
            "n_boot": args.n_boot,
            "n_perm": args.n_perm,
            "alpha": args.alpha,
            "seed": args.seed,
        }
    raise ValidationError(f"unknown command {cmd!r}")


def _write_plot_data(path: str, analysis: str, result: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh)
        if analysis == "km":
            w.writerow(["group", "time", "estimate", "lower", "upper"])
            for curve in result["curves"]:
                for pt in curve["points"]:
                    w.writerow(
                        [curve["group"], pt["time"], pt["surv"], pt["lower"], pt["upper"]]
                    )
        elif analysis == "transprob":
            w.writerow(["from", "to", "t", "estimate", "lower", "upper"])
            for curve in result["curves"]:
                for pt in curve["grid"]:
                    w.writerow(
                        [curve["from"], curve["to"], pt["t"], pt["est"], pt["lower"], pt["upper"]]
                    )
        else:  # cif
            w.writerow(["t", "estimate", "lower", "upper"])
            for pt in result["curve"]["grid"]:
                w.writerow([pt["t"], pt["est"], pt["lower"], pt["upper"]])


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        with open(args.input, "rb") as fh:
            content = fh.read()
    except OSError as exc:
        print(f"cannot read {args.input}: {exc}", file=sys.stderr)
        return 2
    try:
        kind, mapping = _mapping_from_args(args)
        dataset = parse_csv(content)
        data, _report = analyses.bind_any(dataset, kind, mapping)
        name, params = _params_from_args(args)
        out = analyses.run_analysis(name, data, params)
    except ValidationError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return 2
    except ComputationError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return 3
    except MsmkitError as exc:
        print(f"error ({exc.code}): {exc}", file=sys.stderr)
        return 3
    except json.JSONDecodeError as exc:
        print(f"bad JSON argument: {exc}", file=sys.stderr)
        return 2

    print(json.dumps(out, indent=2, sort_keys=False))
    emit = getattr(args, "emit_plot_data", None)
    if emit:
        _write_plot_data(emit, out["analysis"], out["result"])
    return 0


if __name__ == "__main__":
    sys.exit(main())
