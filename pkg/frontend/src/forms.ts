/* Declarative form specs, one per analysis. Every parameter accepted by the
   service is reachable from exactly one control, and initial values mirror
   the server-side defaults so the echoed params block matches an untouched
   form. */

export type FieldKind =
  | "text"
  | "number"
  | "int"
  | "select"
  | "floats"
  | "ints"
  | "names"
  | "pair"
  | "json";

export interface FieldSpec {
  key: string;
  label: string;
  kind: FieldKind;
  options?: string[];
  initial?: string;
  required?: boolean;
  placeholder?: string;
  /* The console iterates this field: a list control whose entries are sent
     one request at a time under the same key. */
  expand?: boolean;
}

const TIES: FieldSpec = {
  key: "ties",
  label: "ties",
  kind: "select",
  options: ["efron", "breslow"],
  initial: "efron",
};

const COVARIATES: FieldSpec = {
  key: "covariates",
  label: "covariates",
  kind: "names",
  placeholder: "comma separated column names",
};

export const ANALYSIS_FORMS: Record<string, FieldSpec[]> = {
  km: [
    { key: "group_by", label: "group by", kind: "text", placeholder: "optional column" },
    { key: "conf_level", label: "confidence level", kind: "number", initial: "0.95" },
    {
      key: "conf_type",
      label: "CI transform",
      kind: "select",
      options: ["log", "plain", "log-log"],
      initial: "log",
    },
  ],
  ranktest: [
    { key: "group_by", label: "group by", kind: "text", required: true },
    { key: "rho", label: "rho", kind: "number", initial: "0" },
  ],
  cox: [{ ...COVARIATES, required: true }, TIES],
  phtest: [
    { ...COVARIATES, required: true },
    TIES,
    {
      key: "transform",
      label: "time transform",
      kind: "select",
      options: ["km", "identity", "log"],
      initial: "km",
    },
    {
      key: "nonlinearity",
      label: "nonlinearity check",
      kind: "text",
      placeholder: "numeric covariate (optional)",
    },
  ],
  anova: [{ ...COVARIATES, required: true }, TIES],
  aft: [
    COVARIATES,
    {
      key: "distribution",
      label: "distribution",
      kind: "select",
      options: [
        "",
        "exponential",
        "weibull",
        "gaussian",
        "logistic",
        "lognormal",
        "loglogistic",
      ],
      initial: "",
    },
  ],
  counts: [],
  msmreg: [
    COVARIATES,
    {
      key: "clock",
      label: "clock",
      kind: "select",
      options: ["markov", "semi_markov"],
      initial: "markov",
    },
    TIES,
  ],
  transprob: [
    {
      key: "method",
      label: "method",
      kind: "select",
      options: ["aj", "lm", "plm", "lmaj", "ipcw", "breslow"],
      required: true,
    },
    { key: "s", label: "start time s", kind: "number", initial: "0" },
    { key: "grid", label: "prediction grid", kind: "floats", placeholder: "e.g. 730, 1095" },
    { key: "from_state", label: "from state", kind: "int", initial: "1" },
    { key: "covariate", label: "conditioning covariate", kind: "text" },
    { key: "x0", label: "covariate value x0", kind: "number" },
    { key: "bandwidth", label: "bandwidth", kind: "number" },
    { key: "profile", label: "profile", kind: "json", placeholder: "JSON, e.g. {\"age\": 55}" },
    TIES,
    { key: "n_boot", label: "bootstrap replicates", kind: "int", initial: "0" },
    { key: "conf_level", label: "confidence level", kind: "number", initial: "0.95" },
    { key: "seed", label: "seed", kind: "int", placeholder: "optional" },
  ],
  cif: [
    { key: "grid", label: "prediction grid", kind: "floats", placeholder: "defaults to illness times" },
    { key: "covariate", label: "conditioning covariate", kind: "text" },
    { key: "level", label: "level", kind: "text", placeholder: "categorical level" },
    { key: "x0", label: "covariate value x0", kind: "number" },
    { key: "bandwidth", label: "bandwidth", kind: "number" },
    { key: "n_boot", label: "bootstrap replicates", kind: "int", initial: "0" },
    { key: "conf_level", label: "confidence level", kind: "number", initial: "0.95" },
    { key: "seed", label: "seed", kind: "int", placeholder: "optional" },
  ],
  markov_local: [
    {
      key: "method",
      label: "method",
      kind: "select",
      options: ["auc", "logrank"],
      initial: "auc",
    },
    { key: "s", label: "landmark times s", kind: "floats", required: true, expand: true },
    { key: "transition", label: "transition (from,to)", kind: "pair", required: true },
    { key: "n_boot", label: "bootstrap replicates", kind: "int", initial: "100" },
    { key: "seed", label: "seed", kind: "int", placeholder: "optional" },
  ],
  markov_global: [
    {
      key: "method",
      label: "method",
      kind: "select",
      options: ["cox", "logrank"],
      initial: "cox",
    },
    { key: "transition", label: "transition (from,to)", kind: "pair", required: true },
    {
      key: "clock",
      label: "clock (cox)",
      kind: "select",
      options: ["markov", "semi_markov"],
      initial: "markov",
    },
    {
      key: "percentiles",
      label: "landmark percentiles (logrank)",
      kind: "floats",
      placeholder: "defaults to 5..90",
    },
    { key: "s_grid", label: "explicit s grid (logrank)", kind: "floats" },
    { key: "n_boot", label: "bootstrap replicates", kind: "int", initial: "100" },
    { key: "n_perm", label: "permutations", kind: "int", initial: "500" },
    { key: "alpha", label: "alpha", kind: "number", initial: "0.05" },
    { key: "seed", label: "seed", kind: "int", placeholder: "optional" },
  ],
};

export class FormError extends Error {
  constructor(
    readonly key: string,
    message: string,
  ) {
    super(message);
    this.name = "FormError";
  }
}

function parseNumber(key: string, raw: string): number {
  const v = Number(raw);
  if (!Number.isFinite(v)) throw new FormError(key, `${key}: not a number`);
  return v;
}

function parseInteger(key: string, raw: string): number {
  if (!/^-?\d+$/.test(raw.trim())) throw new FormError(key, `${key}: not an integer`);
  return parseInt(raw, 10);
}

function splitList(raw: string): string[] {
  return raw
    .split(/[,\s]+/)
    .map((s) => s.trim())
    .filter((s) => s.length > 0);
}

/* Turn raw control values into a request params object. Empty controls are
   omitted so the server applies its own defaults. */
export function collectParams(
  spec: FieldSpec[],
  values: Record<string, string>,
): Record<string, unknown> {
  const params: Record<string, unknown> = {};
  for (const field of spec) {
    const raw = (values[field.key] ?? "").trim();
    if (raw === "") {
      if (field.required) throw new FormError(field.key, `${field.key} is required`);
      continue;
    }
    switch (field.kind) {
      case "text":
      case "select":
        params[field.key] = raw;
        break;
      case "number":
        params[field.key] = parseNumber(field.key, raw);
        break;
      case "int":
        params[field.key] = parseInteger(field.key, raw);
        break;
      case "floats":
        params[field.key] = splitList(raw).map((s) => parseNumber(field.key, s));
        break;
      case "ints":
        params[field.key] = splitList(raw).map((s) => parseInteger(field.key, s));
        break;
      case "names":
        params[field.key] = splitList(raw);
        break;
      case "pair": {
        const parts = splitList(raw).map((s) => parseInteger(field.key, s));
        if (parts.length !== 2)
          throw new FormError(field.key, `${field.key}: expected two states "from,to"`);
        params[field.key] = parts;
        break;
      }
      case "json": {
        let parsed: unknown;
        try {
          parsed = JSON.parse(raw);
        } catch {
          throw new FormError(field.key, `${field.key}: invalid JSON`);
        }
        if (parsed === null || typeof parsed !== "object" || Array.isArray(parsed))
          throw new FormError(field.key, `${field.key}: expected a JSON object`);
        params[field.key] = parsed;
        break;
      }
    }
  }
  return params;
}

export function deepEqual(a: unknown, b: unknown): boolean {
  if (a === b) return true;
  if (Array.isArray(a) && Array.isArray(b)) {
    if (a.length !== b.length) return false;
    return a.every((v, i) => deepEqual(v, b[i]));
  }
  if (
    a !== null &&
    b !== null &&
    typeof a === "object" &&
    typeof b === "object" &&
    !Array.isArray(a) &&
    !Array.isArray(b)
  ) {
    const ka = Object.keys(a as object).sort();
    const kb = Object.keys(b as object).sort();
    if (!deepEqual(ka, kb)) return false;
    return ka.every((k) =>
      deepEqual((a as Record<string, unknown>)[k], (b as Record<string, unknown>)[k]),
    );
  }
  return false;
}

/* Keys whose sent value does not round-trip through the server echo.
   Keys the form left unset are not compared: the echo then shows the
   server-side default, which is informative rather than a mismatch. */
export function paramsMismatch(
  sent: Record<string, unknown>,
  echoed: Record<string, unknown>,
): string[] {
  const out: string[] = [];
  for (const key of Object.keys(sent)) {
    if (!deepEqual(sent[key], echoed[key])) out.push(key);
  }
  return out.sort();
}
