/* Result renderers: service JSON in, DOM out. Every figure shown on screen
   is read from the response; nothing is recomputed here beyond formatting. */

import { buildStepPlot } from "./plot.js";
import type { Series } from "./plot.js";
import type { CurvePoint } from "./steps.js";
import type { Envelope } from "./api.js";

type Obj = Record<string, unknown>;

export function el(
  doc: Document,
  tag: string,
  attrs: Record<string, string> = {},
  children: Array<Node | string> = [],
): HTMLElement {
  const node = doc.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  for (const child of children) {
    node.appendChild(typeof child === "string" ? doc.createTextNode(child) : child);
  }
  return node;
}

export function fmtNum(v: number): string {
  if (Number.isInteger(v) && Math.abs(v) < 1e15) return String(v);
  const a = Math.abs(v);
  if (a !== 0 && (a < 1e-4 || a >= 1e6)) return v.toExponential(3);
  return String(Number(v.toPrecision(6)));
}

export function fmtCell(v: unknown): string {
  if (v === null || v === undefined) return "";
  if (typeof v === "number") return fmtNum(v);
  if (typeof v === "boolean") return v ? "yes" : "no";
  if (typeof v === "string") return v;
  return JSON.stringify(v);
}

export function table(doc: Document, headers: string[], rows: string[][]): HTMLElement {
  const thead = el(doc, "thead", {}, [
    el(doc, "tr", {}, headers.map((h) => el(doc, "th", {}, [h]))),
  ]);
  const tbody = el(
    doc,
    "tbody",
    {},
    rows.map((r) => el(doc, "tr", {}, r.map((c) => el(doc, "td", {}, [c])))),
  );
  return el(doc, "table", { class: "data" }, [thead, tbody]);
}

/* Table from uniform objects; column order comes from the first row unless
   given explicitly. */
export function objectTable(doc: Document, rows: Obj[], columns?: string[]): HTMLElement {
  if (rows.length === 0) return el(doc, "p", { class: "empty" }, ["no rows"]);
  const cols = columns ?? Object.keys(rows[0]);
  return table(
    doc,
    cols,
    rows.map((r) => cols.map((c) => fmtCell(r[c]))),
  );
}

function metaLine(doc: Document, pairs: Array<[string, unknown]>): HTMLElement {
  const text = pairs
    .filter(([, v]) => v !== undefined && v !== null && v !== "")
    .map(([k, v]) => `${k}: ${fmtCell(v)}`)
    .join("  ·  ");
  return el(doc, "p", { class: "meta" }, [text]);
}

function toCurvePoints(points: Obj[], tKey: string, eKey: string): CurvePoint[] {
  return points.map((p) => ({
    t: p[tKey] as number,
    est: p[eKey] as number,
    lower: (p.lower ?? null) as number | null,
    upper: (p.upper ?? null) as number | null,
  }));
}

export function renderKm(doc: Document, result: Obj, showCI: boolean): HTMLElement {
  const curves = result.curves as Obj[];
  const series: Series[] = curves.map((c) => ({
    label: c.group === null ? "all" : String(c.group),
    points: toCurvePoints(c.points as Obj[], "time", "surv"),
  }));
  const box = el(doc, "div", { class: "result-km" });
  box.appendChild(buildStepPlot(doc, series, { showCI, xLabel: "time" }));
  box.appendChild(
    objectTable(
      doc,
      curves.map((c) => ({
        group: c.group === null ? "all" : c.group,
        n: c.n,
        events: c.n_events,
        conf_level: c.conf_level,
        conf_type: c.conf_type,
        all_censored: c.all_censored,
      })),
    ),
  );
  return box;
}

export function renderRanktest(doc: Document, result: Obj): HTMLElement {
  const box = el(doc, "div", { class: "result-ranktest" });
  box.appendChild(
    objectTable(doc, result.groups as Obj[], ["group", "n", "observed", "expected"]),
  );
  box.appendChild(
    metaLine(doc, [
      ["chi-squared", result.chi_squared],
      ["df", result.df],
      ["p", result.p_value],
      ["rho", result.rho],
    ]),
  );
  return box;
}

function coxFitBlock(doc: Document, fit: Obj): HTMLElement {
  const box = el(doc, "div", { class: "cox-fit" });
  box.appendChild(
    objectTable(doc, fit.terms as Obj[], ["term", "coef", "exp_coef", "se", "z", "p"]),
  );
  if (Array.isArray(fit.tests)) {
    box.appendChild(objectTable(doc, fit.tests as Obj[], ["test", "statistic", "df", "p"]));
  }
  box.appendChild(
    metaLine(doc, [
      ["n", fit.n],
      ["events", fit.n_events],
      ["dropped (missing)", fit.n_dropped_missing],
      ["ties", fit.ties],
      ["iterations", fit.iterations],
      ["converged", fit.converged],
      ["log-likelihood", fit.loglik],
    ]),
  );
  return box;
}

export function renderCox(doc: Document, result: Obj): HTMLElement {
  const box = el(doc, "div", { class: "result-cox" });
  box.appendChild(coxFitBlock(doc, result));
  return box;
}

export function renderPhtest(doc: Document, result: Obj): HTMLElement {
  const box = el(doc, "div", { class: "result-phtest" });
  const ph = result.ph_test as Obj;
  const rows = ph.rows as Obj[];
  box.appendChild(objectTable(doc, rows, ["term", "chisq", "df", "p"]));
  const globalRow = rows.find((r) => r.term === "GLOBAL");
  if (globalRow && typeof globalRow.p === "number" && globalRow.p < 0.05) {
    box.appendChild(
      el(doc, "div", { class: "banner", "data-role": "aft-banner" }, [
        `Proportional hazards look doubtful (GLOBAL p = ${fmtNum(globalRow.p)}). ` +
          "An accelerated failure time model may fit better; see the AFT panel.",
      ]),
    );
  }
  const nl = result.nonlinearity as Obj | undefined;
  if (nl) {
    box.appendChild(el(doc, "h4", {}, [`nonlinearity: ${fmtCell(nl.covariate)}`]));
    box.appendChild(
      metaLine(doc, [
        ["knots", nl.knots],
        ["chisq", nl.chisq],
        ["df", nl.df],
        ["p", nl.p],
      ]),
    );
  }
  return box;
}

export function renderAnova(doc: Document, result: Obj): HTMLElement {
  const box = el(doc, "div", { class: "result-anova" });
  box.appendChild(objectTable(doc, result.rows as Obj[], ["term", "loglik", "chisq", "df", "p"]));
  box.appendChild(metaLine(doc, [["ties", result.ties]]));
  return box;
}

export function renderAft(doc: Document, result: Obj): HTMLElement {
  const box = el(doc, "div", { class: "result-aft" });
  const fits = result.fits as Obj[];
  const best = fits.reduce(
    (m, f) => Math.min(m, (f.aic as number) ?? Infinity),
    Infinity,
  );
  const strip = el(doc, "div", { class: "aic-strip", "data-role": "aic-strip" });
  for (const f of fits) {
    const chip = el(
      doc,
      "span",
      { class: f.aic === best ? "aic-chip best" : "aic-chip" },
      [`${f.distribution}: AIC ${fmtCell(f.aic)}`],
    );
    strip.appendChild(chip);
  }
  box.appendChild(strip);
  for (const f of fits) {
    box.appendChild(el(doc, "h4", {}, [String(f.distribution)]));
    box.appendChild(objectTable(doc, f.terms as Obj[]));
    box.appendChild(
      metaLine(doc, [
        ["scale", f.scale],
        ["log-likelihood", f.loglik],
        ["AIC", f.aic],
        ["n", f.n],
        ["events", f.n_events],
        ["converged", f.converged],
      ]),
    );
  }
  return box;
}

export function renderCounts(doc: Document, result: Obj): HTMLElement {
  const labels = result.labels as string[];
  const counts = result.counts as number[][];
  const props = result.proportions as number[][];
  const box = el(doc, "div", { class: "result-counts" });
  const header = ["from \\ to", ...labels, "no event", "entering"];
  const rows = labels.map((lab, i) => [
    lab,
    ...counts[i].map((v) => fmtCell(v)),
    fmtCell((result.no_event as number[])[i]),
    fmtCell((result.entering as number[])[i]),
  ]);
  box.appendChild(table(doc, header, rows));
  box.appendChild(el(doc, "h4", {}, ["row proportions"]));
  box.appendChild(
    table(
      doc,
      ["from \\ to", ...labels, "no event"],
      props.map((row, i) => [labels[i], ...row.map((v) => fmtCell(v))]),
    ),
  );
  return box;
}

export function renderMsmreg(doc: Document, result: Obj): HTMLElement {
  const box = el(doc, "div", { class: "result-msmreg" });
  for (const tr of result.transitions as Obj[]) {
    box.appendChild(
      el(doc, "h4", {}, [`transition ${tr.transition}: ${tr.from} → ${tr.to} (${tr.clock})`]),
    );
    if (tr.error) {
      box.appendChild(el(doc, "p", { class: "error" }, [fmtCell(tr.error)]));
    } else if (tr.fit) {
      box.appendChild(coxFitBlock(doc, tr.fit as Obj));
    }
  }
  return box;
}

export function renderTransprob(doc: Document, result: Obj, showCI: boolean): HTMLElement {
  const box = el(doc, "div", { class: "result-transprob" });
  const panels = el(doc, "div", { class: "tp-panels" });
  for (const curve of result.curves as Obj[]) {
    const panel = el(doc, "div", { class: "tp-panel" });
    panel.appendChild(el(doc, "h4", {}, [`P(${curve.from} → ${curve.to})`]));
    if (curve.missing) {
      panel.appendChild(el(doc, "p", { class: "empty" }, ["no estimate at this landmark"]));
    } else {
      const pts = toCurvePoints(curve.grid as Obj[], "t", "est");
      panel.appendChild(
        buildStepPlot(doc, [{ label: `${curve.from}→${curve.to}`, points: pts }], {
          showCI,
          width: 320,
          height: 220,
          xLabel: "time",
        }),
      );
    }
    panel.appendChild(
      metaLine(doc, [
        ["method", curve.method],
        ["s", curve.s],
        ["bootstrap", curve.n_boot],
        ["conditioning", curve.conditioning ? JSON.stringify(curve.conditioning) : null],
        ["flags", Array.isArray(curve.flags) && curve.flags.length ? curve.flags : null],
      ]),
    );
    panels.appendChild(panel);
  }
  box.appendChild(panels);
  const failed = result.n_failed_replicates as number;
  if (failed > 0) {
    box.appendChild(el(doc, "p", { class: "meta" }, [`failed bootstrap replicates: ${failed}`]));
  }
  return box;
}

export function renderCif(doc: Document, result: Obj, showCI: boolean): HTMLElement {
  const box = el(doc, "div", { class: "result-cif" });
  const curve = result.curve as Obj;
  const pts = toCurvePoints(curve.grid as Obj[], "t", "est");
  box.appendChild(
    buildStepPlot(doc, [{ label: "CIF", points: pts }], { showCI, xLabel: "time" }),
  );
  box.appendChild(
    metaLine(doc, [
      ["bootstrap", curve.n_boot],
      ["conditioning", curve.conditioning ? JSON.stringify(curve.conditioning) : null],
      ["failed replicates", result.n_failed_replicates],
    ]),
  );
  return box;
}

/* One table row per landmark, plus a tally of how many of the displayed
   p-values fall under 0.05. */
export function renderMarkovLocalRuns(doc: Document, runs: Envelope[]): HTMLElement {
  const box = el(doc, "div", { class: "result-markov-local" });
  const rows = runs.map((env) => {
    const r = env.result as Obj;
    const row: Obj = {
      s: r.s,
      statistic: r.statistic,
      p: r.p_value,
      n_used: r.n_used,
    };
    if (r.sd !== undefined) row.sd = r.sd;
    if (r.split_value !== undefined) row.split = r.split_value;
    return row;
  });
  box.appendChild(objectTable(doc, rows));
  const k = rows.filter((r) => typeof r.p === "number" && (r.p as number) < 0.05).length;
  const n = rows.length;
  box.appendChild(
    el(doc, "p", { class: "meta", "data-role": "rejections" }, [
      `p < 0.05 at ${k} of ${n} landmarks (proportion ${(k / Math.max(n, 1)).toFixed(2)})`,
    ]),
  );
  return box;
}

export function renderMarkovGlobal(doc: Document, result: Obj): HTMLElement {
  const box = el(doc, "div", { class: "result-markov-global" });
  const tr = result.transition as Obj;
  box.appendChild(el(doc, "h4", {}, [`transition ${tr.from} → ${tr.to} (${result.method})`]));
  if (result.method === "cox") {
    box.appendChild(
      objectTable(doc, [
        {
          coef: result.coef,
          se: result.se,
          statistic: result.statistic,
          p: result.p_value,
          n: result.n,
          events: result.n_events,
        },
      ]),
    );
    box.appendChild(
      metaLine(doc, [
        ["clock", result.clock],
        ["alpha", result.alpha],
        ["reject", result.reject],
      ]),
    );
  } else {
    const sValues = (result.s_values as number[]) ?? [];
    const stats = (result.statistics as number[]) ?? [];
    box.appendChild(
      objectTable(
        doc,
        sValues.map((s, i) => ({ s, statistic: stats[i] })),
      ),
    );
    box.appendChild(
      metaLine(doc, [
        ["max statistic", result.statistic],
        ["p", result.p_value],
        ["permutations", result.n_perm],
        ["dropped landmarks", result.n_dropped_landmarks],
        ["alpha", result.alpha],
        ["seed", result.seed],
      ]),
    );
  }
  if (Array.isArray(result.flags) && result.flags.length) {
    box.appendChild(metaLine(doc, [["flags", result.flags]]));
  }
  return box;
}
