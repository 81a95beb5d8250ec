/* Page construction and event wiring. The same handlers back both the DOM
   events and the programmatic `actions` handle the tests drive, so the test
   path exercises exactly what a click does. */

import { ApiError, ServiceClient } from "./api.js";
import type { Envelope, Kind } from "./api.js";
import { ANALYSIS_FORMS, FormError, collectParams, paramsMismatch } from "./forms.js";
import type { FieldSpec } from "./forms.js";
import {
  el,
  fmtCell,
  renderAft,
  renderAnova,
  renderCif,
  renderCounts,
  renderCox,
  renderKm,
  renderMarkovGlobal,
  renderMarkovLocalRuns,
  renderMsmreg,
  renderPhtest,
  renderRanktest,
  renderTransprob,
} from "./render.js";
import { PAGES, Store, pageEnabled } from "./state.js";
import type { Page } from "./state.js";

interface RenderCtx {
  showCI: boolean;
}

interface SectionSpec {
  analysis: string;
  title: string;
  render: (doc: Document, runs: Envelope[], ctx: RenderCtx) => HTMLElement;
  ciToggle?: boolean;
  methodOptions?: string[];
}

export interface AppHandle {
  root: HTMLElement;
  store: Store;
  actions: {
    upload(file: Blob, filename: string, kind: Kind): Promise<void>;
    bind(): Promise<boolean>;
    showPage(page: Page): void;
    setField(page: Page, analysis: string, key: string, value: string): void;
    runAnalysis(page: Page, analysis: string): Promise<void>;
    setCiToggle(page: Page, analysis: string, on: boolean): void;
  };
}

function withOptions(doc: Document, select: HTMLSelectElement, values: string[], blank: string) {
  select.innerHTML = "";
  for (const v of ["", ...values]) {
    const opt = doc.createElement("option");
    opt.value = v;
    opt.textContent = v === "" ? blank : v;
    select.appendChild(opt);
  }
}

function clearFieldErrors(scope: HTMLElement) {
  for (const n of Array.from(scope.querySelectorAll(".field-error"))) n.remove();
}

function placeFieldError(scope: HTMLElement, key: string, message: string): boolean {
  const control = scope.querySelector(`[data-param="${key}"], [data-map="${key}"]`);
  if (!control || !control.parentElement) return false;
  const doc = scope.ownerDocument;
  const span = el(doc, "span", { class: "field-error", "data-field": key }, [message]);
  control.parentElement.appendChild(span);
  return true;
}

/* Put a service error next to the control it names when the detail allows
   it; otherwise in the section-level error box. Never navigates. */
function showApiError(scope: HTMLElement, errorBox: HTMLElement, err: unknown) {
  if (err instanceof FormError) {
    if (!placeFieldError(scope, err.key, err.message)) errorBox.textContent = err.message;
    return;
  }
  if (err instanceof ApiError) {
    const detail = err.body.detail;
    let placed = false;
    if (detail !== null && typeof detail === "object") {
      const d = detail as Record<string, unknown>;
      if (Array.isArray(d.unknown)) {
        for (const key of d.unknown as string[]) {
          placed = placeFieldError(scope, key, `unknown parameter ${key}`) || placed;
        }
      }
      if (typeof d.column === "string") {
        const controls = Array.from(scope.querySelectorAll("select[data-map], input[data-map]"));
        for (const c of controls) {
          if ((c as HTMLInputElement | HTMLSelectElement).value === d.column) {
            const span = el(scope.ownerDocument, "span", {
              class: "field-error",
              "data-field": String(c.getAttribute("data-map")),
            });
            span.textContent = err.body.message;
            c.parentElement?.appendChild(span);
            placed = true;
            break;
          }
        }
      }
    }
    errorBox.textContent = placed
      ? `${err.body.error}`
      : `${err.body.error}: ${err.body.message}`;
    return;
  }
  errorBox.textContent = String(err instanceof Error ? err.message : err);
}

export function buildApp(
  doc: Document,
  root: HTMLElement,
  client: ServiceClient,
  store: Store,
): AppHandle {
  root.innerHTML = "";
  const nav = el(doc, "nav", { class: "pages" });
  const navButtons = new Map<Page, HTMLButtonElement>();
  const panels = new Map<Page, HTMLElement>();
  const runners = new Map<string, () => Promise<void>>();
  const ciToggles = new Map<string, (on: boolean) => void>();

  const refreshNav = () => {
    for (const page of PAGES) {
      const enabled = pageEnabled(page, store.state.boundKind);
      const btn = navButtons.get(page)!;
      btn.disabled = !enabled;
      btn.classList.toggle("active", store.state.page === page);
      panels.get(page)!.hidden = store.state.page !== page;
    }
  };

  const showPage = (page: Page) => {
    if (!pageEnabled(page, store.state.boundKind)) return;
    store.state.page = page;
    refreshNav();
  };

  for (const page of PAGES) {
    const btn = el(doc, "button", { type: "button", "data-page": page }, [
      page,
    ]) as HTMLButtonElement;
    btn.addEventListener("click", () => showPage(page));
    navButtons.set(page, btn);
    nav.appendChild(btn);
    const panel = el(doc, "div", { class: "page", "data-page-panel": page });
    panels.set(page, panel);
  }
  root.appendChild(nav);

  /* ---------- input page ---------- */

  const inputPanel = panels.get("input")!;
  const uploadForm = el(doc, "form", { "data-role": "upload-form" });
  const fileInput = el(doc, "input", {
    type: "file",
    accept: ".csv,text/csv",
    "data-role": "file-input",
  }) as HTMLInputElement;
  const kindWrap = el(doc, "span", { class: "kind-radios" });
  for (const kind of ["survival", "idm", "msm"] as Kind[]) {
    const radio = el(doc, "input", {
      type: "radio",
      name: "kind",
      value: kind,
      id: `kind-${kind}`,
    }) as HTMLInputElement;
    if (kind === "survival") radio.checked = true;
    radio.addEventListener("change", () => renderMappingForm());
    kindWrap.appendChild(el(doc, "label", { for: `kind-${kind}` }, [radio, kind]));
  }
  const uploadBtn = el(doc, "button", { type: "submit" }, ["upload"]);
  uploadForm.append(fileInput, kindWrap, uploadBtn);
  const uploadError = el(doc, "div", { class: "error", "data-role": "upload-error" });
  const sessionInfo = el(doc, "div", { "data-role": "session-info" });
  const previewArea = el(doc, "div", { "data-role": "preview" });
  const mappingArea = el(doc, "div", { "data-role": "mapping-area" });
  const bindReport = el(doc, "pre", { "data-role": "bind-report" });
  inputPanel.append(
    el(doc, "h2", {}, ["data input"]),
    uploadForm,
    uploadError,
    sessionInfo,
    previewArea,
    mappingArea,
    bindReport,
  );

  const selectedKind = (): Kind => {
    const checked = uploadForm.querySelector("input[name=kind]:checked") as HTMLInputElement;
    return (checked?.value ?? "survival") as Kind;
  };

  let previewSort: { column: string; dir: 1 | -1 } | null = null;

  const renderPreview = () => {
    const session = store.state.session;
    previewArea.innerHTML = "";
    if (!session) return;
    const filter = el(doc, "input", {
      type: "text",
      placeholder: "filter preview rows",
      "data-role": "preview-filter",
    }) as HTMLInputElement;
    filter.addEventListener("input", () => renderRows());
    previewArea.appendChild(filter);
    const tableEl = el(doc, "table", { class: "data", "data-role": "preview-table" });
    previewArea.appendChild(tableEl);

    const cols = session.columns.map((c) => c.name);
    const renderRows = () => {
      const needle = filter.value.toLowerCase();
      let rows = session.preview.filter(
        (r) =>
          needle === "" ||
          cols.some((c) => String(r[c] ?? "").toLowerCase().includes(needle)),
      );
      if (previewSort) {
        const { column, dir } = previewSort;
        rows = [...rows].sort((a, b) => {
          const av = a[column];
          const bv = b[column];
          if (typeof av === "number" && typeof bv === "number") return (av - bv) * dir;
          return String(av ?? "").localeCompare(String(bv ?? "")) * dir;
        });
      }
      tableEl.innerHTML = "";
      const headRow = el(doc, "tr");
      for (const c of cols) {
        const th = el(doc, "th", { "data-sort": c }, [c]);
        th.addEventListener("click", () => {
          previewSort =
            previewSort && previewSort.column === c && previewSort.dir === 1
              ? { column: c, dir: -1 }
              : { column: c, dir: 1 };
          renderRows();
        });
        headRow.appendChild(th);
      }
      tableEl.appendChild(el(doc, "thead", {}, [headRow]));
      tableEl.appendChild(
        el(
          doc,
          "tbody",
          {},
          rows.map((r) =>
            el(doc, "tr", {}, cols.map((c) => el(doc, "td", {}, [fmtCell(r[c])]))),
          ),
        ),
      );
    };
    renderRows();
  };

  const columnSelect = (mapKey: string, preferred: string[]): HTMLSelectElement => {
    const session = store.state.session;
    const sel = el(doc, "select", { "data-map": mapKey }) as HTMLSelectElement;
    withOptions(doc, sel, session ? session.columns.map((c) => c.name) : [], "(choose)");
    for (const name of preferred) {
      if (session && session.columns.some((c) => c.name === name)) {
        sel.value = name;
        break;
      }
    }
    return sel;
  };

  const covariateChecks = (exclude: () => string[]): HTMLElement => {
    const wrap = el(doc, "div", { class: "covariate-checks", "data-map": "covariates" });
    const session = store.state.session;
    if (!session) return wrap;
    for (const c of session.columns) {
      const box = el(doc, "input", {
        type: "checkbox",
        value: c.name,
        "data-cov": c.name,
      }) as HTMLInputElement;
      wrap.appendChild(el(doc, "label", {}, [box, `${c.name} (${c.type})`]));
    }
    void exclude;
    return wrap;
  };

  const labelled = (text: string, control: Node): HTMLElement =>
    el(doc, "label", { class: "field" }, [el(doc, "span", {}, [text]), control]);

  let mappingForm: HTMLFormElement | null = null;

  const renderMappingForm = () => {
    mappingArea.innerHTML = "";
    bindReport.textContent = "";
    if (!store.state.session) return;
    const kind = selectedKind();
    const form = el(doc, "form", { "data-role": "mapping-form" }) as HTMLFormElement;
    mappingForm = form;
    const formError = el(doc, "div", { class: "error", "data-role": "mapping-error" });
    form.appendChild(el(doc, "h3", {}, [`map columns (${kind})`]));
    form.appendChild(formError);

    if (kind === "survival") {
      form.appendChild(labelled("time", columnSelect("time", ["time"])));
      form.appendChild(labelled("status", columnSelect("status", ["status"])));
      form.appendChild(labelled("covariates", covariateChecks(() => ["time", "status"])));
    } else if (kind === "idm") {
      form.appendChild(labelled("illness time", columnSelect("time1", ["time1"])));
      form.appendChild(labelled("illness status", columnSelect("event1", ["event1"])));
      form.appendChild(labelled("survival time", columnSelect("stime", ["Stime", "stime"])));
      form.appendChild(labelled("survival status", columnSelect("event", ["event"])));
      form.appendChild(labelled("covariates", covariateChecks(() => [])));
    } else {
      const nStates = el(doc, "input", {
        type: "text",
        value: "3",
        "data-map": "n_states",
      }) as HTMLInputElement;
      form.appendChild(labelled("number of states", nStates));
      form.appendChild(
        labelled(
          "labels",
          el(doc, "input", {
            type: "text",
            placeholder: "comma separated, optional",
            "data-map": "labels",
          }),
        ),
      );
      form.appendChild(
        labelled(
          "edges",
          el(doc, "input", {
            type: "text",
            placeholder: "e.g. 1-2, 1-3, 2-3",
            "data-map": "edges",
          }),
        ),
      );
      const editor = el(doc, "div", { "data-role": "states-editor" });
      const rebuildStates = () => {
        editor.innerHTML = "";
        const n = parseInt(nStates.value, 10);
        if (!Number.isFinite(n) || n < 2 || n > 12) return;
        for (let s = 2; s <= n; s++) {
          const row = el(doc, "div", { class: "state-row" });
          row.appendChild(el(doc, "span", {}, [`state ${s}`]));
          row.appendChild(labelled("entry time", columnSelect(`state-${s}-time`, [])));
          row.appendChild(labelled("entry status", columnSelect(`state-${s}-status`, [])));
          editor.appendChild(row);
        }
      };
      nStates.addEventListener("input", rebuildStates);
      rebuildStates();
      form.appendChild(editor);
      form.appendChild(
        labelled(
          "tie priority",
          el(doc, "input", {
            type: "text",
            placeholder: "state order on tied times, optional",
            "data-map": "tie_priority",
          }),
        ),
      );
      form.appendChild(labelled("covariates", covariateChecks(() => [])));
    }

    const bindBtn = el(doc, "button", { type: "submit", "data-role": "bind-btn" }, ["bind"]);
    form.appendChild(bindBtn);
    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void doBind();
    });
    mappingArea.appendChild(form);
  };

  const collectMapping = (form: HTMLFormElement, kind: Kind): Record<string, unknown> => {
    const val = (key: string): string =>
      (form.querySelector(`[data-map="${key}"]`) as HTMLInputElement | HTMLSelectElement | null)
        ?.value ?? "";
    const covs = Array.from(form.querySelectorAll("input[data-cov]"))
      .filter((c) => (c as HTMLInputElement).checked)
      .map((c) => (c as HTMLInputElement).value);
    if (kind === "survival") {
      const mapping: Record<string, unknown> = { time: val("time"), status: val("status") };
      if (covs.length) mapping.covariates = covs;
      return mapping;
    }
    if (kind === "idm") {
      const mapping: Record<string, unknown> = {
        time1: val("time1"),
        event1: val("event1"),
        stime: val("stime"),
        event: val("event"),
      };
      if (covs.length) mapping.covariates = covs;
      return mapping;
    }
    const n = parseInt(val("n_states"), 10);
    if (!Number.isFinite(n) || n < 2) throw new FormError("n_states", "need at least 2 states");
    const mapping: Record<string, unknown> = { n_states: n };
    const labels = val("labels")
      .split(",")
      .map((s) => s.trim())
      .filter((s) => s.length > 0);
    if (labels.length) mapping.labels = labels;
    const edgeText = val("edges").trim();
    if (edgeText) {
      const edges: number[][] = [];
      for (const part of edgeText.split(/[,\s]+/).filter((p) => p.length)) {
        const m = /^(\d+)-(\d+)$/.exec(part);
        if (!m) throw new FormError("edges", `bad edge ${part}; use from-to`);
        edges.push([parseInt(m[1], 10), parseInt(m[2], 10)]);
      }
      mapping.edges = edges;
    }
    const states: Array<Record<string, unknown>> = [];
    for (let s = 2; s <= n; s++) {
      const time = val(`state-${s}-time`);
      const status = val(`state-${s}-status`);
      if (time && status) states.push({ state: s, time, status });
    }
    if (states.length) mapping.states = states;
    const tie = val("tie_priority").trim();
    if (tie) {
      mapping.tie_priority = tie
        .split(/[,\s]+/)
        .filter((p) => p.length)
        .map((p) => parseInt(p, 10));
    }
    if (covs.length) mapping.covariates = covs;
    return mapping;
  };

  const doUpload = async (file: Blob, filename: string, kind: Kind): Promise<void> => {
    const radio = uploadForm.querySelector(
      `input[name=kind][value="${kind}"]`,
    ) as HTMLInputElement | null;
    if (radio) radio.checked = true;
    uploadError.textContent = "";
    const token = store.begin("input:upload");
    try {
      const session = await client.createSession(file, filename, kind);
      if (!store.settle("input:upload", token)) return;
      store.state.session = session;
      store.state.boundKind = null;
      store.state.results = {};
      sessionInfo.textContent = `${session.filename}: ${session.n_rows} rows, ${session.columns.length} columns (session ${session.session_id})`;
      previewSort = null;
      renderPreview();
      renderMappingForm();
      refreshNav();
    } catch (e) {
      if (!store.settle("input:upload", token)) return;
      showApiError(inputPanel, uploadError, e);
    }
  };

  uploadForm.addEventListener("submit", (ev) => {
    ev.preventDefault();
    const file = fileInput.files?.[0];
    if (!file) {
      uploadError.textContent = "choose a CSV file first";
      return;
    }
    void doUpload(file, file.name, selectedKind());
  });

  const doBind = async (): Promise<boolean> => {
    const session = store.state.session;
    if (!session || !mappingForm) return false;
    const form = mappingForm;
    const formError = form.querySelector('[data-role="mapping-error"]') as HTMLElement;
    clearFieldErrors(form);
    formError.textContent = "";
    const kind = selectedKind();
    let mapping: Record<string, unknown>;
    try {
      mapping = collectMapping(form, kind);
    } catch (e) {
      showApiError(form, formError, e);
      return false;
    }
    const token = store.begin("input:bind");
    try {
      const resp = await client.bind(session.session_id, mapping, kind);
      if (!store.settle("input:bind", token)) return false;
      store.state.boundKind = kind;
      bindReport.textContent = JSON.stringify(resp.validation_report, null, 2);
      refreshNav();
      return true;
    } catch (e) {
      if (!store.settle("input:bind", token)) return false;
      showApiError(form, formError, e);
      return false;
    }
  };

  /* ---------- analysis sections ---------- */

  const sectionKey = (page: Page, analysis: string) => `${page}:${analysis}`;

  const analysisSection = (page: Page, spec: SectionSpec): HTMLElement => {
    const key = sectionKey(page, spec.analysis);
    const section = el(doc, "section", {
      class: "analysis",
      "data-analysis": spec.analysis,
    });
    section.appendChild(el(doc, "h3", {}, [spec.title]));

    const baseSpec = ANALYSIS_FORMS[spec.analysis];
    const effSpec: FieldSpec[] = baseSpec.map((f) =>
      f.key === "method" && spec.methodOptions ? { ...f, options: spec.methodOptions } : f,
    );

    const form = el(doc, "form") as HTMLFormElement;
    const fieldset = el(doc, "fieldset") as HTMLFieldSetElement;
    for (const field of effSpec) {
      let control: HTMLElement;
      if (field.kind === "select") {
        const sel = el(doc, "select", { "data-param": field.key }) as HTMLSelectElement;
        for (const opt of field.options ?? []) {
          const o = doc.createElement("option");
          o.value = opt;
          o.textContent = opt === "" ? "(compare all)" : opt;
          sel.appendChild(o);
        }
        if (field.initial !== undefined) sel.value = field.initial;
        control = sel;
      } else {
        const input = el(doc, "input", {
          type: "text",
          "data-param": field.key,
        }) as HTMLInputElement;
        if (field.initial !== undefined) input.value = field.initial;
        if (field.placeholder) input.placeholder = field.placeholder;
        control = input;
      }
      fieldset.appendChild(
        el(doc, "label", { class: "field" }, [el(doc, "span", {}, [field.label]), control]),
      );
    }

    let showCI = true;
    if (spec.ciToggle) {
      const toggle = el(doc, "input", {
        type: "checkbox",
        "data-role": "ci-toggle",
      }) as HTMLInputElement;
      toggle.checked = true;
      toggle.addEventListener("change", () => {
        showCI = toggle.checked;
        paint();
      });
      fieldset.appendChild(
        el(doc, "label", { class: "field toggle" }, [
          el(doc, "span", {}, ["show confidence band"]),
          toggle,
        ]),
      );
      ciToggles.set(key, (on: boolean) => {
        toggle.checked = on;
        showCI = on;
        paint();
      });
    }

    fieldset.appendChild(el(doc, "button", { type: "submit" }, ["run"]));
    form.appendChild(fieldset);
    const errorBox = el(doc, "div", { class: "error", "data-role": "error" });
    const resultBox = el(doc, "div", { "data-role": "result" });
    const echoed = el(doc, "pre", { "data-role": "echoed-params" });
    const mismatch = el(doc, "div", { "data-role": "mismatch" });
    const echoDetails = el(doc, "details", { open: "" }, [
      el(doc, "summary", {}, ["request echo"]),
      echoed,
      mismatch,
    ]);
    section.append(form, errorBox, resultBox, echoDetails);

    let lastRuns: Envelope[] = [];
    let lastSent: Record<string, unknown> = {};

    const paint = () => {
      if (lastRuns.length === 0) return;
      const env = lastRuns[lastRuns.length - 1];
      store.state.results[key] = env;
      resultBox.innerHTML = "";
      resultBox.appendChild(spec.render(doc, lastRuns, { showCI }));
      echoed.textContent = JSON.stringify(env.params, null, 2);
      const bad = paramsMismatch(lastSent, env.params);
      mismatch.textContent = bad.length
        ? `round-trip mismatch: ${bad.join(", ")}`
        : "params round-trip ok";
      mismatch.className = bad.length ? "mismatch bad" : "mismatch ok";
    };

    const readValues = (): Record<string, string> => {
      const out: Record<string, string> = {};
      for (const field of effSpec) {
        const control = fieldset.querySelector(
          `[data-param="${field.key}"]`,
        ) as HTMLInputElement | HTMLSelectElement;
        out[field.key] = control.value;
      }
      return out;
    };

    const run = async (): Promise<void> => {
      const session = store.state.session;
      errorBox.textContent = "";
      clearFieldErrors(section);
      if (!session || store.state.boundKind === null) {
        errorBox.textContent = "bind a dataset first";
        return;
      }
      if (store.isPending(key)) return;
      let params: Record<string, unknown>;
      try {
        params = collectParams(effSpec, readValues());
      } catch (e) {
        showApiError(section, errorBox, e);
        return;
      }
      const expandField = effSpec.find((f) => f.expand && params[f.key] !== undefined);
      let requests: Array<Record<string, unknown>>;
      if (expandField && Array.isArray(params[expandField.key])) {
        const values = params[expandField.key] as unknown[];
        requests = values.map((v) => ({ ...params, [expandField.key]: v }));
      } else {
        requests = [params];
      }
      const token = store.begin(key);
      fieldset.disabled = true;
      try {
        const runs: Envelope[] = [];
        for (const req of requests) {
          runs.push(await client.run(session.session_id, spec.analysis, req));
        }
        if (!store.settle(key, token)) return;
        fieldset.disabled = false;
        lastRuns = runs;
        lastSent = requests[requests.length - 1];
        paint();
      } catch (e) {
        if (!store.settle(key, token)) return;
        fieldset.disabled = false;
        showApiError(section, errorBox, e);
      }
    };

    form.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void run();
    });
    runners.set(key, run);
    return section;
  };

  const last = (runs: Envelope[]) => runs[runs.length - 1];

  const kmSpec: SectionSpec = {
    analysis: "km",
    title: "Kaplan-Meier survival",
    ciToggle: true,
    render: (d, runs, ctx) => renderKm(d, last(runs).result, ctx.showCI),
  };
  const countsSpec: SectionSpec = {
    analysis: "counts",
    title: "transition counts",
    render: (d, runs) => renderCounts(d, last(runs).result),
  };
  const msmregSpec: SectionSpec = {
    analysis: "msmreg",
    title: "per-transition regression",
    render: (d, runs) => renderMsmreg(d, last(runs).result),
  };
  const transprobSpec = (methods?: string[]): SectionSpec => ({
    analysis: "transprob",
    title: "transition probabilities",
    ciToggle: true,
    methodOptions: methods,
    render: (d, runs, ctx) => renderTransprob(d, last(runs).result, ctx.showCI),
  });

  const survivalPanel = panels.get("survival")!;
  survivalPanel.append(
    el(doc, "h2", {}, ["survival analysis"]),
    analysisSection("survival", kmSpec),
    analysisSection("survival", {
      analysis: "ranktest",
      title: "G-rho rank test",
      render: (d, runs) => renderRanktest(d, last(runs).result),
    }),
    analysisSection("survival", {
      analysis: "cox",
      title: "Cox proportional hazards",
      render: (d, runs) => renderCox(d, last(runs).result),
    }),
    analysisSection("survival", {
      analysis: "phtest",
      title: "proportional hazards check",
      render: (d, runs) => renderPhtest(d, last(runs).result),
    }),
    analysisSection("survival", {
      analysis: "anova",
      title: "sequential likelihood ratio",
      render: (d, runs) => renderAnova(d, last(runs).result),
    }),
    analysisSection("survival", {
      analysis: "aft",
      title: "accelerated failure time",
      render: (d, runs) => renderAft(d, last(runs).result),
    }),
  );

  const idmPanel = panels.get("idm")!;
  idmPanel.append(
    el(doc, "h2", {}, ["illness-death model"]),
    analysisSection("idm", countsSpec),
    analysisSection("idm", msmregSpec),
    analysisSection("idm", transprobSpec()),
    analysisSection("idm", {
      analysis: "cif",
      title: "cumulative incidence",
      ciToggle: true,
      render: (d, runs, ctx) => renderCif(d, last(runs).result, ctx.showCI),
    }),
  );

  const msmPanel = panels.get("msm")!;
  msmPanel.append(
    el(doc, "h2", {}, ["general multi-state model"]),
    analysisSection("msm", countsSpec),
    analysisSection("msm", msmregSpec),
    analysisSection("msm", transprobSpec(["aj", "lmaj", "breslow"])),
  );

  const markovPanel = panels.get("markov")!;
  markovPanel.append(
    el(doc, "h2", {}, ["Markov assumption checks"]),
    analysisSection("markov", {
      analysis: "markov_local",
      title: "local test at landmarks",
      render: (d, runs) => renderMarkovLocalRuns(d, runs),
    }),
    analysisSection("markov", {
      analysis: "markov_global",
      title: "global test",
      render: (d, runs) => renderMarkovGlobal(d, last(runs).result),
    }),
  );

  for (const page of PAGES) root.appendChild(panels.get(page)!);
  refreshNav();

  return {
    root,
    store,
    actions: {
      upload: doUpload,
      bind: doBind,
      showPage,
      setField: (page, analysis, key, value) => {
        const control = panels
          .get(page)!
          .querySelector(
            `section[data-analysis="${analysis}"] [data-param="${key}"]`,
          ) as HTMLInputElement | HTMLSelectElement | null;
        if (!control) throw new Error(`no control ${page}/${analysis}/${key}`);
        control.value = value;
      },
      runAnalysis: (page, analysis) => {
        const run = runners.get(sectionKey(page, analysis));
        if (!run) throw new Error(`no section ${page}/${analysis}`);
        return run();
      },
      setCiToggle: (page, analysis, on) => {
        const toggle = ciToggles.get(sectionKey(page, analysis));
        if (!toggle) throw new Error(`no CI toggle for ${page}/${analysis}`);
        toggle(on);
      },
    },
  };
}
