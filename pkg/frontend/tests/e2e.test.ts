/* End-to-end: the real service on one side, the rendered DOM on the other.
   Everything flows through the same handlers the browser events use. */

import { readFileSync } from "node:fs";
import { beforeAll, describe, expect, it } from "vitest";
import { ServiceClient } from "../src/api.js";
import { buildApp } from "../src/pages.js";
import type { AppHandle } from "../src/pages.js";
import { Store } from "../src/state.js";
import { SERVICE_BASE, fixturePath } from "./config.js";
import { newDom } from "./dom.js";

const STEP_ONLY = /^M -?[\d.]+ -?[\d.]+( (H|V) -?[\d.]+)*( Z)?$/;

function makeApp(): { app: AppHandle; doc: Document; root: HTMLElement } {
  const { doc, root } = newDom();
  const client = new ServiceClient(SERVICE_BASE, (url, init) => fetch(url, init));
  const app = buildApp(doc, root, client, new Store());
  return { app, doc, root };
}

function fixtureFile(name: string): File {
  return new File([readFileSync(fixturePath(name))], name, { type: "text/csv" });
}

function section(root: HTMLElement, page: string, analysis: string): HTMLElement {
  const node = root.querySelector(
    `[data-page-panel="${page}"] section[data-analysis="${analysis}"]`,
  );
  expect(node, `section ${page}/${analysis}`).toBeTruthy();
  return node as HTMLElement;
}

function mismatchText(root: HTMLElement, page: string, analysis: string): string {
  return section(root, page, analysis).querySelector('[data-role="mismatch"]')!.textContent ?? "";
}

function echoedParams(root: HTMLElement, page: string, analysis: string): Record<string, unknown> {
  const pre = section(root, page, analysis).querySelector('[data-role="echoed-params"]');
  return JSON.parse(pre!.textContent ?? "{}");
}

function setCovariates(root: HTMLElement, names: string[]) {
  for (const box of Array.from(root.querySelectorAll("input[data-cov]"))) {
    (box as HTMLInputElement).checked = names.includes((box as HTMLInputElement).value);
  }
}

describe("survival workflow on veteran data", () => {
  let app: AppHandle;
  let root: HTMLElement;

  beforeAll(async () => {
    const built = makeApp();
    app = built.app;
    root = built.root;
    await app.actions.upload(fixtureFile("veteran.csv"), "veteran.csv", "survival");
  });

  it("uploads and previews the dataset", () => {
    expect(app.store.state.session?.n_rows).toBe(137);
    const rows = root.querySelectorAll('[data-role="preview-table"] tbody tr');
    expect(rows.length).toBe(20);
  });

  it("filters and sorts the preview client-side", () => {
    const filter = root.querySelector('[data-role="preview-filter"]') as HTMLInputElement;
    filter.value = "squamous";
    filter.dispatchEvent(new (root.ownerDocument.defaultView as any).Event("input"));
    const filtered = root.querySelectorAll('[data-role="preview-table"] tbody tr');
    expect(filtered.length).toBeGreaterThan(0);
    expect(filtered.length).toBeLessThan(20);
    filter.value = "";
    filter.dispatchEvent(new (root.ownerDocument.defaultView as any).Event("input"));

    const timeCell = () => {
      const heads = Array.from(
        root.querySelectorAll('[data-role="preview-table"] thead th'),
      ).map((h) => h.textContent);
      const row = root.querySelector('[data-role="preview-table"] tbody tr')!;
      return Number(row.querySelectorAll("td")[heads.indexOf("time")].textContent);
    };
    const th = root.querySelector('[data-role="preview-table"] th[data-sort="time"]');
    (th as HTMLElement).click();
    const firstAsc = timeCell();
    (root.querySelector('[data-role="preview-table"] th[data-sort="time"]') as HTMLElement).click();
    const firstDesc = timeCell();
    expect(firstAsc).toBeLessThan(firstDesc);
  });

  it("keeps analysis pages disabled until a compatible bind", async () => {
    const nav = (page: string) =>
      root.querySelector(`nav button[data-page="${page}"]`) as HTMLButtonElement;
    expect(nav("survival").disabled).toBe(true);
    expect(nav("markov").disabled).toBe(true);

    setCovariates(root, ["celltype", "karno", "age"]);
    expect(await app.actions.bind()).toBe(true);
    expect(app.store.state.boundKind).toBe("survival");
    expect(nav("survival").disabled).toBe(false);
    expect(nav("idm").disabled).toBe(true);
    expect(nav("msm").disabled).toBe(true);
    expect(nav("markov").disabled).toBe(true);
    expect(root.querySelector('[data-role="bind-report"]')!.textContent).toContain("survival");
  });

  it("renders KM step curves with a working CI toggle", async () => {
    app.actions.showPage("survival");
    app.actions.setField("survival", "km", "group_by", "celltype");
    await app.actions.runAnalysis("survival", "km");

    const sec = section(root, "survival", "km");
    const curves = sec.querySelectorAll("svg.step-plot path.step-curve");
    expect(curves.length).toBe(4);
    for (const p of Array.from(curves)) {
      const d = p.getAttribute("d") ?? "";
      expect(d).toMatch(STEP_ONLY);
      expect(d).toContain(" H ");
    }
    expect(sec.querySelectorAll("path.ci-band").length).toBeGreaterThan(0);

    app.actions.setCiToggle("survival", "km", false);
    expect(sec.querySelectorAll("path.ci-band").length).toBe(0);
    expect(sec.querySelectorAll("path.step-curve").length).toBe(4);
    app.actions.setCiToggle("survival", "km", true);
    expect(sec.querySelectorAll("path.ci-band").length).toBeGreaterThan(0);

    expect(mismatchText(root, "survival", "km")).toBe("params round-trip ok");
    const echoed = echoedParams(root, "survival", "km");
    expect(echoed.conf_level).toBe(0.95);
    expect(echoed.conf_type).toBe("log");
    expect(echoed.group_by).toBe("celltype");
  });

  it("runs the rank test and echoes its params", async () => {
    app.actions.setField("survival", "ranktest", "group_by", "celltype");
    await app.actions.runAnalysis("survival", "ranktest");
    const sec = section(root, "survival", "ranktest");
    expect(sec.querySelectorAll("tbody tr").length).toBe(4);
    expect(sec.querySelector(".meta")!.textContent).toContain("chi-squared");
    expect(mismatchText(root, "survival", "ranktest")).toBe("params round-trip ok");
    expect(echoedParams(root, "survival", "ranktest").rho).toBe(0);
  });

  it("fits Cox with selectable ties and round-trips them", async () => {
    app.actions.setField("survival", "cox", "covariates", "karno");
    app.actions.setField("survival", "cox", "ties", "breslow");
    await app.actions.runAnalysis("survival", "cox");
    const sec = section(root, "survival", "cox");
    expect(sec.textContent).toContain("karno");
    const echoed = echoedParams(root, "survival", "cox");
    expect(echoed.ties).toBe("breslow");
    expect(echoed.covariates).toEqual(["karno"]);
    expect(mismatchText(root, "survival", "cox")).toBe("params round-trip ok");
  });

  it("suggests AFT when the PH check fails globally", async () => {
    app.actions.setField("survival", "phtest", "covariates", "celltype,karno,age");
    app.actions.setField("survival", "phtest", "nonlinearity", "karno");
    await app.actions.runAnalysis("survival", "phtest");
    const sec = section(root, "survival", "phtest");
    expect(sec.textContent).toContain("GLOBAL");
    expect(sec.querySelector('[data-role="aft-banner"]')).toBeTruthy();
    expect(sec.textContent).toContain("nonlinearity: karno");
    expect(mismatchText(root, "survival", "phtest")).toBe("params round-trip ok");
  });

  it("renders the sequential ANOVA table", async () => {
    app.actions.setField("survival", "anova", "covariates", "celltype,karno");
    await app.actions.runAnalysis("survival", "anova");
    const sec = section(root, "survival", "anova");
    const firstCell = sec.querySelector("tbody tr td");
    expect(firstCell!.textContent).toBe("NULL");
    expect(mismatchText(root, "survival", "anova")).toBe("params round-trip ok");
  });

  it("compares all AFT distributions on one AIC strip", async () => {
    app.actions.setField("survival", "aft", "covariates", "celltype,karno,age");
    await app.actions.runAnalysis("survival", "aft");
    const sec = section(root, "survival", "aft");
    const chips = sec.querySelectorAll(".aic-chip");
    expect(chips.length).toBe(6);
    expect(sec.querySelectorAll(".aic-chip.best").length).toBe(1);
    const echoed = echoedParams(root, "survival", "aft");
    expect(echoed.distribution).toBe(null);
    expect(mismatchText(root, "survival", "aft")).toBe("params round-trip ok");
  });

  it("shows service validation errors inline without navigating", async () => {
    const before = section(root, "survival", "ranktest").querySelector(
      '[data-role="result"]',
    )!.innerHTML;
    app.actions.setField("survival", "ranktest", "group_by", "not_a_column");
    await app.actions.runAnalysis("survival", "ranktest");
    const sec = section(root, "survival", "ranktest");
    expect(sec.querySelector('[data-role="error"]')!.textContent).not.toBe("");
    expect(app.store.state.page).toBe("survival");
    expect(sec.querySelector('[data-role="result"]')!.innerHTML).toBe(before);
    app.actions.setField("survival", "ranktest", "group_by", "celltype");
  });

  it("marks the offending mapping field on a bind error", async () => {
    const statusSel = root.querySelector('select[data-map="status"]') as HTMLSelectElement;
    const old = statusSel.value;
    statusSel.value = "karno";
    expect(await app.actions.bind()).toBe(false);
    expect(root.querySelector('.field-error[data-field="status"]')).toBeTruthy();
    statusSel.value = old;
    expect(await app.actions.bind()).toBe(true);
  });
});

describe("illness-death workflow on colon data", () => {
  let app: AppHandle;
  let root: HTMLElement;

  beforeAll(async () => {
    const built = makeApp();
    app = built.app;
    root = built.root;
    await app.actions.upload(fixtureFile("colonIDM.csv"), "colonIDM.csv", "idm");
    setCovariates(root, ["rx", "age"]);
    expect(await app.actions.bind()).toBe(true);
    app.actions.showPage("idm");
  });

  it("binds idm with the named column defaults", () => {
    expect(app.store.state.boundKind).toBe("idm");
    const nav = (page: string) =>
      root.querySelector(`nav button[data-page="${page}"]`) as HTMLButtonElement;
    expect(nav("idm").disabled).toBe(false);
    expect(nav("markov").disabled).toBe(false);
    expect(nav("survival").disabled).toBe(true);
  });

  it("shows the transition count matrix", async () => {
    await app.actions.runAnalysis("idm", "counts");
    const sec = section(root, "idm", "counts");
    expect(sec.textContent).toContain("468");
    expect(mismatchText(root, "idm", "counts")).toBe("params round-trip ok");
  });

  it("fits per-transition regressions with a clock toggle", async () => {
    app.actions.setField("idm", "msmreg", "covariates", "age");
    app.actions.setField("idm", "msmreg", "clock", "semi_markov");
    await app.actions.runAnalysis("idm", "msmreg");
    const sec = section(root, "idm", "msmreg");
    const heads = Array.from(sec.querySelectorAll("h4")).map((h) => h.textContent);
    expect(heads.length).toBe(3);
    expect(heads[0]).toContain("semi_markov");
    expect(echoedParams(root, "idm", "msmreg").clock).toBe("semi_markov");
    expect(mismatchText(root, "idm", "msmreg")).toBe("params round-trip ok");
  });

  it("renders five landmark panels for LM at s=365", async () => {
    app.actions.setField("idm", "transprob", "method", "lm");
    app.actions.setField("idm", "transprob", "s", "365");
    app.actions.setField("idm", "transprob", "grid", "730,1095,1460,1825");
    await app.actions.runAnalysis("idm", "transprob");
    const sec = section(root, "idm", "transprob");
    const panels = sec.querySelectorAll(".tp-panel");
    expect(panels.length).toBe(5);
    const titles = Array.from(sec.querySelectorAll(".tp-panel h4")).map((h) => h.textContent);
    expect(titles).toContain("P(1 → 1)");
    expect(titles).toContain("P(2 → 3)");
    for (const p of Array.from(sec.querySelectorAll(".tp-panel path.step-curve"))) {
      expect(p.getAttribute("d") ?? "").toMatch(STEP_ONLY);
    }
    const echoed = echoedParams(root, "idm", "transprob");
    expect(echoed.method).toBe("lm");
    expect(echoed.s).toBe(365);
    expect(echoed.grid).toEqual([730, 1095, 1460, 1825]);
    expect(mismatchText(root, "idm", "transprob")).toBe("params round-trip ok");
  });

  it("draws bootstrap bands that the CI toggle controls", async () => {
    app.actions.setField("idm", "transprob", "n_boot", "25");
    app.actions.setField("idm", "transprob", "seed", "11");
    await app.actions.runAnalysis("idm", "transprob");
    const sec = section(root, "idm", "transprob");
    expect(sec.querySelectorAll("path.ci-band").length).toBeGreaterThan(0);
    app.actions.setCiToggle("idm", "transprob", false);
    expect(sec.querySelectorAll("path.ci-band").length).toBe(0);
    app.actions.setCiToggle("idm", "transprob", true);
    expect(sec.querySelectorAll("path.ci-band").length).toBeGreaterThan(0);
    expect(echoedParams(root, "idm", "transprob").seed).toBe(11);
    expect(mismatchText(root, "idm", "transprob")).toBe("params round-trip ok");
    app.actions.setField("idm", "transprob", "n_boot", "0");
    app.actions.setField("idm", "transprob", "seed", "");
  });

  it("renders the cumulative incidence curve", async () => {
    app.actions.setField("idm", "cif", "grid", "365,730,1095,1460");
    await app.actions.runAnalysis("idm", "cif");
    const sec = section(root, "idm", "cif");
    expect(sec.querySelectorAll("svg.step-plot").length).toBe(1);
    expect(mismatchText(root, "idm", "cif")).toBe("params round-trip ok");
  });

  it("runs local Markov tests over a landmark grid with a rejection tally", async () => {
    app.actions.showPage("markov");
    app.actions.setField("markov", "markov_local", "s", "365,550");
    app.actions.setField("markov", "markov_local", "transition", "2,3");
    app.actions.setField("markov", "markov_local", "n_boot", "30");
    app.actions.setField("markov", "markov_local", "seed", "5");
    await app.actions.runAnalysis("markov", "markov_local");
    const sec = section(root, "markov", "markov_local");
    expect(sec.querySelectorAll("tbody tr").length).toBe(2);
    const tally = sec.querySelector('[data-role="rejections"]');
    expect(tally!.textContent).toContain("of 2 landmarks");
    expect(echoedParams(root, "markov", "markov_local").s).toBe(550);
    expect(mismatchText(root, "markov", "markov_local")).toBe("params round-trip ok");
  });

  it("runs the global cox test and echoes every field", async () => {
    app.actions.setField("markov", "markov_global", "transition", "2,3");
    await app.actions.runAnalysis("markov", "markov_global");
    const sec = section(root, "markov", "markov_global");
    expect(sec.textContent).toContain("reject");
    const echoed = echoedParams(root, "markov", "markov_global");
    expect(echoed.method).toBe("cox");
    expect(echoed.alpha).toBe(0.05);
    expect(echoed.transition).toEqual([2, 3]);
    expect(mismatchText(root, "markov", "markov_global")).toBe("params round-trip ok");
  });

  it("runs the global logrank permutation test over an explicit s grid", async () => {
    app.actions.setField("markov", "markov_global", "method", "logrank");
    app.actions.setField("markov", "markov_global", "s_grid", "365,550");
    app.actions.setField("markov", "markov_global", "n_perm", "40");
    app.actions.setField("markov", "markov_global", "seed", "3");
    await app.actions.runAnalysis("markov", "markov_global");
    const sec = section(root, "markov", "markov_global");
    expect(sec.querySelectorAll("tbody tr").length).toBe(2);
    expect(sec.textContent).toContain("max statistic");
    const echoed = echoedParams(root, "markov", "markov_global");
    expect(echoed.s_grid).toEqual([365, 550]);
    expect(echoed.n_perm).toBe(40);
    expect(mismatchText(root, "markov", "markov_global")).toBe("params round-trip ok");
  });
});

describe("general multi-state workflow via the schema editor", () => {
  let app: AppHandle;
  let root: HTMLElement;

  beforeAll(async () => {
    const built = makeApp();
    app = built.app;
    root = built.root;
    await app.actions.upload(fixtureFile("colonIDM.csv"), "colonIDM.csv", "msm");
  });

  function setMap(key: string, value: string) {
    const control = root.querySelector(`[data-map="${key}"]`) as
      | HTMLInputElement
      | HTMLSelectElement;
    expect(control, `mapping control ${key}`).toBeTruthy();
    control.value = value;
  }

  it("builds a transition schema and binds it", async () => {
    setMap("n_states", "3");
    const editor = root.querySelector('[data-role="states-editor"]');
    expect(editor!.querySelectorAll(".state-row").length).toBe(2);
    setMap("labels", "healthy, rec, death");
    setMap("edges", "1-2, 1-3, 2-3");
    setMap("state-2-time", "time1");
    setMap("state-2-status", "event1");
    setMap("state-3-time", "Stime");
    setMap("state-3-status", "event");
    expect(await app.actions.bind()).toBe(true);
    expect(app.store.state.boundKind).toBe("msm");
    const nav = (page: string) =>
      root.querySelector(`nav button[data-page="${page}"]`) as HTMLButtonElement;
    expect(nav("msm").disabled).toBe(false);
    expect(nav("idm").disabled).toBe(true);
    expect(root.querySelector('[data-role="bind-report"]')!.textContent).toContain("healthy");
  });

  it("restricts transition probability methods to general-state ones", async () => {
    app.actions.showPage("msm");
    const sec = section(root, "msm", "transprob");
    const methodSel = sec.querySelector('select[data-param="method"]') as HTMLSelectElement;
    const options = Array.from(methodSel.options).map((o) => o.value);
    expect(options).toEqual(["aj", "lmaj", "breslow"]);

    app.actions.setField("msm", "transprob", "method", "aj");
    app.actions.setField("msm", "transprob", "s", "365");
    app.actions.setField("msm", "transprob", "grid", "730,1095,1460,1825");
    await app.actions.runAnalysis("msm", "transprob");
    const panels = sec.querySelectorAll(".tp-panel");
    expect(panels.length).toBeGreaterThanOrEqual(3);
    expect(mismatchText(root, "msm", "transprob")).toBe("params round-trip ok");
  });

  it("counts transitions for the bound system", async () => {
    await app.actions.runAnalysis("msm", "counts");
    const sec = section(root, "msm", "counts");
    expect(sec.textContent).toContain("healthy");
    expect(sec.textContent).toContain("468");
  });
});
