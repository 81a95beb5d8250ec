/* SVG step plots. All geometry comes from steps.ts; this module only builds
   elements, so it can run against any DOM implementation. */

import { bandPath, hasBand, linearScale, stepPath, ticks } from "./steps.js";
import type { CurvePoint } from "./steps.js";

export interface Series {
  label: string;
  points: CurvePoint[];
}

export interface PlotOptions {
  width?: number;
  height?: number;
  showCI?: boolean;
  xLabel?: string;
  yLabel?: string;
  yDomain?: [number, number];
}

const SVG_NS = "http://www.w3.org/2000/svg";

const PALETTE = ["#0072b2", "#d55e00", "#009e73", "#cc79a7", "#e69f00", "#56b4e9", "#999999"];

const MARGIN = { top: 12, right: 12, bottom: 34, left: 46 };

function svgEl(doc: Document, tag: string, attrs: Record<string, string>): Element {
  const el = doc.createElementNS(SVG_NS, tag);
  for (const [k, v] of Object.entries(attrs)) el.setAttribute(k, v);
  return el;
}

export function buildStepPlot(doc: Document, series: Series[], opts: PlotOptions = {}): Element {
  const width = opts.width ?? 560;
  const height = opts.height ?? 300;
  const showCI = opts.showCI ?? true;
  const innerW = width - MARGIN.left - MARGIN.right;
  const innerH = height - MARGIN.top - MARGIN.bottom;

  const allT = series.flatMap((s) => s.points.map((p) => p.t));
  const x0 = allT.length ? Math.min(...allT) : 0;
  const x1 = allT.length ? Math.max(...allT) : 1;
  const [y0, y1] = opts.yDomain ?? [0, 1];

  const sx = linearScale(x0, x1 === x0 ? x0 + 1 : x1, MARGIN.left, MARGIN.left + innerW);
  const sy = linearScale(y0, y1, MARGIN.top + innerH, MARGIN.top);

  const svg = svgEl(doc, "svg", {
    class: "step-plot",
    viewBox: `0 0 ${width} ${height}`,
    width: String(width),
    height: String(height),
    role: "img",
  });

  const axes = svgEl(doc, "g", { class: "axes" });
  axes.appendChild(
    svgEl(doc, "line", {
      x1: String(MARGIN.left),
      y1: String(MARGIN.top + innerH),
      x2: String(MARGIN.left + innerW),
      y2: String(MARGIN.top + innerH),
      class: "axis",
    }),
  );
  axes.appendChild(
    svgEl(doc, "line", {
      x1: String(MARGIN.left),
      y1: String(MARGIN.top),
      x2: String(MARGIN.left),
      y2: String(MARGIN.top + innerH),
      class: "axis",
    }),
  );
  for (const t of ticks(x0, x1)) {
    const px = sx(t);
    axes.appendChild(
      svgEl(doc, "line", {
        x1: String(px),
        y1: String(MARGIN.top + innerH),
        x2: String(px),
        y2: String(MARGIN.top + innerH + 4),
        class: "tick",
      }),
    );
    const label = svgEl(doc, "text", {
      x: String(px),
      y: String(MARGIN.top + innerH + 16),
      "text-anchor": "middle",
      class: "tick-label",
    });
    label.textContent = String(t);
    axes.appendChild(label);
  }
  for (const v of ticks(y0, y1)) {
    const py = sy(v);
    axes.appendChild(
      svgEl(doc, "line", {
        x1: String(MARGIN.left - 4),
        y1: String(py),
        x2: String(MARGIN.left),
        y2: String(py),
        class: "tick",
      }),
    );
    const label = svgEl(doc, "text", {
      x: String(MARGIN.left - 7),
      y: String(py + 3),
      "text-anchor": "end",
      class: "tick-label",
    });
    label.textContent = String(v);
    axes.appendChild(label);
  }
  if (opts.xLabel) {
    const label = svgEl(doc, "text", {
      x: String(MARGIN.left + innerW / 2),
      y: String(height - 4),
      "text-anchor": "middle",
      class: "axis-label",
    });
    label.textContent = opts.xLabel;
    axes.appendChild(label);
  }
  svg.appendChild(axes);

  series.forEach((s, idx) => {
    const color = PALETTE[idx % PALETTE.length];
    const pts = s.points;
    if (pts.length === 0) return;
    if (showCI && hasBand(pts)) {
      const banded = pts.filter((p) => p.lower !== null && p.upper !== null);
      const upperXY = banded.map((p) => ({ x: sx(p.t), y: sy(p.upper as number) }));
      const lowerXY = banded.map((p) => ({ x: sx(p.t), y: sy(p.lower as number) }));
      svg.appendChild(
        svgEl(doc, "path", {
          d: bandPath(upperXY, lowerXY),
          class: "ci-band",
          fill: color,
          "fill-opacity": "0.15",
          stroke: "none",
          "data-series": s.label,
        }),
      );
    }
    svg.appendChild(
      svgEl(doc, "path", {
        d: stepPath(pts.map((p) => ({ x: sx(p.t), y: sy(p.est) }))),
        class: "step-curve",
        fill: "none",
        stroke: color,
        "stroke-width": "1.8",
        "data-series": s.label,
      }),
    );
  });

  if (series.length > 1) {
    const legend = svgEl(doc, "g", { class: "legend" });
    series.forEach((s, idx) => {
      const y = MARGIN.top + 12 + idx * 14;
      legend.appendChild(
        svgEl(doc, "line", {
          x1: String(MARGIN.left + innerW - 96),
          y1: String(y - 4),
          x2: String(MARGIN.left + innerW - 80),
          y2: String(y - 4),
          stroke: PALETTE[idx % PALETTE.length],
          "stroke-width": "2",
        }),
      );
      const label = svgEl(doc, "text", {
        x: String(MARGIN.left + innerW - 74),
        y: String(y),
        class: "legend-label",
      });
      label.textContent = s.label;
      legend.appendChild(label);
    });
    svg.appendChild(legend);
  }

  return svg;
}
