/** DOM rendering: gauge, per-window timeline, session trend, diagnostics.
 * Values from the service JSON are displayed as received; formatting only
 * trims digits for the label (the full value stays in a title attribute).
 * Neutral palette throughout. */

import type { Attempt, AnalysisResult } from "./types.js";

const SVG_NS = "http://www.w3.org/2000/svg";

function svgElement(width: number, height: number): SVGSVGElement {
  const svg = document.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`);
  svg.setAttribute("width", String(width));
  svg.setAttribute("height", String(height));
  return svg;
}

/** Semi-circular 0-100 gauge with a needle at the given value. */
export function renderGauge(el: HTMLElement, vfp: number): void {
  el.replaceChildren();
  const svg = svgElement(220, 130);
  svg.classList.add("gauge");

  const cx = 110, cy = 110, radius = 90;
  const arc = document.createElementNS(SVG_NS, "path");
  arc.setAttribute("d", `M ${cx - radius} ${cy} A ${radius} ${radius} 0 0 1 ${cx + radius} ${cy}`);
  arc.setAttribute("fill", "none");
  arc.setAttribute("stroke", "#d8dde3");
  arc.setAttribute("stroke-width", "14");
  svg.appendChild(arc);

  const clamped = Math.max(0, Math.min(100, vfp));
  const angle = Math.PI * (1 - clamped / 100);
  const needle = document.createElementNS(SVG_NS, "line");
  needle.setAttribute("x1", String(cx));
  needle.setAttribute("y1", String(cy));
  needle.setAttribute("x2", String(cx + (radius - 12) * Math.cos(angle)));
  needle.setAttribute("y2", String(cy - (radius - 12) * Math.sin(angle)));
  needle.setAttribute("stroke", "#3d5a6c");
  needle.setAttribute("stroke-width", "4");
  needle.setAttribute("data-testid", "gauge-needle");
  svg.appendChild(needle);

  const label = document.createElementNS(SVG_NS, "text");
  label.setAttribute("x", String(cx));
  label.setAttribute("y", String(cy - 20));
  label.setAttribute("text-anchor", "middle");
  label.setAttribute("font-size", "28");
  label.setAttribute("data-testid", "gauge-value");
  label.textContent = vfp.toFixed(1);
  svg.appendChild(label);

  svg.setAttribute("role", "img");
  svg.setAttribute("aria-label", `estimated femininity ${vfp.toFixed(1)} out of 100`);
  el.title = String(vfp);
  el.appendChild(svg);
}

/** Per-window probability sparkline for the latest attempt. */
export function renderTimeline(el: HTMLElement, result: AnalysisResult): void {
  el.replaceChildren();
  const scores = result.window_scores;
  if (scores.length === 0) return;
  const width = 260, height = 60, pad = 4;
  const svg = svgElement(width, height);
  svg.classList.add("timeline");
  svg.setAttribute("data-testid", "timeline");

  const t0 = scores[0].t_start;
  const t1 = scores[scores.length - 1].t_start;
  const span = Math.max(t1 - t0, 1e-9);
  const points = scores.map((s, i) => {
    const x = scores.length === 1 ? width / 2 : pad + ((s.t_start - t0) / span) * (width - 2 * pad);
    const y = height - pad - s.p_female * (height - 2 * pad);
    return `${x.toFixed(1)},${y.toFixed(1)}`;
  });

  const line = document.createElementNS(SVG_NS, "polyline");
  line.setAttribute("points", points.join(" "));
  line.setAttribute("fill", "none");
  line.setAttribute("stroke", "#6b8f9c");
  line.setAttribute("stroke-width", "2");
  svg.appendChild(line);
  el.appendChild(svg);
}

/** Session trend: one dot per attempt, joined in time order. */
export function renderTrend(el: HTMLElement, attempts: Attempt[]): void {
  el.replaceChildren();
  if (attempts.length === 0) return;
  const width = 260, height = 80, pad = 8;
  const svg = svgElement(width, height);
  svg.classList.add("trend");
  svg.setAttribute("data-testid", "trend");

  const xs = attempts.map((_, i) =>
    attempts.length === 1 ? width / 2 : pad + (i / (attempts.length - 1)) * (width - 2 * pad));
  const ys = attempts.map((a) => height - pad - (a.result.vfp / 100) * (height - 2 * pad));

  if (attempts.length > 1) {
    const line = document.createElementNS(SVG_NS, "polyline");
    line.setAttribute("points", xs.map((x, i) => `${x.toFixed(1)},${ys[i].toFixed(1)}`).join(" "));
    line.setAttribute("fill", "none");
    line.setAttribute("stroke", "#8aa6b1");
    line.setAttribute("stroke-width", "2");
    svg.appendChild(line);
  }
  attempts.forEach((a, i) => {
    const dot = document.createElementNS(SVG_NS, "circle");
    dot.setAttribute("cx", xs[i].toFixed(1));
    dot.setAttribute("cy", ys[i].toFixed(1));
    dot.setAttribute("r", "3.5");
    dot.setAttribute("fill", "#3d5a6c");
    dot.setAttribute("data-testid", "trend-point");
    dot.setAttribute("data-vfp", String(a.result.vfp));
    svg.appendChild(dot);
  });
  el.appendChild(svg);
}

/** F0 / VTL side panel; missing measurements show n/a plus the warning. */
export function renderDiagnostics(el: HTMLElement, result: AnalysisResult): void {
  const rows: Array<[string, string]> = [
    ["median F0", result.f0_median_hz === null ? "n/a" : `${result.f0_median_hz} Hz`],
    ["F0 (semitones)", result.f0_median_st === null ? "n/a" : `${result.f0_median_st} ST`],
    ["vocal tract length", result.vtl_cm === null ? "n/a" : `${result.vtl_cm} cm`],
    ["windows", String(result.n_windows)],
    ["speech ratio", String(result.speech_ratio)],
  ];
  el.replaceChildren();
  const dl = document.createElement("dl");
  dl.setAttribute("data-testid", "diagnostics");
  for (const [term, value] of rows) {
    const dt = document.createElement("dt");
    dt.textContent = term;
    const dd = document.createElement("dd");
    dd.textContent = value;
    dl.append(dt, dd);
  }
  el.appendChild(dl);
  for (const warning of result.warnings) {
    const p = document.createElement("p");
    p.className = "warning";
    p.textContent = warning;
    el.appendChild(p);
  }
}

export function renderEmptyState(el: HTMLElement): void {
  el.replaceChildren();
  const p = document.createElement("p");
  p.className = "empty-state";
  p.setAttribute("data-testid", "empty-state");
  p.textContent = "No attempts yet. Press record, read a sentence or two, then stop.";
  el.appendChild(p);
}
