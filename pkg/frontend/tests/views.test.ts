import { describe, expect, it } from "vitest";

import {
  renderDiagnostics,
  renderEmptyState,
  renderGauge,
  renderTimeline,
  renderTrend,
} from "../src/views.js";
import type { AnalysisResult, Attempt } from "../src/types.js";

function result(overrides: Partial<AnalysisResult> = {}): AnalysisResult {
  return {
    vfp: 58.123,
    raw_score: 0.58,
    n_windows: 3,
    window_scores: [
      { t_start: 0.0, p_female: 0.4 },
      { t_start: 0.75, p_female: 0.6 },
      { t_start: 1.5, p_female: 0.8 },
    ],
    speech_ratio: 0.91,
    f0_median_st: 88.0,
    f0_median_hz: 160.0,
    vtl_cm: 15.2,
    warnings: [],
    ...overrides,
  };
}

describe("renderGauge", () => {
  it("shows the service value without recomputation", () => {
    const el = document.createElement("div");
    renderGauge(el, 58.123);
    expect(el.querySelector('[data-testid="gauge-value"]')!.textContent).toBe("58.1");
    expect(el.title).toBe("58.123"); // full verbatim value preserved
    expect(el.querySelector('[data-testid="gauge-needle"]')).not.toBeNull();
  });
});

describe("renderTimeline", () => {
  it("draws one polyline over the window scores", () => {
    const el = document.createElement("div");
    renderTimeline(el, result());
    const line = el.querySelector("polyline")!;
    expect(line.getAttribute("points")!.split(" ")).toHaveLength(3);
  });

  it("renders nothing for empty windows", () => {
    const el = document.createElement("div");
    renderTimeline(el, result({ window_scores: [] }));
    expect(el.children).toHaveLength(0);
  });
});

describe("renderTrend", () => {
  it("two ascending attempts give two points in order", () => {
    const attempts: Attempt[] = [
      { timestamp: 1, duration: 5, result: result({ vfp: 40 }) },
      { timestamp: 2, duration: 5, result: result({ vfp: 60 }) },
    ];
    const el = document.createElement("div");
    renderTrend(el, attempts);
    const points = [...el.querySelectorAll('[data-testid="trend-point"]')];
    expect(points.map((p) => p.getAttribute("data-vfp"))).toEqual(["40", "60"]);
    const ys = points.map((p) => Number(p.getAttribute("cy")));
    expect(ys[1]).toBeLessThan(ys[0]); // higher score drawn higher up
  });
});

describe("renderDiagnostics", () => {
  it("shows measurements with units", () => {
    const el = document.createElement("div");
    renderDiagnostics(el, result());
    expect(el.textContent).toContain("160 Hz");
    expect(el.textContent).toContain("15.2 cm");
  });

  it("missing vtl shows n/a plus the warning text", () => {
    const el = document.createElement("div");
    renderDiagnostics(el, result({
      vtl_cm: null,
      warnings: ["vtl unavailable: fewer than 4 stable formant candidates"],
    }));
    expect(el.textContent).toContain("n/a");
    expect(el.querySelector(".warning")!.textContent)
      .toContain("fewer than 4 stable formant candidates");
  });
});

describe("renderEmptyState", () => {
  it("prompts the user", () => {
    const el = document.createElement("div");
    renderEmptyState(el);
    expect(el.querySelector('[data-testid="empty-state"]')!.textContent)
      .toContain("No attempts yet");
  });
});
