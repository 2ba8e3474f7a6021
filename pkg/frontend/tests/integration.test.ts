/** Scripted end-to-end checks against a live analysis service
 * (spawned by tests/global-setup.ts). */

import { beforeEach, describe, expect, inject, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { AppController } from "../src/controller.js";
import { SessionHistory } from "../src/history.js";
import { GeneratedSource } from "../src/recorder.js";
import type { ControllerElements } from "../src/controller.js";

const serviceUrl = inject("serviceUrl");

function makeElements(): ControllerElements {
  document.body.innerHTML = `
    <button id="record"></button><button id="clear"></button>
    <p id="status"></p>
    <div id="gauge"></div><div id="timeline"></div>
    <div id="trend"></div><div id="diagnostics"></div>`;
  return {
    recordButton: document.getElementById("record") as HTMLButtonElement,
    clearButton: document.getElementById("clear") as HTMLButtonElement,
    status: document.getElementById("status")!,
    gauge: document.getElementById("gauge")!,
    timeline: document.getElementById("timeline")!,
    trend: document.getElementById("trend")!,
    diagnostics: document.getElementById("diagnostics")!,
  };
}

beforeEach(() => {
  window.localStorage.clear();
});

describe("S1: live recording round trip", () => {
  it("health endpoint reports ok", async () => {
    const health = await new ApiClient(serviceUrl).health();
    expect(health.status).toBe("ok");
    expect(health.model_version).toHaveLength(12);
  });

  it("5 s of generated audio yields a VFP with gauge and timeline", async () => {
    const api = new ApiClient(serviceUrl);
    const history = new SessionHistory();
    const elements = makeElements();
    const controller = new AppController(api, history, elements,
      () => new GeneratedSource(5.0, 48000, 150));

    await controller.toggleRecording(); // record 5 s of generated voice
    await controller.toggleRecording(); // stop -> upload -> render

    const attempts = history.list();
    expect(attempts).toHaveLength(1);
    const result = attempts[0].result;
    expect(result.vfp).toBeGreaterThanOrEqual(0);
    expect(result.vfp).toBeLessThanOrEqual(100);
    expect(result.n_windows).toBeGreaterThanOrEqual(1);

    const gaugeValue = elements.gauge.querySelector('[data-testid="gauge-value"]');
    expect(gaugeValue).not.toBeNull();
    expect(gaugeValue!.textContent).toBe(result.vfp.toFixed(1));
    expect(elements.timeline.querySelector('[data-testid="timeline"]')).not.toBeNull();
    expect(elements.trend.querySelectorAll('[data-testid="trend-point"]')).toHaveLength(1);
  });

  it("a 1 s recording shows the insufficient-speech hint and stores nothing", async () => {
    const api = new ApiClient(serviceUrl);
    const analyzeSpy = vi.spyOn(api, "analyze");
    const history = new SessionHistory();
    const elements = makeElements();
    const controller = new AppController(api, history, elements,
      () => new GeneratedSource(1.0, 48000, 150));

    await controller.toggleRecording();
    await controller.toggleRecording();
    expect(history.list()).toHaveLength(0);
    expect(elements.status.textContent).toMatch(/at least 2 seconds/);
    expect(analyzeSpy).not.toHaveBeenCalled(); // too short to upload at all
  });

  it("a long but nearly silent recording gets the service's 422 hint", async () => {
    const api = new ApiClient(serviceUrl);
    const history = new SessionHistory();
    const elements = makeElements();

    class QuietSource extends GeneratedSource {
      override async stop() {
        const recording = await super.stop();
        const samples = new Float32Array(recording.samples.length); // silence
        return { samples, sampleRate: recording.sampleRate };
      }
    }
    const controller = new AppController(api, history, elements, () => new QuietSource(3.0, 48000));
    await controller.toggleRecording();
    await controller.toggleRecording();
    expect(history.list()).toHaveLength(0);
    expect(elements.status.textContent).toContain("try speaking for longer");
  });
});

describe("S2: history persistence across reloads", () => {
  it("attempts survive a reload and can be cleared by the user", async () => {
    const api = new ApiClient(serviceUrl);
    const elements = makeElements();
    const controller = new AppController(api, new SessionHistory(), elements,
      () => new GeneratedSource(5.0, 48000, 200));
    await controller.toggleRecording();
    await controller.toggleRecording();
    expect(new SessionHistory().list()).toHaveLength(1);

    // simulate a page reload: fresh DOM, fresh controller over the same storage
    const reloadedElements = makeElements();
    const reloadedHistory = new SessionHistory();
    new AppController(api, reloadedHistory, reloadedElements, () => new GeneratedSource(5.0));
    expect(reloadedHistory.list()).toHaveLength(1);
    expect(reloadedElements.gauge.querySelector('[data-testid="gauge-value"]')).not.toBeNull();
    expect(reloadedElements.trend.querySelectorAll('[data-testid="trend-point"]')).toHaveLength(1);

    reloadedElements.clearButton.click();
    expect(new SessionHistory().list()).toHaveLength(0);
    expect(reloadedElements.gauge.querySelector('[data-testid="empty-state"]')).not.toBeNull();
  });
});
