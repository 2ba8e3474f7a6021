import { beforeEach, describe, expect, it } from "vitest";

import { SessionHistory } from "../src/history.js";
import type { Attempt } from "../src/types.js";

function attempt(timestamp: number, vfp: number): Attempt {
  return {
    timestamp,
    duration: 5.0,
    result: {
      vfp,
      raw_score: vfp / 100,
      n_windows: 3,
      window_scores: [],
      speech_ratio: 0.9,
      f0_median_st: null,
      f0_median_hz: null,
      vtl_cm: null,
      warnings: [],
    },
  };
}

beforeEach(() => {
  window.localStorage.clear();
});

describe("SessionHistory", () => {
  it("starts empty", () => {
    expect(new SessionHistory().list()).toEqual([]);
  });

  it("appends and lists in timestamp order", () => {
    const history = new SessionHistory();
    history.append(attempt(200, 60));
    history.append(attempt(100, 40));
    expect(new SessionHistory().list().map((a) => a.timestamp)).toEqual([100, 200]);
  });

  it("survives a reload (new instance over the same storage)", () => {
    new SessionHistory().append(attempt(1, 42));
    const reloaded = new SessionHistory();
    expect(reloaded.list()).toHaveLength(1);
    expect(reloaded.list()[0].result.vfp).toBe(42);
  });

  it("clear removes everything", () => {
    const history = new SessionHistory();
    history.append(attempt(1, 42));
    history.clear();
    expect(history.list()).toEqual([]);
    expect(new SessionHistory().list()).toEqual([]);
  });

  it("tolerates corrupted storage", () => {
    window.localStorage.setItem("voicefem.attempts.v1", "{not json");
    expect(new SessionHistory().list()).toEqual([]);
  });
});
