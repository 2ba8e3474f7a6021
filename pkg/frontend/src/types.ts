/** Shapes of the service JSON and locally stored session data. */

export interface WindowScore {
  t_start: number;
  p_female: number;
}

/** Response body of POST /v1/analyze, displayed verbatim (no recomputation). */
export interface AnalysisResult {
  vfp: number;
  raw_score: number;
  n_windows: number;
  window_scores: WindowScore[];
  speech_ratio: number;
  f0_median_st: number | null;
  f0_median_hz: number | null;
  vtl_cm: number | null;
  warnings: string[];
}

/** One practice attempt, kept in browser local storage. */
export interface Attempt {
  timestamp: number; // epoch milliseconds
  duration: number;  // seconds of captured audio
  result: AnalysisResult;
}

export interface HealthStatus {
  status: string;
  model_version?: string;
  calibration_version?: string;
}
