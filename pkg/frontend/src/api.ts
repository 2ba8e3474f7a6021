/** Typed client for the analysis service. */

import type { AnalysisResult, HealthStatus } from "./types.js";

export class InsufficientSpeechError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "InsufficientSpeechError";
  }
}

export class ServiceError extends Error {
  constructor(public status: number, public code: string, detail: string) {
    super(detail);
    this.name = "ServiceError";
  }
}

export class NetworkError extends Error {
  constructor(detail: string) {
    super(detail);
    this.name = "NetworkError";
  }
}

export class ApiClient {
  constructor(private baseUrl: string = "") {}

  /** POST raw WAV bytes; resolves to the analysis document. */
  async analyze(wavBytes: Uint8Array): Promise<AnalysisResult> {
    let response: Response;
    try {
      response = await fetch(`${this.baseUrl}/v1/analyze`, {
        method: "POST",
        headers: { "Content-Type": "audio/wav" },
        body: wavBytes as unknown as BodyInit,
      });
    } catch (err) {
      throw new NetworkError(`service unreachable: ${String(err)}`);
    }
    if (response.ok) {
      return (await response.json()) as AnalysisResult;
    }
    let code = "internal";
    let detail = `HTTP ${response.status}`;
    try {
      const doc = await response.json();
      code = doc.error ?? code;
      detail = doc.detail ?? detail;
    } catch {
      // non-JSON error body; keep defaults
    }
    if (response.status === 422 && code === "insufficient_speech") {
      throw new InsufficientSpeechError(detail);
    }
    throw new ServiceError(response.status, code, detail);
  }

  async health(): Promise<HealthStatus> {
    try {
      const response = await fetch(`${this.baseUrl}/v1/health`);
      return (await response.json()) as HealthStatus;
    } catch (err) {
      throw new NetworkError(`service unreachable: ${String(err)}`);
    }
  }
}
