/** Wires recording, upload, history, and rendering together.
 * One analysis in flight at a time; the record button is disabled while a
 * request is pending. The controller never mutates service-side state. */

import { ApiClient, InsufficientSpeechError, NetworkError } from "./api.js";
import { SessionHistory } from "./history.js";
import type { AudioSource, Recording } from "./recorder.js";
import { MicDeniedError } from "./recorder.js";
import { prepareUpload } from "./wav.js";
import {
  renderDiagnostics,
  renderEmptyState,
  renderGauge,
  renderTimeline,
  renderTrend,
} from "./views.js";
import type { Attempt } from "./types.js";

export const MIN_RECORDING_S = 2.0;

export interface ControllerElements {
  recordButton: HTMLButtonElement;
  clearButton: HTMLButtonElement;
  status: HTMLElement;
  gauge: HTMLElement;
  timeline: HTMLElement;
  trend: HTMLElement;
  diagnostics: HTMLElement;
}

export class AppController {
  private recording = false;
  private pending = false;
  private source: AudioSource | null = null;

  constructor(
    private api: ApiClient,
    private history: SessionHistory,
    private elements: ControllerElements,
    private sourceFactory: () => AudioSource,
  ) {
    elements.recordButton.addEventListener("click", () => void this.toggleRecording());
    elements.clearButton.addEventListener("click", () => {
      this.history.clear();
      this.renderHistory();
      this.setStatus("History cleared.");
    });
    this.renderHistory();
  }

  get isPending(): boolean {
    return this.pending;
  }

  async toggleRecording(): Promise<void> {
    if (this.pending) return;
    if (!this.recording) {
      try {
        this.source = this.sourceFactory();
        await this.source.start();
      } catch (err) {
        this.setStatus(err instanceof MicDeniedError
          ? err.message
          : `Could not start recording: ${String(err)}`);
        this.source = null;
        return;
      }
      this.recording = true;
      this.elements.recordButton.textContent = "Stop";
      this.setStatus("Recording... read a sentence or two, then press stop.");
      return;
    }

    this.recording = false;
    this.elements.recordButton.textContent = "Record";
    const recording = await this.source!.stop();
    this.source = null;
    await this.analyzeRecording(recording);
  }

  /** Upload a captured recording and store the attempt on success. */
  async analyzeRecording(recording: Recording): Promise<Attempt | null> {
    const duration = recording.samples.length / recording.sampleRate;
    if (duration < MIN_RECORDING_S) {
      this.setStatus(`Recording was ${duration.toFixed(1)} s; ` +
        `please speak for at least ${MIN_RECORDING_S.toFixed(0)} seconds.`);
      return null;
    }

    this.pending = true;
    this.elements.recordButton.disabled = true;
    this.setStatus("Analyzing...");
    try {
      const wav = prepareUpload(recording.samples, recording.sampleRate);
      const result = await this.api.analyze(wav);
      const attempt: Attempt = { timestamp: Date.now(), duration, result };
      this.history.append(attempt);
      this.renderHistory();
      this.setStatus("Done.");
      return attempt;
    } catch (err) {
      if (err instanceof InsufficientSpeechError) {
        this.setStatus("Not enough speech detected - try speaking for longer.");
      } else if (err instanceof NetworkError) {
        this.setStatus("Could not reach the analysis service. Check that it is running, then press record to retry.");
      } else {
        this.setStatus(`Analysis failed: ${String(err)}`);
      }
      return null;
    } finally {
      this.pending = false;
      this.elements.recordButton.disabled = false;
    }
  }

  renderHistory(): void {
    const attempts = this.history.list();
    if (attempts.length === 0) {
      renderEmptyState(this.elements.gauge);
      this.elements.timeline.replaceChildren();
      this.elements.trend.replaceChildren();
      this.elements.diagnostics.replaceChildren();
      return;
    }
    const latest = attempts[attempts.length - 1];
    renderGauge(this.elements.gauge, latest.result.vfp);
    renderTimeline(this.elements.timeline, latest.result);
    renderTrend(this.elements.trend, attempts);
    renderDiagnostics(this.elements.diagnostics, latest.result);
  }

  private setStatus(text: string): void {
    this.elements.status.textContent = text;
  }
}
