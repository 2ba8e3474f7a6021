/** Microphone capture. The controller depends on the AudioSource interface
 * so tests (and demo mode) can substitute generated audio for the mic. */

export interface Recording {
  samples: Float32Array;
  sampleRate: number;
}

export interface AudioSource {
  start(): Promise<void>;
  stop(): Promise<Recording>;
}

export class MicDeniedError extends Error {
  constructor() {
    super("Microphone access was denied. Allow microphone use for this page and try again.");
    this.name = "MicDeniedError";
  }
}

/** Captures mono PCM through the Web Audio graph.
 * ScriptProcessorNode is deprecated but still the simplest way to get raw
 * Float32 samples everywhere; chunk size 4096 keeps latency irrelevant for
 * this use case. */
export class MicSource implements AudioSource {
  private context: AudioContext | null = null;
  private stream: MediaStream | null = null;
  private chunks: Float32Array[] = [];
  private processor: ScriptProcessorNode | null = null;

  async start(): Promise<void> {
    try {
      this.stream = await navigator.mediaDevices.getUserMedia({ audio: true });
    } catch {
      throw new MicDeniedError();
    }
    this.context = new AudioContext();
    const source = this.context.createMediaStreamSource(this.stream);
    this.processor = this.context.createScriptProcessor(4096, 1, 1);
    this.chunks = [];
    this.processor.onaudioprocess = (event) => {
      this.chunks.push(new Float32Array(event.inputBuffer.getChannelData(0)));
    };
    source.connect(this.processor);
    this.processor.connect(this.context.destination);
  }

  async stop(): Promise<Recording> {
    const context = this.context;
    if (!context) throw new Error("recorder not started");
    const sampleRate = context.sampleRate;
    this.processor?.disconnect();
    this.stream?.getTracks().forEach((track) => track.stop());
    await context.close();
    this.context = null;

    const total = this.chunks.reduce((n, c) => n + c.length, 0);
    const samples = new Float32Array(total);
    let offset = 0;
    for (const chunk of this.chunks) {
      samples.set(chunk, offset);
      offset += chunk.length;
    }
    this.chunks = [];
    return { samples, sampleRate };
  }
}

/** Deterministic voice-like signal for tests and demo mode: a sawtooth
 * (pitch plus harmonics) under read-speech-like syllable bumps with
 * phrase pauses, so the service's adaptive voice activity detector sees
 * both speech and silence. */
export function generateVoiceLike(
  durationS: number,
  sampleRate: number,
  pitchHz: number = 160,
): Float32Array {
  const n = Math.round(durationS * sampleRate);
  const envelope = new Float32Array(n);
  const syllablePeriod = 0.25;
  const syllableLength = 0.19;
  let t = 0.05;
  let count = 0;
  while (t < durationS) {
    const start = Math.round(t * sampleRate);
    const len = Math.round(syllableLength * sampleRate);
    for (let i = 0; i < len && start + i < n; i++) {
      const bump = 0.5 - 0.5 * Math.cos((2 * Math.PI * i) / len);
      envelope[start + i] = Math.max(envelope[start + i], bump);
    }
    count++;
    t += syllablePeriod + (count % 7 === 0 ? 0.35 : 0); // phrase pause
  }

  const out = new Float32Array(n);
  for (let i = 0; i < n; i++) {
    const phase = ((pitchHz * i) / sampleRate) % 1;
    out[i] = (2 * phase - 1) * 0.45 * envelope[i];
  }
  return out;
}

export class GeneratedSource implements AudioSource {
  private startedAt = 0;
  constructor(
    private durationS: number,
    private sampleRate: number = 48000,
    private pitchHz: number = 160,
  ) {}

  async start(): Promise<void> {
    this.startedAt = Date.now();
  }

  async stop(): Promise<Recording> {
    void this.startedAt;
    return {
      samples: generateVoiceLike(this.durationS, this.sampleRate, this.pitchHz),
      sampleRate: this.sampleRate,
    };
  }
}
