/** Client-side audio preparation: resample to 16 kHz and encode PCM16 WAV,
 * keeping the service contract narrow (it only ever sees 16 kHz mono). */

export const TARGET_RATE = 16000;

/** Linear-interpolation resampler; adequate for speech-band uploads. */
export function resampleLinear(
  samples: Float32Array,
  sourceRate: number,
  targetRate: number = TARGET_RATE,
): Float32Array {
  if (sourceRate === targetRate || samples.length === 0) {
    return samples;
  }
  const outLength = Math.round((samples.length * targetRate) / sourceRate);
  const out = new Float32Array(outLength);
  const step = sourceRate / targetRate;
  for (let i = 0; i < outLength; i++) {
    const position = i * step;
    const base = Math.floor(position);
    const frac = position - base;
    const a = samples[Math.min(base, samples.length - 1)];
    const b = samples[Math.min(base + 1, samples.length - 1)];
    out[i] = a + (b - a) * frac;
  }
  return out;
}

/** Mono 16-bit PCM WAV bytes for the given samples. */
export function encodeWavPcm16(samples: Float32Array, sampleRate: number): Uint8Array {
  const buffer = new ArrayBuffer(44 + samples.length * 2);
  const view = new DataView(buffer);
  const writeAscii = (offset: number, text: string) => {
    for (let i = 0; i < text.length; i++) view.setUint8(offset + i, text.charCodeAt(i));
  };
  writeAscii(0, "RIFF");
  view.setUint32(4, 36 + samples.length * 2, true);
  writeAscii(8, "WAVEfmt ");
  view.setUint32(16, 16, true);
  view.setUint16(20, 1, true); // integer PCM
  view.setUint16(22, 1, true); // mono
  view.setUint32(24, sampleRate, true);
  view.setUint32(28, sampleRate * 2, true);
  view.setUint16(32, 2, true);
  view.setUint16(34, 16, true);
  writeAscii(36, "data");
  view.setUint32(40, samples.length * 2, true);
  for (let i = 0; i < samples.length; i++) {
    const clamped = Math.max(-1, Math.min(1, samples[i]));
    view.setInt16(44 + i * 2, Math.round(clamped * 32767), true);
  }
  return new Uint8Array(buffer);
}

/** Capture-to-upload path used by the recorder. */
export function prepareUpload(samples: Float32Array, sourceRate: number): Uint8Array {
  return encodeWavPcm16(resampleLinear(samples, sourceRate), TARGET_RATE);
}
