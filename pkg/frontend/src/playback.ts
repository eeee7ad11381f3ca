/** Approximate in-browser playback: plain oscillators for pitched tracks
 * and a short noise burst for drums. Not a synthesizer - just enough to
 * close the listen/edit loop. */

import type { PianorollPayload } from "./api";

const STEP_SECONDS = 60 / 120 / 8; // 120 bpm, 8 steps per beat

export function playPianoroll(payload: PianorollPayload): AudioContext | null {
  const Ctor = window.AudioContext ?? (window as any).webkitAudioContext;
  if (!Ctor) return null;
  const ctx: AudioContext = new Ctor();
  const start = ctx.currentTime + 0.05;
  for (const [bar, track, step, pitch, duration] of payload.onsets) {
    const at = start + (bar * payload.steps + step) * STEP_SECONDS;
    if (track === 0) {
      scheduleDrum(ctx, at);
    } else {
      scheduleTone(ctx, at, pitch, Math.min(duration, 16) * STEP_SECONDS, track);
    }
  }
  return ctx;
}

function scheduleTone(ctx: AudioContext, at: number, pitch: number, seconds: number, track: number): void {
  const osc = ctx.createOscillator();
  const gain = ctx.createGain();
  osc.type = track === 1 ? "triangle" : "sine";
  osc.frequency.value = 440 * Math.pow(2, (pitch - 69) / 12);
  gain.gain.setValueAtTime(0.12, at);
  gain.gain.exponentialRampToValueAtTime(1e-4, at + seconds);
  osc.connect(gain).connect(ctx.destination);
  osc.start(at);
  osc.stop(at + seconds);
}

function scheduleDrum(ctx: AudioContext, at: number): void {
  const length = Math.floor(ctx.sampleRate * 0.05);
  const buffer = ctx.createBuffer(1, length, ctx.sampleRate);
  const data = buffer.getChannelData(0);
  for (let i = 0; i < length; i++) {
    data[i] = (Math.random() * 2 - 1) * (1 - i / length);
  }
  const source = ctx.createBufferSource();
  source.buffer = buffer;
  const gain = ctx.createGain();
  gain.gain.value = 0.25;
  source.connect(gain).connect(ctx.destination);
  source.start(at);
}
