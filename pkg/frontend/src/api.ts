/** Typed client for the generation service. */

export type Structure = number[][][]; // bars x 4 tracks x 32 steps of 0/1

export interface PianorollPayload {
  n_bars: number;
  tracks: number;
  steps: number;
  onsets: [number, number, number, number, number][]; // bar, track, step, pitch, duration
}

export interface SampleResponse {
  session_id: string;
  structure: Structure;
  pianoroll: PianorollPayload;
}

export interface RegenerateResponse {
  pianoroll: PianorollPayload;
  warning?: string;
}

export interface InterpolateResponse {
  sequences: PianorollPayload[];
}

export class ApiError extends Error {
  constructor(
    public readonly code: string,
    message: string,
    public readonly status: number,
  ) {
    super(message);
  }
}

async function post<T>(path: string, body: unknown): Promise<T> {
  const response = await fetch(path, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(body),
  });
  const payload = await response.json();
  if (!response.ok) {
    throw new ApiError(payload.error ?? "unknown", payload.message ?? "request failed", response.status);
  }
  return payload as T;
}

export function sample(seed?: number): Promise<SampleResponse> {
  return post("/api/sample", seed === undefined ? {} : { seed });
}

export function regenerate(sessionId: string, structure: Structure): Promise<RegenerateResponse> {
  return post("/api/regenerate", { session_id: sessionId, structure });
}

export function interpolate(seedA: number, seedB: number, steps: number): Promise<InterpolateResponse> {
  return post("/api/interpolate", { seed_a: seedA, seed_b: seedB, steps });
}
