/** DOM renderers. Both are pure functions of their payloads: they clear
 * the container and rebuild it, so the view always matches the last
 * response cell-for-cell. */

import type { PianorollPayload, Structure } from "./api";
import { STEPS, TRACKS, TRACK_NAMES } from "./grid";

const TRACK_COLORS = ["#e5484d", "#2f6fed", "#2f9e44", "#b24bd1"];

export function renderPianoroll(container: HTMLElement, payload: PianorollPayload): void {
  container.replaceChildren();
  container.classList.add("pianoroll");
  const totalSteps = payload.n_bars * payload.steps;
  for (const [bar, track, step, pitch, duration] of payload.onsets) {
    const note = document.createElement("div");
    note.className = `note track-${track}`;
    note.dataset.bar = String(bar);
    note.dataset.track = String(track);
    note.dataset.step = String(step);
    note.dataset.pitch = String(pitch);
    note.dataset.duration = String(duration);
    const start = bar * payload.steps + step;
    note.style.left = `${(100 * start) / totalSteps}%`;
    note.style.width = `${(100 * duration) / totalSteps}%`;
    note.style.top = `${(100 * (127 - pitch)) / 128}%`;
    note.style.background = TRACK_COLORS[track] ?? "#888";
    note.title = `${TRACK_NAMES[track]} pitch ${pitch} @ bar ${bar} step ${step} (${duration} steps)`;
    container.appendChild(note);
  }
  for (let bar = 1; bar < payload.n_bars; bar++) {
    const line = document.createElement("div");
    line.className = "barline";
    line.style.left = `${(100 * bar) / payload.n_bars}%`;
    container.appendChild(line);
  }
}

export interface GridCallbacks {
  onToggle: (bar: number, track: number, step: number) => void;
}

/** Render the structure grid; `previous` drives the green/red highlight
 * of cells added to or removed from the last generated structure. */
export function renderStructureGrid(
  container: HTMLElement,
  structure: Structure,
  previous: Structure | null,
  callbacks: GridCallbacks,
): void {
  container.replaceChildren();
  container.classList.add("structure");
  structure.forEach((barGrid, bar) => {
    const barEl = document.createElement("div");
    barEl.className = "bar";
    for (let track = 0; track < TRACKS; track++) {
      const row = document.createElement("div");
      row.className = "track-row";
      const label = document.createElement("span");
      label.className = "track-label";
      label.textContent = bar === 0 ? TRACK_NAMES[track] : "";
      row.appendChild(label);
      for (let step = 0; step < STEPS; step++) {
        const cell = document.createElement("button");
        cell.type = "button";
        cell.className = "cell";
        cell.dataset.bar = String(bar);
        cell.dataset.track = String(track);
        cell.dataset.step = String(step);
        const active = barGrid[track][step] === 1;
        if (active) cell.classList.add("on");
        if (previous) {
          const before = previous[bar][track][step] === 1;
          if (active && !before) cell.classList.add("added");
          if (!active && before) cell.classList.add("removed");
        }
        if (step % 8 === 0) cell.classList.add("beat");
        cell.addEventListener("click", () => callbacks.onToggle(bar, track, step));
        row.appendChild(cell);
      }
      barEl.appendChild(row);
    }
    container.appendChild(barEl);
  });
}
