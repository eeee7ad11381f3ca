/** The editable activation grid, mirroring the service structure schema. */

import type { Structure } from "./api";

export const TRACKS = 4;
export const STEPS = 32;
export const TRACK_NAMES = ["drums", "bass", "guitar/piano", "strings"] as const;

export interface CellDiff {
  added: [number, number, number][];
  removed: [number, number, number][];
}

export class GridModel {
  readonly bars: number;
  sessionId: string | null = null;
  dirty = false;
  private cells: boolean[][][];

  constructor(bars: number) {
    this.bars = bars;
    this.cells = Array.from({ length: bars }, () =>
      Array.from({ length: TRACKS }, () => Array.from({ length: STEPS }, () => false)),
    );
  }

  static fromStructure(structure: Structure, sessionId: string | null = null): GridModel {
    const grid = new GridModel(structure.length);
    structure.forEach((bar, b) =>
      bar.forEach((track, t) =>
        track.forEach((value, s) => {
          grid.cells[b][t][s] = value === 1;
        }),
      ),
    );
    grid.sessionId = sessionId;
    return grid;
  }

  get(bar: number, track: number, step: number): boolean {
    return this.cells[bar][track][step];
  }

  toggle(bar: number, track: number, step: number): void {
    this.cells[bar][track][step] = !this.cells[bar][track][step];
    this.dirty = true;
  }

  /** Serialize to exactly the wire schema (0/1 numbers). */
  toStructure(): Structure {
    return this.cells.map((bar) => bar.map((track) => track.map((v) => (v ? 1 : 0))));
  }

  /** Cells that differ from an older structure (for highlighting). */
  diff(previous: Structure): CellDiff {
    const added: [number, number, number][] = [];
    const removed: [number, number, number][] = [];
    for (let b = 0; b < this.bars; b++) {
      for (let t = 0; t < TRACKS; t++) {
        for (let s = 0; s < STEPS; s++) {
          const now = this.cells[b][t][s];
          const before = previous[b][t][s] === 1;
          if (now && !before) added.push([b, t, s]);
          if (!now && before) removed.push([b, t, s]);
        }
      }
    }
    return { added, removed };
  }
}
