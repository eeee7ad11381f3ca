/** Single-page app: a sample/edit tab (structure grid editor + pianoroll
 * viewer) and an interpolation browser. All musical data comes from the
 * service; the grid is the only thing edited client-side. */

import { ApiError, interpolate, regenerate, sample } from "./api";
import type { PianorollPayload, Structure } from "./api";
import { GridModel } from "./grid";
import { renderPianoroll, renderStructureGrid } from "./pianoroll";
import { playPianoroll } from "./playback";
import { CoalescingQueue } from "./queue";

export interface AppState {
  grid: GridModel | null;
  lastStructure: Structure | null; // baseline for added/removed highlighting
  lastPianoroll: PianorollPayload | null;
}

export function createApp(root: HTMLElement): AppState {
  root.innerHTML = `
    <header>
      <h1>polyvae</h1>
      <nav>
        <button id="tab-sample" class="tab active" type="button">sample &amp; edit</button>
        <button id="tab-interpolate" class="tab" type="button">interpolate</button>
      </nav>
    </header>
    <main>
      <section id="panel-sample">
        <div class="controls">
          <label>seed <input id="seed" type="number" value="0"></label>
          <button id="btn-sample" type="button">sample</button>
          <button id="btn-play" type="button" title="approximate oscillator playback">play (approx)</button>
          <span id="status"></span>
        </div>
        <div id="grid"></div>
        <div id="roll" class="roll-frame"></div>
      </section>
      <section id="panel-interpolate" hidden>
        <div class="controls">
          <label>seed a <input id="seed-a" type="number" value="0"></label>
          <label>seed b <input id="seed-b" type="number" value="1"></label>
          <label>steps <input id="steps" type="number" value="5" min="2" max="16"></label>
          <button id="btn-interpolate" type="button">interpolate</button>
        </div>
        <div id="interp-rolls"></div>
      </section>
    </main>
    <div id="toast" hidden></div>
  `;

  const state: AppState = { grid: null, lastStructure: null, lastPianoroll: null };
  const gridEl = root.querySelector<HTMLElement>("#grid")!;
  const rollEl = root.querySelector<HTMLElement>("#roll")!;
  const statusEl = root.querySelector<HTMLElement>("#status")!;
  const toastEl = root.querySelector<HTMLElement>("#toast")!;

  const showToast = (err: unknown) => {
    const text = err instanceof ApiError ? `${err.code}: ${err.message}` : String(err);
    toastEl.textContent = text;
    toastEl.hidden = false;
    setTimeout(() => {
      toastEl.hidden = true;
    }, 4000);
  };

  const queue = new CoalescingQueue<void>(showToast);

  const redraw = () => {
    if (!state.grid) return;
    renderStructureGrid(gridEl, state.grid.toStructure(), state.lastStructure, {
      onToggle: (bar, track, step) => {
        state.grid!.toggle(bar, track, step);
        redraw();
        scheduleRegenerate();
      },
    });
    if (state.lastPianoroll) renderPianoroll(rollEl, state.lastPianoroll);
  };

  const scheduleRegenerate = () => {
    const grid = state.grid;
    if (!grid?.sessionId) return;
    statusEl.textContent = "regenerating...";
    // the task reads the grid when it runs, so coalesced runs always send
    // the latest edits
    queue.submit(async () => {
      const response = await regenerate(grid.sessionId!, grid.toStructure());
      grid.dirty = false;
      state.lastPianoroll = response.pianoroll;
      renderPianoroll(rollEl, response.pianoroll);
      statusEl.textContent = response.warning ? `warning: ${response.warning}` : "";
    });
  };

  root.querySelector("#btn-sample")!.addEventListener("click", async () => {
    const seed = Number((root.querySelector<HTMLInputElement>("#seed"))!.value);
    statusEl.textContent = "sampling...";
    try {
      const response = await sample(Number.isFinite(seed) ? seed : undefined);
      state.grid = GridModel.fromStructure(response.structure, response.session_id);
      state.lastStructure = response.structure;
      state.lastPianoroll = response.pianoroll;
      redraw();
      statusEl.textContent = "";
    } catch (err) {
      statusEl.textContent = "";
      showToast(err);
    }
  });

  root.querySelector("#btn-play")!.addEventListener("click", () => {
    if (state.lastPianoroll) playPianoroll(state.lastPianoroll);
  });

  root.querySelector("#btn-interpolate")!.addEventListener("click", async () => {
    const seedA = Number(root.querySelector<HTMLInputElement>("#seed-a")!.value);
    const seedB = Number(root.querySelector<HTMLInputElement>("#seed-b")!.value);
    const steps = Number(root.querySelector<HTMLInputElement>("#steps")!.value);
    const target = root.querySelector<HTMLElement>("#interp-rolls")!;
    try {
      const response = await interpolate(seedA, seedB, steps);
      target.replaceChildren();
      response.sequences.forEach((payload, i) => {
        const wrap = document.createElement("div");
        wrap.className = "interp-item";
        const label = document.createElement("div");
        label.className = "interp-label";
        label.textContent = `step ${i + 1} / ${response.sequences.length}`;
        const roll = document.createElement("div");
        roll.className = "roll-frame small";
        renderPianoroll(roll, payload);
        wrap.append(label, roll);
        target.appendChild(wrap);
      });
    } catch (err) {
      showToast(err);
    }
  });

  const tabSample = root.querySelector<HTMLElement>("#tab-sample")!;
  const tabInterp = root.querySelector<HTMLElement>("#tab-interpolate")!;
  const panelSample = root.querySelector<HTMLElement>("#panel-sample")!;
  const panelInterp = root.querySelector<HTMLElement>("#panel-interpolate")!;
  tabSample.addEventListener("click", () => {
    tabSample.classList.add("active");
    tabInterp.classList.remove("active");
    panelSample.hidden = false;
    panelInterp.hidden = true;
  });
  tabInterp.addEventListener("click", () => {
    tabInterp.classList.add("active");
    tabSample.classList.remove("active");
    panelInterp.hidden = false;
    panelSample.hidden = true;
  });

  return state;
}

if (!import.meta.env?.VITEST) {
  createApp(document.getElementById("app")!);
}
