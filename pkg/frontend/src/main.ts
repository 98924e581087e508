// Browser wiring: session bootstrap, instruction box, undo, hover details.

import { ApiError, createSession, submitEdit, undo } from "./api.js";
import { buildDisplayList, paint, toPixels, viewportFor } from "./render.js";
import { applyError, applyPayload, initialState, type ViewState } from "./state.js";

const BASE = "";

let state: ViewState = initialState();

function $(id: string): HTMLElement {
  const el = document.getElementById(id);
  if (!el) throw new Error(`missing element #${id}`);
  return el;
}

function redraw(): void {
  const canvas = $("scene-canvas") as HTMLCanvasElement;
  const status = $("status");
  const undoButton = $("undo-button") as HTMLButtonElement;
  const editButton = $("edit-button") as HTMLButtonElement;
  const input = $("instruction") as HTMLInputElement;

  undoButton.disabled = state.busy || state.undoDepth === 0;
  editButton.disabled = state.busy || !state.sessionId;
  input.disabled = state.busy;

  if (state.error) {
    status.textContent = state.error;
    status.className = "error";
  } else if (state.busy) {
    status.textContent = "solving…";
    status.className = "busy";
  } else if (state.scene) {
    const rep = state.scene.report;
    status.textContent = rep
      ? `${state.scene.objects.length} objects · feasible=${rep.feasible} · undo depth ${state.undoDepth}`
      : `${state.scene.objects.length} objects`;
    status.className = "ok";
  }

  if (!state.scene) return;
  const viewport = viewportFor(state.scene, state.camera);
  canvas.width = viewport.width;
  canvas.height = viewport.height;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  paint(ctx, buildDisplayList(state.scene, state.highlights, state.camera, state.previousScene, state.selected), viewport);
}

function describeHover(px: number, py: number): string {
  if (!state.scene) return "";
  for (const obj of state.scene.objects) {
    const [cx, cy] = toPixels(state.scene.room.size, state.camera, obj.center[0], obj.center[1]);
    const theta = obj.theta % 180 === 90;
    const hw = ((theta ? obj.size[1] : obj.size[0]) / 2) * 90 * state.camera.zoom;
    const hh = ((theta ? obj.size[0] : obj.size[1]) / 2) * 90 * state.camera.zoom;
    if (Math.abs(px - cx) <= hw && Math.abs(py - cy) <= hh) {
      const relation = state.scene.relations.find((r) => r.from === obj.id);
      const rel = relation ? ` · ${relation.text} ${relation.to}` : "";
      const prov = obj.provenance ? ` · ${obj.provenance}` : "";
      return `${obj.id} (${obj.text})${rel}${prov}`;
    }
  }
  return "";
}

async function run(action: () => Promise<void>): Promise<void> {
  state = { ...state, busy: true, error: null };
  redraw();
  try {
    await action();
  } catch (err) {
    if (err instanceof ApiError) {
      const validation = err.payload.validation;
      const extra = validation
        ? ` -- ${validation.errors.map(([code, path]) => `${code}@${path}`).join(", ")}`
        : "";
      state = applyError(state, `${err.payload.error}${extra}`);
    } else {
      state = applyError(state, String(err));
    }
  }
  redraw();
}

function wire(): void {
  $("create-button").addEventListener("click", () =>
    run(async () => {
      const requirement = ($("requirement") as HTMLInputElement).value || "bedroom";
      const w = parseFloat(($("room-w") as HTMLInputElement).value) || 4.0;
      const d = parseFloat(($("room-d") as HTMLInputElement).value) || 4.6;
      state = applyPayload(initialState(), await createSession(BASE, requirement, [w, d]));
    }),
  );

  $("edit-button").addEventListener("click", () =>
    run(async () => {
      if (!state.sessionId) return;
      const instruction = ($("instruction") as HTMLInputElement).value.trim();
      if (!instruction) return;
      state = applyPayload(state, await submitEdit(BASE, state.sessionId, instruction));
      ($("instruction") as HTMLInputElement).value = "";
    }),
  );

  $("undo-button").addEventListener("click", () =>
    run(async () => {
      if (!state.sessionId) return;
      state = applyPayload(state, await undo(BASE, state.sessionId));
    }),
  );

  const canvas = $("scene-canvas") as HTMLCanvasElement;
  canvas.addEventListener("mousemove", (ev) => {
    const rect = canvas.getBoundingClientRect();
    $("hover").textContent = describeHover(ev.clientX - rect.left, ev.clientY - rect.top);
  });
  canvas.addEventListener("wheel", (ev) => {
    ev.preventDefault();
    const factor = ev.deltaY < 0 ? 1.1 : 1 / 1.1;
    state = { ...state, camera: { ...state.camera, zoom: Math.min(4, Math.max(0.25, state.camera.zoom * factor)) } };
    redraw();
  });

  redraw();
}

if (typeof document !== "undefined") {
  document.addEventListener("DOMContentLoaded", wire);
}
