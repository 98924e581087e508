// View state and highlight derivation. Highlights are computed from the
// server's payloads (delta map plus id diffing) and never authored here.

import type { DeltaStatus, ScenePayload, SceneView } from "./api.js";

export interface Camera {
  panX: number;
  panY: number;
  zoom: number;
}

export interface Highlights {
  added: Set<string>;
  removed: Set<string>;
  moved: Set<string>;
}

export interface ViewState {
  sessionId: string | null;
  scene: SceneView | null;
  document: string;
  previousScene: SceneView | null;
  highlights: Highlights;
  selected: string | null;
  pendingInstruction: string;
  busy: boolean;
  undoDepth: number;
  error: string | null;
  camera: Camera;
}

export function initialState(): ViewState {
  return {
    sessionId: null,
    scene: null,
    document: "",
    previousScene: null,
    highlights: emptyHighlights(),
    selected: null,
    pendingInstruction: "",
    busy: false,
    undoDepth: 0,
    error: null,
    camera: { panX: 0, panY: 0, zoom: 1 },
  };
}

export function emptyHighlights(): Highlights {
  return { added: new Set(), removed: new Set(), moved: new Set() };
}

export function deriveHighlights(
  previous: SceneView | null,
  next: SceneView,
  deltas: Record<string, { status: DeltaStatus }> | null,
): Highlights {
  const highlights = emptyHighlights();
  if (deltas) {
    for (const [oid, entry] of Object.entries(deltas)) {
      if (entry.status === "added") highlights.added.add(oid);
      else if (entry.status === "removed") highlights.removed.add(oid);
      else if (entry.status === "moved") highlights.moved.add(oid);
    }
    return highlights;
  }
  if (!previous) return highlights;
  const before = new Set(previous.objects.map((o) => o.id));
  const after = new Set(next.objects.map((o) => o.id));
  for (const id of after) if (!before.has(id)) highlights.added.add(id);
  for (const id of before) if (!after.has(id)) highlights.removed.add(id);
  for (const obj of next.objects) {
    const old = previous.objects.find((o) => o.id === obj.id);
    if (!old) continue;
    const dx = Math.abs(obj.center[0] - old.center[0]);
    const dy = Math.abs(obj.center[1] - old.center[1]);
    if (dx > 1e-9 || dy > 1e-9 || obj.theta !== old.theta) highlights.moved.add(obj.id);
  }
  return highlights;
}

export function applyPayload(state: ViewState, payload: ScenePayload): ViewState {
  return {
    ...state,
    sessionId: payload.id,
    previousScene: state.scene,
    scene: payload.scene,
    document: payload.document,
    highlights: deriveHighlights(state.scene, payload.scene, payload.deltas),
    undoDepth: payload.undo_depth,
    busy: false,
    error: null,
  };
}

export function applyError(state: ViewState, message: string): ViewState {
  return { ...state, busy: false, error: message };
}
