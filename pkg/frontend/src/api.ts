// Typed client for the hilayout editing server. All layout data comes from
// the server verbatim; this module only moves JSON around.

export interface RoomView {
  text: string;
  size: [number, number];
}

export interface AreaView {
  id: string;
  text: string;
  size: [number, number];
  anchor: string;
  center: [number, number] | null;
  facing: string | null;
}

export interface ObjectView {
  id: string;
  text: string;
  category: string;
  size: [number, number, number];
  asset: string | null;
  area: string;
  center: [number, number];
  theta: number;
  provenance: string | null;
}

export interface RelationView {
  from: string;
  to: string;
  text: string;
}

export interface SolveReportView {
  feasible: boolean;
  objective: number;
  max_overlap: number;
  max_oob: number;
  walls: Record<string, string>;
}

export interface SceneView {
  room: RoomView;
  areas: AreaView[];
  objects: ObjectView[];
  relations: RelationView[];
  report: SolveReportView | null;
}

export type DeltaStatus = "added" | "removed" | "moved" | "unchanged";

export interface DeltaEntry {
  status: DeltaStatus;
  move?: number;
  dtheta?: number;
}

export interface ScenePayload {
  id: string;
  scene: SceneView;
  document: string;
  deltas: Record<string, DeltaEntry> | null;
  undo_depth: number;
}

export interface ApiErrorPayload {
  error: string;
  detail?: string;
  validation?: {
    errors: [string, string, string][];
    repairs: string[];
    dropped: string[];
  };
}

export class ApiError extends Error {
  constructor(
    public readonly status: number,
    public readonly payload: ApiErrorPayload,
  ) {
    super(`${payload.error}${payload.detail ? `: ${payload.detail}` : ""}`);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const response = await fetch(base + path, {
    headers: { "Content-Type": "application/json" },
    ...init,
  });
  const body = await response.json();
  if (!response.ok) {
    throw new ApiError(response.status, body as ApiErrorPayload);
  }
  return body as T;
}

export function createSession(
  base: string,
  requirement: string,
  size: [number, number],
): Promise<ScenePayload> {
  return request(base, "/sessions", {
    method: "POST",
    body: JSON.stringify({ requirement, size }),
  });
}

export function getScene(base: string, sessionId: string): Promise<ScenePayload> {
  return request(base, `/sessions/${sessionId}/scene`);
}

export function submitEdit(
  base: string,
  sessionId: string,
  instruction: string,
): Promise<ScenePayload> {
  return request(base, `/sessions/${sessionId}/edits`, {
    method: "POST",
    body: JSON.stringify({ instruction }),
  });
}

export function undo(base: string, sessionId: string): Promise<ScenePayload> {
  return request(base, `/sessions/${sessionId}/undo`, { method: "POST" });
}

export function health(base: string): Promise<{ status: string }> {
  return request(base, "/healthz");
}
