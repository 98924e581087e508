// Scene document -> display list. Every rectangle is a verbatim copy of
// server-provided poses run through one affine view transform (meters to
// pixels, y flipped); no layout arithmetic happens here.

import type { SceneView } from "./api.js";
import type { Camera, Highlights } from "./state.js";

export const PX_PER_METER = 90;
export const CANVAS_MARGIN = 30;

export interface RectOp {
  kind: "rect";
  id: string;
  role: "room" | "area" | "object" | "ghost";
  cx: number; // px
  cy: number; // px
  halfW: number; // px
  halfH: number; // px
  stroke: string;
  fill: string;
  dashed: boolean;
  // Source values copied verbatim from the document (for diff tests).
  sourceCenter: [number, number] | null;
  sourceSize: [number, number];
  sourceTheta: number;
}

export interface LineOp {
  kind: "line";
  id: string;
  x1: number;
  y1: number;
  x2: number;
  y2: number;
  stroke: string;
}

export interface LabelOp {
  kind: "label";
  id: string;
  x: number;
  y: number;
  text: string;
  size: number;
}

export type DrawOp = RectOp | LineOp | LabelOp;

export interface Viewport {
  width: number;
  height: number;
}

const HIGHLIGHT = { added: "#2e7d32", moved: "#ef6c00", removed: "#9e9e9e" };

export function toPixels(
  room: [number, number],
  camera: Camera,
  x: number,
  y: number,
): [number, number] {
  const scale = PX_PER_METER * camera.zoom;
  return [
    CANVAS_MARGIN + camera.panX + (x + room[0] / 2) * scale,
    CANVAS_MARGIN + camera.panY + (room[1] / 2 - y) * scale,
  ];
}

function footprint(size: [number, number, number] | [number, number], theta: number): [number, number] {
  const w = size[0];
  const d = size[1];
  return theta % 180 === 90 ? [d, w] : [w, d];
}

export function viewportFor(scene: SceneView, camera: Camera): Viewport {
  const scale = PX_PER_METER * camera.zoom;
  return {
    width: scene.room.size[0] * scale + 2 * CANVAS_MARGIN,
    height: scene.room.size[1] * scale + 2 * CANVAS_MARGIN,
  };
}

export function buildDisplayList(
  scene: SceneView,
  highlights: Highlights,
  camera: Camera,
  previous: SceneView | null,
  selected: string | null,
): DrawOp[] {
  const ops: DrawOp[] = [];
  const room = scene.room.size;
  const scale = PX_PER_METER * camera.zoom;
  const [roomCx, roomCy] = toPixels(room, camera, 0, 0);

  ops.push({
    kind: "rect",
    id: "room",
    role: "room",
    cx: roomCx,
    cy: roomCy,
    halfW: (room[0] / 2) * scale,
    halfH: (room[1] / 2) * scale,
    stroke: "#222222",
    fill: "#ffffff",
    dashed: false,
    sourceCenter: [0, 0],
    sourceSize: [room[0], room[1]],
    sourceTheta: 0,
  });

  const facingTheta: Record<string, number> = { "+y": 0, "-x": 90, "-y": 180, "+x": 270 };
  for (const area of scene.areas) {
    if (!area.center || !area.facing) continue;
    const theta = facingTheta[area.facing] ?? 0;
    const [fw, fd] = footprint(area.size, theta);
    const [cx, cy] = toPixels(room, camera, area.center[0], area.center[1]);
    ops.push({
      kind: "rect",
      id: area.id,
      role: "area",
      cx,
      cy,
      halfW: (fw / 2) * scale,
      halfH: (fd / 2) * scale,
      stroke: "#7986cb",
      fill: "rgba(121,134,203,0.12)",
      dashed: true,
      sourceCenter: area.center,
      sourceSize: area.size,
      sourceTheta: theta,
    });
    const arrow = rotatePoint(0, Math.min(area.size[1] / 2, 0.4), theta);
    const [ax, ay] = toPixels(room, camera, area.center[0] + arrow[0], area.center[1] + arrow[1]);
    ops.push({ kind: "line", id: `${area.id}:facing`, x1: cx, y1: cy, x2: ax, y2: ay, stroke: "#5c6bc0" });
    ops.push({ kind: "label", id: `${area.id}:label`, x: cx, y: cy - (fd / 2) * scale - 6, text: area.id, size: 12 });
  }

  for (const obj of scene.objects) {
    const [fw, fd] = footprint(obj.size, obj.theta);
    const [cx, cy] = toPixels(room, camera, obj.center[0], obj.center[1]);
    let stroke = "#455a64";
    if (highlights.added.has(obj.id)) stroke = HIGHLIGHT.added;
    else if (highlights.moved.has(obj.id)) stroke = HIGHLIGHT.moved;
    ops.push({
      kind: "rect",
      id: obj.id,
      role: "object",
      cx,
      cy,
      halfW: (fw / 2) * scale,
      halfH: (fd / 2) * scale,
      stroke,
      fill: selected === obj.id ? "rgba(255,235,59,0.45)" : "rgba(236,239,241,0.92)",
      dashed: false,
      sourceCenter: obj.center,
      sourceSize: [obj.size[0], obj.size[1]],
      sourceTheta: obj.theta,
    });
    const nose = rotatePoint(0, (obj.size[1] / 2) * 0.8, obj.theta);
    const [nx, ny] = toPixels(room, camera, obj.center[0] + nose[0], obj.center[1] + nose[1]);
    ops.push({ kind: "line", id: `${obj.id}:nose`, x1: cx, y1: cy, x2: nx, y2: ny, stroke: "#90a4ae" });
    ops.push({ kind: "label", id: `${obj.id}:label`, x: cx, y: cy, text: obj.id, size: 9 });
  }

  // Ghosts for removed objects, drawn from the previous snapshot verbatim.
  if (previous) {
    for (const obj of previous.objects) {
      if (!highlights.removed.has(obj.id)) continue;
      const [fw, fd] = footprint(obj.size, obj.theta);
      const [cx, cy] = toPixels(room, camera, obj.center[0], obj.center[1]);
      ops.push({
        kind: "rect",
        id: `${obj.id}:ghost`,
        role: "ghost",
        cx,
        cy,
        halfW: (fw / 2) * scale,
        halfH: (fd / 2) * scale,
        stroke: HIGHLIGHT.removed,
        fill: "rgba(158,158,158,0.15)",
        dashed: true,
        sourceCenter: obj.center,
        sourceSize: [obj.size[0], obj.size[1]],
        sourceTheta: obj.theta,
      });
    }
  }

  return ops;
}

function rotatePoint(x: number, y: number, theta: number): [number, number] {
  switch (((theta % 360) + 360) % 360) {
    case 90:
      return [-y, x];
    case 180:
      return [-x, -y];
    case 270:
      return [y, -x];
    default:
      return [x, y];
  }
}

export function paint(ctx: CanvasRenderingContext2D, ops: DrawOp[], viewport: Viewport): void {
  ctx.clearRect(0, 0, viewport.width, viewport.height);
  for (const op of ops) {
    if (op.kind === "rect") {
      ctx.setLineDash(op.dashed ? [6, 4] : []);
      ctx.fillStyle = op.fill;
      ctx.strokeStyle = op.stroke;
      ctx.lineWidth = op.role === "room" ? 2 : 1.4;
      ctx.fillRect(op.cx - op.halfW, op.cy - op.halfH, op.halfW * 2, op.halfH * 2);
      ctx.strokeRect(op.cx - op.halfW, op.cy - op.halfH, op.halfW * 2, op.halfH * 2);
    } else if (op.kind === "line") {
      ctx.setLineDash([]);
      ctx.strokeStyle = op.stroke;
      ctx.lineWidth = 1.2;
      ctx.beginPath();
      ctx.moveTo(op.x1, op.y1);
      ctx.lineTo(op.x2, op.y2);
      ctx.stroke();
    } else {
      ctx.setLineDash([]);
      ctx.fillStyle = "#263238";
      ctx.font = `${op.size}px sans-serif`;
      ctx.textAlign = "center";
      ctx.fillText(op.text, op.x, op.y);
    }
  }
}
