// End-to-end round trip against the real Python server (fixture provider,
// no network egress): create -> render -> edit -> undo.

import assert from "node:assert/strict";
import { spawn, type ChildProcess } from "node:child_process";
import path from "node:path";
import { after, before, test } from "node:test";
import { fileURLToPath } from "node:url";

import { createSession, getScene, submitEdit, undo } from "../src/api.js";
import { buildDisplayList, toPixels, type RectOp } from "../src/render.js";
import { applyPayload, initialState, type ViewState } from "../src/state.js";

const HERE = path.dirname(fileURLToPath(import.meta.url));
const REPO_ROOT = path.resolve(HERE, "..", "..", "..");
const TRANSCRIPT = path.join(HERE, "roundtrip.transcript");

function startServer(extraArgs: string[]): Promise<{ proc: ChildProcess; base: string }> {
  const proc = spawn(
    "python3",
    ["-m", "hilayout.cli", "serve", "--port", "0", "--rule-fallback", "--seed", "7", ...extraArgs],
    {
      cwd: REPO_ROOT,
      env: { ...process.env, PYTHONPATH: path.join(REPO_ROOT, "src"), PYTHONUNBUFFERED: "1" },
      stdio: ["ignore", "pipe", "inherit"],
    },
  );
  return new Promise((resolve, reject) => {
    const timer = setTimeout(() => reject(new Error("server did not start")), 20000);
    proc.stdout!.on("data", (chunk: Buffer) => {
      const match = chunk.toString().match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match) {
        clearTimeout(timer);
        resolve({ proc, base: match[1]! });
      }
    });
    proc.on("exit", (code) => reject(new Error(`server exited early (${code})`)));
  });
}

let server: ChildProcess;
let base = "";

before(async () => {
  // Record pass: fixture-backed server captures every LLM exchange, then a
  // replay-provider server serves the recorded transcript byte-exactly.
  const { rm } = await import("node:fs/promises");
  await rm(TRANSCRIPT, { force: true });
  const recorder = await startServer(["--record-transcripts", TRANSCRIPT]);
  const created = await createSession(recorder.base, "bedroom", [4.0, 4.6]);
  await submitEdit(recorder.base, created.id, "remove the desk");
  // Also record the unrepairable-edit exchange on a fresh session (the
  // response is captured even though the edit fails validation with 422).
  const fresh = await createSession(recorder.base, "bedroom", [4.0, 4.6]);
  await submitEdit(recorder.base, fresh.id, "make everything huge").catch(() => undefined);
  recorder.proc.kill("SIGTERM");

  ({ proc: server, base } = await startServer(["--provider", "replay", "--transcript", TRANSCRIPT]));
});

after(async () => {
  server.kill("SIGTERM");
  const { rm } = await import("node:fs/promises");
  await rm(TRANSCRIPT, { force: true });
});

function assertDocumentDiff(state: ViewState): void {
  // Zero layout computation client-side: every rendered object rect's
  // source pose equals the fetched document's pose and the pixel position
  // is exactly the single affine view transform of it.
  const scene = state.scene!;
  const ops = buildDisplayList(scene, state.highlights, state.camera, state.previousScene, null);
  const rects = ops.filter((op): op is RectOp => op.kind === "rect" && op.role === "object");
  assert.equal(rects.length, scene.objects.length);
  for (const obj of scene.objects) {
    const rect = rects.find((r) => r.id === obj.id)!;
    assert.deepEqual(rect.sourceCenter, obj.center);
    assert.equal(rect.sourceTheta, obj.theta);
    const [ex, ey] = toPixels(scene.room.size, state.camera, obj.center[0], obj.center[1]);
    assert.equal(rect.cx, ex);
    assert.equal(rect.cy, ey);
  }
}

test("create -> render -> remove the desk -> undo", async () => {
  let state = applyPayload(initialState(), await createSession(base, "bedroom", [4.0, 4.6]));
  const originalDocument = state.document;
  assert.ok(originalDocument.startsWith("format: hilayout/1"));
  assert.equal(state.scene!.objects.length, 6);
  assert.ok(state.scene!.report!.feasible);
  assert.ok(state.scene!.report!.max_overlap <= 1e-6);
  assertDocumentDiff(state);

  // All objects inside the floor rectangle (feasibility guarantee).
  const [roomW, roomD] = state.scene!.room.size;
  for (const obj of state.scene!.objects) {
    const swap = obj.theta % 180 === 90;
    const hw = (swap ? obj.size[1] : obj.size[0]) / 2;
    const hd = (swap ? obj.size[0] : obj.size[1]) / 2;
    assert.ok(Math.abs(obj.center[0]) + hw <= roomW / 2 + 0.01);
    assert.ok(Math.abs(obj.center[1]) + hd <= roomD / 2 + 0.01);
  }

  state = applyPayload(state, await submitEdit(base, state.sessionId!, "remove the desk"));
  const ids = new Set(state.scene!.objects.map((o) => o.id));
  assert.ok(!ids.has("desk_1"));
  assert.ok(state.highlights.removed.has("desk_1"));
  assert.ok(state.highlights.removed.has("chair_1"));
  assert.ok(!state.highlights.moved.has("bed_1"));
  assertDocumentDiff(state);

  // Ghost rendering for the removed desk for one frame cycle.
  const ops = buildDisplayList(state.scene!, state.highlights, state.camera, state.previousScene, null);
  assert.ok(ops.some((op) => op.kind === "rect" && op.id === "desk_1:ghost"));

  state = applyPayload(state, await undo(base, state.sessionId!));
  assert.equal(state.document, originalDocument);
  assert.equal(state.undoDepth, 0);
  assertDocumentDiff(state);

  // The scene endpoint agrees with the undo payload byte for byte.
  const fetched = await getScene(base, state.sessionId!);
  assert.equal(fetched.document, originalDocument);
});

test("failed edits surface validation errors and keep state", async () => {
  let state = applyPayload(initialState(), await createSession(base, "bedroom", [4.0, 4.6]));
  const before = state.document;
  await assert.rejects(
    () => submitEdit(base, state.sessionId!, "make everything huge"),
    (err: any) => err.status === 422 && err.payload.error === "Unrepairable",
  );
  const fetched = await getScene(base, state.sessionId!);
  assert.equal(fetched.document, before);
});

test("provider misses surface as 502 with retry affordance data", async () => {
  const created = await createSession(base, "bedroom", [4.0, 4.6]);
  await assert.rejects(
    () => submitEdit(base, created.id, "paint the walls magenta"),
    (err: any) => err.status === 502 && ["FixtureMissing", "ProviderError"].includes(err.payload.error),
  );
});
