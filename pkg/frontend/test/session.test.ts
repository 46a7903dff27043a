/**
 * End-to-end session against a real backend: drive the bench through the
 * view model (start the injector, flip the bit, nudge it), record what the
 * UI displayed, then hand the log to the batch replay checker.
 *
 * The flip and nudge are issued just past a swing peak of the target at a
 * low speed multiplier, the way a careful experimenter grabs the pendulum
 * at the end of its swing; at high speed the command latency would land
 * the hold at an arbitrary angle.
 *
 * Requires python3 with the metrolatch package importable.
 */
import assert from "node:assert/strict";
import { test } from "node:test";
import { execFileSync, spawn } from "node:child_process";
import { mkdtempSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join, dirname } from "node:path";
import { fileURLToPath } from "node:url";
import { createServer } from "node:net";
import WebSocket from "ws";

import { BenchConnection, WsLike } from "../src/socket.js";
import { BenchViewModel } from "../src/viewmodel.js";
import { Command } from "../src/protocol.js";

const HERE = dirname(fileURLToPath(import.meta.url));   // frontend/dist/test
const REPO = join(HERE, "..", "..", "..");
const SEED = 5;
const T_END = 150.0;

function freePort(): Promise<number> {
  return new Promise((resolve) => {
    const srv = createServer();
    srv.listen(0, "127.0.0.1", () => {
      const port = (srv.address() as { port: number }).port;
      srv.close(() => resolve(port));
    });
  });
}

function until(pred: () => boolean, what: string,
               timeoutMs = 180000): Promise<void> {
  return new Promise((resolve, reject) => {
    const t0 = Date.now();
    const timer = setInterval(() => {
      if (pred()) {
        clearInterval(timer);
        resolve();
      } else if (Date.now() - t0 > timeoutMs) {
        clearInterval(timer);
        reject(new Error(`timed out waiting for ${what}`));
      }
    }, 10);
  });
}

/** Resolve just after `target` passes a positive swing peak. */
function atNextPeak(vm: BenchViewModel, target: string): Promise<void> {
  let prev: number | null = null;
  let lastT = -1;
  return until(() => {
    const met = vm.latest?.metronomes.find((m) => m.id === target);
    if (!met || vm.latest!.t === lastT) return false;
    lastT = vm.latest!.t;
    const hit = prev !== null && prev > 0 && met.theta_dot <= 0;
    prev = met.theta_dot;
    return hit;
  }, `${target} swing peak`);
}

test("recorded session replays through the batch engine", async () => {
  const workDir = mkdtempSync(join(tmpdir(), "bench-session-"));
  const configText = execFileSync(
    "python3", [join(REPO, "frontend", "test", "make_config.py")],
    { cwd: REPO, encoding: "utf-8" });
  const configPath = join(workDir, "bench.json");
  writeFileSync(configPath, configText);

  const port = await freePort();
  const backend = spawn("python3", [
    "-m", "metrolatch.cli", "serve", "--config", configPath,
    "--port", String(port), "--speed", "0", "--duration", String(T_END),
    "--seed", String(SEED),
  ], { cwd: REPO, stdio: ["ignore", "pipe", "pipe"] });
  let backendLog = "";
  backend.stdout.on("data", (d) => (backendLog += d));
  backend.stderr.on("data", (d) => (backendLog += d));

  const vm = new BenchViewModel(20.0);
  const conn = new BenchConnection(
    vm, (url) => new WebSocket(url) as unknown as WsLike);
  const sent: Command[] = [];
  const act = (fn: () => number | null, cmd: Command) => {
    const seq = fn();
    assert.ok(seq !== null, `command refused: ${JSON.stringify(cmd)}`);
    sent.push(cmd);
  };

  try {
    let connected = false;
    for (let tryNo = 0; tryNo < 100 && !connected; tryNo++) {
      try {
        await conn.connect(`ws://127.0.0.1:${port}`);
        connected = true;
      } catch {
        await new Promise((r) => setTimeout(r, 200));
      }
    }
    assert.ok(connected, `backend never came up\n${backendLog}`);
    await until(() => vm.welcome !== null, "welcome");
    assert.equal(vm.hasAuthority, true, "first client should hold authority");

    act(() => vm.setSpeed(60.0), { type: "set_speed", params: { multiplier: 60.0 } });
    await until(() => (vm.latest?.t ?? 0) >= 5.0, "t=5");

    // hand-start the injector, like the UI start button on a resting one
    act(() => vm.start("blue"), { type: "start", target: "blue" });
    act(() => vm.impulse("blue", 8.0),
        { type: "impulse", target: "blue", params: { d_theta_dot: 8.0 } });

    await until(() => vm.displayedBit === "zero", "bit 0 on the lamp");
    const tZero = vm.latest!.t;

    // flip: slow down, wait for a swing peak, hold half a cycle
    act(() => vm.setSpeed(2.0), { type: "set_speed", params: { multiplier: 2.0 } });
    await atNextPeak(vm, "green");
    act(() => vm.flip("green"),
        { type: "delay", target: "green", params: { fraction: 0.5 } });
    act(() => vm.setSpeed(60.0), { type: "set_speed", params: { multiplier: 60.0 } });
    await until(() => vm.displayedBit === "one", "bit 1 on the lamp");
    const tOne = vm.latest!.t;
    assert.ok(tOne > tZero);

    // nudge: same dance with a small delay; the bit must survive.
    // leave enough runway after it for the 20 s live lock window to
    // re-fill before the session ends
    await until(() => (vm.latest?.t ?? 0) >= tOne + 8.0, "post-flip settle");
    assert.ok(vm.latest!.t < T_END - 45.0,
              `nudge too late for re-lock (t=${vm.latest!.t})`);
    act(() => vm.setSpeed(2.0), { type: "set_speed", params: { multiplier: 2.0 } });
    await atNextPeak(vm, "green");
    act(() => vm.nudge("green", 0.1),
        { type: "delay", target: "green", params: { fraction: 0.1 } });
    act(() => vm.setSpeed(60.0), { type: "set_speed", params: { multiplier: 60.0 } });
    await until(() => (vm.latest?.t ?? 0) >= T_END, "end of session");

    await until(() => vm.pendingCount === 0, "all acks");

    const session = {
      config: JSON.parse(configText),
      seed: SEED,
      dt: vm.welcome!.dt,
      stream_rate: vm.welcome!.stream_rate,
      t_end: T_END,
      pair: vm.welcome!.pair,
      injector: vm.welcome!.injector,
      commands: sent.map((cmd, i) => ({
        ...cmd, applied_at: vm.acks[i].applied_at,
      })),
      frames: vm.sessionLog.map((e) => ({
        t: e.t, bit: e.bitReading, lock: e.lock,
      })),
      bit_timeline: vm.bitTimeline(),
    };
    writeFileSync(join(workDir, "session.json"), JSON.stringify(session));
    console.log(`session log: ${join(workDir, "session.json")}`);
    console.log(`bit timeline: ${JSON.stringify(vm.bitTimeline())}`);
    console.log(`acked at: ${JSON.stringify(vm.acks.map(a => a.applied_at))}`);

    assert.equal(vm.displayedBit, "one", "nudge must not flip the bit");
    assert.equal(vm.errors.length, 0,
                 `server rejected commands: ${JSON.stringify(vm.errors)}`);
    assert.equal(vm.acks.length, sent.length);

    const verdictText = execFileSync(
      "python3", [join(REPO, "frontend", "test", "replay_check.py")],
      { cwd: REPO, input: JSON.stringify(session), encoding: "utf-8",
        maxBuffer: 64 * 1024 * 1024 });
    const verdict = JSON.parse(verdictText);
    assert.ok(verdict.timeline_matches,
              `bit timelines diverge:\nui=${JSON.stringify(verdict.timeline_ui)}\n`
              + `replay=${JSON.stringify(verdict.timeline_replay)}`);
    assert.equal(verdict.lamp_mismatches.length, 0,
                 `lamp disagrees with decoder: `
                 + `${JSON.stringify(verdict.lamp_mismatches)}`);
    assert.ok(verdict.ok);

    // the lamp history shows the storage protocol: dark, 0, then 1, with
    // dark gaps while the pair re-locks after each manipulation
    const values = vm.bitTimeline().map((e) => e.value);
    assert.equal(values[0], "-");
    const decoded = values.filter((v) => v !== "-");
    assert.equal(decoded[0], "zero");
    assert.ok(decoded.slice(1).every((v) => v === "one"),
              `unexpected decode sequence ${JSON.stringify(values)}`);
    assert.equal(values[values.length - 1], "one");
  } finally {
    conn.close();
    backend.kill("SIGINT");
    await new Promise((r) => setTimeout(r, 300));
    backend.kill("SIGKILL");
  }
});
