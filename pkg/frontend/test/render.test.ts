import assert from "node:assert/strict";
import { test } from "node:test";

import {
  renderBench, renderBitLamp, renderDisconnectedBanner, renderLissajous,
  renderPhaseStrip,
} from "../src/render.js";
import { BenchViewModel } from "../src/viewmodel.js";
import { bitMsg, frame, lockMsg, stubCanvas, welcome } from "./fixtures.js";

function populated(): BenchViewModel {
  const vm = new BenchViewModel(20.0);
  vm.attach(() => {});
  vm.handleMessage(welcome());
  for (let i = 0; i <= 120; i++) {
    vm.handleMessage(frame(i / 60, {
      lock: lockMsg(0.2), bit: bitMsg("zero"),
      pair_delta: Math.sin(i / 20),
    }));
  }
  return vm;
}

test("bench panel draws a rod and tip per metronome", () => {
  const vm = populated();
  const { ctx, calls } = stubCanvas(520, 520);
  renderBench(ctx, vm);
  const arcs = calls.filter((c) => c.op === "arc");
  assert.equal(arcs.length, 3);
  const moves = calls.filter((c) => c.op === "moveTo");
  assert.ok(moves.length >= 3, "one rod per metronome");
  const labels = calls.filter((c) => c.op === "fillText").map((c) => c.args[0]);
  assert.ok(labels.some((l) => String(l).startsWith("red")));
  assert.ok(labels.some((l) => String(l).includes("off")), "stopped marker");
});

test("bench panel without frames shows a waiting note", () => {
  const vm = new BenchViewModel();
  const { ctx, calls } = stubCanvas();
  renderBench(ctx, vm);
  const texts = calls.filter((c) => c.op === "fillText");
  assert.equal(texts.length, 1);
  assert.match(String(texts[0].args[0]), /waiting/);
});

test("lissajous panel traces the rolling buffer", () => {
  const vm = populated();
  const { ctx, calls } = stubCanvas(260, 260);
  renderLissajous(ctx, vm);
  const lines = calls.filter((c) => c.op === "lineTo");
  assert.ok(lines.length >= 100, `got ${lines.length} segments`);
});

test("phase strip lifts the pen across wrap jumps", () => {
  const vm = new BenchViewModel(20.0);
  vm.attach(() => {});
  vm.handleMessage(welcome());
  // drifting difference that wraps from +pi to -pi twice
  for (let i = 0; i <= 240; i++) {
    const t = i / 60;
    const raw = 0.4 + 2.0 * t;
    const wrapped = ((raw + Math.PI) % (2 * Math.PI)) - Math.PI;
    vm.handleMessage(frame(t, { pair_delta: wrapped }));
  }
  const { ctx, calls } = stubCanvas(420, 170);
  renderPhaseStrip(ctx, vm);
  const moves = calls.filter((c) => c.op === "moveTo").length;
  // guide lines plus one pen lift per wrap
  assert.ok(moves >= 4, `expected pen lifts, got ${moves} moveTo calls`);
});

test("bit lamp states", () => {
  const vm = populated();
  const { ctx, calls } = stubCanvas(420, 80);
  renderBitLamp(ctx, vm);
  const texts = calls.filter((c) => c.op === "fillText").map((c) => String(c.args[0]));
  assert.ok(texts.some((s) => s.includes("bit = 0")));
  const vmOff = new BenchViewModel();
  const off = stubCanvas(420, 80);
  renderBitLamp(off.ctx, vmOff);
  const offTexts = off.calls.filter((c) => c.op === "fillText")
    .map((c) => String(c.args[0]));
  assert.ok(offTexts.some((s) => s.includes("no stored bit")));
});

test("disconnect banner renders on top of a frozen frame", () => {
  const vm = populated();
  vm.detach();
  const { ctx, calls } = stubCanvas(520, 520);
  renderBench(ctx, vm);
  renderDisconnectedBanner(ctx);
  const texts = calls.filter((c) => c.op === "fillText").map((c) => String(c.args[0]));
  assert.ok(texts.some((s) => s.includes("disconnected")));
  // the bench content is still there behind the banner
  assert.ok(calls.some((c) => c.op === "arc"));
});
