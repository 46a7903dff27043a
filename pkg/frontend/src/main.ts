/**
 * Browser entry point: wires the view model to the page, runs the render
 * loop, and maps controls to bench actions. Grab-and-hold works by mouse
 * (or touch) down/up on a pendulum tip.
 */
import { BenchConnection } from "./socket.js";
import { BenchViewModel } from "./viewmodel.js";
import {
  Ctx2D, markerColor, renderBench, renderBitLamp, renderDisconnectedBanner,
  renderLissajous, renderPhaseStrip,
} from "./render.js";

const vm = new BenchViewModel(20.0);
const conn = new BenchConnection(
  vm, (url) => new WebSocket(url) as unknown as
    import("./socket.js").WsLike);

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing #${id}`);
  return node as T;
}

const benchCanvas = el<HTMLCanvasElement>("bench");
const lissCanvas = el<HTMLCanvasElement>("lissajous");
const stripCanvas = el<HTMLCanvasElement>("phasestrip");
const lampCanvas = el<HTMLCanvasElement>("bitlamp");
const statusLine = el<HTMLDivElement>("status");
const controlsBox = el<HTMLDivElement>("controls");

function ctx(c: HTMLCanvasElement): Ctx2D {
  return c.getContext("2d") as unknown as Ctx2D;
}

let grabbed: string | null = null;

function buildControls(): void {
  if (!vm.welcome) return;
  controlsBox.innerHTML = "";
  for (const [i, id] of vm.welcome.ids.entries()) {
    const row = document.createElement("div");
    row.className = "metrow";
    const label = document.createElement("span");
    label.textContent = id;
    label.style.color = markerColor(id, i);
    label.style.fontWeight = "bold";
    row.appendChild(label);

    const startBtn = document.createElement("button");
    startBtn.textContent = "start";
    startBtn.onclick = () => {
      vm.start(id);
      // a hand start also needs a push when at rest
      const met = vm.latest?.metronomes.find((m) => m.id === id);
      if (met && Math.abs(met.theta) < 0.02 && Math.abs(met.theta_dot) < 0.02) {
        vm.impulse(id, 8.0);
      }
    };
    row.appendChild(startBtn);

    const stopBtn = document.createElement("button");
    stopBtn.textContent = "stop";
    stopBtn.onclick = () => vm.stop(id);
    row.appendChild(stopBtn);

    const flipBtn = document.createElement("button");
    flipBtn.textContent = "flip (hold half cycle)";
    flipBtn.onclick = () => {
      flipBtn.disabled = true;
      const seq = vm.flip(id);
      if (seq === null) flipBtn.disabled = false;
      else setTimeout(() => (flipBtn.disabled = false), 1200);
    };
    row.appendChild(flipBtn);

    const nudge = document.createElement("input");
    nudge.type = "range";
    nudge.min = "0.01";
    nudge.max = "0.25";
    nudge.step = "0.01";
    nudge.value = "0.10";
    const nudgeBtn = document.createElement("button");
    nudgeBtn.textContent = "nudge 0.10 cyc";
    nudge.oninput = () => {
      nudgeBtn.textContent = `nudge ${Number(nudge.value).toFixed(2)} cyc`;
    };
    nudgeBtn.onclick = () => vm.nudge(id, Number(nudge.value));
    row.appendChild(nudgeBtn);
    row.appendChild(nudge);
    controlsBox.appendChild(row);
  }
  const speedRow = document.createElement("div");
  speedRow.className = "metrow";
  for (const s of [0, 0.5, 1, 2, 5]) {
    const b = document.createElement("button");
    b.textContent = s === 0 ? "pause" : `x${s}`;
    b.onclick = () => vm.setSpeed(s);
    speedRow.appendChild(b);
  }
  controlsBox.appendChild(speedRow);
}

benchCanvas.addEventListener("mousedown", (ev) => {
  if (!vm.latest || !vm.hasAuthority) return;
  const rect = benchCanvas.getBoundingClientRect();
  const mx = ev.clientX - rect.left;
  const my = ev.clientY - rect.top;
  // hit-test pendulum tips in panel coordinates
  const w = benchCanvas.width;
  const h = benchCanvas.height;
  const scale = Math.min(w, h) / 0.9;
  const [px, py] = vm.latest.platform.p;
  for (const met of vm.latest.metronomes) {
    const tx = w / 2 + (px + met.tip[0]) * scale;
    const ty = h / 2 - (py + met.tip[1]) * scale;
    if (Math.hypot(mx - tx, my - ty) < 14) {
      if (vm.grab(met.id) !== null) grabbed = met.id;
      return;
    }
  }
});

window.addEventListener("mouseup", () => {
  if (grabbed) {
    vm.releaseGrab(grabbed);
    grabbed = null;
  }
});

function renderLoop(): void {
  renderBench(ctx(benchCanvas), vm);
  renderLissajous(ctx(lissCanvas), vm);
  renderPhaseStrip(ctx(stripCanvas), vm);
  renderBitLamp(ctx(lampCanvas), vm);
  if (!vm.connected) {
    renderDisconnectedBanner(ctx(benchCanvas));
  }
  const auth = vm.hasAuthority ? "operator" : "viewer";
  const t = vm.latest ? vm.latest.t.toFixed(2) : "-";
  const speed = vm.latest ? `x${vm.latest.speed}` : "";
  statusLine.textContent =
    `${vm.connected ? "connected" : "DISCONNECTED"} | ${auth} | t = ${t} s ` +
    `${speed} | dropped frames: ${vm.droppedFrames}`;
  controlsBox.querySelectorAll("button").forEach((btn) => {
    (btn as HTMLButtonElement).disabled = !vm.hasAuthority;
  });
  requestAnimationFrame(renderLoop);
}

const params = new URLSearchParams(location.search);
const url = params.get("ws") ?? "ws://127.0.0.1:8765";
conn.connect(url).then(() => {
  const poll = setInterval(() => {
    if (vm.welcome) {
      buildControls();
      clearInterval(poll);
    }
  }, 50);
});
requestAnimationFrame(renderLoop);
