/**
 * Canvas rendering: top-down bench schematic plus the three side panels.
 * Pure functions of the view model; the 2D context is passed in so tests
 * can drive them with a recording stub.
 */
import { BenchViewModel } from "./viewmodel.js";

export const MARKER_COLORS: Record<string, string> = {
  red: "#e03131",
  green: "#2f9e44",
  blue: "#1971c2",
};

export function markerColor(id: string, index: number): string {
  if (id in MARKER_COLORS) return MARKER_COLORS[id];
  const fallback = ["#e03131", "#2f9e44", "#1971c2", "#f08c00"];
  return fallback[index % fallback.length];
}

/** The subset of CanvasRenderingContext2D the panels use. */
export interface Ctx2D {
  canvas: { width: number; height: number };
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  globalAlpha: number;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
  save(): void;
  restore(): void;
}

const BENCH_HALF_METERS = 0.45; // world half-extent drawn in the bench panel

function toPanel(x: number, y: number, w: number, h: number):
    [number, number] {
  const s = Math.min(w, h) / (2 * BENCH_HALF_METERS);
  return [w / 2 + x * s, h / 2 - y * s];
}

/** Top-down platform, mounts, pendulum tips, platform trail. */
export function renderBench(ctx: Ctx2D, vm: BenchViewModel): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  ctx.clearRect(0, 0, w, h);
  const frame = vm.latest;
  ctx.fillStyle = "#f8f9fa";
  ctx.fillRect(0, 0, w, h);
  if (!frame) {
    ctx.fillStyle = "#868e96";
    ctx.textAlign = "center";
    ctx.fillText("waiting for frames...", w / 2, h / 2);
    return;
  }
  // platform board, offset by its live position (exaggeration factor 1)
  const [px, py] = frame.platform.p;
  ctx.strokeStyle = "#adb5bd";
  ctx.lineWidth = 2;
  const [bx0, by0] = toPanel(px - 0.3, py + 0.25, w, h);
  const [bx1, by1] = toPanel(px + 0.3, py - 0.25, w, h);
  ctx.strokeRect(bx0, by0, bx1 - bx0, by1 - by0);

  const geometry = vm.welcome?.geometry ?? {};
  frame.metronomes.forEach((met, i) => {
    const color = markerColor(met.id, i);
    const tip = toPanel(px + met.tip[0], py + met.tip[1], w, h);
    const geo = geometry[met.id];
    const mount = toPanel(px + (geo ? geo.mount[0] : met.tip[0]),
                          py + (geo ? geo.mount[1] : met.tip[1]), w, h);
    ctx.strokeStyle = color;
    ctx.lineWidth = met.held ? 4 : 2;
    ctx.beginPath();
    ctx.moveTo(mount[0], mount[1]);
    ctx.lineTo(tip[0], tip[1]);
    ctx.stroke();
    ctx.fillStyle = met.running ? color : "#868e96";
    ctx.beginPath();
    ctx.arc(tip[0], tip[1], 7, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#495057";
    ctx.textAlign = "center";
    ctx.fillText(met.id + (met.held ? " (held)" : met.running ? "" : " (off)"),
                 tip[0], tip[1] - 12);
  });
}


/** Lissajous of the pair's swing displacements over the rolling window. */
export function renderLissajous(ctx: Ctx2D, vm: BenchViewModel): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, w, h);
  ctx.strokeStyle = "#dee2e6";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  const pair = vm.welcome?.pair;
  if (!pair || vm.tipBuffer.length < 2) return;
  const [a, b] = pair;
  const amp = Math.max(
    ...vm.tipBuffer.map((s) => Math.max(Math.abs(s.swing[a] ?? 0),
                                        Math.abs(s.swing[b] ?? 0))),
    1e-6);
  const sx = (v: number) => w / 2 + (v / amp) * (w / 2 - 8);
  const sy = (v: number) => h / 2 - (v / amp) * (h / 2 - 8);
  ctx.strokeStyle = "#845ef7";
  ctx.lineWidth = 1.2;
  ctx.beginPath();
  vm.tipBuffer.forEach((s, i) => {
    const x = sx(s.swing[a] ?? 0);
    const y = sy(s.swing[b] ?? 0);
    if (i === 0) ctx.moveTo(x, y);
    else ctx.lineTo(x, y);
  });
  ctx.stroke();
  ctx.fillStyle = "#868e96";
  ctx.textAlign = "left";
  ctx.fillText(`${a} vs ${b}`, 6, 14);
}

/** Wrapped pair phase difference as a strip chart over the window. */
export function renderPhaseStrip(ctx: Ctx2D, vm: BenchViewModel): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, w, h);
  ctx.strokeStyle = "#dee2e6";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  // zero and +-pi guide lines
  for (const frac of [0.5, 0.0, 1.0]) {
    const y = h / 2 + (frac - 0.5) * (h - 16);
    ctx.strokeStyle = frac === 0.5 ? "#ced4da" : "#f1f3f5";
    ctx.beginPath();
    ctx.moveTo(0, y);
    ctx.lineTo(w, y);
    ctx.stroke();
  }
  const buf = vm.deltaBuffer;
  if (buf.length < 2 || !vm.latest) return;
  const tEnd = vm.latest.t;
  const t0 = tEnd - vm.windowSeconds;
  const sx = (t: number) => ((t - t0) / vm.windowSeconds) * w;
  const sy = (d: number) => h / 2 - (d / Math.PI) * (h / 2 - 8);
  ctx.strokeStyle = "#e8590c";
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  let pen = false;
  for (let i = 0; i < buf.length; i++) {
    const x = sx(buf[i].t);
    const y = sy(buf[i].delta);
    // lift the pen across wrap jumps instead of drawing a vertical line
    if (pen && i > 0 && Math.abs(buf[i].delta - buf[i - 1].delta) > Math.PI) {
      pen = false;
    }
    if (!pen) {
      ctx.moveTo(x, y);
      pen = true;
    } else {
      ctx.lineTo(x, y);
    }
  }
  ctx.stroke();
  ctx.fillStyle = "#868e96";
  ctx.textAlign = "left";
  ctx.fillText("pair phase difference (rad, -pi..pi)", 6, 14);
}

/** Bit lamp plus lock summary text. */
export function renderBitLamp(ctx: Ctx2D, vm: BenchViewModel): void {
  const w = ctx.canvas.width;
  const h = ctx.canvas.height;
  ctx.clearRect(0, 0, w, h);
  ctx.fillStyle = "#ffffff";
  ctx.fillRect(0, 0, w, h);
  ctx.strokeStyle = "#dee2e6";
  ctx.strokeRect(0.5, 0.5, w - 1, h - 1);
  const bit = vm.displayedBit;
  const colors: Record<string, string> = {
    "zero": "#2f9e44", "one": "#e03131", "-": "#ced4da",
  };
  ctx.fillStyle = colors[bit] ?? "#ced4da";
  ctx.beginPath();
  ctx.arc(h / 2, h / 2, h / 3, 0, 2 * Math.PI);
  ctx.fill();
  ctx.fillStyle = "#212529";
  ctx.textAlign = "left";
  ctx.font = "16px sans-serif";
  ctx.fillText(bit === "-" ? "no stored bit" : `bit = ${bit === "one" ? 1 : 0}`,
               h, h / 2 + 5);
  const lock = vm.latest?.lock;
  ctx.font = "11px sans-serif";
  ctx.fillStyle = "#868e96";
  if (lock) {
    ctx.fillText(
      `lock ${lock.locked ? "yes" : "no"}  psi ${lock.mean_offset_psi.toFixed(2)}`
      + `  drift ${lock.drift_rate.toFixed(4)}`,
      h, h - 8);
  } else {
    ctx.fillText("lock report pending", h, h - 8);
  }
}

/** Disconnected overlay: the last frame stays up behind a banner. */
export function renderDisconnectedBanner(ctx: Ctx2D): void {
  const w = ctx.canvas.width;
  ctx.save();
  ctx.globalAlpha = 0.9;
  ctx.fillStyle = "#fff3bf";
  ctx.fillRect(0, 0, w, 26);
  ctx.fillStyle = "#862e9c";
  ctx.textAlign = "center";
  ctx.font = "13px sans-serif";
  ctx.fillText("disconnected - frozen frame", w / 2, 17);
  ctx.restore();
}
