/** Shared test helpers: canned server messages and a recording canvas. */
import {
  BitReadingMsg, LockReportMsg, StateMsg, WelcomeMsg,
} from "../src/protocol.js";
import { Ctx2D } from "../src/render.js";

export function welcome(overrides: Partial<WelcomeMsg> = {}): WelcomeMsg {
  return {
    type: "ack",
    event: "welcome",
    client_id: 1,
    authority: true,
    ids: ["red", "green", "blue"],
    stream_rate: 60.0,
    dt: 1e-3,
    speed: 1.0,
    pair: ["red", "green"],
    injector: "blue",
    geometry: {
      red: { mount: [-0.12, 0.10], axis: 0.0, length: 0.218 },
      green: { mount: [0.12, 0.10], axis: Math.PI / 2, length: 0.214 },
      blue: { mount: [0.0, -0.08], axis: Math.PI / 4, length: 0.062 },
    },
    ...overrides,
  };
}

export function lockMsg(psi: number, locked = true): LockReportMsg {
  return {
    locked,
    mean_offset_psi: psi,
    drift_rate: 0.0,
    window: 20.0,
    harmonic_ratio: [1, 1],
    spread: 0.02,
    spread_tol: 0.2,
    drift_tol: 0.01,
    t_end: 0.0,
  };
}

export function bitMsg(value: "zero" | "one" | "undefined",
                       psi0 = 0.0): BitReadingMsg {
  return { value, confidence: 0.5, reference_psi0: psi0 };
}

export function frame(t: number, overrides: Partial<StateMsg> = {}): StateMsg {
  const thetaR = Math.sin(2 * Math.PI * t);
  const thetaG = Math.sin(2 * Math.PI * t + 1.0);
  return {
    type: "state",
    t,
    metronomes: [
      { id: "red", theta: thetaR, theta_dot: 0, swing: 0.2 * thetaR,
        tip: [-0.12 + 0.2 * thetaR, 0.10], running: true, held: false },
      { id: "green", theta: thetaG, theta_dot: 0, swing: 0.2 * thetaG,
        tip: [0.12, 0.10 + 0.2 * thetaG], running: true, held: false },
      { id: "blue", theta: 0, theta_dot: 0, swing: 0,
        tip: [0.0, -0.08], running: false, held: false },
    ],
    platform: { p: [0, 0], v: [0, 0] },
    pair_delta: 0.3,
    lock: null,
    bit: null,
    speed: 1.0,
    authority_holder: 1,
    ...overrides,
  };
}

export interface DrawCall {
  op: string;
  args: unknown[];
}

/** Records every drawing call; enough surface for the panels. */
export function stubCanvas(width = 300, height = 200):
    { ctx: Ctx2D; calls: DrawCall[] } {
  const calls: DrawCall[] = [];
  const rec = (op: string) => (...args: unknown[]) => {
    calls.push({ op, args });
  };
  const ctx = {
    canvas: { width, height },
    fillStyle: "#000" as Ctx2D["fillStyle"],
    strokeStyle: "#000" as Ctx2D["strokeStyle"],
    lineWidth: 1,
    font: "",
    textAlign: "left" as CanvasTextAlign,
    globalAlpha: 1,
    clearRect: rec("clearRect"),
    fillRect: rec("fillRect"),
    strokeRect: rec("strokeRect"),
    beginPath: rec("beginPath"),
    moveTo: rec("moveTo"),
    lineTo: rec("lineTo"),
    arc: rec("arc"),
    stroke: rec("stroke"),
    fill: rec("fill"),
    fillText: rec("fillText"),
    save: rec("save"),
    restore: rec("restore"),
  };
  return { ctx, calls };
}
