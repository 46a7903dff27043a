/**
 * Wire types for the bench server (one JSON object per websocket message).
 * Mirrors the Python side's serve protocol exactly; the UI never computes
 * physics, it renders what these messages carry.
 */

export interface MetronomeFrame {
  id: string;
  theta: number;
  theta_dot: number;
  tip: [number, number];
  /** tip displacement along the metronome's own swing axis, meters */
  swing: number;
  running: boolean;
  held: boolean;
}

export interface LockReportMsg {
  locked: boolean;
  mean_offset_psi: number;
  drift_rate: number;
  window: number;
  harmonic_ratio: [number, number];
  spread: number;
  spread_tol: number;
  drift_tol: number;
  t_end: number;
}

export interface BitReadingMsg {
  value: "zero" | "one" | "undefined";
  confidence: number;
  reference_psi0: number;
}

export interface StateMsg {
  type: "state";
  t: number;
  metronomes: MetronomeFrame[];
  platform: { p: [number, number]; v: [number, number] };
  pair_delta: number | null;
  lock: LockReportMsg | null;
  bit: BitReadingMsg | null;
  speed: number;
  authority_holder: number | null;
}

export interface MetronomeGeometry {
  mount: [number, number];
  axis: number; // swing direction angle in the platform plane, radians
  length: number;
}

export interface WelcomeMsg {
  type: "ack";
  event: "welcome";
  client_id: number;
  authority: boolean;
  ids: string[];
  stream_rate: number;
  dt: number;
  speed: number;
  pair: [string, string];
  injector: string | null;
  geometry: Record<string, MetronomeGeometry>;
}

export interface AckMsg {
  type: "ack";
  seq: number;
  applied_at: number;
}

export interface ErrorMsg {
  type: "error";
  seq: number | null;
  reason: string;
}

export interface ReportMsg {
  type: "report";
  kind: string;
  bit: BitReadingMsg | null;
  t: number;
}

export type ServerMsg = StateMsg | WelcomeMsg | AckMsg | ErrorMsg | ReportMsg;

export type CommandType =
  | "start" | "stop" | "hold" | "release" | "mirror"
  | "delay" | "impulse" | "set_speed" | "claim_authority";

export interface Command {
  type: CommandType;
  target?: string;
  params?: Record<string, number>;
}

export interface CommandMsg {
  type: "command";
  seq: number;
  command: Command;
}

export function parseServerMsg(raw: string): ServerMsg {
  return JSON.parse(raw) as ServerMsg;
}
