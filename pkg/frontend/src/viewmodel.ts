/**
 * BenchViewModel: everything the panels draw, accumulated from server
 * frames. Rolling buffers are trimmed to a fixed window; dropped frames
 * simply leave gaps (no interpolation is invented). Commands go out
 * through an injected sender so the model is transport- and DOM-free.
 */
import {
  AckMsg, BitReadingMsg, Command, ErrorMsg, LockReportMsg, ServerMsg,
  StateMsg, WelcomeMsg,
} from "./protocol.js";

export interface TipSample {
  t: number;
  tips: Record<string, [number, number]>;
  swing: Record<string, number>; // displacement along each metronome's axis
}

export interface DeltaSample {
  t: number;
  delta: number;
}

export interface PendingCommand {
  seq: number;
  command: Command;
  sentAt: number;
}

export interface SessionLogEntry {
  t: number;
  bit: string; // "zero" | "one" | "-" (lamp off)
  lock: LockReportMsg | null;
  bitReading: BitReadingMsg | null;
}

export type Sender = (msg: string) => void;

export class BenchViewModel {
  windowSeconds: number;
  connected = false;
  welcome: WelcomeMsg | null = null;
  latest: StateMsg | null = null;
  tipBuffer: TipSample[] = [];
  deltaBuffer: DeltaSample[] = [];
  acks: AckMsg[] = [];
  errors: ErrorMsg[] = [];
  sessionLog: SessionLogEntry[] = [];
  droppedFrames = 0;
  private seq = 0;
  private pending = new Map<number, PendingCommand>();
  private lastFrameT: number | null = null;
  private sender: Sender | null = null;
  /** UI hook: called whenever the displayed bit value changes. */
  onBitChange: ((value: string, t: number) => void) | null = null;

  constructor(windowSeconds = 20.0) {
    this.windowSeconds = windowSeconds;
  }

  attach(sender: Sender): void {
    this.sender = sender;
    this.connected = true;
  }

  detach(): void {
    // connection lost: freeze the last frame, keep buffers for the banner
    this.sender = null;
    this.connected = false;
  }

  get hasAuthority(): boolean {
    if (!this.welcome) return false;
    if (this.latest && this.latest.authority_holder !== null) {
      return this.latest.authority_holder === this.welcome.client_id;
    }
    return this.welcome.authority;
  }

  /** Displayed bit lamp value; "-" while unlocked or undecidable. */
  get displayedBit(): string {
    const bit = this.latest?.bit;
    if (!bit || bit.value === "undefined") return "-";
    return bit.value;
  }

  get pendingCount(): number {
    return this.pending.size;
  }

  handleMessage(msg: ServerMsg): void {
    switch (msg.type) {
      case "state":
        this.ingestFrame(msg);
        break;
      case "ack":
        if ("event" in msg && msg.event === "welcome") {
          this.welcome = msg as WelcomeMsg;
        } else {
          const ack = msg as AckMsg;
          this.acks.push(ack);
          this.pending.delete(ack.seq);
        }
        break;
      case "error":
        this.errors.push(msg);
        if (msg.seq !== null) this.pending.delete(msg.seq);
        break;
      case "report":
        break; // bit changes are tracked per frame below
    }
  }

  private ingestFrame(frame: StateMsg): void {
    const prevBit = this.displayedBit;
    if (this.lastFrameT !== null && this.welcome) {
      const gap = frame.t - this.lastFrameT;
      const step = 1.0 / this.welcome.stream_rate;
      if (gap > 1.5 * step) {
        this.droppedFrames += Math.round(gap / step) - 1;
      }
    }
    // paused frames repeat the same timestamp; keep only the newest
    if (this.lastFrameT !== null && frame.t <= this.lastFrameT) {
      this.latest = frame;
      return;
    }
    this.lastFrameT = frame.t;
    this.latest = frame;
    const tips: Record<string, [number, number]> = {};
    const swing: Record<string, number> = {};
    for (const met of frame.metronomes) {
      tips[met.id] = met.tip;
      swing[met.id] = met.swing;
    }
    this.tipBuffer.push({ t: frame.t, tips, swing });
    if (frame.pair_delta !== null) {
      this.deltaBuffer.push({ t: frame.t, delta: frame.pair_delta });
    }
    const cutoff = frame.t - this.windowSeconds;
    while (this.tipBuffer.length && this.tipBuffer[0].t < cutoff) {
      this.tipBuffer.shift();
    }
    while (this.deltaBuffer.length && this.deltaBuffer[0].t < cutoff) {
      this.deltaBuffer.shift();
    }
    this.sessionLog.push({
      t: frame.t,
      bit: this.displayedBit,
      lock: frame.lock,
      bitReading: frame.bit,
    });
    if (this.displayedBit !== prevBit && this.onBitChange) {
      this.onBitChange(this.displayedBit, frame.t);
    }
  }

  /**
   * Issue a command. Returns the sequence number, or null when the client
   * is a viewer (no authority) or disconnected; the caller disables the
   * control until the ack for the returned seq arrives.
   */
  sendAction(command: Command): number | null {
    if (!this.sender || !this.connected) return null;
    if (command.type !== "claim_authority" && !this.hasAuthority) return null;
    const seq = ++this.seq;
    this.pending.set(seq, { seq, command, sentAt: Date.now() });
    this.sender(JSON.stringify({ type: "command", seq, command }));
    return seq;
  }

  // -- canned bench actions ------------------------------------------------

  /** Mouse-down on a pendulum: grab it (open-ended hold). */
  grab(target: string): number | null {
    return this.sendAction({ type: "hold", target, params: {} });
  }

  /** Mouse-up: let go. */
  releaseGrab(target: string): number | null {
    return this.sendAction({ type: "release", target });
  }

  /** Flip button: hold for half the metronome's own cycle. */
  flip(target: string): number | null {
    return this.sendAction({ type: "delay", target, params: { fraction: 0.5 } });
  }

  /** Nudge slider: delay by a small fraction of a cycle. */
  nudge(target: string, fraction: number): number | null {
    return this.sendAction({ type: "delay", target, params: { fraction } });
  }

  start(target: string): number | null {
    return this.sendAction({ type: "start", target });
  }

  stop(target: string): number | null {
    return this.sendAction({ type: "stop", target });
  }

  impulse(target: string, dThetaDot: number): number | null {
    return this.sendAction({
      type: "impulse", target, params: { d_theta_dot: dThetaDot },
    });
  }

  setSpeed(multiplier: number): number | null {
    return this.sendAction({ type: "set_speed", params: { multiplier } });
  }

  /** Bit transitions as (t, value) pairs, for the replay comparison. */
  bitTimeline(): Array<{ t: number; value: string }> {
    const out: Array<{ t: number; value: string }> = [];
    let last: string | null = null;
    for (const entry of this.sessionLog) {
      if (entry.bit !== last) {
        out.push({ t: entry.t, value: entry.bit });
        last = entry.bit;
      }
    }
    return out;
  }
}
