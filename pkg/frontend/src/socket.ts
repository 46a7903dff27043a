/**
 * Thin connection wrapper. The websocket constructor is injected so the
 * browser passes the global WebSocket and node tests pass `ws`.
 */
import { parseServerMsg, ServerMsg } from "./protocol.js";
import { BenchViewModel } from "./viewmodel.js";

export interface WsLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onerror: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
}

export type WsFactory = (url: string) => WsLike;

export class BenchConnection {
  private ws: WsLike | null = null;

  constructor(private vm: BenchViewModel, private factory: WsFactory) {}

  connect(url: string): Promise<void> {
    return new Promise((resolve, reject) => {
      const ws = this.factory(url);
      this.ws = ws;
      ws.onopen = () => {
        this.vm.attach((msg) => ws.send(msg));
        resolve();
      };
      ws.onerror = (ev) => {
        if (!this.vm.connected) reject(new Error(`connect failed: ${ev}`));
      };
      ws.onclose = () => {
        this.vm.detach();
      };
      ws.onmessage = (ev) => {
        const raw = typeof ev.data === "string" ? ev.data : String(ev.data);
        let msg: ServerMsg;
        try {
          msg = parseServerMsg(raw);
        } catch {
          return; // ignore unparseable frames
        }
        this.vm.handleMessage(msg);
      };
    });
  }

  close(): void {
    this.ws?.close();
  }
}
