"""Live bench: the simulation stepped against the wall clock, streamed to
browser clients over a websocket, with experimenter commands applied at
step boundaries.

Wire protocol (one JSON object per websocket text message):

  server -> client
    {"type": "ack", "event": "welcome", "client_id", "authority",
     "ids", "stream_rate", "dt", "speed", "pair", "injector"}
    {"type": "state", "t", "metronomes": [{"id", "theta", "theta_dot",
     "tip": [x, y], "running", "held"}], "platform": {"p", "v"},
     "pair_delta", "lock", "bit", "speed", "authority_holder"}
    {"type": "ack", "seq", "applied_at"}        command acknowledged
    {"type": "error", "reason", "seq"}          command rejected
    {"type": "report", "kind": "bit_change", "bit", "t"}

  client -> server
    {"type": "command", "seq", "command": {"type": start|stop|hold|release|
     mirror|delay|impulse|set_speed|claim_authority, "target", "params"}}

Commands mutate simulation state at the next step boundary exactly as the
batch engine applies scheduled events, so a session replayed as an
EventSchedule at the acknowledged times reproduces the streamed frames.
The first connected client holds command authority; it transfers on
disconnect or on an explicit claim when free.
"""
from __future__ import annotations

import asyncio
import json
import math
import time
from dataclasses import dataclass, field

from .assembly import Assembly, StateVector
from .dynamics import precompute
from .engine import _rk4_flat
from .events import Event, EventError, apply_event, hold_duration_for
from .experiments import initial_state
from .phase import (PhaseError, decode_bit, detect_lock, phase_difference,
                    wrap_angle, zero_cross_phase)

__all__ = ["LiveBench", "ServeError"]

_ANALYSIS_INTERVAL = 0.2   # sim seconds between lock/bit refreshes
_ANALYSIS_SPAN = 25.0      # sim seconds of angle history kept per metronome


class ServeError(RuntimeError):
    pass


class LiveAnalyzer:
    """Rolling lock/bit analysis over streamed angle frames.

    Keeps a trailing window of per-metronome angles at the stream rate,
    re-extracts the pair's crossing phases every ``interval`` simulated
    seconds, and captures the decode reference at the first lock seen
    while the injector runs. The batch replay checker drives this same
    class over trajectory samples, so live and replayed bit timelines
    are comparable frame for frame.
    """

    def __init__(self, assembly: Assembly, pair: tuple[str, str],
                 injector: str | None, stream_rate: float,
                 span: float = _ANALYSIS_SPAN,
                 interval: float = _ANALYSIS_INTERVAL):
        self.assembly = assembly
        self.pair = pair
        self.injector = injector
        self.stream_rate = stream_rate
        self.span = span
        self.interval = interval
        self._ia = assembly.index_of(pair[0])
        self._ib = assembly.index_of(pair[1])
        self._iinj = assembly.index_of(injector) if injector else None
        self._hist: list[tuple[float, list[float]]] = []
        self._next_refresh = 0.0
        self.lock = None
        self.bit = None
        self.pair_delta = None
        self.psi0: float | None = None

    def add_frame(self, t: float, thetas: list[float],
                  running: list[bool]) -> None:
        self._hist.append((t, list(thetas)))
        while self._hist and self._hist[0][0] < t - self.span:
            self._hist.pop(0)
        if t >= self._next_refresh - 1e-12:
            self._refresh(running)
            self._next_refresh = t + self.interval

    def _refresh(self, running: list[bool]) -> None:
        times = [h[0] for h in self._hist]
        if not times or times[-1] - times[0] < 21.0:
            return
        try:
            pa = zero_cross_phase([h[1][self._ia] for h in self._hist],
                                  self.stream_rate, t0=times[0],
                                  source_id=self.pair[0])
            pb = zero_cross_phase([h[1][self._ib] for h in self._hist],
                                  self.stream_rate, t0=times[0],
                                  source_id=self.pair[1])
            diff = phase_difference(pa, pb, (1, 1))
            rep = detect_lock(diff)
        except PhaseError:
            self.lock = None
            self.bit = None
            return
        self.lock = rep
        self.pair_delta = float(wrap_angle(float(diff.values[-1])))
        injector_on = True if self._iinj is None else running[self._iinj]
        if rep.locked and injector_on and self.psi0 is None:
            self.psi0 = rep.mean_offset_psi
        if rep.locked and self.psi0 is not None:
            self.bit = decode_bit(rep, self.psi0)
        else:
            self.bit = None


@dataclass
class _Client:
    ws: object
    client_id: int


class LiveBench:
    """One simulation loop, many viewers, single command authority."""

    def __init__(self, assembly: Assembly, initial: StateVector | None = None,
                 seed: int = 0, dt: float = 1e-3, stream_rate: float = 60.0,
                 speed: float = 1.0, t_end: float | None = None,
                 pair: tuple[str, str] | None = None,
                 injector: str | None = None):
        self.assembly = assembly
        self.con = precompute(assembly)
        st = initial if initial is not None else initial_state(assembly, seed)
        st.validate(assembly)
        self.dt = dt
        self.stream_rate = stream_rate
        self.speed = speed
        self.t_end = t_end
        ids = assembly.ids
        self.pair = pair or (ids[0], ids[1] if len(ids) > 1 else ids[0])
        self.injector = injector or (ids[2] if len(ids) > 2 else None)

        self.t = 0.0
        self.step_index = 0
        self.th = list(st.theta)
        self.td = list(st.theta_dot)
        self.px, self.py = st.platform_pos
        self.vx, self.vy = st.platform_vel
        self.held = list(st.held)
        self.running = list(st.running)
        self._prev = None  # previous boundary flat state for interpolation

        self._auto_release: list[tuple[int, Event]] = []
        self._commands: asyncio.Queue = asyncio.Queue()
        self._clients: dict[int, _Client] = {}
        self._next_client_id = 1
        self._authority: int | None = None
        self._frame_index = 0
        self.analyzer = LiveAnalyzer(assembly, self.pair, self.injector,
                                     stream_rate)
        self._last_frame = None
        self._stop = asyncio.Event()
        self._server = None
        self.port = None

    # -- simulation core ---------------------------------------------------

    def _apply_command(self, client_id, seq, cmd) -> dict:
        """Apply one command at the current boundary; returns the reply."""
        ctype = cmd.get("type")
        target = cmd.get("target")
        params = cmd.get("params") or {}
        if ctype == "claim_authority":
            if self._authority is None or self._authority not in self._clients:
                self._authority = client_id
                return {"type": "ack", "seq": seq, "applied_at": self.t,
                        "authority": True}
            return {"type": "error", "seq": seq,
                    "reason": "authority is held by another client"}
        if self._authority != client_id:
            return {"type": "error", "seq": seq,
                    "reason": "no command authority (viewer-only client)"}
        if ctype == "set_speed":
            mult = params.get("multiplier")
            if not isinstance(mult, (int, float)) or mult < 0:
                return {"type": "error", "seq": seq,
                        "reason": "set_speed needs params.multiplier >= 0"}
            self.speed = float(mult)
            return {"type": "ack", "seq": seq, "applied_at": self.t}
        try:
            if ctype in ("start", "stop", "mirror", "release"):
                ev = Event(self.t, target, ctype)
            elif ctype == "impulse":
                ev = Event(self.t, target, "impulse",
                           d_theta_dot=float(params.get("d_theta_dot", 0.0)))
            elif ctype == "hold":
                dur = params.get("duration")
                ev = Event(self.t, target, "hold",
                           duration=float(dur) if dur is not None else None)
            elif ctype == "delay":
                frac = float(params.get("fraction", 0.0))
                ev = Event(self.t, target, "delay", fraction=frac)
            else:
                return {"type": "error", "seq": seq,
                        "reason": f"unknown command type {ctype!r}"}
            state = StateVector(self.th, self.td, (self.px, self.py),
                                (self.vx, self.vy), self.held, self.running)
            state = apply_event(self.assembly, state, ev)
            self.th, self.td = state.theta, state.theta_dot
            self.px, self.py = state.platform_pos
            self.vx, self.vy = state.platform_vel
            self.held, self.running = state.held, state.running
            if ev.kind in ("hold", "delay"):
                dur = ev.duration
                if ev.kind == "delay":
                    dur = hold_duration_for(self.assembly, target, ev.fraction)
                if dur is not None:
                    k_rel = self.step_index + max(round(dur / self.dt), 1)
                    self._auto_release.append(
                        (k_rel, Event(self.t + dur, target, "release")))
            return {"type": "ack", "seq": seq, "applied_at": self.t}
        except (EventError, KeyError, ValueError) as exc:
            return {"type": "error", "seq": seq, "reason": str(exc)}

    def _drain_commands(self):
        replies = []
        while not self._commands.empty():
            client_id, seq, cmd = self._commands.get_nowait()
            replies.append((client_id, self._apply_command(client_id, seq, cmd)))
        return replies

    def _release_due(self):
        due = [e for e in self._auto_release if e[0] <= self.step_index]
        if not due:
            return
        self._auto_release = [e for e in self._auto_release if e[0] > self.step_index]
        for _, ev in due:
            state = StateVector(self.th, self.td, (self.px, self.py),
                                (self.vx, self.vy), self.held, self.running)
            try:
                state = apply_event(self.assembly, state, ev)
            except EventError:
                continue  # already released by an explicit command
            self.th, self.td = state.theta, state.theta_dot
            self.held, self.running = state.held, state.running

    def _step_once(self):
        self._prev = (list(self.th), list(self.td), self.px, self.py,
                      self.vx, self.vy)
        (self.th, self.td, self.px, self.py, self.vx, self.vy) = _rk4_flat(
            self.con, self.th, self.td, self.px, self.py, self.vx, self.vy,
            self.running, self.held, self.dt)
        self.step_index += 1
        self.t = self.step_index * self.dt

    # -- framing -----------------------------------------------------------

    def _frame_payload(self, t, th, td, px, py, vx, vy):
        mets = []
        for i, met in enumerate(self.assembly.metronomes):
            ux, uy = met.swing_unit
            disp = met.length_L * math.sin(th[i])
            mets.append({
                "id": met.id, "theta": th[i], "theta_dot": td[i],
                "tip": [met.mount_position[0] + disp * ux,
                        met.mount_position[1] + disp * uy],
                "swing": disp,
                "running": self.running[i], "held": self.held[i]})
        return {
            "type": "state", "t": t,
            "metronomes": mets,
            "platform": {"p": [px, py], "v": [vx, vy]},
            "pair_delta": self.analyzer.pair_delta,
            "lock": self.analyzer.lock.to_dict() if self.analyzer.lock else None,
            "bit": self.analyzer.bit.to_dict() if self.analyzer.bit else None,
            "speed": self.speed,
            "authority_holder": self._authority,
        }

    def _make_frame(self, ft, th, td, px, py, vx, vy):
        self.analyzer.add_frame(ft, th, self.running)
        self._frame_index += 1
        return self._frame_payload(ft, th, td, px, py, vx, vy)

    def _boundary_frame(self):
        """Frame exactly at the current boundary, if one is due (emitted
        after boundary events so it shows the post-command state)."""
        ft = self._frame_index / self.stream_rate
        if abs(ft - self.t) <= 1e-9:
            return self._make_frame(ft, self.th, self.td, self.px, self.py,
                                    self.vx, self.vy)
        return None

    def _interior_frames(self):
        """Frames strictly inside the step interval just completed."""
        frames = []
        while True:
            ft = self._frame_index / self.stream_rate
            if ft >= self.t - 1e-9:
                break
            f = (ft - (self.t - self.dt)) / self.dt
            g = 1.0 - f
            pth, ptd, ppx, ppy, pvx, pvy = self._prev
            th = [g * pth[i] + f * self.th[i] for i in range(len(self.th))]
            td = [g * ptd[i] + f * self.td[i] for i in range(len(self.td))]
            frames.append(self._make_frame(
                ft, th, td,
                g * ppx + f * self.px, g * ppy + f * self.py,
                g * pvx + f * self.vx, g * pvy + f * self.vy))
        return frames

    # -- networking --------------------------------------------------------

    async def _broadcast(self, payload: dict):
        if not self._clients:
            if payload.get("type") == "state":
                self._last_frame = payload
            return
        msg = json.dumps(payload)
        if payload.get("type") == "state":
            self._last_frame = payload
        stale = []
        for cid, client in list(self._clients.items()):
            try:
                await client.ws.send(msg)
            except Exception:
                stale.append(cid)
        for cid in stale:
            self._drop_client(cid)

    def _drop_client(self, cid):
        self._clients.pop(cid, None)
        if self._authority == cid:
            self._authority = min(self._clients) if self._clients else None

    async def _handler(self, ws):
        cid = self._next_client_id
        self._next_client_id += 1
        self._clients[cid] = _Client(ws=ws, client_id=cid)
        if self._authority is None:
            self._authority = cid
        hello = {
            "type": "ack", "event": "welcome", "client_id": cid,
            "authority": self._authority == cid,
            "ids": list(self.assembly.ids),
            "stream_rate": self.stream_rate, "dt": self.dt,
            "speed": self.speed, "pair": list(self.pair),
            "injector": self.injector,
            "geometry": {
                m.id: {"mount": list(m.mount_position),
                       "axis": m.orientation_alpha,
                       "length": m.length_L}
                for m in self.assembly.metronomes},
        }
        await ws.send(json.dumps(hello))
        if self._last_frame is not None:
            await ws.send(json.dumps(self._last_frame))
        try:
            async for raw in ws:
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    await ws.send(json.dumps(
                        {"type": "error", "reason": "malformed JSON", "seq": None}))
                    continue
                if msg.get("type") != "command" or "command" not in msg:
                    await ws.send(json.dumps(
                        {"type": "error", "seq": msg.get("seq"),
                         "reason": "expected {type: 'command', command: {...}}"}))
                    continue
                await self._commands.put((cid, msg.get("seq"), msg["command"]))
        finally:
            self._drop_client(cid)

    async def _send_to(self, cid, payload):
        client = self._clients.get(cid)
        if client is None:
            return
        try:
            await client.ws.send(json.dumps(payload))
        except Exception:
            self._drop_client(cid)

    async def _emit(self, frames):
        for frame in frames:
            bit = frame.get("bit")
            value = bit["value"] if bit else None
            if value != self._last_bit_value:
                await self._broadcast({"type": "report", "kind": "bit_change",
                                       "bit": bit, "t": frame["t"]})
                self._last_bit_value = value
            await self._broadcast(frame)

    async def _sim_loop(self):
        wall_anchor = time.monotonic()
        sim_anchor = self.t
        self._last_bit_value = None
        # boundary 0: commands may already be queued; frame 0 is due
        self._release_due()
        for cid, reply in self._drain_commands():
            await self._send_to(cid, reply)
        frame0 = self._boundary_frame()
        if frame0 is not None:
            await self._emit([frame0])
        while not self._stop.is_set():
            if self.t_end is not None and self.t >= self.t_end - 1e-12:
                for cid, reply in self._drain_commands():
                    await self._send_to(cid, reply)
                await asyncio.sleep(0.02)
                continue
            if self.speed <= 0.0:
                for cid, reply in self._drain_commands():
                    await self._send_to(cid, reply)
                if self._last_frame is not None:
                    await self._broadcast(dict(self._last_frame, speed=self.speed))
                await asyncio.sleep(1.0 / self.stream_rate)
                wall_anchor = time.monotonic()
                sim_anchor = self.t
                continue

            self._step_once()
            interior = self._interior_frames()
            # boundary events: auto releases, then queued commands, in
            # arrival order; the boundary frame then shows their effect
            self._release_due()
            replies = self._drain_commands()
            boundary = self._boundary_frame()
            await self._emit(interior + ([boundary] if boundary else []))
            for cid, reply in replies:
                await self._send_to(cid, reply)
            if self.speed <= 0.0:
                continue  # paused mid-iteration by set_speed
            # wall pacing: sim time advances at `speed` x real time
            target_wall = wall_anchor + (self.t - sim_anchor) / self.speed
            delay = target_wall - time.monotonic()
            if delay > 0.002:
                await asyncio.sleep(delay)
            elif delay < -0.5:
                wall_anchor = time.monotonic()  # fell behind; re-anchor
                sim_anchor = self.t
            else:
                # yield so client messages can arrive between steps
                if self.step_index % 64 == 0:
                    await asyncio.sleep(0)

    async def start(self, port: int = 8765, host: str = "127.0.0.1"):
        import websockets
        try:
            self._server = await websockets.serve(self._handler, host, port)
        except OSError as exc:
            raise ServeError(f"cannot bind port {port}: {exc}") from exc
        self.port = port
        self._task = asyncio.create_task(self._sim_loop())

    async def stop(self):
        self._stop.set()
        if self._task:
            await self._task
        if self._server:
            self._server.close()
            await self._server.wait_closed()

    async def run_forever(self, port: int = 8765, host: str = "127.0.0.1"):
        await self.start(port, host)
        try:
            await asyncio.Future()
        except asyncio.CancelledError:
            pass
        finally:
            await self.stop()
