"""Live bench protocol tests.

The equivalence test scripts a session at high speed, records every state
frame and command acknowledgement, replays the acked commands as a batch
EventSchedule, and compares the streamed frames against the batch samples
component by component.
"""
import asyncio
import json
import math
import socket

import numpy as np
import pytest

from metrolatch import (AssemblyConfig, Event, EventSchedule, build_assembly,
                        integrate)
from metrolatch.experiments import initial_state
from metrolatch.serve import LiveBench, ServeError


def free_port():
    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        return s.getsockname()[1]


class Client:
    def __init__(self, port):
        self.port = port
        self.frames = []
        self.acks = {}
        self.errors = []
        self.reports = []
        self.welcome = None
        self._seq = 0

    async def __aenter__(self):
        import websockets
        self.ws = await websockets.connect(f"ws://127.0.0.1:{self.port}")
        raw = await self.ws.recv()
        self.welcome = json.loads(raw)
        assert self.welcome.get("event") == "welcome"
        self._reader = asyncio.create_task(self._read())
        return self

    async def _read(self):
        try:
            async for raw in self.ws:
                msg = json.loads(raw)
                kind = msg.get("type")
                if kind == "state":
                    self.frames.append(msg)
                elif kind == "ack":
                    self.acks[msg.get("seq")] = msg
                elif kind == "error":
                    self.errors.append(msg)
                elif kind == "report":
                    self.reports.append(msg)
        except Exception:
            pass

    async def send(self, command, wait_ack=True, timeout=30.0):
        self._seq += 1
        seq = self._seq
        await self.ws.send(json.dumps(
            {"type": "command", "seq": seq, "command": command}))
        if not wait_ack:
            return seq
        deadline = asyncio.get_event_loop().time() + timeout
        while asyncio.get_event_loop().time() < deadline:
            if seq in self.acks:
                return self.acks[seq]
            if any(e.get("seq") == seq for e in self.errors):
                return next(e for e in self.errors if e.get("seq") == seq)
            await asyncio.sleep(0.005)
        raise TimeoutError(f"no ack for seq {seq}")

    async def wait_sim_time(self, t, timeout=60.0):
        deadline = asyncio.get_event_loop().time() + timeout
        while asyncio.get_event_loop().time() < deadline:
            if self.frames and self.frames[-1]["t"] >= t - 1e-9:
                return
            await asyncio.sleep(0.01)
        raise TimeoutError(f"sim never reached t={t}")

    async def __aexit__(self, *exc):
        self._reader.cancel()
        await self.ws.close()


@pytest.fixture(scope="module")
def bench_assembly():
    return build_assembly(AssemblyConfig(preset="paper_latch", seed=5))


def run(coro):
    return asyncio.run(coro)


def test_port_busy_reported(bench_assembly):
    async def main():
        port = free_port()
        a = LiveBench(bench_assembly, seed=5, t_end=1.0, speed=0.0)
        await a.start(port)
        b = LiveBench(bench_assembly, seed=5, t_end=1.0, speed=0.0)
        with pytest.raises(ServeError, match="port"):
            await b.start(port)
        await a.stop()
    run(main())


def test_scripted_session_matches_batch(bench_assembly):
    t_end = 8.0
    speed = 40.0

    async def main():
        port = free_port()
        bench = LiveBench(bench_assembly, seed=5, dt=1e-3, stream_rate=60.0,
                          speed=0.0, t_end=t_end)
        await bench.start(port)
        try:
            async with Client(port) as cli:
                await cli.send({"type": "set_speed",
                                "params": {"multiplier": speed}})
                await cli.wait_sim_time(1.0)
                a1 = await cli.send({"type": "hold", "target": "green",
                                     "params": {"duration": 0.8}})
                await cli.wait_sim_time(a1["applied_at"] + 1.2)
                a2 = await cli.send({"type": "mirror", "target": "red"})
                await cli.wait_sim_time(a2["applied_at"] + 0.5)
                a3 = await cli.send({"type": "impulse", "target": "red",
                                     "params": {"d_theta_dot": 0.4}})
                a4 = await cli.send({"type": "hold", "target": "green",
                                     "params": {}})  # grab, no duration
                await cli.wait_sim_time(a4["applied_at"] + 0.7)
                a5 = await cli.send({"type": "release", "target": "green"})
                a6 = await cli.send({"type": "delay", "target": "red",
                                     "params": {"fraction": 0.2}})
                await cli.wait_sim_time(t_end)
                return cli.frames, [a1, a2, a3, a4, a5, a6]
        finally:
            await bench.stop()

    frames, acks = run(main())
    for ack in acks:
        assert ack["type"] == "ack", ack
    events = [
        Event(acks[0]["applied_at"], "green", "hold", duration=0.8),
        Event(acks[1]["applied_at"], "red", "mirror"),
        Event(acks[2]["applied_at"], "red", "impulse", d_theta_dot=0.4),
        Event(acks[3]["applied_at"], "green", "hold",
              duration=acks[4]["applied_at"] - acks[3]["applied_at"]),
        Event(acks[5]["applied_at"], "red", "delay", fraction=0.2),
    ]
    traj = integrate(bench_assembly, initial_state(bench_assembly, 5),
                     EventSchedule(tuple(events)), 0.0, t_end, 1e-3, 60.0)

    by_t = {round(f["t"] * 60): f for f in frames}
    assert len(by_t) == len(traj.times), "missing frames"
    worst = 0.0
    for j, t in enumerate(traj.times):
        frame = by_t[round(t * 60)]
        for i, met in enumerate(frame["metronomes"]):
            worst = max(worst, abs(met["theta"] - traj.theta[j, i]),
                        abs(met["theta_dot"] - traj.theta_dot[j, i]))
            assert met["held"] == bool(traj.held[j, i])
            assert met["running"] == bool(traj.running[j, i])
        worst = max(worst,
                    abs(frame["platform"]["p"][0] - traj.platform_pos[j, 0]),
                    abs(frame["platform"]["p"][1] - traj.platform_pos[j, 1]),
                    abs(frame["platform"]["v"][0] - traj.platform_vel[j, 0]),
                    abs(frame["platform"]["v"][1] - traj.platform_vel[j, 1]))
    assert worst <= 1e-9, f"serve/batch deviation {worst}"


def test_viewer_without_authority_rejected(bench_assembly):
    async def main():
        port = free_port()
        bench = LiveBench(bench_assembly, seed=5, speed=1.0, t_end=5.0)
        await bench.start(port)
        try:
            async with Client(port) as owner:
                async with Client(port) as viewer:
                    assert owner.welcome["authority"] is True
                    assert viewer.welcome["authority"] is False
                    reply = await viewer.send({"type": "mirror", "target": "red"})
                    assert reply["type"] == "error"
                    assert "authority" in reply["reason"]
                    # the owner's command still lands
                    reply = await owner.send({"type": "mirror", "target": "red"})
                    assert reply["type"] == "ack"
        finally:
            await bench.stop()
    run(main())


def test_speed_zero_pauses_and_repeats_frames(bench_assembly):
    async def main():
        port = free_port()
        bench = LiveBench(bench_assembly, seed=5, speed=2.0, t_end=30.0)
        await bench.start(port)
        try:
            async with Client(port) as cli:
                await cli.wait_sim_time(0.5)
                reply = await cli.send({"type": "set_speed",
                                        "params": {"multiplier": 0.0}})
                assert reply["type"] == "ack"
                await asyncio.sleep(0.3)
                n0 = len(cli.frames)
                t0 = cli.frames[-1]["t"]
                await asyncio.sleep(0.5)
                # frames keep arriving but sim time stands still
                assert len(cli.frames) > n0
                assert cli.frames[-1]["t"] == t0
                reply = await cli.send({"type": "set_speed",
                                        "params": {"multiplier": 5.0}})
                await cli.wait_sim_time(t0 + 0.5)
        finally:
            await bench.stop()
    run(main())


def test_malformed_command_rejected_session_continues(bench_assembly):
    async def main():
        port = free_port()
        bench = LiveBench(bench_assembly, seed=5, speed=5.0, t_end=20.0)
        await bench.start(port)
        try:
            async with Client(port) as cli:
                await cli.ws.send("this is not json")
                await cli.ws.send(json.dumps({"type": "state"}))
                reply = await cli.send({"type": "wiggle", "target": "red"})
                assert reply["type"] == "error"
                reply = await cli.send({"type": "hold", "target": "nobody",
                                        "params": {"duration": 1.0}})
                assert reply["type"] == "error"
                # still alive and commandable
                reply = await cli.send({"type": "mirror", "target": "red"})
                assert reply["type"] == "ack"
                assert len(cli.errors) >= 3
        finally:
            await bench.stop()
    run(main())


def test_live_bit_reading_appears(bench_assembly):
    # run far enough that the pair locks and the latch reference is set;
    # speed is high so this stays quick in wall time
    async def main():
        port = free_port()
        bench = LiveBench(bench_assembly, seed=5, dt=1e-3, speed=0.0, t_end=80.0)
        await bench.start(port)
        try:
            async with Client(port) as cli:
                await cli.send({"type": "start", "target": "blue"})
                kick = 2 * 0.65 * 2 * math.pi * 1.79
                await cli.send({"type": "impulse", "target": "blue",
                                "params": {"d_theta_dot": kick}})
                await cli.send({"type": "set_speed",
                                "params": {"multiplier": 100.0}})
                await cli.wait_sim_time(80.0, timeout=120.0)
                bits = [f["bit"] for f in cli.frames if f["bit"]]
                assert bits, "no live bit reading appeared"
                assert bits[-1]["value"] in ("zero", "one")
                locks = [f["lock"] for f in cli.frames if f["lock"]]
                assert any(l["locked"] for l in locks)
        finally:
            await bench.stop()
    run(main())
