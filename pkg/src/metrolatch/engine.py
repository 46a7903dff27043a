"""Fixed-step RK4 integration with an event schedule.

Determinism contract: identical inputs produce bit-identical trajectories.
Events snap to the nearest step boundary (timing error at most dt/2) and
are applied in schedule order before the step that leaves the boundary.
Samples are taken at exact uniform instants by linear interpolation
between step states, so a sample landing on a boundary reports the
post-event state.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .assembly import Assembly, StateVector
from .dynamics import eval_rhs, precompute
from .events import Event, EventError, EventSchedule, apply_event, hold_duration_for

__all__ = ["Trajectory", "integrate", "rk4_step", "IntegrationError"]


class IntegrationError(RuntimeError):
    """Non-finite state or inconsistent integration request."""


@dataclass(frozen=True)
class Trajectory:
    """Uniformly sampled run: angles, platform motion, flags, tip positions.

    Arrays are indexed [sample, metronome]; ``tip`` is [sample, metronome,
    xy] in the platform frame. ``final_state`` is the exact state at t1 on
    the step grid, suitable for chaining follow-on integrations.
    """

    assembly: Assembly
    sample_rate: float
    t0: float
    times: np.ndarray
    theta: np.ndarray
    theta_dot: np.ndarray
    platform_pos: np.ndarray
    platform_vel: np.ndarray
    held: np.ndarray
    running: np.ndarray
    final_state: StateVector

    @property
    def ids(self) -> tuple[str, ...]:
        return self.assembly.ids

    def column(self, met_id: str) -> np.ndarray:
        return self.theta[:, self.assembly.index_of(met_id)]

    @property
    def tip(self) -> np.ndarray:
        n_s, n_m = self.theta.shape
        out = np.empty((n_s, n_m, 2))
        for j, met in enumerate(self.assembly.metronomes):
            ux, uy = met.swing_unit
            disp = met.length_L * np.sin(self.theta[:, j])
            out[:, j, 0] = met.mount_position[0] + disp * ux
            out[:, j, 1] = met.mount_position[1] + disp * uy
        return out

    def swing_displacement(self, met_id: str) -> np.ndarray:
        """Tip displacement along the metronome's own swing axis."""
        j = self.assembly.index_of(met_id)
        met = self.assembly.metronomes[j]
        return met.length_L * np.sin(self.theta[:, j])

    def concat(self, other: "Trajectory") -> "Trajectory":
        """Join a follow-on trajectory whose t0 equals this one's end."""
        if other.sample_rate != self.sample_rate:
            raise IntegrationError("sample rates differ")
        if abs(other.times[0] - self.times[-1]) > 1e-9:
            raise IntegrationError("trajectories are not contiguous")
        cat = lambda a, b: np.concatenate([a, b[1:]], axis=0)
        return Trajectory(
            assembly=self.assembly, sample_rate=self.sample_rate, t0=self.t0,
            times=cat(self.times, other.times),
            theta=cat(self.theta, other.theta),
            theta_dot=cat(self.theta_dot, other.theta_dot),
            platform_pos=cat(self.platform_pos, other.platform_pos),
            platform_vel=cat(self.platform_vel, other.platform_vel),
            held=cat(self.held, other.held),
            running=cat(self.running, other.running),
            final_state=other.final_state,
        )


def _rk4_flat(con, th, td, px, py, vx, vy, running, held, dt):
    """One classical RK4 step on flat state; returns new flat state.

    Held metronomes are frozen exactly (their stage derivatives are zero
    inside eval_rhs and their theta/theta_dot are pinned afterwards).
    """
    n = len(th)
    half = 0.5 * dt
    sixth = dt / 6.0

    a1, ax1, ay1 = eval_rhs(con, th, td, vx, vy, running, held)
    th2 = [0.0] * n
    td2 = [0.0] * n
    for i in range(n):
        if held[i]:
            th2[i] = th[i]
        else:
            th2[i] = th[i] + half * td[i]
            td2[i] = td[i] + half * a1[i]
    vx2 = vx + half * ax1
    vy2 = vy + half * ay1

    a2, ax2, ay2 = eval_rhs(con, th2, td2, vx2, vy2, running, held)
    th3 = [0.0] * n
    td3 = [0.0] * n
    for i in range(n):
        if held[i]:
            th3[i] = th[i]
        else:
            th3[i] = th[i] + half * td2[i]
            td3[i] = td[i] + half * a2[i]
    vx3 = vx + half * ax2
    vy3 = vy + half * ay2

    a3, ax3, ay3 = eval_rhs(con, th3, td3, vx3, vy3, running, held)
    th4 = [0.0] * n
    td4 = [0.0] * n
    for i in range(n):
        if held[i]:
            th4[i] = th[i]
        else:
            th4[i] = th[i] + dt * td3[i]
            td4[i] = td[i] + dt * a3[i]
    vx4 = vx + dt * ax3
    vy4 = vy + dt * ay3

    a4, ax4, ay4 = eval_rhs(con, th4, td4, vx4, vy4, running, held)
    nth = list(th)
    ntd = list(td)
    for i in range(n):
        if held[i]:
            continue
        nth[i] = th[i] + sixth * (td[i] + 2.0 * td2[i] + 2.0 * td3[i] + td4[i])
        ntd[i] = td[i] + sixth * (a1[i] + 2.0 * a2[i] + 2.0 * a3[i] + a4[i])
    npx = px + sixth * (vx + 2.0 * vx2 + 2.0 * vx3 + vx4)
    npy = py + sixth * (vy + 2.0 * vy2 + 2.0 * vy3 + vy4)
    nvx = vx + sixth * (ax1 + 2.0 * ax2 + 2.0 * ax3 + ax4)
    nvy = vy + sixth * (ay1 + 2.0 * ay2 + 2.0 * ay3 + ay4)
    return nth, ntd, npx, npy, nvx, nvy


def rk4_step(assembly: Assembly, state: StateVector, t: float, dt: float) -> StateVector:
    """Advance one step of size dt; hold constraints re-enforced exactly."""
    if dt <= 0.0:
        raise IntegrationError("dt must be > 0")
    state.validate(assembly)
    con = precompute(assembly)
    nth, ntd, npx, npy, nvx, nvy = _rk4_flat(
        con, state.theta, state.theta_dot,
        state.platform_pos[0], state.platform_pos[1],
        state.platform_vel[0], state.platform_vel[1],
        state.running, state.held, dt)
    for x in (npx, npy, nvx, nvy):
        if not math.isfinite(x):
            raise IntegrationError("non-finite platform state after step")
    out = StateVector(nth, ntd, (npx, npy), (nvx, nvy),
                      list(state.held), list(state.running))
    out.validate(assembly)
    return out


def _expand_schedule(assembly, schedule, t0, t1, dt):
    """Snap events to step indexes; expand hold/delay into hold+release.

    Returns {step_index: [(order, Event), ...]} with stable ordering.
    """
    n_steps = round((t1 - t0) / dt)
    by_step: dict[int, list] = {}
    order = 0

    def put(k, ev):
        nonlocal order
        by_step.setdefault(k, []).append((order, ev))
        order += 1

    for ev in schedule:
        if ev.time < t0 - 1e-12 or ev.time > t1 + 1e-12:
            raise EventError(
                f"event at t={ev.time} outside integration window [{t0}, {t1}]")
        k = min(max(round((ev.time - t0) / dt), 0), n_steps)
        if ev.kind in ("hold", "delay"):
            dur = ev.duration
            if ev.kind == "delay":
                dur = hold_duration_for(assembly, ev.target, ev.fraction)
            if dur is None:
                raise EventError("hold events inside a schedule need a duration")
            put(k, Event(ev.time, ev.target, "hold", duration=dur))
            k_rel = min(max(round((ev.time + dur - t0) / dt), 0), n_steps)
            if k_rel <= k:
                k_rel = k + 1  # a hold always covers at least one step
            put(k_rel, Event(ev.time + dur, ev.target, "release"))
        else:
            put(k, ev)
    return by_step, n_steps


def integrate(assembly: Assembly, initial: StateVector,
              schedule: EventSchedule | None = None,
              t0: float = 0.0, t1: float = 10.0, dt: float = 1e-3,
              sample_rate: float = 60.0) -> Trajectory:
    """Integrate over [t0, t1], applying scheduled events, sampling uniformly.

    Requires (t1 - t0) to be an integer number of steps and
    dt <= 1/(2*sample_rate) so samples never straddle more than one step.
    """
    if dt <= 0.0:
        raise IntegrationError("dt must be > 0")
    if t1 <= t0:
        raise IntegrationError("t1 must be > t0")
    if dt > 1.0 / (2.0 * sample_rate) + 1e-15:
        raise IntegrationError("dt must be <= 1/(2*sample_rate)")
    span = t1 - t0
    n_steps = round(span / dt)
    if abs(n_steps * dt - span) > 1e-9:
        raise IntegrationError(
            f"(t1 - t0) = {span} is not an integer multiple of dt = {dt}")
    initial.validate(assembly)
    schedule = schedule or EventSchedule()
    by_step, _ = _expand_schedule(assembly, schedule, t0, t1, dt)

    con = precompute(assembly)
    n_met = len(assembly.metronomes)
    n_samples = math.floor(span * sample_rate + 1e-9) + 1
    sample_times = t0 + np.arange(n_samples) / sample_rate

    times = np.empty(n_samples)
    theta = np.empty((n_samples, n_met))
    theta_dot = np.empty((n_samples, n_met))
    platform_pos = np.empty((n_samples, 2))
    platform_vel = np.empty((n_samples, 2))
    held_arr = np.empty((n_samples, n_met), dtype=bool)
    running_arr = np.empty((n_samples, n_met), dtype=bool)

    state = initial.copy()
    th = list(state.theta)
    td = list(state.theta_dot)
    px, py = state.platform_pos
    vx, vy = state.platform_vel
    held = list(state.held)
    running = list(state.running)

    def apply_at(k):
        nonlocal th, td, px, py, vx, vy, held, running
        for _, ev in by_step.get(k, ()):
            s = StateVector(th, td, (px, py), (vx, vy), held, running)
            s = apply_event(assembly, s, ev)
            th, td = s.theta, s.theta_dot
            px, py = s.platform_pos
            vx, vy = s.platform_vel
            held, running = s.held, s.running

    j = 0  # next sample index
    eps = dt * 1e-9

    def emit_exact(ts):
        nonlocal j
        times[j] = ts
        for i in range(n_met):
            theta[j, i] = th[i]
            theta_dot[j, i] = td[i]
            held_arr[j, i] = held[i]
            running_arr[j, i] = running[i]
        platform_pos[j] = (px, py)
        platform_vel[j] = (vx, vy)
        j += 1

    apply_at(0)
    if j < n_samples and sample_times[0] <= t0 + eps:
        emit_exact(t0)

    for k in range(1, n_steps + 1):
        t_k = t0 + k * dt
        pth, ptd, ppx, ppy, pvx, pvy = th, td, px, py, vx, vy
        ih, ir = held, running  # flags in effect during this interval
        th, td, px, py, vx, vy = _rk4_flat(con, th, td, px, py, vx, vy,
                                           running, held, dt)
        if not (math.isfinite(th[0]) and math.isfinite(px) and math.isfinite(vx)):
            bad = [i for i in range(n_met) if not math.isfinite(th[i])]
            raise IntegrationError(
                f"non-finite state at t={t_k:.6f}"
                f" (metronome indexes {bad or 'platform'})")
        # samples strictly inside (t_{k-1}, t_k): pre-event interpolation
        while j < n_samples and sample_times[j] < t_k - eps:
            ts = sample_times[j]
            f = (ts - (t_k - dt)) / dt
            g = 1.0 - f
            times[j] = ts
            for i in range(n_met):
                theta[j, i] = g * pth[i] + f * th[i]
                theta_dot[j, i] = g * ptd[i] + f * td[i]
                held_arr[j, i] = ih[i]
                running_arr[j, i] = ir[i]
            platform_pos[j, 0] = g * ppx + f * px
            platform_pos[j, 1] = g * ppy + f * py
            platform_vel[j, 0] = g * pvx + f * vx
            platform_vel[j, 1] = g * pvy + f * vy
            j += 1
        apply_at(k)
        # a sample landing exactly on the boundary sees the post-event state
        if j < n_samples and sample_times[j] <= t_k + eps:
            emit_exact(sample_times[j])

    final = StateVector(list(th), list(td), (px, py), (vx, vy),
                        list(held), list(running))
    return Trajectory(assembly=assembly, sample_rate=sample_rate, t0=t0,
                      times=times, theta=theta, theta_dot=theta_dot,
                      platform_pos=platform_pos, platform_vel=platform_vel,
                      held=held_arr, running=running_arr, final_state=final)
