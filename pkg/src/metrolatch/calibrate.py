"""Limit-cycle measurement and frequency calibration for a single metronome.

A metronome's tick rate is an emergent property of its length, escapement
and damping. `calibrate_frequency` adjusts the pendulum length by secant
iteration until the isolated steady-state limit-cycle frequency (measured
from upward zero crossings over the last 20 of 60 simulated cycles)
matches a target. The measured cycle is cached and reused for phase
seeding and for converting cycle fractions to hold durations.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache

from .assembly import GRAVITY_DEFAULT, MetronomeParams

__all__ = ["LimitCycle", "measure_limit_cycle", "calibrate_frequency",
           "limit_cycle_state", "CalibrationError", "small_angle_length"]

_TWO_PI = 2.0 * math.pi


class CalibrationError(RuntimeError):
    """Secant iteration failed to reach the target frequency."""


def small_angle_length(target_f: float, gravity: float = GRAVITY_DEFAULT) -> float:
    """Pendulum length with small-angle frequency target_f."""
    return gravity / (_TWO_PI * target_f) ** 2


@dataclass(frozen=True)
class LimitCycle:
    """One steady-state cycle of an isolated metronome.

    ``thetas``/``theta_dots`` sample the cycle uniformly in time starting
    at an upward zero crossing of theta (phase 0).
    """

    frequency: float
    amplitude: float
    peak_velocity: float
    thetas: tuple[float, ...]
    theta_dots: tuple[float, ...]

    def state_at(self, phase_fraction: float) -> tuple[float, float]:
        """(theta, theta_dot) at the given fraction of a cycle from phase 0."""
        n = len(self.thetas)
        x = (phase_fraction % 1.0) * n
        i = int(x)
        f = x - i
        j = (i + 1) % n
        return (self.thetas[i] * (1 - f) + self.thetas[j] * f,
                self.theta_dots[i] * (1 - f) + self.theta_dots[j] * f)


def _simulate_isolated(length, gamma, eps, theta_ref, gravity, n_cycles, dt):
    """RK4 on the single fixed-platform metronome; returns (ts, thetas, tds).

    Kept self-contained (no Assembly plumbing) because it runs inside the
    calibration loop.
    """
    g_over_L = gravity / length
    inv_ref2 = 1.0 / (theta_ref * theta_ref)
    sin = math.sin

    def f(th, td):
        return -g_over_L * sin(th) - gamma * td + eps * (1.0 - th * th * inv_ref2) * td

    f_guess = math.sqrt(g_over_L) / _TWO_PI
    steps = int((n_cycles + 2) / f_guess / dt)
    th = theta_ref
    td = 0.0
    out_th = [th]
    out_td = [td]
    half = 0.5 * dt
    sixth = dt / 6.0
    for _ in range(steps):
        k1 = f(th, td)
        td2 = td + half * k1
        th2 = th + half * td
        k2 = f(th2, td2)
        td3 = td + half * k2
        th3 = th + half * td2
        k3 = f(th3, td3)
        td4 = td + dt * k3
        th4 = th + dt * td3
        k4 = f(th4, td4)
        th = th + sixth * (td + 2.0 * td2 + 2.0 * td3 + td4)
        td = td + sixth * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        out_th.append(th)
        out_td.append(td)
    return dt, out_th, out_td


def _upward_crossings(dt, thetas):
    out = []
    prev = thetas[0]
    for k in range(1, len(thetas)):
        cur = thetas[k]
        if prev < 0.0 <= cur:
            out.append((k - 1 + (-prev) / (cur - prev)) * dt)
        prev = cur
    return out


@lru_cache(maxsize=256)
def _measure(length, gamma, eps, theta_ref, gravity, n_cycles, last, dt):
    dt, thetas, tds = _simulate_isolated(length, gamma, eps, theta_ref,
                                         gravity, n_cycles, dt)
    crossings = _upward_crossings(dt, thetas)
    if len(crossings) < last + 2:
        raise CalibrationError(
            f"metronome produced only {len(crossings)} cycles; escapement "
            f"settings cannot sustain oscillation (L={length}, eps={eps})")
    freq = last / (crossings[-1] - crossings[-1 - last])
    # resample the final full cycle starting at its opening crossing
    t_a = crossings[-2]
    t_b = crossings[-1]
    n_samp = 256
    cyc_th = []
    cyc_td = []
    for j in range(n_samp):
        t = t_a + (t_b - t_a) * j / n_samp
        k = int(t / dt)
        f = t / dt - k
        cyc_th.append(thetas[k] * (1 - f) + thetas[k + 1] * f)
        cyc_td.append(tds[k] * (1 - f) + tds[k + 1] * f)
    amp = max(abs(v) for v in cyc_th)
    pv = max(abs(v) for v in cyc_td)
    return LimitCycle(frequency=freq, amplitude=amp, peak_velocity=pv,
                      thetas=tuple(cyc_th), theta_dots=tuple(cyc_td))


def measure_limit_cycle(params: MetronomeParams, gravity: float = GRAVITY_DEFAULT,
                        n_cycles: int = 60, last: int = 20,
                        dt: float = 1e-3) -> LimitCycle:
    """Measure the isolated steady-state cycle of `params` (cached)."""
    if params.escapement_eps <= 0.0:
        raise CalibrationError("limit cycle needs escapement_eps > 0")
    return _measure(params.length_L, params.damping_gamma, params.escapement_eps,
                    params.ref_angle_theta_ref, gravity, n_cycles, last, dt)


def calibrate_frequency(params: MetronomeParams, target_f: float,
                        tol: float = 1e-4,
                        gravity: float = GRAVITY_DEFAULT,
                        max_iter: int = 30) -> MetronomeParams:
    """Return params with length_L tuned so the limit cycle runs at target_f.

    Secant iteration on length, seeded at the small-angle value and at its
    frequency-scaled correction (L scales as 1/f^2). `tol` is relative.
    """
    if target_f <= 0.0:
        raise ValueError("target_f must be > 0")
    if tol <= 0.0:
        raise ValueError("tol must be > 0")

    def freq_of(length):
        return measure_limit_cycle(replace(params, length_L=length), gravity).frequency

    L0 = small_angle_length(target_f, gravity)
    f0 = freq_of(L0)
    if abs(f0 - target_f) <= tol * target_f:
        return replace(params, length_L=L0, natural_freq_hz=target_f)
    L1 = L0 * (f0 / target_f) ** 2
    f1 = freq_of(L1)
    for _ in range(max_iter):
        if abs(f1 - target_f) <= tol * target_f:
            return replace(params, length_L=L1, natural_freq_hz=target_f)
        if f1 == f0:
            break
        L0, f0, L1 = L1, f1, L1 + (target_f - f1) * (L1 - L0) / (f1 - f0)
        if L1 <= 0.0:
            break
        f1 = freq_of(L1)
    raise CalibrationError(
        f"no convergence to {target_f} Hz within {max_iter} iterations "
        f"(last L={L1:.6g}, f={f1:.6g})")


def limit_cycle_state(params: MetronomeParams, phase_fraction: float,
                      gravity: float = GRAVITY_DEFAULT) -> tuple[float, float]:
    """(theta, theta_dot) on the isolated limit cycle at a phase fraction."""
    return measure_limit_cycle(params, gravity).state_at(phase_fraction)
