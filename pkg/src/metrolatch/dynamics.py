"""Coupled equations of motion and mechanical diagnostics.

Each running, un-held metronome i with swing direction u_i obeys

    thdd_i = A_i - (pdd . u_i) cos(theta_i) / L_i
    A_i    = -(g/L_i) sin(theta_i) - gamma_i*thd_i
             + eps_i*(1 - (theta_i/theta_ref_i)^2)*thd_i

and the platform (total carried mass Mtot = M + sum m_i) obeys

    Mtot*pdd + c_p*pd = -sum_i m_i L_i (thdd_i cos(theta_i)
                                        - thd_i^2 sin(theta_i)) u_i.

Eliminating thdd_i gives a 2x2 symmetric positive definite system for
pdd which is solved in closed form; thdd_i follows by back-substitution.
A held metronome contributes no reaction and keeps thdd = thd = 0; a
stopped (not running) metronome swings freely with eps = 0.

The evaluation core works on flat scalars so the fixed-step integrator
can call it hundreds of thousands of times per run without array
overhead; `derivatives` is the validated structured entry point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .assembly import Assembly, StateVector

__all__ = ["StateDerivative", "derivatives", "mechanical_energy",
           "horizontal_momentum", "DynamicsError", "precompute", "eval_rhs"]

_SIN = math.sin
_COS = math.cos


class DynamicsError(ValueError):
    """Model evaluation failed (bad dimensions, non-finite state, lost SPD)."""


@dataclass(frozen=True)
class StateDerivative:
    theta_dot: tuple[float, ...]
    theta_ddot: tuple[float, ...]
    platform_vel: tuple[float, float]
    platform_acc: tuple[float, float]


def precompute(assembly: Assembly):
    """Flatten assembly constants for the evaluation core.

    Returns (per_met, Mtot, cp, mode, ex, ey) where per_met is a tuple of
    (L, m, gamma, eps, inv_ref2, ux, uy, g_over_L, mL) per metronome and
    mode is 0 fixed, 1 free_1d along (ex, ey), 2 free_2d.
    """
    g = assembly.gravity_g
    per_met = tuple(
        (m.length_L, m.bob_mass_m, m.damping_gamma, m.escapement_eps,
         1.0 / (m.ref_angle_theta_ref * m.ref_angle_theta_ref),
         m.swing_unit[0], m.swing_unit[1],
         g / m.length_L, m.bob_mass_m * m.length_L)
        for m in assembly.metronomes)
    mob = assembly.platform.mobility
    mode = {"fixed": 0, "free_1d": 1, "free_2d": 2}[mob.mode]
    ex, ey = mob.axis_unit if mode == 1 else (1.0, 0.0)
    return (per_met, assembly.total_mass(), assembly.platform.damping_cp, mode, ex, ey)


def eval_rhs(con, theta, theta_dot, vx, vy, running, held):
    """Evaluate (theta_dd list, ax, ay) for flat state.

    No validation: callers guarantee finite inputs of matching length.
    """
    per_met, mtot, cp, mode, ex, ey = con
    n = len(per_met)
    acc = [0.0] * n

    if mode == 0:
        ax = ay = 0.0
        for i in range(n):
            if held[i]:
                continue
            L, m, gam, eps, inv_ref2, ux, uy, g_over_L, mL = per_met[i]
            th = theta[i]
            td = theta_dot[i]
            a = -g_over_L * _SIN(th) - gam * td
            if running[i]:
                a += eps * (1.0 - th * th * inv_ref2) * td
            acc[i] = a
        return acc, ax, ay

    # assemble [Mtot*I - sum' m cos^2 u u^T] pdd = -sum' m u (L A cos
    # - L thd^2 sin) - cp*v, primed sums over un-held metronomes
    axx = mtot
    axy = 0.0
    ayy = mtot
    bx = -cp * vx
    by = -cp * vy
    avals = acc  # reuse list for A_i
    for i in range(n):
        if held[i]:
            continue
        L, m, gam, eps, inv_ref2, ux, uy, g_over_L, mL = per_met[i]
        th = theta[i]
        td = theta_dot[i]
        c = _COS(th)
        s = _SIN(th)
        a = -g_over_L * s - gam * td
        if running[i]:
            a += eps * (1.0 - th * th * inv_ref2) * td
        avals[i] = a
        w = m * c * c
        axx -= w * ux * ux
        axy -= w * ux * uy
        ayy -= w * uy * uy
        r = mL * (a * c - td * td * s)
        bx -= r * ux
        by -= r * uy

    if mode == 2:
        det = axx * ayy - axy * axy
        if not (axx > 0.0 and det > 0.0):
            raise DynamicsError("platform mass matrix lost positive definiteness")
        ax = (ayy * bx - axy * by) / det
        ay = (axx * by - axy * bx) / det
    else:
        aee = (axx * ex * ex + 2.0 * axy * ex * ey + ayy * ey * ey)
        if not aee > 0.0:
            raise DynamicsError("platform mass matrix lost positive definiteness")
        s1d = (bx * ex + by * ey) / aee
        ax = s1d * ex
        ay = s1d * ey

    out = [0.0] * n
    for i in range(n):
        if held[i]:
            continue
        L, m, gam, eps, inv_ref2, ux, uy, g_over_L, mL = per_met[i]
        out[i] = avals[i] - (ax * ux + ay * uy) * _COS(theta[i]) / L
    return out, ax, ay


def derivatives(assembly: Assembly, state: StateVector, t: float = 0.0) -> StateDerivative:
    """Full time derivative of the state. Pure; `t` is accepted for
    integrator symmetry (the model is autonomous)."""
    state.validate(assembly)
    con = precompute(assembly)
    acc, ax, ay = eval_rhs(con, state.theta, state.theta_dot,
                           state.platform_vel[0], state.platform_vel[1],
                           state.running, state.held)
    n = len(acc)
    thd = tuple(0.0 if state.held[i] else state.theta_dot[i] for i in range(n))
    return StateDerivative(
        theta_dot=thd,
        theta_ddot=tuple(acc),
        platform_vel=state.platform_vel,
        platform_acc=(ax, ay),
    )


def mechanical_energy(assembly: Assembly, state: StateVector) -> float:
    """Kinetic plus gravitational potential energy, joules.

    Bob velocity combines the platform velocity, the horizontal swing
    component L*thd*cos(theta) along u, and the vertical component
    L*thd*sin(theta).
    """
    state.validate(assembly)
    g = assembly.gravity_g
    vx, vy = state.platform_vel
    e = 0.5 * assembly.platform.platform_mass_M * (vx * vx + vy * vy)
    for i, met in enumerate(assembly.metronomes):
        L = met.length_L
        m = met.bob_mass_m
        th = state.theta[i]
        td = state.theta_dot[i]
        ux, uy = met.swing_unit
        hx = vx + L * td * _COS(th) * ux
        hy = vy + L * td * _COS(th) * uy
        vz = L * td * _SIN(th)
        e += 0.5 * m * (hx * hx + hy * hy + vz * vz)
        e += m * g * L * (1.0 - _COS(th))
    return e


def horizontal_momentum(assembly: Assembly, state: StateVector) -> tuple[float, float]:
    """Total horizontal momentum (M + sum m)*pd + sum m L thd cos(theta) u.

    Conserved on a freely rolling undamped platform; the ground supplies
    the balancing reaction when the platform is fixed.
    """
    state.validate(assembly)
    mtot = assembly.total_mass()
    px = mtot * state.platform_vel[0]
    py = mtot * state.platform_vel[1]
    for i, met in enumerate(assembly.metronomes):
        c = met.bob_mass_m * met.length_L * state.theta_dot[i] * _COS(state.theta[i])
        ux, uy = met.swing_unit
        px += c * ux
        py += c * uy
    return (px, py)
