import math

import numpy as np
import pytest

from metrolatch import (Assembly, AssemblyConfig, Event, EventSchedule,
                        MetronomeParams, Mobility, PlatformParams, StateVector,
                        build_assembly, integrate, rk4_step)
from metrolatch.engine import IntegrationError
from metrolatch.events import EventError
from metrolatch.experiments import initial_state, start_events


def small_pendulum(theta0=0.01):
    asm = Assembly(
        metronomes=(MetronomeParams("p", length_L=0.2485, damping_gamma=0.0,
                                    escapement_eps=0.0),),
        platform=PlatformParams(mobility=Mobility("fixed")))
    return asm, StateVector(theta=[theta0], theta_dot=[0.0])


def test_small_angle_period():
    asm, s = small_pendulum(0.01)
    traj = integrate(asm, s, None, 0.0, 10.0, 1e-3, 200.0)
    th = traj.theta[:, 0]
    ts = traj.times
    idx = np.nonzero((th[:-1] < 0) & (th[1:] >= 0))[0]
    frac = -th[idx] / (th[idx + 1] - th[idx])
    crossings = ts[idx] + frac / 200.0
    period = (crossings[-1] - crossings[0]) / (len(crossings) - 1)
    assert period == pytest.approx(2 * math.pi * math.sqrt(0.2485 / 9.81),
                                   rel=1e-5)


def test_rk4_self_convergence_order(latch_assembly, latch_state):
    # global error against a dt=1e-4 reference shrinks ~16x per halving
    def end_state(dt):
        traj = integrate(latch_assembly, latch_state, None, 0.0, 10.0, dt, 50.0)
        f = traj.final_state
        return np.array(f.theta + f.theta_dot + list(f.platform_pos)
                        + list(f.platform_vel))

    ref = end_state(1e-4)
    err2 = np.max(np.abs(end_state(2e-3) - ref))
    err1 = np.max(np.abs(end_state(1e-3) - ref))
    order = math.log2(err2 / err1)
    assert order >= 3.9


def test_latch_protocol_sample_count(latch_assembly, latch_state):
    sched = EventSchedule(tuple(start_events(latch_assembly, "blue", 45.0)))
    traj = integrate(latch_assembly, latch_state, sched, 0.0, 270.0, 5e-3, 60.0)
    assert len(traj.times) == 16201


def test_determinism_bit_identical(latch_assembly, latch_state):
    sched = EventSchedule.of(Event(1.0, "green", "hold", duration=0.5),
                             Event(3.0, "red", "mirror"))
    a = integrate(latch_assembly, latch_state, sched, 0.0, 5.0, 1e-3, 60.0)
    b = integrate(latch_assembly, latch_state, sched, 0.0, 5.0, 1e-3, 60.0)
    assert np.array_equal(a.theta, b.theta)
    assert np.array_equal(a.platform_pos, b.platform_pos)
    assert np.array_equal(a.theta_dot, b.theta_dot)


def test_hold_freezes_angle_to_the_bit(latch_assembly, latch_state):
    sched = EventSchedule.of(Event(1.0, "green", "hold", duration=1.5))
    traj = integrate(latch_assembly, latch_state, sched, 0.0, 4.0, 1e-3, 60.0)
    j = latch_assembly.index_of("green")
    held = traj.held[:, j]
    assert held.any() and not held.all()
    frozen = traj.theta[held, j]
    assert np.all(frozen == frozen[0])
    assert np.all(traj.theta_dot[held, j] == 0.0)
    # released with zero velocity and resumes swinging afterwards
    after = traj.theta[~held, j][-60:]
    assert np.ptp(after) > 0.01


def test_hold_then_release_auto(latch_assembly, latch_state):
    # delay event expands to hold for fraction/f of the target's cycle
    sched = EventSchedule.of(Event(2.0, "green", "delay", fraction=0.25))
    traj = integrate(latch_assembly, latch_state, sched, 0.0, 4.0, 1e-3, 60.0)
    j = latch_assembly.index_of("green")
    dur_expected = 0.25 / 1.005
    n_held = int(np.sum(traj.held[:, j]))
    assert n_held == pytest.approx(dur_expected * 60.0, abs=2)


def test_events_outside_window_rejected(latch_assembly, latch_state):
    sched = EventSchedule.of(Event(11.0, "red", "mirror"))
    with pytest.raises(EventError, match="outside"):
        integrate(latch_assembly, latch_state, sched, 0.0, 10.0, 1e-3, 60.0)


def test_unknown_event_target_rejected(latch_assembly, latch_state):
    sched = EventSchedule.of(Event(1.0, "nobody", "mirror"))
    with pytest.raises(KeyError):
        integrate(latch_assembly, latch_state, sched, 0.0, 10.0, 1e-3, 60.0)


def test_precondition_checks(latch_assembly, latch_state):
    with pytest.raises(IntegrationError, match="dt"):
        integrate(latch_assembly, latch_state, None, 0.0, 1.0, -1e-3, 60.0)
    with pytest.raises(IntegrationError, match="t1"):
        integrate(latch_assembly, latch_state, None, 5.0, 1.0, 1e-3, 60.0)
    with pytest.raises(IntegrationError, match="sample_rate"):
        integrate(latch_assembly, latch_state, None, 0.0, 1.0, 0.02, 60.0)
    with pytest.raises(IntegrationError, match="integer"):
        integrate(latch_assembly, latch_state, None, 0.0, 1.0005, 1e-3, 60.0)


def test_rk4_step_consistency_order():
    # step residual against the Euler term scales as O(dt^2)
    asm, s = small_pendulum(0.3)
    from metrolatch import derivatives

    def residual(dt):
        stepped = rk4_step(asm, s, 0.0, dt)
        d = derivatives(asm, s)
        euler_th = s.theta[0] + dt * d.theta_dot[0]
        euler_td = s.theta_dot[0] + dt * d.theta_ddot[0]
        return math.hypot(stepped.theta[0] - euler_th,
                          stepped.theta_dot[0] - euler_td)

    r1 = residual(1e-3)
    r2 = residual(5e-4)
    assert r1 / r2 == pytest.approx(4.0, rel=0.15)


def test_rk4_step_matches_harmonic_taylor():
    # near-linear regime: one step agrees with the rotation solution to
    # O(dt^5)
    asm, _ = small_pendulum()
    th0 = 1e-3
    w = math.sqrt(9.81 / 0.2485)

    def exact(dt):
        return (th0 * math.cos(w * dt), -th0 * w * math.sin(w * dt))

    def err(dt):
        out = rk4_step(asm, StateVector(theta=[th0], theta_dot=[0.0]), 0.0, dt)
        e_th, e_td = exact(dt)
        return abs(out.theta[0] - e_th) + abs(out.theta_dot[0] - e_td) / w

    # fifth-order local error: halving dt divides the error by ~32
    ratio = err(4e-2) / err(2e-2)
    assert ratio == pytest.approx(32.0, rel=0.25)


def test_repeated_steps_equal_integrate_boundary_samples(latch_assembly,
                                                         latch_state):
    # samples at rate 1/(2*dt) land on every other step boundary exactly
    dt = 2e-3
    traj = integrate(latch_assembly, latch_state, None, 0.0, 0.5, dt, 250.0)
    state = latch_state.copy()
    for k in range(int(0.5 / dt)):
        state = rk4_step(latch_assembly, state, k * dt, dt)
        if (k + 1) % 2 == 0:
            j = (k + 1) // 2
            assert np.array_equal(traj.theta[j], np.array(state.theta))
    assert traj.final_state.theta == state.theta
    assert traj.final_state.platform_vel == state.platform_vel


def test_tip_coordinates_follow_geometry(latch_assembly, latch_state):
    traj = integrate(latch_assembly, latch_state, None, 0.0, 1.0, 1e-3, 60.0)
    tip = traj.tip
    for j, met in enumerate(latch_assembly.metronomes):
        ux, uy = met.swing_unit
        expect_x = met.mount_position[0] + met.length_L * np.sin(traj.theta[:, j]) * ux
        assert np.allclose(tip[:, j, 0], expect_x, atol=1e-14)


def test_concat_chains_exactly(latch_assembly, latch_state):
    whole = integrate(latch_assembly, latch_state, None, 0.0, 4.0, 1e-3, 60.0)
    first = integrate(latch_assembly, latch_state, None, 0.0, 2.0, 1e-3, 60.0)
    second = integrate(latch_assembly, first.final_state, None, 2.0, 4.0, 1e-3, 60.0)
    joined = first.concat(second)
    # stepped states chain bit-exactly; interpolated samples agree to the
    # last couple of ulps (the interpolation fraction is formed from a
    # different t0)
    assert joined.final_state.theta == whole.final_state.theta
    assert joined.final_state.platform_pos == whole.final_state.platform_pos
    assert np.allclose(joined.theta, whole.theta, rtol=0, atol=1e-12)
    assert np.allclose(joined.times, whole.times, rtol=0, atol=1e-12)
    assert joined.theta.shape == whole.theta.shape


def test_half_cycle_hold_retards_phase_by_pi():
    # an isolated metronome held for half its own cycle resumes pi behind
    # an unheld twin once its amplitude recovers
    from metrolatch import (Assembly, AssemblyConfig, MetronomeParams,
                            Mobility, PlatformParams, build_assembly,
                            zero_cross_phase, phase_difference, wrap_angle)
    from metrolatch.calibrate import calibrate_frequency
    met = calibrate_frequency(MetronomeParams("m", length_L=0.25), 1.0, tol=1e-4)
    asm = Assembly(
        metronomes=(met, MetronomeParams("ref", **{
            k: getattr(met, k) for k in
            ("length_L", "bob_mass_m", "damping_gamma", "escapement_eps",
             "ref_angle_theta_ref")})),
        platform=PlatformParams(mobility=Mobility("fixed")))
    from metrolatch.calibrate import limit_cycle_state
    th, td = limit_cycle_state(met, 0.25)  # at a positive swing peak
    state = StateVector(theta=[th, th], theta_dot=[td, td])
    # hold the first one for half a cycle at its peak (delay fraction 0.5)
    sched = EventSchedule.of(Event(10.0, "m", "delay", fraction=0.5))
    # snap the hold to the next peak so it acts as a pure delay
    probe = integrate(asm, state, None, 0.0, 14.0, 1e-3, 60.0)
    j = 0
    td_col = probe.theta_dot[:, j]
    import numpy as np
    k = np.nonzero((td_col[:-1] > 0) & (td_col[1:] <= 0)
                   & (probe.times[:-1] >= 10.0))[0][0]
    t_hold = float(probe.times[k])
    sched = EventSchedule.of(Event(t_hold, "m", "delay", fraction=0.5))
    traj = integrate(asm, state, sched, 0.0, 40.0, 1e-3, 60.0)
    pa = zero_cross_phase(traj.theta[-1500:, 0], 60.0, t0=float(traj.times[-1500]))
    pb = zero_cross_phase(traj.theta[-1500:, 1], 60.0, t0=float(traj.times[-1500]))
    delta = phase_difference(pa, pb)
    # identical metronomes: the offset is static; compare its wrapped value
    assert abs(abs(float(delta.values[-1])) - math.pi) < 0.15
