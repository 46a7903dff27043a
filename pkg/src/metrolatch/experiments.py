"""Canned bench scenarios: mutual sync, sub-harmonic locking, bit latch,
and lock-range sweeps.

Every scenario takes an explicit seed; initial pendulum phases are drawn
from it and placed on each metronome's isolated limit cycle, so runs are
reproducible bit for bit. Stage checks never raise on a physics outcome:
failures land in the report's diagnostics.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace

import numpy as np

from .assembly import Assembly, AssemblyConfig, StateVector, build_assembly
from .calibrate import measure_limit_cycle
from .engine import Trajectory, integrate
from .events import Event, EventSchedule
from .phase import (DEFAULT_LOCK_WINDOW, LockReport, PhaseSeries, WrappedSeries,
                    decode_bit, detect_lock, lissajous, phase_difference,
                    rotation_sense, wrap_angle, zero_cross_phase)

__all__ = [
    "LatchProtocol", "SweepGrid", "Segment", "BitEvent", "ExperimentReport",
    "initial_state", "run_sync_demo", "run_shil_demo", "run_latch_experiment",
    "sweep_arnold_tongue", "phase_of", "pair_difference", "rolling_lock",
]

DT_DEFAULT = 1e-3
SAMPLE_RATE_DEFAULT = 60.0


# ---------------------------------------------------------------------------
# report containers

@dataclass(frozen=True)
class Segment:
    t0: float
    t1: float
    kind: str  # drift | locked-bit-0 | locked-bit-1 | transient

    def to_dict(self):
        return {"t0": self.t0, "t1": self.t1, "kind": self.kind}


@dataclass(frozen=True)
class BitEvent:
    time: float
    value: str
    confidence: float

    def to_dict(self):
        return {"time": self.time, "value": self.value, "confidence": self.confidence}


@dataclass
class ExperimentReport:
    scenario: str
    seed: int
    ok: bool = True
    segments: list[Segment] = field(default_factory=list)
    bits: list[BitEvent] = field(default_factory=list)
    recovery_cycles: float | None = None
    artifacts: dict[str, str] = field(default_factory=dict)
    checks: dict[str, bool] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    metrics: dict = field(default_factory=dict)
    trajectory: Trajectory | None = None  # not serialized

    def check(self, name: str, passed: bool, note: str = "") -> bool:
        self.checks[name] = bool(passed)
        if not passed:
            self.ok = False
            self.notes.append(f"{name} failed" + (f": {note}" if note else ""))
        return bool(passed)

    def to_dict(self) -> dict:
        return {
            "scenario": self.scenario,
            "seed": self.seed,
            "ok": self.ok,
            "segments": [s.to_dict() for s in self.segments],
            "bits": [b.to_dict() for b in self.bits],
            "recovery_cycles": self.recovery_cycles,
            "artifacts": self.artifacts,
            "checks": self.checks,
            "notes": self.notes,
            "metrics": self.metrics,
        }

    def validate_segments(self) -> None:
        for a, b in zip(self.segments, self.segments[1:]):
            if b.t0 != a.t1:
                raise ValueError(f"segments do not tile: {a} then {b}")


# ---------------------------------------------------------------------------
# shared machinery

def initial_state(assembly: Assembly, seed: int) -> StateVector:
    """Seeded start: each running metronome on its limit cycle at a random
    phase, stopped metronomes hanging at rest, platform at rest."""
    rng = random.Random(seed)
    n = len(assembly.metronomes)
    theta = [0.0] * n
    theta_dot = [0.0] * n
    for i, met in enumerate(assembly.metronomes):
        frac = rng.uniform(0.0, 1.0)
        if met.running:
            th, td = measure_limit_cycle(met, assembly.gravity_g).state_at(frac)
            theta[i] = th
            theta_dot[i] = td
    return StateVector(theta=theta, theta_dot=theta_dot,
                       running=[m.running for m in assembly.metronomes])


def start_events(assembly: Assembly, met_id: str, at: float) -> list[Event]:
    """Hand-start a resting metronome: engage the escapement and kick it
    onto its limit cycle (phase 0: zero angle, peak velocity)."""
    met = assembly.metronomes[assembly.index_of(met_id)]
    kick = measure_limit_cycle(met, assembly.gravity_g).peak_velocity
    return [Event(at, met_id, "start"), Event(at, met_id, "impulse", d_theta_dot=kick)]


def phase_of(traj: Trajectory, met_id: str, t_from: float | None = None,
             t_to: float | None = None) -> PhaseSeries:
    x = traj.column(met_id)
    t = traj.times
    mask = np.ones(len(t), dtype=bool)
    if t_from is not None:
        mask &= t >= t_from
    if t_to is not None:
        mask &= t <= t_to
    sel = np.nonzero(mask)[0]
    return zero_cross_phase(x[sel], traj.sample_rate, t0=float(t[sel[0]]),
                            source_id=met_id)


def pair_difference(traj: Trajectory, id_a: str, id_b: str,
                    ratio: tuple[int, int] = (1, 1),
                    t_from: float | None = None,
                    t_to: float | None = None) -> WrappedSeries:
    return phase_difference(phase_of(traj, id_a, t_from, t_to),
                            phase_of(traj, id_b, t_from, t_to), ratio)


def rolling_lock(diff: WrappedSeries, t_from: float, t_to: float,
                 window: float = DEFAULT_LOCK_WINDOW,
                 step: float = 0.5) -> list[LockReport]:
    """Lock reports on a regular grid of trailing-window end times."""
    out = []
    lo = max(t_from, float(diff.times[0]) + window)
    t = lo
    while t <= min(t_to, float(diff.times[-1])) + 1e-9:
        out.append(detect_lock(diff, window=window, t_end=t))
        t += step
    return out


def first_lock_time(diff: WrappedSeries, t_from: float, t_to: float,
                    window: float = DEFAULT_LOCK_WINDOW,
                    step: float = 0.5) -> float | None:
    lo = max(t_from, float(diff.times[0]) + window)
    t = lo
    while t <= min(t_to, float(diff.times[-1])) + 1e-9:
        if detect_lock(diff, window=window, t_end=t).locked:
            return t
        t += step
    return None


def _phase_circle_aspect(diff: WrappedSeries, t_from: float, t_to: float) -> float:
    """Aspect of the wrapped difference plotted on the unit circle.

    A locked difference clusters to a thin arc (aspect near 0); a drifting
    one sweeps the circle (aspect near 1). This is the scale-free lock
    figure used for sub-harmonic pairs, where raw coordinate figures have
    orthogonal harmonics and their covariance carries no lock signature.
    """
    mask = (diff.times >= t_from) & (diff.times <= t_to)
    vals = diff.values[mask]
    fig = lissajous(np.cos(vals), np.sin(vals))
    return fig.aspect


def _segment_timeline(diff: WrappedSeries, t_injector: float, t_end: float,
                      psi0: float, window: float, guard_step: float = 0.5):
    """Classify the run into drift / locked-bit / transient segments."""
    segments = []
    bits = []
    cur_kind = "drift"
    cur_t0 = 0.0
    t = max(float(diff.times[0]) + window, t_injector)
    last_t = t
    while t <= min(t_end, float(diff.times[-1])) + 1e-9:
        rep = detect_lock(diff, window=window, t_end=t)
        if t <= t_injector:
            kind = "drift"
        elif not rep.locked:
            kind = "transient"
        else:
            reading = decode_bit(rep, psi0)
            kind = {"zero": "locked-bit-0", "one": "locked-bit-1",
                    "undefined": "transient"}[reading.value]
        if kind != cur_kind:
            segments.append(Segment(cur_t0, t, cur_kind))
            if kind.startswith("locked-bit"):
                bits.append(BitEvent(t, "zero" if kind.endswith("0") else "one",
                                     decode_bit(rep, psi0).confidence))
            cur_t0 = t
            cur_kind = kind
        last_t = t
        t += guard_step
    segments.append(Segment(cur_t0, t_end, cur_kind))
    return segments, bits


def _build(preset: str, seed: int, **config_kw) -> tuple[Assembly, StateVector]:
    cfg = AssemblyConfig(preset=preset, seed=seed, **config_kw)
    assembly = build_assembly(cfg)
    return assembly, initial_state(assembly, seed)


# ---------------------------------------------------------------------------
# scenarios

def run_sync_demo(seed: int = 1, duration: float = 120.0,
                  fixed_platform: bool = False, detuning_split: float = 0.01,
                  dt: float = DT_DEFAULT,
                  sample_rate: float = SAMPLE_RATE_DEFAULT) -> ExperimentReport:
    """Two like metronomes on a shared rail settle into step with each
    other; bolting the platform down removes the coupling and leaves the
    pair drifting at its detuning rate."""
    from .assembly import Mobility, PlatformConfig
    platform = None
    if fixed_platform:
        platform = PlatformConfig(mobility=Mobility("fixed"))
    assembly, state = _build("classic_sync", seed, detuning_split_hz=detuning_split,
                             platform=platform)
    report = ExperimentReport(scenario="sync_demo", seed=seed)
    traj = integrate(assembly, state, None, 0.0, duration, dt, sample_rate)
    report.trajectory = traj
    diff = pair_difference(traj, "left", "right")
    rep = detect_lock(diff)
    report.metrics["lock"] = rep.to_dict()
    expected_drift = -2.0 * math.pi * detuning_split
    if fixed_platform:
        report.check("control_stays_unlocked", not rep.locked)
        report.check("control_drift_rate",
                     abs(rep.drift_rate - expected_drift) <= 0.05 * abs(expected_drift),
                     f"drift {rep.drift_rate:.4f} vs expected {expected_drift:.4f}")
        report.segments = [Segment(0.0, duration, "drift")]
    else:
        t_lock = first_lock_time(diff, 0.0, duration)
        report.check("locks_in_phase",
                     rep.locked and abs(rep.mean_offset_psi) < 0.3,
                     f"psi={rep.mean_offset_psi:.3f}")
        report.check("locks_before_deadline", t_lock is not None and t_lock <= duration)
        report.metrics["first_lock_t"] = t_lock
        psi0 = rep.mean_offset_psi
        report.segments, report.bits = _segment_timeline(
            diff, t_injector=0.0, t_end=duration, psi0=0.0,
            window=DEFAULT_LOCK_WINDOW)
    report.validate_segments()
    return report


def run_shil_demo(seed: int = 1, duration: float = 60.0,
                  fixed_platform: bool = False, detuning: float = 0.0,
                  dt: float = DT_DEFAULT,
                  sample_rate: float = SAMPLE_RATE_DEFAULT) -> ExperimentReport:
    """One slow and one double-rate metronome share a rail. Rolling
    platform: the slow one locks sub-harmonically (2:1). Fixed platform:
    phases drift apart. ``detuning`` offsets the fast metronome's target
    frequency from the preset operating point."""
    from .assembly import Mobility, PlatformConfig, SHIL_TRIM_DEFAULT
    platform = None
    if fixed_platform:
        platform = PlatformConfig(mobility=Mobility("fixed"))
    assembly, state = _build("shil_pair", seed, platform=platform,
                             injector_trim_hz=SHIL_TRIM_DEFAULT + detuning)
    report = ExperimentReport(scenario="shil_demo", seed=seed)
    traj = integrate(assembly, state, None, 0.0, duration, dt, sample_rate)
    report.trajectory = traj
    diff = pair_difference(traj, "slow", "fast", ratio=(2, 1))
    rep = detect_lock(diff)
    report.metrics["lock"] = rep.to_dict()
    raw = lissajous(traj.swing_displacement("slow"), traj.swing_displacement("fast"))
    report.metrics["lissajous_raw"] = raw.to_dict()
    if fixed_platform:
        aspect = _phase_circle_aspect(diff, float(diff.times[0]), duration)
        report.metrics["lock_figure_aspect"] = aspect
        report.check("stays_unlocked", not rep.locked)
        report.check("figure_space_filling", aspect > 0.5, f"aspect={aspect:.3f}")
        report.segments = [Segment(0.0, duration, "drift")]
    else:
        aspect = _phase_circle_aspect(diff, duration - DEFAULT_LOCK_WINDOW, duration)
        report.metrics["lock_figure_aspect"] = aspect
        report.check("locks_2_to_1", rep.locked,
                     f"drift={rep.drift_rate:.4f} spread={rep.spread:.3f}")
        report.check("figure_collapses", aspect < 0.25, f"aspect={aspect:.3f}")
        psi0 = rep.mean_offset_psi if rep.locked else 0.0
        report.segments, report.bits = _segment_timeline(
            diff, t_injector=0.0, t_end=duration, psi0=psi0,
            window=DEFAULT_LOCK_WINDOW)
    report.validate_segments()
    return report


# ---------------------------------------------------------------------------
# the latch protocol

@dataclass(frozen=True)
class LatchProtocol:
    """Timeline of the storage demonstration.

    The pair runs alone first (drift), the injector is hand-started at
    t_start_injector, the bit is flipped by holding one metronome for
    flip_hold_fraction of its cycle near t_flip, and the stored bit is
    probed with a small delay near t_perturb. Holds are applied at the
    held metronome's next swing peak after the nominal time, where a
    timed hold maps cleanly onto a pure phase delay. An optional second
    flip checks that two flips cancel.
    """

    t_start_injector: float = 45.0
    t_flip: float = 110.0
    t_perturb: float = 155.0
    t_end: float = 270.0
    t_flip2: float | None = None
    detuning_split: float = 0.01
    flip_hold_fraction: float = 0.5
    perturb_fraction: float = 0.1
    flip_target: str = "green"
    lock_window: float = DEFAULT_LOCK_WINDOW
    recovery_window: float = 5.0
    dt: float = DT_DEFAULT
    sample_rate: float = SAMPLE_RATE_DEFAULT

    def __post_init__(self):
        if not 0.0 < self.t_start_injector < self.t_flip < self.t_perturb < self.t_end:
            raise ValueError("protocol times must satisfy 0 < injector < flip "
                             "< perturb < end")
        if self.t_flip2 is not None and not self.t_perturb < self.t_flip2 < self.t_end:
            raise ValueError("t_flip2 must lie between t_perturb and t_end")
        if not 0.0 < self.perturb_fraction < 1.0:
            raise ValueError("perturb_fraction must be in (0, 1)")


def _next_peak(traj: Trajectory, met_id: str, after: float) -> float:
    """First positive swing peak (theta_dot + -> -) at or after `after`."""
    j = traj.assembly.index_of(met_id)
    td = traj.theta_dot[:, j]
    t = traj.times
    k0 = int(np.searchsorted(t, after))
    for k in range(max(k0, 1), len(t) - 1):
        if td[k] > 0.0 >= td[k + 1]:
            f = td[k] / (td[k] - td[k + 1])
            return float(t[k] + f * (t[k + 1] - t[k]))
    raise RuntimeError(f"no swing peak of {met_id!r} found after t={after}")


def _peak_probe(assembly, state, t0, met_id, dt, sample_rate, horizon=4.0):
    probe = integrate(assembly, state, None, t0, t0 + horizon, dt, sample_rate)
    return _next_peak(probe, met_id, t0 + dt)


def run_latch_experiment(protocol: LatchProtocol = LatchProtocol(),
                         seed: int = 1) -> ExperimentReport:
    p = protocol
    assembly, state0 = _build("paper_latch", seed, detuning_split_hz=p.detuning_split)
    report = ExperimentReport(scenario="latch", seed=seed)
    report.metrics["protocol"] = {
        "t_start_injector": p.t_start_injector, "t_flip": p.t_flip,
        "t_perturb": p.t_perturb, "t_end": p.t_end, "t_flip2": p.t_flip2,
        "detuning_split": p.detuning_split}
    green = p.flip_target
    f_green = assembly.metronomes[assembly.index_of(green)].natural_freq_hz
    hold_flip = p.flip_hold_fraction / f_green
    hold_pert = p.perturb_fraction / f_green

    # segment A: drift then injector start, up to the flip time
    sched_a = EventSchedule(tuple(start_events(assembly, "blue", p.t_start_injector)))
    traj = integrate(assembly, state0, sched_a, 0.0, p.t_flip, p.dt, p.sample_rate)

    # flip: hold at the next peak after t_flip
    t_hold = _peak_probe(assembly, traj.final_state, p.t_flip, green, p.dt, p.sample_rate)
    seg = integrate(assembly, traj.final_state,
                    EventSchedule.of(Event(t_hold, green, "hold", duration=hold_flip)),
                    p.t_flip, p.t_perturb, p.dt, p.sample_rate)
    traj = traj.concat(seg)
    report.metrics["t_hold_flip"] = t_hold

    # perturbation: small delay at the next peak after t_perturb
    t_pert = _peak_probe(assembly, traj.final_state, p.t_perturb, green, p.dt,
                         p.sample_rate)
    t_stop = p.t_flip2 if p.t_flip2 is not None else p.t_end
    seg = integrate(assembly, traj.final_state,
                    EventSchedule.of(Event(t_pert, green, "hold", duration=hold_pert)),
                    p.t_perturb, t_stop, p.dt, p.sample_rate)
    traj = traj.concat(seg)
    report.metrics["t_hold_perturb"] = t_pert

    if p.t_flip2 is not None:
        t_hold2 = _peak_probe(assembly, traj.final_state, p.t_flip2, green, p.dt,
                              p.sample_rate)
        seg = integrate(assembly, traj.final_state,
                        EventSchedule.of(Event(t_hold2, green, "hold",
                                               duration=hold_flip)),
                        p.t_flip2, p.t_end, p.dt, p.sample_rate)
        traj = traj.concat(seg)
        report.metrics["t_hold_flip2"] = t_hold2

    report.trajectory = traj
    diff = pair_difference(traj, "red", "green")

    # stage 1: unforced drift before the injector
    drift_rep = detect_lock(diff, window=min(30.0, p.t_start_injector - 10.0),
                            t_end=p.t_start_injector)
    report.metrics["drift"] = drift_rep.to_dict()
    report.check("drift_unlocked", not drift_rep.locked)
    report.check("drift_rate_visible", abs(drift_rep.drift_rate) > drift_rep.drift_tol,
                 f"drift {drift_rep.drift_rate:.4f}")

    # stage 2: injector sets the latch; capture the reference phase
    t_lock0 = first_lock_time(diff, p.t_start_injector, p.t_flip,
                              window=p.lock_window)
    report.metrics["t_first_lock"] = t_lock0
    if not report.check("locks_after_injector", t_lock0 is not None,
                        "no lock between injector start and flip"):
        report.segments = [Segment(0.0, p.t_end, "drift")]
        return report
    # reference phase for decoding: read once the trailing window has
    # filled with post-lock data, so the pre-lock transient does not bias
    # the reference
    t_ref = min(t_lock0 + p.lock_window, t_hold - p.dt)
    psi0 = detect_lock(diff, window=p.lock_window, t_end=t_ref).mean_offset_psi
    report.metrics["psi0"] = psi0
    report.metrics["t_psi0_captured"] = t_ref
    bit0 = decode_bit(detect_lock(diff, window=p.lock_window, t_end=t_hold - p.dt),
                      psi0)
    report.check("bit0_reads_zero", bit0.value == "zero", f"read {bit0.value}")

    # stage 3: half-cycle hold flips the bit
    rep1 = detect_lock(diff, window=p.lock_window, t_end=t_pert - p.dt)
    dpsi_flip = wrap_angle(rep1.mean_offset_psi - psi0)
    report.metrics["psi_after_flip"] = rep1.mean_offset_psi
    report.metrics["flip_offset_from_pi"] = abs(abs(dpsi_flip) - math.pi)
    flip_ok = rep1.locked and abs(abs(dpsi_flip) - math.pi) < 0.3
    if report.check("flip_lands_opposite", flip_ok,
                    f"delta-psi {dpsi_flip:+.3f}"):
        bit1 = decode_bit(rep1, psi0)
        report.check("bit1_reads_one", bit1.value == "one", f"read {bit1.value}")

    # stage 4: small delay does not flip the bit; lock report recovers
    end4 = t_stop
    rep2 = detect_lock(diff, window=p.lock_window, t_end=end4 - p.dt)
    dpsi_end = wrap_angle(rep2.mean_offset_psi - psi0)
    report.check("perturbation_keeps_bit",
                 rep2.locked and abs(abs(dpsi_end) - math.pi) < 0.3,
                 f"delta-psi {dpsi_end:+.3f}")
    t_rec = first_lock_time(diff, t_pert + 1.0, end4, window=p.recovery_window)
    recovery = (t_rec - t_pert) * f_green if t_rec is not None else None
    report.recovery_cycles = recovery
    report.check("recovers_within_20_cycles",
                 recovery is not None and recovery <= 20.0,
                 f"recovery {recovery}")

    # optional stage 5: second flip restores the bit
    if p.t_flip2 is not None:
        rep3 = detect_lock(diff, window=p.lock_window, t_end=p.t_end - p.dt)
        dpsi3 = wrap_angle(rep3.mean_offset_psi - psi0)
        report.metrics["psi_after_flip2"] = rep3.mean_offset_psi
        report.check("second_flip_restores", rep3.locked and abs(dpsi3) < 0.3,
                     f"delta-psi {dpsi3:+.3f}")

    # figures per locked window (trailing lock_window before each boundary)
    def seg_metrics(t_lo, t_hi, tag):
        sl = (traj.times >= t_lo) & (traj.times <= t_hi)
        fig = lissajous(traj.swing_displacement("red")[sl],
                        traj.swing_displacement("green")[sl])
        report.metrics[f"lissajous_{tag}"] = fig.to_dict()
        sense = rotation_sense(traj.platform_pos[sl], traj.sample_rate)
        report.metrics[f"chirality_{tag}"] = sense.to_dict()
        return fig, sense

    fig0, sense0 = seg_metrics(max(t_lock0, t_hold - p.lock_window), t_hold - p.dt,
                               "bit0")
    fig1, sense1 = seg_metrics(end4 - p.lock_window, end4 - p.dt, "bit1")
    axis_diff = abs(fig0.major_axis_angle - fig1.major_axis_angle)
    axis_diff = min(axis_diff, math.pi - axis_diff)
    report.metrics["lissajous_axis_separation_deg"] = math.degrees(axis_diff)
    report.check("figures_perpendicular",
                 abs(math.degrees(axis_diff) - 90.0) <= 10.0,
                 f"axis separation {math.degrees(axis_diff):.1f} deg")
    chir_distinct = (sense0.chirality != sense1.chirality)
    report.metrics["chirality_distinct"] = chir_distinct
    if not chir_distinct:
        report.notes.append(
            "platform orbit chirality did not separate the two bit states; "
            "relying on the perpendicular-figure signature instead")

    report.segments, report.bits = _segment_timeline(
        diff, t_injector=p.t_start_injector, t_end=p.t_end, psi0=psi0,
        window=p.lock_window)
    report.validate_segments()
    return report


# ---------------------------------------------------------------------------
# lock-range sweep

@dataclass
class SweepGrid:
    """Rectangular lock-range scan: injector detuning against platform mass."""

    detunings_hz: tuple[float, ...]
    platform_masses: tuple[float, ...]
    scenario: str = "shil"
    duration: float = 60.0
    seed: int = 7
    verdicts: list[list[str]] = field(default_factory=list)   # locked|unlocked|failed
    psi: list[list[float | None]] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {"detunings_hz": list(self.detunings_hz),
                "platform_masses": list(self.platform_masses),
                "scenario": self.scenario, "duration": self.duration,
                "seed": self.seed, "verdicts": self.verdicts, "psi": self.psi}

    def lock_width_by_mass(self) -> list[float]:
        """Locked detuning span per mass row (cell count times spacing)."""
        if len(self.detunings_hz) > 1:
            spacing = self.detunings_hz[1] - self.detunings_hz[0]
        else:
            spacing = 1.0
        out = []
        for row in self.verdicts:
            out.append(sum(1 for v in row if v == "locked") * spacing)
        return out


def sweep_arnold_tongue(grid: SweepGrid) -> SweepGrid:
    """Run one deterministic simulation per grid cell and record verdicts.

    Coupling strength scales inversely with platform mass, so rows are
    mass values and columns are injector detunings from the preset
    operating point. A diverging cell is recorded as 'failed' and the
    sweep continues.
    """
    from .assembly import Mobility, PlatformConfig, SHIL_TRIM_DEFAULT
    if not grid.detunings_hz or not grid.platform_masses:
        raise ValueError("sweep grid must be non-empty")
    grid.verdicts = []
    grid.psi = []
    for mass in grid.platform_masses:
        row_v: list[str] = []
        row_p: list[float | None] = []
        for det in grid.detunings_hz:
            try:
                assembly, state = _build(
                    "shil_pair", grid.seed,
                    injector_trim_hz=SHIL_TRIM_DEFAULT + det,
                    platform=PlatformConfig(mass=mass, damping=0.05,
                                            mobility=Mobility("free_1d", 0.0)))
                traj = integrate(assembly, state, None, 0.0, grid.duration,
                                 DT_DEFAULT, SAMPLE_RATE_DEFAULT)
                rep = detect_lock(pair_difference(traj, "slow", "fast", (2, 1)))
                row_v.append("locked" if rep.locked else "unlocked")
                row_p.append(rep.mean_offset_psi if rep.locked else None)
            except Exception:
                row_v.append("failed")
                row_p.append(None)
        grid.verdicts.append(row_v)
        grid.psi.append(row_p)
    return grid
