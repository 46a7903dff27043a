"""Instantaneous phase, lock detection, bit decoding, and figure metrics.

Phase is extracted from upward zero crossings of the angle signal:
piecewise linear, gaining exactly 2*pi per cycle, defined between the
first and last crossing. Crossing-based phase is amplitude invariant and
robust to the strongly nonsinusoidal waveforms around restart transients.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "PhaseSeries", "WrappedSeries", "LockReport", "BitReading", "LissajousFigure",
    "RotationSense", "PhaseError", "zero_cross_phase", "phase_difference",
    "detect_lock", "decode_bit", "lissajous", "rotation_sense", "wrap_angle",
    "DEFAULT_SPREAD_TOL", "DEFAULT_DRIFT_TOL", "DEFAULT_LOCK_WINDOW",
    "DEFAULT_GUARD",
]

TWO_PI = 2.0 * math.pi
DEFAULT_SPREAD_TOL = 0.2     # rad
DEFAULT_DRIFT_TOL = 0.01     # rad/s
DEFAULT_LOCK_WINDOW = 20.0   # s
DEFAULT_GUARD = 0.3          # rad
AMPLITUDE_FLOOR = 0.01       # rad


class PhaseError(ValueError):
    """Phase extraction or lock analysis could not proceed."""


def wrap_angle(x):
    """Wrap into (-pi, pi]."""
    w = np.mod(np.asarray(x, dtype=float), TWO_PI)
    scalar = w.ndim == 0
    w = np.atleast_1d(w)
    w[w > math.pi] -= TWO_PI
    return float(w[0]) if scalar else w


@dataclass(frozen=True)
class PhaseSeries:
    """Unwrapped phase as piecewise-linear knots at cycle boundaries.

    ``times[k]`` is the k-th upward zero crossing; ``phase[k] = 2*pi*k``.
    ``sample_rate`` records the rate of the angle series the crossings
    came from (used when resampling differences); it defaults to the
    crossing rate itself.
    """

    times: np.ndarray
    source_id: str = ""
    sample_rate: float | None = None

    @property
    def phase(self) -> np.ndarray:
        return TWO_PI * np.arange(len(self.times))

    @property
    def t_start(self) -> float:
        return float(self.times[0])

    @property
    def t_end(self) -> float:
        return float(self.times[-1])

    @property
    def mean_frequency(self) -> float:
        return (len(self.times) - 1) / (self.t_end - self.t_start)

    def at(self, t) -> np.ndarray:
        """Interpolated phase at times t (must lie within the support)."""
        t = np.asarray(t, dtype=float)
        if np.any(t < self.times[0] - 1e-9) or np.any(t > self.times[-1] + 1e-9):
            raise PhaseError("phase queried outside [first, last] crossing")
        return np.interp(t, self.times, self.phase)


def zero_cross_phase(samples, sample_rate: float, t0: float = 0.0,
                     source_id: str = "") -> PhaseSeries:
    """Extract phase from a uniformly sampled angle series.

    Crossing instants are located by linear interpolation between the
    bracketing samples. Requires at least 3 upward crossings and a peak
    amplitude above the stopped-metronome floor (0.01 rad).
    """
    x = np.asarray(samples, dtype=float)
    if x.ndim != 1 or len(x) < 3:
        raise PhaseError("need a 1-D series with at least 3 samples")
    peak = float(np.max(np.abs(x)))
    if peak <= AMPLITUDE_FLOOR:
        raise PhaseError(
            f"peak amplitude {peak:.2e} rad is below the detection floor; "
            f"the metronome appears stopped")
    a = x[:-1]
    b = x[1:]
    idx = np.nonzero((a < 0.0) & (b >= 0.0))[0]
    if len(idx) < 3:
        raise PhaseError(f"only {len(idx)} upward zero crossings; need >= 3")
    frac = -a[idx] / (b[idx] - a[idx])
    times = t0 + (idx + frac) / sample_rate
    return PhaseSeries(times=times, source_id=source_id, sample_rate=sample_rate)


@dataclass(frozen=True)
class WrappedSeries:
    """Wrapped phase difference on a uniform grid over the overlap."""

    times: np.ndarray
    values: np.ndarray
    ratio: tuple[int, int] = (1, 1)
    label: str = ""

    def trailing(self, window: float, t_end: float | None = None) -> "WrappedSeries":
        end = self.times[-1] if t_end is None else t_end
        mask = (self.times >= end - window) & (self.times <= end + 1e-12)
        return WrappedSeries(self.times[mask], self.values[mask], self.ratio, self.label)

    @property
    def span(self) -> float:
        return float(self.times[-1] - self.times[0])


def phase_difference(a: PhaseSeries, b: PhaseSeries,
                     ratio: tuple[int, int] = (1, 1)) -> WrappedSeries:
    """Wrapped generalized difference na*phi_a - nb*phi_b on the overlap.

    ``ratio = (na, nb)`` satisfies na*f_a = nb*f_b at lock: compare two
    like oscillators with (1, 1); compare a 1 Hz oscillator `a` against a
    2 Hz reference `b` with (2, 1). The grid runs at the coarser of the
    two series' rates (their source sample rates when known, else their
    crossing rates).
    """
    na, nb = ratio
    if na < 1 or nb < 1:
        raise PhaseError("ratio counts must be positive integers")
    lo = max(a.t_start, b.t_start)
    hi = min(a.t_end, b.t_end)
    if hi <= lo:
        raise PhaseError("phase series do not overlap in time")
    rate = min(a.sample_rate or a.mean_frequency,
               b.sample_rate or b.mean_frequency)
    n = int(math.floor((hi - lo) * rate)) + 1
    times = lo + np.arange(n) / rate
    delta = na * a.at(times) - nb * b.at(times)
    return WrappedSeries(times=times, values=wrap_angle(delta), ratio=(na, nb),
                         label=f"{na}:{nb} {a.source_id}-{b.source_id}")


@dataclass(frozen=True)
class LockReport:
    locked: bool
    mean_offset_psi: float
    drift_rate: float
    window: float
    harmonic_ratio: tuple[int, int]
    spread: float
    spread_tol: float
    drift_tol: float
    t_end: float

    def to_dict(self) -> dict:
        return {
            "locked": self.locked,
            "mean_offset_psi": self.mean_offset_psi,
            "drift_rate": self.drift_rate,
            "window": self.window,
            "harmonic_ratio": list(self.harmonic_ratio),
            "spread": self.spread,
            "spread_tol": self.spread_tol,
            "drift_tol": self.drift_tol,
            "t_end": self.t_end,
        }


def detect_lock(diff: WrappedSeries, window: float = DEFAULT_LOCK_WINDOW,
                drift_tol: float = DEFAULT_DRIFT_TOL,
                spread_tol: float = DEFAULT_SPREAD_TOL,
                t_end: float | None = None) -> LockReport:
    """Judge lock over the trailing window of a wrapped difference.

    Locked means the circular standard deviation stays within spread_tol
    and the least-squares drift of the unwrapped window within drift_tol.
    """
    if window < 5.0:
        raise PhaseError("lock window must cover at least 5 s")
    end = float(diff.times[-1]) if t_end is None else min(float(t_end),
                                                          float(diff.times[-1]))
    tail = diff.trailing(window, end)
    step = (diff.times[-1] - diff.times[0]) / max(len(diff.times) - 1, 1)
    if len(tail.times) < 5 or tail.span < window - 2.0 * step - 1e-9:
        raise PhaseError(
            f"insufficient data: window {window}s needs coverage, have "
            f"{tail.span:.1f}s / {len(tail.times)} points")
    z_sin = float(np.mean(np.sin(tail.values)))
    z_cos = float(np.mean(np.cos(tail.values)))
    r = math.hypot(z_sin, z_cos)
    psi = math.atan2(z_sin, z_cos)
    spread = math.sqrt(max(0.0, -2.0 * math.log(max(r, 1e-300))))
    unwrapped = np.unwrap(tail.values)
    drift = float(np.polyfit(tail.times, unwrapped, 1)[0])
    locked = (spread <= spread_tol) and (abs(drift) <= drift_tol)
    return LockReport(locked=locked, mean_offset_psi=psi, drift_rate=drift,
                      window=window, harmonic_ratio=diff.ratio, spread=spread,
                      spread_tol=spread_tol, drift_tol=drift_tol,
                      t_end=float(end))


@dataclass(frozen=True)
class BitReading:
    value: str                 # "zero" | "one" | "undefined"
    confidence: float          # rad from the nearest decision boundary
    reference_psi0: float

    def to_dict(self) -> dict:
        return {"value": self.value, "confidence": self.confidence,
                "reference_psi0": self.reference_psi0}


def decode_bit(report: LockReport, reference_psi0: float,
               guard: float = DEFAULT_GUARD) -> BitReading:
    """Decode the stored bit from a locked report, relative to the phase
    captured when the latch was first set.

    Offsets within pi/2 - guard of the reference decode as zero; within
    the same distance of reference + pi as one; the guard band between
    decodes as undefined (rejects re-locking transients).
    """
    if not report.locked:
        raise PhaseError("cannot decode a bit from an unlocked report")
    d0 = abs(wrap_angle(report.mean_offset_psi - reference_psi0))
    d1 = math.pi - d0
    edge = math.pi / 2 - guard
    if d0 < edge:
        return BitReading("zero", edge - d0, reference_psi0)
    if d1 < edge:
        return BitReading("one", edge - d1, reference_psi0)
    conf = min(abs(d0 - edge), abs(d0 - (math.pi / 2 + guard)))
    return BitReading("undefined", conf, reference_psi0)


@dataclass(frozen=True)
class LissajousFigure:
    points: np.ndarray
    aspect: float
    major_axis_angle: float
    closure: float

    def to_dict(self) -> dict:
        return {"aspect": self.aspect, "major_axis_angle": self.major_axis_angle,
                "closure": self.closure, "n_points": int(len(self.points))}


def lissajous(xa, xb, grid: int = 32) -> LissajousFigure:
    """Pair two series into a figure and measure its shape.

    aspect = sqrt(lambda_min/lambda_max) of the point covariance (a line
    scores near 0, an isotropic cloud near 1); major_axis_angle is the
    principal direction in (-pi/2, pi/2]; closure = 1 - (occupied cells /
    total cells) on a grid over the bounding box, a qualitative measure
    of how much of the plane the curve fills.
    """
    xa = np.asarray(xa, dtype=float)
    xb = np.asarray(xb, dtype=float)
    if xa.shape != xb.shape or xa.ndim != 1:
        raise PhaseError("series must be 1-D and equal length")
    if len(xa) < 4:
        raise PhaseError("need at least 4 points")
    sa = float(np.ptp(xa))
    sb = float(np.ptp(xb))
    if sa == 0.0 and sb == 0.0:
        raise PhaseError("both series are constant; figure is degenerate")
    cxx = float(np.var(xa))
    cyy = float(np.var(xb))
    cxy = float(np.mean((xa - xa.mean()) * (xb - xb.mean())))
    tr = cxx + cyy
    disc = math.sqrt((cxx - cyy) ** 2 + 4.0 * cxy * cxy)
    lam_max = 0.5 * (tr + disc)
    lam_min = max(0.5 * (tr - disc), 0.0)
    aspect = math.sqrt(lam_min / lam_max) if lam_max > 0 else 0.0
    angle = 0.5 * math.atan2(2.0 * cxy, cxx - cyy)
    if angle <= -math.pi / 2:
        angle += math.pi
    elif angle > math.pi / 2:
        angle -= math.pi
    # occupancy on the bounding box (degenerate axes collapse to one row)
    def cells(v, span):
        if span == 0.0:
            return np.zeros(len(v), dtype=int)
        return np.minimum(((v - v.min()) / span * grid).astype(int), grid - 1)
    ia = cells(xa, sa)
    ib = cells(xb, sb)
    occupied = len(set(zip(ia.tolist(), ib.tolist())))
    closure = 1.0 - occupied / (grid * grid)
    return LissajousFigure(points=np.column_stack([xa, xb]), aspect=aspect,
                           major_axis_angle=angle, closure=closure)


@dataclass(frozen=True)
class RotationSense:
    chirality: str              # "cw" | "ccw" | "degenerate"
    signed_area_rate: float     # m^2/s, positive = counterclockwise

    def to_dict(self) -> dict:
        return {"chirality": self.chirality,
                "signed_area_rate": self.signed_area_rate}


def rotation_sense(positions, sample_rate: float,
                   threshold: float = 1e-9) -> RotationSense:
    """Chirality of a planar orbit from the mean swept-area rate.

    rate = mean of (x*vy - y*vx)/2 with centered-difference velocities.
    """
    p = np.asarray(positions, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or len(p) < 8:
        raise PhaseError("need an (N, 2) position series with N >= 8")
    if float(np.ptp(p[:, 0])) == 0.0 and float(np.ptp(p[:, 1])) == 0.0:
        raise PhaseError("platform never moved; no orbit to classify")
    x = p[:, 0] - p[:, 0].mean()
    y = p[:, 1] - p[:, 1].mean()
    vx = np.gradient(x) * sample_rate
    vy = np.gradient(y) * sample_rate
    rate = float(np.mean(0.5 * (x * vy - y * vx)))
    if rate > threshold:
        chir = "ccw"
    elif rate < -threshold:
        chir = "cw"
    else:
        chir = "degenerate"
    return RotationSense(chirality=chir, signed_area_rate=rate)
