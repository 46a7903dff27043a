"""Physical description of a metronome bench.

An assembly is a rigid platform carrying one or more escapement-driven
pendulum metronomes. The platform either stays fixed, slides along one
horizontal axis, or translates freely in the horizontal plane; each
metronome swings in a vertical plane whose horizontal direction is set
by its orientation angle.

Angles are radians, lengths meters, masses kilograms, times seconds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

__all__ = [
    "Mobility",
    "MetronomeParams",
    "PlatformParams",
    "Assembly",
    "StateVector",
    "AssemblyConfig",
    "MetronomeConfig",
    "PlatformConfig",
    "AssemblyError",
    "build_assembly",
    "PRESETS",
]

GRAVITY_DEFAULT = 9.81

# Escapement and body defaults shared by the presets.
DEFAULT_BOB_MASS = 0.03
DEFAULT_DAMPING = 0.01
DEFAULT_ESCAPEMENT = 0.5
DEFAULT_REF_ANGLE = 0.5236  # 30 degrees
DEFAULT_PLATFORM_MASS = 0.4
DEFAULT_PLATFORM_DAMPING = 0.02


class AssemblyError(ValueError):
    """Raised when an assembly or config violates its invariants."""


@dataclass(frozen=True)
class Mobility:
    """Platform mobility: 'fixed', 'free_1d' (with axis angle), or 'free_2d'."""

    mode: str
    axis: float = 0.0

    _MODES = ("fixed", "free_1d", "free_2d")

    def __post_init__(self):
        if self.mode not in self._MODES:
            raise AssemblyError(f"mobility.mode must be one of {self._MODES}, got {self.mode!r}")

    @property
    def axis_unit(self) -> tuple[float, float]:
        return (math.cos(self.axis), math.sin(self.axis))


@dataclass(frozen=True)
class MetronomeParams:
    """One metronome: pendulum geometry, escapement, and placement.

    The escapement is an amplitude-regulated negative-damping term
    eps * (1 - (theta/theta_ref)^2) * theta_dot; it sustains a limit
    cycle with peak angle near 2*theta_ref. ``natural_freq_hz`` is
    bookkeeping (the measured limit-cycle frequency when the length
    was chosen by calibration); it never enters the dynamics.
    """

    id: str
    length_L: float
    bob_mass_m: float = DEFAULT_BOB_MASS
    damping_gamma: float = DEFAULT_DAMPING
    escapement_eps: float = DEFAULT_ESCAPEMENT
    ref_angle_theta_ref: float = DEFAULT_REF_ANGLE
    orientation_alpha: float = 0.0
    mount_position: tuple[float, float] = (0.0, 0.0)
    running: bool = True
    natural_freq_hz: float | None = None

    def __post_init__(self):
        for name in ("length_L", "bob_mass_m", "ref_angle_theta_ref"):
            if not getattr(self, name) > 0.0:
                raise AssemblyError(f"metronome {self.id!r}: {name} must be > 0")
        for name in ("damping_gamma", "escapement_eps"):
            if getattr(self, name) < 0.0:
                raise AssemblyError(f"metronome {self.id!r}: {name} must be >= 0")

    @property
    def swing_unit(self) -> tuple[float, float]:
        return (math.cos(self.orientation_alpha), math.sin(self.orientation_alpha))


@dataclass(frozen=True)
class PlatformParams:
    platform_mass_M: float = DEFAULT_PLATFORM_MASS
    damping_cp: float = DEFAULT_PLATFORM_DAMPING
    mobility: Mobility = field(default_factory=lambda: Mobility("free_2d"))

    def __post_init__(self):
        if not self.platform_mass_M > 0.0:
            raise AssemblyError("platform_mass_M must be > 0")
        if self.damping_cp < 0.0:
            raise AssemblyError("damping_cp must be >= 0")


@dataclass(frozen=True)
class Assembly:
    metronomes: tuple[MetronomeParams, ...]
    platform: PlatformParams
    gravity_g: float = GRAVITY_DEFAULT

    def __post_init__(self):
        if len(self.metronomes) == 0:
            raise AssemblyError("assembly needs at least one metronome")
        ids = [m.id for m in self.metronomes]
        if len(set(ids)) != len(ids):
            raise AssemblyError(f"duplicate metronome ids: {ids}")
        if not self.gravity_g > 0.0:
            raise AssemblyError("gravity_g must be > 0")

    @property
    def ids(self) -> tuple[str, ...]:
        return tuple(m.id for m in self.metronomes)

    def index_of(self, met_id: str) -> int:
        for i, m in enumerate(self.metronomes):
            if m.id == met_id:
                return i
        raise KeyError(f"unknown metronome id {met_id!r}")

    def total_mass(self) -> float:
        return self.platform.platform_mass_M + sum(m.bob_mass_m for m in self.metronomes)


@dataclass
class StateVector:
    """Dynamic state: pendulum angles/rates, platform position/velocity,
    per-metronome hold and escapement-engaged flags.

    ``running`` starts from MetronomeParams.running and is toggled by
    start/stop events at run time. A held metronome has theta_dot == 0.
    """

    theta: list[float]
    theta_dot: list[float]
    platform_pos: tuple[float, float] = (0.0, 0.0)
    platform_vel: tuple[float, float] = (0.0, 0.0)
    held: list[bool] = None
    running: list[bool] = None

    def __post_init__(self):
        n = len(self.theta)
        if self.held is None:
            self.held = [False] * n
        if self.running is None:
            self.running = [True] * n
        if not (len(self.theta_dot) == len(self.held) == len(self.running) == n):
            raise AssemblyError("state vector field lengths disagree")

    @classmethod
    def rest(cls, assembly: Assembly) -> "StateVector":
        n = len(assembly.metronomes)
        return cls(theta=[0.0] * n, theta_dot=[0.0] * n,
                   running=[m.running for m in assembly.metronomes])

    def copy(self) -> "StateVector":
        return StateVector(list(self.theta), list(self.theta_dot),
                           self.platform_pos, self.platform_vel,
                           list(self.held), list(self.running))

    def validate(self, assembly: Assembly) -> None:
        n = len(assembly.metronomes)
        if len(self.theta) != n:
            raise AssemblyError(f"state has {len(self.theta)} metronomes, assembly has {n}")
        for x in self.theta + self.theta_dot + list(self.platform_pos) + list(self.platform_vel):
            if not math.isfinite(x):
                raise AssemblyError("non-finite state entry")
        for i in range(n):
            if self.held[i] and self.theta_dot[i] != 0.0:
                raise AssemblyError(f"held metronome {i} must have theta_dot exactly 0")
        if assembly.platform.mobility.mode == "fixed":
            if any(self.platform_pos) or any(self.platform_vel):
                raise AssemblyError("fixed platform requires zero platform position and velocity")


# ---------------------------------------------------------------------------
# configuration schema (shared with the JSON front end)

@dataclass(frozen=True)
class MetronomeConfig:
    id: str
    target_frequency_hz: float | None = None
    length_m: float | None = None
    mass: float = DEFAULT_BOB_MASS
    damping: float = DEFAULT_DAMPING
    escapement_eps: float = DEFAULT_ESCAPEMENT
    theta_ref: float = DEFAULT_REF_ANGLE
    orientation: float = 0.0
    mount_xy: tuple[float, float] = (0.0, 0.0)
    running: bool = True

    def __post_init__(self):
        if (self.target_frequency_hz is None) == (self.length_m is None):
            raise AssemblyError(
                f"metronome {self.id!r}: exactly one of target_frequency_hz or "
                f"length_m must be given")


@dataclass(frozen=True)
class PlatformConfig:
    mass: float = DEFAULT_PLATFORM_MASS
    damping: float = DEFAULT_PLATFORM_DAMPING
    mobility: Mobility = field(default_factory=lambda: Mobility("free_2d"))


@dataclass(frozen=True)
class AssemblyConfig:
    """Validated build request: either a preset name (plus knobs) or an
    explicit metronome list."""

    preset: str | None = None
    seed: int = 0
    gravity: float = GRAVITY_DEFAULT
    platform: PlatformConfig | None = None
    metronomes: tuple[MetronomeConfig, ...] | None = None
    detuning_split_hz: float = 0.01
    injector_trim_hz: float | None = None
    calibration_tol: float = 1e-4


# Reference operating points for the canonical scenarios. The latch and
# SHIL presets run a deliberately heavy injector bob on a light platform
# (strong sub-harmonic injection) and pull the injector's isolated tuning
# below twice the pair frequency so that the on-platform 2:1 resonance is
# centered once platform recoil shifts the effective frequencies.
LATCH_TRIM_DEFAULT = -0.21
SHIL_TRIM_DEFAULT = -0.23
_INJECTOR_MASS = 0.24
_INJECTOR_REF_ANGLE = 0.65
_PAIR_MASS_LATCH = 0.015
_LIGHT_PLATFORM = 0.3
_LIGHT_PLATFORM_DAMPING = 0.05


def _preset_paper_latch(cfg: AssemblyConfig) -> AssemblyConfig:
    split = cfg.detuning_split_hz
    trim = cfg.injector_trim_hz if cfg.injector_trim_hz is not None else LATCH_TRIM_DEFAULT
    mets = (
        MetronomeConfig("red", target_frequency_hz=1.0 - split / 2, mass=_PAIR_MASS_LATCH,
                        orientation=0.0, mount_xy=(-0.12, 0.10)),
        MetronomeConfig("green", target_frequency_hz=1.0 + split / 2, mass=_PAIR_MASS_LATCH,
                        orientation=math.pi / 2, mount_xy=(0.12, 0.10)),
        MetronomeConfig("blue", target_frequency_hz=2.0 + trim, mass=_INJECTOR_MASS,
                        theta_ref=_INJECTOR_REF_ANGLE, orientation=math.pi / 4,
                        mount_xy=(0.0, -0.08), running=False),
    )
    platform = cfg.platform or PlatformConfig(
        mass=_LIGHT_PLATFORM, damping=_LIGHT_PLATFORM_DAMPING, mobility=Mobility("free_2d"))
    return replace(cfg, metronomes=mets, platform=platform)


def _preset_classic_sync(cfg: AssemblyConfig) -> AssemblyConfig:
    split = cfg.detuning_split_hz
    mets = (
        MetronomeConfig("left", target_frequency_hz=1.0 - split / 2,
                        orientation=0.0, mount_xy=(-0.10, 0.0)),
        MetronomeConfig("right", target_frequency_hz=1.0 + split / 2,
                        orientation=0.0, mount_xy=(0.10, 0.0)),
    )
    platform = cfg.platform or PlatformConfig(mobility=Mobility("free_1d", 0.0))
    return replace(cfg, metronomes=mets, platform=platform)


def _preset_shil_pair(cfg: AssemblyConfig) -> AssemblyConfig:
    trim = cfg.injector_trim_hz if cfg.injector_trim_hz is not None else SHIL_TRIM_DEFAULT
    mets = (
        MetronomeConfig("slow", target_frequency_hz=1.0,
                        orientation=0.0, mount_xy=(-0.10, 0.0)),
        MetronomeConfig("fast", target_frequency_hz=2.0 + trim, mass=_INJECTOR_MASS,
                        theta_ref=_INJECTOR_REF_ANGLE, orientation=0.0,
                        mount_xy=(0.10, 0.0)),
    )
    platform = cfg.platform or PlatformConfig(
        mass=_LIGHT_PLATFORM, damping=_LIGHT_PLATFORM_DAMPING,
        mobility=Mobility("free_1d", 0.0))
    return replace(cfg, metronomes=mets, platform=platform)


def _preset_single_fixed(cfg: AssemblyConfig) -> AssemblyConfig:
    mets = (MetronomeConfig("solo", target_frequency_hz=1.0),)
    platform = cfg.platform or PlatformConfig(mobility=Mobility("fixed"))
    return replace(cfg, metronomes=mets, platform=platform)


PRESETS = {
    "paper_latch": _preset_paper_latch,
    "classic_sync": _preset_classic_sync,
    "shil_pair": _preset_shil_pair,
    "single_fixed": _preset_single_fixed,
}


def build_assembly(config: AssemblyConfig) -> Assembly:
    """Resolve presets, calibrate lengths from target frequencies, validate.

    Metronomes given a target frequency get their pendulum length chosen
    so the isolated limit-cycle frequency matches the target; the achieved
    target is recorded as ``natural_freq_hz``.
    """
    from .calibrate import calibrate_frequency  # deferred: calibrate imports dynamics

    if config.preset is not None:
        if config.preset not in PRESETS:
            raise AssemblyError(
                f"unknown preset {config.preset!r}; known: {sorted(PRESETS)}")
        config = PRESETS[config.preset](config)
    if not config.metronomes:
        raise AssemblyError("config has an empty metronome list and no preset")
    platform_cfg = config.platform or PlatformConfig()
    platform = PlatformParams(platform_mass_M=platform_cfg.mass,
                              damping_cp=platform_cfg.damping,
                              mobility=platform_cfg.mobility)
    mets = []
    for mc in config.metronomes:
        base = MetronomeParams(
            id=mc.id,
            length_L=mc.length_m if mc.length_m is not None else 1.0,
            bob_mass_m=mc.mass,
            damping_gamma=mc.damping,
            escapement_eps=mc.escapement_eps,
            ref_angle_theta_ref=mc.theta_ref,
            orientation_alpha=mc.orientation,
            mount_position=mc.mount_xy,
            running=mc.running,
        )
        if mc.target_frequency_hz is not None:
            base = calibrate_frequency(base, mc.target_frequency_hz,
                                       tol=config.calibration_tol,
                                       gravity=config.gravity)
        mets.append(base)
    return Assembly(metronomes=tuple(mets), platform=platform, gravity_g=config.gravity)
