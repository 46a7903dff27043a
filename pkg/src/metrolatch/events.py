"""Timed experimenter actions applied during a simulation.

Event kinds mirror what a person does at the bench: start or stop a
metronome's escapement, grab and hold a pendulum (optionally for a fixed
duration), release it, mirror its state for an idealized instantaneous
phase flip, delay it by a fraction of its own cycle (a timed hold), or
kick its angular velocity.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .assembly import Assembly, StateVector

__all__ = ["Event", "EventSchedule", "apply_event", "EventError", "KINDS"]

KINDS = ("start", "stop", "hold", "release", "mirror", "delay", "impulse")


class EventError(ValueError):
    """Invalid event or event application."""


@dataclass(frozen=True)
class Event:
    time: float
    target: str
    kind: str
    duration: float | None = None       # hold
    fraction: float | None = None       # delay
    d_theta_dot: float | None = None    # impulse

    def __post_init__(self):
        if self.time < 0.0:
            raise EventError(f"event time must be >= 0, got {self.time}")
        if self.kind not in KINDS:
            raise EventError(f"unknown event kind {self.kind!r}; known: {KINDS}")
        if self.kind == "hold":
            if self.duration is not None and not self.duration > 0.0:
                raise EventError("hold duration must be > 0")
        if self.kind == "delay":
            if self.fraction is None or not 0.0 < self.fraction < 1.0:
                raise EventError("delay fraction must be in (0, 1)")
        if self.kind == "impulse" and self.d_theta_dot is None:
            raise EventError("impulse needs d_theta_dot")


@dataclass(frozen=True)
class EventSchedule:
    """Time-ordered events; simultaneous events keep their listed order."""

    events: tuple[Event, ...] = ()

    def __post_init__(self):
        ordered = tuple(sorted(self.events, key=lambda e: e.time))
        object.__setattr__(self, "events", ordered)

    def __len__(self):
        return len(self.events)

    def __iter__(self):
        return iter(self.events)

    @classmethod
    def of(cls, *events: Event) -> "EventSchedule":
        return cls(tuple(events))


def _metronome_frequency(assembly: Assembly, idx: int) -> float:
    met = assembly.metronomes[idx]
    if met.natural_freq_hz is not None:
        return met.natural_freq_hz
    return math.sqrt(assembly.gravity_g / met.length_L) / (2.0 * math.pi)


def hold_duration_for(assembly: Assembly, target: str, fraction: float) -> float:
    """Seconds corresponding to `fraction` of the target's own cycle."""
    idx = assembly.index_of(target)
    return fraction / _metronome_frequency(assembly, idx)


def apply_event(assembly: Assembly, state: StateVector, event: Event) -> StateVector:
    """Apply one event, returning the transformed state.

    Timed aspects (hold auto-release, delay duration) are handled by the
    integrator; this function performs the instantaneous state change.
    """
    idx = assembly.index_of(event.target)
    out = state.copy()
    kind = event.kind
    if kind == "start":
        out.running[idx] = True
    elif kind == "stop":
        out.running[idx] = False
    elif kind in ("hold", "delay"):
        if out.held[idx]:
            raise EventError(f"hold on already-held metronome {event.target!r}")
        out.held[idx] = True
        out.theta_dot[idx] = 0.0
    elif kind == "release":
        if not out.held[idx]:
            raise EventError(f"release on non-held metronome {event.target!r}")
        out.held[idx] = False
        out.theta_dot[idx] = 0.0
    elif kind == "mirror":
        out.theta[idx] = -out.theta[idx]
        out.theta_dot[idx] = -out.theta_dot[idx]
    elif kind == "impulse":
        if out.held[idx]:
            raise EventError(f"impulse on held metronome {event.target!r}")
        out.theta_dot[idx] += event.d_theta_dot
    return out
