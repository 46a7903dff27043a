"""metrolatch: coupled metronomes on a rolling platform, from basic
synchronization through sub-harmonic injection locking to a working
phase-encoded one-bit memory, with analysis tools, canned experiments,
a CLI, and a live websocket bench."""

from .assembly import (Assembly, AssemblyConfig, AssemblyError, MetronomeConfig,
                       MetronomeParams, Mobility, PlatformConfig, PlatformParams,
                       StateVector, build_assembly)
from .calibrate import (CalibrationError, LimitCycle, calibrate_frequency,
                        limit_cycle_state, measure_limit_cycle)
from .dynamics import (DynamicsError, StateDerivative, derivatives,
                       horizontal_momentum, mechanical_energy)
from .engine import IntegrationError, Trajectory, integrate, rk4_step
from .events import Event, EventError, EventSchedule, apply_event
from .experiments import (BitEvent, ExperimentReport, LatchProtocol, Segment,
                          SweepGrid, initial_state, run_latch_experiment,
                          run_shil_demo, run_sync_demo, sweep_arnold_tongue)
from .phase import (BitReading, LissajousFigure, LockReport, PhaseError,
                    PhaseSeries, RotationSense, WrappedSeries, decode_bit,
                    detect_lock, lissajous, phase_difference, rotation_sense,
                    wrap_angle, zero_cross_phase)

__version__ = "0.1.0"
