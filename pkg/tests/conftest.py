"""Shared fixtures. Expensive reference runs are session-scoped and reused
by both the module tests and the acceptance suite."""
import math

import pytest

from metrolatch import (Assembly, AssemblyConfig, MetronomeParams, Mobility,
                        PlatformParams, StateVector, build_assembly, integrate)
from metrolatch.experiments import initial_state


def conservative_assembly() -> Assembly:
    """Three pendulums in the latch geometry with every loss channel off."""
    mets = (
        MetronomeParams("a", length_L=0.2485, bob_mass_m=0.03, damping_gamma=0.0,
                        escapement_eps=0.0, orientation_alpha=0.0),
        MetronomeParams("b", length_L=0.2485, bob_mass_m=0.03, damping_gamma=0.0,
                        escapement_eps=0.0, orientation_alpha=math.pi / 2),
        MetronomeParams("c", length_L=0.062, bob_mass_m=0.05, damping_gamma=0.0,
                        escapement_eps=0.0, orientation_alpha=math.pi / 4),
    )
    platform = PlatformParams(platform_mass_M=0.4, damping_cp=0.0,
                              mobility=Mobility("free_2d"))
    return Assembly(metronomes=mets, platform=platform)


def conservative_state() -> StateVector:
    return StateVector(theta=[0.3, -0.25, 0.2], theta_dot=[0.0, 0.1, -0.05])


@pytest.fixture(scope="session")
def conservative_run():
    """100 s at dt=1e-3 with gamma = eps = c_p = 0."""
    assembly = conservative_assembly()
    traj = integrate(assembly, conservative_state(), None, 0.0, 100.0, 1e-3, 60.0)
    return assembly, traj


@pytest.fixture(scope="session")
def latch_assembly():
    return build_assembly(AssemblyConfig(preset="paper_latch", seed=1))


@pytest.fixture(scope="session")
def latch_state(latch_assembly):
    return initial_state(latch_assembly, 1)
