"""Stochastic Vicsek particles, their McKean-Vlasov limit, and mean-field checks."""

from .kernels import InteractionKernel, KernelVariant
from .particle_system import ParticleState, advance_system, initial_state, run_simulation
from .rng import SystemTag
from .sde_stepper import StepParams, StepScheme

__version__ = "0.1.0"

__all__ = [
    "InteractionKernel", "KernelVariant", "ParticleState", "StepParams", "StepScheme", "SystemTag",
    "advance_system", "initial_state", "run_simulation",
]
