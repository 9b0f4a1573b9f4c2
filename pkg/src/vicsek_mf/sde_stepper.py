"""One-step integrators for the sphere-valued velocity SDE."""

from dataclasses import dataclass
from enum import Enum

import numpy as np

from .sphere_core import SUPPORTED_DIMS, check_unit, normalize_to_sphere, tangent_project

DT_CAP = 0.1
DEFAULT_DT = 1e-3


class StepScheme(str, Enum):
    STRATONOVICH_PROJECT = "stratonovich_project"
    ITO_CORRECTION_RENORM = "ito_correction_renorm"


@dataclass(frozen=True)
class StepParams:
    dt: float = DEFAULT_DT
    scheme: StepScheme = StepScheme.STRATONOVICH_PROJECT
    d: int = 2

    def __post_init__(self):
        object.__setattr__(self, "scheme", StepScheme(self.scheme))
        if not 0.0 < self.dt <= DT_CAP:
            raise ValueError(f"dt must lie in (0, {DT_CAP}], got {self.dt}")
        if self.d not in SUPPORTED_DIMS:
            raise ValueError(f"d must be one of {SUPPORTED_DIMS}, got {self.d}")


def velocity_step(v, drift, xi, params, return_defect=False):
    """Advance unit velocities by one step.

    ``drift`` is the full signed, already projected mean-field drift and ``xi``
    standard normals. The Stratonovich scheme takes a tangent Euler step and
    retracts; the Ito scheme adds the radial correction ``-(d-1) v dt`` before
    retracting. With ``return_defect`` the pre-normalization ``|w| - 1`` is
    also returned.
    """
    v = check_unit(v)
    dt = params.dt
    w = v + tangent_project(v, np.sqrt(2.0 * dt) * np.asarray(xi), check=False) + np.asarray(drift) * dt
    if params.scheme is StepScheme.ITO_CORRECTION_RENORM:
        w = w - (params.d - 1) * dt * v
    out = normalize_to_sphere(w)
    if return_defect:
        return out, np.linalg.norm(w, axis=-1) - 1.0
    return out


def position_step(x, v, dt):
    return np.asarray(x) + np.asarray(v) * dt
