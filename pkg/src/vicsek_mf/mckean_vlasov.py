"""Nonlinear (McKean-Vlasov) particles driven by a reference ensemble, and the
synchronous coupling with the interacting system.

The law f_t of the nonlinear process is approximated by the empirical measure
of an independent self-interacting ensemble of ``M`` particles evolved on its
own streams. The ``N`` nonlinear particles read that ensemble but never feed
back into it, so they stay mutually independent given the ensemble.
"""

from dataclasses import dataclass

import numpy as np

from .errors import StreamAliasingError
from .kernels import interaction_sums
from .particle_system import (
    ParticleState,
    advance_system,
    canonical_sources,
    initial_state,
    step_with_drift,
)
from .rng import SystemTag, stream_tag
from .sphere_core import tangent_project

DEFAULT_M_MULTIPLIER = 8


@dataclass
class ReferenceEnsemble:
    state: ParticleState

    @property
    def M(self):
        return self.state.N


@dataclass
class CoupledPairState:
    interacting: ParticleState
    nonlinear: ParticleState
    reference: ReferenceEnsemble
    coupled: bool = True

    @property
    def time(self):
        return self.interacting.time

    def check_aliasing(self):
        """Both halves must draw the same increments: same resolved tag, ids and step."""
        a = stream_tag(SystemTag.INTERACTING, self.coupled)
        b = stream_tag(SystemTag.NONLINEAR, self.coupled)
        if a != b:
            raise StreamAliasingError("nonlinear system is not aliased to the interacting streams")
        if self.interacting.step != self.nonlinear.step:
            raise StreamAliasingError("coupled halves are at different step indices")
        if not np.array_equal(self.interacting.ids, self.nonlinear.ids):
            raise StreamAliasingError("coupled halves use different stream ids")


def nonlinear_drift(x, v, ensemble, kernel, workers=1):
    """-P(v) (H * f)(x, v) with f replaced by the ensemble's empirical law.

    ``x`` and ``v`` may be single vectors or ``(n, d)`` batches.
    """
    ref = ensemble.state if isinstance(ensemble, ReferenceEnsemble) else ensemble
    if ref.N == 0:
        raise ValueError("reference ensemble is empty")
    single = np.ndim(v) == 1
    x2 = np.atleast_2d(x)
    v2 = np.atleast_2d(v)
    xs, vs = canonical_sources(ref)
    s = interaction_sums(kernel, x2, v2, xs, vs, workers=workers)
    out = -tangent_project(v2, s)
    return out[0] if single else out


def advance_reference(ensemble, kernel, params, seed, workers=1):
    new = advance_system(ensemble.state, kernel, params, seed, tag=SystemTag.REFERENCE,
                         workers=workers)
    return ReferenceEnsemble(new)


def init_coupled_pair(N, M, d, seed, **law):
    """Identical initial data for both halves; independent data for the ensemble."""
    base = initial_state(N, d, seed, tag=SystemTag.INTERACTING, **law)
    ref = initial_state(M, d, seed, tag=SystemTag.REFERENCE, **law)
    return CoupledPairState(base, base.copy(), ReferenceEnsemble(ref))


def advance_coupled(pair, kernel, params, seed, workers=1, reference_override=None):
    """Advance reference, interacting and nonlinear systems by one step.

    The nonlinear half reads the pre-step ensemble (or ``reference_override``,
    a ParticleState, used for self-coupling checks) and consumes the same
    increments as the interacting half.
    """
    pair.check_aliasing()
    ref_pre = pair.reference if reference_override is None else reference_override
    new_ref = advance_reference(pair.reference, kernel, params, seed, workers=workers)

    new_inter = advance_system(pair.interacting, kernel, params, seed,
                               tag=stream_tag(SystemTag.INTERACTING, pair.coupled), workers=workers)

    nl = pair.nonlinear
    drift = nonlinear_drift(nl.positions, nl.velocities, ref_pre, kernel, workers=workers)
    new_nl = step_with_drift(nl, drift, params, seed, stream_tag(SystemTag.NONLINEAR, pair.coupled))
    return CoupledPairState(new_inter, new_nl, new_ref, pair.coupled)


def coupling_gap(pair):
    """Per-particle |X - Xbar|^2 + |V - Vbar|^2 (ambient Euclidean distance)."""
    dx = pair.interacting.positions - pair.nonlinear.positions
    dv = pair.interacting.velocities - pair.nonlinear.velocities
    return np.sum(dx * dx, axis=1) + np.sum(dv * dv, axis=1)
