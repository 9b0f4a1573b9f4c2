"""The N-particle interacting system: alignment drift and time stepping."""

from dataclasses import dataclass, field, replace

import numpy as np

from . import rng
from .errors import StateCorruptionError
from .kernels import InteractionKernel, interaction_sums
from .rng import Purpose, SystemTag
from .sde_stepper import StepParams, position_step, velocity_step
from .sphere_core import (
    STATE_TOL,
    sample_uniform_sphere,
    sample_von_mises_fisher,
    tangent_project,
)


@dataclass
class ParticleState:
    """Positions ``(N, d)``, unit velocities ``(N, d)``, time and step counter.

    ``ids`` are the Gaussian stream ids of the particles; permuting particles
    together with their ids permutes trajectories exactly.
    """

    positions: np.ndarray
    velocities: np.ndarray
    time: float = 0.0
    step: int = 0
    ids: np.ndarray = field(default=None)

    def __post_init__(self):
        self.positions = np.ascontiguousarray(self.positions, dtype=float)
        self.velocities = np.ascontiguousarray(self.velocities, dtype=float)
        if self.ids is None:
            self.ids = np.arange(self.positions.shape[0], dtype=np.int64)
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if self.positions.ndim != 2 or self.positions.shape != self.velocities.shape:
            raise ValueError("positions and velocities must both have shape (N, d)")
        if self.ids.shape != (self.positions.shape[0],):
            raise ValueError("need one stream id per particle")

    @property
    def N(self):
        return self.positions.shape[0]

    @property
    def d(self):
        return self.positions.shape[1]

    def copy(self):
        return replace(self, positions=self.positions.copy(), velocities=self.velocities.copy(),
                       ids=self.ids.copy())

    def permuted(self, perm):
        perm = np.asarray(perm)
        return replace(self, positions=self.positions[perm], velocities=self.velocities[perm],
                       ids=self.ids[perm])

    def validate(self, tol=STATE_TOL):
        bad = ~np.isfinite(self.positions).all(axis=1) | ~np.isfinite(self.velocities).all(axis=1)
        if bad.any():
            raise StateCorruptionError(f"non-finite state at particle {int(np.flatnonzero(bad)[0])}")
        dev = np.abs(np.linalg.norm(self.velocities, axis=1) - 1.0)
        if (dev > tol).any():
            i = int(np.argmax(dev))
            raise StateCorruptionError(f"velocity of particle {i} has norm off by {dev[i]:.3e}")
        return self


def initial_state(N, d, seed, tag=SystemTag.INTERACTING, position_mean=0.0, position_sd=1.0,
                  orientation="uniform", vmf_mu=None, vmf_kappa=0.0):
    """I.i.d. initial data: Gaussian positions, uniform or von Mises-Fisher orientations."""
    ids = np.arange(N, dtype=np.int64)
    mean = np.broadcast_to(np.asarray(position_mean, dtype=float), (d,))
    x = mean + position_sd * rng.normals(seed, tag, ids, 0, d, purpose=Purpose.INIT_POSITION)
    if orientation == "uniform":
        v = sample_uniform_sphere(seed, tag, ids, d)
    elif orientation == "vmf":
        mu = np.eye(d)[0] if vmf_mu is None else np.asarray(vmf_mu, dtype=float)
        v = sample_von_mises_fisher(mu, vmf_kappa, seed, tag, ids)
    else:
        raise ValueError(f"unknown orientation law {orientation!r}")
    return ParticleState(x, v)


def canonical_sources(state):
    """Positions and velocities ordered by stream id.

    Summing sources in id order makes every drift independent of how the
    particles happen to be laid out in memory (exact exchangeability).
    """
    ids = state.ids
    if ids.size < 2 or np.all(ids[1:] > ids[:-1]):
        return state.positions, state.velocities
    order = np.argsort(ids, kind="stable")
    return state.positions[order], state.velocities[order]


def mean_field_sum(state, kernel, workers=1, use_cells=True):
    """(1/N) sum_j K(X_i - X_j)(V_i - V_j) for every particle (not yet projected)."""
    xs, vs = canonical_sources(state)
    return interaction_sums(kernel, state.positions, state.velocities, xs, vs,
                            workers=workers, use_cells=use_cells)


def mean_field_drifts(state, kernel, workers=1, use_cells=True):
    """Projected alignment drift for all particles at once."""
    s = mean_field_sum(state, kernel, workers=workers, use_cells=use_cells)
    return -tangent_project(state.velocities, s, check=False)


def empirical_mean_field_drift(state, kernel, i):
    if not 0 <= i < state.N:
        raise IndexError(f"particle index {i} out of range for N={state.N}")
    xs, vs = canonical_sources(state)
    s = interaction_sums(kernel, state.positions[i:i + 1], state.velocities[i:i + 1], xs, vs)[0]
    return -tangent_project(state.velocities[i], s)


def step_with_drift(state, drift, params, seed, tag, xi=None):
    """Move every particle one step given precomputed drifts."""
    if xi is None:
        xi = rng.normals(seed, tag, state.ids, state.step, state.d)
    v = velocity_step(state.velocities, drift, xi, params)
    x = position_step(state.positions, state.velocities, params.dt)
    new = ParticleState(x, v, time=state.time + params.dt, step=state.step + 1, ids=state.ids)
    if not (np.isfinite(x).all() and np.isfinite(v).all()):
        new.validate()
    return new


def advance_system(state, kernel, params, seed, tag=SystemTag.INTERACTING, workers=1,
                   use_cells=True, xi=None):
    """One synchronous step: all drifts are read from the pre-step state."""
    if not np.isfinite(state.velocities).all() or not np.isfinite(state.positions).all():
        state.validate()
    drift = mean_field_drifts(state, kernel, workers=workers, use_cells=use_cells)
    return step_with_drift(state, drift, params, seed, tag, xi=xi)


def n_steps_for(T, dt):
    n = int(round(T / dt))
    if T < 0 or abs(n * dt - T) > 1e-9 * max(1.0, T):
        raise ValueError(f"horizon T={T} is not a nonnegative multiple of dt={dt}")
    return n


def run_simulation(initial, kernel, params, T, seed, record_every=1, tag=SystemTag.INTERACTING,
                   workers=1, callback=None):
    """Integrate to ``T`` and return snapshots at step multiples of ``record_every``.

    ``callback(state)`` replaces snapshot collection when given (returns None).
    """
    if record_every < 1:
        raise ValueError("record_every must be >= 1")
    n = n_steps_for(T, params.dt)
    state = initial.copy()
    snaps = []
    emit = callback if callback is not None else snaps.append
    emit(state.copy())
    for k in range(1, n + 1):
        state = advance_system(state, kernel, params, seed, tag=tag, workers=workers)
        if k % record_every == 0:
            emit(state.copy())
    return None if callback is not None else snaps


__all__ = [
    "InteractionKernel", "ParticleState", "StepParams", "advance_system",
    "empirical_mean_field_drift", "initial_state", "mean_field_drifts", "run_simulation",
]
