"""Mean-square coupling error between interacting and nonlinear particles
as a function of N, and the log-log rate fit."""

from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NumericalError
from .kernels import InteractionKernel
from .mckean_vlasov import DEFAULT_M_MULTIPLIER, advance_coupled, coupling_gap, init_coupled_pair
from .particle_system import n_steps_for
from .observables import sliced_w2
from .rng import derive_seed
from .sde_stepper import StepParams


@dataclass(frozen=True)
class CouplingSetup:
    """Everything a replica needs besides N and its seed."""

    kernel: InteractionKernel = InteractionKernel("gaussian", 2.0, 1.0)
    params: StepParams = StepParams(dt=4e-3)
    T: float = 1.0
    M_multiplier: int = DEFAULT_M_MULTIPLIER
    seed: int = 20110201
    law: dict = field(default_factory=dict)
    config_hash: str = ""


@dataclass
class CouplingResult:
    N_values: list
    T: float
    errors: np.ndarray
    stderr: np.ndarray
    replicas: int
    config_hash: str = ""
    per_replica: list = field(default_factory=list, repr=False)


@dataclass
class RateFit:
    slope: float
    intercept: float
    r_squared: float


class ReplicaFailure(NumericalError):
    def __init__(self, seed, cause):
        self.seed = seed
        super().__init__(f"replica with seed {seed} failed: {cause}")


def run_coupled(N, setup, seed, times=None, workers=1, callback=None):
    """Evolve one coupled pair to ``setup.T``; return per-particle gaps at the end.

    ``times``: optional step indices at which ``callback(step, pair)`` fires.
    """
    return coupling_gap(evolve_pair(N, setup, seed, times, workers, callback))


def evolve_pair(N, setup, seed, times=None, workers=1, callback=None):
    pair = init_coupled_pair(N, setup.M_multiplier * N, setup.params.d, seed, **setup.law)
    n = n_steps_for(setup.T, setup.params.dt)
    if callback is not None:
        callback(0, pair)
    for k in range(1, n + 1):
        pair = advance_coupled(pair, setup.kernel, setup.params, seed, workers=workers)
        if callback is not None and (times is None or k in times):
            callback(k, pair)
    return pair


def replica_seed(setup, N, r):
    return derive_seed(setup.seed, N, r)


def _replica_error(args):
    N, setup, r = args
    seed = replica_seed(setup, N, r)
    try:
        return float(np.mean(run_coupled(N, setup, seed)))
    except Exception as exc:  # identify the failing replica, keep the cause
        raise ReplicaFailure(seed, exc) from exc


def measure_coupling_error(N, T, replicas, setup, workers=1):
    """Replica mean and standard error of the time-T coupling gap averaged over particles."""
    if N < 2:
        raise ValueError("coupling error needs N >= 2")
    if replicas < 8:
        raise ValueError("need at least 8 replicas")
    if T != setup.T:
        setup = CouplingSetup(**{**setup.__dict__, "T": T})
    jobs = [(N, setup, r) for r in range(replicas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            vals = np.array(list(pool.map(_replica_error, jobs)))
    else:
        vals = np.array([_replica_error(j) for j in jobs])
    # np.mean / np.std reduce contiguous arrays pairwise, independent of worker count
    return float(np.mean(vals)), float(np.std(vals, ddof=1) / np.sqrt(replicas)), vals


def run_coupling_experiment(N_values, replicas, setup, workers=1, progress=None):
    errs, ses, per = [], [], []
    for N in N_values:
        m, se, vals = measure_coupling_error(N, setup.T, replicas, setup, workers=workers)
        errs.append(m)
        ses.append(se)
        per.append(vals)
        if progress:
            progress(N, m, se)
    return CouplingResult(list(N_values), setup.T, np.array(errs), np.array(ses), replicas,
                          setup.config_hash, per)


def fit_convergence_rate(result):
    """Least squares of log(error) on log(N)."""
    N = np.asarray(result.N_values, dtype=float)
    err = np.asarray(result.errors, dtype=float)
    if len(np.unique(N)) < 4:
        raise ValueError("rate fit needs at least 4 distinct N values")
    if np.any(~(err > 0)):
        raise ValueError("cannot fit a rate to nonpositive errors (kappa=0 or T=0 run?)")
    x, y = np.log(N), np.log(err)
    slope, intercept = np.polyfit(x, y, 1)
    ss_res = np.sum((y - (slope * x + intercept)) ** 2)
    ss_tot = np.sum((y - y.mean()) ** 2)
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0 else 1.0
    return RateFit(float(slope), float(intercept), float(min(1.0, max(0.0, r2))))


def _two_particle_sample(args):
    N, setup, r, velocities_only = args
    pair = evolve_pair(N, setup, replica_seed(setup, N, r))

    def rows(s):
        if velocities_only:
            return s.velocities[:2]
        return np.concatenate([s.positions[:2], s.velocities[:2]], axis=1)
    return rows(pair.interacting).ravel(), rows(pair.nonlinear)


def chaos_distance(N, setup, replicas, n_directions=64, seed=0, workers=1, velocities_only=False):
    """Sliced W2 between the two-particle marginal of the interacting system
    and the product of two independent nonlinear one-particle laws.

    Particle 0 of replica r is paired with particle 1 of replica r+1 to build
    the product sample, so both samples have ``replicas`` points.
    ``velocities_only`` drops the positions, which lowers the sampling floor.
    """
    if N < 2 or replicas < 2:
        raise ValueError("chaos distance needs N >= 2 and at least 2 replicas")
    jobs = [(N, setup, r, velocities_only) for r in range(replicas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_two_particle_sample, jobs))
    else:
        out = [_two_particle_sample(j) for j in jobs]
    joint = np.array([o[0] for o in out])
    tagged = [o[1] for o in out]
    product = np.array([np.concatenate([tagged[r][0], tagged[(r + 1) % replicas][1]])
                        for r in range(replicas)])
    return sliced_w2(joint, product, n_directions=n_directions, seed=seed)


def record_coupled_replicas(N, setup, replicas, record_every, workers=1):
    """Snapshots ``(time, step, x, v)`` of both coupled halves for every replica.

    Returns ``(interacting, nonlinear)``, each a list of per-replica trajectories.
    """
    jobs = [(N, setup, r, record_every) for r in range(replicas)]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            out = list(pool.map(_record_replica, jobs))
    else:
        out = [_record_replica(j) for j in jobs]
    return [o[0] for o in out], [o[1] for o in out]


def _record_replica(args):
    N, setup, r, every = args
    inter, nonlin = [], []

    def grab(step, pair):
        if step % every == 0:
            for s, dest in ((pair.interacting, inter), (pair.nonlinear, nonlin)):
                dest.append((s.time, s.step, s.positions.copy(), s.velocities.copy()))
    evolve_pair(N, setup, replica_seed(setup, N, r), callback=grab)
    return inter, nonlin
