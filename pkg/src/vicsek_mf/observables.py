"""Statistics tying particle data to the kinetic equation.

Weak form used by :func:`weak_form_residual`: for a test function
Phi(x, w) on R^d x S^{d-1},

    d/dt <Phi, F_t> = < w.grad_x Phi + Lap_w Phi - grad_w Phi . (H*F_t), F_t >,

where grad_w Phi is tangent, so projecting H*F_t first changes nothing. The
minus sign comes from the drift -P(w)(H*F) of the particle dynamics.
"""

from dataclasses import dataclass, field

import numpy as np
from scipy import special

from . import rng
from .homogeneous_spectral import OrderParameter
from .kernels import interaction_sums
from .rng import Purpose, SystemTag

# Coefficient of the dt part of the residual band, from scripts/calibrate_band.py
# (kappa = 0, coord_v_1, d = 2, N = 256, 32 replicas, dt = 2e-3, 8 seeds; max 36.9).
WEAK_FORM_DT_COEFF = 37.0
DEFAULT_DIRECTIONS = 64

TEST_FUNCTION_IDS = ("constant", "coord_x_k", "coord_v_k", "quadratic_x", "x_dot_v",
                     "gaussian_bump_x")


@dataclass(frozen=True)
class TestFunction:
    """Smooth Phi(x, w) with closed-form derivatives on R^d x S^{d-1}.

    Velocity arguments are normalized first, so every method is the
    0-homogeneous extension of its value on the sphere.
    """

    __test__ = False  # not a pytest class

    id: str
    k: int = 0
    center: tuple = None
    width: float = 1.0

    def __post_init__(self):
        if self.id not in TEST_FUNCTION_IDS:
            raise ValueError(f"unknown test function {self.id!r}")

    @property
    def name(self):
        if self.id in ("coord_x_k", "coord_v_k"):
            return self.id[:-1] + str(self.k + 1)
        return self.id

    def _prep(self, x, v):
        x = np.atleast_2d(np.asarray(x, dtype=float))
        v = np.atleast_2d(np.asarray(v, dtype=float))
        w = v / np.linalg.norm(v, axis=1, keepdims=True)
        return x, w

    def _bump(self, x):
        c = np.zeros(x.shape[1]) if self.center is None else np.asarray(self.center, dtype=float)
        r = x - c
        return r, np.exp(-np.sum(r * r, axis=1) / (2.0 * self.width**2))

    def value(self, x, v):
        x, w = self._prep(x, v)
        if self.id == "constant":
            return np.ones(x.shape[0])
        if self.id == "coord_x_k":
            return x[:, self.k].copy()
        if self.id == "coord_v_k":
            return w[:, self.k].copy()
        if self.id == "quadratic_x":
            return np.sum(x * x, axis=1)
        if self.id == "x_dot_v":
            return np.sum(x * w, axis=1)
        return self._bump(x)[1]

    def grad_x(self, x, v):
        x, w = self._prep(x, v)
        g = np.zeros_like(x)
        if self.id == "coord_x_k":
            g[:, self.k] = 1.0
        elif self.id == "quadratic_x":
            g = 2.0 * x
        elif self.id == "x_dot_v":
            g = w.copy()
        elif self.id == "gaussian_bump_x":
            r, b = self._bump(x)
            g = -r / self.width**2 * b[:, None]
        return g

    def grad_omega(self, x, v):
        """Tangential gradient on the sphere."""
        x, w = self._prep(x, v)
        g = np.zeros_like(w)
        if self.id == "coord_v_k":
            g[:, self.k] = 1.0
            g -= w[:, self.k:self.k + 1] * w
        elif self.id == "x_dot_v":
            g = x - np.sum(x * w, axis=1, keepdims=True) * w
        return g

    def laplace_beltrami(self, x, v):
        x, w = self._prep(x, v)
        d = x.shape[1]
        if self.id == "coord_v_k":
            return -(d - 1) * w[:, self.k]
        if self.id == "x_dot_v":
            return -(d - 1) * np.sum(x * w, axis=1)
        return np.zeros(x.shape[0])


def generator_terms(phi, positions, velocities, kernel, workers=1):
    """Pointwise generator of the kinetic equation applied to ``phi``.

    H*F is the empirical field of the particles themselves (double sum).
    """
    w = velocities
    out = np.sum(w * phi.grad_x(positions, w), axis=1) + phi.laplace_beltrami(positions, w)
    gw = phi.grad_omega(positions, w)
    if np.any(gw != 0.0):
        field_ = interaction_sums(kernel, positions, w, positions, w, workers=workers)
        out = out - np.sum(gw * field_, axis=1)
    return out


@dataclass
class WeakFormReport:
    times: np.ndarray
    lhs: np.ndarray
    rhs: np.ndarray
    residual: np.ndarray
    band: np.ndarray
    stderr: np.ndarray = field(default=None)
    name: str = ""

    @property
    def coverage(self):
        return float(np.mean(np.abs(self.residual) <= self.band))


def _uniform_spacing(times):
    times = np.asarray(times, dtype=float)
    if times.size < 3:
        raise ValueError("weak-form residual needs at least 3 snapshots")
    gaps = np.diff(times)
    if np.max(np.abs(gaps - gaps[0])) > 1e-9 * max(1.0, abs(gaps[0])):
        raise ValueError("snapshots are not uniformly spaced in time")
    return gaps[0]


def _snap_arrays(snap):
    if hasattr(snap, "positions"):
        return snap.time, snap.step, snap.positions, snap.velocities
    return snap  # (time, step, positions, velocities)


def weak_form_residual(trajectories, phi, kernel, dt=None, dt_coeff=WEAK_FORM_DT_COEFF, workers=1):
    """Centered-difference residual of the weak form at interior snapshot times.

    ``trajectories`` is one trajectory or a list of replica trajectories; each
    trajectory is a sequence of snapshots (ParticleState or
    ``(time, step, positions, velocities)``). Band = 2 * replica standard error
    + ``dt_coeff`` * dt, with dt the integrator step inferred from the step
    counters unless given.
    """
    if trajectories and (hasattr(trajectories[0], "positions") or
                         isinstance(trajectories[0], tuple)):
        trajectories = [trajectories]
    lhs_r, rhs_r, times = [], [], None
    for traj in trajectories:
        snaps = [_snap_arrays(s) for s in traj]
        t = np.array([s[0] for s in snaps])
        spacing = _uniform_spacing(t)
        if times is None:
            times = t
            if dt is None:
                dt = spacing / (snaps[1][1] - snaps[0][1])
        elif t.shape != times.shape or np.any(t != times):
            raise ValueError("replica trajectories use different snapshot times")
        m = np.array([np.mean(phi.value(x, v)) for _, _, x, v in snaps])
        lhs_r.append((m[2:] - m[:-2]) / (2.0 * spacing))
        rhs_r.append(np.array([np.mean(generator_terms(phi, x, v, kernel, workers=workers))
                               for _, _, x, v in snaps[1:-1]]))
    lhs_r = np.array(lhs_r)
    rhs_r = np.array(rhs_r)
    res_r = lhs_r - rhs_r
    R = res_r.shape[0]
    se = np.std(res_r, axis=0, ddof=1) / np.sqrt(R) if R > 1 else np.zeros(res_r.shape[1])
    band = 2.0 * se + dt_coeff * dt
    return WeakFormReport(times[1:-1], lhs_r.mean(axis=0), rhs_r.mean(axis=0), res_r.mean(axis=0),
                          band, se, phi.name)


def polar_order_particles(velocities):
    v = velocities.velocities if hasattr(velocities, "velocities") else velocities
    v = np.atleast_2d(np.asarray(v, dtype=float))
    if v.shape[0] == 0:
        raise ValueError("polar order of an empty state")
    return OrderParameter(np.mean(v, axis=0))


def _w2_sorted(a, b):
    # exact W2 between empirical laws of sorted columns a (n, D), b (m, D)
    n, m = a.shape[0], b.shape[0]
    if n == m:
        return np.sqrt(np.mean((a - b) ** 2, axis=0))
    u = np.union1d(np.arange(n + 1) / n, np.arange(m + 1) / m)
    mid = 0.5 * (u[1:] + u[:-1])
    ia = np.minimum((mid * n).astype(np.int64), n - 1)
    ib = np.minimum((mid * m).astype(np.int64), m - 1)
    return np.sqrt(np.sum(np.diff(u)[:, None] * (a[ia] - b[ib]) ** 2, axis=0))


def projection_directions(m, n_directions=DEFAULT_DIRECTIONS, seed=0):
    g = rng.normals(seed, SystemTag.AUXILIARY, np.arange(n_directions), 0, m,
                    purpose=Purpose.DIRECTIONS)
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def sliced_w2(sample_a, sample_b, n_directions=DEFAULT_DIRECTIONS, seed=0):
    """Mean over random unit directions of the exact 1-D W2 between projections."""
    a = np.asarray(sample_a, dtype=float)
    b = np.asarray(sample_b, dtype=float)
    a = a[:, None] if a.ndim == 1 else a
    b = b[:, None] if b.ndim == 1 else b
    if a.shape[0] == 0 or b.shape[0] == 0:
        raise ValueError("sliced W2 of an empty sample")
    if a.shape[1] != b.shape[1]:
        raise ValueError("samples live in different dimensions")
    dirs = projection_directions(a.shape[1], n_directions, seed)
    pa = np.sort(a @ dirs.T, axis=0)
    pb = np.sort(b @ dirs.T, axis=0)
    return float(np.mean(_w2_sorted(pa, pb)))


def default_bandwidth(n):
    return 0.5 * n ** (-0.2)


def kde_circle(angles, bandwidth=None, n_grid=512):
    """Von Mises kernel density estimate on a uniform theta grid.

    The kernel exp(cos(theta)/h^2) / (2 pi I0(1/h^2)) has Fourier coefficients
    I_k(1/h^2)/I0(1/h^2), so the estimate is summed exactly as a Fourier
    series, truncated once those ratios fall below 1e-17.
    Returns ``(theta, density)``.
    """
    th = np.asarray(angles, dtype=float).ravel()
    if th.size == 0:
        raise ValueError("kde_circle needs at least one angle")
    h = default_bandwidth(th.size) if bandwidth is None else float(bandwidth)
    if not h > 0:
        raise ValueError("bandwidth must be positive")
    nu = 1.0 / h**2
    kmax = 1
    while special.ive(kmax, nu) / special.ive(0, nu) > 1e-17:
        kmax *= 2
    ks = np.arange(1, kmax + 1)
    rho = special.ive(ks, nu) / special.ive(0, nu)
    kmax = int(np.max(np.flatnonzero(rho > 1e-17), initial=-1)) + 1
    z = np.exp(-1j * th)
    zk = np.ones_like(z)
    coef = np.empty(kmax, dtype=complex)
    for k in range(kmax):
        zk *= z
        coef[k] = np.mean(zk)
    theta = 2.0 * np.pi * np.arange(n_grid) / n_grid
    f = np.full(n_grid, 1.0)
    if kmax:
        phase = np.exp(1j * np.outer(theta, np.arange(1, kmax + 1)))
        f += 2.0 * np.real(phase @ (rho[:kmax] * coef))
    f /= 2.0 * np.pi
    f /= np.sum(f) * (2.0 * np.pi / n_grid)  # periodic trapezoid rule
    return theta, f


def l1_on_grid(f, g, theta):
    return float(np.sum(np.abs(f - g)) * (theta[1] - theta[0]))


def angles_of(velocities):
    v = np.asarray(velocities)
    return np.arctan2(v[:, 1], v[:, 0])
