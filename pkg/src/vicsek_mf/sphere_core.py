"""Geometry of the unit sphere S^{d-1} in R^d and samplers on it.

All functions act on the last axis, so a single vector ``(d,)`` and a batch
``(n, d)`` are handled alike.
"""

import numba
import numpy as np

from . import rng
from .errors import DegenerateVectorError, StateCorruptionError
from .rng import Purpose, SystemTag

ALGEBRA_TOL = 1e-12
STATE_TOL = 1e-6
DEGENERATE_NORM = 1e-8
MAX_RESAMPLE = 100
SUPPORTED_DIMS = (2, 3)


def check_unit(v, tol=STATE_TOL):
    v = np.asarray(v, dtype=float)
    dev = np.abs(np.linalg.norm(v, axis=-1) - 1.0)
    if np.any(~(dev <= tol)):
        worst = int(np.argmax(np.where(np.isnan(dev), np.inf, dev).ravel()))
        raise StateCorruptionError(
            f"velocity off the unit sphere by {dev.ravel()[worst]:.3e} (index {worst})")
    return v


def tangent_project(v, y, check=True):
    """Project ``y`` onto the tangent space of the sphere at unit vector ``v``.

    Returns ``y - (v.y) v``, i.e. ``(I - v v^T) y``.
    """
    v = np.asarray(v, dtype=float)
    y = np.asarray(y, dtype=float)
    if check:
        check_unit(v)
    return y - np.sum(v * y, axis=-1, keepdims=True) * v


def normalize_to_sphere(w):
    """Retract ``w`` onto the sphere; raises if ``|w| <= 1e-8``."""
    w = np.asarray(w, dtype=float)
    nrm = np.linalg.norm(w, axis=-1, keepdims=True)
    if np.any(~(nrm > DEGENERATE_NORM)):
        raise DegenerateVectorError(
            "cannot normalize a (near) zero vector; time step too large?")
    return w / nrm


def gaussian_increment(seed, tag, particle_id, step, d):
    """d i.i.d. standard normals for one (seed, tag, particle, step) coordinate."""
    return rng.normals(seed, tag, [particle_id], step, d)[0]


def sample_uniform_sphere(seed, tag, ids, d, step=0, purpose=Purpose.INIT_ORIENTATION):
    """Uniform points on S^{d-1}, one per id, by normalizing Gaussian vectors."""
    ids = np.atleast_1d(np.asarray(ids, dtype=np.int64))
    out = np.empty((ids.size, d))
    todo = np.arange(ids.size)
    for attempt in range(MAX_RESAMPLE):
        g = rng.normals(seed, tag, ids[todo], step, d, purpose=purpose, block=attempt)
        nrm = np.linalg.norm(g, axis=1)
        ok = nrm > DEGENERATE_NORM
        out[todo[ok]] = g[ok] / nrm[ok, None]
        todo = todo[~ok]
        if todo.size == 0:
            return out
    raise RuntimeError("uniform sphere sampling exceeded the resampling cap")


def _frame(mu):
    """Orthonormal basis of the tangent plane at unit vector ``mu`` in R^3."""
    a = np.array([1.0, 0.0, 0.0]) if abs(mu[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = a - np.dot(a, mu) * mu
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(mu, e1)
    return e1, e2


@numba.njit(nogil=True, cache=True)
def _von_mises_angles(seed, word, ids, step, kappa, max_attempts, out):
    # Best-Fisher rejection with a wrapped-Cauchy envelope; angles relative to mu.
    if kappa < 1e-5:
        s = 1.0 / kappa + kappa
    else:
        r = 1.0 + np.sqrt(1.0 + 4.0 * kappa * kappa)
        rho = (r - np.sqrt(2.0 * r)) / (2.0 * kappa)
        s = (1.0 + rho * rho) / (2.0 * rho)
    for i in range(ids.shape[0]):
        done = False
        for attempt in range(max_attempts):
            u, v = rng._uniform_pair(seed, word, ids[i], step, 2 * attempt)
            u3, _ = rng._uniform_pair(seed, word, ids[i], step, 2 * attempt + 1)
            z = np.cos(np.pi * u)
            w = (1.0 + s * z) / (s + z)
            y = kappa * (s - w)
            vv = 1.0 - v  # (0, 1]
            if y * (2.0 - y) - vv >= 0.0 or np.log(y / vv) + 1.0 - y >= 0.0:
                w = min(1.0, max(-1.0, w))
                ang = np.arccos(w)
                out[i] = -ang if u3 < 0.5 else ang
                done = True
                break
        if not done:
            return i
    return -1


def sample_von_mises_fisher(mu, kappa, seed, tag, ids, step=0, purpose=Purpose.INIT_ORIENTATION):
    """Draws from the density proportional to exp(kappa mu.w) on S^{d-1}, d in {2, 3}."""
    mu = normalize_to_sphere(np.asarray(mu, dtype=float))
    if kappa < 0:
        raise ValueError(f"von Mises-Fisher concentration must be >= 0, got {kappa}")
    d = mu.shape[0]
    if d not in SUPPORTED_DIMS:
        raise ValueError(f"dimension {d} not supported")
    ids = np.atleast_1d(np.asarray(ids, dtype=np.int64))
    if kappa < 1e-12:
        return sample_uniform_sphere(seed, tag, ids, d, step=step, purpose=purpose)
    if d == 2:
        ang = np.empty(ids.size)
        bad = _von_mises_angles(np.uint64(seed), np.uint64(rng.tag_word(tag, purpose)),
                                ids, np.uint64(step), float(kappa), 2 * MAX_RESAMPLE, ang)
        if bad >= 0:
            raise RuntimeError(f"von Mises rejection sampler exhausted for particle {bad}")
        ang = ang + np.arctan2(mu[1], mu[0])
        return np.stack([np.cos(ang), np.sin(ang)], axis=1)
    u = rng.uniforms(seed, tag, ids, step, 2, purpose=purpose)
    # exact inverse CDF of w = mu.omega on S^2
    w = 1.0 + np.log(u[:, 0] + (1.0 - u[:, 0]) * np.exp(-2.0 * kappa)) / kappa
    w = np.clip(w, -1.0, 1.0)
    phi = 2.0 * np.pi * u[:, 1]
    e1, e2 = _frame(mu)
    s = np.sqrt(1.0 - w * w)
    out = w[:, None] * mu + s[:, None] * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2)
    return normalize_to_sphere(out)


def random_rotation(seed, d):
    """Haar-random rotation (det +1) from a seeded QR decomposition."""
    g = rng.normals(seed, SystemTag.AUXILIARY, np.arange(d), 0, d, purpose=Purpose.DIRECTIONS)
    q, r = np.linalg.qr(g)
    q = q * np.sign(np.diag(r))
    if np.linalg.det(q) < 0:
        q[:, 0] = -q[:, 0]
    return q
