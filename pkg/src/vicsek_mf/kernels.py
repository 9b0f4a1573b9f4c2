"""Bounded Lipschitz interaction kernels and the pairwise alignment sums.

The central quantity is

    S_i = (1/m) sum_j K(xt_i - xs_j) (vt_i - vs_j)

for targets ``(xt, vt)`` and sources ``(xs, vs)``. The interacting system
uses itself as source; the nonlinear process uses the reference ensemble.
Every row is reduced sequentially by a single worker, so results do not
depend on how rows are split across workers.
"""

import itertools
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numba
import numpy as np

TOPHAT_FLAT = 0.8
_CHUNK_ROWS = 128


class KernelVariant(str, Enum):
    CONSTANT = "constant"
    GAUSSIAN = "gaussian"
    MOLLIFIED_TOPHAT = "mollified_tophat"


@dataclass(frozen=True)
class InteractionKernel:
    variant: KernelVariant = KernelVariant.CONSTANT
    kappa: float = 1.0
    length_scale: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "variant", KernelVariant(self.variant))
        if not self.kappa >= 0:
            raise ValueError(f"kernel strength must be >= 0, got {self.kappa}")
        if not self.length_scale > 0:
            raise ValueError(f"kernel length scale must be > 0, got {self.length_scale}")

    @property
    def reported_bound(self):
        return self.kappa

    @property
    def reported_lipschitz(self):
        if self.variant is KernelVariant.CONSTANT:
            return 0.0
        if self.variant is KernelVariant.GAUSSIAN:
            # max of r/l^2 exp(-r^2/2l^2) is attained at r = l
            return self.kappa * math.exp(-0.5) / self.length_scale
        # smoothstep 3u^2 - 2u^3 has slope 1.5 at u = 1/2, stretched over 0.2 l
        return self.kappa * 1.5 / ((1.0 - TOPHAT_FLAT) * self.length_scale)

    @property
    def is_null(self):
        return self.kappa == 0.0

    def __call__(self, r):
        return kernel_eval(self, r)


def _smooth_cutoff(t):
    u = np.clip((t - TOPHAT_FLAT) / (1.0 - TOPHAT_FLAT), 0.0, 1.0)
    return 1.0 - u * u * (3.0 - 2.0 * u)


def kernel_eval(kernel, r):
    """K(r) for displacement(s) ``r`` (last axis is the spatial dimension)."""
    r = np.asarray(r, dtype=float)
    dist2 = np.sum(r * r, axis=-1)
    if kernel.variant is KernelVariant.CONSTANT:
        return np.full(dist2.shape, kernel.kappa)[()]
    if kernel.variant is KernelVariant.GAUSSIAN:
        return kernel.kappa * np.exp(-dist2 / (2.0 * kernel.length_scale**2))
    return kernel.kappa * _smooth_cutoff(np.sqrt(dist2) / kernel.length_scale)


# --- gaussian: exponent fill, numpy SIMD exp, row reduction ----------------

@numba.njit(nogil=True, cache=True)
def _gauss_exponent(xt, xsT, inv2l2, out):
    n, d = xt.shape
    m = xsT.shape[1]
    for i in range(n):
        row = out[i]
        for j in range(m):
            row[j] = 0.0
        for k in range(d):
            c = xt[i, k]
            src = xsT[k]
            for j in range(m):
                t = c - src[j]
                row[j] += t * t
        for j in range(m):
            row[j] *= -inv2l2


@numba.njit(nogil=True, cache=True, fastmath={"reassoc", "contract", "nsz"})
def _weighted_diff_sum(w, vt, vsT, out):
    n, d = vt.shape
    m = vsT.shape[1]
    for i in range(n):
        row = w[i]
        for k in range(d):
            c = vt[i, k]
            src = vsT[k]
            s = 0.0
            for j in range(m):
                s += row[j] * (c - src[j])
            out[i, k] = s


def _gaussian_rows(xt, vt, xsT, vsT, inv2l2, out):
    buf = np.empty((xt.shape[0], xsT.shape[1]))
    _gauss_exponent(xt, xsT, inv2l2, buf)
    np.exp(buf, out=buf)
    _weighted_diff_sum(buf, vt, vsT, out)


# --- mollified tophat: direct O(nm) and exact cell list ---------------------

@numba.njit(inline="always")
def _tophat_weight(r2, ell, kappa):
    t = math.sqrt(r2) / ell
    if t <= TOPHAT_FLAT:
        return kappa
    u = (t - TOPHAT_FLAT) / (1.0 - TOPHAT_FLAT)
    return kappa * (1.0 - u * u * (3.0 - 2.0 * u))


@numba.njit(inline="always")
def _tophat_accumulate(xt, vt, xs, vs, i, j, ell2, ell, kappa, acc):
    d = xt.shape[1]
    r2 = 0.0
    for k in range(d):
        t = xt[i, k] - xs[j, k]
        r2 += t * t
    if r2 < ell2:
        w = _tophat_weight(r2, ell, kappa)
        for k in range(d):
            acc[k] += w * (vt[i, k] - vs[j, k])


@numba.njit(nogil=True, cache=True)
def _tophat_direct(xt, vt, xs, vs, kappa, ell, out):
    n, d = xt.shape
    m = xs.shape[0]
    ell2 = ell * ell
    acc = np.empty(d)
    for i in range(n):
        acc[:] = 0.0
        for j in range(m):
            _tophat_accumulate(xt, vt, xs, vs, i, j, ell2, ell, kappa, acc)
        out[i] = acc


@numba.njit(nogil=True, cache=True)
def _tophat_cells(xt, vt, xs, vs, kappa, ell, origin, extent, offsets,
                  order, sorted_keys, out):
    # Candidates are gathered from the 3^d neighbouring cells and visited in
    # increasing source index, i.e. in the same order as the direct loop.
    n, d = xt.shape
    m = xs.shape[0]
    ell2 = ell * ell
    acc = np.empty(d)
    buf = np.empty(m, dtype=np.int64)
    cell = np.empty(d, dtype=np.int64)
    for i in range(n):
        for k in range(d):
            cell[k] = int(math.floor((xt[i, k] - origin[k]) / ell))
        cnt = 0
        for o in range(offsets.shape[0]):
            key = 0
            inside = True
            for k in range(d):
                c = cell[k] + offsets[o, k]
                if c < 0 or c >= extent[k]:
                    inside = False
                    break
                key = key * extent[k] + c
            if not inside:
                continue
            a = np.searchsorted(sorted_keys, key, side="left")
            b = np.searchsorted(sorted_keys, key, side="right")
            for p in range(a, b):
                buf[cnt] = order[p]
                cnt += 1
        cand = np.sort(buf[:cnt])
        acc[:] = 0.0
        for q in range(cnt):
            _tophat_accumulate(xt, vt, xs, vs, i, cand[q], ell2, ell, kappa, acc)
        out[i] = acc


class _CellIndex:
    def __init__(self, xt, xs, ell):
        d = xs.shape[1]
        self.origin = np.minimum(xt.min(axis=0), xs.min(axis=0))
        top = np.maximum(xt.max(axis=0), xs.max(axis=0))
        self.extent = (np.floor((top - self.origin) / ell).astype(np.int64) + 1)
        if np.prod(self.extent.astype(float)) > 2**62:
            raise OverflowError("cell grid too large; positions spread over too many cells")
        cs = np.floor((xs - self.origin) / ell).astype(np.int64)
        keys = np.zeros(xs.shape[0], dtype=np.int64)
        for k in range(d):
            keys = keys * self.extent[k] + cs[:, k]
        self.order = np.argsort(keys, kind="stable").astype(np.int64)
        self.sorted_keys = keys[self.order]
        self.offsets = np.array(list(itertools.product((-1, 0, 1), repeat=d)), dtype=np.int64)


# --- dispatcher -------------------------------------------------------------

def _chunks(n):
    return [(a, min(n, a + _CHUNK_ROWS)) for a in range(0, n, _CHUNK_ROWS)]


def _run_chunks(fn, n, workers):
    spans = _chunks(n)
    if workers <= 1 or len(spans) == 1:
        for a, b in spans:
            fn(a, b)
        return
    with ThreadPoolExecutor(max_workers=workers) as pool:
        list(pool.map(lambda ab: fn(*ab), spans))


def interaction_sums(kernel, xt, vt, xs, vs, workers=1, use_cells=True):
    """(1/m) sum_j K(xt_i - xs_j)(vt_i - vs_j) for every target row i."""
    xt = np.ascontiguousarray(xt, dtype=float)
    vt = np.ascontiguousarray(vt, dtype=float)
    xs = np.ascontiguousarray(xs, dtype=float)
    vs = np.ascontiguousarray(vs, dtype=float)
    n, m = xt.shape[0], xs.shape[0]
    if m == 0:
        raise ValueError("interaction sum over an empty source set")
    out = np.empty_like(vt)
    if n == 0:
        return out
    if kernel.is_null:
        out[:] = 0.0
        return out
    if kernel.variant is KernelVariant.CONSTANT:
        # sum_j kappa (v_i - v_j) / m = kappa (v_i - mean_j v_j)
        return kernel.kappa * (vt - np.mean(vs, axis=0))

    if kernel.variant is KernelVariant.GAUSSIAN:
        xsT = np.ascontiguousarray(xs.T)
        vsT = np.ascontiguousarray(vs.T)
        inv2l2 = 1.0 / (2.0 * kernel.length_scale**2)

        def rows(a, b):
            _gaussian_rows(xt[a:b], vt[a:b], xsT, vsT, inv2l2, out[a:b])
        _run_chunks(rows, n, workers)
        out *= kernel.kappa / m
        return out

    ell = float(kernel.length_scale)
    kappa = float(kernel.kappa)
    if use_cells:
        idx = _CellIndex(xt, xs, ell)

        def rows(a, b):
            _tophat_cells(xt[a:b], vt[a:b], xs, vs, kappa, ell, idx.origin, idx.extent,
                          idx.offsets, idx.order, idx.sorted_keys, out[a:b])
    else:
        def rows(a, b):
            _tophat_direct(xt[a:b], vt[a:b], xs, vs, kappa, ell, out[a:b])
    _run_chunks(rows, n, workers)
    out /= m
    return out
