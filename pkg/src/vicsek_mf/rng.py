"""Counter-based Gaussian streams (Philox4x32-10).

Every draw is a pure function of ``(seed, tag word, particle id, step)``, so
two systems that must share Brownian increments can be integrated separately
and still consume bit-identical noise.
"""

from enum import IntEnum

import numba
import numpy as np

PHILOX_M0 = 0xD2511F53
PHILOX_M1 = 0xCD9E8D57
PHILOX_W0 = 0x9E3779B9
PHILOX_W1 = 0xBB67AE85
MASK32 = 0xFFFFFFFF


class SystemTag(IntEnum):
    INTERACTING = 1
    NONLINEAR = 2
    REFERENCE = 3
    AUXILIARY = 4  # projections, test fixtures; never a particle system


class Purpose(IntEnum):
    INCREMENT = 0
    INIT_POSITION = 1
    INIT_ORIENTATION = 2
    DIRECTIONS = 3


def stream_tag(tag, coupled=True):
    """Tag actually fed to the generator.

    Under coupling the nonlinear system aliases the interacting streams.
    """
    tag = SystemTag(tag)
    if coupled and tag is SystemTag.NONLINEAR:
        return SystemTag.INTERACTING
    return tag


def tag_word(tag, purpose=Purpose.INCREMENT):
    return (int(tag) << 24) | (int(purpose) << 16)


@numba.njit(inline="always")
def _mulhilo(a, b):
    p = np.uint64(a) * np.uint64(b)
    return np.uint64(p >> np.uint64(32)), np.uint64(p & np.uint64(MASK32))


@numba.njit(nogil=True, cache=True)
def philox4x32(c0, c1, c2, c3, k0, k1):
    """Ten rounds of Philox4x32 on one counter block; inputs are < 2**32."""
    m = np.uint64(MASK32)
    c0 = np.uint64(c0)
    c1 = np.uint64(c1)
    c2 = np.uint64(c2)
    c3 = np.uint64(c3)
    k0 = np.uint64(k0)
    k1 = np.uint64(k1)
    for r in range(10):
        if r > 0:
            k0 = (k0 + np.uint64(PHILOX_W0)) & m
            k1 = (k1 + np.uint64(PHILOX_W1)) & m
        hi0, lo0 = _mulhilo(PHILOX_M0, c0)
        hi1, lo1 = _mulhilo(PHILOX_M1, c2)
        c0, c1, c2, c3 = hi1 ^ c1 ^ k0, lo1, hi0 ^ c3 ^ k1, lo0
    return c0, c1, c2, c3


@numba.njit(inline="always")
def _to_unit(a, b):
    # 53-bit double in [0, 1)
    return ((a >> np.uint64(5)) * 67108864.0 + (b >> np.uint64(6))) / 9007199254740992.0


@numba.njit(nogil=True, cache=True)
def _uniform_pair(seed, word, pid, step, block):
    k0 = np.uint64(seed) & np.uint64(MASK32)
    k1 = np.uint64(seed) >> np.uint64(32)
    s0 = np.uint64(step) & np.uint64(MASK32)
    s1 = np.uint64(step) >> np.uint64(32)
    c2 = np.uint64(word) | (np.uint64(block) & np.uint64(0xFFFF))
    r0, r1, r2, r3 = philox4x32(s0, np.uint64(pid), c2, s1, k0, k1)
    return _to_unit(r0, r1), _to_unit(r2, r3)


@numba.njit(nogil=True, cache=True)
def _normals_kernel(seed, word, ids, step, d, block0, out):
    nblocks = (d + 1) // 2
    for i in range(ids.shape[0]):
        for b in range(nblocks):
            u1, u2 = _uniform_pair(seed, word, ids[i], step, block0 + b)
            r = np.sqrt(-2.0 * np.log(1.0 - u1))
            t = 2.0 * np.pi * u2
            out[i, 2 * b] = r * np.cos(t)
            if 2 * b + 1 < d:
                out[i, 2 * b + 1] = r * np.sin(t)


@numba.njit(nogil=True, cache=True)
def _uniforms_kernel(seed, word, ids, step, n, block0, out):
    nblocks = (n + 1) // 2
    for i in range(ids.shape[0]):
        for b in range(nblocks):
            u1, u2 = _uniform_pair(seed, word, ids[i], step, block0 + b)
            out[i, 2 * b] = u1
            if 2 * b + 1 < n:
                out[i, 2 * b + 1] = u2


def _as_ids(ids):
    ids = np.ascontiguousarray(np.atleast_1d(ids), dtype=np.int64)
    if ids.size and (ids.min() < 0 or ids.max() > MASK32):
        raise ValueError("particle ids must lie in [0, 2**32)")
    return ids


def _check_seed(seed):
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    return seed


def normals(seed, tag, ids, step, d, purpose=Purpose.INCREMENT, block=0):
    """Standard normals of shape ``(len(ids), d)`` for one step.

    Row ``i`` depends only on ``(seed, tag, purpose, ids[i], step, block)``.
    ``block`` offsets the counter block, used for resampling attempts.
    """
    ids = _as_ids(ids)
    out = np.empty((ids.shape[0], d))
    nb = (d + 1) // 2
    _normals_kernel(np.uint64(_check_seed(seed)), np.uint64(tag_word(tag, purpose)),
                    ids, np.uint64(step), d, block * nb, out)
    return out


def uniforms(seed, tag, ids, step, n, purpose=Purpose.INCREMENT, block=0):
    """Uniforms on [0, 1) of shape ``(len(ids), n)``; same purity as :func:`normals`."""
    ids = _as_ids(ids)
    out = np.empty((ids.shape[0], n))
    nb = (n + 1) // 2
    _uniforms_kernel(np.uint64(_check_seed(seed)), np.uint64(tag_word(tag, purpose)),
                     ids, np.uint64(step), n, block * nb, out)
    return out


def derive_seed(master_seed, *keys):
    """Child 64-bit seed for replica/grid-point ``keys`` via numpy's SeedSequence."""
    ss = np.random.SeedSequence(_check_seed(master_seed), spawn_key=tuple(int(k) for k in keys))
    lo, hi = ss.generate_state(2, dtype=np.uint32)
    return int(lo) | (int(hi) << 32)
