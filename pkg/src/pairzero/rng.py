"""Counter-based random streams.

A stream is identified by a 64-bit key.  Uniform ``i`` of the stream is the
SplitMix64 finaliser applied to ``key + (i + 1) * GOLDEN`` (mod 2**64), mapped
to the open interval (0, 1) from its top 53 bits.  Normals come from the
Box-Muller transform over consecutive pairs of uniforms.  Nothing here touches
global or library RNG state, so a stream is a pure function of its key.
"""

import math

import numpy as np

from ._accel import njit, pick
from .errors import InvalidArgumentError

MASK64 = 0xFFFFFFFFFFFFFFFF
GOLDEN = 0x9E3779B97F4A7C15
_MUL1 = 0xBF58476D1CE4E5B9
_MUL2 = 0x94D049BB133111EB
_INV_2_53 = 1.0 / 9007199254740992.0
_TWO_PI = 2.0 * math.pi


def mix64(z):
    """SplitMix64 finaliser on a Python int."""
    z &= MASK64
    z = ((z ^ (z >> 30)) * _MUL1) & MASK64
    z = ((z ^ (z >> 27)) * _MUL2) & MASK64
    return z ^ (z >> 31)


def derive_key(seed, *indices):
    """Fold ``seed`` and any number of nonnegative indices into a stream key."""
    key = mix64(int(seed) + GOLDEN)
    for i in indices:
        i = int(i)
        if i < 0:
            raise InvalidArgumentError(f"stream index must be nonnegative, got {i}")
        key = mix64(key ^ mix64((i + 1) * GOLDEN))
    return key


# ---------------------------------------------------------------------------
# numba kernels

@njit
def _uniforms_nb(key, n):
    out = np.empty(n, dtype=np.float64)
    golden = np.uint64(GOLDEN)
    m1 = np.uint64(_MUL1)
    m2 = np.uint64(_MUL2)
    s30 = np.uint64(30)
    s27 = np.uint64(27)
    s31 = np.uint64(31)
    s11 = np.uint64(11)
    for i in range(n):
        z = key + np.uint64(i + 1) * golden
        z = (z ^ (z >> s30)) * m1
        z = (z ^ (z >> s27)) * m2
        z = z ^ (z >> s31)
        out[i] = (np.float64(z >> s11) + 0.5) * _INV_2_53
    return out


@njit
def _normals_nb(key, n):
    npairs = (n + 1) // 2
    u = _uniforms_nb(key, 2 * npairs)
    out = np.empty(2 * npairs, dtype=np.float64)
    for j in range(npairs):
        r = math.sqrt(-2.0 * math.log(u[2 * j]))
        theta = _TWO_PI * u[2 * j + 1]
        out[2 * j] = r * math.cos(theta)
        out[2 * j + 1] = r * math.sin(theta)
    return out[:n]


# ---------------------------------------------------------------------------
# numpy kernels

def _uniforms_np(key, n):
    idx = np.arange(1, n + 1, dtype=np.uint64)
    z = np.uint64(key) + idx * np.uint64(GOLDEN)
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    z ^= z >> np.uint64(31)
    return ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53


def _normals_np(key, n):
    npairs = (n + 1) // 2
    u = _uniforms_np(key, 2 * npairs)
    r = np.sqrt(-2.0 * np.log(u[0::2]))
    theta = _TWO_PI * u[1::2]
    out = np.empty(2 * npairs)
    out[0::2] = r * np.cos(theta)
    out[1::2] = r * np.sin(theta)
    return out[:n]


def _mix64_np(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


def child_keys_np(key, start, count):
    """Keys ``derive``-folded from ``key`` with indices ``start .. start+count-1``."""
    idx = np.arange(start + 1, start + count + 1, dtype=np.uint64)
    return _mix64_np(np.uint64(key) ^ _mix64_np(idx * np.uint64(GOLDEN)))


def normal_rows_np(keys, n):
    """Row ``i`` equals ``normal_stream(keys[i], n)``."""
    npairs = (n + 1) // 2
    idx = np.arange(1, 2 * npairs + 1, dtype=np.uint64)
    z = _mix64_np(keys[:, None] + idx[None, :] * np.uint64(GOLDEN))
    u = ((z >> np.uint64(11)).astype(np.float64) + 0.5) * _INV_2_53
    r = np.sqrt(-2.0 * np.log(u[:, 0::2]))
    theta = _TWO_PI * u[:, 1::2]
    out = np.empty((keys.size, 2 * npairs))
    out[:, 0::2] = r * np.cos(theta)
    out[:, 1::2] = r * np.sin(theta)
    return out[:, :n]


@njit
def mix64_nb(z):
    z = (z ^ (z >> np.uint64(30))) * np.uint64(_MUL1)
    z = (z ^ (z >> np.uint64(27))) * np.uint64(_MUL2)
    return z ^ (z >> np.uint64(31))


@njit
def child_key_nb(key, i):
    return mix64_nb(key ^ mix64_nb(np.uint64(i + 1) * np.uint64(GOLDEN)))


_uniforms = pick(_uniforms_nb, _uniforms_np)
_normals = pick(_normals_nb, _normals_np)


def uniform_stream(key, n):
    """``n`` doubles in (0, 1) from stream ``key``."""
    if n < 0:
        raise InvalidArgumentError(f"n must be nonnegative, got {n}")
    return _uniforms(np.uint64(key & MASK64), int(n))


def normal_stream(key, n):
    """``n`` standard normals from stream ``key`` (Box-Muller)."""
    if n < 0:
        raise InvalidArgumentError(f"n must be nonnegative, got {n}")
    return _normals(np.uint64(key & MASK64), int(n))
