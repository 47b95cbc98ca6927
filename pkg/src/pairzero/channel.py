"""Block-fading uplink: payloads, over-the-air superposition, channel inversion.

Baseband is real-valued.  Each client pre-compensates its channel so that
``h_k * alpha_k = c`` for a common aggregation gain ``c``; only ``|h_k|``
enters the power and privacy analysis.
"""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, InvalidChannelError
from .rng import derive_key, normal_stream


@dataclass(frozen=True)
class ChannelRealization:
    gains: np.ndarray
    noise_power: float

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=np.float64)
        if gains.ndim != 1 or gains.size < 1:
            raise InvalidArgumentError("gains must be a non-empty 1-d array")
        if not np.all(gains > 0):
            raise InvalidChannelError("all channel gains must be > 0")
        if not self.noise_power > 0:
            raise InvalidArgumentError(f"noise power N0 must be > 0, got {self.noise_power}")
        object.__setattr__(self, "gains", gains)

    @property
    def K(self):
        return self.gains.size


@dataclass(frozen=True)
class OtaPayload:
    signal: float
    power_used: float


@dataclass(frozen=True)
class EffectiveNoise:
    m: float


def rayleigh_gains(channel_seed, t, K):
    """Unit-second-moment Rayleigh amplitudes for all K clients at iteration t.

    Client ``k`` uses normals ``2k`` and ``2k+1`` of the stream keyed by
    ``(channel_seed, t)``.
    """
    u = normal_stream(derive_key(channel_seed, t), 2 * K).reshape(K, 2)
    return np.sqrt((u * u).sum(axis=1) / 2.0)


def sample_channel(K, t, channel_seed, noise_power=1.0):
    if K < 1:
        raise InvalidArgumentError(f"K must be >= 1, got {K}")
    return ChannelRealization(rayleigh_gains(channel_seed, t, K), noise_power)


def sample_horizon(K, T, channel_seed):
    """(T, K) gain matrix; row ``t`` is iteration ``t + 1``."""
    if K < 1:
        raise InvalidArgumentError(f"K must be >= 1, got {K}")
    gains = np.empty((T, K))
    for t in range(T):
        gains[t] = rayleigh_gains(channel_seed, t + 1, K)
    return gains


def _check_link(h_k, c, sigma_k):
    if not h_k > 0:
        raise InvalidChannelError(f"channel gain must be > 0, got {h_k}")
    if not c > 0:
        raise InvalidArgumentError(f"aggregation gain c must be > 0, got {c}")
    if sigma_k < 0:
        raise InvalidArgumentError(f"artificial noise std must be >= 0, got {sigma_k}")


def _draw_noise(sigma_k, noise_key):
    if sigma_k == 0:
        return 0.0
    return sigma_k * float(normal_stream(noise_key, 1)[0])


def sign(x):
    """Sign with ``sign(0) = +1``."""
    return 1.0 if x >= 0 else -1.0


def make_analog_payload(p, h_k, c, sigma_k, noise_key, d, gamma):
    """Transmit ``alpha_k (p + n_k)`` with ``alpha_k = c / h_k``.

    ``power_used`` is the expected transmit power under the clip bound,
    ``(c/h_k)^2 (gamma^2 + d sigma_k^2)``.
    """
    _check_link(h_k, c, sigma_k)
    alpha = c / h_k
    value = p.value if hasattr(p, "value") else float(p)
    n_k = _draw_noise(sigma_k, noise_key)
    return OtaPayload(alpha * (value + n_k), alpha * alpha * (gamma * gamma + d * sigma_k * sigma_k))


def make_digital_payload(p, h_k, c, sigma_k, noise_key, d):
    """Transmit ``alpha_k (sign(p) + n_k)``; each client sends its own sign."""
    _check_link(h_k, c, sigma_k)
    alpha = c / h_k
    value = p.value if hasattr(p, "value") else float(p)
    n_k = _draw_noise(sigma_k, noise_key)
    return OtaPayload(alpha * (sign(value) + n_k), alpha * alpha * (1.0 + d * sigma_k * sigma_k))


def superpose(payloads, chan, server_noise_key):
    """``y = sum_k h_k x_k + z`` with ``z ~ N(0, N0)``."""
    if len(payloads) != chan.K:
        raise InvalidArgumentError(
            f"got {len(payloads)} payloads for a {chan.K}-client channel")
    signals = np.array([pl.signal for pl in payloads])
    z = math.sqrt(chan.noise_power) * float(normal_stream(server_noise_key, 1)[0])
    return float(np.dot(chan.gains, signals)) + z


def channel_invert(y, K, c):
    """Server estimate ``y / (K c)``."""
    if not c > 0:
        raise InvalidArgumentError(f"aggregation gain c must be > 0, got {c}")
    if K < 1:
        raise InvalidArgumentError(f"K must be >= 1, got {K}")
    return y / (K * c)


def effective_noise_std(c, sigma, N0):
    """Std of ``c sum_k n_k + z``: ``sqrt(c^2 sum sigma_k^2 + N0)``."""
    if not c >= 0:
        raise InvalidArgumentError(f"c must be >= 0, got {c}")
    if not N0 > 0:
        raise InvalidArgumentError(f"N0 must be > 0, got {N0}")
    sigma = np.asarray(sigma, dtype=np.float64)
    if np.any(sigma < 0):
        raise InvalidArgumentError("artificial noise std must be >= 0")
    return EffectiveNoise(math.sqrt(c * c * float(np.sum(sigma * sigma)) + N0))
