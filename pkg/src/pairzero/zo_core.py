"""Seeded perturbations, SPSA gradient projections, clipping and the model step."""

import math
from dataclasses import dataclass

import numpy as np

from .errors import InvalidArgumentError, NumericalDomainError
from .rng import derive_key, normal_stream


@dataclass(frozen=True)
class PerturbationSpec:
    global_seed: int
    iteration: int
    mu: float = 1e-3

    def __post_init__(self):
        if not self.mu > 0:
            raise InvalidArgumentError(f"perturbation scale mu must be > 0, got {self.mu}")
        if self.iteration < 0:
            raise InvalidArgumentError(f"iteration must be >= 0, got {self.iteration}")
        if not 0 <= self.global_seed < 2**64:
            raise InvalidArgumentError("global_seed must be a 64-bit unsigned integer")


@dataclass(frozen=True)
class GradientProjection:
    value: float
    was_clipped: bool = False
    client_id: int = 0


def as_model_vector(w):
    """Validate ``w`` as a finite 1-d float64 parameter vector."""
    w = np.asarray(w, dtype=np.float64)
    if w.ndim != 1 or w.size < 1:
        raise InvalidArgumentError(f"model vector must be 1-d with dim >= 1, got shape {w.shape}")
    if not np.all(np.isfinite(w)):
        raise NumericalDomainError("model vector has non-finite entries", where="w")
    return w


def generate_perturbation(spec, dim):
    """Direction ``z ~ N(0, I_dim)`` shared by every client at ``spec.iteration``.

    The stream key is derived from ``(global_seed, iteration)`` only, so any
    party holding the seed regenerates the identical vector.
    """
    if dim < 1:
        raise InvalidArgumentError(f"dim must be >= 1, got {dim}")
    return normal_stream(derive_key(spec.global_seed, spec.iteration), dim)


def spsa_projection(loss, w, z, mu, batch=None):
    """Central-difference estimate of ``z . grad F(w)``.

    ``loss(w, batch)`` is evaluated at ``w + mu z`` and ``w - mu z`` with the
    same ``batch``.
    """
    if not mu > 0:
        raise InvalidArgumentError(f"mu must be > 0, got {mu}")
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if w.shape != z.shape:
        raise InvalidArgumentError(f"w and z shapes differ: {w.shape} vs {z.shape}")
    f_plus = float(loss(w + mu * z, batch))
    if not math.isfinite(f_plus):
        raise NumericalDomainError(f"loss is {f_plus} at w + mu*z", where="w+mu*z")
    f_minus = float(loss(w - mu * z, batch))
    if not math.isfinite(f_minus):
        raise NumericalDomainError(f"loss is {f_minus} at w - mu*z", where="w-mu*z")
    return (f_plus - f_minus) / (2.0 * mu)


def clip_projection(p, gamma, client_id=0):
    if not gamma > 0:
        raise InvalidArgumentError(f"clip bound gamma must be > 0, got {gamma}")
    p = float(p)
    return GradientProjection(max(-gamma, min(gamma, p)), abs(p) > gamma, client_id)


def apply_update(w, eta, p_hat, z):
    """``w - eta * p_hat * z``; returns a new array."""
    if not eta > 0:
        raise InvalidArgumentError(f"learning rate must be > 0, got {eta}")
    w = np.asarray(w, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    if w.shape != z.shape:
        raise InvalidArgumentError(f"dimension mismatch: w {w.shape} vs z {z.shape}")
    return w - (eta * p_hat) * z
