"""Differential-privacy budget, per-iteration accounting and a Monte-Carlo check.

The privacy loss of one client's observations over the horizon is

    L = sum_t (2 r_t v_t + v_t^2) / (2 m_t^2),   r_t ~ N(0, m_t^2),

with worst-case sensitivity ``v_t = 2 c_t gamma_t``.  The process is
(eps, delta)-DP when ``sum_t 2 c_t^2 gamma_t^2 / m_t^2 <= R_dp(eps, delta)``.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit, pick
from .errors import InvalidArgumentError, NumericalDomainError, SolverError
from .rng import (GOLDEN, child_key_nb, child_keys_np, derive_key,
                  normal_rows_np, _INV_2_53, _TWO_PI, mix64_nb)

_HALF_LOG_PI = 0.5 * math.log(math.pi)
_MAX_EXP_ARG = 709.78


def c_function(x):
    """``C(x) = sqrt(pi) x exp(x^2)``."""
    if x < 0:
        raise InvalidArgumentError(f"C(x) needs x >= 0, got {x}")
    if x * x > _MAX_EXP_ARG:
        raise NumericalDomainError(
            f"C({x}) overflows float64 (exp argument {x * x:.4g} > {_MAX_EXP_ARG})",
            where="c_function")
    return math.sqrt(math.pi) * x * math.exp(x * x)


def _log_c(x):
    return _HALF_LOG_PI + math.log(x) + x * x


def c_inverse(y, rel_tol=1e-12, max_iter=200):
    """Solve ``C(x) = y`` by bracketing bisection.

    Works on ``log C`` so that targets near the float64 ceiling do not
    overflow; ``|log C(x) - log y| <= rel_tol`` implies relative error
    ``<= rel_tol`` in ``C``.
    """
    if not y > 0:
        raise InvalidArgumentError(f"C^-1 needs y > 0, got {y}")
    if math.isinf(y):
        return math.inf
    target = math.log(y)
    hi = 1.0
    while _log_c(hi) < target:
        hi *= 2.0
    lo = 0.0
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            return mid
        g = _log_c(mid) - target
        if abs(g) <= rel_tol:
            return mid
        if g < 0:
            lo = mid
        else:
            hi = mid
    raise SolverError(f"C^-1({y}) did not converge in {max_iter} bisection steps",
                      solver="c_inverse", diagnostics={"lo": lo, "hi": hi, "y": y})


def r_dp(epsilon, delta):
    """Privacy budget ``(sqrt(eps + x0^2) - x0)^2`` with ``x0 = C^-1(1/delta)``."""
    if not epsilon > 0:
        raise InvalidArgumentError(f"epsilon must be > 0, got {epsilon}")
    if not 0 < delta < 1:
        raise InvalidArgumentError(f"delta out of (0,1): {delta}")
    if math.isinf(epsilon):
        return math.inf
    x0 = c_inverse(1.0 / delta)
    # eps / (sqrt(eps + x0^2) + x0) is the same quantity without cancellation.
    root = epsilon / (math.sqrt(epsilon + x0 * x0) + x0)
    return root * root


def iteration_cost(c, gamma, m):
    """Per-iteration budget use ``2 c^2 gamma^2 / m^2`` (digital: gamma = 1)."""
    m = getattr(m, "m", m)
    if not m > 0:
        raise NumericalDomainError("effective noise std must be > 0", where="m")
    return 2.0 * c * c * gamma * gamma / (m * m)


@dataclass(frozen=True)
class PrivacyCostRecord:
    iteration: int
    cost: float


@dataclass
class PrivacyBudget:
    epsilon: float
    delta: float
    r_dp: float = field(init=False)
    _costs: list = field(default_factory=list, init=False, repr=False)

    def __post_init__(self):
        self.r_dp = r_dp(self.epsilon, self.delta)

    @property
    def consumed(self):
        return math.fsum(self._costs)

    def spend(self, cost):
        if not (cost >= 0 and math.isfinite(cost)):
            raise InvalidArgumentError(f"privacy cost must be finite and >= 0, got {cost}")
        self._costs.append(float(cost))
        return self.consumed


@dataclass(frozen=True)
class AccountantVerdict:
    passed: bool
    slack: float
    consumed: float


ACCOUNTANT_TOL = 1e-9


def accountant_check(records, budget):
    """Pass iff total cost <= R_dp + 1e-9; slack is ``R_dp - total``."""
    costs = [getattr(r, "cost", r) for r in records]
    total = math.fsum(costs)
    limit = getattr(budget, "r_dp", budget)
    return AccountantVerdict(total <= limit + ACCOUNTANT_TOL, limit - total, total)


# ---------------------------------------------------------------------------
# Monte-Carlo privacy-loss tail

@njit
def _tail_count_nb(a, key, trials, epsilon):
    # a[t] = v_t / m_t; L = sum_t (g_t a_t + a_t^2 / 2) with g_t ~ N(0, 1)
    T = a.size
    shift = 0.0
    for t in range(T):
        shift += 0.5 * a[t] * a[t]
    npairs = (T + 1) // 2
    golden = np.uint64(GOLDEN)
    s11 = np.uint64(11)
    hits = 0
    for i in range(trials):
        k = child_key_nb(key, i)
        loss = shift
        for j in range(npairs):
            z1 = mix64_nb(k + np.uint64(2 * j + 1) * golden)
            z2 = mix64_nb(k + np.uint64(2 * j + 2) * golden)
            u1 = (np.float64(z1 >> s11) + 0.5) * _INV_2_53
            u2 = (np.float64(z2 >> s11) + 0.5) * _INV_2_53
            r = math.sqrt(-2.0 * math.log(u1))
            th = _TWO_PI * u2
            loss += r * math.cos(th) * a[2 * j]
            if 2 * j + 1 < T:
                loss += r * math.sin(th) * a[2 * j + 1]
        if abs(loss) > epsilon:
            hits += 1
    return hits


def _tail_count_np(a, key, trials, epsilon, chunk_elems=2_000_000):
    T = a.size
    shift = 0.5 * float(np.dot(a, a))
    rows = max(1, chunk_elems // max(T, 1))
    hits = 0
    for start in range(0, trials, rows):
        count = min(rows, trials - start)
        g = normal_rows_np(child_keys_np(key, start, count), T)
        loss = g @ a + shift
        hits += int(np.count_nonzero(np.abs(loss) > epsilon))
    return hits


_tail_count = pick(_tail_count_nb, _tail_count_np)


def montecarlo_privacy_tail(schedule, gamma, epsilon, trials=100_000, seed=0):
    """Empirical ``P(|L| > epsilon)`` under worst-case sensitivity.

    ``schedule`` needs ``c`` (length T) and ``effective_noise()`` (length T);
    ``gamma`` is a scalar or a length-T sequence.
    """
    if trials < 10_000:
        raise InvalidArgumentError(f"need at least 1e4 trials, got {trials}")
    c = np.asarray(schedule.c, dtype=np.float64)
    m = np.asarray(schedule.effective_noise(), dtype=np.float64)
    gamma = np.broadcast_to(np.asarray(gamma, dtype=np.float64), c.shape)
    a = 2.0 * c * gamma / m
    if c.size == 0 or not np.any(a):
        return 0.0
    key = derive_key(seed, 0xD9)
    hits = _tail_count(np.ascontiguousarray(a), np.uint64(key), int(trials), float(epsilon))
    return hits / trials


def mills_tail_bound(a_sq_sum, epsilon):
    """Analytic bound ``exp(-q^2) / (q sqrt(pi))`` used in the DP proof."""
    q = (epsilon - 0.5 * a_sq_sum) / math.sqrt(2.0 * a_sq_sum)
    if q <= 0:
        return 1.0
    return math.exp(-q * q) / (q * math.sqrt(math.pi))
