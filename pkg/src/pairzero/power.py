"""Power and artificial-noise schedules.

Both problems reduce, with ``sigma = 0``, to choosing ``x_t = c_t^2 / N0`` per
iteration: the privacy cost of iteration ``t`` is ``2 gamma^2 x_t`` and the
power cap is ``x_t <= P min_k h_k^2 / (N0 gamma^2)``.  The optimal ``x_t``
follow from a single multiplier ``zeta`` found by log-scale bisection so the
privacy constraint binds.

Analog objective (weights ``a_t = A^-t``):   sum_t a_t / x_t
Digital objective (weights ``a_t = Atilde^-t``):
    sum_t a_t (B2 + 1/x_t) / (B2 + 1/x_t + B1)
with ``B1 = K^2 (1 - 2 e0)^2`` and ``B2 = 4 K e0 (1 - e0)``.
The baselines reuse the solvers with reversed weights (``a_t = A^t``) or a
constant gain.
"""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from ._accel import njit, pick
from .errors import InvalidArgumentError, SolverError
from .privacy import ACCOUNTANT_TOL

ZETA_FLOOR = 1e-30
ZETA_REL_TOL = 1e-9
ZETA_MAX_ITER = 500
DIGITAL_BRACKET_FRACTION = 0.999
POWER_REL_TOL = 1e-9


@dataclass(frozen=True)
class SolverInputs:
    gains: np.ndarray          # (T, K) amplitude gains
    P: float
    N0: float
    gamma: float = 1.0
    A: float = 0.998           # analog contraction factor, or Atilde for digital
    e0: float = 0.4960
    d: int = 1

    def __post_init__(self):
        gains = np.asarray(self.gains, dtype=np.float64)
        if gains.ndim != 2:
            raise InvalidArgumentError(f"gains must be (T, K), got shape {gains.shape}")
        if gains.size and not np.all(gains > 0):
            raise InvalidArgumentError("all channel gains must be > 0")
        if gains.shape[1] < 1:
            raise InvalidArgumentError("need K >= 1 clients")
        for name in ("P", "N0", "gamma"):
            if not getattr(self, name) > 0:
                raise InvalidArgumentError(f"{name} must be > 0, got {getattr(self, name)}")
        if not 0 < self.A < 1:
            raise InvalidArgumentError(f"contraction factor must be in (0,1), got {self.A}")
        if not 0 < self.e0 < 0.5:
            raise InvalidArgumentError(f"e0 must be in (0, 1/2), got {self.e0}")
        if self.d < 1:
            raise InvalidArgumentError(f"d must be >= 1, got {self.d}")
        object.__setattr__(self, "gains", gains)

    @property
    def T(self):
        return self.gains.shape[0]

    @property
    def K(self):
        return self.gains.shape[1]

    @property
    def h_min(self):
        return self.gains.min(axis=1) if self.T else np.zeros(0)

    def t_index(self):
        return np.arange(1, self.T + 1, dtype=np.float64)


@dataclass
class PowerSchedule:
    c: np.ndarray
    sigma: np.ndarray
    mode: str
    gamma: float
    N0: float
    zeta_star: float = 0.0
    full_power_branch: bool = False
    bracket_limit_binds: bool = False
    policy: str = "solution"
    diagnostics: dict = field(default_factory=dict)

    @property
    def T(self):
        return self.c.size

    @property
    def sensitivity(self):
        return self.gamma if self.mode == "analog" else 1.0

    def effective_noise(self):
        """``m_t = sqrt(c_t^2 sum_k sigma_kt^2 + N0)`` per iteration."""
        return np.sqrt(self.c ** 2 * np.sum(self.sigma ** 2, axis=1) + self.N0)

    def costs(self):
        """Per-iteration privacy cost ``2 c^2 gamma^2 / m^2`` (gamma = 1 for digital)."""
        m = self.effective_noise()
        g = self.sensitivity
        return 2.0 * self.c ** 2 * g * g / (m * m)

    def total_cost(self):
        return math.fsum(self.costs())

    def power_used(self, gains, d):
        """(T, K) left-hand sides of the per-client power constraints."""
        gains = np.asarray(gains, dtype=np.float64)
        g = self.sensitivity
        return (self.c[:, None] / gains) ** 2 * (g * g + d * self.sigma ** 2)

    def check(self, inputs, r_dp):
        """Raise ``SolverError`` unless the privacy and power constraints hold."""
        total = self.total_cost()
        if total > r_dp + ACCOUNTANT_TOL:
            raise SolverError(
                f"schedule spends {total:.12g} > R_dp {r_dp:.12g}",
                solver=self.policy, diagnostics={"total_cost": total, "r_dp": r_dp})
        if self.T:
            used = self.power_used(inputs.gains, inputs.d)
            worst = float(used.max())
            if worst > inputs.P * (1.0 + POWER_REL_TOL):
                raise SolverError(
                    f"schedule uses power {worst:.12g} > P {inputs.P:.12g}",
                    solver=self.policy, diagnostics={"max_power": worst, "P": inputs.P})
        return self

    def to_csv(self, path):
        costs = self.costs()
        cum = np.cumsum(costs)
        K = self.sigma.shape[1] if self.sigma.ndim == 2 else 0
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(["#schema=pairzero-schedule-v1"])
            writer.writerow(["t", "c_t"] + [f"sigma_{k + 1}" for k in range(K)]
                            + ["cost_t", "cumulative_cost"])
            for t in range(self.T):
                writer.writerow([t + 1, repr(float(self.c[t]))]
                                + [repr(float(s)) for s in self.sigma[t]]
                                + [repr(float(costs[t])), repr(float(cum[t]))])


def _empty(inputs, mode, policy):
    return PowerSchedule(np.zeros(0), np.zeros((0, inputs.K)), mode,
                         inputs.gamma if mode == "analog" else 1.0, inputs.N0, policy=policy)


def _check_mode(mode):
    if mode not in ("analog", "digital"):
        raise InvalidArgumentError(f"mode must be 'analog' or 'digital', got {mode!r}")


def b_constants(e0, K):
    """``(B1, B2) = (K^2 (1 - 2 e0)^2, 4 K e0 (1 - e0))``."""
    return K * K * (1.0 - 2.0 * e0) ** 2, 4.0 * K * e0 * (1.0 - e0)


def power_caps(inputs, mode):
    """Largest admissible ``x_t = c_t^2 / N0`` under the power constraint."""
    g = inputs.gamma if mode == "analog" else 1.0
    return inputs.P * inputs.h_min ** 2 / (inputs.N0 * g * g)


def full_power_condition(inputs, r_dp, mode):
    """True when transmitting at the power cap every iteration stays within budget.

    The cost of the full-power schedule is ``2 P sum_t min_k h_k^2 / N0`` in
    both modes (gamma cancels).  Equality goes to the bisection branch.
    """
    _check_mode(mode)
    spend = 2.0 * inputs.P * math.fsum(inputs.h_min ** 2) / inputs.N0
    return spend < r_dp


def _log_weights(inputs, reverse):
    # log a_t with a_t = A^{-t} (solution) or A^{t} (reversed)
    sign = 1.0 if reverse else -1.0
    return sign * inputs.t_index() * math.log(inputs.A)


def _analog_x(zeta, sqrt_a, caps, gamma):
    return np.minimum(sqrt_a / (math.sqrt(2.0 * zeta) * gamma), caps)


def _digital_x(zeta, a, caps, b1, b2):
    ab = a * b2 * b2
    num = 2.0 * (ab - 2.0 * zeta)
    den = (b1 + b2) * (4.0 * zeta + np.sqrt(8.0 * ab * zeta))
    x = np.where(num > 0, num / den, 0.0)
    return np.minimum(x, caps)


def _bisect_zeta(spend, r_dp, lo, hi, solver):
    """Find zeta with ``spend(zeta)`` within 1e-9 relative of, and not above, ``r_dp``.

    ``spend`` is non-increasing in zeta.  Returns the feasible end of the bracket.
    """
    while spend(lo) < r_dp:
        if lo < 1e-300:
            raise SolverError("no zeta bracket: spend stays below budget at the floor",
                              solver=solver, diagnostics={"zeta_lo": lo, "spend_lo": spend(lo),
                                                          "r_dp": r_dp})
        lo *= 1e-10
    if spend(hi) > r_dp:
        raise SolverError("no zeta bracket: spend exceeds budget at the upper end",
                          solver=solver, diagnostics={"zeta_hi": hi, "spend_hi": spend(hi),
                                                      "r_dp": r_dp})
    s_lo, s_hi = math.log(lo), math.log(hi)
    for it in range(ZETA_MAX_ITER):
        val = spend(math.exp(s_hi))
        if r_dp - val <= ZETA_REL_TOL * r_dp:
            return math.exp(s_hi), it
        mid = 0.5 * (s_lo + s_hi)
        if mid in (s_lo, s_hi):
            break
        if spend(math.exp(mid)) > r_dp:
            s_lo = mid
        else:
            s_hi = mid
    # Flat spend (every term capped) is the only way to stall; the upper end is feasible.
    val = spend(math.exp(s_hi))
    if val <= r_dp:
        return math.exp(s_hi), ZETA_MAX_ITER
    raise SolverError("zeta bisection did not converge", solver=solver,
                      diagnostics={"zeta_lo": math.exp(s_lo), "zeta_hi": math.exp(s_hi),
                                   "spend": val, "r_dp": r_dp})


def _solve(inputs, r_dp, mode, reverse, policy):
    _check_mode(mode)
    if not r_dp > 0:
        raise InvalidArgumentError(f"R_dp must be > 0, got {r_dp}")
    if inputs.T == 0:
        return _empty(inputs, mode, policy)
    g = inputs.gamma if mode == "analog" else 1.0
    caps = power_caps(inputs, mode)
    sigma = np.zeros((inputs.T, inputs.K))
    if full_power_condition(inputs, r_dp, mode):
        x = caps
        sched = PowerSchedule(np.sqrt(inputs.N0 * x), sigma, mode, g, inputs.N0,
                              0.0, True, policy=policy)
        return sched.check(inputs, r_dp)

    log_a = _log_weights(inputs, reverse)
    if mode == "analog":
        sqrt_a = np.exp(0.5 * log_a)

        def spend(zeta):
            return 2.0 * g * g * math.fsum(_analog_x(zeta, sqrt_a, caps, g))

        # With no caps the spend is sum_t 2 gamma sqrt(a_t) / sqrt(2 zeta).
        hi = 0.5 * (2.0 * g * float(np.sum(sqrt_a)) / r_dp) ** 2 * (1.0 + 1e-6)
        zeta, iters = _bisect_zeta(spend, r_dp, ZETA_FLOOR, hi, policy)
        x = _analog_x(zeta, sqrt_a, caps, g)
        binds = False
    else:
        a = np.exp(log_a)
        b1, b2 = b_constants(inputs.e0, inputs.K)

        def spend(zeta):
            return 2.0 * math.fsum(_digital_x(zeta, a, caps, b1, b2))

        # Above 0.5 * a_t * B2^2 iteration t is silent (c_t = 0).
        hi = 0.5 * float(a.max()) * b2 * b2
        zeta, iters = _bisect_zeta(spend, r_dp, ZETA_FLOOR, hi, policy)
        x = _digital_x(zeta, a, caps, b1, b2)
        binds = zeta >= DIGITAL_BRACKET_FRACTION * 0.5 * float(a.min()) * b2 * b2

    sched = PowerSchedule(np.sqrt(inputs.N0 * x), sigma, mode, g, inputs.N0,
                          zeta, False, binds, policy,
                          diagnostics={"bisection_iterations": iters})
    return sched.check(inputs, r_dp)


def solve_p1(inputs, r_dp):
    """Optimal analog schedule: the worst-gain client at full power, or the
    ``A^{-t/4}``-increasing adaptive gain capped by the power limit."""
    return _solve(inputs, r_dp, "analog", reverse=False, policy="solution")


def solve_p2(inputs, r_dp):
    """Optimal sign-based (digital) schedule."""
    return _solve(inputs, r_dp, "digital", reverse=False, policy="solution")


def reversed_schedule(inputs, r_dp, mode="analog"):
    """Baseline with the adaptive exponent flipped, re-bisected to bind the budget."""
    return _solve(inputs, r_dp, mode, reverse=True, policy="reversed")


def static_schedule(inputs, r_dp, mode="analog"):
    """Baseline spending the budget evenly: ``c = sqrt(N0 R_dp / (2 T gamma^2))``, capped."""
    _check_mode(mode)
    if inputs.T == 0:
        return _empty(inputs, mode, "static")
    g = inputs.gamma if mode == "analog" else 1.0
    const = math.sqrt(inputs.N0 * r_dp / (2.0 * inputs.T * g * g))
    cap = np.sqrt(inputs.N0 * power_caps(inputs, mode))
    c = np.minimum(const, cap)
    sched = PowerSchedule(c, np.zeros((inputs.T, inputs.K)), mode, g, inputs.N0,
                          policy="static", diagnostics={"constant_gain": const})
    return sched.check(inputs, r_dp)


def make_schedule(policy, inputs, r_dp, mode):
    if policy == "solution":
        return solve_p1(inputs, r_dp) if mode == "analog" else solve_p2(inputs, r_dp)
    if policy == "static":
        return static_schedule(inputs, r_dp, mode)
    if policy == "reversed":
        return reversed_schedule(inputs, r_dp, mode)
    raise InvalidArgumentError(f"unknown policy {policy!r}")


# ---------------------------------------------------------------------------
# objectives and convergence-bound monitors

def et_upper_bound(e0, K, m, c):
    """Upper bound on the squared sign-reversal probability of the aggregate.

    ``(B2 + m^2/c^2) / (B2 + m^2/c^2 + B1)``; ``c = 0`` (silent iteration)
    gives 1.
    """
    if not 0 <= e0 <= 0.5:
        raise InvalidArgumentError(f"e0 must be in [0, 1/2], got {e0}")
    if c < 0:
        raise InvalidArgumentError(f"c must be >= 0, got {c}")
    if c == 0:
        return 1.0
    b1, b2 = b_constants(e0, K)
    u = (m / c) ** 2
    den = b2 + u + b1
    return (b2 + u) / den if den > 0 else 0.0


def p1_objective(c, sigma, inputs, weights=None):
    """``sum_t A^-t (sum_k sigma_kt^2 + N0 / c_t^2)``."""
    c = np.asarray(c, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    a = np.exp(_log_weights(inputs, False)) if weights is None else weights
    with np.errstate(divide="ignore"):
        u = np.sum(sigma ** 2, axis=1) + inputs.N0 / c ** 2
    return math.fsum(a * u)


def p2_objective(c, sigma, inputs, weights=None):
    """``sum_t Atilde^-t * et_upper_bound`` with ``m^2/c^2 = sum sigma^2 + N0/c^2``."""
    c = np.asarray(c, dtype=np.float64)
    sigma = np.asarray(sigma, dtype=np.float64)
    a = np.exp(_log_weights(inputs, False)) if weights is None else weights
    b1, b2 = b_constants(inputs.e0, inputs.K)
    with np.errstate(divide="ignore", invalid="ignore"):
        u = np.sum(sigma ** 2, axis=1) + inputs.N0 / c ** 2
        term = np.where(c > 0, (b2 + u) / (b2 + u + b1), 1.0)
    return math.fsum(a * term)


def bound_rhs_analog(g0, A, m, c, K, eta, lumped):
    """``A^T G0 + sum_t eta^2 lumped m_t^2 / (A^{t-T} (K c_t)^2)``.

    ``lumped`` stands for ``L S O_r / (2 b)``.
    """
    if not 0 < A < 1:
        raise InvalidArgumentError(f"A must be in (0,1), got {A}")
    m = np.asarray(m, dtype=np.float64)
    c = np.asarray(c, dtype=np.float64)
    T = m.size
    if T == 0:
        return float(g0)
    t = np.arange(1, T + 1)
    terms = eta * eta * lumped * m ** 2 * A ** (T - t) / (K * c) ** 2
    return A ** T * g0 + math.fsum(terms)


def bound_rhs_digital(g0, A_tilde, e_sq, theta, r):
    """``Atilde^T G0 + sum_t Atilde^{T-t} (theta e_t^2 + r)``."""
    if not 0 < A_tilde < 1:
        raise InvalidArgumentError(f"A_tilde must be in (0,1), got {A_tilde}")
    e_sq = np.asarray(e_sq, dtype=np.float64)
    T = e_sq.size
    t = np.arange(1, T + 1)
    return A_tilde ** T * g0 + math.fsum(A_tilde ** (T - t) * (theta * e_sq + r))


# ---------------------------------------------------------------------------
# brute-force grid oracle

@njit
def _grid_min_nb(obj, cost, budget):
    # obj, cost: (3, n) separable per-axis tables; unused axes hold one zero column
    n0, n1, n2 = obj.shape[1], obj.shape[1], obj.shape[1]
    best = np.inf
    bi = np.array([-1, -1, -1])
    for i in range(n0):
        ci = cost[0, i]
        if ci > budget:
            continue
        for j in range(n1):
            cij = ci + cost[1, j]
            if cij > budget:
                continue
            oij = obj[0, i] + obj[1, j]
            if oij >= best:
                continue
            for k in range(n2):
                if cij + cost[2, k] <= budget:
                    o = oij + obj[2, k]
                    if o < best:
                        best = o
                        bi[0] = i
                        bi[1] = j
                        bi[2] = k
    return best, bi


def _grid_min_np(obj, cost, budget):
    best = np.inf
    bi = np.array([-1, -1, -1])
    o12 = obj[1][:, None] + obj[2][None, :]
    c12 = cost[1][:, None] + cost[2][None, :]
    for i in range(obj.shape[1]):
        if cost[0, i] > budget:
            continue
        total = np.where(cost[0, i] + c12 <= budget, obj[0, i] + o12, np.inf)
        flat = int(np.argmin(total))
        if total.flat[flat] < best:
            best = float(total.flat[flat])
            bi = np.array([i, *np.unravel_index(flat, total.shape)])
    return best, bi


_grid_min = pick(_grid_min_nb, _grid_min_np)


@dataclass
class BruteForceResult:
    feasible: bool
    objective: float
    c: np.ndarray
    sigma: np.ndarray
    grids: list


def c_grid(inputs, r_dp, mode, grid_size, span=1e-4):
    """Per-iteration log-spaced candidate gains.

    The top of axis ``t`` is the largest gain allowed by the power cap and by
    spending the whole budget on that single iteration; the grid spans
    ``span`` decades below it.  Digital axes also include 0.
    """
    g = inputs.gamma if mode == "analog" else 1.0
    top = np.minimum(np.sqrt(inputs.N0 * power_caps(inputs, mode)),
                     math.sqrt(inputs.N0 * r_dp / (2.0 * g * g)))
    grids = []
    for hi in top:
        axis = hi * np.logspace(math.log10(span), 0.0, grid_size)
        axis[-1] = hi
        if mode == "digital":
            axis = np.concatenate([[0.0], axis])
        grids.append(axis)
    return grids


def brute_force(inputs, r_dp, mode="analog", grid_size=400, sigma_grid=None, span=1e-4):
    """Exhaustive search over per-iteration gains (and optionally a common
    artificial-noise std per iteration) for T <= 3, K <= 3."""
    _check_mode(mode)
    if inputs.T > 3 or inputs.K > 3:
        raise InvalidArgumentError("brute force is limited to T <= 3 and K <= 3")
    T, K = inputs.T, inputs.K
    g = inputs.gamma if mode == "analog" else 1.0
    a = np.exp(_log_weights(inputs, False))
    b1, b2 = b_constants(inputs.e0, K)
    sig_axis = np.zeros(1) if sigma_grid is None else np.asarray(sigma_grid, dtype=np.float64)
    grids = c_grid(inputs, r_dp, mode, grid_size, span)

    cand_c, cand_s, obj_rows, cost_rows = [], [], [], []
    for t in range(T):
        cc, ss = np.meshgrid(grids[t], sig_axis, indexing="ij")
        cc, ss = cc.ravel(), ss.ravel()
        with np.errstate(divide="ignore", invalid="ignore"):
            u = K * ss ** 2 + inputs.N0 / cc ** 2
            power = (cc / inputs.gains[t].min()) ** 2 * (g * g + inputs.d * ss ** 2)
            if mode == "analog":
                o = a[t] * u
                cost = 2.0 * g * g / u
            else:
                o = a[t] * np.where(cc > 0, (b2 + u) / (b2 + u + b1), 1.0)
                cost = np.where(cc > 0, 2.0 / u, 0.0)
        cost = np.where(power <= inputs.P * (1.0 + POWER_REL_TOL), cost, np.inf)
        cand_c.append(cc)
        cand_s.append(ss)
        obj_rows.append(o)
        cost_rows.append(cost)

    width = max(r.size for r in obj_rows)
    obj = np.zeros((3, width))
    cost = np.zeros((3, width))
    obj[T:, 1:] = np.inf
    cost[T:, 1:] = np.inf
    for t in range(T):
        obj[t, :] = np.inf
        cost[t, :] = np.inf
        obj[t, :obj_rows[t].size] = obj_rows[t]
        cost[t, :cost_rows[t].size] = cost_rows[t]

    best, idx = _grid_min(obj, cost, float(r_dp) + ACCOUNTANT_TOL)
    if not np.isfinite(best):
        return BruteForceResult(False, math.inf, np.zeros(T), np.zeros((T, K)), grids)
    c = np.array([cand_c[t][idx[t]] for t in range(T)])
    sig = np.array([[cand_s[t][idx[t]]] * K for t in range(T)])
    return BruteForceResult(True, float(best), c, sig, grids)


def grid_slack(schedule, inputs, grids):
    """Objective increase from rounding each ``c_t`` down to its grid axis.

    The rounded schedule is still feasible, so the grid optimum can exceed the
    closed-form objective by at most this much.
    """
    objective = p1_objective if schedule.mode == "analog" else p2_objective
    rounded = np.empty_like(schedule.c)
    for t, axis in enumerate(grids):
        below = axis[axis <= schedule.c[t] * (1.0 + 1e-12)]
        rounded[t] = below.max() if below.size else 0.0
    return objective(rounded, schedule.sigma, inputs) - objective(schedule.c, schedule.sigma, inputs)
