"""Federated zeroth-order training over a simulated noisy uplink.

Per iteration: every client regenerates the shared direction ``z`` from the
broadcast seed, computes its SPSA projection on a private batch, clips it,
and transmits; the server inverts the channel and broadcasts one scalar; all
clients apply the same update.  Since the downlink is noise-free and every
client applies the identical update, one model vector represents all clients.
"""

import csv
import json
import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import channel, power, privacy, zo_core
from .config import ExperimentConfig
from .errors import InvalidArgumentError, NumericalDomainError
from .rng import derive_key, normal_stream, uniform_stream
from .tasks import LogisticTask, QuadraticTask, sample_batch

TRAJECTORY_SCHEMA = "pairzero-trajectory-v1"
COLUMNS = ("t", "loss", "gap", "p_hat", "c_t", "m_t", "dp_cost", "dp_cum", "clipped_count")

# stream tags under the noise seed
_SERVER_NOISE = 0


def build_task(config):
    seed = config.seeds["model"]
    if config.task == "quadratic":
        return QuadraticTask(config.d, config.K, config.kappa, seed)
    return LogisticTask(config.d, config.K, config.n_samples, seed,
                        separation=config.separation, ridge=config.ridge,
                        batch_size=config.batch_size)


def solver_inputs(config, gains):
    return power.SolverInputs(gains, P=config.power, N0=config.n0, gamma=config.gamma,
                              A=config.contraction, e0=config.e0, d=config.d)


def build_schedule(config, gains):
    """Offline schedule over the full horizon, or ``None`` for perfect modes."""
    if config.mode.startswith("perfect"):
        return None
    r = privacy.r_dp(config.epsilon, config.delta)
    return power.make_schedule(config.policy, solver_inputs(config, gains), r, config.mode)


def perfect_aggregate(projections, mode):
    """Noise-free aggregate: the mean (analog) or majority sign (digital)."""
    p = np.asarray(projections, dtype=np.float64)
    if p.size < 1:
        raise InvalidArgumentError("need at least one projection")
    if mode in ("analog", "perfect-analog"):
        return float(np.mean(p))
    if mode in ("digital", "perfect-digital"):
        votes = np.where(p >= 0, 1.0, -1.0)
        return channel.sign(float(votes.sum()))
    raise InvalidArgumentError(f"unknown mode {mode!r}")


@dataclass
class RunResult:
    config: ExperimentConfig
    records: dict
    raw_projections: np.ndarray
    initial_loss: float
    initial_gap: float
    f_star: float
    verdict: privacy.AccountantVerdict = None
    r_dp: float = None
    schedule: power.PowerSchedule = None
    wall_clock: float = 0.0
    checkpoints: dict = field(default_factory=dict)

    @property
    def T(self):
        return len(self.records["t"])

    @property
    def final_gap(self):
        return float(self.records["gap"][-1]) if self.T else self.initial_gap

    def gaps(self, include_initial=True):
        g = np.asarray(self.records["gap"])
        return np.concatenate([[self.initial_gap], g]) if include_initial else g

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow([f"#schema={TRAJECTORY_SCHEMA}"])
            writer.writerow(COLUMNS)
            rec = self.records
            for i in range(self.T):
                writer.writerow([rec["t"][i]] + [repr(float(rec[name][i])) for name in COLUMNS[1:-1]]
                                + [rec["clipped_count"][i]])

    def summary(self):
        verdict = None
        if self.verdict is not None:
            verdict = {"passed": self.verdict.passed, "slack": self.verdict.slack,
                       "consumed": self.verdict.consumed, "r_dp": self.r_dp}
        return {
            "schema": "pairzero-summary-v1",
            "final_gap": self.final_gap,
            "initial_gap": self.initial_gap,
            "f_star": self.f_star,
            "accountant": verdict,
            "clip_events": int(np.sum(self.records["clipped_count"])),
            "full_power_branch": None if self.schedule is None else self.schedule.full_power_branch,
            "zeta_star": None if self.schedule is None else self.schedule.zeta_star,
            "config": self.config.to_dict(),
            "seeds": dict(self.config.seeds),
            "wall_clock_s": self.wall_clock,
        }

    def write_summary(self, path):
        with open(path, "w") as fh:
            json.dump(self.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def client_projections(task, w, z, mu, t, data_seed):
    """Raw SPSA projections of all clients at iteration ``t``."""
    out = np.empty(task.K)
    for k in range(task.K):
        batch = sample_batch(task, k, derive_key(data_seed, t, k))
        out[k] = zo_core.spsa_projection(lambda v, b, k=k: task.client_loss(k, v, b),
                                         w, z, mu, batch)
    return out


def run(config, checkpoints=(), task=None, gains=None, schedule=None):
    """Execute the training loop described by ``config``.

    ``checkpoints`` lists iterations whose pre-update model (with its
    direction) is kept in ``result.checkpoints``.  ``task``, ``gains`` and
    ``schedule`` may be supplied to reuse precomputed pieces.
    """
    started = time.perf_counter()
    cfg = config
    task = task or build_task(cfg)
    T, K, d = cfg.T, cfg.K, cfg.d
    analog = cfg.mode in ("analog", "perfect-analog")
    noisy = not cfg.mode.startswith("perfect")
    if gains is None and noisy:
        gains = channel.sample_horizon(K, T, cfg.seeds["channel"])
    if schedule is None and noisy:
        schedule = build_schedule(cfg, gains)
    r = privacy.r_dp(cfg.epsilon, cfg.delta) if noisy else None
    costs = schedule.costs() if noisy else np.zeros(T)
    m_all = schedule.effective_noise() if noisy else np.zeros(T)
    budget = privacy.PrivacyBudget(cfg.epsilon, cfg.delta) if noisy else None

    keep = set(int(t) for t in checkpoints)
    rec = {name: [] for name in COLUMNS}
    raw = np.empty((T, K))
    w = np.array(task.w0, dtype=np.float64)
    f_star = float(task.f_star)
    loss0 = task.loss(w)
    saved = {}

    for t in range(1, T + 1):
        z = zo_core.generate_perturbation(
            zo_core.PerturbationSpec(cfg.seeds["model"], t, cfg.mu), d)
        if t in keep:
            saved[t] = (w.copy(), z.copy())
        p = client_projections(task, w, z, cfg.mu, t, cfg.seeds["data"])
        raw[t - 1] = p
        clipped = [zo_core.clip_projection(p[k], cfg.gamma, k) for k in range(K)]
        n_clipped = sum(cp.was_clipped for cp in clipped)

        c_t = m_t = 0.0
        if not noisy:
            p_hat = perfect_aggregate([cp.value for cp in clipped], cfg.mode)
            step = p_hat
        else:
            c_t = float(schedule.c[t - 1])
            m_t = float(m_all[t - 1])
            budget.spend(float(costs[t - 1]))
            if c_t == 0.0:
                # silent iteration: nothing is transmitted and the model stays put
                p_hat = step = 0.0
            else:
                chan = channel.ChannelRealization(gains[t - 1], cfg.n0)
                sig = schedule.sigma[t - 1]
                noise_seed = cfg.seeds["noise"]
                if analog:
                    payloads = [channel.make_analog_payload(
                        clipped[k], chan.gains[k], c_t, sig[k],
                        derive_key(noise_seed, t, k + 1), d, cfg.gamma) for k in range(K)]
                else:
                    payloads = [channel.make_digital_payload(
                        clipped[k], chan.gains[k], c_t, sig[k],
                        derive_key(noise_seed, t, k + 1), d) for k in range(K)]
                y = channel.superpose(payloads, chan, derive_key(noise_seed, t, _SERVER_NOISE))
                p_hat = channel.channel_invert(y, K, c_t)
                step = p_hat if analog else channel.sign(p_hat)

        if step != 0.0:
            w = zo_core.apply_update(w, cfg.eta, step, z)
        loss = task.loss(w)
        if not math.isfinite(loss):
            raise NumericalDomainError(f"loss became {loss} at iteration {t}", where=f"t={t}")
        rec["t"].append(t)
        rec["loss"].append(loss)
        rec["gap"].append(loss - f_star)
        rec["p_hat"].append(p_hat)
        rec["c_t"].append(c_t)
        rec["m_t"].append(m_t)
        rec["dp_cost"].append(float(costs[t - 1]))
        rec["dp_cum"].append(budget.consumed if noisy else 0.0)
        rec["clipped_count"].append(n_clipped)

    verdict = privacy.accountant_check(costs, r) if noisy else None
    return RunResult(cfg, rec, raw, loss0, loss0 - f_star, f_star, verdict, r, schedule,
                     time.perf_counter() - started, saved)


# ---------------------------------------------------------------------------
# measurement procedures

def _batch_projections(task, k, w, z, mu, n_batches, batch_size, key):
    """Full-shard and ``n_batches`` mini-batch SPSA projections of client ``k``."""
    lp = task.sample_losses(k, w + mu * z)
    if lp is None:
        full = zo_core.spsa_projection(lambda v, b: task.client_loss(k, v, b), w, z, mu)
        return full, np.full(n_batches, full)
    lm = task.sample_losses(k, w - mu * z)
    diff = (lp - lm) / (2.0 * mu)
    full = float(diff.mean())
    n = diff.size
    if batch_size is None or batch_size >= n:
        return full, np.full(n_batches, full)
    u = uniform_stream(key, n_batches * batch_size).reshape(n_batches, batch_size)
    idx = np.minimum((u * n).astype(np.int64), n - 1)
    return full, diff[idx].mean(axis=1)


def _sign_array(x):
    return np.where(np.asarray(x) >= 0, 1.0, -1.0)


def estimate_e0(task, checkpoints, n_seeds=40, n_batches=10_000, batch_size=64, mu=1e-3,
                seed=0):
    """Largest per-client sign-reversal frequency at each checkpoint.

    For every checkpoint model and every direction ``z_s`` (``s < n_seeds``),
    client ``k``'s full-shard projection sign is compared with the signs of
    ``n_batches`` uniformly drawn mini-batch projections; the returned value is
    the maximum reversal fraction over directions and clients.
    """
    out = []
    for ci, w in enumerate(checkpoints):
        w = np.asarray(w, dtype=np.float64)
        worst = 0.0
        for s in range(n_seeds):
            z = normal_stream(derive_key(seed, s), w.size)
            for k in range(task.K):
                full, batches = _batch_projections(task, k, w, z, mu, n_batches, batch_size,
                                                   derive_key(seed, 1000 + ci, s, k))
                frac = float(np.mean(_sign_array(batches) != channel.sign(full)))
                worst = max(worst, frac)
        out.append(worst)
    return np.array(out)


def estimate_contraction(gaps):
    """``min_{t>=1} (G_t / G_0)^(1/t)`` from a gap trajectory starting at ``G_0``."""
    g = np.asarray(gaps, dtype=np.float64)
    if g.size < 2:
        raise InvalidArgumentError("need G_0 and at least one later gap")
    if np.any(g <= 0):
        raise InvalidArgumentError("gaps must be > 0")
    t = np.arange(1, g.size)
    return float(np.min(np.exp(np.log(g[1:] / g[0]) / t)))


def projection_histogram(result, bin_edges, gamma=None):
    """Histogram of recorded raw projections and the fraction inside [-gamma, gamma]."""
    gamma = result.config.gamma if gamma is None else gamma
    p = np.asarray(result.raw_projections, dtype=np.float64).ravel()
    counts, edges = np.histogram(p, bins=bin_edges)
    coverage = float(np.mean(np.abs(p) <= gamma)) if p.size else 1.0
    return counts, edges, coverage


@dataclass
class SignReversalMeasurement:
    t: int
    e_hat: float
    e0_hat: float
    bound: float
    trials: int

    @property
    def e_sq_stderr(self):
        e = self.e_hat
        return 2.0 * e * math.sqrt(e * (1.0 - e) / self.trials)

    @property
    def holds(self):
        return self.e_hat ** 2 <= self.bound + 3.0 * self.e_sq_stderr


def measure_sign_reversal(task, w, z, c, sigma, N0, mu=1e-3, trials=4000, seed=0, t=0):
    """Monte-Carlo sign-reversal rate of the digital aggregate at a fixed ``(w, z)``.

    Each trial redraws every client's mini-batch, the artificial noise and the
    receiver noise, and compares ``sign(p_hat)`` with the sign of the
    full-data global projection.  Also returns the per-client reversal rate
    ``e0_hat`` (max over clients) and the corresponding analytic bound.
    """
    K = task.K
    sigma = np.broadcast_to(np.asarray(sigma, dtype=np.float64), (K,))
    s_true = channel.sign(zo_core.spsa_projection(lambda v, b: task.loss(v), w, z, mu))
    signs = np.empty((trials, K))
    for k in range(K):
        _, batches = _batch_projections(task, k, w, z, mu, trials, task.batch_size,
                                        derive_key(seed, t, k + 1))
        signs[:, k] = _sign_array(batches)
    e_k = np.mean(signs != s_true, axis=0)
    e0_hat = float(e_k.max())
    noise = normal_stream(derive_key(seed, t, 0), trials * (K + 1)).reshape(trials, K + 1)
    y = c * np.sum(signs + sigma * noise[:, :K], axis=1) + math.sqrt(N0) * noise[:, K]
    p_hat = y / (K * c)
    e_hat = float(np.mean(_sign_array(p_hat) != s_true))
    m = math.sqrt(c * c * float(np.sum(sigma ** 2)) + N0)
    bound = 1.0 if e0_hat >= 0.5 else power.et_upper_bound(e0_hat, K, m, c)
    return SignReversalMeasurement(t, e_hat, e0_hat, bound, trials)
