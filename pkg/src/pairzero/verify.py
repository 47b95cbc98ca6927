"""Acceptance checks, grouped into suites for ``pairzero verify``.

Each check returns a :class:`CheckResult`; none of them raise on failure.
"""

import math
import tempfile
import time
from dataclasses import dataclass, field
from pathlib import Path

import mpmath
import numpy as np

from . import channel, fedsim, power, privacy, zo_core
from .config import POLICIES, ExperimentConfig


@dataclass
class CheckResult:
    id: int
    name: str
    passed: bool
    detail: str
    seconds: float = 0.0
    data: dict = field(default_factory=dict, repr=False)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"[{status}] criterion {self.id:>2} {self.name}: {self.detail} ({self.seconds:.1f}s)"


def _timed(cid, name):
    def wrap(fn):
        def inner(*args, **kwargs):
            t0 = time.perf_counter()
            data = {}
            try:
                out = fn(*args, **kwargs)
                passed, detail = out[:2]
                if len(out) > 2:
                    data = out[2]
            except Exception as exc:  # a crash is a failed check, not an aborted suite
                passed, detail = False, f"{type(exc).__name__}: {exc}"
            return CheckResult(cid, name, bool(passed), detail, time.perf_counter() - t0, data)
        inner.__name__ = fn.__name__
        inner.__doc__ = fn.__doc__
        inner.criterion = cid
        return inner
    return wrap


# ---------------------------------------------------------------------------
# 1. central-difference exactness on quadratics

@_timed(1, "spsa exactness")
def check_spsa_exactness(n_problems=50, seed=0, time_limit=5.0):
    rng = np.random.default_rng(seed)
    t0 = time.perf_counter()
    worst = 0.0
    for i in range(n_problems):
        d = int(rng.integers(1, 101))
        a = rng.standard_normal((d, d))
        q = a @ a.T / d
        b = rng.standard_normal(d)
        w = 0.5 * rng.standard_normal(d)
        z = zo_core.generate_perturbation(zo_core.PerturbationSpec(seed, i + 1), d)
        exact = float(z @ (q @ w + b))
        for mu in (1e-4, 1e-3, 1e-2):
            p = zo_core.spsa_projection(lambda v, _b: 0.5 * float(v @ q @ v) + float(b @ v),
                                        w, z, mu)
            worst = max(worst, abs(p - exact) / (1.0 + abs(exact)))
    elapsed = time.perf_counter() - t0
    ok = worst <= 1e-10 and elapsed < time_limit
    return ok, f"max scaled error {worst:.2e} (tol 1e-10), {elapsed:.2f}s (limit {time_limit}s)"


# ---------------------------------------------------------------------------
# 2. budget function against an arbitrary-precision oracle

def _oracle_r_dp(epsilon, delta, dps=50):
    with mpmath.workdps(dps):
        target = 1 / mpmath.mpf(delta)
        lo, hi = mpmath.mpf(0), mpmath.mpf(1)
        while mpmath.sqrt(mpmath.pi) * hi * mpmath.exp(hi * hi) < target:
            hi *= 2
        for _ in range(200):
            mid = (lo + hi) / 2
            if mpmath.sqrt(mpmath.pi) * mid * mpmath.exp(mid * mid) < target:
                lo = mid
            else:
                hi = mid
        x0 = (lo + hi) / 2
        return float((mpmath.sqrt(epsilon + x0 * x0) - x0) ** 2)


@_timed(2, "budget function")
def check_budget_function():
    ours = privacy.r_dp(5.0, 0.01)
    ref = _oracle_r_dp(5, "0.01")
    rel = abs(ours - ref) / ref
    probes = (1e-3, 0.5, 4.8, 100.0, 1e12)
    trip = max(abs(privacy.c_function(privacy.c_inverse(y)) - y) / y for y in probes)
    ok = rel <= 1e-9 and trip <= 1e-10
    return ok, (f"r_dp(5, 0.01) = {ours:.10f} vs oracle {ref:.10f} (rel {rel:.1e}); "
                f"C round-trip {trip:.1e}")


# ---------------------------------------------------------------------------
# 3. Monte-Carlo privacy-loss tail on saturating schedules

@_timed(3, "dp soundness")
def check_dp_soundness(horizons=(10, 100, 1000), epsilon=5.0, delta=0.01, trials=100_000,
                       time_limit=60.0):
    t0 = time.perf_counter()
    r = privacy.r_dp(epsilon, delta)
    allowed = delta + 3.0 * math.sqrt(delta * (1.0 - delta) / trials)
    parts, ok = [], True
    for i, T in enumerate(horizons):
        gains = channel.sample_horizon(5, T, 40 + i)
        inputs = power.SolverInputs(gains, P=200.0, N0=1.0, gamma=10.0, A=0.998)
        sched = power.solve_p1(inputs, r)
        saturated = math.isclose(sched.total_cost(), r, rel_tol=1e-6)
        tail = privacy.montecarlo_privacy_tail(sched, inputs.gamma, epsilon, trials, seed=i)
        ok &= saturated and tail <= allowed
        parts.append(f"T={T}: P={tail:.4f}{'' if saturated else ' (not saturated)'}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < time_limit
    return ok, f"{', '.join(parts)}; limit {allowed:.4f}; {elapsed:.1f}s"


# ---------------------------------------------------------------------------
# 4-5. solver optimality and feasibility

def _random_inputs(rng, T, K, mode, r):
    gains = channel.sample_horizon(K, T, int(rng.integers(2**32)))
    spend_scale = 2.0 * math.fsum(gains.min(axis=1) ** 2)
    # place P on either side of the full-power threshold
    P = r / spend_scale * 10.0 ** rng.uniform(-1.0, 1.0)
    return power.SolverInputs(gains, P=P, N0=1.0,
                              gamma=float(rng.uniform(0.5, 5.0)) if mode == "analog" else 1.0,
                              A=float(rng.uniform(0.5, 0.999)),
                              e0=float(rng.uniform(0.05, 0.45)), d=int(rng.integers(1, 20)))


@_timed(4, "solver optimality")
def check_solver_optimality(n_instances=20, grid_size=400, seed=1, time_limit=120.0):
    t0 = time.perf_counter()
    rng = np.random.default_rng(seed)
    failures, branches, worst_gap = [], 0, 0.0
    for i in range(n_instances):
        mode = "analog" if i % 2 == 0 else "digital"
        T, K = int(rng.integers(1, 4)), int(rng.integers(1, 4))
        r = privacy.r_dp(float(rng.uniform(0.5, 10.0)), 0.01)
        inputs = _random_inputs(rng, T, K, mode, r)
        sched = power.solve_p1(inputs, r) if mode == "analog" else power.solve_p2(inputs, r)
        objective = power.p1_objective if mode == "analog" else power.p2_objective
        closed = objective(sched.c, sched.sigma, inputs)
        bf = power.brute_force(inputs, r, mode, grid_size)
        slack = power.grid_slack(sched, inputs, bf.grids)
        tol = 1e-9 * max(1.0, abs(closed))
        optimal = closed <= bf.objective + tol
        tight = bf.objective <= closed + slack + tol
        branch_ok = sched.full_power_branch == power.full_power_condition(inputs, r, mode)
        branches += sched.full_power_branch
        worst_gap = max(worst_gap, (closed - bf.objective) / max(1.0, abs(closed)))
        if not (bf.feasible and optimal and tight and branch_ok):
            failures.append(f"#{i} {mode} closed={closed:.6g} grid={bf.objective:.6g} "
                            f"slack={slack:.3g} branch_ok={branch_ok}")
    elapsed = time.perf_counter() - t0
    ok = not failures and elapsed < time_limit
    detail = (f"{n_instances - len(failures)}/{n_instances} instances ok, "
              f"{branches} on the full-power branch, max (closed - grid) {worst_gap:.1e}, "
              f"{elapsed:.1f}s")
    if failures:
        detail += "; " + "; ".join(failures[:3])
    return ok, detail


@_timed(5, "feasibility")
def check_feasibility(n_configs=100, seed=2):
    rng = np.random.default_rng(seed)
    checked, failures = 0, []
    for i in range(n_configs):
        T, K = int(rng.integers(1, 60)), int(rng.integers(1, 11))
        r = privacy.r_dp(float(10.0 ** rng.uniform(-1, 2)), float(10.0 ** rng.uniform(-5, -1)))
        for mode in ("analog", "digital"):
            inputs = _random_inputs(rng, T, K, mode, r)
            inputs = power.SolverInputs(inputs.gains, P=inputs.P * 10.0 ** rng.uniform(-2, 2),
                                        N0=float(10.0 ** rng.uniform(-3, 1)), gamma=inputs.gamma,
                                        A=inputs.A, e0=inputs.e0, d=inputs.d)
            for policy in POLICIES:
                sched = power.make_schedule(policy, inputs, r, mode)
                try:
                    sched.check(inputs, r)
                    verdict = privacy.accountant_check(sched.costs(), r)
                    if not verdict.passed:
                        raise AssertionError(f"accountant slack {verdict.slack:.3g}")
                except Exception as exc:
                    failures.append(f"#{i} {mode}/{policy}: {exc}")
                checked += 1
    ok = not failures
    detail = f"{checked - len(failures)}/{checked} schedules feasible"
    if failures:
        detail += "; " + "; ".join(failures[:3])
    return ok, detail


# ---------------------------------------------------------------------------
# 6. sign-reversal bound in digital training

@_timed(6, "sign-reversal bound")
def check_sign_reversal_bound(T=200, n_samples=8, trials=4000):
    cfg = ExperimentConfig(task="logistic", T=T, d=50, K=5, mode="digital", eta=0.01,
                           epsilon=5.0, snr_max_db=10.0)
    result = fedsim.run(cfg, checkpoints=range(1, T + 1))
    task = fedsim.build_task(cfg)
    sched = result.schedule
    # silent iterations transmit nothing, so sample among the active ones
    active = np.flatnonzero(sched.c > 0) + 1
    if active.size == 0:
        return False, "schedule is silent at every iteration"
    picks = active[np.unique(np.linspace(0, active.size - 1, n_samples).round().astype(int))]
    fails, worst = [], -math.inf
    for t in picks:
        w, z = result.checkpoints[int(t)]
        meas = fedsim.measure_sign_reversal(task, w, z, float(sched.c[t - 1]),
                                            sched.sigma[t - 1], cfg.n0, cfg.mu, trials,
                                            seed=7, t=int(t))
        worst = max(worst, meas.e_hat ** 2 - meas.bound)
        if not meas.holds:
            fails.append(f"t={t}: e^2={meas.e_hat ** 2:.4f} > bound {meas.bound:.4f}")
    detail = (f"{picks.size} iterations sampled from {active.size} active, "
              f"max (e^2 - bound) {worst:.3g}")
    if fails:
        detail += "; " + "; ".join(fails[:3])
    return not fails, detail


# ---------------------------------------------------------------------------
# 7. policy ordering on the quadratic task

CONVERGENCE_BASE = dict(task="quadratic", T=4000, d=20, K=5, eta=0.001, gamma=20.0,
                        epsilon=100.0, delta=0.01, kappa=4.0, contraction=0.998)


def _seeds(s):
    return {"model": s, "channel": 100 + s, "noise": 200 + s, "data": 300 + s}


def convergence_table(snrs=(0.0, 10.0), n_seeds=8, T=None):
    """Mean final gap per (SNR, policy) with ``perfect`` as the noise-free reference."""
    base = dict(CONVERGENCE_BASE)
    if T is not None:
        base["T"] = T
    table = {}
    for snr in snrs:
        row = {}
        for label in ("perfect", "solution", "static", "reversed"):
            gaps = []
            for s in range(n_seeds):
                kw = dict(base, snr_max_db=snr, seeds=_seeds(s))
                if label == "perfect":
                    kw["mode"] = "perfect-analog"
                else:
                    kw["policy"] = label
                gaps.append(fedsim.run(ExperimentConfig(**kw)).final_gap)
            row[label] = float(np.mean(gaps))
        table[snr] = row
    return table


@_timed(7, "convergence ordering")
def check_convergence_ordering(n_seeds=8, time_limit=600.0):
    t0 = time.perf_counter()
    table = convergence_table(n_seeds=n_seeds)
    ok, parts = True, []
    for snr, g in table.items():
        ordered = g["perfect"] <= g["solution"] <= min(g["static"], g["reversed"])
        ok &= ordered
        if snr == 10.0:
            ok &= g["solution"] <= 0.9 * g["static"] and g["solution"] <= 0.9 * g["reversed"]
        parts.append(f"{snr:g} dB: perfect {g['perfect']:.3g}, solution {g['solution']:.3g}, "
                     f"static {g['static']:.3g}, reversed {g['reversed']:.3g}")
    elapsed = time.perf_counter() - t0
    ok &= elapsed < time_limit
    return ok, "; ".join(parts) + f"; {elapsed:.0f}s"


# ---------------------------------------------------------------------------
# 8. a noiseless channel reproduces ideal aggregation

@_timed(8, "noiseless equivalence")
def check_noiseless_equivalence(T=500):
    # P is fixed in absolute terms (an SNR would shrink it along with N0) and the
    # budget is practically unlimited, so only the receiver noise remains
    cfg = ExperimentConfig(task="quadratic", T=T, d=20, K=5, n0=1e-30, epsilon=1e40,
                           power=200.0)
    noisy = fedsim.run(cfg)
    ideal = fedsim.run(cfg.replace(mode="perfect-analog"))
    if np.any(noisy.schedule.sigma != 0.0):
        return False, "schedule added artificial noise"
    a = np.asarray(noisy.records["loss"])
    b = np.asarray(ideal.records["loss"])
    rel = float(np.max(np.abs(a - b) / np.maximum(np.abs(b), 1e-300)))
    return rel <= 1e-9, f"max per-iteration relative loss difference {rel:.2e} over T={T}"


# ---------------------------------------------------------------------------
# 9. byte-identical reruns

@_timed(9, "determinism")
def check_determinism(T=200):
    digests = []
    with tempfile.TemporaryDirectory() as tmp:
        for mode in ("analog", "digital"):
            cfg = ExperimentConfig(task="logistic", T=T, d=10, K=3, mode=mode,
                                   seeds={"model": 5, "channel": 6, "noise": 7, "data": 8})
            blobs = []
            for rep in range(2):
                path = Path(tmp) / f"{mode}_{rep}.csv"
                fedsim.run(cfg).write_csv(path)
                blobs.append(path.read_bytes())
            digests.append((mode, blobs[0] == blobs[1], len(blobs[0])))
    ok = all(same for _, same, _ in digests)
    return ok, ", ".join(f"{m}: {'identical' if s else 'DIFFERENT'} ({n} bytes)"
                         for m, s, n in digests)


# ---------------------------------------------------------------------------
# 10. sign-reversal frequency measurement

@_timed(10, "e0 measurement")
def check_e0_measurement(T=300, checkpoints=(1, 100, 200, 300)):
    quad = ExperimentConfig(task="quadratic", T=T, d=20, K=5, mode="perfect-analog")
    qres = fedsim.run(quad, checkpoints=checkpoints)
    q_e0 = fedsim.estimate_e0(fedsim.build_task(quad),
                              [qres.checkpoints[t][0] for t in checkpoints], batch_size=None)
    logi = ExperimentConfig(task="logistic", T=T, d=50, K=5, n_samples=5000,
                            mode="perfect-analog", eta=0.01)
    lres = fedsim.run(logi, checkpoints=checkpoints)
    l_e0 = fedsim.estimate_e0(fedsim.build_task(logi),
                              [lres.checkpoints[t][0] for t in checkpoints], batch_size=64)
    quad_ok = bool(np.all(q_e0 == 0.0))
    logi_ok = bool(np.all((l_e0 > 0.0) & (l_e0 < 0.5)))
    return quad_ok and logi_ok, (
        f"quadratic {np.array2string(q_e0, precision=4)} ({'ok' if quad_ok else 'not 0'}), "
        f"logistic {np.array2string(l_e0, precision=4)} "
        f"({'all in (0, 1/2)' if logi_ok else 'outside (0, 1/2)'})"), {
        "quadratic": q_e0.tolist(), "logistic": l_e0.tolist(),
        "quadratic_ok": quad_ok, "logistic_ok": logi_ok}


CHECKS = {
    1: check_spsa_exactness,
    2: check_budget_function,
    3: check_dp_soundness,
    4: check_solver_optimality,
    5: check_feasibility,
    6: check_sign_reversal_bound,
    7: check_convergence_ordering,
    8: check_noiseless_equivalence,
    9: check_determinism,
    10: check_e0_measurement,
}

SUITES = {
    "privacy": (2, 3),
    "solver": (4, 5),
    "convergence": (1, 6, 7, 8, 9, 10),
}


def run_suite(name):
    if name not in SUITES:
        raise KeyError(f"unknown suite {name!r}; choose from {sorted(SUITES)}")
    return [CHECKS[i]() for i in SUITES[name]]
