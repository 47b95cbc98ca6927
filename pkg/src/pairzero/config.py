"""Experiment configuration (JSON) and sweep specification."""

import dataclasses
import json
import math
from dataclasses import dataclass, field

from .errors import ConfigError

MODES = ("analog", "digital", "perfect-analog", "perfect-digital")
POLICIES = ("solution", "static", "reversed")
TASKS = ("quadratic", "logistic")
SWEEP_AXES = ("snr_max", "policy", "mode", "eta")
SEED_NAMES = ("model", "channel", "noise", "data")


def _default_seeds():
    return {"model": 0, "channel": 1, "noise": 2, "data": 3}


@dataclass
class ExperimentConfig:
    """One federated run.

    ``power`` (per-client cap P) and ``snr_max_db`` are alternatives; with
    ``snr_max_db`` the cap is ``10^(dB/10) * d * n0``.  When neither is given
    the SNR defaults to 10 dB.
    """

    task: str = "quadratic"
    T: int = 1000
    d: int = 20
    K: int = 5
    eta: float = 0.002
    mu: float = 1e-3
    gamma: float = 100.0
    epsilon: float = 5.0
    delta: float = 0.01
    power: float = None
    snr_max_db: float = None
    n0: float = 1.0
    mode: str = "analog"
    policy: str = "solution"
    contraction: float = 0.998
    e0: float = 0.4960
    kappa: float = 10.0
    n_samples: int = 1000
    batch_size: int = 64
    separation: float = 2.0
    ridge: float = 1e-3
    seeds: dict = field(default_factory=_default_seeds)

    def __post_init__(self):
        self.validate()

    def validate(self):
        def need(cond, name, msg):
            if not cond:
                raise ConfigError(f"{name}: {msg}", field=name)

        need(self.task in TASKS, "task", f"must be one of {TASKS}, got {self.task!r}")
        need(self.mode in MODES, "mode", f"must be one of {MODES}, got {self.mode!r}")
        need(self.policy in POLICIES, "policy", f"must be one of {POLICIES}, got {self.policy!r}")
        for name in ("T", "d", "K", "n_samples", "batch_size"):
            v = getattr(self, name)
            need(isinstance(v, int) and not isinstance(v, bool), name, "must be an integer")
        need(self.T >= 0, "T", "must be >= 0")
        need(self.d >= 1, "d", "must be >= 1")
        need(self.K >= 1, "K", "must be >= 1")
        need(self.batch_size >= 1, "batch_size", "must be >= 1")
        need(self.n_samples >= self.K, "n_samples", "must be >= K")
        for name in ("eta", "mu", "gamma", "epsilon", "n0", "kappa", "separation"):
            v = getattr(self, name)
            need(isinstance(v, (int, float)) and v > 0, name, f"must be > 0, got {v!r}")
        need(self.kappa >= 1, "kappa", "must be >= 1")
        need(self.ridge >= 0, "ridge", "must be >= 0")
        need(0 < self.delta < 1, "delta", "delta out of (0,1)")
        need(0 < self.contraction < 1, "contraction", "must be in (0,1)")
        need(0 < self.e0 < 0.5, "e0", "must be in (0, 1/2)")
        need(isinstance(self.seeds, dict), "seeds", "must be an object")
        unknown = set(self.seeds) - set(SEED_NAMES)
        need(not unknown, "seeds", f"unknown seed names {sorted(unknown)}")
        seeds = _default_seeds()
        seeds.update(self.seeds)
        for name, v in seeds.items():
            need(isinstance(v, int) and 0 <= v < 2**64, f"seeds.{name}",
                 "must be an integer in [0, 2^64)")
        self.seeds = seeds

        if self.snr_max_db is not None:
            need(math.isfinite(self.snr_max_db), "snr_max_db", "must be finite")
            derived = self.power_from_snr(self.snr_max_db)
            if self.power is not None:
                need(math.isclose(self.power, derived, rel_tol=1e-9), "power",
                     f"{self.power} disagrees with snr_max_db={self.snr_max_db} "
                     f"(expected {derived})")
            self.power = derived
        elif self.power is None:
            self.snr_max_db = 10.0
            self.power = self.power_from_snr(self.snr_max_db)
        need(self.power > 0, "power", "must be > 0")

    def power_from_snr(self, snr_db):
        return 10.0 ** (snr_db / 10.0) * self.d * self.n0

    @property
    def snr_max(self):
        """Linear ``P / (d N0)``."""
        return self.power / (self.d * self.n0)

    def to_dict(self):
        return dataclasses.asdict(self)

    def replace(self, **changes):
        data = self.to_dict()
        if "snr_max_db" in changes and "power" not in changes:
            data["power"] = None
        if "power" in changes and "snr_max_db" not in changes:
            data["snr_max_db"] = None
        data.update(changes)
        return config_from_dict(data)


_FIELDS = {f.name for f in dataclasses.fields(ExperimentConfig)}


def config_from_dict(data):
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    unknown = set(data) - _FIELDS
    if unknown:
        name = sorted(unknown)[0]
        raise ConfigError(f"{name}: unknown config key", field=name)
    return ExperimentConfig(**data)


def load_config(path):
    try:
        with open(path) as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"malformed JSON in {path}: {exc}") from exc
    return config_from_dict(data)


def save_config(config, path):
    with open(path, "w") as fh:
        json.dump(config.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")


@dataclass
class SweepSpec:
    base: ExperimentConfig
    axis: str
    values: list
    repeats: int = 4
    out_dir: str = "sweep_out"

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"axis: must be one of {SWEEP_AXES}, got {self.axis!r}", field="axis")
        if not self.values:
            raise ConfigError("values: must be non-empty", field="values")
        if self.repeats < 1:
            raise ConfigError("repeats: must be >= 1", field="repeats")

    def point_config(self, value):
        if self.axis == "snr_max":
            return self.base.replace(snr_max_db=float(value))
        if self.axis == "eta":
            return self.base.replace(eta=float(value))
        return self.base.replace(**{self.axis: str(value)})
