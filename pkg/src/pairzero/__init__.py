"""Private federated zeroth-order fine-tuning over noisy wireless channels.

Clients send clipped scalar gradient projections over an analog or one-bit
(sign) uplink; the channel noise doubles as the differential-privacy noise and
a per-iteration power schedule spends the privacy budget where it helps most.
"""

from .channel import sample_channel, sample_horizon
from .config import ExperimentConfig, SweepSpec, load_config, save_config
from .errors import (ConfigError, InvalidArgumentError, InvalidChannelError,
                     NumericalDomainError, PairZeroError, SolverError)
from .fedsim import RunResult, estimate_contraction, estimate_e0, run
from .power import (PowerSchedule, SolverInputs, reversed_schedule, solve_p1, solve_p2,
                    static_schedule)
from .privacy import PrivacyBudget, accountant_check, montecarlo_privacy_tail, r_dp
from .zo_core import (PerturbationSpec, apply_update, clip_projection, generate_perturbation,
                      spsa_projection)

__version__ = "0.1.0"

__all__ = [
    "ConfigError", "ExperimentConfig", "InvalidArgumentError", "InvalidChannelError",
    "NumericalDomainError", "PairZeroError", "PerturbationSpec", "PowerSchedule",
    "PrivacyBudget", "RunResult", "SolverError", "SolverInputs", "SweepSpec",
    "accountant_check", "apply_update", "clip_projection", "estimate_contraction",
    "estimate_e0", "generate_perturbation", "load_config", "montecarlo_privacy_tail", "r_dp",
    "reversed_schedule", "run", "sample_channel", "sample_horizon", "save_config",
    "solve_p1", "solve_p2", "spsa_projection", "static_schedule",
]
