"""Optimal active-user count and low-complexity user selection for ZF massive MIMO downlink."""

__version__ = "0.1.0"

from .core import SystemConfig, reference_config  # noqa: E402
from .rate_approx import approx_rate_lus, approx_rate_rus, approx_rate_special  # noqa: E402
from .rmt import deterministic_equivalents  # noqa: E402
from .selection import solve_kstar  # noqa: E402
from .sim import ergodic_rate, fairness, sweep  # noqa: E402

__all__ = [
    "SystemConfig",
    "reference_config",
    "approx_rate_rus",
    "approx_rate_lus",
    "approx_rate_special",
    "deterministic_equivalents",
    "solve_kstar",
    "ergodic_rate",
    "fairness",
    "sweep",
]
