"""System parameters, user placement, transmit correlation and channel draws.

Powers are carried in dBm in :class:`SystemConfig` and converted to linear
milliwatts for every formula. Distances are in meters and the pathloss
reference ``c`` is taken at 1 m, so ``beta = c * d**(-alpha)``.
"""

from __future__ import annotations

import dataclasses
import functools
import hashlib
import json
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

__all__ = [
    "SystemConfig",
    "UserPlacement",
    "CorrelationModel",
    "ChannelRealization",
    "dbm_to_linear",
    "reference_config",
    "trial_rng",
    "sample_placement",
    "radii_from_uniform",
    "build_correlation",
    "complex_normal",
    "channel_from_ssf",
    "draw_channel",
]

PATHLOSS_AT_1M = 10.0 ** -3.53


def dbm_to_linear(x: float) -> float:
    """Convert a power in dBm to milliwatts."""
    x = float(x)
    if not np.isfinite(x):
        raise ValueError(f"power must be finite, got {x}")
    return 10.0 ** (x / 10.0)


@dataclass(frozen=True)
class SystemConfig:
    num_antennas: int = 32
    num_candidates: int = 64
    coherence_symbols: int = 196
    tx_power_dbm: float = 30.0
    noise_power_dbm: float = -96.0
    pathloss_ref: float = PATHLOSS_AT_1M
    pathloss_exp: float = 3.76
    est_error: float = 0.0
    corr_coef: float = 0.0
    r_min: float = 35.0
    r_max: float = 250.0
    seed: int = 0
    trials: int = 10_000

    def __post_init__(self):
        for f in dataclasses.fields(self):
            value = getattr(self, f.name)
            if f.type == "float" and isinstance(value, (int, float, np.number)) and not isinstance(value, bool):
                object.__setattr__(self, f.name, float(value))
        ints = ("num_antennas", "num_candidates", "coherence_symbols", "trials")
        for name in ints:
            value = getattr(self, name)
            if isinstance(value, bool) or not isinstance(value, (int, np.integer)) or value < 1:
                raise ConfigError(f"{name} must be a positive integer, got {value!r}")
        if self.num_candidates < self.num_antennas:
            raise ConfigError("num_candidates must be >= num_antennas")
        if not (0 <= int(self.seed) < 2**64):
            raise ConfigError("seed must be an unsigned 64-bit integer")
        for name in ("tx_power_dbm", "noise_power_dbm", "pathloss_ref", "pathloss_exp",
                     "est_error", "corr_coef", "r_min", "r_max"):
            if not np.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")
        if self.pathloss_ref <= 0 or self.pathloss_exp <= 0:
            raise ConfigError("pathloss_ref and pathloss_exp must be positive")
        if not 0.0 <= self.est_error <= 1.0:
            raise ConfigError("est_error must lie in [0, 1]")
        if not 0.0 <= self.corr_coef < 1.0:
            raise ConfigError("corr_coef must lie in [0, 1)")
        if not 0.0 < self.r_min < self.r_max:
            raise ConfigError("need 0 < r_min < r_max")

    @property
    def p_lin(self) -> float:
        return dbm_to_linear(self.tx_power_dbm)

    @property
    def noise_lin(self) -> float:
        return dbm_to_linear(self.noise_power_dbm)

    def replace(self, **changes) -> "SystemConfig":
        return dataclasses.replace(self, **changes)

    def check_active(self, k: int, allow_full: bool = False) -> None:
        """Validate an active-user count against M and T."""
        limit = self.num_antennas if allow_full else self.num_antennas - 1
        if not 1 <= k <= limit:
            raise ConfigError(f"K={k} outside [1, {limit}]")
        if k >= self.coherence_symbols:
            raise ConfigError(f"K={k} must be smaller than T={self.coherence_symbols}")

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self)}

    def fingerprint(self) -> str:
        """Stable short hash of the canonicalized parameter set."""
        canon = {}
        for name, value in self.as_dict().items():
            canon[name] = repr(value) if isinstance(value, float) else str(int(value))
        blob = json.dumps(canon, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


def reference_config(**changes) -> SystemConfig:
    """Cell and link parameters of the reference evaluation (P = 30 dBm, M = 32, N = 64)."""
    return SystemConfig(**changes)


def trial_rng(seed: int, index: int, stream: int = 0) -> np.random.Generator:
    """Private generator for one Monte Carlo trial.

    The stream depends only on ``(seed, stream, index)`` so trials can be
    evaluated in any order or in parallel with identical results.
    """
    ss = np.random.SeedSequence(int(seed), spawn_key=(int(stream), int(index)))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass(frozen=True)
class UserPlacement:
    radii: np.ndarray
    angles: np.ndarray

    def __len__(self):
        return len(self.radii)

    def subset(self, indices) -> "UserPlacement":
        idx = np.asarray(indices, dtype=int)
        return UserPlacement(self.radii[idx], self.angles[idx])


def radii_from_uniform(u, r_min: float, r_max: float) -> np.ndarray:
    """Inverse CDF of the annulus radius law F(r) = (r^2 - r_min^2) / (r_max^2 - r_min^2)."""
    u = np.asarray(u, dtype=float)
    return np.sqrt(r_min**2 + u * (r_max**2 - r_min**2))


def sample_placement(cfg: SystemConfig, rng: np.random.Generator, n: int | None = None) -> UserPlacement:
    n = cfg.num_candidates if n is None else n
    radii = radii_from_uniform(rng.random(n), cfg.r_min, cfg.r_max)
    angles = rng.random(n) * (2.0 * np.pi)
    return UserPlacement(radii, angles)


@dataclass(frozen=True)
class CorrelationModel:
    """Exponential (Kac-Murdock-Szego) transmit correlation R[i, j] = delta**|i - j|."""

    delta: float
    dim: int
    matrix: np.ndarray = field(repr=False)
    eigenvalues: np.ndarray = field(repr=False)
    sqrt: np.ndarray = field(repr=False)

    @property
    def is_identity(self) -> bool:
        return self.delta == 0.0


@functools.lru_cache(maxsize=64)
def build_correlation(m: int, delta: float) -> CorrelationModel:
    if not 0.0 <= delta < 1.0:
        raise ValueError(f"correlation coefficient must lie in [0, 1), got {delta}")
    idx = np.arange(m)
    R = float(delta) ** np.abs(idx[:, None] - idx[None, :]).astype(float)
    if delta == 0.0:
        R = np.eye(m)
        lam, sqrt_R = np.ones(m), np.eye(m)
    else:
        lam, V = np.linalg.eigh(R)
        sqrt_R = (V * np.sqrt(lam)) @ V.T
        sqrt_R = 0.5 * (sqrt_R + sqrt_R.T)
    for arr in (R, lam, sqrt_R):
        arr.setflags(write=False)
    return CorrelationModel(float(delta), m, R, lam, sqrt_R)


def complex_normal(rng: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) samples: each real component has variance 1/2."""
    z = rng.standard_normal((*shape, 2))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


@dataclass(frozen=True)
class ChannelRealization:
    distances: np.ndarray
    beta: np.ndarray
    H: np.ndarray
    H_hat: np.ndarray
    H_tilde: np.ndarray
    G: np.ndarray
    G_hat: np.ndarray
    sqrt_R: np.ndarray = field(repr=False)

    @property
    def K(self) -> int:
        return self.H.shape[0]

    @property
    def M(self) -> int:
        return self.H.shape[1]

    @property
    def D(self) -> np.ndarray:
        return np.diag(self.beta)

    @property
    def G_tilde(self) -> np.ndarray:
        return np.sqrt(self.beta)[:, None] * (self.H_tilde @ self.sqrt_R)


def channel_from_ssf(cfg: SystemConfig, distances, z1: np.ndarray, z2: np.ndarray,
                     corr: CorrelationModel | None = None) -> ChannelRealization:
    """Assemble a realization from given standard complex Gaussian matrices."""
    corr = corr or build_correlation(cfg.num_antennas, cfg.corr_coef)
    d = np.asarray(distances, dtype=float)
    beta = cfg.pathloss_ref * d ** (-cfg.pathloss_exp)
    H_hat = np.sqrt(1.0 - cfg.est_error) * z1
    H_tilde = np.sqrt(cfg.est_error) * z2
    H = H_hat + H_tilde
    scale = np.sqrt(beta)[:, None]
    G = scale * (H @ corr.sqrt)
    G_hat = scale * (H_hat @ corr.sqrt)
    return ChannelRealization(d, beta, H, H_hat, H_tilde, G, G_hat, corr.sqrt)


def draw_channel(cfg: SystemConfig, distances, rng: np.random.Generator) -> ChannelRealization:
    d = np.asarray(distances, dtype=float)
    k = d.size
    if k >= cfg.num_antennas + 1:
        raise ConfigError(f"K={k} exceeds the number of antennas")
    shape = (k, cfg.num_antennas)
    z1 = complex_normal(rng, shape)
    z2 = complex_normal(rng, shape)
    return channel_from_ssf(cfg, d, z1, z2)
