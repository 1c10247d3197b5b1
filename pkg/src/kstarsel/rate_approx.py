"""Deterministic approximations of the ergodic sum rate under random and nearest-user selection.

Closed-form moments (annulus law and hypergeometric order-statistic moments)
are the production path; quadrature moments are kept as an independent
check and as a fallback.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import SystemConfig
from .errors import ConfigError, NoConvergence
from .rmt import deterministic_equivalents
from .special import adaptive_gl, hyp2f1

QUAD_TOL = 1e-8


@dataclass(frozen=True)
class DistanceLaw:
    """Law of a BS-user distance for users uniform in an annulus.

    ``k=None`` is a single unordered user; otherwise the k-th smallest of
    ``n`` i.i.d. distances (1-based).
    """

    r_min: float
    r_max: float
    n: int = 1
    k: int | None = None

    def __post_init__(self):
        if not 0 < self.r_min < self.r_max:
            raise ValueError("need 0 < r_min < r_max")
        if self.k is not None and not 1 <= self.k <= self.n:
            raise ValueError(f"order index {self.k} outside [1, {self.n}]")

    @property
    def span(self) -> float:
        return self.r_max**2 - self.r_min**2

    def cdf(self, r):
        u = (np.asarray(r, dtype=float) ** 2 - self.r_min**2) / self.span
        return np.clip(u, 0.0, 1.0)

    def parent_pdf(self, r):
        r = np.asarray(r, dtype=float)
        return np.where((r >= self.r_min) & (r <= self.r_max), 2.0 * r / self.span, 0.0)

    def pdf(self, r):
        if self.k is None:
            return self.parent_pdf(r)
        r = np.asarray(r, dtype=float)
        k, n = self.k, self.n
        u = self.cdf(r)
        inside = (r >= self.r_min) & (r <= self.r_max)
        with np.errstate(divide="ignore", invalid="ignore"):
            log_f = np.log(2.0 * r / self.span) - log_beta(k, n - k + 1)
            if k > 1:
                log_f = log_f + (k - 1) * np.log(u)
            if n > k:
                log_f = log_f + (n - k) * np.log1p(-u)
            out = np.exp(log_f)
        return np.where(inside, np.nan_to_num(out, nan=0.0), 0.0)

    def moment(self, alpha: float) -> float:
        if self.k is None:
            return moment_unordered(self, alpha)
        return moment_order_stat(self, alpha)


def log_beta(x: float, y: float) -> float:
    return math.lgamma(x) + math.lgamma(y) - math.lgamma(x + y)


def moment_unordered(law: DistanceLaw, alpha: float) -> float:
    """E[d^alpha] for a single user uniform in the annulus."""
    a, b = law.r_min, law.r_max
    return 2.0 * (b ** (alpha + 2) - a ** (alpha + 2)) / ((alpha + 2) * (b**2 - a**2))


def moment_order_stat(law: DistanceLaw, alpha: float) -> float:
    """E[d_(k)^alpha] = r_min^alpha * 2F1(k, -alpha/2; n+1; 1 - r_max^2 / r_min^2)."""
    if law.k is None:
        raise ValueError("law is not an order statistic")
    if alpha == 0:
        return 1.0
    z = 1.0 - (law.r_max / law.r_min) ** 2
    try:
        return law.r_min**alpha * hyp2f1(law.k, -alpha / 2.0, law.n + 1, z)
    except NoConvergence:
        return moment_quadrature(law, alpha)


def moment_quadrature(law: DistanceLaw, alpha: float, rel_tol: float = 1e-12) -> float:
    """E[d^alpha] by adaptive quadrature of r^alpha against the law's density."""
    return adaptive_gl(lambda r: r**alpha * law.pdf(r), law.r_min, law.r_max,
                       abs_tol=0.0, rel_tol=rel_tol, initial_panels=16)


def order_stat_moments(cfg: SystemConfig, K: int, method: str = "hyp2f1") -> np.ndarray:
    """Moments E[d_(k)^alpha] for k = 1..K among ``cfg.num_candidates`` users."""
    out = np.empty(K)
    for i in range(K):
        law = DistanceLaw(cfg.r_min, cfg.r_max, cfg.num_candidates, i + 1)
        if method == "hyp2f1":
            out[i] = moment_order_stat(law, cfg.pathloss_exp)
        elif method == "quadrature":
            out[i] = moment_quadrature(law, cfg.pathloss_exp)
        else:
            raise ValueError(f"unknown moment method {method!r}")
    return out


@dataclass(frozen=True)
class RateApproximation:
    scheme: str
    K: int
    value: float
    T1: np.ndarray
    T2: np.ndarray
    T3: np.ndarray
    method: str


def _check_k(cfg: SystemConfig, K: int) -> None:
    if not 1 <= K < cfg.num_antennas:
        raise ConfigError(f"need 1 <= K < M, got K={K}")
    if K >= cfg.coherence_symbols:
        raise ConfigError(f"need K < T, got K={K}")


def _log_rate_integrand(cfg: SystemConfig, a_s: float, b_s: float, S: float):
    rho, alpha = cfg.est_error, cfg.pathloss_exp

    def g(r):
        ra = r**alpha
        return np.log2(1.0 + (1.0 - rho) / (a_s * (ra + S) + b_s * (S / ra + 1.0)))

    return g


def approx_rate_rus(cfg: SystemConfig, K: int, tol: float = QUAD_TOL) -> RateApproximation:
    _check_k(cfg, K)
    de = deterministic_equivalents(cfg, K)
    law = DistanceLaw(cfg.r_min, cfg.r_max)
    S = (K - 1) * moment_unordered(law, cfg.pathloss_exp)
    g = _log_rate_integrand(cfg, de.coeff_A_scaled, de.coeff_B_scaled, S)
    integral = adaptive_gl(lambda r: law.parent_pdf(r) * g(r), cfg.r_min, cfg.r_max, abs_tol=tol)
    value = (1.0 - K / cfg.coherence_symbols) * K * integral
    A, B = de.coeff_A, de.coeff_B
    return RateApproximation("RUS", K, value, np.array([A]), np.array([B * S]),
                             np.array([A * S + B]), "quadrature")


def approx_rate_lus(cfg: SystemConfig, K: int, tol: float = QUAD_TOL,
                    moment_method: str = "hyp2f1") -> RateApproximation:
    _check_k(cfg, K)
    if K > cfg.num_candidates:
        raise ConfigError("cannot select more users than candidates")
    de = deterministic_equivalents(cfg, K)
    moments = order_stat_moments(cfg, K, moment_method)
    S = moments.sum() - moments
    total = 0.0
    for i in range(K):
        law = DistanceLaw(cfg.r_min, cfg.r_max, cfg.num_candidates, i + 1)
        g = _log_rate_integrand(cfg, de.coeff_A_scaled, de.coeff_B_scaled, S[i])
        total += adaptive_gl(lambda r: law.pdf(r) * g(r), cfg.r_min, cfg.r_max, abs_tol=tol)
    value = (1.0 - K / cfg.coherence_symbols) * total
    A, B = de.coeff_A, de.coeff_B
    return RateApproximation("LUS", K, value, np.full(K, A), B * S, A * S + B, "quadrature")


def approx_rate_special(cfg: SystemConfig, K: int, scheme: str) -> RateApproximation:
    """Closed-form double-Jensen approximation, valid only without estimation error or correlation."""
    if cfg.est_error != 0.0 or cfg.corr_coef != 0.0:
        raise ConfigError("closed-form approximation requires rho = 0 and delta = 0")
    _check_k(cfg, K)
    M, alpha = cfg.num_antennas, cfg.pathloss_exp
    scheme = scheme.upper()
    if scheme == "RUS":
        total_moment = K * moment_unordered(DistanceLaw(cfg.r_min, cfg.r_max), alpha)
    elif scheme == "LUS":
        total_moment = float(order_stat_moments(cfg, K).sum())
    else:
        raise ValueError(f"unknown scheme {scheme!r}")
    snr = cfg.p_lin * cfg.pathloss_ref * (M - K) / (cfg.noise_lin * total_moment)
    value = (1.0 - K / cfg.coherence_symbols) * K * math.log2(1.0 + snr)
    A = cfg.noise_lin / (cfg.p_lin * cfg.pathloss_ref * (M - K))
    return RateApproximation(scheme, K, value, np.array([A]), np.array([0.0]),
                             np.array([A * total_moment / K]), "simplified_special_case")
