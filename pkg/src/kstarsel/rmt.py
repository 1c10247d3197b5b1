"""Large-system deterministic equivalents for ZF with imperfect CSI.

All traces over functions of the correlation matrix are evaluated through
its cached eigenvalues, so each fixed-point step costs O(M).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import CorrelationModel, SystemConfig, build_correlation, draw_channel, sample_placement, trial_rng
from .errors import ConfigError, NoConvergence
from .zf import zf_precode

PHI_TOL = 1e-13
PHI_MAX_ITER = 10_000


@dataclass(frozen=True)
class DeterministicEquivalents:
    phi: float
    psi: float
    coeff_A: float
    coeff_B: float
    K: int
    M: int
    delta: float
    rho: float
    p_lin: float
    c: float
    noise_lin: float

    @property
    def coeff_A_scaled(self) -> float:
        """``A * (1 - rho)``: the noise coefficient with the estimation factor moved out."""
        return self.noise_lin / (self.p_lin * self.c * self.phi * self.M)

    @property
    def coeff_B_scaled(self) -> float:
        """``B * (1 - rho)``."""
        return self.rho * self.psi / (self.M * self.phi**2 - self.K * self.psi)


def phi_residual(phi: float, eigenvalues: np.ndarray, load: float) -> float:
    """``phi - (1/M) sum lam / (1 + load * lam / phi)`` with ``load = K/M``."""
    lam = eigenvalues
    return phi - float(np.mean(lam / (1.0 + load * lam / phi)))


def _bisect_phi(eigenvalues, load, lo=1e-300, hi=None, iters=200) -> float:
    hi = float(np.max(eigenvalues)) if hi is None else hi
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if phi_residual(mid, eigenvalues, load) > 0:
            hi = mid
        else:
            lo = mid
        if hi - lo <= 1e-16 * hi:
            break
    return 0.5 * (lo + hi)


def solve_phi(corr: CorrelationModel, K: int) -> float:
    """Unique positive root of ``phi = (1/M) tr(R (I + (K/M) R / phi)^-1)``."""
    M = corr.dim
    if not 1 <= K < M:
        raise ConfigError(f"need 1 <= K < M, got K={K}, M={M}")
    load = K / M
    if corr.is_identity:
        return 1.0 - load
    lam = corr.eigenvalues
    phi = 1.0
    prev_step = np.inf
    for _ in range(PHI_MAX_ITER):
        nxt = float(np.mean(lam / (1.0 + load * lam / phi)))
        step = abs(nxt - phi)
        if step < PHI_TOL:
            return nxt
        if step > prev_step:
            # Not contracting; fall back to bracketing.
            return _bisect_phi(lam, load)
        prev_step = step
        phi = nxt
    raise NoConvergence(f"phi iteration did not converge (K={K}, M={M}, delta={corr.delta})")


def compute_psi(corr: CorrelationModel, K: int, phi: float) -> float:
    """``psi = (1/M) tr(R^2 (I + (K/M) R / phi)^-2)``."""
    if corr.is_identity:
        return phi * phi
    lam = corr.eigenvalues
    return float(np.mean((lam / (1.0 + (K / corr.dim) * lam / phi)) ** 2))


def deterministic_equivalents(cfg: SystemConfig, K: int) -> DeterministicEquivalents:
    M = cfg.num_antennas
    if not 1 <= K < M:
        raise ConfigError(f"need 1 <= K < M, got K={K}, M={M}")
    rho = cfg.est_error
    if rho >= 1.0:
        raise ConfigError("estimation error rho = 1 leaves no usable channel estimate")
    corr = build_correlation(M, cfg.corr_coef)
    phi = solve_phi(corr, K)
    psi = compute_psi(corr, K, phi)
    p, c, noise = cfg.p_lin, cfg.pathloss_ref, cfg.noise_lin
    if corr.is_identity:
        # Closed form: phi*M = M - K, psi / (M phi^2 - K psi) = 1 / (M - K).
        A = noise / ((1.0 - rho) * p * c * (M - K))
        B = (rho / (1.0 - rho)) / (M - K)
    else:
        A = noise / ((1.0 - rho) * p * c * phi * M)
        B = (rho / (1.0 - rho)) * psi / (M * phi**2 - K * psi)
    return DeterministicEquivalents(phi, psi, A, B, K, M, cfg.corr_coef, rho, p, c, noise)


def asymptotic_sinr(de: DeterministicEquivalents, distances, k: int, alpha: float) -> float:
    """Large-system SINR of active user ``k`` (1-based) for fixed distances."""
    d = np.asarray(distances, dtype=float)
    if d.size != de.K:
        raise ValueError(f"expected {de.K} distances, got {d.size}")
    if not 1 <= k <= de.K:
        raise ValueError(f"user index {k} outside [1, {de.K}]")
    total = float(np.sum(d**alpha))
    return 1.0 / (total * (de.coeff_A + de.coeff_B * d[k - 1] ** (-alpha)))


def gamma_sq_limit(cfg: SystemConfig, de: DeterministicEquivalents, distances) -> float:
    d = np.asarray(distances, dtype=float)
    return (1 - cfg.est_error) * cfg.p_lin * cfg.pathloss_ref * de.phi * de.M / np.sum(d**cfg.pathloss_exp)


def quadform_limit(cfg: SystemConfig, de: DeterministicEquivalents, distances) -> float:
    rho = cfg.est_error
    d = np.asarray(distances, dtype=float)
    K, M = de.K, de.M
    return ((rho / (1 - rho)) * de.psi / ((M / K) * de.phi**2 - de.psi)
            * np.sum(d**cfg.pathloss_exp) / (cfg.pathloss_ref * K))


@dataclass(frozen=True)
class LargeSystemReport:
    M: int
    K: int
    trials: int
    gamma_sq_mean: float
    gamma_sq_limit: float
    quadform_mean: float
    quadform_limit: float

    @property
    def rel_err_gamma_sq(self) -> float:
        return abs(self.gamma_sq_mean - self.gamma_sq_limit) / self.gamma_sq_limit

    @property
    def rel_err_quadform(self) -> float:
        if self.quadform_limit == 0.0:
            return abs(self.quadform_mean)
        return abs(self.quadform_mean - self.quadform_limit) / self.quadform_limit


def validate_large_system(cfg: SystemConfig, K: int, n_trials: int, distances=None) -> LargeSystemReport:
    """Monte Carlo check of the gamma^2 and error-quadratic-form limits at fixed distances.

    The quadratic form ``h_tilde_k R^{1/2} W W^H R^{1/2} h_tilde_k^H`` is
    averaged over all K users and all trials. Distances default to a placement
    drawn from ``cfg.seed`` (first K candidates).
    """
    de = deterministic_equivalents(cfg, K)
    if distances is None:
        distances = sample_placement(cfg, trial_rng(cfg.seed, 0, stream=7), n=K).radii
    distances = np.asarray(distances, dtype=float)
    g2 = np.empty(n_trials)
    qf = np.empty(n_trials)
    for t in range(n_trials):
        ch = draw_channel(cfg, distances, trial_rng(cfg.seed, t, stream=8))
        pre = zf_precode(ch, cfg.p_lin)
        g2[t] = pre.gamma_sq
        E = ch.H_tilde @ ch.sqrt_R @ pre.W
        qf[t] = np.mean(np.sum(np.abs(E) ** 2, axis=1))
    return LargeSystemReport(cfg.num_antennas, K, n_trials, float(np.mean(g2)),
                             float(gamma_sq_limit(cfg, de, distances)), float(np.mean(qf)),
                             float(quadform_limit(cfg, de, distances)))
