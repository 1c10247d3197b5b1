"""Zero-forcing precoding on the estimated channel and per-user SINR.

The symbol covariance is taken as the identity when evaluating the
estimation-error interference, so the interference seen by user k is
``gamma^2 * || g_tilde_k W ||^2``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import ChannelRealization, SystemConfig
from .errors import IllConditioned

COND_LIMIT = 1e12


@dataclass(frozen=True)
class PrecoderOutput:
    gamma_sq: float
    W: np.ndarray
    gram_condition: float


@dataclass(frozen=True)
class LinkResult:
    sinr: np.ndarray
    per_user_rate: np.ndarray
    sum_rate: float
    prelog: float


def _hermitian(x):
    return np.conj(np.swapaxes(x, -1, -2))


def gram_factor(G_hat):
    """Cholesky-based inverse of the Gram matrix ``G_hat G_hat^H``.

    Works on stacked matrices ``(..., K, M)``. Returns ``(gram_inv, trace_inv, cond)``.
    Matrices whose condition number exceeds :data:`COND_LIMIT` are replaced by
    the identity so the batch can proceed; callers must mask them using ``cond``.
    """
    gram = G_hat @ _hermitian(G_hat)
    ev = np.linalg.eigvalsh(gram)
    with np.errstate(divide="ignore", invalid="ignore"):
        cond = np.where(ev[..., 0] > 0, ev[..., -1] / ev[..., 0], np.inf)
    bad = ~(cond <= COND_LIMIT)
    if np.any(bad):
        gram = gram.copy()
        gram[bad] = np.eye(gram.shape[-1])
    L = np.linalg.cholesky(gram)
    eye = np.broadcast_to(np.eye(gram.shape[-1], dtype=gram.dtype), gram.shape)
    L_inv = np.linalg.solve(L, eye)
    gram_inv = _hermitian(L_inv) @ L_inv
    trace_inv = np.sum(np.abs(L_inv) ** 2, axis=(-2, -1))
    return gram_inv, trace_inv, cond


def zf_sinr_batch(G_hat, G_tilde, p_lin: float, noise_lin: float):
    """Vectorized ZF link over stacked realizations.

    Returns ``(sinr, gamma_sq, cond)`` with shapes ``(..., K)``, ``(...)``, ``(...)``.
    Entries with ``cond > COND_LIMIT`` carry meaningless values.
    """
    gram_inv, trace_inv, cond = gram_factor(G_hat)
    gamma_sq = p_lin / trace_inv
    W = _hermitian(G_hat) @ gram_inv
    leak = np.sum(np.abs(G_tilde @ W) ** 2, axis=-1)
    g2 = gamma_sq[..., None]
    sinr = g2 / (noise_lin + g2 * leak)
    return sinr, gamma_sq, cond


def zf_precode(ch: ChannelRealization, p_lin: float) -> PrecoderOutput:
    gram_inv, trace_inv, cond = gram_factor(ch.G_hat)
    cond = float(cond)
    if not cond <= COND_LIMIT:
        raise IllConditioned(cond, COND_LIMIT)
    W = ch.G_hat.conj().T @ gram_inv
    return PrecoderOutput(float(p_lin / trace_inv), W, cond)


def prelog_factor(k: int, T: int) -> float:
    return max(0.0, 1.0 - k / T)


def rates_from_sinr(sinr, prelog: float):
    per_user = np.log2(1.0 + np.asarray(sinr))
    return per_user, prelog * np.sum(per_user, axis=-1)


def evaluate_link(ch: ChannelRealization, pre: PrecoderOutput, cfg: SystemConfig,
                  prelog: float | None = None) -> LinkResult:
    if pre.W.shape != (ch.M, ch.K):
        raise ValueError(f"precoder shape {pre.W.shape} does not match channel {ch.K}x{ch.M}")
    if prelog is None:
        prelog = prelog_factor(ch.K, cfg.coherence_symbols)
    leak = np.sum(np.abs(ch.G_tilde @ pre.W) ** 2, axis=1)
    sinr = pre.gamma_sq / (cfg.noise_lin + pre.gamma_sq * leak)
    per_user, total = rates_from_sinr(sinr, prelog)
    return LinkResult(sinr, per_user, float(total), prelog)
