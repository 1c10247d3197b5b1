import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kstarsel.core import SystemConfig, channel_from_ssf, draw_channel, sample_placement, trial_rng
from kstarsel.errors import IllConditioned
from kstarsel.rmt import asymptotic_sinr, deterministic_equivalents
from kstarsel.zf import (
    COND_LIMIT,
    evaluate_link,
    prelog_factor,
    zf_precode,
    zf_sinr_batch,
)


def _channel(cfg, k, seed):
    rng = np.random.default_rng(seed)
    d = sample_placement(cfg, rng, n=k).radii
    return draw_channel(cfg, d, rng)


@settings(max_examples=30, deadline=None)
@given(k=st.integers(1, 31), rho=st.floats(0, 0.9), delta=st.floats(0, 0.9), seed=st.integers(0, 2**31))
def test_power_and_zf_identities(k, rho, delta, seed):
    cfg = SystemConfig(est_error=rho, corr_coef=delta)
    ch = _channel(cfg, k, seed)
    pre = zf_precode(ch, cfg.p_lin)
    gram = ch.G_hat @ ch.G_hat.conj().T
    trace_inv = np.trace(np.linalg.inv(gram)).real
    assert pre.gamma_sq * trace_inv == pytest.approx(cfg.p_lin, rel=1e-10)
    assert np.max(np.abs(ch.G_hat @ pre.W - np.eye(k))) < 1e-8


def test_single_user_gamma(cfg):
    ch = _channel(cfg, 1, 4)
    pre = zf_precode(ch, cfg.p_lin)
    assert pre.gamma_sq == pytest.approx(cfg.p_lin * np.sum(np.abs(ch.G_hat) ** 2), rel=1e-12)


def test_orthonormal_rows(cfg):
    K, M = 4, 32
    q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((M, K)))
    G = q.T.astype(complex)
    gram_inv_trace = zf_sinr_batch(G, np.zeros_like(G), cfg.p_lin, cfg.noise_lin)[1]
    assert gram_inv_trace == pytest.approx(cfg.p_lin / K, rel=1e-12)


def test_random_draw_power_identity(cfg):
    ch = _channel(cfg, 8, 99)
    pre = zf_precode(ch, cfg.p_lin)
    tr = sum(1.0 / np.linalg.eigvalsh(ch.G_hat @ ch.G_hat.conj().T))
    assert pre.gamma_sq * tr == pytest.approx(cfg.p_lin, rel=1e-10)


def test_ill_conditioned_raises(cfg):
    z = np.ones((2, 32), dtype=complex)
    ch = channel_from_ssf(cfg, [50.0, 60.0], z, np.zeros_like(z))
    with pytest.raises(IllConditioned) as info:
        zf_precode(ch, cfg.p_lin)
    assert info.value.threshold == COND_LIMIT


def test_perfect_csi_equal_sinr(cfg):
    ch = _channel(cfg, 12, 2)
    pre = zf_precode(ch, cfg.p_lin)
    link = evaluate_link(ch, pre, cfg)
    np.testing.assert_allclose(link.sinr, pre.gamma_sq / cfg.noise_lin, rtol=1e-10)


@settings(max_examples=20, deadline=None)
@given(k=st.integers(1, 31), seed=st.integers(0, 2**31), rho=st.floats(0, 0.5))
def test_sum_rate_formula(k, seed, rho):
    cfg = SystemConfig(est_error=rho)
    ch = _channel(cfg, k, seed)
    link = evaluate_link(ch, zf_precode(ch, cfg.p_lin), cfg)
    expected = (1 - k / cfg.coherence_symbols) * np.sum(np.log2(1 + link.sinr))
    assert link.sum_rate == expected
    assert np.all(link.per_user_rate >= 0)


def test_sum_rate_monotone_in_noise():
    cfg = SystemConfig(est_error=0.1, corr_coef=0.3)
    ch = _channel(cfg, 10, 8)
    pre = zf_precode(ch, cfg.p_lin)
    rates = [evaluate_link(ch, pre, cfg.replace(noise_power_dbm=n)).sum_rate
             for n in np.linspace(-120, -60, 25)]
    assert np.all(np.diff(rates) <= 0)


def test_prelog():
    assert prelog_factor(16, 196) == 1 - 16 / 196
    assert prelog_factor(196, 196) == 0.0


def test_dimension_mismatch(cfg):
    ch = _channel(cfg, 3, 1)
    pre = zf_precode(_channel(cfg, 4, 1), cfg.p_lin)
    with pytest.raises(ValueError):
        evaluate_link(ch, pre, cfg)


def test_batch_matches_single():
    cfg = SystemConfig(est_error=0.2, corr_coef=0.5)
    chans = [_channel(cfg, 6, s) for s in range(5)]
    Gh = np.stack([c.G_hat for c in chans])
    Gt = np.stack([c.G_tilde for c in chans])
    sinr, g2, cond = zf_sinr_batch(Gh, Gt, cfg.p_lin, cfg.noise_lin)
    for i, c in enumerate(chans):
        link = evaluate_link(c, zf_precode(c, cfg.p_lin), cfg)
        np.testing.assert_allclose(sinr[i], link.sinr, rtol=1e-10)


@pytest.mark.parametrize("delta", [0.0, 0.5])
def test_mc_sinr_matches_large_system(delta):
    cfg = SystemConfig(num_antennas=128, num_candidates=128, est_error=0.1, corr_coef=delta)
    K = 32
    d = sample_placement(cfg, trial_rng(0, 0, stream=7), n=K).radii
    sinr = np.empty((2000, K))
    for t in range(2000):
        ch = draw_channel(cfg, d, trial_rng(0, t, stream=8))
        sinr[t] = evaluate_link(ch, zf_precode(ch, cfg.p_lin), cfg).sinr
    de = deterministic_equivalents(cfg, K)
    limit = np.array([asymptotic_sinr(de, d, k, cfg.pathloss_exp) for k in range(1, K + 1)])
    np.testing.assert_allclose(np.median(sinr, axis=0), limit, rtol=0.05)
