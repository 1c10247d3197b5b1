import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kstarsel.core import SystemConfig, build_correlation
from kstarsel.errors import ConfigError
from kstarsel.rmt import (
    _bisect_phi,
    asymptotic_sinr,
    compute_psi,
    deterministic_equivalents,
    phi_residual,
    solve_phi,
    validate_large_system,
)

# Root of phi - tr(R (I + (K/M) R / phi)^-1) / M for M=32, K=8, delta=0.5,
# found by bisection on the dense matrix trace (frozen).
PHI_REF = 0.6415074882535843
PSI_REF = 0.5360456005597818


def _dense_bisect(M, K, delta):
    R = build_correlation(M, delta).matrix
    g = lambda p: p - np.trace(R @ np.linalg.inv(np.eye(M) + (K / M) * R / p)) / M
    lo, hi = 1e-9, 1.0
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if g(mid) > 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


@pytest.mark.parametrize("K, phi", [(16, 0.5), (1, 31 / 32)])
def test_phi_identity_corr(K, phi):
    assert solve_phi(build_correlation(32, 0.0), K) == phi


def test_phi_reference():
    corr = build_correlation(32, 0.5)
    assert solve_phi(corr, 8) == pytest.approx(PHI_REF, abs=1e-12)
    assert abs(phi_residual(solve_phi(corr, 8), corr.eigenvalues, 0.25)) < 1e-12


def test_phi_dense_oracle_spot():
    assert _dense_bisect(32, 20, 0.9) == pytest.approx(solve_phi(build_correlation(32, 0.9), 20), abs=1e-10)


@pytest.mark.parametrize("K, psi", [(16, 0.25), (8, 0.5625)])
def test_psi_identity_corr(K, psi):
    corr = build_correlation(32, 0.0)
    assert compute_psi(corr, K, solve_phi(corr, K)) == pytest.approx(psi, rel=1e-15)


def test_psi_dense_trace():
    corr = build_correlation(32, 0.5)
    phi = solve_phi(corr, 8)
    R = corr.matrix
    X = np.linalg.inv(np.eye(32) + 0.25 * R / phi)
    dense = np.trace(R @ R @ X @ X) / 32
    assert compute_psi(corr, 8, phi) == pytest.approx(dense, abs=1e-12)
    assert compute_psi(corr, 8, phi) == pytest.approx(PSI_REF, abs=1e-12)


@pytest.mark.parametrize("delta", [0.0, 0.3, 0.5, 0.9])
def test_fixed_point_vs_bisection(delta):
    corr = build_correlation(32, delta)
    for K in range(1, 32):
        ref = _bisect_phi(corr.eigenvalues, K / 32, iters=50_000)
        assert solve_phi(corr, K) == pytest.approx(ref, abs=1e-10)


@settings(max_examples=20, deadline=None)
@given(m=st.integers(4, 64), delta=st.floats(0.0, 0.95))
def test_phi_decreasing_in_k(m, delta):
    corr = build_correlation(m, delta)
    phis = [solve_phi(corr, k) for k in range(1, m)]
    assert np.all(np.diff(phis) < 0)
    for k, (phi) in enumerate(phis, start=1):
        assert m * phi**2 - k * compute_psi(corr, k, phi) > 0


def test_solve_phi_rejects_full_load():
    with pytest.raises(ConfigError):
        solve_phi(build_correlation(8, 0.2), 8)


def test_coefficients_special_case():
    cfg = SystemConfig()
    for K in range(1, 32):
        de = deterministic_equivalents(cfg, K)
        assert de.coeff_A == pytest.approx(cfg.noise_lin / (cfg.p_lin * cfg.pathloss_ref * (32 - K)), rel=1e-12)
        assert de.coeff_B == 0.0


def test_b_zero_without_error_any_corr():
    assert deterministic_equivalents(SystemConfig(corr_coef=0.7), 10).coeff_B == 0.0


def test_b_value():
    de = deterministic_equivalents(SystemConfig(est_error=0.1), 8)
    assert de.coeff_B == pytest.approx(1 / 216, rel=1e-12)


def test_general_coefficients_match_formula():
    cfg = SystemConfig(est_error=0.2, corr_coef=0.5)
    de = deterministic_equivalents(cfg, 8)
    A = cfg.noise_lin / (0.8 * cfg.p_lin * cfg.pathloss_ref * de.phi * 32)
    B = 0.25 * de.psi / (32 * de.phi**2 - 8 * de.psi)
    assert de.coeff_A == pytest.approx(A, rel=1e-12)
    assert de.coeff_B == pytest.approx(B, rel=1e-12)
    assert de.coeff_A_scaled == pytest.approx(0.8 * A, rel=1e-12)


def test_rejects_total_error():
    with pytest.raises(ConfigError):
        deterministic_equivalents(SystemConfig(est_error=1.0), 4)


def test_b_increasing_in_rho():
    bs = [deterministic_equivalents(SystemConfig(est_error=r, corr_coef=0.4), 6).coeff_B
          for r in np.linspace(0, 0.95, 20)]
    assert bs[0] == 0 and np.all(np.diff(bs) > 0)


def test_asymptotic_sinr_equal_distances():
    cfg = SystemConfig()
    de = deterministic_equivalents(cfg, 8)
    d = np.full(8, 120.0)
    expected = cfg.p_lin * cfg.pathloss_ref * 24 * 120.0**-3.76 / (8 * cfg.noise_lin)
    assert asymptotic_sinr(de, d, 3, 3.76) == pytest.approx(expected, rel=1e-12)


def test_asymptotic_sinr_user_independent_when_b_zero():
    de = deterministic_equivalents(SystemConfig(corr_coef=0.5), 5)
    d = [40.0, 80.0, 120.0, 160.0, 240.0]
    vals = [asymptotic_sinr(de, d, k, 3.76) for k in range(1, 6)]
    assert max(vals) == pytest.approx(min(vals), rel=1e-14)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(35, 250), min_size=4, max_size=4), st.integers(0, 3), st.integers(1, 4))
def test_asymptotic_sinr_decreasing_in_other_distances(d, i, k):
    de = deterministic_equivalents(SystemConfig(est_error=0.1, corr_coef=0.3), 4)
    if i == k - 1:
        i = (i + 1) % 4
    farther = list(d)
    farther[i] = d[i] * 1.01
    assert asymptotic_sinr(de, farther, k, 3.76) < asymptotic_sinr(de, d, k, 3.76)


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(35, 250), min_size=4, max_size=4), st.integers(1, 4))
def test_asymptotic_sinr_decreasing_in_own_distance_without_error(d, k):
    de = deterministic_equivalents(SystemConfig(corr_coef=0.3), 4)
    farther = list(d)
    farther[k - 1] = d[k - 1] * 1.01
    assert asymptotic_sinr(de, farther, k, 3.76) < asymptotic_sinr(de, d, k, 3.76)


def test_own_distance_can_raise_sinr_with_error():
    # Interference-limited regime: the error term scales with (d_i / d_k)^alpha.
    de = deterministic_equivalents(SystemConfig(est_error=0.1, corr_coef=0.3), 4)
    d = [35.0] * 4
    assert asymptotic_sinr(de, [36.0, 35.0, 35.0, 35.0], 1, 3.76) > asymptotic_sinr(de, d, 1, 3.76)


def test_large_system_without_error():
    cfg = SystemConfig(num_antennas=128, num_candidates=128)
    rep = validate_large_system(cfg, 32, 400)
    assert rep.quadform_limit == 0.0 and rep.quadform_mean == 0.0
    assert rep.rel_err_gamma_sq < 0.03


def test_large_system_trend_small():
    errs = []
    for M in (32, 64, 128):
        cfg = SystemConfig(num_antennas=M, num_candidates=M, est_error=0.1, corr_coef=0.5)
        errs.append(validate_large_system(cfg, M // 4, 500).rel_err_gamma_sq)
    assert errs[0] > errs[-1]
