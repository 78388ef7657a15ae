import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fracsew import (
    AlignmentError,
    ConfigurationError,
    DomainError,
    EmbeddingError,
    FbmConfig,
    SeedSpec,
    adaptive_quad,
    beta,
    c_h,
    conditional_increment_moments,
    fbm_cov,
    fgn_cov,
    kernel_cell_weights,
    kernel_correlation,
    mvn_kernel,
    sample_fbm,
)
from fracsew.fbm import _circulant_sqrt_eigs


# ---------------------------------------------------------------------------
# normalization constant


def test_c_h_is_one_at_half():
    # exact value is 1; the log-gamma route loses ~1 ulp per term
    assert abs(c_h(0.5) - 1.0) <= 1e-13


def test_c_h_against_beta_integral():
    """Dual route: recompute the Beta factor by direct quadrature."""
    for H in (0.75, 0.25):
        direct = adaptive_quad(
            lambda u: u ** (1.0 - 2.0 * H) * (1.0 - u) ** (H - 0.5),
            0.0, 1.0, tol=1e-11, singularity="both").value
        want = (1.5 - H) / (2.0 * H) * direct
        assert c_h(H) == pytest.approx(want, abs=1e-10)


def test_c_h_matches_beta_function():
    for H in (0.1, 0.3, 0.6, 0.9):
        want = (1.5 - H) / (2.0 * H) * beta(2.0 - 2.0 * H, H + 0.5)
        assert c_h(H) == pytest.approx(want, rel=1e-14)


def test_c_h_domain():
    with pytest.raises(DomainError):
        c_h(0.0)
    with pytest.raises(DomainError):
        c_h(1.0)


# ---------------------------------------------------------------------------
# kernel and covariance


def test_mvn_kernel_vanishes_for_future_source():
    assert mvn_kernel(1.0, 2.0, 0.7) == 0.0
    assert mvn_kernel(1.0, 1.0, 0.7) == 0.0


def test_mvn_kernel_interior_value():
    assert mvn_kernel(1.0, 0.5, 0.7) == pytest.approx(0.5 ** 0.2, rel=1e-15)


def test_mvn_kernel_is_indicator_at_half():
    # H = 1/2: K(t, s) = 1 on 0 <= s < t, else 0
    assert mvn_kernel(1.0, 0.3, 0.5) == 1.0
    assert mvn_kernel(1.0, 0.0, 0.5) == 1.0
    assert mvn_kernel(1.0, -0.2, 0.5) == 0.0
    assert mvn_kernel(1.0, 1.5, 0.5) == 0.0


def test_mvn_kernel_vectorized():
    s = np.array([-1.0, 0.25, 2.0])
    out = mvn_kernel(1.0, s, 0.7)
    assert out.shape == (3,)
    assert out[2] == 0.0


def test_fbm_cov_brownian_is_min():
    assert fbm_cov(0.3, 0.8, 0.5) == pytest.approx(0.3, rel=1e-13)
    assert fbm_cov(0.8, 0.3, 0.5) == pytest.approx(0.3, rel=1e-13)


def test_fbm_cov_diagonal_is_variance():
    for H in (0.2, 0.6):
        assert fbm_cov(0.7, 0.7, H) == pytest.approx(c_h(H) * 0.7 ** (2 * H), rel=1e-13)


def test_fbm_cov_var0_offset():
    assert fbm_cov(0.2, 0.5, 0.3, var0=2.0) == pytest.approx(
        2.0 + fbm_cov(0.2, 0.5, 0.3), rel=1e-13)


def test_fbm_cov_rejects_negative_times():
    with pytest.raises(DomainError):
        fbm_cov(-0.1, 0.5, 0.3)
    with pytest.raises(DomainError):
        fbm_cov(0.1, 0.5, 0.3, var0=-1.0)


def test_fbm_cov_against_kernel_quadrature():
    """Dual route: covariance as the kernel product integrated over the line."""
    s, t = 0.3, 0.7
    for H, flag in ((0.7, None), (0.25, "upper")):
        f = lambda r: mvn_kernel(s, r, H) * mvn_kernel(t, r, H)
        tail = adaptive_quad(f, -np.inf, 0.0, tol=2e-8).value
        body = adaptive_quad(f, 0.0, s, tol=2e-8, singularity=flag).value
        assert fbm_cov(s, t, H) == pytest.approx(tail + body, abs=1e-6)


def test_fgn_cov_lag_zero_is_increment_variance():
    for H in (0.3, 0.8):
        assert fgn_cov(0, H, 0.25) == pytest.approx(c_h(H) * 0.25 ** (2 * H), rel=1e-13)


def test_fgn_cov_consistent_with_fbm_cov():
    H, h = 0.7, 0.125
    # Cov(B_h - B_0, B_3h - B_2h) from the value covariance
    want = (fbm_cov(h, 3 * h, H) - fbm_cov(h, 2 * h, H)
            - fbm_cov(0.0, 3 * h, H) + fbm_cov(0.0, 2 * h, H))
    assert fgn_cov(2, H, h) == pytest.approx(want, rel=1e-10)


# ---------------------------------------------------------------------------
# samplers


def test_sampler_determinism_and_seed_sensitivity():
    cfg = FbmConfig(hurst=0.3, grid_n=64, seed=11)
    for method in ("cholesky", "circulant", "kernel"):
        a = sample_fbm(cfg, method=method)
        b = sample_fbm(cfg, method=method)
        np.testing.assert_array_equal(a.values, b.values)
        c = sample_fbm(FbmConfig(hurst=0.3, grid_n=64, seed=12), method=method)
        assert not np.array_equal(a.values, c.values)


def test_sampler_basic_shape_and_start():
    cfg = FbmConfig(hurst=0.7, horizon=2.0, grid_n=32, seed=0)
    p = sample_fbm(cfg)
    assert p.values.shape == (33,)
    assert p.values[0] == 0.0  # var0 = 0
    assert p.times[-1] == 2.0
    assert p.method == "circulant"


def test_sampler_var0_randomizes_start():
    cfg = FbmConfig(hurst=0.5, grid_n=8, var0=1.0, seed=4)
    p = sample_fbm(cfg)
    assert p.values[0] != 0.0


def test_cholesky_factor_reproduces_fgn_covariance():
    from fracsew.fbm import _cholesky_factor
    H, n, step = 0.3, 16, 1.0 / 16
    L = _cholesky_factor(H, n, step)
    want = fgn_cov(np.abs(np.arange(n)[:, None] - np.arange(n)[None, :]), H, step)
    np.testing.assert_allclose(L @ L.T, want, atol=1e-12)


def test_circulant_eigs_nonnegative_across_hurst():
    for H in (0.05, 0.3, 0.5, 0.7, 0.95):
        sq = _circulant_sqrt_eigs(H, 256, 1.0 / 256)
        assert np.all(np.isfinite(sq))


def test_circulant_rejects_indefinite_embedding():
    # a hand-built row whose circulant eigenvalues go negative
    from fracsew.fbm import _embedding_eigs
    with pytest.raises(EmbeddingError):
        _embedding_eigs(np.array([1.0, 2.0]))


def test_samplers_agree_in_law_small_grid():
    """Empirical increment covariance of each sampler vs the exact matrix."""
    H, n, npaths = 0.3, 4, 4000
    lagmat = np.abs(np.arange(n)[:, None] - np.arange(n)[None, :])
    want = fgn_cov(lagmat, H, 1.0 / n)
    for method in ("cholesky", "circulant", "kernel"):
        incs = np.empty((npaths, n))
        for i in range(npaths):
            p = sample_fbm(FbmConfig(hurst=H, grid_n=n, seed=60000 + i), method=method)
            incs[i] = np.diff(p.values)
        got = incs.T @ incs / npaths
        se = np.sqrt((np.outer(np.diag(want), np.diag(want)) + want ** 2) / npaths)
        tol = 5.0 if method != "kernel" else 6.0  # kernel carries truncation bias
        assert np.all(np.abs(got - want) <= tol * se), method


def test_single_interval_grid():
    cfg = FbmConfig(hurst=0.4, grid_n=1, seed=3)
    p = sample_fbm(cfg)
    assert p.values.shape == (2,)
    draws = np.array([sample_fbm(FbmConfig(hurst=0.4, grid_n=1, seed=i)).values[1]
                      for i in range(4000)])
    var = draws.var()
    want = c_h(0.4)
    se = want * math.sqrt(2.0 / 4000)
    assert abs(var - want) < 5 * se


def test_kernel_sampler_carries_noise():
    cfg = FbmConfig(hurst=0.3, grid_n=16, seed=9)
    p = sample_fbm(cfg, method="kernel")
    assert p.noise is not None
    assert p.noise.boundaries[0] == pytest.approx(-50.0)  # default window
    assert p.noise.boundaries[-1] == pytest.approx(1.0)
    assert p.noise.normals.shape == (p.noise.boundaries.size - 1,)
    # other samplers carry none, and refuse the truncation knob
    assert sample_fbm(cfg).noise is None
    with pytest.raises(ConfigurationError):
        sample_fbm(cfg, method="cholesky", truncation=10.0)
    with pytest.raises(ConfigurationError):
        sample_fbm(cfg, method="walsh")


def test_kernel_path_is_weighted_noise():
    """The stored white-noise cells reproduce the path values exactly."""
    cfg = FbmConfig(hurst=0.35, grid_n=8, seed=21)
    p = sample_fbm(cfg, method="kernel")
    w = kernel_cell_weights(0.35, p.times, p.noise.boundaries)
    np.testing.assert_allclose(w @ p.noise.normals, p.values, atol=1e-12)


def test_kernel_cell_weights_zero_for_future_cells():
    boundaries = np.array([-1.0, 0.0, 0.5, 1.0])
    w = kernel_cell_weights(0.3, np.array([0.5]), boundaries)
    assert w[0, 2] == 0.0  # cell (0.5, 1.0) is entirely after t = 0.5


def test_indices_of_and_value_at():
    p = sample_fbm(FbmConfig(hurst=0.5, grid_n=8, seed=1))
    np.testing.assert_array_equal(p.indices_of([0.0, 0.25, 1.0]), [0, 2, 8])
    assert p.value_at(0.375) == p.values[3]
    with pytest.raises(AlignmentError):
        p.indices_of(0.3)
    with pytest.raises(AlignmentError):
        p.indices_of(1.5)


def test_config_validation():
    with pytest.raises(DomainError):
        FbmConfig(hurst=1.2)
    with pytest.raises(ConfigurationError):
        FbmConfig(hurst=0.5, grid_n=0)
    with pytest.raises(ConfigurationError):
        FbmConfig(hurst=0.5, horizon=-1.0)
    with pytest.raises(ConfigurationError):
        FbmConfig(hurst=0.5, seed="abc")


def test_multidimensional_path_components_independent():
    cfg = FbmConfig(hurst=0.5, grid_n=256, seed=17, dim=2)
    p = sample_fbm(cfg)
    assert p.values.shape == (257, 2)
    incs = np.diff(p.values, axis=0)
    corr = np.corrcoef(incs.T)[0, 1]
    assert abs(corr) < 0.2  # independent components, n = 256


# ---------------------------------------------------------------------------
# conditional structure


def test_conditional_moments_brownian_closed_form():
    m = conditional_increment_moments(0.25, 0.5, 0.75, 0.5)
    assert m.sigma_s_sq == pytest.approx(0.25, abs=1e-14)
    assert m.rho_st == pytest.approx(0.0, abs=1e-14)
    assert m.sigma_st_sq == pytest.approx(0.25, abs=1e-14)
    assert m.kappa_st_sq == pytest.approx(0.25, abs=1e-14)


def test_conditional_moments_degenerate_increment():
    m = conditional_increment_moments(0.1, 0.6, 0.6, 0.3)
    assert m.sigma_st_sq == 0.0
    assert m.sigma_s_sq == pytest.approx(0.5 ** 0.6 / 0.6, rel=1e-13)


def test_conditional_moments_domain():
    with pytest.raises(DomainError):
        conditional_increment_moments(0.5, 0.5, 0.7, 0.3)
    with pytest.raises(DomainError):
        conditional_increment_moments(-0.1, 0.5, 0.7, 0.3)


@given(st.floats(0.1, 0.9), st.floats(0.01, 0.5), st.floats(0.0, 1.0),
       st.floats(0.0, 1.0))
@settings(max_examples=60, deadline=None)
def test_conditional_moments_are_a_valid_gaussian(H, v, su, tu):
    s = v + 0.05 + 0.8 * su
    t = s + 0.8 * tu
    m = conditional_increment_moments(v, s, t, H)
    assert m.sigma_s_sq > 0.0
    assert m.sigma_st_sq >= 0.0
    assert m.kappa_st_sq >= 0.0
    # Cauchy-Schwarz for the conditional pair
    assert m.rho_st ** 2 <= m.sigma_s_sq * m.sigma_st_sq * (1.0 + 1e-9) + 1e-15


def test_kernel_correlation_degenerate_and_domain():
    kc = kernel_correlation(0.2, 0.7, 0.7, 0.3)
    assert kc.remainder == 0.0
    assert kc.value == pytest.approx(0.5 ** 0.6 / 0.6, rel=1e-13)
    with pytest.raises(DomainError):
        kernel_correlation(0.2, 0.7, 0.8, 0.5)  # H = 1/2 excluded
    with pytest.raises(DomainError):
        kernel_correlation(0.2, 0.3, 0.9, 0.3)  # increment longer than window


def test_kernel_correlation_remainder_is_second_order():
    """remainder * (s-v)^(2-2H) / (t-s)^2 stays bounded as t -> s."""
    for H in (0.3, 0.7):
        ratios = []
        v, s = 0.25, 0.75
        for k in range(3, 11):
            ts = 0.5 * 2.0 ** -k
            kc = kernel_correlation(v, s, s + ts, H)
            ratios.append(abs(kc.remainder) * 0.5 ** (2 - 2 * H) / ts ** 2)
        assert max(ratios) / min(ratios) < 3.0
        assert max(ratios) < 1.0
