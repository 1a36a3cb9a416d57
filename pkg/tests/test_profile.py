import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrlab.grid import GuardError
from qrlab.profile import (
    Kernel1D,
    ProfileError,
    besov_norm,
    block_l2_norms,
    bump,
    bump_profile,
    from_csv,
    kernel_1d,
    kernel_direct,
    lambda_jb,
    mu_lorentz_norm,
    mu_masses,
    profile_from_function,
    rescale_homogeneity,
    riesz_profile,
    sequence_profile,
    smooth_step,
    spectral_leakage,
    to_csv,
    vj_decompose,
    zeta,
    zeta0,
)

RES = 1 << 12


def test_smooth_step_limits_and_monotonicity():
    u = np.linspace(-1, 2, 301)
    v = smooth_step(u)
    assert np.all(v[u <= 0] == 0) and np.all(v[u >= 1] == 1)
    assert np.all(np.diff(v) >= 0)


def test_dyadic_cutoffs_sum_to_one():
    w = np.linspace(-300, 300, 20001)
    total = sum(zeta(j, w) for j in range(12))
    inside = np.abs(w) <= 2.0**10
    assert np.allclose(total[inside], 1.0, atol=1e-15)


def test_block_cutoff_support():
    w = np.linspace(0, 40, 4001)
    for j in range(1, 5):
        v = zeta(j, w)
        live = w[v > 0]
        assert live.min() >= 2.0 ** (j - 2) and live.max() <= 2.0**j


def test_riesz_profile_values():
    h = riesz_profile(0.5, 1.0, resolution=RES)
    r = np.array([0.0, 0.5, 0.99, 1.0, 1.5])
    expect = np.array([1.0, 0.5**0.5 / (1 + np.log(2)), 0.01**0.5 / (1 + np.log(100)), 0.0, 0.0])
    assert np.allclose(h.evaluate(r).real, expect, rtol=1e-12)


def test_profile_validation():
    with pytest.raises(ProfileError):
        riesz_profile(-0.6, 0.0)
    with pytest.raises(ProfileError):
        riesz_profile(0.5, -1.0)
    with pytest.raises(ProfileError):
        bump_profile(0.5, 0.6)


def test_sequence_profile_terms_have_disjoint_supports():
    h = sequence_profile([1.0, 0.0, 2.0], 0.5, resolution=RES)
    tau = 1.0 - 2.0**-4 * 0.375
    assert np.isclose(h.evaluate(np.array([tau]))[0].real, 2.0 * 2.0 ** (-4 * 0.5))
    tau = 1.0 - 2.0**-3 * 0.375
    assert abs(h.evaluate(np.array([tau]))[0]) == 0.0


def test_vj_reconstruction_and_leakage():
    h = bump_profile(1.0, 0.5, resolution=RES)
    dec = vj_decompose(h, 10)
    err = np.max(np.abs(dec.reconstruction() + dec.tail - h.samples))
    assert err < 1e-12
    for j, c in enumerate(dec.components):
        assert spectral_leakage(c, j) < 1e-10


def test_vj_guard_beyond_nyquist():
    h = bump_profile(1.0, 0.5, resolution=64)
    with pytest.raises(GuardError):
        vj_decompose(h, 12)


def test_block_norms_sum_to_l2_norm_for_orthogonal_pieces():
    # squared blocks do not partition, but the sum of blocks reconstructs h
    h = bump_profile(1.0, 0.5, resolution=RES)
    b = block_l2_norms(h, 12)
    assert b.sum() >= h.l2_norm() * (1 - 1e-12)
    assert np.sqrt(np.sum(b**2)) <= h.l2_norm() * (1 + 1e-12)


@settings(max_examples=20, deadline=None)
@given(st.floats(0.0, 1.5), st.sampled_from([1.0, 2.0, np.inf]), st.floats(0.1, 10.0))
def test_besov_norm_is_homogeneous(alpha, s, c):
    h = bump_profile(1.0, 0.4, resolution=RES)
    assert np.isclose(besov_norm(h.scaled(c), alpha, s), c * besov_norm(h, alpha, s), rtol=1e-12)


def test_besov_norm_increases_with_alpha():
    h = riesz_profile(1.0, 0.0, resolution=RES)
    vals = [besov_norm(h, a, 2.0) for a in (0.25, 0.75, 1.25)]
    assert vals[0] < vals[1] < vals[2]


def test_rescale_homogeneity_composes():
    h = bump_profile(1.0, 0.4, resolution=RES)
    g = rescale_homogeneity(h, 2.0)
    s = np.linspace(0.8, 1.2, 11)
    assert np.allclose(g.evaluate(s), h.evaluate(s**2), atol=1e-14)


def test_kernel_fft_matches_direct_quadrature():
    h = bump_profile(1.0, 0.4, resolution=RES)
    # the bump transform decays like exp(-c sqrt(r)), so the periodic window must be wide
    K = kernel_1d(h, 1.0, R=1024.0, n_r=1 << 16, check_points=12)
    assert K.quad_error < 1e-8


def test_kernel_of_indicator_like_profile():
    # (2 pi)^{-1} int_{1/2}^{3/2} bump e^{irt} dt at r = 0 is the bump integral / 2 pi
    h = bump_profile(1.0, 0.5, resolution=RES)
    val = kernel_direct(h, 1.0, [0.0])[0]
    from scipy.integrate import quad

    ref = quad(lambda t: bump((t - 1.0) / 0.5), 0.5, 1.5)[0] / (2 * np.pi)
    assert abs(val - ref) < 1e-12


def test_mu_masses_are_exact():
    r = np.array([-2.0, 0.0, 3.0])
    m = mu_masses(r, 1.0, 2)
    # mu_2([a, b]) = int (1 + |r|) dr
    assert np.allclose(m, [3.0, 1.25, 4.0])


def test_mu_lorentz_equals_weighted_lp_when_p_equals_q():
    r = (np.arange(4096) - 2048) * 0.05
    vals = np.exp(-np.abs(r) / 3.0)
    K = Kernel1D(r, vals.astype(complex), 2)
    u = 1.5
    g = (1 + np.abs(r)) ** (-0.5) * vals
    direct = np.sum(g**u * mu_masses(r, 0.05, 2)) ** (1 / u)
    assert abs(mu_lorentz_norm(K, u, u) - direct) < 1e-12 * direct


def test_lambda_jb_of_explicit_component():
    h = profile_from_function(lambda r: np.exp(-np.asarray(r) ** 2), (0.0, 1.0), RES, half_extent=8.0)
    # int_0^inf e^{-2 r^2} r dr = 1/4
    assert abs(lambda_jb(h, 2.0) - 0.5) < 1e-6


def test_profile_csv_round_trip():
    h = bump_profile(1.0, 0.4, resolution=64)
    g = from_csv(to_csv(h))
    assert np.array_equal(g.samples, h.samples)
    assert g.support == h.support
    assert zeta0(0.0) == 1.0
