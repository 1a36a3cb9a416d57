import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrlab.grid import GridFunction, GuardError, annuli, make_bank, make_grid, radius
from qrlab.spaces import (
    NormError,
    NormSpec,
    annulus_masses,
    check_embedding,
    herz_norm,
    lorentz_norm,
    rearrangement_norm,
    uncovered_fraction,
    weak_type,
    weighted_l2_norm,
)


def gaussian(spec, s):
    return GridFunction(spec, np.exp(-radius(spec) ** 2 / (2 * s * s)))


def exact_gaussian_herz(s, gamma, q, l_max):
    # int_{A_l} e^{-|x|^2/s^2} dx = pi s^2 (e^{-4^l/s^2} - e^{-4^{l+1}/s^2})
    ls = np.arange(-80, l_max + 1)
    A = np.pi * s * s * (np.exp(-(4.0**ls) / s**2) - np.exp(-(4.0 ** (ls + 1)) / s**2))
    t = 2.0 ** (ls * gamma) * np.sqrt(A)
    return t.max() if np.isinf(q) else np.sum(t**q) ** (1 / q)


@pytest.mark.parametrize("q", [1.0, 2.0, np.inf])
@pytest.mark.parametrize("s", [2.0, 4.0, 8.0])
def test_herz_norm_of_gaussian(s, q):
    spec = make_grid(2, 512, 128.0)
    dec = annuli(spec)
    got = herz_norm(gaussian(spec, s), -0.75, q, dec)
    assert abs(got / exact_gaussian_herz(s, -0.75, q, dec.l_max) - 1) < 0.01


def test_herz_single_annulus_closed_form():
    spec = make_grid(2, 256, 16.0)
    dec = annuli(spec, 0, 2)
    # indicator of 2 <= |x| < 4 has L2 mass^2 = 12 pi, weight 2^{l gamma} = 1 at gamma = 0
    f = GridFunction(spec, ((radius(spec) >= 2) & (radius(spec) < 4)).astype(float))
    A = annulus_masses(f, dec)
    assert abs(np.sqrt(A[1]) / np.sqrt(12 * np.pi) - 1) < 0.02


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.0, 4.0), st.floats(1.0, 8.0))
def test_lorentz_p_equals_q_is_lp(seed, p, scale):
    rng = np.random.default_rng(seed)
    v = rng.normal(size=500) * scale
    m = rng.uniform(0.1, 2.0, size=500)
    lp = np.sum(np.abs(v) ** p * m) ** (1 / p)
    assert abs(rearrangement_norm(v, m, p, p) - lp) < 1e-12 * lp


@pytest.mark.parametrize("p,q", [(2.0, 1.0), (1.5, 3.0), (3.0, 1.5)])
def test_lorentz_norm_of_indicator(p, q):
    # ||1_E||_{p,q} = (p/q)^{1/q} |E|^{1/p} without a factor q in the definition
    spec = make_grid(2, 64, 8.0)
    f = GridFunction(spec, (radius(spec) < 3).astype(float))
    mass = np.sum(f.values.real) * spec.cell_volume
    assert abs(lorentz_norm(f, p, q) / ((p / q) ** (1 / q) * mass ** (1 / p)) - 1) < 1e-12


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000), st.floats(1.1, 4.0), st.floats(1.0, 3.0))
def test_lorentz_norm_is_rearrangement_invariant(seed, p, q):
    rng = np.random.default_rng(seed)
    v = rng.exponential(size=256)
    perm = rng.permutation(256)
    assert np.isclose(rearrangement_norm(v, 0.5, p, q), rearrangement_norm(v[perm], 0.5, p, q), rtol=1e-13)


def test_lorentz_ignores_phase():
    v = np.array([1.0, -2.0, 3.0j])
    assert rearrangement_norm(v, 1.0, 2.0, 1.0) == rearrangement_norm(np.abs(v), 1.0, 2.0, 1.0)


def test_weak_type_is_the_q_infinity_norm():
    spec = make_grid(2, 32, 4.0)
    f = gaussian(spec, 1.0)
    assert np.isclose(weak_type(f, 2.0), lorentz_norm(f, 2.0, np.inf), rtol=1e-14)


@pytest.mark.parametrize("a", [-1.5, 1.5])
def test_weighted_l2_of_gaussian(a):
    from scipy.special import gamma

    spec = make_grid(2, 512, 16.0)
    f = gaussian(spec, 1.0)
    # int |x|^a e^{-|x|^2} = pi Gamma(1 + a/2)
    exact = np.sqrt(np.pi * gamma(1 + a / 2))
    assert abs(weighted_l2_norm(f, a) / exact - 1) < 5e-3


def test_weighted_l2_rejects_non_a2_weights():
    spec = make_grid(2, 32, 4.0)
    with pytest.raises(NormError):
        weighted_l2_norm(gaussian(spec, 1.0), 2.0)


def test_herz_guard_on_uncovered_mass():
    spec = make_grid(2, 128, 16.0)
    f = gaussian(spec, 4.0)
    with pytest.raises(GuardError):
        herz_norm(f, 0.0, 2.0, annuli(spec, 0, 1))
    assert uncovered_fraction(f, annuli(spec)) < 1e-6


@settings(max_examples=15, deadline=None)
@given(st.floats(-0.9, 0.9), st.sampled_from([1.0, 2.0, np.inf]), st.floats(0.1, 10.0))
def test_herz_norm_is_homogeneous(gamma, q, c):
    spec = make_grid(2, 128, 32.0)
    f = gaussian(spec, 2.0)
    dec = annuli(spec)
    assert np.isclose(herz_norm(f.scaled(c), gamma, q, dec), c * herz_norm(f, gamma, q, dec), rtol=1e-12)


def test_herz_with_gamma_zero_and_q_two_is_l2():
    spec = make_grid(2, 256, 64.0)
    f = gaussian(spec, 3.0)
    assert abs(herz_norm(f, 0.0, 2.0) / f.l2_norm() - 1) < 1e-6


def test_norm_spec_dispatch_and_validation():
    spec = make_grid(2, 128, 32.0)
    f = gaussian(spec, 2.0)
    assert NormSpec("lorentz", {"p": 2.0, "q": 2.0}).evaluate(f) == pytest.approx(f.l2_norm(), rel=1e-12)
    assert NormSpec("weighted_l2", {"a": 0.0}).evaluate(f) == pytest.approx(f.l2_norm(), rel=1e-12)
    with pytest.raises(NormError):
        NormSpec("lorentz", {"p": 0.5, "q": 1.0}).evaluate(f)
    with pytest.raises(NormError):
        NormSpec("sobolev", {}).evaluate(f)


def test_embedding_ratio_is_dilation_invariant():
    spec = make_grid(2, 512, 128.0)
    fams = ("gaussian", "modulated_gaussian", "smoothed_annulus")
    bank = make_bank(spec, 2, 6, width=5.0, families=fams)
    dil = {m: make_bank(spec, 2, 6, width=5.0, dilation=2.0**m, families=fams) for m in (-1, 1)}
    rep = check_embedding(bank, 1.0, 2.0, dilated_banks=dil)
    assert np.isfinite(rep.max_ratio)
    assert rep.symmetry_drift < 0.05
