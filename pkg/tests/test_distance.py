import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from qrlab.distance import DistanceError, builtin_distance, compute_c0, sphere_quadrature

RHOS = [
    ("euclidean", {}),
    ("scaled_euclidean", {"c": 1.7}),
    ("lp_smooth", {"m": 2.0}),
    ("ellipse", {"a": [1.0, 0.5]}),
]


@settings(max_examples=40, deadline=None)
@given(
    st.sampled_from(RHOS),
    st.floats(0.5, 3.0),
    st.floats(0.05, 20.0),
    st.tuples(st.floats(-5, 5), st.floats(-5, 5)).filter(lambda v: np.hypot(*v) > 1e-3),
)
def test_homogeneity(kind_params, beta, t, xi):
    kind, params = kind_params
    rho = builtin_distance(kind, {**params, "beta": beta})
    xi = np.array(xi)
    assert np.isclose(rho(t ** (1 / beta) * xi), t * rho(xi), rtol=1e-12)


@pytest.mark.parametrize("kind,params", RHOS)
def test_gradient_matches_finite_differences(kind, params):
    rho = builtin_distance(kind, params)
    rng = np.random.default_rng(0)
    pts = rng.normal(size=(20, 2))
    g = rho.grad(pts)
    eps = 1e-6
    for ax in range(2):
        e = np.zeros(2)
        e[ax] = eps
        fd = (rho(pts + e) - rho(pts - e)) / (2 * eps)
        assert np.allclose(g[:, ax], fd, rtol=1e-6, atol=1e-8)


def test_unknown_kind_and_bad_params():
    with pytest.raises(DistanceError):
        builtin_distance("taxicab")
    with pytest.raises(DistanceError):
        builtin_distance("euclidean", {"c": 2.0})
    with pytest.raises(DistanceError):
        builtin_distance("ellipse", {"a": [1.0, -1.0]})


def test_c0_of_euclidean_is_the_floor_value():
    # |grad rho| = 1 everywhere, so the smallest admissible c0 is 2
    assert compute_c0(builtin_distance("euclidean")) == 2


def test_c0_grows_with_anisotropy():
    mild = compute_c0(builtin_distance("ellipse", {"a": [1.0, 0.5]}))
    strong = compute_c0(builtin_distance("ellipse", {"a": [1.0, 0.05]}))
    assert strong > mild >= 2


def test_c0_bound_holds_on_samples():
    rho = builtin_distance("ellipse", {"a": [1.0, 0.3]})
    c0 = compute_c0(rho)
    rng = np.random.default_rng(1)
    pts = rng.uniform(-30, 30, (20000, 2))
    r = rho(pts)
    g = np.linalg.norm(rho.grad(pts[(r >= 0.125) & (r <= 8)]), axis=-1)
    assert g.min() >= 2.0 ** (2 - c0)
    assert g.max() <= 2.0 ** (c0 - 2)


def test_circle_length():
    q = sphere_quadrature(builtin_distance("euclidean"), 64)
    assert abs(q.total - 2 * np.pi) < 1e-12


def test_ellipse_perimeter_matches_elliptic_integral():
    from scipy.special import ellipe

    a, b = 2.0, 1.0
    q = sphere_quadrature(builtin_distance("ellipse", {"a": [a, b]}), 256)
    exact = 4 * a * ellipe(1 - (b / a) ** 2)
    assert abs(q.total - exact) < 1e-10 * exact


def test_nodes_lie_on_level_set():
    rho = builtin_distance("lp_smooth", {"m": 3.0})
    q = sphere_quadrature(rho, 128)
    assert np.max(np.abs(rho(q.nodes) - 1.0)) < 1e-12


def test_sphere_area_in_three_dimensions():
    q = sphere_quadrature(builtin_distance("euclidean"), 512, dim=3)
    assert abs(q.total - 4 * np.pi) < 1e-10
