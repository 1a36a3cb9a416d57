"""Homogeneous distance functions, the gradient constant c0 and quadrature on {rho = 1}."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

KINDS = ("euclidean", "scaled_euclidean", "lp_smooth", "ellipse")
MAX_NODES_3D = 1 << 16


class DistanceError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DistanceFunction:
    """rho with rho(t^{1/beta} xi) = t rho(xi); arrays carry coordinates on the last axis."""

    beta: float
    evaluator: Callable[[np.ndarray], np.ndarray]
    gradient: Callable[[np.ndarray], np.ndarray]
    label: str
    dim: int | None = None
    params: tuple = ()

    def __call__(self, xi) -> np.ndarray:
        return self.evaluator(np.asarray(xi, dtype=float))

    def grad(self, xi) -> np.ndarray:
        return self.gradient(np.asarray(xi, dtype=float))


def _euclidean(beta: float, c: float = 1.0):
    def ev(x):
        return (c * np.sqrt(np.sum(x * x, axis=-1))) ** beta

    def gr(x):
        r = np.sqrt(np.sum(x * x, axis=-1))
        return (beta * c**beta * r ** (beta - 2.0))[..., None] * x

    return ev, gr


def _lp(beta: float, m: float):
    def ev(x):
        return np.sum(np.abs(x) ** (2 * m), axis=-1) ** (beta / (2 * m))

    def gr(x):
        s = np.sum(np.abs(x) ** (2 * m), axis=-1)
        return (beta * s ** (beta / (2 * m) - 1.0))[..., None] * np.abs(x) ** (2 * m - 2) * x

    return ev, gr


def _ellipse(beta: float, a: np.ndarray):
    a2 = a * a

    def ev(x):
        return np.sum(x * x / a2, axis=-1) ** (beta / 2)

    def gr(x):
        q = np.sum(x * x / a2, axis=-1)
        return (beta * q ** (beta / 2 - 1.0))[..., None] * x / a2

    return ev, gr


def builtin_distance(kind: str, params: dict | None = None) -> DistanceFunction:
    """Build one of ``euclidean``, ``scaled_euclidean`` (c), ``lp_smooth`` (m), ``ellipse`` (a)."""
    params = dict(params or {})
    beta = float(params.pop("beta", 1.0))
    if not beta > 0:
        raise DistanceError("beta must be positive")
    dim = None
    if kind == "euclidean":
        ev, gr = _euclidean(beta)
    elif kind == "scaled_euclidean":
        c = float(params.pop("c", 1.0))
        if not c > 0:
            raise DistanceError("scaled_euclidean needs c > 0")
        ev, gr = _euclidean(beta, c)
    elif kind == "lp_smooth":
        m = float(params.pop("m", 2.0))
        if m < 1:
            raise DistanceError("lp_smooth needs m >= 1")
        ev, gr = _lp(beta, m)
    elif kind == "ellipse":
        a = np.asarray(params.pop("a", None), dtype=float)
        if a.ndim != 1 or a.size < 1 or np.any(a <= 0):
            raise DistanceError("ellipse needs positive semi-axes a")
        dim = a.size
        ev, gr = _ellipse(beta, a)
    else:
        raise DistanceError(f"unknown distance kind {kind!r}")
    if params:
        raise DistanceError(f"unexpected parameters {sorted(params)} for {kind}")
    return DistanceFunction(beta, ev, gr, kind, dim)


def compute_c0(rho: DistanceFunction, dim: int = 2, points_per_axis: int = 64, margin: float = 0.1) -> int:
    """Smallest c0 >= 2 with 2^{2-c0} <= |grad rho| <= 2^{c0-2} on 1/8 <= rho <= 8.

    |grad rho| is sampled on a Cartesian grid covering the shell. The sampled
    range [g_lo, g_hi] is widened by ``margin`` times its spread on each side
    before the bound is imposed.
    """
    if abs(rho.beta - 1.0) > 1e-14:
        raise DistanceError("compute_c0 expects a degree-one distance function")
    dim = rho.dim or dim
    dirs = _directions(dim, 721)
    extent = 8.0 / float(np.min(rho(dirs)))
    axis = -extent + (np.arange(points_per_axis) + 0.5) * (2 * extent / points_per_axis)
    pts = np.stack(np.meshgrid(*([axis] * dim), indexing="ij"), axis=-1).reshape(-1, dim)
    r = rho(pts)
    pts = pts[(r >= 0.125) & (r <= 8.0)]
    if len(pts) == 0:
        raise DistanceError("no sample points in the shell")
    g = np.linalg.norm(rho.grad(pts), axis=-1)
    lo, hi = float(g.min()), float(g.max())
    if not lo > 1e-12:
        raise DistanceError("gradient vanishes on the shell")
    spread = hi - lo
    lo_eff = lo - margin * spread
    hi_eff = hi + margin * spread
    if lo_eff <= 0:
        lo_eff = lo / 2.0
    tol = 1e-12
    need = max(np.log2(hi_eff) - tol, -np.log2(lo_eff) - tol, 0.0)
    return int(max(2, 2 + int(np.ceil(need))))


def _directions(dim: int, n: int) -> np.ndarray:
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        th = 2 * np.pi * np.arange(n) / n
        return np.stack([np.cos(th), np.sin(th)], axis=-1)
    u = np.linspace(-1, 1, n)
    ph = 2 * np.pi * np.arange(2 * n) / (2 * n)
    U, P = np.meshgrid(u, ph, indexing="ij")
    s = np.sqrt(1 - U * U)
    return np.stack([s * np.cos(P), s * np.sin(P), U], axis=-1).reshape(-1, 3)


@dataclass(frozen=True, eq=False)
class SphereQuadrature:
    nodes: np.ndarray
    weights: np.ndarray
    grad_norm: np.ndarray

    @property
    def total(self) -> float:
        return float(np.sum(self.weights))


def ray_roots(rho: DistanceFunction, dirs: np.ndarray, secant_steps: int = 4) -> np.ndarray:
    """Radii r with rho(r * omega) = 1, by bisection on [1/8, 8] then secant refinement."""
    lo = np.full(len(dirs), 0.125)
    hi = np.full(len(dirs), 8.0)
    flo = rho(lo[:, None] * dirs) - 1.0
    fhi = rho(hi[:, None] * dirs) - 1.0
    if np.any(flo > 0) or np.any(fhi < 0):
        raise DistanceError("unit sphere not bracketed in [1/8, 8] along some ray")
    for _ in range(48):
        mid = 0.5 * (lo + hi)
        fm = rho(mid[:, None] * dirs) - 1.0
        below = fm < 0
        lo = np.where(below, mid, lo)
        hi = np.where(below, hi, mid)
    a, b = lo, hi
    fa = rho(a[:, None] * dirs) - 1.0
    fb = rho(b[:, None] * dirs) - 1.0
    for _ in range(secant_steps):
        denom = fb - fa
        safe = np.abs(denom) > 0
        c = np.where(safe, b - fb * (b - a) / np.where(safe, denom, 1.0), b)
        a, fa = b, fb
        b, fb = c, rho(c[:, None] * dirs) - 1.0
    if np.max(np.abs(fb)) > 1e-12:
        raise DistanceError("ray root-finding did not converge")
    return b


def sphere_quadrature(rho: DistanceFunction, n_nodes: int, dim: int = 2) -> SphereQuadrature:
    """Nodes and surface weights on {rho = 1}.

    Along a ray xi = r omega the surface element is
    ``dsigma = r^d |grad rho(xi)| / beta domega``. In d=2 the angle uses the
    periodic trapezoid rule; in d=3 Gauss-Legendre in cos(theta) times a
    uniform rule in phi.
    """
    dim = rho.dim or dim
    if abs(rho.beta - 1.0) > 1e-14:
        raise DistanceError("sphere_quadrature expects a degree-one distance function")
    if dim == 2:
        th = 2 * np.pi * np.arange(n_nodes) / n_nodes
        dirs = np.stack([np.cos(th), np.sin(th)], axis=-1)
        dw = np.full(n_nodes, 2 * np.pi / n_nodes)
    elif dim == 3:
        if n_nodes > MAX_NODES_3D:
            raise DistanceError(f"d=3 quadrature limited to {MAX_NODES_3D} nodes")
        nt = max(2, int(np.sqrt(n_nodes / 2)))
        u, wu = np.polynomial.legendre.leggauss(nt)
        nphi = 2 * nt
        ph = 2 * np.pi * np.arange(nphi) / nphi
        U, P = np.meshgrid(u, ph, indexing="ij")
        s = np.sqrt(1 - U * U)
        dirs = np.stack([s * np.cos(P), s * np.sin(P), U], axis=-1).reshape(-1, 3)
        dw = np.repeat(wu, nphi) * (2 * np.pi / nphi)
    else:
        raise DistanceError("sphere quadrature needs d in {2, 3}")
    r = ray_roots(rho, dirs)
    nodes = r[:, None] * dirs
    g = np.linalg.norm(rho.grad(nodes), axis=-1)
    w = r**dim * g / rho.beta * dw
    for a in (nodes, w, g):
        a.setflags(write=False)
    return SphereQuadrature(nodes, w, g)
