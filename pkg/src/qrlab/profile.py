"""One-dimensional multiplier profiles, dyadic blocks, Besov norms and 1D kernels.

A profile is sampled on the symmetric grid ``r_k = -S + k/res`` (``k < 2*S*res``)
so that periodic 1D transforms see its blocks on both sides of the support.
The 1D Fourier variable is angular: ``h^(w) = int h(r) e^{-i w r} dr`` and the
dyadic cutoffs ``zeta_j`` act on ``w``.
"""

from __future__ import annotations

import io
import json
import warnings
from dataclasses import dataclass, field
from functools import cached_property
from typing import Callable

import numpy as np
import scipy.fft as sfft
from scipy.integrate import quad
from scipy.interpolate import CubicSpline

from .grid import GuardError
from .spaces import rearrangement_norm

DEFAULT_RESOLUTION = 1 << 16
DEFAULT_EXTENT = 4.0


class ProfileError(ValueError):
    pass


# ---------------------------------------------------------------- smooth building blocks


def _psi(u):
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    pos = u > 0
    out[pos] = np.exp(-1.0 / u[pos])
    return out


def smooth_step(u):
    """C-infinity step: 0 for u <= 0, 1 for u >= 1."""
    a = _psi(u)
    b = _psi(1.0 - np.asarray(u, dtype=float))
    return a / (a + b)


def bump(u):
    """exp(1 - 1/(1-u^2)) on |u| < 1, zero elsewhere; equals 1 at u = 0."""
    u = np.asarray(u, dtype=float)
    out = np.zeros_like(u)
    inside = np.abs(u) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - u[inside] ** 2))
    return out


def zeta0(w):
    """Even cutoff, 1 on [-1/2, 1/2], supported in (-1, 1)."""
    return smooth_step((1.0 - np.abs(w)) / 0.5)


def zeta(j: int, w):
    """Dyadic block cutoff; for j >= 1 supported in 2^{j-2} <= |w| <= 2^j."""
    if j == 0:
        return zeta0(w)
    return zeta0(np.asarray(w) / 2.0**j) - zeta0(np.asarray(w) / 2.0 ** (j - 1))


def chi_cutoff(r):
    """Cutoff supported in (0.55, 1.9) and equal to 1 on [0.75, 1.4]."""
    r = np.asarray(r, dtype=float)
    return smooth_step((r - 0.55) / 0.2) * smooth_step((1.9 - r) / 0.5)


def eta_plateau(s):
    """Cutoff equal to 1 on [1/4, 4] and supported in (1/8, 8)."""
    s = np.asarray(s, dtype=float)
    return smooth_step((s - 0.125) / 0.125) * smooth_step((8.0 - s) / 4.0)


def riesz_function(lam: float, gam: float, cutoff: bool = False) -> Callable:
    def h(r):
        r = np.asarray(r, dtype=float)
        out = np.zeros_like(r)
        m = (r >= 0) & (r < 1)
        one_minus = 1.0 - r[m]
        out[m] = one_minus**lam / (1.0 - np.log(one_minus)) ** gam
        if cutoff:
            out = out * chi_cutoff(r)
        return out

    return h


# ---------------------------------------------------------------- profile type


@dataclass(frozen=True, eq=False)
class Profile1D:
    samples: np.ndarray
    support: tuple | None
    resolution: int
    half_extent: float = DEFAULT_EXTENT
    params: dict = field(default_factory=dict)
    evaluator: Callable | None = None

    def __post_init__(self):
        v = np.array(self.samples, dtype=np.complex128)
        if v.size != self.size:
            raise ProfileError("sample count does not match 2*S*resolution")
        v.setflags(write=False)
        object.__setattr__(self, "samples", v)

    @property
    def size(self) -> int:
        return int(round(2 * self.half_extent * self.resolution))

    @property
    def dr(self) -> float:
        return 1.0 / self.resolution

    @cached_property
    def r(self) -> np.ndarray:
        x = -self.half_extent + np.arange(self.size) * self.dr
        x.setflags(write=False)
        return x

    @property
    def nyquist(self) -> float:
        return np.pi * self.resolution

    @cached_property
    def spectrum(self) -> np.ndarray:
        F = sfft.fft(self.samples)
        F.setflags(write=False)
        return F

    @cached_property
    def frequencies(self) -> np.ndarray:
        w = 2 * np.pi * np.fft.fftfreq(self.size, self.dr)
        w.setflags(write=False)
        return w

    @cached_property
    def _spline(self):
        return CubicSpline(self.r, self.samples, extrapolate=False)

    def evaluate(self, x) -> np.ndarray:
        """h at arbitrary points: exact formula when known, cubic spline otherwise."""
        x = np.asarray(x, dtype=float)
        if self.evaluator is not None:
            return np.asarray(self.evaluator(x), dtype=complex)
        out = self._spline(x)
        return np.nan_to_num(out, nan=0.0)

    @property
    def sup(self) -> float:
        return float(np.max(np.abs(self.samples)))

    def l2_norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.samples) ** 2) * self.dr))

    def scaled(self, c: complex) -> "Profile1D":
        ev = None if self.evaluator is None else (lambda x, f=self.evaluator: c * f(x))
        return Profile1D(c * self.samples, self.support, self.resolution, self.half_extent, dict(self.params), ev)

    def plus(self, other: "Profile1D") -> "Profile1D":
        if other.size != self.size or other.resolution != self.resolution:
            raise ProfileError("profiles live on different grids")
        ev = None
        if self.evaluator is not None and other.evaluator is not None:
            ev = lambda x, f=self.evaluator, g=other.evaluator: f(x) + g(x)  # noqa: E731
        sup = None
        if self.support is not None and other.support is not None:
            sup = (min(self.support[0], other.support[0]), max(self.support[1], other.support[1]))
        return Profile1D(self.samples + other.samples, sup, self.resolution, self.half_extent, {}, ev)


def _extent_for(b: float) -> float:
    s = DEFAULT_EXTENT
    while s < 2 * b:
        s *= 2
    return s


def profile_from_function(
    func: Callable, support: tuple, resolution: int = DEFAULT_RESOLUTION, params: dict | None = None, half_extent: float | None = None
) -> Profile1D:
    """Sample an exactly known profile; the formula is kept for exact evaluation."""
    a, b = support
    if not 0 <= a < b:
        raise ProfileError(f"bad support {support}")
    S = _extent_for(b) if half_extent is None else float(half_extent)
    n = int(round(2 * S * resolution))
    r = -S + np.arange(n) / resolution
    return Profile1D(func(r), (float(a), float(b)), int(resolution), S, dict(params or {}), func)


def riesz_profile(lam: float, gam: float, resolution: int = DEFAULT_RESOLUTION, cutoff: bool = False) -> Profile1D:
    """h(r) = (1-r)_+^lam / (1 + log(1/(1-r)))^gam on [0, 1], zero elsewhere.

    With ``cutoff=True`` the profile is multiplied by :func:`chi_cutoff`.
    """
    if lam <= -0.5:
        raise ProfileError("lambda must exceed -1/2")
    if gam < 0:
        raise ProfileError("gamma must be nonnegative")
    support = (0.55, 1.0) if cutoff else (0.0, 1.0)
    return profile_from_function(
        riesz_function(lam, gam, cutoff), support, resolution, {"kind": "riesz", "lam": lam, "gam": gam, "cutoff": cutoff}
    )


def bump_profile(center: float, width: float, resolution: int = DEFAULT_RESOLUTION) -> Profile1D:
    if width <= 0 or center - width <= 0:
        raise ProfileError("bump support must lie in (0, inf)")
    func = lambda r: bump((np.asarray(r, dtype=float) - center) / width)  # noqa: E731
    return profile_from_function(func, (center - width, center + width), resolution, {"kind": "bump", "center": center, "width": width})


SEQ_BUMP_CENTER = 0.375
SEQ_BUMP_WIDTH = 0.125


def sequence_profile(coeffs, lam: float, resolution: int = DEFAULT_RESOLUTION) -> Profile1D:
    """h(tau) = sum_{j>=2} a_j 2^{-j lam} eta(2^j (1 - tau)), ``coeffs[i]`` being a_{i+2}.

    eta is one bump supported in (1/4, 1/2), so term j lives on 1 - 2^{-j}(1/4, 1/2).
    """
    if lam <= -0.5:
        raise ProfileError("lambda must exceed -1/2")
    a = np.asarray(coeffs, dtype=float)

    def func(tau):
        tau = np.asarray(tau, dtype=float)
        out = np.zeros_like(tau)
        for i, aj in enumerate(a):
            if aj == 0:
                continue
            j = i + 2
            out += aj * 2.0 ** (-j * lam) * bump((2.0**j * (1.0 - tau) - SEQ_BUMP_CENTER) / SEQ_BUMP_WIDTH)
        return out

    last = len(a) + 1
    support = (1.0 - 2.0**-2 / 2, 1.0 - 2.0**-last / 4)
    return profile_from_function(func, support, resolution, {"kind": "sequence", "coeffs": a.tolist(), "lam": lam})


def rescale_homogeneity(h: Profile1D, beta: float) -> Profile1D:
    """h_beta(s) = h(s^beta), resampled finely enough to resolve the compression."""
    if beta <= 0:
        raise ProfileError("beta must be positive")
    if h.support is None or h.support[0] <= 0:
        raise ProfileError("support must stay away from 0")
    if beta == 1:
        return h
    a, b = h.support
    na, nb = a ** (1 / beta), b ** (1 / beta)
    factor = max(beta * na ** (beta - 1), beta * nb ** (beta - 1), 1.0)
    res = int(h.resolution * 2 ** int(np.ceil(np.log2(factor))))

    def func(s, base=h):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape, dtype=complex)
        pos = s > 0
        out[pos] = base.evaluate(s[pos] ** beta)
        return out

    params = {"kind": "rescaled", "beta": beta, "base": dict(h.params)}
    return profile_from_function(func, (na, nb), res, params)


# ---------------------------------------------------------------- dyadic blocks


def _j_cap(h: Profile1D) -> int:
    return int(np.ceil(np.log2(h.nyquist))) + 1


def block_l2_norms(h: Profile1D, j_max: int | None = None) -> np.ndarray:
    """||Delta_j h||_2 for j = 0..j_max, computed on the frequency side."""
    cap = _j_cap(h)
    j_max = cap if j_max is None else int(j_max)
    if 2.0 ** (j_max - 2) > h.nyquist:
        raise GuardError(f"block j={j_max} lies beyond the profile Nyquist frequency {h.nyquist:.4g}")
    F2 = np.abs(h.spectrum) ** 2
    w = h.frequencies
    scale = h.dr / h.size
    return np.array([np.sqrt(np.sum(zeta(j, w) ** 2 * F2) * scale) for j in range(j_max + 1)])


def _lq(terms: np.ndarray, s: float) -> float:
    if np.isinf(s):
        return float(np.max(terms)) if terms.size else 0.0
    return float(np.sum(terms**s) ** (1.0 / s))


def besov_norm(h: Profile1D, alpha: float, s: float, j_max: int | None = None) -> float:
    """(sum_j [2^{j alpha} ||Delta_j h||_2]^s)^{1/s}, sup for s = inf."""
    if alpha < 0:
        raise ProfileError("alpha must be nonnegative")
    if not s >= 1:
        raise ProfileError("s must be >= 1")
    b = block_l2_norms(h, j_max)
    return _lq(2.0 ** (alpha * np.arange(b.size)) * b, s)


@dataclass(frozen=True, eq=False)
class VjDecomposition:
    parent: Profile1D
    j_max: int
    components: tuple
    tail: np.ndarray
    tail_l2: float

    def reconstruction(self) -> np.ndarray:
        return np.sum([c.samples for c in self.components], axis=0)


def vj_decompose(h: Profile1D, j_max: int) -> VjDecomposition:
    """V_j h = inverse transform of zeta_j * h^, j = 0..j_max; the rest is returned as the tail."""
    if 2.0**j_max > h.nyquist:
        raise GuardError(f"2^{j_max} exceeds the profile Nyquist frequency {h.nyquist:.4g}")
    w = h.frequencies
    F = h.spectrum
    comps = []
    for j in range(j_max + 1):
        v = sfft.ifft(zeta(j, w) * F)
        comps.append(Profile1D(v, None, h.resolution, h.half_extent, {"kind": "vj", "j": j}))
    tail = sfft.ifft((1.0 - zeta0(w / 2.0**j_max)) * F)
    tail.setflags(write=False)
    tail_l2 = float(np.sqrt(np.sum(np.abs(tail) ** 2) * h.dr))
    return VjDecomposition(h, int(j_max), tuple(comps), tail, tail_l2)


def spectral_leakage(component: Profile1D, j: int) -> float:
    """Relative spectral mass of a block outside I_j (outside (-1, 1) for j = 0)."""
    F2 = np.abs(component.spectrum) ** 2
    w = np.abs(component.frequencies)
    inside = w < 1.0 if j == 0 else (w >= 2.0 ** (j - 2)) & (w <= 2.0**j)
    total = F2.sum()
    return float(F2[~inside].sum() / total) if total > 0 else 0.0


def lambda_jb(component: Profile1D, b: float) -> float:
    """(int_0^inf |V_j h(r)|^2 r^{b-1} dr)^{1/2} by the rectangle rule on r > 0."""
    if not b > 0:
        raise ProfileError("b must be positive")
    r = component.r
    pos = r > 0
    return float(np.sqrt(np.sum(np.abs(component.samples[pos]) ** 2 * r[pos] ** (b - 1)) * component.dr))


# ---------------------------------------------------------------- 1D kernels


@dataclass(frozen=True, eq=False)
class Kernel1D:
    r_grid: np.ndarray
    values: np.ndarray
    weight_dim: int
    quad_error: float = float("nan")

    @property
    def dr(self) -> float:
        return float(self.r_grid[1] - self.r_grid[0])


def kernel_direct(h: Profile1D, beta: float, r) -> np.ndarray:
    """(2 pi)^{-1} int h(t^beta) e^{i r t} dt by adaptive oscillatory quadrature."""
    if h.support is None:
        raise ProfileError("direct quadrature needs a declared support")
    a, b = h.support[0] ** (1 / beta), h.support[1] ** (1 / beta)

    def part(t, f):
        return f(h.evaluate(np.array([t**beta]))[0])

    out = []
    for rv in np.atleast_1d(r):
        vals = []
        for f in (np.real, np.imag):
            if rv == 0:
                c = quad(lambda t: part(t, f), a, b, limit=400)[0]
                s = 0.0
            else:
                c = quad(lambda t: part(t, f), a, b, weight="cos", wvar=rv, limit=400)[0]
                s = quad(lambda t: part(t, f), a, b, weight="sin", wvar=rv, limit=400)[0]
            vals.append(c + 1j * s)
        out.append((vals[0] + 1j * vals[1]) / (2 * np.pi))
    return np.array(out)


def kernel_1d(h: Profile1D, beta: float = 1.0, R: float = 256.0, n_r: int = 1 << 14, d: int = 2, check_points: int = 16, seed: int = 0) -> Kernel1D:
    """K(r) = (2 pi)^{-1} int h(t^beta) e^{i r t} dt on r_k = k (2R/n_r), -n_r/2 <= k < n_r/2.

    The t-integral is a Riemann sum with step pi/R over one period of length
    n_r pi / R, evaluated by one FFT. ``check_points`` random r are compared
    against :func:`kernel_direct`; the largest deviation relative to max |K|
    is stored in ``quad_error``.
    """
    if h.support is None:
        raise ProfileError("kernel_1d needs a declared support")
    if h.support[0] < 0:
        raise ProfileError("support must lie in [0, inf)")
    dt = np.pi / R
    end = h.support[1] ** (1 / beta)
    if n_r * dt <= end:
        raise GuardError(f"aliasing guard: period {n_r * dt:.4g} does not exceed support end {end:.4g}")
    t = np.arange(n_r) * dt
    ht = np.zeros(n_r, dtype=complex)
    inside = t <= end + dt
    ht[inside] = h.evaluate(t[inside] ** beta)
    K = sfft.fftshift(sfft.ifft(ht)) * (n_r * dt / (2 * np.pi))
    r = (np.arange(n_r) - n_r // 2) * (2 * R / n_r)
    r.setflags(write=False)
    K.setflags(write=False)
    err = float("nan")
    if check_points:
        rng = np.random.default_rng(seed)
        idx = rng.integers(0, n_r, check_points)
        ref = kernel_direct(h, beta, r[idx])
        err = float(np.max(np.abs(ref - K[idx])) / np.max(np.abs(K)))
    return Kernel1D(r, K, int(d), err)


def kappa_lg(lam: float, gam: float, R: float = float(1 << 18), n_r: int = 1 << 20, resolution: int = 1 << 12, check_points: int = 0) -> Kernel1D:
    """1D kernel of chi * h_{lam,gam}."""
    h = riesz_profile(lam, gam, resolution=resolution, cutoff=True)
    return kernel_1d(h, 1.0, R, n_r, check_points=check_points)


def mu_masses(r: np.ndarray, dr: float, d: int) -> np.ndarray:
    """Exact mu_d masses of the cells [r - dr/2, r + dr/2], dmu_d = (1+|r|)^{d-1} dr."""

    def F(x):
        return np.sign(x) * ((1.0 + np.abs(x)) ** d - 1.0) / d

    return F(r + dr / 2) - F(r - dr / 2)


def mu_lorentz_norm(K: Kernel1D, u: float, s: float) -> float:
    """L^{u,s}(mu_d) norm of (1+|r|)^{-(d-1)/2} |K(r)| from its rearrangement."""
    if K.values.size == 0:
        raise ProfileError("empty kernel")
    if not u > 1:
        raise ProfileError("u must exceed 1")
    if not u < 2:
        warnings.warn("u outside (1, 2)", stacklevel=2)
    d = K.weight_dim
    g = (1.0 + np.abs(K.r_grid)) ** (-(d - 1) / 2) * np.abs(K.values)
    return rearrangement_norm(g, mu_masses(K.r_grid, K.dr, d), u, s)


# ---------------------------------------------------------------- serialization


def to_csv(h: Profile1D) -> str:
    header = {"support": list(h.support) if h.support else None, "params": h.params, "resolution": h.resolution, "half_extent": h.half_extent}
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    buf.write("r,re,im\n")
    for x, z in zip(h.r, h.samples):
        buf.write(f"{x:.17g},{z.real:.17g},{z.imag:.17g}\n")
    return buf.getvalue()


def from_csv(text: str) -> Profile1D:
    first, rest = text.split("\n", 1)
    hdr = json.loads(first[2:])
    data = np.loadtxt(io.StringIO(rest), delimiter=",", skiprows=1, ndmin=2)
    sup = tuple(hdr["support"]) if hdr["support"] else None
    return Profile1D(data[:, 1] + 1j * data[:, 2], sup, int(hdr["resolution"]), float(hdr["half_extent"]), hdr["params"])
