"""Quasiradial Fourier multipliers on grid functions and their maximal and square functions.

Every operator acts spectrally: ``T f = F^{-1}[m(rho(xi)) F f]`` with the
grid transforms of :mod:`qrlab.grid`. Distance functions are assumed to have
degree one (profiles for other degrees go through ``rescale_homogeneity``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from .distance import DistanceFunction
from .grid import (
    SPACE,
    AnnulusDecomposition,
    GridFunction,
    GridSpec,
    GuardError,
    forward_array,
    frequency_mesh,
    inverse_array,
    inverse_rows,
    space_mesh,
)
from .profile import Profile1D, VjDecomposition, chi_cutoff, eta_plateau, riesz_function, zeta0

# ---------------------------------------------------------------- symbols on the grid


@lru_cache(maxsize=32)
def rho_values(spec: GridSpec, rho: DistanceFunction) -> np.ndarray:
    v = rho(frequency_mesh(spec))
    v.setflags(write=False)
    return v


@lru_cache(maxsize=32)
def rho_nyquist(spec: GridSpec, rho: DistanceFunction) -> float:
    """Smallest rho on the outermost frequency ring; symbols must vanish beyond it."""
    m = np.abs(np.fft.fftfreq(spec.n, 1.0 / spec.n))
    edge = m >= spec.n // 2 - 1
    ring = np.zeros(spec.shape, dtype=bool)
    for ax in range(spec.dim):
        sh = [1] * spec.dim
        sh[ax] = spec.n
        ring |= edge.reshape(sh)
    return float(rho_values(spec, rho)[ring].min())


@lru_cache(maxsize=32)
def rho_min_positive(spec: GridSpec, rho: DistanceFunction) -> float:
    v = rho_values(spec, rho)
    return float(v[v > 0].min())


@dataclass(frozen=True)
class Symbol1D:
    """A profile given by a vectorized function and the closed interval outside which it vanishes."""

    func: Callable
    support: tuple

    def evaluate(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=complex)


def as_symbol(h) -> Symbol1D:
    if isinstance(h, Symbol1D):
        return h
    if isinstance(h, Profile1D):
        if h.support is not None:
            return Symbol1D(h.evaluate, tuple(h.support))
        return Symbol1D(h.evaluate, (-h.half_extent, h.half_extent))
    raise TypeError("expected a Profile1D or Symbol1D")


def check_nyquist(spec: GridSpec, rho: DistanceFunction, top: float, what: str = "symbol") -> None:
    ny = rho_nyquist(spec, rho)
    if top > ny * (1 + 1e-12):
        raise GuardError(f"{what} reaches rho = {top:.6g} beyond the grid Nyquist shell rho = {ny:.6g}")


def dilated_symbol(spec: GridSpec, rho: DistanceFunction, h, t: float, guard: bool = True) -> np.ndarray:
    """h(rho(xi)/t) on the frequency grid, exactly zero outside the support of h."""
    sym = as_symbol(h)
    a, b = sym.support
    if guard:
        check_nyquist(spec, rho, b * t)
    r = rho_values(spec, rho) / t
    out = np.zeros(spec.shape, dtype=complex)
    m = (r >= a) & (r <= b)
    out[m] = sym.evaluate(r[m])
    return out


def _spectrum(f: GridFunction) -> np.ndarray:
    if f.domain_tag != SPACE:
        raise GuardError("operators take space-domain input")
    return forward_array(f.spec, f.values)


def apply_multiplier(f: GridFunction, rho: DistanceFunction, h, t: float = 1.0) -> GridFunction:
    """F^{-1}[h(rho/t) F f]."""
    return GridFunction(f.spec, inverse_array(f.spec, dilated_symbol(f.spec, rho, h, t) * _spectrum(f)))


def apply_symbol(f: GridFunction, symbol: np.ndarray) -> GridFunction:
    return GridFunction(f.spec, inverse_array(f.spec, symbol * _spectrum(f)))


# ---------------------------------------------------------------- Riesz means


def riesz_symbol(lam: float, gam: float, part: str = "full") -> Symbol1D:
    """h_{lam,gam} on [0, 1]; ``part`` selects the full profile, chi*h or (1-chi)*h."""
    base = riesz_function(lam, gam)
    if part == "full":
        return Symbol1D(base, (0.0, 1.0))
    if part == "cutoff":
        return Symbol1D(lambda r: base(r) * chi_cutoff(r), (0.55, 1.0))
    if part == "remainder":
        return Symbol1D(lambda r: base(r) * (1.0 - chi_cutoff(r)), (0.0, 1.0))
    raise ValueError(f"unknown part {part!r}")


def riesz_mean(f: GridFunction, rho: DistanceFunction, lam: float, gam: float, t: float, part: str = "full") -> GridFunction:
    if lam <= -0.5:
        raise ValueError("lambda must exceed -1/2")
    return apply_multiplier(f, rho, riesz_symbol(lam, gam, part), t)


# ---------------------------------------------------------------- t grids and maximal functions


@dataclass(frozen=True)
class TGrid:
    """Geometric samples t = 2^{k + i/M} covering the octaves k_min..k_max, both ends included."""

    k_min: int
    k_max: int
    M: int = 16

    def __post_init__(self):
        if self.k_max < self.k_min or self.M < 1:
            raise ValueError("empty t grid")

    @property
    def values(self) -> np.ndarray:
        count = (self.k_max - self.k_min + 1) * self.M
        return 2.0 ** (self.k_min + np.arange(count + 1) / self.M)

    def refined(self) -> "TGrid":
        return TGrid(self.k_min, self.k_max, 2 * self.M)


def unit_tgrid(M: int = 16) -> TGrid:
    """Samples of [1, 2]."""
    return TGrid(0, 0, M)


def tgrid_for(spec: GridSpec, rho: DistanceFunction, support: tuple, M: int = 16) -> TGrid:
    """Octaves from the first t whose dilated support meets a nonzero frequency to the Nyquist limit."""
    a, b = support
    k_min = int(np.floor(np.log2(rho_min_positive(spec, rho) / b)))
    k_max = int(np.floor(np.log2(rho_nyquist(spec, rho) / b))) - 1
    if k_max < k_min:
        raise GuardError("grid too coarse for any dilation of this profile")
    return TGrid(k_min, k_max, M)


def _as_batch(f) -> tuple[GridSpec, np.ndarray, bool]:
    if isinstance(f, GridFunction):
        return f.spec, f.values[None], True
    fs = list(f.entries) if hasattr(f, "entries") else list(f)
    return fs[0].spec, np.stack([g.values for g in fs]), False


def maximal_array(spec: GridSpec, F: np.ndarray, rho: DistanceFunction, h, t_values, skip_tol: float | None = None) -> np.ndarray:
    """max over t of |F^{-1}[h(rho/t) F]| for a stack of spectra F.

    With ``skip_tol`` a t is skipped when ``sum |h(rho/t) F|`` is at most
    ``skip_tol * max|h| * sum |F|`` for every stacked spectrum; the skipped
    output is then pointwise below that fraction of the L1 bound on |f|.
    """
    t_values = np.asarray(t_values, dtype=float)
    if t_values.size == 0:
        raise GuardError("empty t grid")
    sym = as_symbol(h)
    check_nyquist(spec, rho, sym.support[1] * t_values.max())
    out = np.zeros(F.shape, dtype=float)
    rv = rho_values(spec, rho)
    a, b = sym.support
    if skip_tol is not None:
        absF = np.abs(F)
        total = absF.sum(axis=tuple(range(F.ndim - spec.dim, F.ndim)))
    other = tuple(range(1, spec.dim))
    for t in t_values:
        m = (rv >= a * t) & (rv <= b * t)
        rows = np.nonzero(m.any(axis=other))[0] if other else np.nonzero(m)[0]
        if rows.size == 0:
            continue
        mr = m[rows]
        s = np.zeros(mr.shape, dtype=complex)
        s[mr] = sym.evaluate(rv[rows][mr] / t)
        if skip_tol is not None:
            part = np.sum(absF[(Ellipsis, m)] * np.abs(s[mr]), axis=-1)
            if np.all(part <= skip_tol * np.abs(s[mr]).max() * total):
                continue
        sub = F[(Ellipsis, rows) + (slice(None),) * (spec.dim - 1)] * s
        np.maximum(out, np.abs(inverse_rows(spec, sub, rows)), out=out)
    return out


def maximal_function(f, rho: DistanceFunction, h, tgrid, skip_tol: float | None = None) -> GridFunction | list:
    """Pointwise max over the sampled t of |F^{-1}[h(rho/t) f^]|; accepts one function or a bank."""
    spec, V, single = _as_batch(f)
    tv = tgrid.values if isinstance(tgrid, TGrid) else np.asarray(tgrid, dtype=float)
    out = maximal_array(spec, forward_array(spec, V), rho, h, tv, skip_tol)
    res = [GridFunction(spec, o) for o in out]
    return res[0] if single else res


# ---------------------------------------------------------------- Stein square function


def stein_symbol(alpha: float) -> Callable:
    """(1-u)_+^{alpha-1} - (1-u)_+^alpha = u (1-u)^{alpha-1} on [0, 1)."""

    def m(u):
        u = np.asarray(u, dtype=float)
        out = np.zeros_like(u)
        k = (u >= 0) & (u < 1)
        out[k] = u[k] * (1.0 - u[k]) ** (alpha - 1.0)
        return out

    return m


def _tail_coefficients(alpha: float, K: int) -> np.ndarray:
    # u (1-u)^{alpha-1} = sum_k c_k u^{k+1}, c_k = (1-alpha)_k / k!
    c = np.empty(K)
    c[0] = 1.0
    for k in range(1, K):
        c[k] = c[k - 1] * (1.0 - alpha + k - 1) / k
    return c


def _stein_energy(alpha: float, s: np.ndarray) -> np.ndarray:
    """int_0^s m(e^{-v})^2 dv for the Stein symbol m, in closed form."""
    z = -np.expm1(-np.maximum(s, 0.0))
    e = z ** (2 * alpha - 1) / (2 * alpha - 1) - z ** (2 * alpha) / (2 * alpha)
    return np.where(s > 0, e, 0.0)


def stein_array(spec: GridSpec, F: np.ndarray, rho: DistanceFunction, alpha: float, t_lo: float, t_hi: float, M: int, tail_terms: int = 24) -> tuple[np.ndarray, dict]:
    """G_alpha^2 on a stack of spectra.

    [t_lo, t_hi] is cut into cells of width 1/M in log2(t). On each cell the
    symbol of a frequency is replaced by its root-mean-square over the cell,
    computed in closed form, so every frequency carries its exact share of
    int |m|^2 dt/t even when the singularity at t = rho sits inside a cell.
    Beyond t_hi the symbol is expanded in powers of rho/t and the tail is
    summed in closed form, which needs rho <= t_hi/4 on the spectrum. Below
    t_lo the symbol vanishes on every nonzero frequency when t_lo does not
    exceed the smallest positive rho.
    """
    rv = rho_values(spec, rho)
    steps = int(np.ceil(np.log2(t_hi / t_lo) * M - 1e-9))
    lv = np.log(t_lo) + np.log(2.0) / M * np.arange(steps + 1)
    t_hi = float(np.exp(lv[-1]))
    dv = np.log(2.0) / M
    pos = rv > 0
    live = pos & np.any(F != 0, axis=tuple(range(F.ndim - spec.dim)))
    ell = np.log(np.where(pos, rv, 1.0))
    acc = np.zeros(F.shape, dtype=float)
    e_prev = _stein_energy(alpha, lv[0] - ell)
    for v1 in lv[1:]:
        e_next = _stein_energy(alpha, v1 - ell)
        w = np.where(pos, np.sqrt(np.maximum(e_next - e_prev, 0.0) / dv), 0.0)
        e_prev = e_next
        if not np.any(w[live]):
            continue
        acc += dv * np.abs(inverse_array(spec, F * w)) ** 2
    u = np.where(np.any(F != 0, axis=0), rv / t_hi, 0.0)
    if u.max() > 0.25:
        raise GuardError(f"tail expansion needs rho <= t_hi/4; max rho/t_hi = {u.max():.3g}")
    c = _tail_coefficients(alpha, tail_terms)
    Q = [c[k] * inverse_array(spec, F * u ** (k + 1)) for k in range(tail_terms)]
    tail = np.zeros(F.shape)
    for k in range(tail_terms):
        for l in range(tail_terms):
            tail += np.real(Q[k] * np.conj(Q[l])) / (k + l + 2)
    acc += tail
    info = {"t_lo": t_lo, "t_hi": t_hi, "n_t": int(steps), "tail_fraction": float(tail.sum() / max(acc.sum(), 1e-300))}
    return acc, info


def stein_square_function(f, rho: DistanceFunction, alpha: float, tgrid: TGrid | None = None, M: int = 16, return_info: bool = False):
    """Stein's square function (int_0^inf |S^{alpha-1}_t f - S^alpha_t f|^2 dt/t)^{1/2}.

    Without ``tgrid`` the t-range runs from the smallest positive rho on the
    grid to four times the largest, so nothing is discarded. With ``tgrid`` the
    covered octaves must reach from below the spectrum of f to four times its
    top; otherwise a GuardError reports the uncovered spectral mass.
    """
    if alpha <= 0.5:
        raise ValueError("alpha must exceed 1/2")
    spec, V, single = _as_batch(f)
    F = forward_array(spec, V)
    rv = rho_values(spec, rho)
    if tgrid is None:
        t_lo = rho_min_positive(spec, rho)
        t_hi = 4.0 * float(rv.max())
    else:
        tv = tgrid.values
        t_lo, t_hi, M = float(tv[0]), float(tv[-1]), tgrid.M
        mass = np.sum(np.abs(F) ** 2, axis=0)
        total = mass.sum()
        below = mass[(rv > 0) & (rv < t_lo)].sum() / total if total > 0 else 0.0
        above = mass[rv > t_hi / 4].sum() / total if total > 0 else 0.0
        if below > 1e-12 or above > 1e-12:
            raise GuardError(f"t grid misses spectral mass: below {below:.3g}, above {above:.3g}")
        # the tail expansion only sees frequencies where f has mass
        F = np.where(rv <= t_hi / 4, F, 0.0)
    G2, info = stein_array(spec, F, rho, alpha, t_lo, t_hi, M)
    res = [GridFunction(spec, np.sqrt(g)) for g in G2]
    out = res[0] if single else res
    return (out, info) if return_info else out


# ---------------------------------------------------------------- Littlewood-Paley pieces


def lp_zeta(s):
    """zeta(s) = zeta0(s/2) - zeta0(s): supported in [1/2, 2], sum_k zeta(2^{-k} s) = 1 for s > 0."""
    return zeta0(np.asarray(s) / 2.0) - zeta0(s)


def lp_blocks(f: GridFunction, rho: DistanceFunction, k_range, fattened: bool = False, tol: float = 1e-10) -> list:
    """P_k f (or L_k f with the plateau cutoff) for k in k_range."""
    ks = list(k_range)
    spec = f.spec
    F = _spectrum(f)
    rv = rho_values(spec, rho)
    check_nyquist(spec, rho, 2.0 ** (max(ks) + (3 if fattened else 1)), "Littlewood-Paley block")
    if not fattened:
        cover = np.zeros(spec.shape)
        for k in ks:
            cover += lp_zeta(rv / 2.0**k)
        F2 = np.abs(F) ** 2
        miss = float(np.sum(F2 * (1.0 - cover) ** 2) / np.sum(F2)) if F2.sum() > 0 else 0.0
        if miss > tol:
            raise GuardError(f"k range leaves spectral mass fraction {miss:.3g} uncovered")
    cut = eta_plateau if fattened else lp_zeta
    return [GridFunction(spec, inverse_array(spec, cut(rv / 2.0**k) * F)) for k in ks]


def a_tau(f: GridFunction, rho: DistanceFunction, eta, tau: float) -> GridFunction:
    """Multiplier eta(rho) exp(-i rho tau)."""
    sym = as_symbol(eta) if not callable(eta) or isinstance(eta, (Profile1D, Symbol1D)) else Symbol1D(eta, (0.125, 8.0))
    check_nyquist(f.spec, rho, sym.support[1], "A_tau symbol")
    rv = rho_values(f.spec, rho)
    s = np.zeros(f.spec.shape, dtype=complex)
    m = (rv >= sym.support[0]) & (rv <= sym.support[1])
    s[m] = sym.evaluate(rv[m]) * np.exp(-1j * rv[m] * tau)
    return apply_symbol(f, s)


PLATEAU = Symbol1D(eta_plateau, (0.125, 8.0))


def _block_index(component: Profile1D) -> int:
    j = component.params.get("j")
    if j is None:
        raise ValueError("component is not a V_j block")
    if 2.0**j > component.nyquist:
        raise GuardError(f"block j={j} exceeds the profile Nyquist budget")
    return int(j)


def tjk_symbol(spec: GridSpec, rho: DistanceFunction, component: Profile1D, k: int, t: float) -> np.ndarray:
    """eta(2^{-k} rho) V_j h(2^{-k} rho / t) on the grid."""
    _block_index(component)
    check_nyquist(spec, rho, 8.0 * 2.0**k, "localized symbol")
    rv = rho_values(spec, rho) / 2.0**k
    m = (rv > 0.125) & (rv < 8.0)
    s = np.zeros(spec.shape, dtype=complex)
    s[m] = eta_plateau(rv[m]) * component.evaluate(rv[m] / t)
    return s


def t_jk(f: GridFunction, rho: DistanceFunction, component: Profile1D, k: int, t: float) -> GridFunction:
    """T^{j,k}_t[h, f] = F^{-1}[eta(2^{-k} rho) V_j h(2^{-k} rho / t) f^]."""
    return apply_symbol(f, tjk_symbol(f.spec, rho, component, k, t))


def localized_symbol(spec: GridSpec, rho: DistanceFunction, h, k: int, t: float) -> np.ndarray:
    """eta(2^{-k} rho) h(2^{-k} rho / t)."""
    sym = as_symbol(h)
    check_nyquist(spec, rho, 8.0 * 2.0**k, "localized symbol")
    rv = rho_values(spec, rho) / 2.0**k
    m = (rv > 0.125) & (rv < 8.0)
    s = np.zeros(spec.shape, dtype=complex)
    s[m] = eta_plateau(rv[m]) * sym.evaluate(rv[m] / t)
    return s


def localized_maximal(f: GridFunction, rho: DistanceFunction, h, k: int, tgrid) -> GridFunction:
    """sup over t in [1, 2] of |F^{-1}[eta(2^{-k} rho) h(2^{-k} rho / t) f^]|."""
    F = _spectrum(f)
    tv = tgrid.values if isinstance(tgrid, TGrid) else np.asarray(tgrid)
    out = np.zeros(f.spec.shape)
    for t in tv:
        np.maximum(out, np.abs(inverse_array(f.spec, localized_symbol(f.spec, rho, h, k, t) * F)), out=out)
    return GridFunction(f.spec, out)


def m_pieces(
    f: GridFunction, rho: DistanceFunction, decomp: VjDecomposition, k: int, c0: int, tgrid, annuli_: AnnulusDecomposition, coverage_tol: float = 1e-8
) -> tuple:
    """The two maximal pieces of the spatial split at radius 2^{-k+j+c0+1}.

    For block j, M1 feeds T^{j,k} with f on the annuli of index <= -k+j+c0
    and M2 with f on the annuli above. Returns (M1, M2, diagnostics).
    """
    spec = f.spec
    if annuli_.spec.shape != spec.shape:
        raise GuardError("annuli live on another grid")
    a2 = np.abs(f.values) ** 2
    covered = annuli_.covered()
    if a2.sum() > 0 and a2[~covered].sum() / a2.sum() > coverage_tol:
        raise GuardError("f has mass outside the annuli")
    level = np.full(spec.shape, annuli_.l_min - 1, dtype=np.int64)
    for l, mask in zip(annuli_.levels, annuli_.masks):
        level[mask] = l
    tv = tgrid.values if isinstance(tgrid, TGrid) else np.asarray(tgrid)
    J = decomp.j_max
    inner_F, outer_F, active = [], [], []
    for j in range(J + 1):
        cut = -k + j + c0
        inner = covered & (level <= cut)
        outer = covered & (level > cut)
        inner_F.append(forward_array(spec, np.where(inner, f.values, 0)))
        outer_F.append(forward_array(spec, np.where(outer, f.values, 0)))
        active.append((bool(np.any(inner & (a2 > 0))), bool(np.any(outer & (a2 > 0)))))
    M1 = np.zeros(spec.shape)
    M2 = np.zeros(spec.shape)
    for t in tv:
        s1 = np.zeros(spec.shape, dtype=complex)
        s2 = np.zeros(spec.shape, dtype=complex)
        for j in range(J + 1):
            sym = tjk_symbol(spec, rho, decomp.components[j], k, t)
            s1 += sym * inner_F[j]
            s2 += sym * outer_F[j]
        np.maximum(M1, np.abs(inverse_array(spec, s1)), out=M1)
        np.maximum(M2, np.abs(inverse_array(spec, s2)), out=M2)
    diag = {"active": active, "cut_levels": [-k + j + c0 for j in range(J + 1)]}
    return GridFunction(spec, M1), GridFunction(spec, M2), diag


def maximal_square_majorant(f: GridFunction, rho: DistanceFunction, h, k_range, tgrid) -> dict:
    """Three pointwise quantities for the dyadic regrouping of the maximal function.

    ``direct``: max over s = 2^k t of |F^{-1}[h(rho/s) f^]|;
    ``sup_form``: max over (k, t) of |F^{-1}[h(rho/(2^k t)) L_k f^]|;
    ``square_form``: (sum_k max_t |...|^2)^{1/2}.
    """
    spec = f.spec
    F = _spectrum(f)
    rv = rho_values(spec, rho)
    tv = tgrid.values if isinstance(tgrid, TGrid) else np.asarray(tgrid)
    sym = as_symbol(h)
    direct = np.zeros(spec.shape)
    sup_form = np.zeros(spec.shape)
    sq = np.zeros(spec.shape)
    for k in k_range:
        Lk = eta_plateau(rv / 2.0**k) * F
        per_k = np.zeros(spec.shape)
        for t in tv:
            s = dilated_symbol(spec, rho, sym, 2.0**k * t)
            np.maximum(direct, np.abs(inverse_array(spec, s * F)), out=direct)
            np.maximum(per_k, np.abs(inverse_array(spec, s * Lk)), out=per_k)
        np.maximum(sup_form, per_k, out=sup_form)
        sq += per_k**2
    return {"direct": direct, "sup_form": sup_form, "square_form": np.sqrt(sq)}


# ---------------------------------------------------------------- kernel decay


@dataclass(frozen=True)
class DecayFit:
    j: int
    s: float
    c0: int
    slope: float
    outer_sup: float
    inner_sup: float
    radii: np.ndarray
    envelope: np.ndarray
    fit_range: tuple


def radial_kernel(symbol: Callable, radii: np.ndarray, d: int = 2, r_max: float = 8.0, n_r: int = 1 << 16) -> np.ndarray:
    """Inverse transform of a radial symbol m(|xi|) supported in [0, r_max] at the given |x|.

    d=2 uses K(x) = (2 pi)^{-1} int m(r) J_0(r|x|) r dr by the trapezoid rule,
    exact up to rounding for smooth compactly supported m.
    """
    from scipy.special import j0

    if d != 2:
        raise ValueError("radial_kernel is implemented for d = 2")
    r = (np.arange(n_r) + 0.5) * (r_max / n_r)
    mr = symbol(r) * r * (r_max / n_r)
    out = np.empty(len(radii), dtype=complex)
    chunk = max(1, (1 << 22) // n_r)
    for i in range(0, len(radii), chunk):
        x = np.asarray(radii[i : i + chunk])
        out[i : i + chunk] = j0(np.outer(x, r)) @ mr
    return out / (2 * np.pi)


def _envelope(radii: np.ndarray, values: np.ndarray, bins: int) -> tuple[np.ndarray, np.ndarray]:
    edges = np.geomspace(radii.min(), radii.max(), bins + 1)
    rc, env = [], []
    for lo, hi in zip(edges[:-1], edges[1:]):
        m = (radii >= lo) & (radii < hi)
        if m.any():
            rc.append(np.sqrt(lo * hi))
            env.append(np.max(np.abs(values[m])))
    return np.array(rc), np.array(env)


def kernel_decay_probe(
    rho: DistanceFunction,
    decomp: VjDecomposition,
    j: int,
    s: float = 1.0,
    c0: int = 2,
    spec: GridSpec | None = None,
    octaves: float = 5.0,
    floor: float = 1e-13,
    bins: int = 24,
    window: float = 16.0,
) -> DecayFit:
    """Decay of K_{j,s}, the inverse transform of eta(rho) V_j h(rho/s).

    With ``spec`` the kernel is computed on that grid (any rho); without it
    rho must be euclidean in d=2 and the kernel is evaluated radially. The
    outer fit uses the maxima over ``bins`` geometric bins of |x| in
    [2^{j+c0}, 2^{j+c0+octaves}] that exceed ``floor`` times the global peak;
    on the radial path each bin is sampled on its first ``window`` units. The
    inner sup is over |x| <= 2^{-j-c0}. The profile must be sampled out to
    8/s so that eta(rho) V_j h(rho/s) is not truncated.
    """
    if not 0.5 <= s <= 2:
        raise ValueError("s must lie in [1/2, 2]")
    comp = decomp.components[j]
    if comp.half_extent < 8.0 / s:
        raise GuardError(f"profile domain [-{comp.half_extent:g}, {comp.half_extent:g}) does not reach rho/s = {8.0 / s:g}")
    r_in, r_out = 2.0 ** (-j - c0), 2.0 ** (j + c0)
    r_top = r_out * 2.0**octaves

    def symbol(r):
        r = np.asarray(r, dtype=float)
        return eta_plateau(r) * comp.evaluate(r / s)

    if spec is None:
        if rho.label != "euclidean":
            raise GuardError("radial probe needs the euclidean distance; pass a grid spec")
        # midpoint nodes resolve e^{i r |x|} up to |x| = r_top plus the block bandwidth
        n_r = int(2 ** np.ceil(np.log2(16.0 * (r_top + 2.0 ** (j + 1)) / np.pi)))
        peak_r = np.linspace(0.0, 2.0 ** (j + 1), 512)
        inner_r = np.linspace(0.0, r_in, 17)
        peak = np.max(np.abs(radial_kernel(symbol, peak_r, n_r=n_r)))
        inner = radial_kernel(symbol, inner_r, n_r=n_r)
        # the envelope varies slowly, so each geometric bin is sampled on a short window
        edges = np.geomspace(r_out, r_top, bins + 1)
        wins = [np.arange(lo, min(hi, lo + window), 0.05) for lo, hi in zip(edges[:-1], edges[1:])]
        outer = radial_kernel(symbol, np.concatenate(wins), n_r=n_r)
        parts = np.split(np.abs(outer), np.cumsum([w.size for w in wins])[:-1])
        rc = np.array([w[np.argmax(p)] for w, p in zip(wins, parts)])
        env = np.array([p.max() for p in parts])
        vals = outer
    else:
        if r_top > spec.half_width:
            raise GuardError(f"outer region reaches |x| = {r_top:g} beyond the box")
        check_nyquist(spec, rho, 8.0 * s, "kernel symbol")
        rv = rho_values(spec, rho)
        S = np.zeros(spec.shape, dtype=complex)
        m = (rv > 0.125) & (rv < 8.0)
        S[m] = symbol(rv[m])
        K = inverse_array(spec, S)
        rad = np.sqrt(np.sum(space_mesh(spec) ** 2, axis=-1))
        peak = float(np.abs(K).max())
        inner_m = rad <= r_in
        outer_m = (rad >= r_out) & (rad <= r_top)
        if not outer_m.any() or not inner_m.any():
            raise GuardError("inner or outer region empty on this grid")
        inner = K[inner_m]
        vals = K[outer_m]
        rc, env = _envelope(rad[outer_m], vals, bins)
    keep = env > floor * peak
    slope = float("-inf")
    if keep.sum() >= 3:
        slope = float(np.polyfit(np.log(rc[keep]), np.log(env[keep]), 1)[0])
    return DecayFit(j, s, c0, slope, float(np.max(np.abs(vals))), float(np.max(np.abs(inner))), rc, env, (r_out, r_top))
