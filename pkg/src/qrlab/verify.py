"""Ratio tests for the maximal, square-function and multiplier inequalities.

Every inequality ``lhs <~ rhs`` becomes a per-entry ratio over a bank of
inputs. A check reports the largest and smallest ratio and, where the
inequality has an exact continuum symmetry, the symmetry drift: the largest
relative change of a per-entry ratio when the input is transformed by that
symmetry (after dividing out the exact power of two it predicts).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .distance import DistanceFunction, sphere_quadrature
from .grid import GridFunction, GridSpec, GuardError, annuli, axis_points, forward_array, inverse_array, power_weight, radius
from .operator import (
    PLATEAU,
    Symbol1D,
    TGrid,
    as_symbol,
    check_nyquist,
    dilated_symbol,
    lp_blocks,
    lp_zeta,
    maximal_function,
    rho_values,
    riesz_symbol,
    stein_square_function,
    tgrid_for,
    tjk_symbol,
    unit_tgrid,
)
from .profile import (
    Kernel1D,
    Profile1D,
    besov_norm,
    bump,
    kappa_lg,
    kernel_1d,
    lambda_jb,
    mu_lorentz_norm,
    mu_masses,
    vj_decompose,
)
from .reports import ConvergenceReport, RatioReport, make_report, relative_drift
from .spaces import check_embedding, herz_norm, lorentz_norm, rearrangement_norm, uncovered_fraction, weighted_l2_norm

__all__ = [
    "RatioReport",
    "ConvergenceReport",
    "RangeError",
    "BlockMultiplier",
    "check_embedding",
    "check_herz_maximal",
    "herz_maximal_reports",
    "check_multiplier_equivalence",
    "check_square_function",
    "check_flu_equivalence",
    "check_trace",
    "check_basic_maximal",
    "check_atau",
    "check_weight_convolution",
    "convergence_experiment",
    "check_kappa_asymptotics",
    "check_lambda_besov",
    "check_lp_square",
    "check_sobolev_maximal",
]


class RangeError(ValueError):
    """Parameters outside the range where the inequality is asserted."""


def _in_range(ok: bool, msg: str, enforce: bool) -> None:
    if ok:
        return
    if enforce:
        raise RangeError(msg)
    warnings.warn(msg, stacklevel=3)


def _entries(bank) -> list:
    if isinstance(bank, GridFunction):
        return [bank]
    return list(bank.entries) if hasattr(bank, "entries") else list(bank)


DRIFT_FLOOR = 1e-6


def _max_drift(base: np.ndarray, others: list) -> float:
    """Largest relative change of a per-entry ratio; ratios below DRIFT_FLOOR * max are rounding noise and skipped."""
    base = np.asarray(base, dtype=float)
    live = base >= DRIFT_FLOOR * base.max()
    return max((relative_drift(base[live], np.asarray(o)[live]) for o in others), default=float("nan"))


def conjugate(q: float) -> float:
    if q == 1:
        return np.inf
    if np.isinf(q):
        return 1.0
    return q / (q - 1.0)


# ---------------------------------------------------------------- Herz maximal bound


def herz_maximal_reports(
    h: Profile1D,
    rho: DistanceFunction,
    bank,
    alpha: float,
    qs,
    tgrid: TGrid | None = None,
    *,
    dilated_banks: dict | None = None,
    decomp=None,
    enforce_range: bool = True,
    skip_tol: float | None = 1e-13,
    refine: bool = False,
) -> dict:
    """One report per q for the Herz-space maximal bound; maximal functions are shared across q.

    lhs is the K^{-alpha}_{max(q,2)} norm of the maximal function, rhs is
    ``besov_norm(h, alpha, q') * herz_norm(f, -alpha, q)``. The maximal
    function is not compactly supported, so its Herz norm skips the
    uncovered-mass guard and the largest uncovered fraction is recorded.
    With ``refine`` the maxima are also taken over the t grid with 2M steps
    per octave and the relative change of max_ratio is reported.
    """
    entries = _entries(bank)
    spec = entries[0].spec
    d = spec.dim
    _in_range(0.5 < alpha < d / 2, f"need 1/2 < alpha < d/2, got {alpha}", enforce_range)
    _in_range(h.support is not None and h.support[0] >= 0.5 and h.support[1] <= 2.0, "h must be supported in (1/2, 2)", enforce_range)
    qs = list(qs)
    for q in qs:
        _in_range(q >= 1, f"need q >= 1, got {q}", enforce_range)
    decomp = annuli(spec) if decomp is None else decomp
    tgrid = tgrid_for(spec, rho, h.support) if tgrid is None else tgrid
    bes = {q: besov_norm(h, alpha, conjugate(q)) for q in qs}

    def lhs_of(maxima):
        return {q: np.array([herz_norm(m, -alpha, max(q, 2.0), decomp, uncovered_tol=None) for m in maxima]) for q in qs}

    def sides(es):
        maxima = maximal_function(es, rho, h, tgrid, skip_tol)
        unc = max(uncovered_fraction(m, decomp) for m in maxima)
        lhs = lhs_of(maxima)
        rhs = {q: np.array([bes[q] * herz_norm(f, -alpha, q, decomp) for f in es]) for q in qs}
        return maxima, lhs, rhs, unc

    maxima, lhs, rhs, unc = sides(entries)
    refined = None
    if refine:
        # the doubled grid adds the midpoints; maxima over the old points are reused
        extra = tgrid.refined().values[1::2]
        more = maximal_function(entries, rho, h, extra, skip_tol)
        refined = lhs_of([GridFunction(spec, np.maximum(a.values.real, b.values.real)) for a, b in zip(maxima, more)])
    others, uncs = {q: [] for q in qs}, [unc]
    for other in (dilated_banks or {}).values():
        _, l2, r2, u = sides(_entries(other))
        uncs.append(u)
        for q in qs:
            others[q].append(l2[q] / r2[q])
    reports = {}
    for q in qs:
        params = {"alpha": alpha, "q": q, "s": conjugate(q), "lhs_exponent": max(q, 2.0), "M": tgrid.M, "k_range": [tgrid.k_min, tgrid.k_max], "rho": rho.label}
        extras = {"besov_norm": bes[q], "max_uncovered_fraction": max(uncs), "dilations": sorted((dilated_banks or {}).keys())}
        if refined is not None:
            r_ref = float(np.max(refined[q] / rhs[q]))
            r_base = float(np.max(lhs[q] / rhs[q]))
            extras.update(refined_max_ratio=r_ref, refinement_change=abs(r_ref / r_base - 1.0))
        reports[q] = make_report("check_herz_maximal", range(len(entries)), lhs[q], rhs[q], params, _max_drift(lhs[q] / rhs[q], others[q]), extras)
    return reports


def check_herz_maximal(h: Profile1D, rho: DistanceFunction, bank, alpha: float, q: float, tgrid: TGrid | None = None, **kw) -> RatioReport:
    """sup_t |F^{-1}[h(rho/t) f^]| in K^{-alpha}_{max(q,2)} against ||h||_{B^2_{alpha,q'}} ||f||_{K^{-alpha}_q}."""
    return herz_maximal_reports(h, rho, bank, alpha, [q], tgrid, **kw)[q]


# ---------------------------------------------------------------- multipliers with block structure


@dataclass(frozen=True)
class BlockMultiplier:
    """m(s) = sum_k c_k zeta(2^{-k} s) over k = k_min, ..., k_min + len(coeffs) - 1."""

    coeffs: tuple
    k_min: int

    @property
    def k_max(self) -> int:
        return self.k_min + len(self.coeffs) - 1

    @property
    def support(self) -> tuple:
        return (2.0 ** (self.k_min - 1), 2.0 ** (self.k_max + 1))

    def __call__(self, s):
        s = np.asarray(s, dtype=float)
        out = np.zeros(s.shape)
        for i, c in enumerate(self.coeffs):
            out += c * lp_zeta(s / 2.0 ** (self.k_min + i))
        return out

    def symbol(self) -> Symbol1D:
        return Symbol1D(self, self.support)

    def shifted(self, m: int) -> "BlockMultiplier":
        return BlockMultiplier(self.coeffs, self.k_min + m)

    @staticmethod
    def random(seed: int, k_min: int, count: int) -> "BlockMultiplier":
        rng = np.random.default_rng(seed)
        return BlockMultiplier(tuple(float(c) for c in rng.choice([-1.0, 1.0], count)), k_min)


def default_phi(s):
    """Fixed bump supported in (1/2, 2)."""
    return bump((np.asarray(s, dtype=float) - 1.25) / 0.75)


def sobolev_norm_1d(values: np.ndarray, ds: float, alpha: float) -> float:
    """(int |g^(tau)|^2 (1 + tau^2)^alpha dtau / 2 pi)^{1/2} for samples of g on a uniform grid."""
    n = values.size
    G = np.fft.fft(values) * ds
    tau = 2 * np.pi * np.fft.fftfreq(n, ds)
    return float(np.sqrt(np.sum(np.abs(G) ** 2 * (1 + tau**2) ** alpha) / (n * ds)))


def multiplier_sup_norm(m, alpha: float, phi=default_phi, t_values=None, n_s: int = 4096) -> tuple[float, float]:
    """(sup_t ||phi m(t .)||_{L^2_alpha}, arg sup) over a geometric t grid covering supp m."""
    s = np.arange(n_s) * (4.0 / n_s)
    ph = phi(s)
    if t_values is None:
        a, b = m.support
        t_values = 2.0 ** np.arange(np.floor(np.log2(a / 2)), np.ceil(np.log2(2 * b)) + 1e-9, 1 / 16)
    norms = [sobolev_norm_1d(ph * m(t * s), 4.0 / n_s, alpha) for t in t_values]
    i = int(np.argmax(norms))
    return float(norms[i]), float(t_values[i])


def quasiradial_probes(spec: GridSpec, rho: DistanceFunction, t_values, seed: int = 0, count: int = 3, phi=default_phi) -> list:
    """g with g^ = phi(rho/t) cos(R rho/t + theta) for random R in [0, 8], theta in [0, pi)."""
    rng = np.random.default_rng(seed)
    rv = rho_values(spec, rho)
    out = []
    for t in t_values:
        for _ in range(count):
            R, th = rng.uniform(0.0, 8.0), rng.uniform(0.0, np.pi)
            u = rv / t
            G = np.where((u > 0.5) & (u < 2.0), phi(u) * np.cos(R * u + th), 0.0)
            out.append(GridFunction(spec, inverse_array(spec, G.astype(complex))))
    return out


def _weighted_ratio(spec, F, S, a):
    """||F^{-1}[S F]||_{L^2(|x|^a)} / ||F^{-1} F||_{L^2(|x|^a)} for a stack of spectra."""
    num = inverse_array(spec, F * S)
    den = inverse_array(spec, F)
    return np.array([weighted_l2_norm(GridFunction(spec, x), a) / weighted_l2_norm(GridFunction(spec, y), a) for x, y in zip(num, den)])


def check_multiplier_equivalence(
    m: BlockMultiplier,
    rho: DistanceFunction,
    alpha: float,
    bank,
    *,
    phi=default_phi,
    probe_seed: int = 0,
    dilated_banks: dict | None = None,
    enforce_range: bool = True,
) -> RatioReport:
    """Weighted L2 operator norm of m(rho) against sup_t ||phi m(t .)||_{L^2_alpha}.

    Per entry: lhs = ||T f||_{L^2(|x|^{-2 alpha})} / ||f||, rhs = the sup norm,
    so max_ratio is the forward constant. The reverse constant
    ``sup norm / largest ratio over quasiradial probes`` and the same
    empirical norms in L^2(|x|^{2 alpha}) are in extras. ``dilated_banks``
    maps m to banks of f(2^m x), tested against the multiplier shifted by m
    blocks.
    """
    entries = _entries(bank)
    spec = entries[0].spec
    d = spec.dim
    _in_range(0.5 < alpha < d / 2, f"need 1/2 < alpha < d/2, got {alpha}", enforce_range)
    if not any(m.coeffs):
        raise ValueError("degenerate multiplier: all coefficients vanish")
    check_nyquist(spec, rho, m.support[1], "block multiplier")
    sup_norm, t_star = multiplier_sup_norm(m, alpha, phi)

    def ratios(es, mult):
        F = forward_array(spec, np.stack([f.values for f in es]))
        S = dilated_symbol(spec, rho, mult.symbol(), 1.0)
        return _weighted_ratio(spec, F, S, -2 * alpha), _weighted_ratio(spec, F, S, 2 * alpha)

    fwd, dual = ratios(entries, m)
    others = [ratios(_entries(b), m.shifted(k))[0] for k, b in (dilated_banks or {}).items()]
    lo, hi = m.support
    t_probe = 2.0 ** np.arange(np.floor(np.log2(lo)), np.ceil(np.log2(hi)) + 1e-9, 0.5)
    t_probe = t_probe[2.0 * t_probe <= 0.95 * hi * 4]
    probes = quasiradial_probes(spec, rho, t_probe, probe_seed, phi=phi)
    probe_r, probe_dual = ratios(probes, m)
    reverse = sup_norm / float(probe_r.max()) if probe_r.max() > 0 else float("inf")
    extras = {
        "sup_norm": sup_norm,
        "t_star": t_star,
        "forward_constant": float(fwd.max() / sup_norm),
        "reverse_constant": reverse,
        "probe_max_ratio": float(probe_r.max()),
        "dual_norm_bank": float(dual.max()),
        "dual_norm_probes": float(probe_dual.max()),
        "dual_agreement": float(max(fwd.max(), probe_r.max()) / max(dual.max(), probe_dual.max())),
    }
    params = {"alpha": alpha, "coeffs": list(m.coeffs), "k_min": m.k_min, "rho": rho.label}
    return make_report("check_multiplier_equivalence", range(len(entries)), fwd, np.full(fwd.size, sup_norm), params, _max_drift(fwd, others), extras)


# ---------------------------------------------------------------- Stein square function


def check_square_function(
    bank,
    rho: DistanceFunction,
    alpha: float,
    tgrid: TGrid | None = None,
    M: int = 16,
    *,
    dilated_banks: dict | None = None,
    enforce_range: bool = True,
) -> RatioReport:
    """||G_alpha f||_{L^2(|x|^{-2 alpha})} / ||f||_{L^2(|x|^{-2 alpha})} per entry."""
    entries = _entries(bank)
    d = entries[0].spec.dim
    _in_range(0.5 < alpha < d / 2, f"need 1/2 < alpha < d/2, got {alpha}", enforce_range)

    def sides(es):
        G = stein_square_function(es, rho, alpha, tgrid, M)
        return np.array([weighted_l2_norm(g, -2 * alpha) for g in G]), np.array([weighted_l2_norm(f, -2 * alpha) for f in es])

    lhs, rhs = sides(entries)
    others = [np.divide(*sides(_entries(b))) for b in (dilated_banks or {}).values()]
    c = (2 * alpha * (2 * alpha - 1)) ** -0.5
    params = {"alpha": alpha, "M": M if tgrid is None else tgrid.M, "rho": rho.label}
    return make_report("check_square_function", range(len(entries)), lhs, rhs, params, _max_drift(lhs / rhs, others), {"shell_constant": c})


# ---------------------------------------------------------------- Fourier-Lorentz equivalence


def mu_display_integral(K: Kernel1D, u: float) -> float:
    """(sum over cells |K|^u (1+|r|)^{-(d-1)u/2} mu_d(cell))^{1/u}, the u = s form as a plain sum."""
    d = K.weight_dim
    w = (1.0 + np.abs(K.r_grid)) ** (-(d - 1) * u / 2)
    return float(np.sum(np.abs(K.values) ** u * w * mu_masses(K.r_grid, K.dr, d)) ** (1.0 / u))


def check_flu_equivalence(
    h_family,
    rho: DistanceFunction,
    u: float,
    s: float,
    spec: GridSpec,
    *,
    R: float = 512.0,
    n_r: int = 1 << 16,
    names=None,
) -> RatioReport:
    """Lorentz norm of F^{-1}[h o rho] on the grid against the weighted 1D kernel norm.

    lhs = lorentz_norm of the d-dimensional kernel, rhs = mu_lorentz_norm of
    K_beta (1D kernel of h(t^beta)). ``extras['spread']`` is max/min ratio.
    """
    if not 1 < u < 2:
        warnings.warn("u outside (1, 2)", stacklevel=2)
    hs = list(h_family)
    names = list(names) if names is not None else list(range(len(hs)))
    rv = rho_values(spec, rho)
    lhs, rhs, display = [], [], []
    for h in hs:
        sym = as_symbol(h)
        check_nyquist(spec, rho, sym.support[1], "profile")
        S = np.zeros(spec.shape, dtype=complex)
        m = (rv >= sym.support[0]) & (rv <= sym.support[1])
        S[m] = sym.evaluate(rv[m])
        lhs.append(lorentz_norm(GridFunction(spec, inverse_array(spec, S)), u, s))
        K = kernel_1d(h, rho.beta, R, n_r, d=spec.dim, check_points=0)
        rhs.append(mu_lorentz_norm(K, u, s))
        display.append(mu_display_integral(K, u) if u == s else float("nan"))
    rep = make_report("check_flu_equivalence", names, lhs, rhs, {"u": u, "s": s, "rho": rho.label, "R": R, "n_r": n_r})
    extras = dict(rep.extras, spread=rep.max_ratio / rep.min_ratio, display=display)
    return RatioReport(rep.name, rep.per_entry, rep.max_ratio, rep.min_ratio, rep.symmetry_drift, rep.params, extras)


# ---------------------------------------------------------------- trace and basic maximal bounds


def fourier_at(f: GridFunction, nodes: np.ndarray) -> np.ndarray:
    """f^(xi) = sum_x f(x) e^{-i <x, xi>} dx at arbitrary frequencies (d = 2, separable sums)."""
    spec = f.spec
    if spec.dim != 2:
        raise ValueError("fourier_at is implemented for d = 2")
    x = axis_points(spec)
    A = np.exp(-1j * np.outer(x, nodes[:, 0]))
    B = np.exp(-1j * np.outer(x, nodes[:, 1]))
    return np.einsum("in,in->n", A, f.values @ B) * spec.cell_volume


def check_trace(bank, rho: DistanceFunction, b: float, n_nodes: int = 256, *, dilated_banks: dict | None = None, enforce_range: bool = True) -> RatioReport:
    """(int_{rho = 1} |g^|^2 dsigma)^{1/2} / ||g||_{L^2(|x|^b)}.

    Symmetry: g(2^m x) on the level set dilated by 2^m has ratio 2^{m(b-1)/2}
    times the original; the drift divides that factor out.
    """
    entries = _entries(bank)
    d = entries[0].spec.dim
    _in_range(1 < b < d, f"need 1 < b < d, got {b}", enforce_range)
    quad_ = sphere_quadrature(rho, n_nodes, d)

    def ratios(es, level):
        # nodes scaled by 2^m: the level set rho = 2^{m beta}
        nodes = quad_.nodes * level
        w = quad_.weights * level ** (d - 1)
        lhs = np.array([np.sqrt(np.sum(w * np.abs(fourier_at(g, nodes)) ** 2)) for g in es])
        rhs = np.array([weighted_l2_norm(g, b) for g in es])
        return lhs, rhs

    lhs, rhs = ratios(entries, 1.0)
    others = []
    for k, other in (dilated_banks or {}).items():
        l2, r2 = ratios(_entries(other), 2.0**k)
        others.append(l2 / r2 * 2.0 ** (-k * (b - 1) / 2))
    return make_report("check_trace", range(len(entries)), lhs, rhs, {"b": b, "n_nodes": n_nodes, "rho": rho.label}, _max_drift(lhs / rhs, others))


def profile_weight_norm(h, b: float, beta: float = 1.0) -> float:
    """A = (int |h(s)|^2 s^{b/beta - 1} ds)^{1/2} by adaptive quadrature."""
    sym = as_symbol(h)
    a, c = sym.support
    val = quad(lambda s: abs(sym.evaluate(np.array([s]))[0]) ** 2 * s ** (b / beta - 1), max(a, 0.0), c, limit=400)[0]
    return float(np.sqrt(val))


def check_basic_maximal(h, rho: DistanceFunction, b: float, bank, M: int = 16, *, dilated_banks: dict | None = None, enforce_range: bool = True) -> RatioReport:
    """||sup_{1<=t<=2} |F^{-1}[h(rho/t) f^]| ||_{L^2(|x|^{-b})} / (A ||f||_2).

    Symmetry: f(2^m x) with the window 2^m [1, 2] scales the ratio by 2^{m b/2}.
    """
    entries = _entries(bank)
    d = entries[0].spec.dim
    _in_range(1 < b < d, f"need 1 < b < d, got {b}", enforce_range)
    A = profile_weight_norm(h, b, rho.beta)

    def ratios(es, k):
        mx = maximal_function(es, rho, h, TGrid(k, k, M))
        lhs = np.array([weighted_l2_norm(g, -b) for g in mx])
        rhs = np.array([A * f.l2_norm() for f in es])
        return lhs, rhs

    lhs, rhs = ratios(entries, 0)
    others = []
    for k, other in (dilated_banks or {}).items():
        l2, r2 = ratios(_entries(other), k)
        others.append(l2 / r2 * 2.0 ** (-k * b / 2))
    return make_report("check_basic_maximal", range(len(entries)), lhs, rhs, {"b": b, "M": M, "A": A, "rho": rho.label}, _max_drift(lhs / rhs, others))


# ---------------------------------------------------------------- A_tau


def atau_integral(f: GridFunction, rho: DistanceFunction, b: float, eta=PLATEAU, tau_max: float = 64.0, d_tau: float = 0.5, scale: float = 1.0, tail_tol: float = 0.25) -> tuple[float, dict]:
    """int ||A_tau f||^2_{L^2(|x|^{-b})} dtau: trapezoid on [-tau_max, tau_max] plus a fitted tail.

    A_tau uses the symbol eta(rho/scale) exp(-i rho tau/scale). Beyond
    tau_max the integrand is extrapolated by the power law fitted on the
    last quarter of each side; a GuardError is raised if the fitted
    exponent is not below -1 or the tail exceeds ``tail_tol`` of the total.
    """
    spec = f.spec
    sym = as_symbol(eta)
    check_nyquist(spec, rho, sym.support[1] * scale, "A_tau symbol")
    if tau_max / scale > spec.half_width:
        raise GuardError("tau range carries the wave packet beyond the box")
    rv = rho_values(spec, rho)
    u = rv / scale
    inside = (u >= sym.support[0]) & (u <= sym.support[1])
    base = np.zeros(spec.shape, dtype=complex)
    base[inside] = sym.evaluate(u[inside])
    F = forward_array(spec, f.values)
    taus = np.arange(-tau_max, tau_max + d_tau / 2, d_tau)
    vals = np.empty(taus.size)
    wt = power_weight(spec, float(-b))
    for i, tau in enumerate(taus):
        g = inverse_array(spec, base * np.exp(-1j * u * tau) * F)
        vals[i] = np.sum(np.abs(g) ** 2 * wt) * spec.cell_volume
    core = float(np.trapezoid(vals, taus))
    tail, slopes = 0.0, []
    n4 = max(3, taus.size // 8)
    for side in (slice(-n4, None), slice(0, n4)):
        tt, vv = np.abs(taus[side]), vals[side]
        if np.all(vv > 0):
            p = np.polyfit(np.log(tt), np.log(vv), 1)
            slopes.append(float(p[0]))
            if p[0] >= -1:
                raise GuardError(f"A_tau integrand decays like |tau|^{p[0]:.3g}; no integrable tail")
            tail += float(np.exp(p[1]) * tau_max ** (p[0] + 1) / (-(p[0] + 1)))
    total = core + tail
    if total > 0 and tail / total > tail_tol:
        raise GuardError(f"tau tail is {tail / total:.3g} of the integral")
    return total, {"core": core, "tail": tail, "tail_fraction": tail / total if total > 0 else 0.0, "slopes": slopes}


def check_atau(bank, rho: DistanceFunction, b: float, eta=PLATEAU, tau_max: float = 64.0, d_tau: float = 0.5, *, dilated_banks: dict | None = None, enforce_range: bool = True) -> RatioReport:
    """int ||A_tau f||^2_{L^2(|x|^{-b})} dtau / ||f||_2^2.

    Symmetry: f(2^m x) against the symbol eta(rho/2^m) exp(-i rho tau/2^m)
    scales the ratio by 2^{m b}.
    """
    entries = _entries(bank)
    d = entries[0].spec.dim
    _in_range(1 < b < d, f"need 1 < b < d, got {b}", enforce_range)

    def ratios(es, scale):
        out, info = [], []
        for f in es:
            v, i = atau_integral(f, rho, b, eta, tau_max, d_tau, scale)
            out.append(v / f.l2_norm() ** 2)
            info.append(i["tail_fraction"])
        return np.array(out), info

    r0, tails = ratios(entries, 1.0)
    others = []
    for k, other in (dilated_banks or {}).items():
        rk, _ = ratios(_entries(other), 2.0**k)
        others.append(rk * 2.0 ** (-k * b))
    lhs = r0 * np.array([f.l2_norm() ** 2 for f in entries])
    rhs = np.array([f.l2_norm() ** 2 for f in entries])
    return make_report("check_atau", range(len(entries)), lhs, rhs, {"b": b, "tau_max": tau_max, "d_tau": d_tau, "rho": rho.label}, _max_drift(r0, others), {"tail_fractions": tails})


# ---------------------------------------------------------------- weighted convolution on the line


def weighted_convolution_ratio(varsigma, g, a: float, u: float, s: float, d: int, half_width: float, n: int) -> tuple[float, float]:
    """(||M_{-a}[varsigma * M_a g]||, ||g||) in L^{u,s}(mu_d) on the grid r_k = -W + k 2W/n."""
    dr = 2 * half_width / n
    r = -half_width + (np.arange(n) + 0.5) * dr
    gv = g(r)
    ker_r = (np.arange(-n + 1, n)) * dr
    conv = np.convolve(varsigma(ker_r), (1 + np.abs(r)) ** a * gv, mode="full")[n - 1 : 2 * n - 1] * dr
    out = (1 + np.abs(r)) ** (-a) * conv
    masses = mu_masses(r, dr, d)
    return rearrangement_norm(out, masses, u, s), rearrangement_norm(gv, masses, u, s)


def gaussian_kernel(sigma: float = 1.0):
    return lambda r: np.exp(-0.5 * (np.asarray(r) / sigma) ** 2) / (sigma * np.sqrt(2 * np.pi))


def line_bank(seed: int, count: int, scale: float = 8.0) -> list:
    """Modulated Gaussians on the line with random centers, widths and frequencies."""
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        c, w, k = rng.uniform(-scale, scale), rng.uniform(0.5, 2.0) * scale / 4, rng.uniform(0.0, 2.0)
        out.append(lambda r, c=c, w=w, k=k: np.exp(-0.5 * ((r - c) / w) ** 2) * np.cos(k * r))
    return out


def check_weight_convolution(varsigma, g_bank, a: float, u: float, s: float, d: int = 2, half_width: float = 64.0, n: int = 4096) -> RatioReport:
    """Ratio of the weighted convolution to g in L^{u,s}(mu_d); drift is the change under n -> 2n."""
    gs = list(g_bank)
    lhs, rhs, fine = [], [], []
    for g in gs:
        l, r = weighted_convolution_ratio(varsigma, g, a, u, s, d, half_width, n)
        l2, r2 = weighted_convolution_ratio(varsigma, g, a, u, s, d, half_width, 2 * n)
        lhs.append(l)
        rhs.append(r)
        fine.append(l2 / r2 if r2 > 0 else np.nan)
    lhs, rhs = np.array(lhs), np.array(rhs)
    ok = rhs > 0
    drift = relative_drift((lhs / np.where(ok, rhs, 1))[ok], np.array(fine)[ok]) if ok.any() else float("nan")
    return make_report("check_weight_convolution", range(len(gs)), lhs, rhs, {"a": a, "u": u, "s": s, "d": d, "half_width": half_width, "n": n}, drift)


# ---------------------------------------------------------------- convergence of Riesz means


def convergence_experiment(f: GridFunction, rho: DistanceFunction, lam: float, gam: float, t_seq, probe: float = 2.0, mode: str = "riesz") -> ConvergenceReport:
    """sup over {1/R <= |x| <= R} of |S_t f - f| (riesz) or of the cutoff part |F^{-1}[chi h(rho/t) f^]|."""
    spec = f.spec
    t_seq = np.asarray(t_seq, dtype=float)
    R = float(probe)
    rad = radius(spec)
    region = (rad >= 1.0 / R) & (rad <= R)
    if not region.any():
        raise GuardError("probe region is empty")
    if R > spec.half_width:
        raise GuardError("probe region leaves the box")
    part = "full" if mode == "riesz" else "cutoff"
    if mode not in ("riesz", "cutoff"):
        raise ValueError(f"unknown mode {mode!r}")
    sym = riesz_symbol(lam, gam, part)
    F = forward_array(spec, f.values)
    errs = []
    for t in t_seq:
        g = inverse_array(spec, dilated_symbol(spec, rho, sym, t) * F)
        diff = g - f.values if mode == "riesz" else g
        errs.append(float(np.abs(diff[region]).max()))
    e = np.array(errs)
    tail = e[-3:] if e.size >= 3 else e
    mono = bool(np.all(np.diff(tail) < 0))
    return ConvergenceReport(tuple(float(t) for t in t_seq), tuple(errs), {"kind": "annulus", "R": R}, mono, {"lam": lam, "gam": gam, "mode": mode, "rho": rho.label})


# ---------------------------------------------------------------- kernel asymptotics


def log_binned_envelope(r: np.ndarray, values: np.ndarray, lo: float, hi: float, per_octave: int = 4) -> tuple[np.ndarray, np.ndarray]:
    """Location and value of max |values| in each of the geometric bins of [lo, hi]."""
    edges = 2.0 ** np.arange(np.log2(lo), np.log2(hi) + 1e-9, 1.0 / per_octave)
    a = np.abs(values)
    xs, ys = [], []
    for e0, e1 in zip(edges[:-1], edges[1:]):
        m = (r >= e0) & (r < e1)
        if m.any():
            i = int(np.argmax(a[m]))
            xs.append(r[m][i])
            ys.append(a[m][i])
    return np.array(xs), np.array(ys)


def check_kappa_asymptotics(lam: float, gam: float, r_range=(64.0, 4096.0), R: float = float(1 << 18), n_r: int = 1 << 20) -> RatioReport:
    """Compensated envelope |kappa(r)| r^{lam+1} (log r)^gam on log bins of r_range.

    Each row is one bin: lhs = envelope, rhs = r^{-lam-1} (log r)^{-gam}.
    extras hold the band (max/min) and the fitted envelope slope.
    """
    if not lam > 0 or gam < 0:
        raise ValueError("need lam > 0 and gam >= 0")
    lo, hi = r_range
    if hi > R / 4:
        raise GuardError("r range too close to the kernel window")
    K = kappa_lg(lam, gam, R, n_r)
    xs, ys = log_binned_envelope(K.r_grid, K.values, lo, hi)
    rhs = xs ** (-lam - 1) * np.log(xs) ** (-gam)
    slope = float(np.polyfit(np.log(xs), np.log(ys), 1)[0])
    rep = make_report("check_kappa_asymptotics", [f"{x:.6g}" for x in xs], ys, rhs, {"lam": lam, "gam": gam, "r_range": list(r_range), "R": R, "n_r": n_r})
    extras = {"band": rep.max_ratio / rep.min_ratio, "slope": slope, "r": xs.tolist(), "envelope": ys.tolist()}
    return RatioReport(rep.name, rep.per_entry, rep.max_ratio, rep.min_ratio, rep.symmetry_drift, rep.params, extras)


# ---------------------------------------------------------------- Lambda_b^j against Besov


def lambda_besov_sides(h: Profile1D, alpha: float, s: float, b: float, j_max: int) -> tuple[float, float]:
    dec = vj_decompose(h, j_max)
    lam = np.array([lambda_jb(c, b) for c in dec.components])
    terms = 2.0 ** (alpha * np.arange(lam.size)) * lam
    lhs = float(np.max(terms)) if np.isinf(s) else float(np.sum(terms**s) ** (1 / s))
    return lhs, besov_norm(h, alpha, s, j_max)


def check_lambda_besov(h_bank, alpha: float, s: float, b: float, j_max: int = 10, names=None) -> RatioReport:
    """(sum_j [2^{j alpha} Lambda_b^j(h)]^s)^{1/s} / besov_norm(h, alpha, s); zero profiles are skipped.

    symmetry_drift is max/min - 1 over the bank, meaningful when the bank is
    one profile shape moved across frequency blocks.
    """
    if not (alpha > 0 and b > 0):
        raise ValueError("need alpha > 0 and b > 0")
    hs = list(h_bank)
    names = list(names) if names is not None else list(range(len(hs)))
    sides = [lambda_besov_sides(h, alpha, s, b, j_max) for h in hs]
    rep = make_report("check_lambda_besov", names, [x for x, _ in sides], [y for _, y in sides], {"alpha": alpha, "s": s, "b": b, "j_max": j_max})
    spread = rep.max_ratio / rep.min_ratio - 1.0
    return RatioReport(rep.name, rep.per_entry, rep.max_ratio, rep.min_ratio, spread, rep.params, rep.extras)


# ---------------------------------------------------------------- Littlewood-Paley in Herz spaces


def check_lp_square(bank, rho: DistanceFunction, gamma: float, q: float, k_range, *, dilated_banks: dict | None = None, decomp=None) -> RatioReport:
    """||(sum_k |P_k f|^2)^{1/2}||_{K^gamma_q} / ||f||_{K^gamma_q}; dilated banks use k_range shifted by m."""
    entries = _entries(bank)
    spec = entries[0].spec
    if not -spec.dim / 2 < gamma < spec.dim / 2:
        raise RangeError("need |gamma| < d/2")
    decomp = annuli(spec) if decomp is None else decomp
    ks = list(k_range)

    def sides(es, shift):
        lhs, rhs = [], []
        for f in es:
            blocks = lp_blocks(f, rho, [k + shift for k in ks])
            sq = np.sqrt(sum(np.abs(p.values) ** 2 for p in blocks))
            lhs.append(herz_norm(GridFunction(spec, sq), gamma, q, decomp, uncovered_tol=None))
            rhs.append(herz_norm(f, gamma, q, decomp))
        return np.array(lhs), np.array(rhs)

    lhs, rhs = sides(entries, 0)
    others = [np.divide(*sides(_entries(b), k)) for k, b in (dilated_banks or {}).items()]
    return make_report("check_lp_square", range(len(entries)), lhs, rhs, {"gamma": gamma, "q": q, "k_range": ks, "rho": rho.label}, _max_drift(lhs / rhs, others))


# ---------------------------------------------------------------- Sobolev-embedding maximal bound


def check_sobolev_maximal(h: Profile1D, rho: DistanceFunction, bank, gamma: float, js=(0, 2, 4), M: int = 16, *, k: int = 0, dilated_banks: dict | None = None) -> RatioReport:
    """||sup_{1<=t<=2} |T^{j,k}_t[h, f]| ||_2 / (2^{j(1/2-gamma)} ||h||_{B^2_{gamma,1}} ||f||_2) per (entry, j).

    The base bank uses block k; a bank of f(2^m x) in ``dilated_banks`` uses k + m.
    """
    if not gamma > 0.5:
        raise RangeError("need gamma > 1/2")
    entries = _entries(bank)
    spec = entries[0].spec
    js = list(js)
    dec = vj_decompose(h, max(js))
    bes = besov_norm(h, gamma, 1.0)
    tv = unit_tgrid(M).values

    def ratios(es, kk):
        F = forward_array(spec, np.stack([f.values for f in es]))
        norms = np.array([f.l2_norm() for f in es])
        lhs, rhs, ids = [], [], []
        for j in js:
            out = np.zeros(F.shape)
            for t in tv:
                S = tjk_symbol(spec, rho, dec.components[j], kk, t)
                np.maximum(out, np.abs(inverse_array(spec, F * S)), out=out)
            lhs.extend(np.sqrt(np.sum(out**2, axis=(-2, -1)) * spec.cell_volume) if spec.dim == 2 else [GridFunction(spec, o).l2_norm() for o in out])
            rhs.extend(2.0 ** (j * (0.5 - gamma)) * bes * norms)
            ids.extend(f"{i}:j{j}" for i in range(len(es)))
        return np.array(lhs), np.array(rhs), ids

    lhs, rhs, ids = ratios(entries, k)
    others = []
    for m, other in (dilated_banks or {}).items():
        l2, r2, _ = ratios(_entries(other), k + m)
        others.append(l2 / r2)
    return make_report("check_sobolev_maximal", ids, lhs, rhs, {"gamma": gamma, "js": js, "M": M, "k": k, "rho": rho.label}, _max_drift(lhs / rhs, others), {"besov_norm": bes})
