"""Lorentz, Herz and power-weighted L2 norms of grid functions.

Lorentz norms use ``||f||_{p,q} = (int_0^inf (t^{1/p} f*(t))^q dt/t)^{1/q}``
(sup form for q = inf), so that ``||f||_{p,p} = ||f||_p``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .grid import SPACE, GuardError, AnnulusDecomposition, GridFunction, annuli, power_weight
from .reports import RatioReport, make_report, relative_drift

UNCOVERED_TOL = 1e-8


class NormError(ValueError):
    pass


@dataclass(frozen=True)
class NormSpec:
    kind: str
    params: dict = field(default_factory=dict)
    l_range: tuple | None = None
    truncation: str = "guarded"

    def validate(self, dim: int) -> None:
        p = self.params
        if self.kind == "lorentz":
            if not 1 < p["p"] < np.inf or not p["q"] >= 1:
                raise NormError("lorentz needs 1 < p < inf and q >= 1")
        elif self.kind == "herz":
            if p.get("r", 2) != 2:
                raise NormError("only r = 2 Herz norms are supported here")
            if not -dim / 2 < p["gamma"] < dim / 2 or not p["q"] >= 1:
                raise NormError("herz needs |gamma| < d/2 and q >= 1")
        elif self.kind == "weighted_l2":
            if not abs(p["a"]) < dim:
                raise NormError("weighted_l2 needs |a| < d")
        else:
            raise NormError(f"unknown norm kind {self.kind!r}")

    def evaluate(self, f: GridFunction) -> float:
        self.validate(f.spec.dim)
        p = self.params
        if self.kind == "lorentz":
            return lorentz_norm(f, p["p"], p["q"])
        if self.kind == "herz":
            lo, hi = self.l_range if self.l_range else (None, None)
            return herz_norm(f, p["gamma"], p["q"], annuli(f.spec, lo, hi))
        return weighted_l2_norm(f, p["a"])


def rearrangement_norm(values: np.ndarray, masses: np.ndarray, p: float, q: float) -> float:
    """Lorentz L^{p,q} norm of a step function with cell values and cell measures.

    With |values| sorted decreasingly into F_k and cumulative masses T_k the
    integral is exact: ``sum_k F_k^q (p/q) (T_k^{q/p} - T_{k-1}^{q/p})``.
    """
    v = np.abs(np.asarray(values)).astype(float).reshape(-1)
    m = np.broadcast_to(np.asarray(masses, dtype=float), v.shape).reshape(-1)
    order = np.argsort(-v, kind="stable")
    F = v[order]
    keep = F > 0
    F = F[keep]
    if F.size == 0:
        return 0.0
    T = np.cumsum(m[order][keep])
    if np.isinf(q):
        return float(np.max(T ** (1.0 / p) * F))
    T0 = np.concatenate(([0.0], T[:-1]))
    scale = F[0]
    incr = T ** (q / p) - T0 ** (q / p)
    return float(scale * ((p / q) * np.sum((F / scale) ** q * incr)) ** (1.0 / q))


def decreasing_rearrangement(f: GridFunction) -> tuple[np.ndarray, np.ndarray]:
    """(T_k, F_k): f* equals F_k on (T_{k-1}, T_k]."""
    v = np.sort(np.abs(f.values).reshape(-1))[::-1]
    T = f.spec.cell_volume * np.arange(1, v.size + 1)
    return T, v


def lorentz_norm(f: GridFunction, p: float, q: float) -> float:
    if f.domain_tag != SPACE:
        raise NormError("lorentz_norm expects a space-domain function")
    return rearrangement_norm(f.values, f.spec.cell_volume, p, q)


def weak_type(f: GridFunction, p: float) -> float:
    """sup_s s^{1/p} f*(s)."""
    T, F = decreasing_rearrangement(f)
    return float(np.max(T ** (1.0 / p) * F))


def _ellq(terms: np.ndarray, q: float) -> float:
    if np.isinf(q):
        return float(np.max(terms))
    top = float(np.max(terms))
    if top == 0:
        return 0.0
    return float(top * np.sum((terms / top) ** q) ** (1.0 / q))


def annulus_masses(f: GridFunction, decomp: AnnulusDecomposition, r: float = 2.0, weight: np.ndarray | None = None) -> np.ndarray:
    """Per-level integrals of |f|^r (times ``weight``) over the decomposition's annuli.

    Cells near the origin are split across annuli by exact area fractions.
    """
    a = np.abs(f.values) ** r
    if weight is not None:
        a = a * weight
    if decomp.fractions is None:
        return np.array([np.sum(a[m]) for m in decomp.masks]) * f.spec.cell_volume
    blk = decomp.block_slice()
    inner = a[blk].copy()
    a = a.copy()
    a[blk] = 0.0
    out = np.array([np.sum(a[m]) for m in decomp.masks])
    out += np.einsum("lij,ij->l", decomp.fractions, inner)
    return out * f.spec.cell_volume


def inner_disc_mass(f: GridFunction, decomp: AnnulusDecomposition) -> float:
    """L2 mass of the disc |x| < 2^l_min when it sits inside the origin cell."""
    if not decomp.inner_tail:
        return 0.0
    c = f.spec.n // 2
    return float(np.pi * 4.0**decomp.l_min * abs(f.values[c, c]) ** 2)


def uncovered_fraction(f: GridFunction, decomp: AnnulusDecomposition) -> float:
    a = np.abs(f.values) ** 2
    total = a.sum() * f.spec.cell_volume
    if total == 0:
        return 0.0
    covered = annulus_masses(f, decomp).sum() + inner_disc_mass(f, decomp)
    return float(max(total - covered, 0.0) / total)


def _origin_value(f: GridFunction) -> float:
    c = f.spec.n // 2
    return float(abs(f.values[(c,) * f.spec.dim]))


def _geometric_tail(first: float, ratio: float, q: float) -> float:
    """ell^q mass (to the power q) of first * ratio^k, k = 0, 1, ...; ratio < 1."""
    if first == 0.0:
        return 0.0
    if not ratio < 1.0:
        raise NormError("inner annulus tail diverges")
    if np.isinf(q):
        return first
    return first**q / (1.0 - ratio**q)


def _with_tail(terms: np.ndarray, tail_first: float, tail_ratio: float, q: float) -> float:
    if tail_first == 0.0:
        return _ellq(terms, q)
    if np.isinf(q):
        return max(_ellq(terms, q), tail_first)
    head = _ellq(terms, q)
    return float((head**q + _geometric_tail(tail_first, tail_ratio, q)) ** (1.0 / q))


def herz_norm(f: GridFunction, gamma: float, q: float, decomp: AnnulusDecomposition | None = None, uncovered_tol: float | None = UNCOVERED_TOL) -> float:
    """(sum_l 2^{l gamma q} [int_{A_l} |f|^2]^{q/2})^{1/q} over the decomposition's levels.

    Raises if more than ``uncovered_tol`` of the L2 mass lies outside the
    covered annuli; pass ``uncovered_tol=None`` to skip the guard.
    """
    if f.domain_tag != SPACE:
        raise NormError("herz_norm expects a space-domain function")
    decomp = annuli(f.spec) if decomp is None else decomp
    if uncovered_tol is not None:
        frac = uncovered_fraction(f, decomp)
        if frac > uncovered_tol:
            raise GuardError(f"uncovered L2 mass fraction {frac:.3g} exceeds {uncovered_tol:g}")
    A = annulus_masses(f, decomp)
    levels = np.arange(decomp.l_min, decomp.l_max + 1)
    terms = 2.0 ** (levels * gamma) * np.sqrt(A)
    if not decomp.inner_tail:
        return _ellq(terms, q)
    # f is constant on the origin cell, so the annuli inside it have closed-form masses
    e = gamma + 1.0
    first = _origin_value(f) * np.sqrt(3.0 * np.pi) * 2.0 ** ((decomp.l_min - 1) * e)
    return _with_tail(terms, first, 2.0**-e, q)


def weighted_l2_norm(f: GridFunction, a: float) -> float:
    """(int |f|^2 |x|^a dx)^{1/2} with the cell weights of ``power_weight``."""
    if f.domain_tag != SPACE:
        raise NormError("weighted_l2_norm expects a space-domain function")
    if not abs(a) < f.spec.dim:
        raise NormError("need |a| < d")
    w = power_weight(f.spec, float(a))
    return float(np.sqrt(np.sum(np.abs(f.values) ** 2 * w) * f.spec.cell_volume))


def embedding_lhs(f: GridFunction, a: float, q: float, decomp: AnnulusDecomposition, r: float = 2.0) -> float:
    """(sum_l [int_{A_l} |f|^r |x|^{-a}]^{q/r})^{1/q}."""
    A = annulus_masses(f, decomp, r, power_weight(f.spec, float(-a)))
    terms = A ** (1.0 / r)
    if not decomp.inner_tail:
        return _ellq(terms, q)
    e = (2.0 - a) / r
    c0 = (2.0 * np.pi * (2.0 ** (2.0 - a) - 1.0) / (2.0 - a)) ** (1.0 / r)
    first = _origin_value(f) * c0 * 2.0 ** ((decomp.l_min - 1) * e)
    return _with_tail(terms, first, 2.0**-e, q)


def check_embedding(bank, a: float, q: float, r: float = 2.0, decomp: AnnulusDecomposition | None = None, dilated_banks: dict | None = None) -> RatioReport:
    """Annulus-sum side over the Lorentz L^{p,q} norm with p = r d/(d - a).

    ``dilated_banks`` maps m to banks of f(2^m x) samples on the same grid;
    the drift is the largest relative change of any per-entry ratio.
    """
    entries = list(bank.entries) if hasattr(bank, "entries") else list(bank)
    spec = entries[0].spec
    d = spec.dim
    if not 0 < a < d:
        raise NormError("need 0 < a < d")
    p = r * d / (d - a)
    decomp = annuli(spec) if decomp is None else decomp

    def ratios(es):
        lhs = [embedding_lhs(f, a, q, decomp, r) for f in es]
        rhs = [lorentz_norm(f, p, q) for f in es]
        return lhs, rhs

    lhs, rhs = ratios(entries)
    base = np.array(lhs) / np.array(rhs)
    drift = float("nan")
    if dilated_banks:
        drifts = []
        for other in dilated_banks.values():
            es = list(other.entries) if hasattr(other, "entries") else list(other)
            l2, r2 = ratios(es)
            drifts.append(relative_drift(base, np.array(l2) / np.array(r2)))
        drift = max(drifts)
    return make_report("check_embedding", range(len(entries)), lhs, rhs, {"a": a, "q": q, "r": r, "p": p}, drift)

