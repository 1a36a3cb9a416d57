"""Uniform grids on [-L, L)^d, discrete Fourier transforms, annuli and test banks.

Conventions
-----------
Space nodes are ``x_i = -L + i*h`` with ``h = 2L/n``. Frequencies are the
unshifted FFT lattice ``xi_k = 2*pi*fftfreq(n, h)`` so the frequency spacing is
``pi/L``. The forward transform approximates ``int f(x) e^{-i<x,xi>} dx`` and
the inverse carries the ``(2*pi)^{-d}`` factor, so that Parseval reads
``int |f|^2 dx = (2*pi)^{-d} int |f^|^2 dxi``.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft as sfft

SPACE = "space"
FREQUENCY = "frequency"
MAX_N_3D = 64


class GridError(ValueError):
    """Raised on an invalid grid request or a domain mismatch."""


class GuardError(RuntimeError):
    """Raised when a resolution, coverage or tail guard fails."""


_WORKERS = [None]


def set_threads(n: int | None) -> None:
    """Default worker count for the FFT calls in this package (None: library default)."""
    _WORKERS[0] = n


@dataclass(frozen=True)
class GridSpec:
    dim: int
    n: int
    half_width: float

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n

    @property
    def freq_spacing(self) -> float:
        return np.pi / self.half_width

    @property
    def nyquist(self) -> float:
        return self.n * np.pi / (2.0 * self.half_width)

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def freq_cell_volume(self) -> float:
        return self.freq_spacing**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    def companion(self, m: int) -> "GridSpec":
        """Same lattice with the box scaled by 2^{-m}; samples of f(2^m x) on it equal samples of f here."""
        return GridSpec(self.dim, self.n, self.half_width * 2.0 ** (-m))


def _is_pow2(n: int) -> bool:
    return n > 0 and (n & (n - 1)) == 0


def make_grid(dim: int, n: int, half_width: float) -> GridSpec:
    if dim not in (1, 2, 3):
        raise GridError(f"dim must be 1, 2 or 3, got {dim}")
    if int(n) != n or not _is_pow2(int(n)) or n < 8:
        raise GridError(f"n must be a power of two >= 8, got {n}")
    if not half_width > 0:
        raise GridError(f"half_width must be positive, got {half_width}")
    if dim == 3 and n > MAX_N_3D:
        raise GridError(f"d=3 grids are limited to n <= {MAX_N_3D}")
    return GridSpec(int(dim), int(n), float(half_width))


@lru_cache(maxsize=64)
def axis_points(spec: GridSpec) -> np.ndarray:
    x = -spec.half_width + spec.spacing * np.arange(spec.n)
    x.setflags(write=False)
    return x


@lru_cache(maxsize=64)
def axis_frequencies(spec: GridSpec) -> np.ndarray:
    k = 2.0 * np.pi * np.fft.fftfreq(spec.n, spec.spacing)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=64)
def radius(spec: GridSpec) -> np.ndarray:
    """Euclidean |x| at cell centers."""
    x = axis_points(spec)
    r2 = np.zeros(spec.shape)
    for ax in range(spec.dim):
        sh = [1] * spec.dim
        sh[ax] = spec.n
        r2 = r2 + x.reshape(sh) ** 2
    r = np.sqrt(r2)
    r.setflags(write=False)
    return r


@lru_cache(maxsize=64)
def regularized_radius(spec: GridSpec) -> np.ndarray:
    """|x| with the origin cell moved to half a spacing (used for singular weights)."""
    r = np.array(radius(spec))
    r[r == 0.0] = 0.5 * spec.spacing
    r.setflags(write=False)
    return r


ORIGIN_CELLS = 8


@lru_cache(maxsize=32)
def _unit_cell_means(a: float, k: int) -> np.ndarray:
    """Mean of |y|^a over the unit squares centred at (i, j), 0 <= j <= i <= k (lower triangle filled)."""
    from scipy.integrate import dblquad, quad

    out = np.zeros((k + 1, k + 1))
    # origin cell in polar coordinates over the eighth 0 <= theta <= pi/4
    out[0, 0] = 8.0 / (a + 2.0) * quad(lambda th: (2.0 * np.cos(th)) ** (-(a + 2.0)), 0.0, np.pi / 4)[0]
    for i in range(1, k + 1):
        for j in range(0, i + 1):
            v = dblquad(lambda y, x: (x * x + y * y) ** (a / 2), i - 0.5, i + 0.5, j - 0.5, j + 0.5, epsabs=0, epsrel=1e-11)[0]
            out[i, j] = v
    return out


@lru_cache(maxsize=64)
def power_weight(spec: GridSpec, a: float) -> np.ndarray:
    """|x|^a sampled for cell quadrature.

    In d = 2 the cells within ``ORIGIN_CELLS`` lattice steps of the origin carry
    the exact cell average of |x|^a, which removes the O(h^{2+a}) error of
    point sampling near the singularity. Elsewhere, and in other dimensions,
    |x|^a is sampled at the centres with the origin moved to half a spacing.
    """
    w = np.array(regularized_radius(spec) ** a)
    if spec.dim == 2 and a != 0:
        k = min(ORIGIN_CELLS, spec.n // 2 - 1)
        T = _unit_cell_means(float(a), k)
        c = spec.n // 2
        h = spec.spacing
        for i in range(-k, k + 1):
            for j in range(-k, k + 1):
                p, q = max(abs(i), abs(j)), min(abs(i), abs(j))
                w[c + i, c + j] = h**a * T[p, q]
    w.setflags(write=False)
    return w


@lru_cache(maxsize=64)
def frequency_mesh(spec: GridSpec) -> np.ndarray:
    """Stacked frequency coordinates with shape (n,)*d + (d,)."""
    k = axis_frequencies(spec)
    mesh = np.stack(np.meshgrid(*([k] * spec.dim), indexing="ij"), axis=-1)
    mesh.setflags(write=False)
    return mesh


@lru_cache(maxsize=64)
def space_mesh(spec: GridSpec) -> np.ndarray:
    x = axis_points(spec)
    mesh = np.stack(np.meshgrid(*([x] * spec.dim), indexing="ij"), axis=-1)
    mesh.setflags(write=False)
    return mesh


@lru_cache(maxsize=64)
def _phase(spec: GridSpec) -> np.ndarray:
    # e^{i L xi_k} = (-1)^{m_1 + ... + m_d} for signed FFT indices m.
    m = np.fft.fftfreq(spec.n, 1.0 / spec.n).astype(np.int64)
    total = np.zeros(spec.shape, dtype=np.int64)
    for ax in range(spec.dim):
        sh = [1] * spec.dim
        sh[ax] = spec.n
        total = total + m.reshape(sh)
    ph = np.where(total % 2 == 0, 1.0, -1.0)
    ph.setflags(write=False)
    return ph


@dataclass(frozen=True, eq=False)
class GridFunction:
    spec: GridSpec
    values: np.ndarray
    domain_tag: str = SPACE

    def __post_init__(self):
        if self.domain_tag not in (SPACE, FREQUENCY):
            raise GridError(f"unknown domain tag {self.domain_tag!r}")
        v = np.array(self.values, dtype=np.complex128)
        if v.size != self.spec.n**self.spec.dim:
            raise GridError("values length does not match the grid")
        v = v.reshape(self.spec.shape)
        v.setflags(write=False)
        object.__setattr__(self, "values", v)

    def l2_norm(self) -> float:
        vol = self.spec.cell_volume if self.domain_tag == SPACE else self.spec.freq_cell_volume / (2 * np.pi) ** self.spec.dim
        return float(np.sqrt(np.sum(np.abs(self.values) ** 2) * vol))

    def scaled(self, c: complex) -> "GridFunction":
        return GridFunction(self.spec, c * self.values, self.domain_tag)

    def on(self, spec: GridSpec) -> "GridFunction":
        """Reinterpret the same samples on another grid of identical shape."""
        if spec.shape != self.spec.shape:
            raise GridError("shape mismatch")
        return GridFunction(spec, self.values, self.domain_tag)


def _check_tag(f: GridFunction, tag: str) -> None:
    if f.domain_tag != tag:
        raise GridError(f"expected a {tag}-domain function, got {f.domain_tag}")


def forward_array(spec: GridSpec, values: np.ndarray, workers: int | None = None) -> np.ndarray:
    """Forward transform on the trailing d axes (leading axes are batch)."""
    axes = tuple(range(-spec.dim, 0))
    workers = _WORKERS[0] if workers is None else workers
    return sfft.fftn(values, axes=axes, workers=workers) * (_phase(spec) * spec.cell_volume)


def inverse_array(spec: GridSpec, values: np.ndarray, workers: int | None = None) -> np.ndarray:
    axes = tuple(range(-spec.dim, 0))
    workers = _WORKERS[0] if workers is None else workers
    return sfft.ifftn(values * _phase(spec), axes=axes, workers=workers) / spec.cell_volume


def inverse_rows(spec: GridSpec, sub: np.ndarray, rows: np.ndarray, workers: int | None = None) -> np.ndarray:
    """inverse_array of a spectrum that vanishes off the listed indices of the first frequency axis.

    ``sub`` holds only those rows (batch axes first). The transform over the
    remaining axes runs on the rows alone, which saves work when few rows are live.
    """
    workers = _WORKERS[0] if workers is None else workers
    ax0 = sub.ndim - spec.dim
    ph = _phase(spec)[rows]
    part = sub * ph
    if spec.dim > 1:
        part = sfft.ifftn(part, axes=tuple(range(-spec.dim + 1, 0)), workers=workers)
    full = np.zeros(sub.shape[:ax0] + spec.shape, dtype=complex)
    full[(Ellipsis, rows) + (slice(None),) * (spec.dim - 1)] = part
    return sfft.ifft(full, axis=ax0, workers=workers) / spec.cell_volume


def dft_forward(f: GridFunction) -> GridFunction:
    _check_tag(f, SPACE)
    return GridFunction(f.spec, forward_array(f.spec, f.values), FREQUENCY)


def dft_inverse(F: GridFunction) -> GridFunction:
    _check_tag(F, FREQUENCY)
    return GridFunction(F.spec, inverse_array(F.spec, F.values), SPACE)


# ---------------------------------------------------------------- annuli


@dataclass(frozen=True, eq=False)
class AnnulusDecomposition:
    spec: GridSpec
    l_min: int
    l_max: int
    masks: tuple
    # exact per-level area fractions of the (2k+1)^2 cells around the origin, or None
    fractions: np.ndarray | None = None
    # annuli below l_min lie inside the origin cell and are summed in closed form
    inner_tail: bool = False

    @property
    def block(self) -> int:
        return 0 if self.fractions is None else (self.fractions.shape[1] - 1) // 2

    def block_slice(self) -> tuple:
        c, k = self.spec.n // 2, self.block
        return (slice(c - k, c + k + 1),) * 2

    @property
    def levels(self) -> range:
        return range(self.l_min, self.l_max + 1)

    def covered(self) -> np.ndarray:
        out = np.zeros(self.spec.shape, dtype=bool)
        for m in self.masks:
            out |= m
        return out

    def shifted(self, spec: GridSpec, shift: int) -> "AnnulusDecomposition":
        """Index-shifted copy on a companion grid: level l here becomes l - shift there."""
        return AnnulusDecomposition(spec, self.l_min - shift, self.l_max - shift, self.masks, self.fractions, self.inner_tail)


def default_l_min(spec: GridSpec) -> int:
    return int(np.floor(np.log2(0.5 * spec.spacing)))


def default_l_max(spec: GridSpec) -> int:
    return int(np.floor(np.log2(spec.half_width))) - 1


def annuli(spec: GridSpec, l_min: int | None = None, l_max: int | None = None) -> AnnulusDecomposition:
    """Masks of 2^l <= |x| < 2^{l+1} at cell centers; the origin cell counts as radius h/2.

    In two dimensions the cells near the origin also carry exact area fractions
    per annulus, which the norms in ``spaces`` use instead of the masks there.
    """
    l_min = default_l_min(spec) if l_min is None else int(l_min)
    l_max = default_l_max(spec) if l_max is None else int(l_max)
    if l_max < l_min:
        raise GridError("l_max < l_min")
    if 2.0 ** (l_max + 1) > spec.half_width:
        raise GridError(f"annulus 2^{l_max + 1} exceeds the box half-width {spec.half_width}")
    r = regularized_radius(spec)
    level = np.floor(np.log2(r)).astype(np.int64)
    # guard against log2 rounding at exact powers of two
    level = np.where(2.0 ** (level + 1) <= r, level + 1, level)
    level = np.where(2.0**level > r, level - 1, level)
    masks = []
    for l in range(l_min, l_max + 1):
        m = level == l
        m.setflags(write=False)
        masks.append(m)
    fractions = None
    if spec.dim == 2:
        k = min(ORIGIN_CELLS, spec.n // 2 - 1)
        fractions = _annulus_fractions(spec.spacing, k, l_min, l_max)
        fractions.setflags(write=False)
    inner_tail = spec.dim == 2 and 2.0**l_min <= 0.5 * spec.spacing
    return AnnulusDecomposition(spec, l_min, l_max, tuple(masks), fractions, inner_tail)


def _quarter_disc_rect(x: np.ndarray, y: np.ndarray, R: float) -> np.ndarray:
    """Area of [0, x] x [0, y] inside the disc of radius R, for x, y >= 0."""
    a = np.sqrt(np.maximum(R * R - y * y, 0.0))

    def G(u):
        return 0.5 * (u * np.sqrt(np.maximum(R * R - u * u, 0.0)) + R * R * np.arcsin(np.clip(u / R, -1.0, 1.0)))

    xa = np.minimum(a, x)
    return y * xa + G(np.minimum(x, R)) - G(xa)


def _disc_cell_area(x0, x1, y0, y1, R: float) -> np.ndarray:
    def A(x, y):
        return np.sign(x) * np.sign(y) * _quarter_disc_rect(np.abs(x), np.abs(y), R)

    return A(x1, y1) - A(x0, y1) - A(x1, y0) + A(x0, y0)


def _annulus_fractions(h: float, k: int, l_min: int, l_max: int) -> np.ndarray:
    """Fraction of each cell |i|, |j| <= k lying in 2^l <= |x| < 2^{l+1}, per level."""
    c = np.arange(-k, k + 1) * h
    X, Y = np.meshgrid(c, c, indexing="ij")
    x0, x1, y0, y1 = X - h / 2, X + h / 2, Y - h / 2, Y + h / 2
    discs = [_disc_cell_area(x0, x1, y0, y1, 2.0**l) for l in range(l_min, l_max + 2)]
    frac = np.array([discs[i + 1] - discs[i] for i in range(l_max - l_min + 1)]) / (h * h)
    return np.clip(frac, 0.0, 1.0)


# ---------------------------------------------------------------- test bank

FAMILIES = ("gaussian", "modulated_gaussian", "smoothed_annulus", "band_limited")


@dataclass(frozen=True, eq=False)
class TestBank:
    __test__ = False

    seed: int
    entries: tuple
    labels: tuple
    shells: tuple = field(default=())

    def __len__(self) -> int:
        return len(self.entries)

    def values(self) -> np.ndarray:
        return np.stack([e.values for e in self.entries])


def _normalize(spec: GridSpec, v: np.ndarray) -> np.ndarray:
    return v / np.sqrt(np.sum(np.abs(v) ** 2) * spec.cell_volume)


def _shell_profile(rad: np.ndarray, center: float, sigma: float) -> np.ndarray:
    u = (rad - center) / sigma
    return np.where(np.abs(u) <= 9.0, np.exp(-0.5 * u * u), 0.0)


def make_bank(
    spec: GridSpec,
    seed: int,
    count: int,
    *,
    width: float | None = None,
    dilation: float = 1.0,
    families: tuple = FAMILIES,
) -> TestBank:
    """Deterministic bank cycling through the families in order.

    Entry ``i`` uses family ``families[i % len(families)]`` and parameters drawn
    from ``numpy.random.default_rng(seed)``:

    * gaussian: ``exp(-|x-c|^2/(2 s^2))``
    * modulated_gaussian: the same times ``exp(i<k,x>)`` with ``2/s <= |k| <= 4/s``
    * smoothed_annulus: ``(erf((|x-c|-r0)/w) - erf((|x-c|-r1)/w))/2``
    * band_limited: ``f^(xi) = g(|xi|) sum_j a_j exp(-i<c_j,xi>)`` with ``g`` a Gaussian
      shell truncated at 9 standard deviations, so the spectrum lies in the
      declared shell ``bank.shells[i]``.

    ``s`` is drawn from ``width * [0.7, 1.4]`` (default width ``L/12``).
    ``dilation`` replaces every entry by ``f(dilation * x)`` before the unit
    L2 normalization; the random draws do not depend on it.
    """
    from scipy.special import erf

    if count < 1:
        raise GridError("count must be >= 1")
    width = spec.half_width / 12.0 if width is None else float(width)
    rng = np.random.default_rng(seed)
    X = space_mesh(spec) * dilation
    K = frequency_mesh(spec) / dilation
    entries, labels, shells = [], [], []
    for i in range(count):
        fam = families[i % len(families)]
        s = width * rng.uniform(0.7, 1.4)
        c = rng.uniform(-0.25, 0.25, spec.dim) * s
        shell = None
        if fam == "gaussian":
            v = np.exp(-np.sum((X - c) ** 2, axis=-1) / (2 * s * s)).astype(complex)
        elif fam == "modulated_gaussian":
            direction = rng.normal(size=spec.dim)
            direction /= np.linalg.norm(direction)
            k = direction * rng.uniform(2.0, 4.0) / s
            v = np.exp(-np.sum((X - c) ** 2, axis=-1) / (2 * s * s) + 1j * (X @ k))
        elif fam == "smoothed_annulus":
            r0 = s * rng.uniform(0.8, 1.2)
            r1 = r0 + s * rng.uniform(0.8, 1.5)
            w = 0.3 * s
            rr = np.sqrt(np.sum((X - c) ** 2, axis=-1))
            v = (0.5 * (erf((rr - r0) / w) - erf((rr - r1) / w))).astype(complex)
        elif fam == "band_limited":
            sigma = 1.0 / s
            center = 10.0 / s
            kr = np.sqrt(np.sum(K**2, axis=-1))
            g = _shell_profile(kr, center, sigma)
            n_atoms = 3
            centers = rng.uniform(-1.0, 1.0, (n_atoms, spec.dim)) * s
            amps = rng.normal(size=n_atoms) + 1j * rng.normal(size=n_atoms)
            F = np.zeros(spec.shape, dtype=complex)
            for a, cj in zip(amps, centers):
                F += a * np.exp(-1j * (K @ cj))
            v = inverse_array(spec, g * F)
            shell = ((center - 9 * sigma) * dilation, (center + 9 * sigma) * dilation)
        else:
            raise GridError(f"unknown family {fam!r}")
        entries.append(GridFunction(spec, _normalize(spec, v), SPACE))
        labels.append(fam)
        shells.append(shell)
    return TestBank(int(seed), tuple(entries), tuple(labels), tuple(shells))


def boundary_max(f: GridFunction) -> float:
    """Largest |f| on the outermost layer of cells relative to the sup of |f|."""
    v = np.abs(f.values)
    edge = np.zeros(f.spec.shape, dtype=bool)
    for ax in range(f.spec.dim):
        idx = [slice(None)] * f.spec.dim
        idx[ax] = 0
        edge[tuple(idx)] = True
        idx[ax] = -1
        edge[tuple(idx)] = True
    return float(v[edge].max() / v.max())


# ---------------------------------------------------------------- serialization


def to_csv(f: GridFunction) -> str:
    header = {"dim": f.spec.dim, "n": f.spec.n, "half_width": f.spec.half_width, "domain_tag": f.domain_tag}
    buf = io.StringIO()
    buf.write("# " + json.dumps(header, sort_keys=True) + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow([f"i{a}" for a in range(f.spec.dim)] + ["re", "im"])
    flat = f.values.reshape(-1)
    for lin, idx in enumerate(np.ndindex(*f.spec.shape)):
        z = flat[lin]
        w.writerow(list(idx) + [f"{z.real:.17g}", f"{z.imag:.17g}"])
    return buf.getvalue()


def from_csv(text: str) -> GridFunction:
    first, rest = text.split("\n", 1)
    if not first.startswith("# "):
        raise GridError("missing JSON header line")
    hdr = json.loads(first[2:])
    spec = make_grid(hdr["dim"], hdr["n"], hdr["half_width"])
    rows = list(csv.reader(io.StringIO(rest)))[1:]
    vals = np.empty(spec.shape, dtype=complex)
    for row in rows:
        idx = tuple(int(c) for c in row[: spec.dim])
        vals[idx] = float(row[spec.dim]) + 1j * float(row[spec.dim + 1])
    return GridFunction(spec, vals, hdr["domain_tag"])
