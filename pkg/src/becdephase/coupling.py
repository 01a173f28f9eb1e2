"""
Impurity geometry and impurity-bath coupling frequencies.

Sites sit on the lattice axis ``x``; the left and right wells of site ``i``
are at ``x_i - L`` and ``x_i + L``. A pseudospin bit ``n_i = 0`` means the
impurity occupies the left well, ``n_i = 1`` the right one.

The ``*_average`` helpers return geometric factors of the kernels: for
``d == 3`` the average over the direction of ``k`` (the lattice axis being
the polar axis), for ``d == 1`` the factor itself at ``k_x = k``.
"""

from __future__ import annotations

import warnings
from math import comb
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .bogoliubov import uv_suppression
from .params import HBAR, DerivedScales, PhysicalParams, derive_scales


def sinc(y):
    """``sin(y)/y`` with the removable value 1 at ``y = 0``."""
    return np.sinc(np.asarray(y, dtype=float) / np.pi)


@dataclass(frozen=True)
class Geometry:
    L: float
    D: float
    sigma: float
    sites: tuple[float, ...] = (0.0,)

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.L > 0:
            raise ValueError("L must be positive")
        xs = np.asarray(self.sites, dtype=float)
        if xs.size > 1:
            gaps = np.abs(xs[:, None] - xs[None, :])[~np.eye(xs.size, dtype=bool)]
            if np.any(gaps < 2 * self.L):
                raise ValueError("double wells of distinct sites overlap (|x_i - x_j| < 2L)")
        if 2 * self.L < 4 * self.sigma:
            warnings.warn(f"wells are not well separated: 2L = {2 * self.L:.3g} < 4 sigma "
                          f"= {4 * self.sigma:.3g}", stacklevel=2)

    @classmethod
    def chain(cls, n_sites: int, L: float, D: float, sigma: float) -> "Geometry":
        """``n_sites`` double wells spaced by ``2D`` starting at the origin."""
        return cls(L=L, D=D, sigma=sigma, sites=tuple(2.0 * D * i for i in range(n_sites)))

    @classmethod
    def from_params(cls, p: PhysicalParams, n_sites: int = 1,
                    scales: DerivedScales | None = None) -> "Geometry":
        s = derive_scales(p) if scales is None else scales
        return cls.chain(n_sites, p.L, p.D, s.sigma)

    @property
    def n_sites(self) -> int:
        return len(self.sites)

    def well_position(self, i: int, p: str) -> float:
        if p == "L":
            return self.sites[i] - self.L
        if p == "R":
            return self.sites[i] + self.L
        raise ValueError(f"well must be 'L' or 'R', got {p!r}")

    def scaled(self, factor: float) -> "Geometry":
        return Geometry(L=self.L * factor, D=self.D * factor, sigma=self.sigma * factor,
                        sites=tuple(x * factor for x in self.sites))

    def separations(self) -> np.ndarray:
        xs = np.asarray(self.sites, dtype=float)
        return xs[:, None] - xs[None, :]


def as_config(bits: Sequence[int] | str) -> tuple[int, ...]:
    """Normalise a pseudospin configuration (``"01"`` or ``[0, 1]``)."""
    if isinstance(bits, str):
        bits = [int(c) for c in bits]
    out = tuple(int(b) for b in bits)
    if any(b not in (0, 1) for b in out):
        raise ValueError(f"pseudospin bits must be 0 or 1, got {bits!r}")
    return out


def check_pair(n, m, n_sites: int | None = None):
    n, m = as_config(n), as_config(m)
    if len(n) != len(m):
        raise ValueError(f"configuration length mismatch: {len(n)} vs {len(m)}")
    if n_sites is not None and len(n) != n_sites:
        raise ValueError(f"configuration has {len(n)} sites, geometry has {n_sites}")
    return n, m


@dataclass(frozen=True)
class CouplingModel:
    """Everything needed to evaluate the coupling frequencies in SI units."""

    g_AB: float
    n0: float
    g_B: float
    m_B: float
    geometry: Geometry
    hbar: float = HBAR

    @classmethod
    def from_params(cls, p: PhysicalParams, n_sites: int = 1, *, interacting: bool = True,
                    geometry: Geometry | None = None) -> "CouplingModel":
        s = derive_scales(p)
        geom = Geometry.from_params(p, n_sites, s) if geometry is None else geometry
        return cls(g_AB=s.g_AB, n0=p.n0, g_B=s.g_B if interacting else 0.0, m_B=p.m_B,
                   geometry=geom)

    def amplitude(self, k):
        """``|Omega|``: common modulus of all coupling frequencies at ``|k|``."""
        k = np.asarray(k, dtype=float)
        uv = np.sqrt(uv_suppression(k, self.g_B, self.n0, self.m_B, hbar=self.hbar))
        return self.g_AB * np.sqrt(self.n0) / self.hbar * uv * np.exp(-(k * self.geometry.sigma) ** 2 / 4)

    def omega(self, i: int, p: str, kvec):
        """Coupling frequency of well ``p`` of site ``i`` to the mode ``kvec``.

        ``kvec`` has shape ``(..., d)`` (or is a plain array of ``k_x`` in
        1D). Box normalisation of the mode functions is not included.
        """
        kvec = np.asarray(kvec, dtype=float)
        if kvec.ndim == 0 or kvec.shape[-1] not in (1, 3):
            kvec = kvec[..., None]
        kmag = np.linalg.norm(kvec, axis=-1)
        x = self.geometry.well_position(i, p)
        return self.amplitude(kmag) * np.exp(1j * kvec[..., 0] * x)

    def diff_coupling_sq(self, kvec, n, m):
        """``|sum_i (m_i - n_i)(Omega_R^i - Omega_L^i)|**2`` at each mode."""
        n, m = check_pair(n, m, self.geometry.n_sites)
        total = 0j
        for i, (ni, mi) in enumerate(zip(n, m)):
            if ni != mi:
                total = total + (mi - ni) * (self.omega(i, "R", kvec) - self.omega(i, "L", kvec))
        return np.abs(total) ** 2 * np.ones(np.shape(self.omega(0, "L", kvec)))

    def mean_field_shift(self) -> float:
        return mean_field_shift(self.n0, self.g_AB)


def mean_field_shift(n0: float, g_AB: float) -> float:
    """Level shift ``n0 g_AB`` (J) of every impurity state."""
    return n0 * g_AB


# -- geometric factors ---------------------------------------------------------

def avg_cos(k, X, d: int):
    """Average of ``cos(k_x X)``."""
    k = np.asarray(k, dtype=float)
    return sinc(k * X) if d == 3 else np.cos(k * X)


def _sinc_series(y, moments):
    """``sum_n (-1)**n moments[n] y**(2n) / (2n+1)!`` for ``n >= 1``."""
    out = np.zeros_like(y)
    term = np.ones_like(y)
    for n in range(1, len(moments)):
        term = term * (-(y**2)) / ((2 * n) * (2 * n + 1))
        out = out + moments[n] * term
    return out


_SERIES_TERMS = 13


def even_sinc_difference(k, A, B):
    """``sinc(k(A+B))/2 + sinc(k(A-B))/2 - sinc(kA)`` without cancellation.

    For ``k (|A| + |B|) < 1`` the Taylor series is summed with the moments
    ``((A+B)**2n + (A-B)**2n)/2 - A**2n`` expanded into positive binomial
    terms, so long-wavelength values keep full relative accuracy.
    """
    k = np.asarray(k, dtype=float)
    scale = abs(A) + abs(B)
    small = k * scale < 1.0
    direct = 0.5 * sinc(k * (A + B)) + 0.5 * sinc(k * (A - B)) - sinc(k * A)
    if not np.any(small) or scale == 0:
        return direct
    moments = [0.0] + [sum(comb(2 * n, 2 * j) * A ** (2 * n - 2 * j) * B ** (2 * j)
                           for j in range(1, n + 1)) for n in range(1, _SERIES_TERMS)]
    return np.where(small, _sinc_series(k, moments), direct)


def odd_sinc_difference(k, A, B):
    """``(sinc(k(A-B)) - sinc(k(A+B)))/2``, series-summed at small ``k``."""
    k = np.asarray(k, dtype=float)
    scale = abs(A) + abs(B)
    small = k * scale < 1.0
    direct = 0.5 * (sinc(k * (A - B)) - sinc(k * (A + B)))
    if not np.any(small) or scale == 0:
        return direct
    moments = [0.0] + [-sum(comb(2 * n, j) * A ** (2 * n - j) * B**j
                            for j in range(1, 2 * n + 1, 2)) for n in range(1, _SERIES_TERMS)]
    return np.where(small, _sinc_series(k, moments), direct)


def sin2_cos_average(k, X, L, d: int):
    """Average of ``sin(k_x L)**2 cos(k_x X)``."""
    if d == 1:
        k = np.asarray(k, dtype=float)
        return np.sin(k * L) ** 2 * np.cos(k * X)
    return -0.5 * even_sinc_difference(k, X, 2 * L)


def sin2L_sin_average(k, X, L, d: int):
    """Average of ``sin(2 k_x L) sin(k_x X)``."""
    if d == 1:
        k = np.asarray(k, dtype=float)
        return np.sin(2 * k * L) * np.sin(k * X)
    return odd_sinc_difference(k, 2 * L, X)


def form_factor(k, geometry: Geometry, w, d: int):
    """Average of ``sin(k_x L)**2 |sum_i w_i exp(i k_x x_i)|**2``.

    ``|Omega_R - Omega_L|``-type factors reduce to this times
    ``4 |Omega|**2``.
    """
    w = np.asarray(w, dtype=float)
    k = np.asarray(k, dtype=float)
    seps = geometry.separations()
    out = np.zeros_like(k)
    idx = np.nonzero(w)[0]
    for a in idx:
        for b in idx:
            if b < a:
                continue
            mult = 1.0 if a == b else 2.0
            out = out + mult * w[a] * w[b] * sin2_cos_average(k, seps[a, b], geometry.L, d)
    return out


def single_factor(k, L, d: int):
    """Form factor of one site with ``w = (1,)``."""
    if d == 1:
        return np.sin(np.asarray(k, dtype=float) * L) ** 2
    # 0.5 (1 - sinc(2kL)), with the small-argument series to avoid cancellation
    y = 2.0 * np.asarray(k, dtype=float) * L
    small = np.abs(y) < 1e-3
    ys = np.where(small, 1.0, y)
    series = y**2 / 6 - y**4 / 120 + y**6 / 5040
    return 0.5 * np.where(small, series, 1.0 - np.sin(ys) / ys)


def pair_factors(k, L, D, d: int):
    """Form factors of two sites ``2D`` apart: ``(g1, g2, gdelta)``.

    ``g1`` belongs to the pair ``00/11``, ``g2`` to ``10/01`` and ``gdelta``
    to the collective deviation; ``g1 + g2 == 4 * single_factor`` and
    ``g2 - g1 == 2 * gdelta``.
    """
    g0 = single_factor(k, L, d)
    if d == 1:
        k = np.asarray(k, dtype=float)
        cross = -2.0 * np.sin(k * L) ** 2 * np.cos(2 * k * D)
    else:
        cross = even_sinc_difference(k, 2 * D, 2 * L)
    return 2 * g0 - cross, 2 * g0 + cross, cross
