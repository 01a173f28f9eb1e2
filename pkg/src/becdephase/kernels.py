"""
Decoherence exponents and spectral density of impurities in a homogeneous
Bose gas, evaluated as radial integrals in reduced units.

Every exponent has the form::

    Gamma(t) = 4 M_d kappa * int_0^kmax dk k**(d-1) (1 - cos E t) eps/E**3
               * exp(-k**2 sigma**2 / 2) * coth(beta E / 2) * G(k)

with ``M_3 = 1/(2 pi**2)``, ``M_1 = 1/pi``, ``kappa = g_AB**2 n0 k_L**d /
E_R**2`` and ``G`` a geometric form factor from :mod:`becdephase.coupling`.
A free Bose gas is the same expression with ``g_B = 0``.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import coupling
from .bogoliubov import bogo_energy, epsilon, uv_suppression, wavenumber_of_energy
from .coupling import Geometry, check_pair
from .params import (HBAR, DerivedScales, PhysicalParams, ReducedParams, derive_scales,
                     to_reduced_units)
from .quadrature import (QuadratureSpec, integrate_radial, merge_breakpoints,
                         phase_breakpoints, uniform_breakpoints)

THREADS_ENV = "BECDEPHASE_THREADS"
KINDS = ("Gamma0", "Gamma1", "Gamma2", "delta", "gamma0", "gamma1", "gamma2", "general")
CUTOFF_SIGMAS = 8.0


def default_workers() -> int:
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


def stable_coth(x):
    """``coth(x)`` for ``x > 0`` as ``1 + 2/expm1(2x)``; exactly 1 at ``x = inf``."""
    x = np.asarray(x, dtype=float)
    with np.errstate(over="ignore"):
        return 1.0 + 2.0 / np.expm1(2.0 * x)


@dataclass(frozen=True)
class Bath:
    """A homogeneous bath in reduced units (energy ``E_R``, length ``1/k_L``)."""

    params: PhysicalParams
    interacting: bool = True

    @classmethod
    def from_params(cls, p: PhysicalParams, interacting: bool = True) -> "Bath":
        return cls(params=p, interacting=interacting)

    @property
    def scales(self) -> DerivedScales:
        return derive_scales(self.params)

    @property
    def reduced(self) -> ReducedParams:
        return to_reduced_units(self.params, self.scales)

    @property
    def kind(self) -> str:
        return "condensate" if self.interacting else "free"

    @property
    def d(self) -> int:
        return self.params.d

    def with_params(self, **changes) -> "Bath":
        return Bath(self.params.with_overrides(**changes), self.interacting)

    def free(self) -> "Bath":
        return Bath(self.params, False)

    def geometry(self, n_sites: int = 1, D: float | None = None) -> Geometry:
        """SI geometry of a chain of ``n_sites`` wells (``D`` overrides the params)."""
        D = self.params.D if D is None else D
        return Geometry.chain(n_sites, self.params.L, D, self.scales.sigma)

    def describe(self) -> dict:
        return {"kind": self.kind, "d": self.d, "T": self.params.T}


class _Reduced:
    """Cached reduced-unit quantities used by the integrands."""

    def __init__(self, bath: Bath):
        r = bath.reduced
        self.r = r
        self.d = r.d
        self.mu = r.mass_ratio
        self.m_B = 1.0 / (2.0 * r.mass_ratio)  # so that eps = mu k**2 with hbar = 1
        self.ng = r.n0g_B if bath.interacting else 0.0
        self.sigma = r.sigma
        self.beta = r.beta
        self.coupling = r.coupling
        self.measure = 1.0 / (2.0 * math.pi**2) if r.d == 3 else 1.0 / math.pi
        self.k_max = CUTOFF_SIGMAS / r.sigma

    def eps(self, k):
        return epsilon(k, self.m_B, hbar=1.0)

    def energy(self, k):
        return bogo_energy(k, 1.0, self.ng, self.m_B, hbar=1.0)

    def k_of_energy(self, E):
        return wavenumber_of_energy(E, 1.0, self.ng, self.m_B, hbar=1.0)

    def weight(self, k):
        """``k**(d-1) eps/E**3 exp(-k**2 sigma**2/2)`` (without the time factor)."""
        eps = self.eps(k)
        if self.ng == 0:
            w = 1.0 / eps**2
        else:
            w = 1.0 / (np.sqrt(eps * (eps + 2 * self.ng)) * (eps + 2 * self.ng))
        w = w * np.exp(-0.5 * (k * self.sigma) ** 2)
        return w * k**2 if self.d == 3 else w

    def thermal(self, E):
        if math.isinf(self.beta):
            return 1.0
        return stable_coth(0.5 * self.beta * E)


def _resolve_spec(spec: QuadratureSpec | None, red: _Reduced, k_L: float) -> tuple[QuadratureSpec, float]:
    spec = QuadratureSpec() if spec is None else spec
    k_max = red.k_max if spec.k_max is None else spec.k_max / k_L
    return spec, k_max


def _breakpoints(red: _Reduced, t: float, k_max: float, max_length: float):
    grids = [uniform_breakpoints(k_max, 0.5 / red.sigma)]
    if max_length > 0:
        grids.append(uniform_breakpoints(k_max, math.pi / (2.0 * max_length)))
    if t > 0:
        grids.append(phase_breakpoints(k_max, lambda k: red.energy(k) * t, red.k_of_energy))
    return merge_breakpoints(k_max, *grids)


@dataclass
class DecoherenceCurve:
    times: np.ndarray
    values: np.ndarray
    errors: np.ndarray
    kind: str
    bath: dict
    geometry: dict
    quadrature: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown curve kind {self.kind!r}")

    @property
    def label(self) -> str:
        return f"{self.kind}_{self.bath['kind']}"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "bath": self.bath,
            "geometry": self.geometry,
            "quadrature": self.quadrature,
            "times": [float(x) for x in self.times],
            "values": [float(x) for x in self.values],
            "errors": [float(x) for x in self.errors],
        }


def _geometry_dict(geometry: Geometry) -> dict:
    return {"L": geometry.L, "D": geometry.D, "sigma": geometry.sigma, "sites": list(geometry.sites)}


def evaluate_exponents(bath: Bath, times, factors: Sequence[Callable], max_length: float,
                       spec: QuadratureSpec | None = None, workers: int | None = None):
    """Integrate several form factors against the decoherence weight.

    ``factors`` are callables ``G(k)`` in reduced units. Returns
    ``(values, errors)`` of shape ``(len(factors), len(times))``; ``times``
    are in seconds. All factors share quadrature nodes at each time, so
    linear identities between them hold to rounding.
    """
    red = _Reduced(bath)
    spec, k_max = _resolve_spec(spec, red, red.r.k_L)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    t_red = red.r.time_to_reduced(times)
    pref = 4.0 * red.measure * red.coupling

    def one(t):
        if t == 0:
            z = np.zeros(len(factors))
            return z, z

        def integrand(k):
            E = red.energy(k)
            base = 2.0 * np.sin(0.5 * E * t) ** 2 * red.weight(k) * red.thermal(E)
            return np.stack([base * G(k) for G in factors])

        res = integrate_radial(integrand, spec, _breakpoints(red, t, k_max, max_length), k_max)
        return pref * res.value, pref * res.error

    workers = default_workers() if workers is None else workers
    if workers > 1 and len(t_red) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, t_red))
    else:
        results = [one(t) for t in t_red]
    values = np.array([r[0] for r in results]).T
    errors = np.array([r[1] for r in results]).T
    return values, errors


def secular_factor(x):
    """``x - sin(x)``, the phase accumulation of a driven mode, without cancellation."""
    x = np.asarray(x, dtype=float)
    small = np.abs(x) < 0.1
    xs = np.where(small, 0.0, x)
    x2 = x * x
    series = x * x2 / 6.0 * (1.0 - x2 / 20.0 * (1.0 - x2 / 42.0 * (1.0 - x2 / 72.0)))
    return np.where(small, series, xs - np.sin(xs))


def evaluate_phase_integrals(bath: Bath, times, factors: Sequence[Callable], max_length: float,
                             spec: QuadratureSpec | None = None, workers: int | None = None):
    """Integrate form factors against ``k**(d-1) (E t - sin E t) eps/E**3 e^{-k^2 s^2/2}``.

    Reduced units, no prefactor and no thermal factor (the phases come
    from the unitary part of the evolution). ``E t - sin E t`` is
    evaluated by :func:`secular_factor` and integrated directly on
    phase-resolved panels; splitting off the secular term ``E t`` would
    cancel catastrophically wherever ``E t`` is small over most of the
    range. Returns ``(values, errors)`` of shape ``(len(factors), len(times))``.
    """
    red = _Reduced(bath)
    spec, k_max = _resolve_spec(spec, red, red.r.k_L)
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise ValueError("times must be >= 0")
    t_red = red.r.time_to_reduced(times)

    def one(t):
        if t == 0:
            z = np.zeros(len(factors))
            return z, z

        def integrand(k):
            base = secular_factor(red.energy(k) * t) * red.weight(k)
            return np.stack([base * G(k) for G in factors])

        res = integrate_radial(integrand, spec, _breakpoints(red, t, k_max, max_length), k_max)
        return res.value, res.error

    workers = default_workers() if workers is None else workers
    if workers > 1 and len(t_red) > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(one, t_red))
    else:
        results = [one(t) for t in t_red]
    return np.array([r[0] for r in results]).T, np.array([r[1] for r in results]).T


def _reduced_geometry(bath: Bath, geometry: Geometry | None, n_sites: int) -> Geometry:
    if geometry is None:
        geometry = bath.geometry(n_sites)
    return geometry.scaled(bath.scales.k_L)


def gamma_general(n, m, t, bath: Bath, geometry: Geometry | None = None,
                  spec: QuadratureSpec | None = None, *, return_error=False, workers=None):
    """Decoherence exponent of the coherence between configurations ``n`` and ``m``."""
    n, m = check_pair(n, m)
    geom_si = bath.geometry(len(n)) if geometry is None else geometry
    geom = _reduced_geometry(bath, geom_si, len(n))
    check_pair(n, m, geom.n_sites)
    w = np.array(m, dtype=float) - np.array(n, dtype=float)
    d = bath.d
    reach = float(np.max(np.abs(geom.separations()))) + 2 * geom.L
    values, errors = evaluate_exponents(
        bath, t, [lambda k: coupling.form_factor(k, geom, w, d)], reach, spec, workers)
    scalar = np.ndim(t) == 0
    v, e = (values[0, 0], errors[0, 0]) if scalar else (values[0], errors[0])
    return (v, e) if return_error else v


def _curve(kind, times, values, errors, bath, geometry, spec):
    spec = QuadratureSpec() if spec is None else spec
    return DecoherenceCurve(times=np.asarray(times, dtype=float), values=values, errors=errors,
                            kind=kind, bath=bath.describe(), geometry=_geometry_dict(geometry),
                            quadrature={"rel_tol": spec.rel_tol,
                                        "k_max": spec.k_max if spec.k_max else CUTOFF_SIGMAS / geometry.sigma,
                                        "max_abs_error": float(np.max(errors)) if len(errors) else 0.0})


def gamma0_curve(times, bath: Bath, spec=None, workers=None) -> DecoherenceCurve:
    """Single-impurity exponent for a 1D or 3D bath."""
    geom_si = bath.geometry(1)
    L = geom_si.L * bath.scales.k_L
    d = bath.d
    values, errors = evaluate_exponents(bath, times, [lambda k: coupling.single_factor(k, L, d)],
                                        2 * L, spec, workers)
    kind = "Gamma0" if d == 3 else "gamma0"
    return _curve(kind, times, values[0], errors[0], bath, geom_si, spec)


def gamma0_3d(t, bath: Bath, spec=None, workers=None):
    if bath.d != 3:
        raise ValueError("gamma0_3d needs a three-dimensional bath")
    c = gamma0_curve(np.atleast_1d(t), bath, spec, workers)
    return c.values[0] if np.ndim(t) == 0 else c.values


def pair_curves(times, bath: Bath, D: float | None = None, spec=None, workers=None):
    """Single and two-impurity exponents on shared nodes.

    Returns a dict of :class:`DecoherenceCurve` keyed ``"0"``, ``"1"``,
    ``"2"`` and ``"delta"``. ``delta`` is integrated from its own form
    factor, not formed as a difference.
    """
    D = bath.params.D if D is None else D
    if D < bath.params.L:
        raise ValueError("D must be >= L")
    geom_si = bath.geometry(2, D)
    k_L = bath.scales.k_L
    L, Dr = geom_si.L * k_L, D * k_L
    d = bath.d
    factors = [
        lambda k: coupling.single_factor(k, L, d),
        lambda k: coupling.pair_factors(k, L, Dr, d)[0],
        lambda k: coupling.pair_factors(k, L, Dr, d)[1],
        lambda k: coupling.pair_factors(k, L, Dr, d)[2],
    ]
    values, errors = evaluate_exponents(bath, times, factors, 2 * (L + Dr), spec, workers)
    prefix = "Gamma" if d == 3 else "gamma"
    names = [prefix + "0", prefix + "1", prefix + "2", "delta"]
    return {key: _curve(name, times, values[i], errors[i], bath, geom_si, spec)
            for i, (key, name) in enumerate(zip(["0", "1", "2", "delta"], names))}


def gamma12_3d(t, bath: Bath, D: float | None = None, spec=None, workers=None):
    """``(Gamma1, Gamma2, delta)`` for two impurities ``2D`` apart in 3D."""
    if bath.d != 3:
        raise ValueError("gamma12_3d needs a three-dimensional bath")
    curves = pair_curves(np.atleast_1d(t), bath, D, spec, workers)
    out = tuple(curves[k].values for k in ("1", "2", "delta"))
    return tuple(v[0] for v in out) if np.ndim(t) == 0 else out


def gamma_1d(kind: str, t, bath: Bath, D: float | None = None, spec=None, workers=None):
    """``gamma0``, ``gamma1``, ``gamma2`` or ``delta`` of a 1D bath."""
    if bath.d != 1:
        raise ValueError("gamma_1d needs a one-dimensional bath")
    key = {"gamma0": "0", "gamma1": "1", "gamma2": "2", "delta": "delta"}[kind]
    curves = pair_curves(np.atleast_1d(t), bath, D, spec, workers)
    v = curves[key].values
    return v[0] if np.ndim(t) == 0 else v


def plateau_exponent(d: int, interacting: bool, thermal: bool) -> int:
    """Power of k in the plateau integrand as ``k -> 0``.

    Measure ``k**(d-1)``, form factor ``k**2``, ``eps/E**3`` (``1/k`` with
    a condensate, ``1/k**4`` without) and ``coth`` (``1/E`` at T > 0).
    """
    weight = -1 if interacting else -4
    coth = (-1 if interacting else -2) if thermal else 0
    return d - 1 + 2 + weight + coth


def plateau(bath: Bath, geometry_factor: str = "0", D=None, spec=None) -> float:
    """Long-time limit of an exponent (``1 - cos`` replaced by its mean, 1).

    Returns ``inf`` when the limit does not exist: the exponent then keeps
    growing because the small-k integrand is not integrable (free gas in 1D,
    or a free gas at T > 0 in 3D).
    """
    red = _Reduced(bath)
    if plateau_exponent(red.d, red.ng > 0, math.isfinite(red.beta)) <= -1:
        return math.inf
    spec, k_max = _resolve_spec(spec, red, red.r.k_L)
    k_L = red.r.k_L
    L = bath.params.L * k_L
    Dr = (bath.params.D if D is None else D) * k_L
    if geometry_factor == "0":
        G = lambda k: coupling.single_factor(k, L, red.d)
    else:
        idx = {"1": 0, "2": 1, "delta": 2}[geometry_factor]
        G = lambda k: coupling.pair_factors(k, L, Dr, red.d)[idx]
    res = integrate_radial(lambda k: red.weight(k) * G(k) * red.thermal(red.energy(k)), spec,
                           _breakpoints(red, 0.0, k_max, 2 * (L + Dr)), k_max)
    return float(4.0 * red.measure * red.coupling * res.value)


def spectral_density(omega, bath: Bath, geometry: Geometry | None = None):
    """Coupling-weighted density of modes per unit angular frequency (1/s).

    ``J(w) = sum_k |Omega_R - Omega_L|**2 delta(w - E_k/hbar)`` per unit
    volume of the bath, for a single double well. Then
    ``Gamma(t) = int dw J(w) (1 - cos w t) coth(beta hbar w/2) / w**2``.
    """
    omega = np.asarray(omega, dtype=float)
    if np.any(omega <= 0):
        raise ValueError("omega must be > 0")
    red = _Reduced(bath)
    geom = _reduced_geometry(bath, geometry, 1)
    E_R = red.r.E_R
    E = omega * HBAR / E_R
    k = red.k_of_energy(E)
    eps = red.eps(k)
    dk_dE = E / (2.0 * red.mu * k * (eps + red.ng))
    uv2 = uv_suppression(k, 1.0, red.ng, red.m_B, hbar=1.0)
    G = coupling.single_factor(k, geom.L, red.d)
    meas = k**2 if red.d == 3 else 1.0
    J_red = 4.0 * red.measure * red.coupling * meas * uv2 * np.exp(-0.5 * (k * red.sigma) ** 2) * G * dk_dE
    return J_red * E_R / HBAR


# -- time grids ----------------------------------------------------------------

def hybrid_time_grid(t_max=1e-3, n_log=60, n_lin=200, t_min=1e-9, t_switch=1e-6,
                     include_zero=True):
    """Log-spaced points from ``t_min`` to ``t_switch`` then linear to ``t_max``."""
    if not (0 < t_min < t_switch < t_max):
        raise ValueError("need 0 < t_min < t_switch < t_max")
    log = np.geomspace(t_min, t_switch, n_log, endpoint=False)
    lin = np.linspace(t_switch, t_max, n_lin)
    grid = np.concatenate([log, lin])
    return np.concatenate([[0.0], grid]) if include_zero else grid


def linear_time_grid(t_max, n):
    return np.linspace(0.0, t_max, n)
