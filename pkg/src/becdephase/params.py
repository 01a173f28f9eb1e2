"""
Physical inputs, derived coupling constants and the reduced unit system.

All user-facing quantities are SI. Internally the kernels work in units of
the impurity recoil energy ``E_R`` (energy), ``1/k_L`` (length) and
``hbar/E_R`` (time).
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, fields, replace
from typing import Optional

from scipy import constants as const

HBAR = const.hbar
K_B = const.k
BOHR = const.physical_constants["Bohr radius"][0]
AMU = const.physical_constants["atomic mass constant"][0]

M_NA23 = 22.98976928 * AMU
M_RB87 = 86.909180527 * AMU

# Rb-87 background scattering length; not fixed by the model, user-overridable.
A_B_RB87 = 99.0 * BOHR


class ParameterError(ValueError):
    """Raised when a physical input is outside its valid domain."""

    def __init__(self, field: str, message: str):
        super().__init__(f"{field}: {message}")
        self.field = field


@dataclass(frozen=True)
class PhysicalParams:
    """SI inputs for one impurity/bath configuration.

    ``L`` and ``D`` are half the intra-well and half the inter-site
    separations. For ``d == 1`` the coupling constants and density are
    effective 1D quantities; supply them through ``g_B_override`` and
    ``g_AB_override`` (J m) and ``n0`` (1/m).
    """

    m_A: float = M_NA23
    m_B: float = M_RB87
    a_B: float = A_B_RB87
    a_AB: float = 55.0 * BOHR
    n0: float = 1e20
    lam: float = 600e-9
    alpha_depth: float = 20.0
    L: float = 150e-9
    D: float = 300e-9
    T: float = 0.0
    d: int = 3
    sigma_override: Optional[float] = None
    g_B_override: Optional[float] = None
    g_AB_override: Optional[float] = None

    def __post_init__(self):
        for name in ("m_A", "m_B", "n0", "lam", "alpha_depth", "L"):
            value = getattr(self, name)
            if not (value > 0 and math.isfinite(value)):
                raise ParameterError(name, f"must be positive and finite, got {value!r}")
        if not self.a_B >= 0:
            raise ParameterError("a_B", f"must be >= 0, got {self.a_B!r}")
        if not math.isfinite(self.a_AB):
            raise ParameterError("a_AB", "must be finite")
        if not self.D >= self.L:
            raise ParameterError("D", f"must be >= L ({self.L!r}), got {self.D!r}")
        if not self.T >= 0:
            raise ParameterError("T", f"must be >= 0, got {self.T!r}")
        if self.d not in (1, 3):
            raise ParameterError("d", f"must be 1 or 3, got {self.d!r}")
        if self.sigma_override is not None and not self.sigma_override > 0:
            raise ParameterError("sigma_override", "must be positive")
        if self.g_B_override is not None and not self.g_B_override >= 0:
            raise ParameterError("g_B_override", "must be >= 0")

    def with_overrides(self, **changes) -> "PhysicalParams":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def field_names(cls) -> list[str]:
        return [f.name for f in fields(cls)]


@dataclass(frozen=True)
class DerivedScales:
    g_B: float
    g_AB: float
    m_AB: float
    E_R: float
    k_L: float
    omega: float
    sigma: float
    c_s: float
    beta: float  # math.inf at T = 0

    @property
    def zero_temperature(self) -> bool:
        return math.isinf(self.beta)

    def to_dict(self) -> dict:
        out = asdict(self)
        out["beta"] = None if self.zero_temperature else self.beta
        return out


def derive_scales(p: PhysicalParams) -> DerivedScales:
    """Coupling constants, lattice scales and inverse temperature for ``p``."""
    m_AB = p.m_A * p.m_B / (p.m_A + p.m_B)
    g_B = p.g_B_override if p.g_B_override is not None else 4 * math.pi * HBAR**2 * p.a_B / p.m_B
    g_AB = (p.g_AB_override if p.g_AB_override is not None
            else 2 * math.pi * HBAR**2 * p.a_AB / m_AB)
    k_L = 2 * math.pi / p.lam
    E_R = (HBAR * k_L) ** 2 / (2 * p.m_A)
    # harmonic approximation of a sin^2 lattice well of depth alpha*E_R
    omega = 2 * math.sqrt(p.alpha_depth) * E_R / HBAR
    if p.sigma_override is not None:
        sigma = p.sigma_override
    else:
        sigma = math.sqrt(HBAR / (p.m_A * omega))
    c_s = math.sqrt(p.n0 * g_B / p.m_B)
    kT = K_B * p.T
    # temperatures so low that 1/kT overflows are zero temperature
    beta = math.inf if kT == 0 or 1.0 / kT > 1e300 else 1.0 / kT
    return DerivedScales(g_B=g_B, g_AB=g_AB, m_AB=m_AB, E_R=E_R, k_L=k_L,
                         omega=omega, sigma=sigma, c_s=c_s, beta=beta)


@dataclass(frozen=True)
class ReducedParams:
    """Dimensionless copy of a parameter set.

    Lengths are multiplied by ``k_L``, energies divided by ``E_R`` and
    times multiplied by ``E_R/hbar``. ``mass_ratio`` is ``m_A/m_B`` so that
    the bath kinetic energy reads ``mass_ratio * k**2``. ``coupling`` is
    ``g_AB**2 n0 k_L**d / E_R**2``.
    """

    k_L: float
    E_R: float
    d: int
    mass_ratio: float
    L: float
    D: float
    sigma: float
    n0g_B: float
    n0g_AB: float
    coupling: float
    beta: float

    @property
    def time_unit(self) -> float:
        return HBAR / self.E_R

    def time_to_reduced(self, t):
        return t / self.time_unit

    def time_to_si(self, t):
        return t * self.time_unit

    def length_to_si(self, x):
        return x / self.k_L

    def energy_to_si(self, e):
        return e * self.E_R

    def wavenumber_to_reduced(self, k):
        return k / self.k_L

    def to_si(self, m_A: float) -> dict:
        """Reconstruct the SI quantities encoded in this object."""
        E_R, k_L = self.E_R, self.k_L
        return {
            "L": self.L / k_L,
            "D": self.D / k_L,
            "sigma": self.sigma / k_L,
            "m_B": m_A / self.mass_ratio,
            "n0g_B": self.n0g_B * E_R,
            "n0g_AB": self.n0g_AB * E_R,
            "g_AB2_n0": self.coupling * E_R**2 / k_L**self.d,
            "beta": self.beta / E_R,
        }


def to_reduced_units(p: PhysicalParams, s: Optional[DerivedScales] = None) -> ReducedParams:
    s = derive_scales(p) if s is None else s
    return ReducedParams(
        k_L=s.k_L,
        E_R=s.E_R,
        d=p.d,
        mass_ratio=p.m_A / p.m_B,
        L=p.L * s.k_L,
        D=p.D * s.k_L,
        sigma=s.sigma * s.k_L,
        n0g_B=p.n0 * s.g_B / s.E_R,
        n0g_AB=p.n0 * s.g_AB / s.E_R,
        coupling=s.g_AB**2 * p.n0 * s.k_L**p.d / s.E_R**2,
        beta=s.beta * s.E_R,
    )


def standard_3d() -> PhysicalParams:
    """Na-23 impurities in a Rb-87 condensate, 600 nm lattice, depth 20 E_R.

    ``2L = lambda/2`` and ``D = 2L``.
    """
    lam = 600e-9
    L = lam / 4
    return PhysicalParams(m_A=M_NA23, m_B=M_RB87, a_B=A_B_RB87, a_AB=55.0 * BOHR,
                          n0=1e20, lam=lam, alpha_depth=20.0, L=L, D=2 * L, T=0.0, d=3)


def standard_1d(transverse_length: Optional[float] = None) -> PhysicalParams:
    """One-dimensional analogue of :func:`standard_3d`.

    The effective 1D constants follow from squeezing the 3D ones into a
    transverse Gaussian mode of length ``transverse_length`` (default: the
    impurity ground-state width): ``g_1D = g_3D / (2 pi l**2)`` and
    ``n_1D = n_3D * 2 pi l**2``. This keeps ``n0 * g_B`` (the chemical
    potential) equal to the 3D value.
    """
    p3 = standard_3d()
    s3 = derive_scales(p3)
    ell = s3.sigma if transverse_length is None else transverse_length
    area = 2 * math.pi * ell**2
    return replace(p3, d=1, n0=p3.n0 * area,
                   g_B_override=s3.g_B / area, g_AB_override=s3.g_AB / area)


PRESETS = {
    "standard-3d": standard_3d,
    "standard-1d": standard_1d,
}


def load_preset(name: str) -> PhysicalParams:
    try:
        return PRESETS[name]()
    except KeyError:
        raise ParameterError("preset", f"unknown preset {name!r}; known: {sorted(PRESETS)}") from None
