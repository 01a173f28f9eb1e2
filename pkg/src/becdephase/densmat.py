"""
Reduced density matrix of N pseudospins under pure dephasing.

Basis ordering is little-endian: configuration ``(n_0, n_1, ..., n_{N-1})``
sits at index ``sum_i n_i 2**i``, so site 0 is the least significant bit.

Every element evolves as::

    rho_nm(t) = rho_nm(0) exp(-Gamma_nm) exp(i (Theta_nm + Xi_nm + Delta_nm))

In the continuum all exponents are linear combinations of a few radial
integrals that depend only on the separation ``X`` of two sites:

* ``T(X)``: the decay kernel, ``Gamma_nm = sum_ij w_i w_j T(X_ij)`` with
  ``w = m - n``;
* ``R(X)``: ``Theta_nm = sum_ij (s_i s_j - s'_i s'_j) R(X_ij)`` with the
  pseudospin signs ``s = 2n - 1``, ``s' = 2m - 1``;
* ``U(X)``: ``Xi_nm = sum_ij (n_i - m_i) U(X_ij)``.

``Delta`` vanishes in the continuum because its integrand is odd under
``k -> -k``; a finite asymmetric mode set (see :mod:`becdephase.oracle`)
gives a nonzero value.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import coupling
from .coupling import Geometry, as_config, check_pair
from .kernels import Bath, evaluate_exponents, evaluate_phase_integrals
from .quadrature import QuadratureSpec

MAX_SITES = 10
HERMITIAN_TOL = 1e-10
TRACE_TOL = 1e-10


class DensityMatrixError(ValueError):
    """The input is not a valid density matrix."""


def index_of(config) -> int:
    """Basis index of a configuration (site 0 least significant)."""
    return sum(b << i for i, b in enumerate(as_config(config)))


def config_of(index: int, n_sites: int) -> tuple[int, ...]:
    return tuple((index >> i) & 1 for i in range(n_sites))


def spin_signs(config) -> np.ndarray:
    """``s_i = 2 n_i - 1``: +1 for the right well, -1 for the left one."""
    return 2.0 * np.asarray(as_config(config), dtype=float) - 1.0


@dataclass(frozen=True)
class ReducedDensityMatrix:
    data: np.ndarray
    n_sites: int
    t: float = 0.0

    def __post_init__(self):
        data = np.array(self.data, dtype=complex)
        dim = 2**self.n_sites
        if data.shape != (dim, dim):
            raise DensityMatrixError(f"expected shape {(dim, dim)}, got {data.shape}")
        data.setflags(write=False)
        object.__setattr__(self, "data", data)

    @classmethod
    def from_array(cls, data, t: float = 0.0) -> "ReducedDensityMatrix":
        data = np.asarray(data, dtype=complex)
        n = int(round(math.log2(data.shape[0]))) if data.ndim == 2 and data.shape[0] > 0 else -1
        if n < 0 or 2**n != data.shape[0]:
            raise DensityMatrixError(f"dimension {data.shape} is not 2**N square")
        return cls(data, n, t)

    @classmethod
    def pure(cls, amplitudes) -> "ReducedDensityMatrix":
        psi = np.asarray(amplitudes, dtype=complex)
        psi = psi / np.linalg.norm(psi)
        return cls.from_array(np.outer(psi, psi.conj()))

    @property
    def dim(self) -> int:
        return self.data.shape[0]

    def element(self, n, m) -> complex:
        n, m = check_pair(n, m, self.n_sites)
        return complex(self.data[index_of(n), index_of(m)])

    def validate(self, tol: float = HERMITIAN_TOL, check_positive: bool = True):
        """Raise :class:`DensityMatrixError` unless Hermitian, unit-trace (and PSD)."""
        herm = float(np.max(np.abs(self.data - self.data.conj().T)))
        if herm > tol:
            raise DensityMatrixError(f"not Hermitian (max deviation {herm:.3g})")
        tr = complex(np.trace(self.data))
        if abs(tr - 1.0) > TRACE_TOL:
            raise DensityMatrixError(f"trace is {tr:.12g}, expected 1")
        if check_positive:
            lo = float(np.min(np.linalg.eigvalsh(0.5 * (self.data + self.data.conj().T))))
            if lo < -tol:
                raise DensityMatrixError(f"not positive semidefinite (eigenvalue {lo:.3g})")
        return self

    def to_json(self) -> str:
        """Rows of ``[re, im]`` pairs; see the module docstring for the basis order."""
        rows = [[[float(z.real), float(z.imag)] for z in row] for row in self.data]
        return json.dumps({"n_sites": self.n_sites, "t": self.t, "basis": "little-endian",
                           "data": rows})

    @classmethod
    def from_json(cls, text: str) -> "ReducedDensityMatrix":
        doc = json.loads(text)
        arr = np.array(doc["data"], dtype=float)
        return cls(arr[..., 0] + 1j * arr[..., 1], int(doc["n_sites"]), float(doc.get("t", 0.0)))


@dataclass(frozen=True)
class PhaseSet:
    """Phases (rad) of one coherence; ``cache`` keeps the separation integrals."""

    theta: float
    xi: float
    delta: float
    cache: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def total(self) -> float:
        return self.theta + self.xi + self.delta


@dataclass
class SeparationIntegrals:
    """``T``, ``R``, ``U`` for every ordered pair of sites at one time."""

    t: float
    T: np.ndarray  # (N, N), symmetric
    R: np.ndarray  # (N, N), symmetric
    U: np.ndarray  # (N, N), antisymmetric
    T_err: np.ndarray
    R_err: np.ndarray
    U_err: np.ndarray

    def gamma(self, n, m) -> float:
        w = np.asarray(m, dtype=float) - np.asarray(n, dtype=float)
        return float(w @ self.T @ w)

    def theta(self, n, m) -> float:
        s, sp = spin_signs(n), spin_signs(m)
        return float(s @ self.R @ s - sp @ self.R @ sp)

    def xi(self, n, m) -> float:
        v = np.asarray(n, dtype=float) - np.asarray(m, dtype=float)
        return float(v @ self.U.sum(axis=1))

    def per_config_phase(self, n) -> float:
        """``phi_n`` with ``Theta + Xi = phi_n - phi_m`` up to an n-independent constant."""
        s = spin_signs(n)
        return float(s @ self.R @ s + np.asarray(n, dtype=float) @ self.U.sum(axis=1))


def separation_integrals(t: float, bath: Bath, geometry: Geometry | None = None,
                         spec: QuadratureSpec | None = None, workers=None) -> SeparationIntegrals:
    """Evaluate the separation integrals of ``geometry`` at time ``t`` (s)."""
    if t < 0:
        raise ValueError("t must be >= 0")
    geom_si = bath.geometry(1) if geometry is None else geometry
    geom = geom_si.scaled(bath.scales.k_L)
    seps = geom.separations()
    d = bath.d
    L = geom.L
    # unique |X| for the even kernels; U is odd in X
    mags = np.unique(np.round(np.abs(seps), 12))
    reach = float(mags.max()) + 2 * L
    even = [lambda k, X=X: coupling.sin2_cos_average(k, X, L, d) for X in mags]
    odd = [lambda k, X=X: coupling.sin2L_sin_average(k, X, L, d) for X in mags]
    Tv, Te = evaluate_exponents(bath, t, even, reach, spec, workers)
    Pv, Pe = evaluate_phase_integrals(bath, t, even + odd, reach, spec, workers)
    red = bath.reduced
    measure = 1.0 / (2.0 * math.pi**2) if d == 3 else 1.0 / math.pi
    pref = measure * red.coupling
    nX = len(mags)
    lookup = {float(X): j for j, X in enumerate(mags)}
    idx = np.vectorize(lambda X: lookup[float(np.round(abs(X), 12))])(seps)
    sign = np.sign(seps)
    return SeparationIntegrals(
        t=float(t),
        T=Tv[idx, 0] * 1.0, T_err=Te[idx, 0] * 1.0,
        R=pref * Pv[idx, 0], R_err=pref * Pe[idx, 0],
        U=-2.0 * pref * sign * Pv[nX + idx, 0], U_err=2.0 * pref * Pe[nX + idx, 0],
    )


def phases(n, m, t: float, bath: Bath, geometry: Geometry | None = None,
           spec: QuadratureSpec | None = None, integrals: SeparationIntegrals | None = None) -> PhaseSet:
    """Continuum ``Theta``, ``Xi`` and ``Delta`` of the coherence ``(n, m)``."""
    n, m = check_pair(n, m)
    geometry = bath.geometry(len(n)) if geometry is None else geometry
    check_pair(n, m, geometry.n_sites)
    if integrals is None:
        integrals = separation_integrals(t, bath, geometry, spec)
    return PhaseSet(theta=integrals.theta(n, m), xi=integrals.xi(n, m), delta=0.0,
                    cache={"t": integrals.t, "R": integrals.R, "U": integrals.U})


def _as_density(rho0) -> ReducedDensityMatrix:
    if isinstance(rho0, ReducedDensityMatrix):
        return rho0
    return ReducedDensityMatrix.from_array(rho0)


def evolve(rho0, t: float, bath: Bath, geometry: Geometry | None = None,
           spec: QuadratureSpec | None = None, *, include_phases: bool = True,
           integrals: SeparationIntegrals | None = None) -> ReducedDensityMatrix:
    """Density matrix at time ``t`` (s); ``rho0`` is not modified.

    ``geometry`` defaults to a chain with the bath parameters' ``L`` and
    ``D`` and as many sites as ``rho0`` has.
    """
    rho = _as_density(rho0).validate()
    N = rho.n_sites
    if N > MAX_SITES:
        raise DensityMatrixError(f"evolve supports at most {MAX_SITES} sites; use element() instead")
    geometry = bath.geometry(N) if geometry is None else geometry
    if geometry.n_sites != N:
        raise DensityMatrixError(f"rho0 has {N} sites, geometry has {geometry.n_sites}")
    if t == 0:
        return ReducedDensityMatrix(rho.data.copy(), N, 0.0)
    if integrals is None:
        integrals = separation_integrals(t, bath, geometry, spec)
    # rows follow the little-endian basis
    w = np.array([config_of(a, N) for a in range(2**N)], dtype=float)
    s = 2.0 * w - 1.0
    quad_T = np.einsum("ai,ij,aj->a", w, integrals.T, w)
    cross_T = np.einsum("ai,ij,bj->ab", w, integrals.T, w)
    gamma = quad_T[:, None] + quad_T[None, :] - 2.0 * cross_T
    factor = np.exp(-gamma)
    if include_phases:
        phi = np.einsum("ai,ij,aj->a", s, integrals.R, s) + w @ integrals.U.sum(axis=1)
        factor = factor * np.exp(1j * (phi[:, None] - phi[None, :]))
    np.fill_diagonal(factor, 1.0)
    return ReducedDensityMatrix(rho.data * factor, N, float(t))


def element(rho0_nm: complex, n, m, t: float, bath: Bath, geometry: Geometry | None = None,
            spec: QuadratureSpec | None = None) -> complex:
    """One evolved element, for systems too large for :func:`evolve`."""
    n, m = check_pair(n, m)
    geometry = bath.geometry(len(n)) if geometry is None else geometry
    if n == m or t == 0:
        return complex(rho0_nm)
    ints = separation_integrals(t, bath, geometry, spec)
    ph = phases(n, m, t, bath, geometry, integrals=ints)
    return complex(rho0_nm) * math.exp(-ints.gamma(n, m)) * complex(np.exp(1j * ph.total))


def coherence_magnitude(rho, pair) -> float:
    """``|rho_nm|`` for ``pair = (n, m)``."""
    rho = _as_density(rho)
    n, m = pair
    return abs(rho.element(n, m))
