"""
Brute-force validators for the pure-dephasing dynamics.

Two independent routes to the same numbers as :mod:`becdephase.kernels` and
:mod:`becdephase.densmat`:

* closed-form finite sums over an explicit list of bath modes (any number
  of modes; grouped modes carry a multiplicity);
* exact propagation of spins plus a few truncated bosonic modes by dense
  matrix exponentials, followed by a partial trace.

Units are those of the model: energies in units where ``hbar`` has the
value stored on the model, times in ``hbar/energy``. Models built from a
:class:`~becdephase.kernels.Bath` use the reduced system (``hbar = 1``,
energy ``E_R``); convert seconds with :meth:`DiscreteSpinBoson.reduced_time`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from functools import reduce

import numpy as np
import scipy.sparse as sp
from scipy.linalg import expm

from .bogoliubov import uv_amplitudes
from .coupling import Geometry, check_pair
from .densmat import (PhaseSet, ReducedDensityMatrix, config_of, index_of, spin_signs)
from .kernels import Bath, _Reduced, secular_factor, stable_coth

MAX_HILBERT_DIM = 2**14
MIN_CUTOFF = 4
LEAKAGE_TOL = 1e-8


class HilbertSpaceTooLarge(ValueError):
    pass


class TruncationLeakageWarning(UserWarning):
    pass


@dataclass(frozen=True)
class DiscreteSpinBoson:
    """Spins coupled to a finite set of bosonic modes.

    ``omega_L`` and ``omega_R`` have shape ``(n_spins, n_modes)``;
    ``multiplicity`` counts how many physical modes each entry stands for
    (1 for a genuine mode list). Exact propagation requires unit
    multiplicities and a Hilbert space of at most ``2**14`` states.
    """

    energies: np.ndarray
    omega_L: np.ndarray
    omega_R: np.ndarray
    hbar: float = 1.0
    beta: float = math.inf
    cutoff: int = 8
    multiplicity: np.ndarray | None = None
    volume: float = 1.0
    time_unit: float = 1.0  # seconds per model time unit

    def __post_init__(self):
        E = np.atleast_1d(np.asarray(self.energies, dtype=float))
        oL = np.atleast_2d(np.asarray(self.omega_L, dtype=complex))
        oR = np.atleast_2d(np.asarray(self.omega_R, dtype=complex))
        if np.any(E <= 0):
            raise ValueError("mode energies must be > 0")
        if oL.shape != oR.shape or oL.shape[1] != E.size:
            raise ValueError(f"coupling shapes {oL.shape}, {oR.shape} do not match {E.size} modes")
        if self.cutoff < MIN_CUTOFF:
            raise ValueError(f"Fock cutoff must be >= {MIN_CUTOFF}")
        mult = np.ones(E.size) if self.multiplicity is None else np.asarray(self.multiplicity, float)
        if mult.shape != E.shape or np.any(mult < 0):
            raise ValueError("multiplicity must be a nonnegative array with one entry per mode")
        for name, value in (("energies", E), ("omega_L", oL), ("omega_R", oR), ("multiplicity", mult)):
            object.__setattr__(self, name, value)

    # -- construction --------------------------------------------------------

    @classmethod
    def from_modes(cls, bath: Bath, kvecs, *, volume: float, geometry: Geometry | None = None,
                   n_sites: int = 1, multiplicity=None, cutoff: int = 8) -> "DiscreteSpinBoson":
        """Box modes ``kvecs`` (reduced units, shape ``(M, d)`` or ``(M,)``) of volume ``volume``.

        The amplitudes ``|u|``, ``|v|`` carry the ``1/sqrt(volume)`` box
        normalisation, so a sum over modes approaches
        ``volume/(2 pi)**d`` times the wavevector integral.
        """
        red = _Reduced(bath)
        geom_si = bath.geometry(n_sites) if geometry is None else geometry
        geom = geom_si.scaled(bath.scales.k_L)
        kv = np.asarray(kvecs, dtype=float)
        if kv.ndim == 1:
            kv = kv[:, None]
        kmag = np.linalg.norm(kv, axis=1)
        u, v = uv_amplitudes(kmag, 1.0, red.ng, red.m_B, volume=volume, hbar=1.0)
        amp = math.sqrt(red.coupling) * (u - v) * np.exp(-0.25 * (kmag * red.sigma) ** 2)
        kx = kv[:, 0]
        oL = np.array([amp * np.exp(1j * kx * geom.well_position(i, "L")) for i in range(geom.n_sites)])
        oR = np.array([amp * np.exp(1j * kx * geom.well_position(i, "R")) for i in range(geom.n_sites)])
        return cls(energies=red.energy(kmag), omega_L=oL, omega_R=oR, hbar=1.0, beta=red.beta,
                   cutoff=cutoff, multiplicity=multiplicity, volume=volume,
                   time_unit=red.r.time_unit)

    @classmethod
    def lattice_1d(cls, bath: Bath, n_modes: int, box_length: float, **kw) -> "DiscreteSpinBoson":
        """Periodic box of length ``box_length`` (reduced): ``k = 2 pi j / box_length``, ``0 < |j| <= n_modes/2``."""
        if bath.d != 1:
            raise ValueError("lattice_1d needs a one-dimensional bath")
        j = np.arange(1, n_modes // 2 + 1)
        k = 2 * math.pi * np.concatenate([j, -j]) / box_length
        return cls.from_modes(bath, k, volume=box_length, **kw)

    @classmethod
    def shells_3d(cls, bath: Bath, n_radial: int, n_angular: int, k_max: float | None = None,
                  **kw) -> "DiscreteSpinBoson":
        """Isotropic 3D mode set grouped into clusters.

        Radial midpoints ``k_j`` and Gauss-Legendre nodes in ``cos(theta)``
        about the lattice axis; each cluster stands for the
        ``k**2 dk dOmega / (2 pi)**3`` box modes of a unit volume, all of
        which couple identically to sites on the lattice axis.
        """
        if bath.d != 3:
            raise ValueError("shells_3d needs a three-dimensional bath")
        red = _Reduced(bath)
        k_max = red.k_max if k_max is None else k_max
        h = k_max / n_radial
        k = (np.arange(n_radial) + 0.5) * h
        mu, wmu = np.polynomial.legendre.leggauss(n_angular)
        kk, mm = np.meshgrid(k, mu, indexing="ij")
        ww = (kk**2 * h) * (2 * math.pi * wmu[None, :]) / (2 * math.pi) ** 3
        kvecs = np.stack([kk * mm, kk * np.sqrt(1 - mm**2), np.zeros_like(kk)], axis=-1).reshape(-1, 3)
        return cls.from_modes(bath, kvecs, volume=1.0, multiplicity=ww.ravel(), **kw)

    # -- basic quantities ----------------------------------------------------

    @property
    def n_spins(self) -> int:
        return self.omega_L.shape[0]

    @property
    def n_modes(self) -> int:
        return self.energies.size

    @property
    def hilbert_dim(self) -> int:
        return 2**self.n_spins * (self.cutoff + 1) ** self.n_modes

    def reduced_time(self, seconds):
        return np.asarray(seconds, dtype=float) / self.time_unit

    def lambdas(self, config) -> np.ndarray:
        """``sum_i (Omega_R - Omega_L) s_i + sum_j (Omega_R + Omega_L)`` per mode."""
        s = spin_signs(config)
        if s.size != self.n_spins:
            raise ValueError(f"configuration has {s.size} sites, model has {self.n_spins}")
        diff = self.omega_R - self.omega_L
        return s @ diff + (self.omega_R + self.omega_L).sum(axis=0)

    def displacement(self, config, t) -> np.ndarray:
        """``sum_i A_i s_i + alpha`` per mode."""
        E = self.energies
        return self.hbar * (1 - np.exp(1j * E * t / self.hbar)) / (2 * E) * np.conj(self.lambdas(config))

    def _thermal(self, beta):
        beta = self.beta if beta is None else beta
        if math.isinf(beta):
            return np.ones_like(self.energies)
        return stable_coth(0.5 * beta * self.energies)


# -- closed-form finite sums ---------------------------------------------------

def discrete_gamma(model: DiscreteSpinBoson, n, m, t: float, beta: float | None = None) -> float:
    """Decay exponent of the coherence ``(n, m)`` as an explicit mode sum."""
    n, m = check_pair(n, m, model.n_spins)
    w = np.asarray(m, dtype=float) - np.asarray(n, dtype=float)
    E, hb = model.energies, model.hbar
    c = np.abs(w @ (model.omega_R - model.omega_L)) ** 2
    terms = hb**2 * (1 - np.cos(E * t / hb)) / E**2 * c * model._thermal(beta)
    return float(np.sum(model.multiplicity * terms))


def discrete_phases(model: DiscreteSpinBoson, n, m, t: float) -> PhaseSet:
    """``Theta``, ``Xi`` and ``Delta`` of the coherence ``(n, m)`` as mode sums."""
    n, m = check_pair(n, m, model.n_spins)
    E, hb, mult = model.energies, model.hbar, model.multiplicity
    x = E * t / hb
    f = secular_factor(x)
    diff = model.omega_R - model.omega_L
    S = (model.omega_R + model.omega_L).sum(axis=0)
    sn, sm = spin_signs(n), spin_signs(m)
    W = np.outer(sn, sn) - np.outer(sm, sm)
    gram = np.einsum("ik,jk->ijk", diff, diff.conj()).real
    theta = np.sum(mult * hb**2 * f / (4 * E**2) * np.einsum("ij,ijk->k", W, gram))
    v = np.asarray(n, dtype=float) - np.asarray(m, dtype=float)
    xi = np.sum(mult * hb**2 * f / E**2 * np.real(np.conj(S) * (v @ diff)))
    ln, lm = model.lambdas(n), model.lambdas(m)
    delta = np.sum(mult * hb**2 * (1 - np.cos(x)) / (2 * E**2) * np.imag(np.conj(ln) * lm))
    return PhaseSet(theta=float(theta), xi=float(xi), delta=float(delta))


def closed_form_element(model: DiscreteSpinBoson, n, m, t: float, beta: float | None = None) -> complex:
    """``exp(-Gamma) exp(i (Theta + Xi + Delta))`` for ``rho_nm(0) = 1``."""
    ph = discrete_phases(model, n, m, t)
    return complex(math.exp(-discrete_gamma(model, n, m, t, beta)) * np.exp(1j * ph.total))


def binned_spectral_density(model: DiscreteSpinBoson, edges, n=(0,), m=(1,)) -> np.ndarray:
    """Histogram estimate of ``sum_k |coupling difference|**2 delta(w - E_k/hbar)``.

    Returns the density per unit frequency in every bin of ``edges``
    (model frequency units), per unit volume.
    """
    n, m = check_pair(n, m, model.n_spins)
    w = np.asarray(m, dtype=float) - np.asarray(n, dtype=float)
    c = np.abs(w @ (model.omega_R - model.omega_L)) ** 2 * model.multiplicity / model.volume
    hist, _ = np.histogram(model.energies / model.hbar, bins=edges, weights=c)
    return hist / np.diff(edges)


# -- truncated Fock space ------------------------------------------------------

def _mode_operators(n_modes: int, cutoff: int):
    """Sparse annihilation operators of every mode on the joint truncated space."""
    dim1 = cutoff + 1
    a1 = sp.diags(np.sqrt(np.arange(1, dim1)), 1, format="csr", dtype=complex)
    eye = sp.identity(dim1, format="csr", dtype=complex)
    ops = []
    for j in range(n_modes):
        factors = [a1 if i == j else eye for i in range(n_modes)]
        ops.append(reduce(lambda x, y: sp.kron(x, y, format="csr"), factors))
    return ops


def _check_dim(model: DiscreteSpinBoson):
    if model.hilbert_dim > MAX_HILBERT_DIM:
        raise HilbertSpaceTooLarge(f"Hilbert dimension {model.hilbert_dim} exceeds {MAX_HILBERT_DIM}")
    if not np.all(model.multiplicity == 1):
        raise ValueError("exact propagation needs a plain mode list (unit multiplicities)")


def full_hamiltonian(model: DiscreteSpinBoson) -> sp.csr_matrix:
    """Sparse spin-boson Hamiltonian on ``spins (x) modes``.

    The spin factor uses the little-endian configuration basis; ``sigma_z``
    of site ``i`` is ``2 n_i - 1``.
    """
    _check_dim(model)
    N, M, hb = model.n_spins, model.n_modes, model.hbar
    a = _mode_operators(M, model.cutoff)
    dim_b = (model.cutoff + 1) ** M
    sz = [sp.diags([2.0 * config_of(c, N)[i] - 1.0 for c in range(2**N)], format="csr")
          for i in range(N)]
    eye_s = sp.identity(2**N, format="csr")
    H = sp.csr_matrix((2**N * dim_b, 2**N * dim_b), dtype=complex)
    diff = model.omega_R - model.omega_L
    S = (model.omega_R + model.omega_L).sum(axis=0)
    for k in range(M):
        num = a[k].conj().T @ a[k]
        H = H + sp.kron(eye_s, model.energies[k] * num)
        spin_part = reduce(lambda x, y: x + y, [diff[i, k] * sz[i] for i in range(N)]) + S[k] * eye_s
        H = H + 0.5 * hb * sp.kron(spin_part, a[k])
        H = H + 0.5 * hb * sp.kron(spin_part.conj(), a[k].conj().T)
    return H.tocsr()


def _blocks(model: DiscreteSpinBoson, H=None):
    """Diagonal spin blocks of the Hamiltonian; verifies the off-diagonal ones vanish."""
    H = full_hamiltonian(model) if H is None else H
    dim_b = (model.cutoff + 1) ** model.n_modes
    n_cfg = 2**model.n_spins
    coo = H.tocoo()
    if np.any(coo.row // dim_b != coo.col // dim_b):
        raise AssertionError("Hamiltonian couples different pseudospin configurations")
    return [H[c * dim_b:(c + 1) * dim_b, c * dim_b:(c + 1) * dim_b].toarray() for c in range(n_cfg)]


def bath_populations(model: DiscreteSpinBoson, beta: float | None = None) -> np.ndarray:
    """Diagonal of the initial bath state: vacuum, or per-mode Gibbs states truncated and renormalised."""
    beta = model.beta if beta is None else beta
    dim1 = model.cutoff + 1
    if math.isinf(beta):
        p1 = [np.eye(1, dim1).ravel() for _ in range(model.n_modes)]
    else:
        p1 = []
        for E in model.energies:
            w = np.exp(-beta * E * np.arange(dim1))
            p1.append(w / w.sum())
    return reduce(np.kron, p1)


def _top_population(model: DiscreteSpinBoson, pops: np.ndarray) -> float:
    dim1 = model.cutoff + 1
    pops = pops.reshape([dim1] * model.n_modes)
    return max(float(np.take(pops, dim1 - 1, axis=j).sum()) for j in range(model.n_modes))


def exact_propagate(model: DiscreteSpinBoson, rho0_spins, t: float,
                    beta: float | None = None) -> ReducedDensityMatrix:
    """Spin density matrix at time ``t`` from the full unitary dynamics.

    The bath starts diagonal in the Fock basis with populations ``p_j``, so
    ``Tr_B[U_a rho_B U_b^dag] = sum_j p_j <U_b e_j, U_a e_j>``. Emits
    :class:`TruncationLeakageWarning` when any mode's top Fock level ends
    up with population above ``1e-8``.
    """
    rho0 = rho0_spins if isinstance(rho0_spins, ReducedDensityMatrix) \
        else ReducedDensityMatrix.from_array(rho0_spins)
    if rho0.n_sites != model.n_spins:
        raise ValueError(f"rho0 has {rho0.n_sites} sites, model has {model.n_spins}")
    blocks = _blocks(model)
    pops = bath_populations(model, beta)
    occupied = np.nonzero(pops > 0)[0]
    p = pops[occupied]
    # only the columns of occupied initial states are needed
    cols = [expm(-1j * Hc * t / model.hbar)[:, occupied] for Hc in blocks]
    leak = max(_top_population(model, (np.abs(C) ** 2) @ p) for C in cols)
    if leak > LEAKAGE_TOL:
        warnings.warn(f"Fock truncation leakage {leak:.3g} exceeds {LEAKAGE_TOL:g}",
                      TruncationLeakageWarning, stacklevel=2)
    n_cfg = len(cols)
    out = np.empty((n_cfg, n_cfg), dtype=complex)
    for a in range(n_cfg):
        for b in range(a, n_cfg):
            overlap = np.sum(p * np.sum(np.conj(cols[b]) * cols[a], axis=0))
            out[a, b] = rho0.data[a, b] * overlap
            out[b, a] = np.conj(out[a, b])
    return ReducedDensityMatrix(out, model.n_spins, float(t))


def _low_sector(model: DiscreteSpinBoson, max_occupation: int) -> np.ndarray:
    dim1 = model.cutoff + 1
    occ = np.indices([dim1] * model.n_modes).reshape(model.n_modes, -1).sum(axis=0)
    return np.nonzero(occ <= max_occupation)[0]


def product_form(model: DiscreteSpinBoson, config, t: float, form: str = "merged") -> np.ndarray:
    """Bath operator of the factorised evolution for one spin configuration.

    ``form="merged"``: free evolution, one displacement operator and the
    scalar phase ``sum_k hbar**2 f_k |lambda_k|**2 / (4 E_k**2)``.
    ``form="split"``: free evolution, ``exp(X a^dag) exp(-X^* a)`` and the
    scalar ``exp(-(eta + mu + epsilon))`` built from their time integrals.
    """
    M, hb, E = model.n_modes, model.hbar, model.energies
    a = [op.toarray() for op in _mode_operators(M, model.cutoff)]
    X = model.displacement(config, t)
    free = np.diag(np.exp(-1j * t / hb * sum(E[k] * np.real(np.diag(a[k].conj().T @ a[k]))
                                              for k in range(M))))
    s = spin_signs(config)
    diff = model.omega_R - model.omega_L
    S = (model.omega_R + model.omega_L).sum(axis=0)
    bracket = t + 1j * hb / E * (1 - np.exp(-1j * E * t / hb))
    if form == "merged":
        gen = sum(X[k] * a[k].conj().T - np.conj(X[k]) * a[k] for k in range(M))
        lam = model.lambdas(config)
        f = secular_factor(E * t / hb)
        phase = np.sum(hb**2 * f * np.abs(lam) ** 2 / (4 * E**2))
        return free @ expm(gen) * np.exp(1j * phase)
    if form == "split":
        create = expm(sum(X[k] * a[k].conj().T for k in range(M)))
        annihilate = expm(-sum(np.conj(X[k]) * a[k] for k in range(M)))
        quad = np.abs(s @ diff) ** 2
        eta = -1j * hb * quad / (4 * E) * bracket
        eps = -1j * hb * np.abs(S) ** 2 / (4 * E) * bracket
        mu = -1j * hb / (2 * E) * (s @ np.real(diff * np.conj(S))) * bracket
        return free @ create @ annihilate * np.exp(-np.sum(eta + mu + eps))
    raise ValueError(f"unknown form {form!r}")


def factorization_residual(model: DiscreteSpinBoson, t: float, form: str = "merged",
                           max_occupation: int = 1) -> float:
    """Largest spectral-norm deviation between the exact and factorised evolution.

    Measured on matrix elements between bath states with at most
    ``max_occupation`` quanta in total; at the truncation edge the two
    sides differ by construction and carry no information.
    """
    blocks = _blocks(model)
    low = _low_sector(model, max_occupation)
    worst = 0.0
    for c, Hc in enumerate(blocks):
        cfg = config_of(c, model.n_spins)
        exact = expm(-1j * Hc * t / model.hbar)
        approx = product_form(model, cfg, t, form)
        worst = max(worst, float(np.linalg.norm((exact - approx)[np.ix_(low, low)], 2)))
    return worst


def glauber_residual(g: complex, cutoff: int, max_occupation: int = 1) -> float:
    """Deviation from ``exp(g a^dag) exp(-g^* a) = exp(g a^dag - g^* a) exp(|g|**2/2)``.

    Spectral norm over matrix elements between Fock states with at most
    ``max_occupation`` quanta.
    """
    if cutoff < 1:
        raise ValueError("cutoff must be >= 1")
    a = np.diag(np.sqrt(np.arange(1, cutoff + 1)), 1).astype(complex)
    ad = a.conj().T
    lhs = expm(g * ad) @ expm(-np.conj(g) * a)
    rhs = expm(g * ad - np.conj(g) * a) * np.exp(abs(g) ** 2 / 2)
    k = min(max_occupation, cutoff) + 1
    return float(np.linalg.norm((lhs - rhs)[:k, :k], 2))


def pair_index(n, m) -> tuple[int, int]:
    return index_of(n), index_of(m)
