"""
Dispersion and mode amplitudes of a homogeneous weakly interacting condensate.

Every function takes ``hbar`` as a keyword so the same formulas serve the
SI interface (default) and the reduced unit system (``hbar=1``).
"""

from dataclasses import dataclass

import numpy as np

from .params import HBAR


@dataclass(frozen=True)
class ModeQuantities:
    k: np.ndarray
    eps: np.ndarray
    E: np.ndarray
    uv2: np.ndarray


def _check_k(k):
    k = np.asarray(k, dtype=float)
    if np.any(k < 0):
        raise ValueError("wavenumber must be >= 0")
    return k


def epsilon(k, m_B, *, hbar=HBAR):
    """Free-particle energy ``hbar**2 k**2 / (2 m_B)``."""
    k = _check_k(k)
    return (hbar * k) ** 2 / (2.0 * m_B)


def bogo_energy(k, g_B, n0, m_B, *, hbar=HBAR):
    """Bogoliubov energy ``sqrt(2 eps n0 g_B + eps**2)``."""
    eps = epsilon(k, m_B, hbar=hbar)
    # product of square roots so that eps**2 cannot underflow
    return np.sqrt(eps) * np.sqrt(eps + 2.0 * n0 * g_B)


def uv_suppression(k, g_B, n0, m_B, *, hbar=HBAR):
    """Squared amplitude difference ``(|u_k| - |v_k|)**2`` per unit volume.

    Evaluated through the closed form ``eps/E = sqrt(eps/(eps + 2 n0 g_B))``
    which is exact and has no cancellation as ``k -> 0``. The ``k = 0``
    value for an interacting gas is the removable limit 0; for free bosons
    it is 1.
    """
    eps = epsilon(k, m_B, hbar=hbar)
    ng = n0 * g_B
    if ng == 0:
        return np.ones_like(eps)
    return np.sqrt(eps / (eps + 2.0 * ng))


def uv_amplitudes(k, g_B, n0, m_B, *, volume=1.0, hbar=HBAR):
    """Moduli ``|u_k|``, ``|v_k|`` of the Bogoliubov mode functions.

    Direct transcription of the textbook amplitudes with box normalisation
    ``1/sqrt(volume)``; only meant for cross-checks, use
    :func:`uv_suppression` for numerics.
    """
    eps = epsilon(k, m_B, hbar=hbar)
    E = bogo_energy(k, g_B, n0, m_B, hbar=hbar)
    ng = n0 * g_B
    # |v|**2 = ((eps + ng)/E - 1)/2 = ng**2 / (2 E (eps + ng + E)), free of cancellation
    with np.errstate(divide="ignore", invalid="ignore"):
        v2 = np.where(E > 0, 0.5 * ng**2 / (E * (eps + ng + E)), 0.0) if ng > 0 else np.zeros_like(eps)
    u = np.sqrt(1.0 + v2) / np.sqrt(volume)
    v = np.sqrt(v2) / np.sqrt(volume)
    return u, v


def healing_wavenumber(g_B, n0, m_B, *, hbar=HBAR):
    """Phonon/particle crossover ``2 m_B c_s / hbar``."""
    c_s = np.sqrt(n0 * g_B / m_B)
    return 2.0 * m_B * c_s / hbar


def wavenumber_of_energy(E, g_B, n0, m_B, *, hbar=HBAR):
    """Invert the dispersion: the ``k >= 0`` with ``bogo_energy(k) == E``."""
    E = np.asarray(E, dtype=float)
    ng = n0 * g_B
    # eps = sqrt(ng**2 + E**2) - ng, written without cancellation
    eps = E**2 / (np.sqrt(ng**2 + E**2) + ng) if ng > 0 else E
    return np.sqrt(2.0 * m_B * eps) / hbar


def mode_quantities(k, g_B, n0, m_B, *, hbar=HBAR) -> ModeQuantities:
    k = _check_k(k)
    return ModeQuantities(
        k=k,
        eps=epsilon(k, m_B, hbar=hbar),
        E=bogo_energy(k, g_B, n0, m_B, hbar=hbar),
        uv2=uv_suppression(k, g_B, n0, m_B, hbar=hbar),
    )
