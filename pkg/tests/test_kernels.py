import math

import numpy as np
import pytest
from scipy.integrate import quad

from becdephase import Bath, QuadratureSpec, gamma0_3d, gamma12_3d, gamma_1d, gamma_general
from becdephase.coupling import Geometry
from becdephase.kernels import (DecoherenceCurve, _Reduced, evaluate_exponents, gamma0_curve, hybrid_time_grid,
                                pair_curves, plateau, secular_factor, spectral_density, stable_coth)
from becdephase.params import BOHR, HBAR, derive_scales

TIGHT = QuadratureSpec(rel_tol=1e-12)

# Mode-sum values from the discrete oracle (3D shells, 1600 radial x 64/96
# angular clusters) on the standard-3d preset; frozen as regression goldens.
ORACLE_GAMMA0 = {  # (interacting, t) -> Gamma0
    (True, 10e-6): 0.008846325532378187,
    (True, 50e-6): 0.02687934373430821,
    (True, 200e-6): 0.028051600494741258,
    (False, 10e-6): 0.009374539967346013,
    (False, 200e-6): 0.04594748586210589,
}
ORACLE_PAIR_50US = {  # interacting -> (Gamma1, Gamma2)
    True: (0.05143514311673258, 0.05608223182050041),
    False: (0.06331052540191597, 0.06925505486459613),
}


@pytest.mark.parametrize("key", sorted(ORACLE_GAMMA0))
def test_gamma0_matches_mode_sum(key, std):
    interacting, t = key
    assert gamma0_3d(t, Bath(std, interacting)) == pytest.approx(ORACLE_GAMMA0[key], rel=1e-9)


@pytest.mark.parametrize("interacting", [True, False])
def test_pair_matches_mode_sum(interacting, std):
    g1, g2, _ = gamma12_3d(50e-6, Bath(std, interacting))
    ref = ORACLE_PAIR_50US[interacting]
    assert g1 == pytest.approx(ref[0], rel=1e-9)
    assert g2 == pytest.approx(ref[1], rel=1e-9)


@pytest.mark.parametrize("t", [2e-6, 50e-6, 400e-6])
def test_gamma0_against_si_integral(t, std):
    """Single-impurity integral written directly in SI units, evaluated with scipy."""
    s = derive_scales(std)
    ng = std.n0 * s.g_B
    L, sigma = std.L, s.sigma

    def integrand(k):
        eps = (HBAR * k) ** 2 / (2 * std.m_B)
        E = math.sqrt(eps * (eps + 2 * ng))
        y = 2 * k * L
        return (k**2 * math.exp(-(k * sigma) ** 2 / 2) * math.sin(E * t / (2 * HBAR)) ** 2
                / (E * (eps + 2 * ng)) * (1 - math.sin(y) / y))

    k_max = 8 / sigma
    edges = np.linspace(0, k_max, 201)
    total = sum(quad(integrand, a, b, epsabs=0, epsrel=1e-12, limit=200)[0]
                for a, b in zip(edges[:-1], edges[1:]))
    ref = 2 * s.g_AB**2 * std.n0 / math.pi**2 * total
    assert gamma0_3d(t, Bath(std), spec=TIGHT) == pytest.approx(ref, rel=1e-8)


def test_shared_node_identities(condensate, free_1d):
    times = np.linspace(0, 300e-6, 7)
    for bath in (condensate, free_1d):
        c = pair_curves(times, bath)
        assert np.allclose(c["1"].values + c["2"].values, 4 * c["0"].values, rtol=1e-12, atol=0)
        assert np.allclose(c["2"].values - c["1"].values, 2 * c["delta"].values, rtol=1e-8, atol=1e-16)


def test_general_agrees_with_pair_curves(condensate):
    t = 80e-6
    c = pair_curves([t], condensate)
    assert gamma_general((0, 0), (1, 1), t, condensate) == pytest.approx(c["1"].values[0], rel=1e-9)
    assert gamma_general((0, 1), (1, 0), t, condensate) == pytest.approx(c["2"].values[0], rel=1e-9)
    assert gamma_general((0, 0), (0, 1), t, condensate) == pytest.approx(c["0"].values[0], rel=1e-9)
    # symmetric in (n, m) and zero on the diagonal
    assert gamma_general((1, 1), (0, 0), t, condensate) == pytest.approx(c["1"].values[0], rel=1e-12)
    assert gamma_general((1, 0), (1, 0), t, condensate) == 0.0


def test_ballistic_stage_is_quadratic(condensate):
    t = np.array([1e-9, 2e-9, 4e-9])
    v = gamma0_3d(t, condensate)
    assert v[1] / v[0] == pytest.approx(4.0, rel=1e-3)
    assert v[2] / v[1] == pytest.approx(4.0, rel=1e-3)


def test_temperature_increases_decoherence(std):
    cold = gamma0_3d(50e-6, Bath(std))
    warm = gamma0_3d(50e-6, Bath(std.with_overrides(T=50e-9)))
    assert warm > cold
    # 1e-30 K is numerically zero temperature
    assert gamma0_3d(50e-6, Bath(std.with_overrides(T=1e-30))) == pytest.approx(cold, rel=1e-14)


def test_stable_coth():
    x = np.array([1e-3, 1.0, 50.0, 1e4, np.inf])
    with np.errstate(over="ignore"):
        assert np.allclose(stable_coth(x[:3]), 1 / np.tanh(x[:3]), rtol=1e-13)
    assert stable_coth(x[3]) == 1.0 and stable_coth(x[4]) == 1.0


def test_secular_factor_series_branch():
    x = np.array([1e-6, 0.05, 0.0999, 0.1001, 3.0])
    mp = (1.6666666666665834e-19, 2.0830729321671204e-05)  # mpmath, 40 digits
    assert secular_factor(x[0]) == pytest.approx(mp[0], rel=1e-12)
    assert secular_factor(x[1]) == pytest.approx(mp[1], rel=1e-12)
    assert np.allclose(secular_factor(x[2:]), x[2:] - np.sin(x[2:]), rtol=1e-12)


def test_plateau_scales_with_coupling_squared(std):
    a = plateau(Bath(std.with_overrides(a_AB=27.5 * BOHR)))
    b = plateau(Bath(std))
    assert b / a == pytest.approx(4.0, rel=1e-12)
    assert gamma0_3d(1e-3, Bath(std)) == pytest.approx(b, rel=0.05)


@pytest.mark.parametrize("interacting,T,finite", [(True, 0.0, True), (True, 20e-9, True),
                                                  (False, 0.0, True), (False, 20e-9, False)])
def test_plateau_exists_only_for_integrable_infrared(std, interacting, T, finite):
    p = plateau(Bath(std.with_overrides(T=T), interacting))
    assert math.isfinite(p) is finite
    if not finite:
        # integrand ~ (1 - cos k**2 t)/k**2 near k = 0, so the exponent grows like sqrt(t)
        g = [gamma0_3d(t, Bath(std.with_overrides(T=T), interacting)) for t in (4e-3, 8e-3)]
        assert g[1] / g[0] == pytest.approx(math.sqrt(2), rel=0.1)


def test_spectral_density_reproduces_gamma(condensate):
    """Gamma(t) = int dw J(w) (1 - cos w t) / w**2 at zero temperature."""
    t = 20e-6
    r = _Reduced(condensate)
    w_max = float(r.energy(r.k_max)) * r.r.E_R / HBAR
    # Gauss-Legendre in log(omega), vectorised over panels
    u = np.linspace(math.log(1e-3), math.log(w_max), 4001)
    x, wts = np.polynomial.legendre.leggauss(20)
    half = 0.5 * np.diff(u)
    nodes = (0.5 * (u[1:] + u[:-1]))[:, None] + half[:, None] * x
    w = np.exp(nodes)
    f = spectral_density(w, condensate) * (1 - np.cos(w * t)) / w
    total = float(np.sum(f * wts * half[:, None]))
    assert total == pytest.approx(gamma0_3d(t, condensate, spec=TIGHT), rel=1e-7)


def test_one_dimensional_pair_identity(condensate_1d):
    t = 100e-6
    g0, g1, g2 = (gamma_1d(k, t, condensate_1d) for k in ("gamma0", "gamma1", "gamma2"))
    assert g1 + g2 == pytest.approx(4 * g0, rel=1e-12)
    with pytest.raises(ValueError):
        gamma0_3d(t, condensate_1d)


def test_curve_metadata(condensate):
    c = gamma0_curve([0.0, 1e-6], condensate)
    assert isinstance(c, DecoherenceCurve) and c.label == "Gamma0_condensate"
    d = c.to_dict()
    assert d["values"][0] == 0.0 and d["quadrature"]["rel_tol"] == 1e-9


def test_workers_do_not_change_results(condensate):
    times = np.linspace(0, 100e-6, 6)
    a = gamma0_3d(times, condensate, workers=1)
    b = gamma0_3d(times, condensate, workers=3)
    assert np.array_equal(a, b)


def test_error_estimates_respect_tolerance(condensate):
    times = hybrid_time_grid(5e-4, 10, 20)
    c = gamma0_curve(times, condensate)
    assert np.all(c.errors[1:] <= 1e-9 * np.abs(c.values[1:]))


def test_negative_time_rejected(condensate):
    with pytest.raises(ValueError):
        evaluate_exponents(condensate, [-1.0], [lambda k: k], 1.0)
