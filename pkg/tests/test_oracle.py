import math
import warnings
from dataclasses import replace

import numpy as np
import pytest

from becdephase import Bath, QuadratureSpec, ReducedDensityMatrix, gamma_general
from becdephase.kernels import _Reduced, pair_curves, spectral_density
from becdephase.params import HBAR
from becdephase.oracle import (DiscreteSpinBoson, HilbertSpaceTooLarge, TruncationLeakageWarning,
                               bath_populations, binned_spectral_density, closed_form_element,
                               discrete_gamma, exact_propagate, factorization_residual,
                               full_hamiltonian, glauber_residual, product_form)


@pytest.fixture(scope="module")
def tiny(condensate):
    kv = np.array([[0.8, 0.1, -0.2], [1.5, 0.4, 0.3]])
    return DiscreteSpinBoson.from_modes(condensate, kv, volume=2e3, n_sites=2, cutoff=8)


def test_hamiltonian_is_hermitian_and_block_diagonal(tiny):
    H = full_hamiltonian(tiny)
    assert abs(H - H.conj().T).max() < 1e-14
    dim_b = (tiny.cutoff + 1) ** tiny.n_modes
    coo = H.tocoo()
    assert np.all(coo.row // dim_b == coo.col // dim_b)


@pytest.mark.parametrize("form", ["merged", "split"])
def test_factorised_evolution(tiny, form):
    period = 2 * math.pi / tiny.energies.min()
    for t in (0.37 * period, period):
        assert factorization_residual(tiny, t, form) < 1e-10


def test_forms_agree(tiny):
    t = 1.3
    a = product_form(tiny, (0, 1), t, "merged")
    b = product_form(tiny, (0, 1), t, "split")
    low = slice(0, 3)
    assert np.allclose(a[low, low], b[low, low], atol=1e-12)


@pytest.mark.parametrize("g", [0.0, 0.5, 0.5j, 0.3 - 0.4j, 1.0])
def test_glauber(g):
    assert glauber_residual(g, 12) < 1e-12


def test_glauber_truncation_is_visible():
    # small cutoffs fail in a controlled way, which is what the residual is for
    assert glauber_residual(1.0, 4) > 1e-4
    assert glauber_residual(1.0, 8) < glauber_residual(1.0, 6) < glauber_residual(1.0, 4)


def test_exact_propagation_against_closed_form(condensate):
    model = DiscreteSpinBoson.from_modes(condensate, np.array([[1.2, 0.0, 0.0], [0.5, 0.7, 0.0]]),
                                         volume=3e3, n_sites=2, cutoff=8)
    t = model.reduced_time(30e-6)
    rho0 = ReducedDensityMatrix.pure([1, 1, 1, 1])
    rho = exact_propagate(model, rho0, t)
    for a in range(4):
        for b in range(4):
            n, m = [(a >> i) & 1 for i in range(2)], [(b >> i) & 1 for i in range(2)]
            assert rho.data[a, b] == pytest.approx(0.25 * closed_form_element(model, n, m, t), abs=1e-12)


def test_thermal_state_and_leakage(condensate):
    model = DiscreteSpinBoson.from_modes(condensate, np.array([[0.9, 0.0, 0.0]]), volume=5.0, cutoff=4)
    model = replace(model, beta=0.5)
    pops = bath_populations(model)
    assert pops.sum() == pytest.approx(1.0) and pops[0] > pops[1] > 0
    with pytest.warns(TruncationLeakageWarning):
        exact_propagate(model, np.eye(2) / 2 + 0.4 * np.array([[0, 1], [1, 0]]), 4.0)


def test_dimension_guard(condensate):
    kv = np.tile([[1.0, 0.0, 0.0]], (6, 1)) * np.arange(1, 7)[:, None]
    model = DiscreteSpinBoson.from_modes(condensate, kv, volume=1e3, cutoff=8)
    with pytest.raises(HilbertSpaceTooLarge):
        full_hamiltonian(model)


def test_one_dimensional_lattice_converges(condensate_1d):
    """Fourth-order convergence of the box sum, and the pair prefactor it pins down."""
    bath = condensate_1d
    k_max = _Reduced(bath).k_max
    t = 50e-6
    ref = pair_curves([t], bath, spec=QuadratureSpec(rel_tol=1e-12))
    errs = []
    for box in (500.0, 1000.0, 2000.0):
        n = 2 * int(k_max * box / (2 * math.pi))
        model = DiscreteSpinBoson.lattice_1d(bath, n, box, n_sites=2)
        tr = model.reduced_time(t)
        g1 = discrete_gamma(model, (0, 0), (1, 1), tr)
        errs.append(abs(g1 / ref["1"].values[0] - 1))
    assert errs[-1] < 1e-10
    assert 12 < errs[0] / errs[1] < 20 and 12 < errs[1] / errs[2] < 20


def test_binned_spectral_density(free):
    """Histogram of the mode couplings against the continuum spectral density."""
    model = DiscreteSpinBoson.shells_3d(free, 20000, 16)
    edges = np.linspace(5.0, 10.0, 6)  # reduced energies
    hist = binned_spectral_density(model, edges)
    scale = free.reduced.E_R / HBAR  # reduced energy -> angular frequency
    ref = []
    for a, b in zip(edges[:-1], edges[1:]):
        E = np.linspace(a, b, 401)
        ref.append(np.mean(spectral_density(E * scale, free)) / scale)
    assert np.allclose(hist, ref, rtol=2e-2)


def test_shell_oracle_converges(condensate):
    t = 10e-6
    ref = float(gamma_general((0,), (1,), t, condensate, spec=QuadratureSpec(rel_tol=1e-12)))
    errs = []
    for n in (100, 200, 400):
        model = DiscreteSpinBoson.shells_3d(condensate, n, 64)
        errs.append(abs(discrete_gamma(model, (0,), (1,), model.reduced_time(t)) / ref - 1))
    assert 40 < errs[0] / errs[1] < 100 and 40 < errs[1] / errs[2] < 100


def test_input_validation(condensate):
    with pytest.raises(ValueError):
        DiscreteSpinBoson(energies=[1.0, -1.0], omega_L=[[0, 0]], omega_R=[[0, 0]])
    with pytest.raises(ValueError):
        DiscreteSpinBoson(energies=[1.0], omega_L=[[0]], omega_R=[[0]], cutoff=2)
    with pytest.raises(ValueError):
        DiscreteSpinBoson.lattice_1d(condensate, 10, 100.0)
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        DiscreteSpinBoson.shells_3d(condensate, 4, 4)
