import numpy as np
import pytest
from hypothesis import given, strategies as st

from becdephase import Bath, ReducedDensityMatrix, coherence_magnitude, evolve, gamma_general, phases
from becdephase.densmat import (MAX_SITES, DensityMatrixError, config_of, element, index_of,
                                separation_integrals, spin_signs)
from becdephase.kernels import pair_curves
from becdephase.oracle import DiscreteSpinBoson, discrete_phases

T_EVAL = 60e-6
_CACHE = {}


def _integrals(bath, n):
    key = (bath.kind, n)
    if key not in _CACHE:
        _CACHE[key] = separation_integrals(T_EVAL, bath, bath.geometry(n))
    return _CACHE[key]


def random_rho(rng, n):
    dim = 2**n
    a = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    rho = a @ a.conj().T
    return rho / np.trace(rho).real


def test_basis_is_little_endian():
    assert index_of((1, 0, 0)) == 1
    assert index_of((0, 0, 1)) == 4
    assert config_of(6, 3) == (0, 1, 1)
    assert list(spin_signs("01")) == [-1.0, 1.0]


@given(n=st.integers(1, 3), seed=st.integers(0, 2**32 - 1))
def test_evolution_preserves_density_matrix(n, seed, condensate):
    rho0 = random_rho(np.random.default_rng(seed), n)
    rho = evolve(rho0, T_EVAL, condensate, integrals=_integrals(condensate, n))
    rho.validate(tol=1e-12)
    assert np.array_equal(np.diag(rho.data), np.diag(rho0).astype(complex))
    assert np.min(np.linalg.eigvalsh(rho.data)) >= -1e-10
    # magnitudes do not depend on the phases
    plain = evolve(rho0, T_EVAL, condensate, include_phases=False, integrals=_integrals(condensate, n))
    assert np.allclose(np.abs(plain.data), np.abs(rho.data), rtol=1e-13, atol=0)
    # input untouched
    assert np.array_equal(rho0, random_rho(np.random.default_rng(seed), n))


def test_elements_follow_exponents(condensate):
    rho0 = np.full((4, 4), 0.25, dtype=complex)
    rho = evolve(rho0, T_EVAL, condensate, integrals=_integrals(condensate, 2))
    c = pair_curves([T_EVAL], condensate)
    assert coherence_magnitude(rho, ((0, 0), (1, 1))) == pytest.approx(0.25 * np.exp(-c["1"].values[0]), rel=1e-9)
    assert coherence_magnitude(rho, ((0, 1), (1, 0))) == pytest.approx(0.25 * np.exp(-c["2"].values[0]), rel=1e-9)
    assert coherence_magnitude(rho, ((0, 0), (0, 1))) == pytest.approx(0.25 * np.exp(-c["0"].values[0]), rel=1e-9)


def test_element_matches_evolve(condensate):
    rho0 = np.full((8, 8), 1 / 8, dtype=complex)
    rho = evolve(rho0, T_EVAL, condensate, integrals=_integrals(condensate, 3))
    n, m = (0, 1, 1), (1, 0, 1)
    assert element(1 / 8, n, m, T_EVAL, condensate) == pytest.approx(rho.element(n, m), rel=1e-10)


def test_continuum_phases_match_mode_sums(condensate):
    """Shell mode sums (3 sites) against the separation integrals."""
    model = DiscreteSpinBoson.shells_3d(condensate, 1600, 192, n_sites=3)
    tr = model.reduced_time(T_EVAL)
    ints = _integrals(condensate, 3)
    for n, m in [((0, 0, 0), (1, 1, 0)), ((0, 1, 0), (1, 0, 1)), ((0, 0, 0), (0, 1, 0)), ((1, 0, 0), (0, 0, 1))]:
        c = phases(n, m, T_EVAL, condensate, integrals=ints)
        d = discrete_phases(model, n, m, tr)
        assert c.theta == pytest.approx(d.theta, rel=1e-10, abs=1e-16)
        assert c.xi == pytest.approx(d.xi, rel=1e-10, abs=1e-16)
        assert c.delta == 0.0 and abs(d.delta) < 1e-15


def test_gamma_consistent_with_general(condensate):
    ints = _integrals(condensate, 3)
    n, m = (0, 1, 1), (1, 1, 0)
    assert ints.gamma(n, m) == pytest.approx(gamma_general(n, m, T_EVAL, condensate), rel=1e-9)


def test_phase_structure(condensate):
    ints = _integrals(condensate, 2)
    # flipping every spin leaves s s^T unchanged
    assert phases((0, 0), (1, 1), T_EVAL, condensate, integrals=ints).theta == 0.0
    p = phases((0, 0), (0, 1), T_EVAL, condensate, integrals=ints)
    q = phases((0, 1), (0, 0), T_EVAL, condensate, integrals=ints)
    assert p.total == pytest.approx(-q.total, rel=1e-14)
    assert np.allclose(ints.U, -ints.U.T) and np.allclose(ints.R, ints.R.T)


def test_zero_time_is_identity(condensate):
    rho0 = ReducedDensityMatrix.pure([1, 1j, 0, 1])
    assert np.array_equal(evolve(rho0, 0.0, condensate).data, rho0.data)


def test_validation_errors(condensate):
    with pytest.raises(DensityMatrixError):
        ReducedDensityMatrix.from_array(np.eye(3) / 3)
    with pytest.raises(DensityMatrixError, match="Hermitian"):
        evolve(np.array([[0.5, 0.3], [0.1, 0.5]]), 1e-6, condensate)
    with pytest.raises(DensityMatrixError, match="trace"):
        evolve(np.eye(2), 1e-6, condensate)
    with pytest.raises(DensityMatrixError, match="positive"):
        evolve(np.array([[0.5, 0.9], [0.9, 0.5]]), 1e-6, condensate)
    big = np.eye(2 ** (MAX_SITES + 1)) / 2 ** (MAX_SITES + 1)
    with pytest.raises(DensityMatrixError, match="at most"):
        evolve(big, 1e-6, condensate)


def test_json_roundtrip(rng):
    rho = ReducedDensityMatrix.from_array(random_rho(rng, 2), t=1e-5)
    back = ReducedDensityMatrix.from_json(rho.to_json())
    assert np.array_equal(back.data, rho.data) and back.t == rho.t and back.n_sites == 2
