import math

import numpy as np
import pytest
from scipy.linalg import expm

from apclock.apfun import APFunction
from apclock.canonical import (
    StateVector,
    canonical_density,
    eigenstate,
    equal_superposition,
    random_state,
)
from apclock.errors import DiagonalViolation, NotPositive
from apclock.observables import (
    asymptotic_expectation,
    canonical_t0,
    channel_apply,
    galapon_diagnostic,
    galapon_operator,
    horizon_average,
    kraus_completeness,
    kraus_decompose,
    normalisation_operator,
    pom_density,
    pom_function,
    random_density_matrix,
    random_t0,
    validate_t0,
)
from apclock.spectrum import harmonic, hydrogen, isotropic2, make_spectrum

T = np.linspace(-7, 13, 25)


def oracle_density(s, t0, rho, t):
    h = np.diag(s.basis_frequencies)
    out = []
    for tv in np.atleast_1d(t):
        u = expm(-1j * h * tv)
        out.append(np.trace(rho @ u @ t0 @ u.conj().T).real)
    return np.array(out)


def test_validate_examples():
    s = hydrogen(1.0, 3)
    ident = validate_t0(np.eye(3), s)
    psi = random_state(s, np.random.default_rng(0))
    assert np.allclose(pom_density(ident, psi, T), 1)
    ones = validate_t0(np.ones((3, 3)), s)
    assert np.array_equal(ones.t0, canonical_t0(s).t0)
    bad = np.ones((3, 3))
    bad[1, 1] = 0.9
    with pytest.raises((DiagonalViolation, NotPositive)):
        validate_t0(bad, s)
    diag_bad = np.eye(3)
    diag_bad[2, 2] = 0.9
    with pytest.raises(DiagonalViolation):
        validate_t0(diag_bad, s)


def test_validate_rejects_negative():
    s = hydrogen(1.0, 2)
    with pytest.raises(NotPositive):
        validate_t0([[1, 2], [2, 1]], s)


def test_canonical_t0_examples():
    assert np.array_equal(canonical_t0(hydrogen(1.0, 3)).t0, np.ones((3, 3)))
    iso = canonical_t0(isotropic2(1.0, 1)).t0
    # levels (0,d=0), (1,d=0), (1,d=1)
    assert np.array_equal(iso.real, [[1, 1, 0], [1, 1, 0], [0, 0, 1]])
    assert np.array_equal(canonical_t0(make_spectrum([0.0])).t0, [[1]])
    validate_t0(iso, isotropic2(1.0, 1))


def test_pom_density_canonical_equals_canonical_density(rng):
    for s in [hydrogen(1.0, 5), isotropic2(1.0, 3)]:
        psi = random_state(s, rng)
        assert np.max(np.abs(pom_density(canonical_t0(s), psi, T) - canonical_density(psi)(T))) < 1e-10


def test_pom_density_matches_matrix_exponential(rng):
    s = hydrogen(1.0, 4)
    pom = random_t0(s, rng)
    rho = random_density_matrix(s.dim, rng)
    assert np.max(np.abs(pom_density(pom, rho, T) - oracle_density(s, pom.t0, rho, T))) < 1e-12
    f = pom_function(pom, rho)
    assert np.max(np.abs(f(T).real - pom_density(pom, rho, T))) < 1e-12


def test_eigenstate_density_uniform(rng):
    s = hydrogen(1.0, 4)
    pom = random_t0(s, rng)
    assert np.allclose(pom_density(pom, eigenstate(s, 2), T), 1, atol=1e-12)


def test_kraus_examples():
    s = hydrogen(1.0, 4)
    ks = kraus_decompose(canonical_t0(s))
    assert len(ks) == 1
    assert np.allclose(np.abs(np.diag(ks[0])), 1)
    ident = kraus_decompose(validate_t0(np.eye(2), hydrogen(1.0, 2)))
    assert len(ident) == 2
    psi = np.array([1, 1]) / math.sqrt(2)
    assert np.allclose(channel_apply(ident, psi), np.diag([0.5, 0.5]))


def test_channel_examples(rng):
    rho = random_density_matrix(3, rng)
    assert np.allclose(channel_apply([np.eye(3)], rho), rho)
    deph = [np.diag(v) for v in np.eye(3)]
    out = channel_apply(deph, rho)
    assert np.allclose(out, np.diag(np.diag(rho)))


@pytest.mark.parametrize("n", [2, 3, 4, 5, 6])
def test_noise_equivalence(n, rng):
    s = hydrogen(1.0, n)
    can = canonical_t0(s)
    for _ in range(4):
        pom = random_t0(s, rng, rank=int(rng.integers(1, n + 1)))
        ks = kraus_decompose(pom)
        assert kraus_completeness(ks) <= 1e-10
        for _ in range(3):
            rho = random_density_matrix(n, rng)
            out = channel_apply(ks, rho)
            assert np.max(np.abs(np.diag(out) - np.diag(rho))) <= 1e-10
            lhs = pom_density(pom, rho, T)
            rhs = pom_density(can, out, T)
            assert np.max(np.abs(lhs - rhs)) <= 1e-9


def test_random_t0_degenerate_is_valid(rng):
    s = isotropic2(1.0, 2)
    pom = random_t0(s, rng)
    ks = kraus_decompose(pom)
    assert kraus_completeness(ks) <= 1e-10


def test_horizon_average_closed_form():
    w, X = 0.7, 13.0
    direct = (np.exp(1j * w * X) - 1) / (1j * w * X)
    assert horizon_average(w, X) == pytest.approx(direct, abs=1e-15)
    assert horizon_average(0.0, X) == 1


def test_normalisation_ladder():
    s = hydrogen(1.0, 4)
    gap = float(np.min(np.diff(s.energies)))
    devs = []
    for x in (1e2, 1e3, 1e4):
        X = x / gap
        tp = normalisation_operator(s, X)
        dev = float(np.max(np.abs(tp.N - np.eye(4))))
        assert dev <= 2 / (X * gap)
        devs.append(dev)
    assert devs[0] > devs[1] > devs[2]


def test_normalisation_dim_one():
    s = make_spectrum([0.5])
    for X in (1.0, 1e3):
        tp = normalisation_operator(s, X)
        assert np.array_equal(tp.N, [[1]])
        assert np.max(np.abs(tp.P0)) == 0


def test_small_horizon_has_null_space():
    s = hydrogen(1.0, 4)
    tp = normalisation_operator(s, 1e-3)
    assert np.trace(tp.P0).real >= 1
    # eigenvalues just above the cutoff make N^-1/2 ill-conditioned here
    assert tp.completeness_residual() <= 1e-6


def test_completeness_and_density_consistency(rng):
    s = hydrogen(1.0, 4)
    gap = float(np.min(np.diff(s.energies)))
    tp = normalisation_operator(s, 50 / gap)
    assert tp.completeness_residual() <= 1e-9
    psi = random_state(s, rng)
    t = np.linspace(0, tp.X, 7)
    elem = np.array([np.vdot(psi.amplitudes, tp.element(tv) @ psi.amplitudes).real for tv in t])
    assert np.allclose(tp.density(psi, t), elem, atol=1e-12)


def test_expectation_limit_three_level(rng):
    s = hydrogen(1.0, 3)
    gap = float(np.min(np.diff(s.energies)))
    psi = random_state(s, rng)
    tp = normalisation_operator(s, 1e6 / gap)
    fs = [{0.0: 1.0}, {0.75: 0.5, -0.75: 0.5}, {8 / 9: 1j, -8 / 9: -1j, 0.3: 2.0}]
    for f in fs:
        assert abs(tp.expectation(psi, f) - asymptotic_expectation(psi, f)) <= 1e-3


def test_expectation_matches_quadrature(rng):
    s = hydrogen(1.0, 3)
    tp = normalisation_operator(s, 40.0)
    psi = random_state(s, rng)
    f = APFunction.from_frequencies({0.3: 1.0, -0.75: 0.5j})
    x, w = np.polynomial.legendre.leggauss(400)
    t = 20 * (x + 1)
    quad = 20 * np.sum(w * f(t) * tp.density(psi, t))
    assert abs(quad - tp.expectation(psi, f)) < 1e-10


def test_galapon_two_level():
    s = make_spectrum([1.0, 2.0])
    g = galapon_operator(s)
    assert np.allclose(g, [[0, -1j], [1j, 0]])
    rep = galapon_diagnostic(s, equal_superposition(s), [0, 1])
    assert np.max(np.abs(rep.commutator_diagonal)) == 0


def test_galapon_eigenstate_is_static():
    s = hydrogen(1.0, 4)
    taus = np.linspace(0, 10, 11)
    rep = galapon_diagnostic(s, eigenstate(s, 1), taus)
    assert np.ptp(rep.expectations) < 1e-12
    assert rep.covariance_deviation == pytest.approx(10, abs=1e-9)


def test_galapon_zero_sum_subspace():
    s = hydrogen(1.0, 3)
    rep = galapon_diagnostic(s, equal_superposition(s), [0.0])
    assert rep.subspace_residual <= 1e-10
    assert rep.hermiticity_error == 0
    assert rep.eigenstate_action_error <= 1e-12


def test_galapon_fails_covariance():
    s = hydrogen(1.0, 4)
    rep = galapon_diagnostic(s, equal_superposition(s), np.linspace(0, 10, 201))
    assert rep.covariance_deviation > 0.1
