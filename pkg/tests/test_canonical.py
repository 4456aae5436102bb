import math

import mpmath
import numpy as np
import pytest

from apclock.apfun import APFunction, besicovitch_mean, conjugate, multiply, parseval_norm
from apclock.canonical import (
    StateVector,
    autocorrelation,
    canonical_density,
    coherent_phase_state,
    covariance_check,
    eigenstate,
    equal_superposition,
    evolve,
    isotropic_coherent_state,
    product_coherent_state,
    random_state,
    relabel,
    time_representation,
)
from apclock.errors import NotNormalized
from apclock.spectrum import anisotropic2, harmonic, hydrogen, isotropic2, make_spectrum

SQ2 = math.sqrt(2)


def two_level():
    return equal_superposition(harmonic(1.0, 1))


def test_state_must_be_normalised():
    with pytest.raises(NotNormalized):
        StateVector(harmonic(1.0, 1), [1, 1])


def test_evolve_examples():
    psi = two_level()
    assert np.array_equal(evolve(psi, 0.0).amplitudes, psi.amplitudes)
    out = evolve(psi, math.pi).amplitudes
    assert np.allclose(np.abs(out), np.abs(psi.amplitudes))
    assert np.allclose(out * math.sqrt(2), [1, -1])
    e = eigenstate(harmonic(1.0, 3), 2)
    ev = evolve(e, 0.77).amplitudes
    assert abs(np.vdot(e.amplitudes, ev)) == pytest.approx(1)


def test_time_representation_examples():
    s = harmonic(1.0, 3)
    th = time_representation(eigenstate(s, 0)).thetas
    assert len(th) == 1 and dict(th[0].terms) == {s.keys[0]: 1}
    th2 = time_representation(two_level()).thetas[0]
    assert len(th2) == 2
    assert all(abs(abs(c) - 1 / math.sqrt(2)) < 1e-15 for c in th2.terms.values())


def test_theta_shift_under_evolution(rng):
    psi = random_state(anisotropic2(1.0, SQ2, 2, 2), rng)
    tau = 0.83
    th0 = time_representation(psi).thetas[0]
    tht = time_representation(evolve(psi, tau)).thetas[0]
    t = np.linspace(-3, 7, 31)
    assert np.max(np.abs(tht(t) - th0(t - tau))) < 1e-12


def test_theta_normalisation_degenerate(rng):
    psi = random_state(isotropic2(1.0, 4), rng)
    assert sum(parseval_norm(th) for th in time_representation(psi).thetas) == pytest.approx(1, abs=1e-12)


def test_density_examples():
    p = canonical_density(eigenstate(hydrogen(1.0, 4), 2))
    assert len(p.function) == 1 and p.function.coefficient_at(0.0) == 1
    t = np.linspace(0, 4 * math.pi, 200)
    assert np.max(np.abs(canonical_density(two_level())(t) - (1 + np.cos(t)))) < 1e-14


def test_isotropic_density_closed_form():
    u = 0.5
    # amplitudes cut below 1e-12, i.e. probability tail 1e-24
    psi = isotropic_coherent_state(u, 1.0, tail=1e-24)
    t = np.linspace(0, 2 * math.pi, 1000)
    expected = (1 - u * u) / (1 + u * u - 2 * u * np.cos(t))
    assert np.max(np.abs(canonical_density(psi)(t) - expected)) < 1e-10


def test_zero_frequency_coefficient_exactly_one(rng):
    for s in [harmonic(1.0, 5), hydrogen(1.0, 5), isotropic2(1.0, 3), anisotropic2(1.0, SQ2, 2, 2)]:
        p = canonical_density(random_state(s, rng))
        assert abs(besicovitch_mean(p.function) - 1) < 1e-14


def test_degenerate_reduction(rng):
    # with degeneracy one the degenerate sum is |theta|^2
    psi = random_state(hydrogen(1.0, 5), rng)
    th = time_representation(psi).thetas
    assert len(th) == 1
    direct = multiply(conjugate(th[0]), th[0])
    assert canonical_density(psi).function.allclose(direct, atol=1e-15)


def test_density_via_explicit_double_sum(rng):
    s = hydrogen(1.0, 5)
    psi = random_state(s, rng)
    c, e = psi.amplitudes, s.energies
    t = np.linspace(0, 30, 50)
    direct = np.array([abs(np.sum(c * np.exp(1j * e * tv))) ** 2 for tv in t])
    assert np.max(np.abs(canonical_density(psi)(t) - direct)) < 1e-12


def test_relabelling_preserves_energy_statistics(rng):
    s = isotropic2(1.0, 3)
    psi = random_state(s, rng)
    moved = relabel(psi, {1: [1, 0], 3: [2, 0, 3, 1]})
    assert np.allclose(moved.level_probabilities, psi.level_probabilities)
    tau = np.linspace(0, 10, 20)
    assert np.allclose(autocorrelation(moved)(tau), autocorrelation(psi)(tau))


def test_relabelling_same_permutation_on_every_level_is_invariant(rng):
    s = isotropic2(1.0, 3)
    amps = rng.normal(size=s.dim) + 1j * rng.normal(size=s.dim)
    amps[s.index(0, 0)] = 0
    psi = StateVector.normalized(s, amps)
    swap = {j: [1, 0] + list(range(2, s.degeneracies[j])) for j in range(1, s.n_levels)}
    t = np.linspace(0, 10, 40)
    assert np.max(np.abs(canonical_density(relabel(psi, swap))(t) - canonical_density(psi)(t))) < 1e-12


def test_relabelling_one_level_changes_density(rng):
    # the degenerate density groups amplitudes by label, so a lone swap is visible
    s = isotropic2(1.0, 2)
    psi = StateVector.from_pairs(s, {(0, 0): 1, (1, 0): 1}, normalize=True)
    t = np.linspace(0, 2 * math.pi, 40)
    assert np.max(np.abs(canonical_density(psi)(t) - (1 + np.cos(t)))) < 1e-12
    assert np.max(np.abs(canonical_density(relabel(psi, {1: [1, 0]}))(t) - 1)) < 1e-12


def test_autocorrelation_examples(rng):
    psi = random_state(hydrogen(1.0, 5), rng)
    a = autocorrelation(psi)
    assert a(0.0) == pytest.approx(1, abs=1e-14)
    e = eigenstate(hydrogen(1.0, 5), 3)
    assert np.allclose(np.abs(autocorrelation(e)(np.linspace(0, 50, 20))), 1)


def test_autocorrelation_matches_mean_of_shifted_product(rng):
    psi = random_state(hydrogen(1.0, 5), rng)
    th = time_representation(psi).thetas[0]
    a = autocorrelation(psi)
    for tau in rng.uniform(-20, 20, size=20):
        shifted = APFunction({k: c * np.exp(1j * th.module.value(k) * tau) for k, c in th.terms.items()},
                             th.module)
        via_mean = besicovitch_mean(multiply(conjugate(th), shifted))
        assert abs(via_mean - a(tau)) < 1e-10


def test_covariance_examples(rng):
    psi = two_level()
    grid = np.linspace(0, 10, 100)
    assert covariance_check(psi, 0.0, grid) == 0
    assert covariance_check(psi, 1.7, grid) <= 1e-10
    prod = product_coherent_state(0.4, 0.3, 1.0, SQ2, tail=1e-6)
    assert covariance_check(prod, math.sqrt(3), grid) <= 1e-10


@pytest.mark.parametrize("family", ["harmonic", "hydrogen", "isotropic", "anisotropic"])
def test_covariance_property(family, rng):
    s = {"harmonic": harmonic(1.0, 11), "hydrogen": hydrogen(1.0, 12),
         "isotropic": isotropic2(1.0, 3), "anisotropic": anisotropic2(1.0, SQ2, 3, 2)}[family]
    grid = np.linspace(-20, 20, 60)
    for _ in range(10):
        psi = random_state(s, rng)
        assert covariance_check(psi, rng.uniform(-50, 50), grid) <= 1e-10


def test_coherent_phase_truncation():
    psi = coherent_phase_state(0.5)
    p = psi.level_probabilities
    assert p.size - 1 == math.ceil(math.log(1e-12) / (2 * math.log(0.5))) - 1
    assert p[0] == pytest.approx(0.75, rel=1e-11)


def test_exact_rational_spectrum_density():
    from fractions import Fraction
    s = make_spectrum([Fraction(-1), Fraction(-1, 4), Fraction(-1, 9)], [1, 1, 1])
    psi = equal_superposition(s)
    t = np.linspace(0, 40, 33)
    e = [-1, -0.25, -1 / 9]
    direct = [float(abs(sum(mpmath.exp(1j * ev * tv) for ev in e)) ** 2 / 3) for tv in t]
    assert np.max(np.abs(canonical_density(psi)(t) - direct)) < 1e-12
