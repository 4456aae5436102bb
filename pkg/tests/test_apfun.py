import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from apclock.apfun import (
    APDensity,
    APFunction,
    add,
    besicovitch_mean,
    conjugate,
    empirical_mean_estimate,
    evaluate,
    gl_integral,
    multiply,
    parseval_norm,
    reconstruct_density,
    scale,
)
from apclock.errors import ModuleMismatch, PositivityCheckFailed, TermBudgetExceeded
from apclock.spectrum import FrequencyModule

UNIT = FrequencyModule(basis=(1.0,))
TWO = FrequencyModule(basis=(1.0, math.sqrt(2)))


def fn(terms, module=UNIT):
    return APFunction(terms, module)


def test_evaluate_constant_and_cosine():
    assert evaluate(fn({(0,): 1}), 3.7) == pytest.approx(1)
    cos = fn({(1,): 0.5, (-1,): 0.5})
    assert evaluate(cos, 0.0) == pytest.approx(1)
    assert evaluate(cos, math.pi) == pytest.approx(-1)
    t = np.linspace(0, 10, 7)
    assert np.allclose(cos(t), np.cos(t))


def test_add_cancels_to_zero_function():
    assert len(add(fn({(1,): 1}), fn({(1,): -1}))) == 0


def test_conjugate_negates_frequency():
    c = conjugate(fn({(1,): 1j}))
    assert dict(c.terms) == {(-1,): -1j}


def test_scale():
    assert dict(scale(fn({(0,): 1, (1,): 2}), 3).terms) == {(0,): 3, (1,): 6}


def test_module_mismatch():
    with pytest.raises(ModuleMismatch):
        add(fn({(0,): 1}), fn({(0, 0): 1}, TWO))


def test_multiply_examples():
    e = fn({(1,): 1})
    assert dict(multiply(e, conjugate(e)).terms) == {(0,): 1}
    one_plus = fn({(0,): 1, (1,): 1})
    prod = multiply(one_plus, conjugate(one_plus))
    assert dict(prod.terms) == {(0,): 2, (1,): 1, (-1,): 1}
    f = fn({(2,): 0.3 + 1j, (-5,): 2})
    assert multiply(f, fn({(0,): 1})).allclose(f)


def test_multiply_term_budget():
    f = fn({(k,): 1.0 for k in range(0, 2000, 2)})
    g = fn({(k,): 1.0 for k in range(0, 2000 * 1001, 1001)})
    with pytest.raises(TermBudgetExceeded):
        multiply(f, g, cap=10_000)


def test_multiply_dense_path_matches_pairwise():
    rng = np.random.default_rng(3)
    c = rng.normal(size=60) + 1j * rng.normal(size=60)
    f = fn({(k,): c[k] for k in range(60)})
    fast = multiply(f, conjugate(f), cap=1000)
    slow = multiply(f, conjugate(f))
    assert fast.allclose(slow, atol=1e-12)


def test_besicovitch_mean_examples():
    assert besicovitch_mean(APFunction.from_frequencies({1.3: 1})) == 0
    assert besicovitch_mean(fn({(0,): 1})) == 1
    assert besicovitch_mean(fn({(0, 0): 3, (0, 1): 2}, TWO)) == 3


def test_parseval_examples():
    assert parseval_norm(fn({(0, 0): 3, (0, 1): 2}, TWO)) == pytest.approx(13)
    assert parseval_norm(fn({(0,): 1})) == 1


def test_orthogonality_exact():
    for key in [(0, 0), (1, 0), (0, -1), (3, -2)]:
        assert besicovitch_mean(fn({key: 1}, TWO)) == (1 if key == (0, 0) else 0)


def test_empirical_mean_whole_periods_and_constant():
    e = fn({(1,): 1})
    est = empirical_mean_estimate(e, X=[2 * math.pi * k for k in (5, 10, 20)])
    assert abs(est.value) < 1e-13
    one = fn({(0,): 1})
    assert empirical_mean_estimate(one, X=17.3).value == pytest.approx(1, abs=1e-13)


def test_empirical_mean_decay_on_ladder():
    f = APFunction.from_frequencies({math.sqrt(2): 1})
    est = empirical_mean_estimate(f, X=[1e3, 1e4, 1e5])
    mags = [abs(v) for v in est.values]
    for m, x in zip(mags, est.horizons):
        assert m <= 2 / (math.sqrt(2) * x) + 1e-12
    assert mags[0] > mags[1] > mags[2]


def test_empirical_mean_from_samples():
    est = empirical_mean_estimate(None, samples=np.ones(100))
    assert est.value == 1
    assert est.error == 0


def test_gl_integral_independent_of_partition():
    f = lambda t: np.exp(1j * math.sqrt(3) * t) + np.cos(t) ** 2
    a = gl_integral(f, 0, 123.4, panel=0.5)
    b = gl_integral(f, 0, 123.4, panel=0.37)
    c = gl_integral(f, 0, 50.0, panel=0.5) + gl_integral(f, 50.0, 123.4, panel=0.5)
    assert abs(a - b) < 1e-12
    assert abs(a - c) < 1e-12


def test_density_validation():
    with pytest.raises(ValueError):
        APDensity(function=fn({(0,): 2}))
    with pytest.raises(ValueError):
        APDensity(function=fn({(0,): 1, (1,): 0.2j}))
    with pytest.raises(PositivityCheckFailed):
        APDensity(function=fn({(0,): 1, (1,): 0.6, (-1,): 0.6})).check_positive()


def test_density_certificate_rank_two():
    p = APDensity(function=fn({(0, 0): 1, (1, 0): 0.25, (-1, 0): 0.25, (0, 1): 0.25, (0, -1): 0.25}, TWO))
    cert = p.check_positive()
    assert cert.passed
    assert cert.n_samples == 2 ** 16
    # true infimum is 0, approached but not attained on a finite grid
    assert 0 <= cert.min_value < 0.2


def test_reconstruct_from_identical_samples():
    p = reconstruct_density(np.zeros(10), [-1.0, 0.0, 1.0])
    assert p.function.coefficient_at(1.0) == pytest.approx(1)
    assert p.function.coefficient_at(-1.0) == pytest.approx(1)
    assert p.function.coefficient_at(0.0) == 1


def test_reconstruct_uniform_and_negation_check():
    p = reconstruct_density([0.3, 1.2], [0.0])
    assert dict(p.function.terms) == {p.module.zero: 1}
    with pytest.raises(ValueError):
        reconstruct_density([0.3], [0.0, 1.0])


# -- properties ----------------------------------------------------------------------

keys2 = st.tuples(st.integers(-6, 6), st.integers(-6, 6))
coeff = st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False)
ap_terms = st.dictionaries(keys2, coeff, min_size=0, max_size=50)


@settings(max_examples=60, deadline=None)
@given(ap_terms)
def test_parseval_matches_mean_of_square(terms):
    f = fn(terms, TWO)
    assert parseval_norm(f) == pytest.approx(besicovitch_mean(multiply(conjugate(f), f)).real, abs=1e-12,
                                             rel=1e-12)


@settings(max_examples=60, deadline=None)
@given(ap_terms, ap_terms)
def test_schwarz_inequality(a, b):
    f, g = fn(a, TWO), fn(b, TWO)
    lhs = abs(besicovitch_mean(multiply(conjugate(f), g))) ** 2
    assert lhs <= parseval_norm(f) * parseval_norm(g) * (1 + 1e-12) + 1e-12


@settings(max_examples=60, deadline=None)
@given(ap_terms)
def test_realness_flag(terms):
    f = fn(terms, TWO)
    assert f.is_real == conjugate(f).allclose(f, atol=0)
    sym = f + conjugate(f)
    assert sym.is_real
    t = np.linspace(-5, 5, 9)
    assert np.allclose(np.imag(sym(t)), 0, atol=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.dictionaries(st.integers(-8, 8), coeff, min_size=1, max_size=10))
def test_empirical_mean_converges_to_exact_mean(terms):
    f = fn({(k,): v for k, v in terms.items()}, FrequencyModule(basis=(math.sqrt(2),)))
    est = empirical_mean_estimate(f, X=[1e2, 1e3, 1e4])
    bound = sum(2 * abs(v) / (abs(k) * math.sqrt(2)) for k, v in terms.items() if k)
    for value, x in zip(est.values, est.horizons):
        assert abs(value - besicovitch_mean(f)) <= bound / x + 1e-9


def test_certificate_long_period_falls_back_to_sampling():
    from apclock.canonical import canonical_density, equal_superposition
    from apclock.spectrum import hydrogen

    cert = canonical_density(equal_superposition(hydrogen(1.0, 8)), check=False).check_positive()
    assert cert.n_samples == 2 ** 16 and cert.passed
