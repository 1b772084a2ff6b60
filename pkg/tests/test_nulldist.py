import math

import numpy as np
import pytest
from scipy import stats

from signcov.nulldist import NullDistribution, PrecisionError
from signcov.spectrum import (
    DiscreteMarginal,
    MarginalKind,
    MixtureSpectrum,
    spectrum_continuous,
    spectrum_discrete,
    spectrum_mixed,
)


def single(w):
    return NullDistribution(MixtureSpectrum(np.array([w]), 0.0, MarginalKind.DISCRETE_DISCRETE))


def test_single_weight_against_chi_square():
    d = single(0.25)
    for x in (-0.2, 0.0, 0.5, 1.5):
        assert d.cdf(x) == pytest.approx(stats.chi2.cdf(x / 0.25 + 1, 1), abs=1e-6)
    assert d.quantile(0.95) == pytest.approx(0.25 * (stats.chi2.ppf(0.95, 1) - 1), abs=1e-5)
    assert d.density(0.3) == pytest.approx(stats.chi2.pdf(0.3 / 0.25 + 1, 1) / 0.25, abs=1e-4)
    assert d.cdf(-0.3) == 0.0


def test_two_equal_weights_is_exponential():
    # w (chi2_2 - 2) with chi2_2 exponential of mean 2
    d = NullDistribution(MixtureSpectrum(np.array([0.1, 0.1]), 0.0, MarginalKind.DISCRETE_DISCRETE))
    for x in (-0.1, 0.0, 0.3, 1.0):
        assert d.cdf(x) == pytest.approx(1 - math.exp(-(x + 0.2) / 0.2), abs=1e-6)


def test_characteristic_function_identity():
    d = NullDistribution(spectrum_continuous())
    t = np.array([0.0, 0.3, 2.0])
    w = d.weights
    direct = np.array([
        np.prod((1 - 2j * w * s) ** -0.5 * np.exp(-1j * w * s)) * np.exp(-d.spectrum.tail_sq * s * s) for s in t
    ])
    assert np.max(np.abs(d.char_function(t) - direct)) < 1e-12
    assert d.char_function(0.0) == 1.0


def test_continuous_moments_and_monotonicity():
    d = NullDistribution(spectrum_continuous())
    assert d.variance == pytest.approx(0.32, abs=1e-12)
    xs = np.linspace(-0.9, 5, 25)
    F = d.cdf(xs)
    assert np.all(np.diff(F) >= -1e-9)
    assert F[0] < 1e-3 and F[-1] > 0.999


def test_cdf_integrates_density():
    from scipy.integrate import quad

    d = NullDistribution(spectrum_mixed(DiscreteMarginal.from_masses([0.2] * 5)))
    a, b = -0.3, 0.8
    mass, _ = quad(d.density, a, b, epsabs=1e-6)
    assert mass == pytest.approx(d.cdf(b) - d.cdf(a), abs=1e-4)


def test_quantile_roundtrip():
    for spec in (spectrum_continuous(), spectrum_discrete(DiscreteMarginal.from_masses([0.3, 0.7]),
                                                          DiscreteMarginal.from_masses([0.2, 0.3, 0.5]))):
        d = NullDistribution(spec)
        for q in (0.05, 0.5, 0.95, 0.99):
            assert d.cdf(d.quantile(q)) == pytest.approx(q, abs=1e-6)


def test_sampler_moments_and_seed():
    d = NullDistribution(spectrum_continuous())
    a = d.sample(200_000, seed=1)
    assert np.array_equal(a, d.sample(200_000, seed=1))
    assert abs(a.mean()) < 4 * math.sqrt(0.32 / a.size)
    assert a.var() == pytest.approx(0.32, rel=0.02)


def test_precision_error_reports_achieved():
    d = NullDistribution(spectrum_continuous(), target=1e-15, max_evals=500)
    with pytest.raises(PrecisionError) as info:
        d.cdf(0.1)
    assert info.value.achieved > 1e-15


def test_interpolant_matches_exact():
    d = NullDistribution(spectrum_continuous())
    F = d.cdf_interpolant()
    xs = np.linspace(-0.9, 3, 40)
    assert np.max(np.abs(F(xs) - d.cdf(xs))) < 1e-5
    assert F(np.array([-50.0]))[0] == 0.0 and F(np.array([50.0]))[0] == 1.0
