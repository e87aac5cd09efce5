import numpy as np
import pytest

from uhdgof.families import Family, binomial, gaussian, resolve_family


@pytest.mark.parametrize("family", [gaussian(), binomial()])
def test_mu_prime_matches_finite_differences(family):
    z = np.linspace(-4, 4, 41)
    h = 1e-6
    numeric = (family.mu(z + h) - family.mu(z - h)) / (2 * h)
    analytic = family.mu_prime(z)
    rel = np.abs(numeric - analytic) / np.maximum(np.abs(analytic), 1e-12)
    assert rel.max() < 1e-6


def test_gaussian_identity_link():
    fam = gaussian()
    z = np.array([-2.0, 0.0, 3.5])
    assert np.array_equal(fam.mu(z), z)
    assert np.array_equal(fam.mu_prime(z), np.ones(3))


def test_binomial_link_range_and_symmetry():
    fam = binomial()
    z = np.linspace(-30, 30, 101)
    mu = fam.mu(z)
    assert np.all((mu > 0) & (mu < 1))
    assert np.allclose(mu + fam.mu(-z), 1.0)
    assert fam.mu(0.0) == pytest.approx(0.5)


def test_gaussian_deviance_is_rss():
    fam = gaussian()
    y = np.array([1.0, 2.0, 3.0])
    mu = np.array([1.5, 2.0, 2.0])
    assert fam.deviance(y, mu) == pytest.approx(0.25 + 0.0 + 1.0)


def test_binomial_deviance_matches_loglik():
    fam = binomial()
    y = np.array([1.0, 0.0, 1.0])
    mu = np.array([0.8, 0.3, 0.5])
    expected = -2 * (np.log(0.8) + np.log(0.7) + np.log(0.5))
    assert fam.deviance(y, mu) == pytest.approx(expected)


def test_binomial_response_validation():
    fam = binomial()
    fam.validate_response(np.array([0.0, 1.0, 1.0]))
    with pytest.raises(ValueError, match="binomial response"):
        fam.validate_response(np.array([0.0, 2.0]))


def test_resolve_family():
    assert resolve_family("gaussian").kind == "gaussian"
    assert resolve_family(binomial()).kind == "binomial"
    with pytest.raises(ValueError):
        Family("poisson")
