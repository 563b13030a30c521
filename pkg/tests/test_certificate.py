import math
from fractions import Fraction

import pytest

from src.exceptions import ValidationError
from src.optim.certificate import certificate


def _exact(L, mu, eta, m):
    """Rational evaluation of rho and the delta coefficient from decimal strings."""
    L, mu, eta = Fraction(L), Fraction(mu), Fraction(eta)
    shrink = 1 - 4 * L * eta
    rho = 1 / (mu * eta * shrink * m) + 4 * L * eta * (m + 1) / (shrink * m)
    delta = 8 * eta ** 2 * L * mu * m / (eta * mu * (m - 4 * eta * L * (2 * m + 1)) - 1)
    return rho, delta


@pytest.mark.parametrize("L, mu, eta, m", [("1", "0.1", "0.05", 1000), ("2", "0.5", "0.01", 500)])
def test_matches_rational_evaluation(L, mu, eta, m):
    cert = certificate(float(mu), 0.0, float(L), float(eta), m)
    rho, delta = _exact(L, mu, eta, m)
    assert cert.rho == pytest.approx(float(rho), rel=1e-12)
    assert cert.delta_coeff == pytest.approx(float(delta), rel=1e-12)
    assert cert.feasible


def test_pinned_values():
    cert = certificate(0.06, 0.04, 1.0, 0.05, 1000)
    assert cert.rho == pytest.approx(0.50025, rel=1e-12)
    assert cert.delta_coeff == pytest.approx(2 / 1.999, rel=1e-12)

    cert = certificate(0.5, 0.0, 2.0, 0.01, 500)
    assert cert.rho == pytest.approx(0.52191304, rel=1e-7)
    assert cert.delta_coeff == pytest.approx(0.4 / 1.0996, rel=1e-12)


def test_rho_above_one_is_infeasible():
    cert = certificate(0.002, 0.0, 0.25, 0.4, 20)
    assert cert.rho > 1
    assert not cert.feasible


def test_step_at_the_boundary_is_infeasible():
    assert not certificate(0.1, 0.0, 1.0, 1.0 / 8.0, 10_000).feasible


def test_vanishing_step_blows_up():
    assert certificate(0.1, 0.0, 1.0, 1e-9, 1000).rho > 1e6
    cert = certificate(0.1, 0.0, 1.0, 0.0, 1000)
    assert math.isinf(cert.rho) and not cert.feasible


def test_longer_inner_loops_contract_faster():
    assert certificate(0.1, 0.0, 1.0, 0.05, 2000).rho < certificate(0.1, 0.0, 1.0, 0.05, 1000).rho


def test_invalid_inputs():
    with pytest.raises(ValidationError):
        certificate(0.1, 0.0, 0.0, 0.05, 10)
    with pytest.raises(ValidationError):
        certificate(0.0, 0.0, 1.0, 0.05, 10)
    with pytest.raises(ValidationError):
        certificate(0.1, 0.0, 1.0, 0.05, 0)
