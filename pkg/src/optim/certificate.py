"""
Convergence certificate for the semi-stochastic nested loop.

With mu = mu_P + mu_R, smoothness L, step eta and inner length m (k_in):

    rho   = 1 / (mu eta (1 - 4 L eta) m) + 4 L eta (m + 1) / ((1 - 4 L eta) m)
    delta = 8 eta^2 L mu m / (eta mu (m - 4 eta L (2m + 1)) - 1)

so that E[F(w_s) - F*] <= rho^s (F(w_0) - F*) + delta * Delta_{H,P}.
The certificate is feasible when 0 < eta < 1/(8L) and rho < 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from src.exceptions import ValidationError


@dataclass(frozen=True)
class Certificate:
    rho: float
    delta_coeff: float
    feasible: bool


def _ratio(numerator: float, denominator: float) -> float:
    if denominator == 0:
        return math.inf if numerator >= 0 else -math.inf
    return numerator / denominator


def certificate(mu_P: float, mu_R: float, L: float, eta: float, m_inner: int) -> Certificate:
    if not L > 0:
        raise ValidationError(f"L must be positive, got {L}")
    mu = mu_P + mu_R
    if not mu > 0:
        raise ValidationError(f"mu_P + mu_R must be positive, got {mu}")
    if m_inner < 1:
        raise ValidationError(f"inner length must be >= 1, got {m_inner}")

    m = m_inner
    if eta <= 0:
        return Certificate(rho=math.inf, delta_coeff=math.inf, feasible=False)

    shrink = 1.0 - 4.0 * L * eta
    rho = _ratio(1.0, mu * eta * shrink * m) + _ratio(4.0 * L * eta * (m + 1), shrink * m)
    delta_coeff = _ratio(8.0 * eta**2 * L * mu * m, eta * mu * (m - 4.0 * eta * L * (2 * m + 1)) - 1.0)

    feasible = eta < 1.0 / (8.0 * L) and 0 < rho < 1
    return Certificate(rho=rho, delta_coeff=delta_coeff, feasible=bool(feasible))
