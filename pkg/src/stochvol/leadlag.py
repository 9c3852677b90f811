"""Lead-lag moments between returns and the volatility level.

The object of interest is ``gamma_k = Cov(r_t, exp(h_{t+k}))`` together
with its correlation version ``rho_k = gamma_k / sqrt(m2 Var(exp h))``.
Positive ``k`` means the volatility level leads the return is being
predicted by the return (``r_t`` against future ``exp(h_{t+k})``);
negative ``k`` correlates the return with past volatility.

Shapes by model:

* ``M2.x`` with Gaussian or skewed-t shocks: only ``k >= 1`` is nonzero
  (the return shock can only enter tomorrow's state).
* ``M3.x``: all lags including ``k <= 0`` respond, because the return
  shock and today's state innovation are correlated.
* Jump variants multiply in finite and infinite products of the
  Bernoulli moment factors.

Every nonzero cell shares the common factor
``rho sigma exp(3 alpha / 2 + sigma^2 (5 + 4 phi^{|k|}) / (8 (1 - phi^2)))``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .models import ModelId, ModelSpec, omega_constant, require_valid, xi
from .moments import finite_product_P, moments, product_P

__all__ = [
    "var_exp_h",
    "gamma",
    "LeadLagProfile",
    "leadlag_profile",
]


def var_exp_h(spec: ModelSpec) -> float:
    """Stationary variance of the volatility level ``exp(h_t)``.

    For the Gaussian-state models this is the lognormal expression
    ``exp(2 alpha + v) (exp(v) - 1)`` with ``v = sigma^2 / (1 - phi^2)``;
    with state jumps each exponential moment picks up a product factor:
    ``exp(2 alpha + v) (exp(v) P(2) - P(1)^2)``.  Setting ``pi2 = 0``
    collapses the second form to the first.
    """
    require_valid(spec)
    p = spec.params
    v = p.sigma**2 / (1.0 - p.phi**2)
    if spec.model.has_jumps:
        P1 = product_P(1.0, p.pi2, p.phi)
        P2 = product_P(2.0, p.pi2, p.phi)
        return math.exp(2.0 * p.alpha + v) * (math.exp(v) * P2 - P1 * P1)
    return math.exp(2.0 * p.alpha + v) * math.expm1(v)


def _common_factor(p, k: int) -> float:
    """rho sigma exp(3 alpha/2 + sigma^2 (5 + 4 phi^{|k|}) / (8 (1 - phi^2)))."""
    return (
        p.rho
        * p.sigma
        * math.exp(
            1.5 * p.alpha
            + p.sigma**2 * (5.0 + 4.0 * p.phi ** abs(k)) / (8.0 * (1.0 - p.phi**2))
        )
    )


def gamma(spec: ModelSpec, k: int) -> float:
    """Closed-form ``Cov(r_t, exp(h_{t+k}))`` at signed lag ``k``."""
    require_valid(spec)
    p = spec.params
    model = spec.model
    if p.rho == 0.0:
        return 0.0

    v = p.sigma**2 / (1.0 - p.phi**2)
    cf = _common_factor(p, k)
    phik = p.phi ** abs(k)

    if model is ModelId.M2_1 or model is ModelId.M2_2:
        if k < 1:
            return 0.0
        g = p.phi ** (k - 1)
    elif model is ModelId.M3_1 or model is ModelId.M3_2:
        if k > 0:
            g = (phik + 0.5) - 0.5 * math.exp(-v * phik / 2.0)
        elif k == 0:
            g = 1.5 - 0.5 * math.exp(-v / 2.0)
        else:
            g = 0.5 - 0.5 * math.exp(-v * phik / 2.0)
    elif model is ModelId.M2_3:
        if k < 1:
            return 0.0
        # the k state jumps between t+1 and t+k each contribute one factor
        g = (
            p.phi ** (k - 1)
            * product_P(phik + 0.5, p.pi2, p.phi)
            * finite_product_P(1.0, p.pi2, p.phi, k)
        )
    else:  # M3.3
        tail = 0.5 * math.exp(-v * phik / 2.0) * product_P(1.0, p.pi2, p.phi) * product_P(
            0.5, p.pi2, p.phi
        )
        if k > 0:
            g = (phik + 0.5) * product_P(phik + 0.5, p.pi2, p.phi) * finite_product_P(
                1.0, p.pi2, p.phi, k
            ) - tail
        elif k == 0:
            g = 1.5 * product_P(1.5, p.pi2, p.phi) - tail
        else:
            g = 0.5 * product_P(phik / 2.0 + 1.0, p.pi2, p.phi) * finite_product_P(
                0.5, p.pi2, p.phi, abs(k)
            ) - tail

    if model.has_mixing:
        delta = p.lam / math.sqrt(1.0 + p.lam**2)
        g *= omega_constant(p.nu, p.lam) * math.sqrt(1.0 - delta * delta) * xi(p.nu, 0.5)

    return cf * g


@dataclass(frozen=True)
class LeadLagProfile:
    """Covariances and correlations over a symmetric window of lags."""

    model: ModelId
    lags: np.ndarray
    gammas: np.ndarray
    rhos: np.ndarray


def leadlag_profile(spec: ModelSpec, max_lag: int) -> LeadLagProfile:
    """Profile of ``gamma_k`` and ``rho_k`` for ``k = -max_lag .. max_lag``."""
    if max_lag < 0:
        raise ValueError(f"max_lag must be nonnegative, got {max_lag}")
    lags = np.arange(-max_lag, max_lag + 1)
    gammas = np.array([gamma(spec, int(k)) for k in lags])
    scale = math.sqrt(moments(spec).m2 * var_exp_h(spec))
    return LeadLagProfile(spec.model, lags, gammas, gammas / scale)
