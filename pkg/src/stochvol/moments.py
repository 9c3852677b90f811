"""Closed-form unconditional return moments for the six models.

All six models admit closed forms for the second, third and fourth
unconditional return moments.  The heavy lifting happens in log space:
each moment is a sum of terms of the form ``c * exp(big)``, and the
implementation keeps ``big`` symbolic until the final combination so
parameter ranges with ``alpha`` far from zero or ``phi`` near one do not
overflow.

For the jump models the stationary moment generating function of the
centered state involves the infinite product :func:`product_P`; it
converges geometrically because ``phi^{2j} -> 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .models import (
    HALF_NORMAL_MEAN,
    ModelId,
    ModelSpec,
    mean_correction,
    omega_constant,
    require_valid,
    xi,
)

__all__ = [
    "product_P",
    "finite_product_P",
    "MomentSummary",
    "moments",
]


def product_P(d: float, pi2: float, phi: float, tol: float = 1e-12) -> float:
    """Infinite product ``prod_{j>=0} (1 - pi2 + pi2 exp(d^2 phi^{2j} / 2))``.

    This is the factor the state jumps contribute to
    ``E[exp(d (h - alpha))]`` under the stationary law.  Terms decay like
    ``1 + pi2 d^2 phi^{2j} / 2``, so the product is truncated once the
    current term's excess over 1 drops below ``tol``.  Accumulated in log
    space.
    """
    if pi2 == 0.0 or d == 0.0:
        return 1.0
    log_total = 0.0
    q = d * d / 2.0
    phi2 = phi * phi
    for _ in range(100_000):
        excess = pi2 * math.expm1(q)
        log_total += math.log1p(excess)
        if excess < tol:
            break
        q *= phi2
    return math.exp(log_total)


def finite_product_P(d: float, pi2: float, phi: float, n_terms: int) -> float:
    """Partial product over ``j = 0 .. n_terms - 1`` of the same factors."""
    if n_terms <= 0 or pi2 == 0.0 or d == 0.0:
        return 1.0
    log_total = 0.0
    q = d * d / 2.0
    phi2 = phi * phi
    for _ in range(n_terms):
        log_total += math.log1p(pi2 * math.expm1(q))
        q *= phi2
    return math.exp(log_total)


@dataclass(frozen=True)
class MomentSummary:
    """Unconditional return moments.

    ``m2``/``m3``/``m4`` are raw central moments of the return (the mean
    is zero by construction, so central and raw coincide).  ``skewness``
    is ``m3 / m2^1.5`` and ``kurtosis`` is ``m4 / m2^2``.  ``mu`` is the
    additive mean correction applied in the return equation.  Moments
    that do not exist for the given tail index (skewed-t with ``nu <= 3``
    or ``nu <= 4``) are reported as ``nan``; availability is announced up
    front by the capability map of :func:`stochvol.models.validate`.
    """

    model: ModelId
    m2: float
    m3: float
    m4: float
    skewness: float
    kurtosis: float
    mu: float


def moments(spec: ModelSpec) -> MomentSummary:
    """Closed-form m2, m3, m4, skewness and kurtosis for a model spec."""
    require_valid(spec)
    p = spec.params

    v = p.sigma**2 / (1.0 - p.phi**2)
    rs = p.rho * p.sigma
    # log E[exp(k h)] for the Gaussian part of the state, up to jump factors
    lm1 = p.alpha / 2.0 + v / 8.0  # k = 1/2
    lm2 = p.alpha + v / 2.0  # k = 1
    lm3 = 1.5 * p.alpha + 9.0 * v / 8.0  # k = 3/2
    lm4 = 2.0 * p.alpha + 2.0 * v  # k = 2

    model = spec.model
    variant = model.variant

    if variant == 2:
        delta = p.lam / math.sqrt(1.0 + p.lam**2)
        om = omega_constant(p.nu, p.lam)
        xi1 = xi(p.nu, 1.0)
        xi32 = xi(p.nu, 1.5) if p.nu > 3.0 else math.nan
        xi2 = xi(p.nu, 2.0) if p.nu > 4.0 else math.nan

    if model is ModelId.M2_1:
        m2 = math.exp(lm2)
        m3 = 0.0
        m4 = 3.0 * math.exp(lm4)
        mu = 0.0

    elif model is ModelId.M3_1:
        mu = mean_correction(spec)
        m2 = math.exp(lm2) * (1.0 + rs**2 - (rs**2 / 4.0) * math.exp(-v / 4.0))
        m3 = (
            1.5
            * rs
            * math.exp(lm3)
            * (
                -(rs**2 / 3.0) * math.exp(-0.75 * v)
                + 3.0
                + 2.25 * rs**2
                - (1.0 + rs**2) * math.exp(-v / 2.0)
            )
        )
        m4 = math.exp(lm4) * (
            3.0
            + 16.0 * rs**4
            - 9.0 * rs**2 * (1.0 + 0.75 * rs**2) * math.exp(-0.75 * v)
            - (3.0 * rs**4 / 16.0) * math.exp(-1.5 * v)
            + 24.0 * rs**2
            + 1.5 * rs**2 * (1.0 + rs**2) * math.exp(-1.25 * v)
        )

    elif model is ModelId.M2_2:
        mu = 0.0
        m2 = math.exp(lm2) * om**2 * xi1 * (1.0 - 2.0 * delta**2 / math.pi)
        m3 = (
            om**3
            * xi32
            * math.exp(lm3)
            * delta**3
            * HALF_NORMAL_MEAN
            * (4.0 / math.pi - 1.0)
        )
        m4 = (
            om**4
            * xi2
            * math.exp(lm4)
            * (
                delta**4 * (3.0 - 4.0 / math.pi - 12.0 / math.pi**2)
                + 6.0 * delta**2 * (1.0 - delta**2) * (1.0 - 2.0 / math.pi)
                + 3.0 * (1.0 - delta**2) ** 2
            )
        )

    elif model is ModelId.M3_2:
        mu = mean_correction(spec)
        c2 = 1.0 - delta**2
        m2 = (
            math.exp(lm2)
            * om**2
            * xi1
            * ((1.0 - 2.0 * delta**2 / math.pi) + rs**2 * c2)
            - mu**2
        )
        ex3 = (
            om**3
            * xi32
            * math.exp(lm3)
            * (
                delta**3 * HALF_NORMAL_MEAN * (4.0 / math.pi - 1.0)
                + 4.5 * rs * (1.0 - 2.0 / math.pi) * delta**2 * math.sqrt(c2)
                + 4.5 * rs * c2**1.5 * (1.0 + 0.75 * rs**2)
            )
        )
        m3 = 3.0 * mu * m2 + mu**3 + ex3
        ex4 = (
            om**4
            * xi2
            * math.exp(lm4)
            * (
                delta**4 * (3.0 - 4.0 / math.pi - 12.0 / math.pi**2)
                + 8.0
                * rs
                * delta**3
                * math.sqrt(c2)
                * HALF_NORMAL_MEAN
                * (4.0 / math.pi - 1.0)
                + 6.0 * delta**2 * c2 * (1.0 - 2.0 / math.pi) * (1.0 + 4.0 * rs**2)
                + c2**2
                * (
                    3.0
                    + 6.0 * p.rho**2
                    - 3.0 * p.rho**4
                    + 24.0 * rs**2
                    + 16.0 * rs**4
                )
            )
        )
        m4 = 4.0 * mu * m3 - mu**4 - 6.0 * mu**2 * m2 + ex4

    elif model is ModelId.M2_3:
        mu = 0.0
        P1 = product_P(1.0, p.pi2, p.phi)
        P2 = product_P(2.0, p.pi2, p.phi)
        m2 = p.pi1 + math.exp(lm2) * P1
        m3 = 0.0
        m4 = (
            3.0 * p.pi1
            + 6.0 * p.pi1 * math.exp(lm2) * P1
            + 3.0 * math.exp(lm4) * P2
        )

    else:  # M3.3
        mu = mean_correction(spec)
        Ph = product_P(0.5, p.pi2, p.phi)
        P1 = product_P(1.0, p.pi2, p.phi)
        P32 = product_P(1.5, p.pi2, p.phi)
        P2 = product_P(2.0, p.pi2, p.phi)
        m2 = p.pi1 + math.exp(lm2) * (1.0 + rs**2) * P1 - mu**2
        m3 = (
            3.0 * m2 * mu
            + mu**3
            + 1.5 * rs * p.pi1 * math.exp(lm1) * Ph
            + 4.5 * rs * (1.0 + 0.75 * rs**2) * P32 * math.exp(lm3)
        )
        m4 = (
            4.0 * mu * m3
            - mu**4
            - 6.0 * mu**2 * m2
            + 3.0 * p.pi1
            + 6.0 * p.pi1 * math.exp(lm2) * P1 * (1.0 + rs**2)
            + math.exp(lm4)
            * P2
            * (
                3.0
                + 6.0 * p.rho**2
                - 3.0 * p.rho**4
                + 24.0 * rs**2
                + 16.0 * rs**4
            )
        )

    skew = m3 / m2**1.5
    kurt = m4 / m2**2
    return MomentSummary(model, m2, m3, m4, skew, kurt, mu)
