"""Model identifiers, parameter containers, and derived constants.

Six discrete-time stochastic volatility models are covered, organized on
two axes.

Timing of the log-volatility recursion:

* ``M2.x`` — the return at time t loads on a log-volatility built from
  past innovations only: ``r_t = exp(h_t/2) e_t`` with
  ``h_{t+1} = alpha + phi (h_t - alpha) + sigma eta_t``.  The return
  shock ``e_t`` and the state ``h_t`` are independent even when
  ``Corr(e_t, eta_t) = rho`` is nonzero, so the return mean is zero by
  construction.
* ``M3.x`` — the state is contemporaneous:
  ``h_t = alpha + phi (h_{t-1} - alpha) + sigma eta_t`` with the same
  cross-correlation ``rho``.  That coupling shifts the return mean, and
  an additive correction ``mu`` (see :func:`mean_correction`) restores
  ``E[r_t] = 0``.

Innovation variant (the ``.1`` / ``.2`` / ``.3`` suffix):

* ``.1`` — Gaussian return shock.
* ``.2`` — skewed heavy-tailed shock built from a gamma mixing variable
  ``U_t ~ Gamma(nu/2, rate nu/2)``, a half-normal ``W_t`` and the
  Gaussian ``e_t``, standardized so the conditional return variance is
  still ``exp(h_t)``.
* ``.3`` — Bernoulli-driven jumps ``K_{1t} J_{1t}`` in the return and
  ``K_{2t} J_{2t}`` in the state, with ``J ~ Bernoulli(pi)`` and
  ``K ~ N(0, 1)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

from scipy.special import gammaln

from .errors import MomentExistenceError, ValidationError

__all__ = [
    "ModelId",
    "SvParams",
    "ModelSpec",
    "ValidationReport",
    "DerivedConstants",
    "validate",
    "require_valid",
    "xi",
    "omega_constant",
    "mean_correction",
    "derived_constants",
    "HALF_NORMAL_MEAN",
]

# E[|Z|] for standard normal Z; the half-normal component is centered by this.
HALF_NORMAL_MEAN = math.sqrt(2.0 / math.pi)


class ModelId(str, Enum):
    """The six supported models."""

    M2_1 = "M2.1"
    M2_2 = "M2.2"
    M2_3 = "M2.3"
    M3_1 = "M3.1"
    M3_2 = "M3.2"
    M3_3 = "M3.3"

    @classmethod
    def parse(cls, text: str) -> "ModelId":
        """Parse 'M3.1' (case-insensitive, 'm3.1' and '3.1' accepted)."""
        t = text.strip().upper()
        if not t.startswith("M"):
            t = "M" + t
        for m in cls:
            if m.value == t:
                return m
        raise ValidationError(
            f"unknown model id {text!r}; expected one of "
            + ", ".join(m.value for m in cls)
        )

    @property
    def contemporaneous(self) -> bool:
        """True when the return loads on the same-step state innovation.

        These are the mean-corrected models; their return equation carries
        the additive constant from :func:`mean_correction`.
        """
        return self.value.startswith("M3")

    @property
    def variant(self) -> int:
        """Innovation variant: 1 Gaussian, 2 skewed-t, 3 jumps."""
        return int(self.value[-1])

    @property
    def has_mixing(self) -> bool:
        return self.variant == 2

    @property
    def has_jumps(self) -> bool:
        return self.variant == 3

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class SvParams:
    """Parameter vector.

    ``alpha`` is the stationary mean of the log-volatility, ``phi`` its
    persistence (|phi| < 1 required), ``sigma`` the innovation scale and
    ``rho`` the correlation between the return shock and the state
    innovation.  ``nu`` (> 2) and ``lam`` apply to the ``.2`` variant
    only; ``pi1``/``pi2`` are the jump probabilities of the ``.3``
    variant.  ``nu1``/``nu2``/``tau1``/``tau2`` are the jump size mean /
    scale parameters; only the (0, 0, 1, 1) configuration is supported
    and other values are rejected by :func:`validate`.
    """

    alpha: float
    phi: float
    sigma: float
    rho: float = 0.0
    nu: float | None = None
    lam: float | None = None
    pi1: float | None = None
    pi2: float | None = None
    nu1: float = 0.0
    nu2: float = 0.0
    tau1: float = 1.0
    tau2: float = 1.0


@dataclass(frozen=True)
class ModelSpec:
    """A model identifier plus its parameter vector."""

    model: ModelId
    params: SvParams

    @classmethod
    def create(cls, model: ModelId | str, **kwargs) -> "ModelSpec":
        """Build and validate a spec in one call."""
        mid = model if isinstance(model, ModelId) else ModelId.parse(model)
        spec = cls(mid, SvParams(**kwargs))
        require_valid(spec)
        return spec


@dataclass(frozen=True)
class ValidationReport:
    """Outcome of :func:`validate`.

    ``violations`` collects every failed constraint (not first-fail).
    ``capabilities`` maps statistic names to availability for these
    parameters: heavy tails can place the skewness or kurtosis outside
    the admissible tail-index range while the variance still exists.
    """

    ok: bool
    violations: tuple[str, ...]
    capabilities: dict[str, bool]


def validate(spec: ModelSpec) -> ValidationReport:
    """Check structural constraints; collect all violations."""
    p = spec.params
    bad: list[str] = []

    for name in ("alpha", "phi", "sigma", "rho"):
        v = getattr(p, name)
        if v is None or not math.isfinite(v):
            bad.append(f"{name} must be a finite real, got {v!r}")

    if p.phi is not None and math.isfinite(p.phi) and not abs(p.phi) < 1.0:
        bad.append(f"|phi| < 1 required for stationarity, got phi={p.phi}")
    if p.sigma is not None and math.isfinite(p.sigma) and not p.sigma > 0.0:
        bad.append(f"sigma > 0 required, got sigma={p.sigma}")
    if p.rho is not None and math.isfinite(p.rho) and not -1.0 <= p.rho <= 1.0:
        bad.append(f"rho must lie in [-1, 1], got rho={p.rho}")

    variant = spec.model.variant
    if variant == 2:
        if p.nu is None or not math.isfinite(p.nu) or p.nu <= 2.0:
            bad.append(f"nu > 2 required for the skewed-t variant, got nu={p.nu}")
        if p.lam is None or not math.isfinite(p.lam):
            bad.append(f"lam must be a finite real for the skewed-t variant, got {p.lam!r}")
    else:
        if p.nu is not None:
            bad.append(f"nu is not a parameter of {spec.model}")
        if p.lam is not None:
            bad.append(f"lam is not a parameter of {spec.model}")

    if variant == 3:
        for name in ("pi1", "pi2"):
            v = getattr(p, name)
            if v is None or not math.isfinite(v) or not 0.0 <= v <= 1.0:
                bad.append(f"{name} must lie in [0, 1] for the jump variant, got {v!r}")
        if (p.nu1, p.nu2, p.tau1, p.tau2) != (0.0, 0.0, 1.0, 1.0):
            bad.append(
                "nonzero jump-size means or non-unit jump-size scales "
                f"(nu1={p.nu1}, nu2={p.nu2}, tau1={p.tau1}, tau2={p.tau2}) "
                "are an unsupported extension; only (0, 0, 1, 1) is implemented"
            )
    else:
        if p.pi1 is not None:
            bad.append(f"pi1 is not a parameter of {spec.model}")
        if p.pi2 is not None:
            bad.append(f"pi2 is not a parameter of {spec.model}")

    caps = {"m2": True, "skewness": True, "kurtosis": True, "leadlag": True}
    if variant == 2 and p.nu is not None and math.isfinite(p.nu):
        caps["m2"] = p.nu > 2.0
        caps["skewness"] = p.nu > 3.0
        caps["kurtosis"] = p.nu > 4.0
        caps["leadlag"] = p.nu > 2.0

    return ValidationReport(ok=not bad, violations=tuple(bad), capabilities=caps)


def require_valid(spec: ModelSpec) -> None:
    """Raise ValidationError listing every violation, if any."""
    report = validate(spec)
    if not report.ok:
        raise ValidationError("; ".join(report.violations))


def xi(nu: float, k: float) -> float:
    """Inverse moment ``xi_nu(k) = E[U^-k]`` for ``U ~ Gamma(nu/2, rate nu/2)``.

    Exists iff ``nu > 2k``; otherwise raises
    :class:`~stochvol.errors.MomentExistenceError`.  Evaluated through
    log-gamma differences so large ``nu`` does not overflow.
    """
    if not nu > 2.0 * k:
        raise MomentExistenceError(
            f"xi_nu(k) requires nu > 2k; got nu={nu}, k={k}", order=k
        )
    a = 0.5 * nu
    return math.exp(k * math.log(a) + gammaln(a - k) - gammaln(a))


def omega_constant(nu: float, lam: float) -> float:
    """Scale that standardizes the skewed-t return component.

    The component ``S = omega U^{-1/2} [delta (W - E W) + sqrt(1-delta^2) e]``
    has ``Var(S) = omega^2 xi_nu(1) (1 - 2 delta^2 / pi)``; solving
    ``Var(S) = 1`` gives the value returned here.  Requires ``nu > 2``.
    """
    delta = lam / math.sqrt(1.0 + lam * lam)
    return 1.0 / math.sqrt(xi(nu, 1.0) * (1.0 - 2.0 * delta * delta / math.pi))


def _state_var_exponent(p: SvParams) -> float:
    """sigma^2 / (1 - phi^2), the Gaussian part of the stationary state variance."""
    return p.sigma**2 / (1.0 - p.phi**2)


def mean_correction(spec: ModelSpec) -> float:
    """Additive return-equation constant ``mu`` restoring ``E[r_t] = 0``.

    Zero for the ``M2.x`` models (their timing decouples the return shock
    from the state) and zero whenever ``rho = 0``.  For the
    contemporaneous models::

        mu = -(rho sigma / 2) * exp(alpha/2 + sigma^2 / (8 (1 - phi^2))) * A

    with ``A = 1`` for M3.1, ``A = sqrt(1-delta^2) omega xi_nu(1/2)`` for
    M3.2, and ``A = P(1/2)`` (the jump moment product, see
    :func:`stochvol.moments.product_P`) for M3.3.
    """
    require_valid(spec)
    p = spec.params
    if not spec.model.contemporaneous or p.rho == 0.0:
        return 0.0
    base = -(p.rho * p.sigma / 2.0) * math.exp(
        p.alpha / 2.0 + _state_var_exponent(p) / 8.0
    )
    variant = spec.model.variant
    if variant == 1:
        return base
    if variant == 2:
        delta = p.lam / math.sqrt(1.0 + p.lam**2)
        return (
            base
            * math.sqrt(1.0 - delta * delta)
            * omega_constant(p.nu, p.lam)
            * xi(p.nu, 0.5)
        )
    from .moments import product_P  # local import, avoids a cycle

    return base * product_P(0.5, p.pi2, p.phi)


@dataclass(frozen=True)
class DerivedConstants:
    """Constants implied by a parameter vector.

    For variants without the gamma mixing (``.1`` and ``.3``) the mixing
    is degenerate at 1: ``delta = 0``, ``omega = 1`` and every ``xi`` is 1.
    ``xi`` entries that do not exist for the given ``nu`` are None.
    """

    delta: float
    omega: float
    mu: float
    xi_half: float | None
    xi_one: float | None
    xi_threehalf: float | None
    xi_two: float | None


def derived_constants(spec: ModelSpec) -> DerivedConstants:
    require_valid(spec)
    p = spec.params
    if spec.model.has_mixing:
        delta = p.lam / math.sqrt(1.0 + p.lam**2)
        omega = omega_constant(p.nu, p.lam)

        def maybe_xi(k: float) -> float | None:
            return xi(p.nu, k) if p.nu > 2.0 * k else None

        xis = tuple(maybe_xi(k) for k in (0.5, 1.0, 1.5, 2.0))
    else:
        delta, omega = 0.0, 1.0
        xis = (1.0, 1.0, 1.0, 1.0)
    return DerivedConstants(delta, omega, mean_correction(spec), *xis)
