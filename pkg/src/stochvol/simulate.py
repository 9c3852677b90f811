"""Path simulation and stationary sampling for the six models.

Determinism contract
--------------------
Randomness flows through :class:`RngPolicy`, a (seed, stream) pair that
keys a counter-based Philox generator.  For a fixed policy the draw
order is frozen:

1. initial-state draws (only when ``h0="stationary"``),
2. state innovations ``eta`` (one per step),
3. the independent Gaussian component ``z`` (one per step),
4. for the skewed-t variant: mixing variables ``U`` then ``W``,
5. for the jump variant: ``J1, K1, J2, K2``.

The return shock is assembled as ``eps = rho eta + sqrt(1 - rho^2) z``,
so identical seeds give identical paths across runs and platforms, and
the same seed with ``rho = 0`` isolates the independent-shock case.

Timing conventions
------------------
``M2.x`` paths seed ``h_0`` directly and propagate
``h_{t+1} = alpha + phi (h_t - alpha) + sigma eta_t + K2_t J2_t``; the
return shock at t is correlated with the innovation entering t+1, so
``eps_t`` is independent of ``h_t``.  ``M3.x`` paths seed the pre-sample
state ``h_{-1}`` and propagate
``h_t = alpha + phi (h_{t-1} - alpha) + sigma eta_t + K2_t J2_t``; the
return shock at t is correlated with the innovation already inside
``h_t``, and the additive mean correction keeps ``E[r_t] = 0``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.signal import lfilter

from .models import (
    HALF_NORMAL_MEAN,
    ModelSpec,
    mean_correction,
    omega_constant,
    require_valid,
)

__all__ = [
    "RngPolicy",
    "SimPath",
    "StationarySample",
    "simulate_path",
    "draw_stationary_return",
    "draw_jump_stationary_state",
    "sample_skewed_t_component",
    "state_burnin_steps",
]


@dataclass(frozen=True)
class RngPolicy:
    """Seed and stream for a counter-based generator.

    Distinct streams under one seed give independent draws, so parallel
    or repeated experiments can share a seed without overlapping.
    """

    seed: int = 0
    stream: int = 0

    def generator(self) -> np.random.Generator:
        return np.random.Generator(np.random.Philox(key=[self.seed, self.stream]))

    def child(self, stream: int) -> "RngPolicy":
        """Same seed, different stream."""
        return RngPolicy(self.seed, stream)


def _as_policy(policy: "RngPolicy | int") -> RngPolicy:
    if isinstance(policy, RngPolicy):
        return policy
    return RngPolicy(seed=int(policy))


def state_burnin_steps(phi: float) -> int:
    """Steps needed for the initial-state influence to decay below e^-10."""
    return math.ceil(10.0 / (1.0 - phi))


def sample_skewed_t_component(
    nu: float,
    lam: float,
    rng: np.random.Generator,
    size: int | tuple[int, ...] | None = None,
    eps: np.ndarray | None = None,
):
    """Draw the standardized skewed heavy-tailed return shock.

    Returns ``(S, U, W, eps)`` where
    ``S = omega U^{-1/2} [delta (W - E W) + sqrt(1 - delta^2) eps]`` with
    ``U ~ Gamma(nu/2, rate nu/2)``, ``W`` half-normal, and ``eps``
    standard normal (drawn here unless supplied).  ``omega`` standardizes
    ``Var(S) = 1``.
    """
    delta = lam / math.sqrt(1.0 + lam * lam)
    omega = omega_constant(nu, lam)
    u = rng.gamma(shape=nu / 2.0, scale=2.0 / nu, size=size)
    w = np.abs(rng.standard_normal(size))
    if eps is None:
        eps = rng.standard_normal(size)
    s = (
        omega
        / np.sqrt(u)
        * (delta * (w - HALF_NORMAL_MEAN) + math.sqrt(1.0 - delta * delta) * eps)
    )
    return s, u, w, eps


@dataclass(frozen=True)
class SimPath:
    """A simulated path with every latent ingredient retained.

    ``returns`` and ``logvol`` always have length ``n_steps``.  ``eps``
    and ``eta`` are the correlated standard normal pair behind each step.
    ``mixing_u``/``mixing_w`` are present for the skewed-t variant;
    ``jump_r``/``jump_h`` (indicators) and ``jump_r_size``/``jump_h_size``
    for the jump variant; the rest are None.  ``mu`` is the additive
    constant actually applied to the returns.
    """

    spec: ModelSpec
    policy: RngPolicy
    returns: np.ndarray
    logvol: np.ndarray
    eps: np.ndarray
    eta: np.ndarray
    mu: float
    mixing_u: np.ndarray | None = None
    mixing_w: np.ndarray | None = None
    jump_r: np.ndarray | None = None
    jump_r_size: np.ndarray | None = None
    jump_h: np.ndarray | None = None
    jump_h_size: np.ndarray | None = None

    @property
    def n_steps(self) -> int:
        return self.returns.shape[0]


def simulate_path(
    spec: ModelSpec,
    n_steps: int,
    policy: RngPolicy | int = 0,
    h0: float | str = "stationary",
    mean_corrected: bool = True,
) -> SimPath:
    """Simulate one path of length ``n_steps``.

    ``h0`` is either ``"stationary"`` (draw the initial state from the
    stationary law; the jump variant reaches it by an internal burn-in)
    or a float fixing the seed state (``h_0`` for M2.x, the pre-sample
    ``h_{-1}`` for M3.x).  ``mean_corrected=False`` omits the additive
    constant from M3.x returns, leaving their sample mean biased by its
    negative.
    """
    require_valid(spec)
    if n_steps < 1:
        raise ValueError(f"n_steps must be >= 1, got {n_steps}")
    p = spec.params
    model = spec.model
    pol = _as_policy(policy)
    rng = pol.generator()
    v = p.sigma**2 / (1.0 - p.phi**2)

    # 1. initial state (x = h - alpha)
    if h0 == "stationary":
        if model.has_jumps:
            x_init = draw_jump_stationary_state(p, 1, rng)[0] - p.alpha
        else:
            x_init = math.sqrt(v) * rng.standard_normal()
    elif isinstance(h0, str):
        raise ValueError(f"h0 must be 'stationary' or a number, got {h0!r}")
    else:
        x_init = float(h0) - p.alpha

    # 2-5. innovations in frozen order
    eta = rng.standard_normal(n_steps)
    z = rng.standard_normal(n_steps)
    eps = p.rho * eta + math.sqrt(1.0 - p.rho**2) * z
    if model.has_mixing:
        s_shock, u, w_half, _ = sample_skewed_t_component(
            p.nu, p.lam, rng, size=n_steps, eps=eps
        )
    if model.has_jumps:
        j1 = rng.random(n_steps) < p.pi1
        k1 = rng.standard_normal(n_steps)
        j2 = rng.random(n_steps) < p.pi2
        k2 = rng.standard_normal(n_steps)

    w = p.sigma * eta
    if model.has_jumps:
        w = w + np.where(j2, k2, 0.0)

    if model.contemporaneous:
        x, _ = lfilter([1.0], [1.0, -p.phi], w, zi=[p.phi * x_init])
        h = p.alpha + x
    else:
        if n_steps > 1:
            x_rest, _ = lfilter(
                [1.0], [1.0, -p.phi], w[: n_steps - 1], zi=[p.phi * x_init]
            )
            h = p.alpha + np.concatenate(([x_init], x_rest))
        else:
            h = np.array([p.alpha + x_init])

    mu = mean_correction(spec) if (mean_corrected and model.contemporaneous) else 0.0
    vol = np.exp(h / 2.0)

    if model.has_mixing:
        r = mu + vol * s_shock
        return SimPath(spec, pol, r, h, eps, eta, mu, mixing_u=u, mixing_w=w_half)
    if model.has_jumps:
        r = mu + vol * eps + np.where(j1, k1, 0.0)
        return SimPath(
            spec,
            pol,
            r,
            h,
            eps,
            eta,
            mu,
            jump_r=j1,
            jump_r_size=k1,
            jump_h=j2,
            jump_h_size=k2,
        )
    r = mu + vol * eps
    return SimPath(spec, pol, r, h, eps, eta, mu)


def draw_jump_stationary_state(p, n: int, rng: np.random.Generator) -> np.ndarray:
    """n independent draws of the jump-variant stationary state via burn-in.

    The state starts at its mean and runs until the initial condition has
    decayed below e^-10.  Jump sizes are drawn every step regardless of
    the indicator so the draw count is fixed.
    """
    x = np.zeros(n)
    for _ in range(state_burnin_steps(p.phi)):
        x = (
            p.phi * x
            + p.sigma * rng.standard_normal(n)
            + np.where(rng.random(n) < p.pi2, rng.standard_normal(n), 0.0)
        )
    return p.alpha + x


@dataclass(frozen=True)
class StationarySample:
    """Independent draws of (return, log-volatility) under the stationary law."""

    returns: np.ndarray
    logvol: np.ndarray


def draw_stationary_return(
    spec: ModelSpec,
    n: int,
    rng: np.random.Generator,
    mean_corrected: bool = True,
) -> StationarySample:
    """n independent stationary draws of the return and its log-volatility.

    Gaussian-state variants sample the state law exactly; M3.x applies one
    joint transition step so the return shock and the state innovation
    carry their stationary correlation.  The jump variant reaches the
    stationary state by vectorized burn-in.
    """
    require_valid(spec)
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n}")
    p = spec.params
    model = spec.model
    v = p.sigma**2 / (1.0 - p.phi**2)

    if model.contemporaneous:
        if model.has_jumps:
            h_prev = draw_jump_stationary_state(p, n, rng)
        else:
            h_prev = p.alpha + math.sqrt(v) * rng.standard_normal(n)
        eta = rng.standard_normal(n)
        h = p.alpha + p.phi * (h_prev - p.alpha) + p.sigma * eta
        if model.has_jumps:
            h = h + np.where(rng.random(n) < p.pi2, rng.standard_normal(n), 0.0)
        z = rng.standard_normal(n)
        eps = p.rho * eta + math.sqrt(1.0 - p.rho**2) * z
        mu = mean_correction(spec) if mean_corrected else 0.0
    else:
        if model.has_jumps:
            h = draw_jump_stationary_state(p, n, rng)
        else:
            h = p.alpha + math.sqrt(v) * rng.standard_normal(n)
        eps = rng.standard_normal(n)
        mu = 0.0

    vol = np.exp(h / 2.0)
    if model.has_mixing:
        s, _, _, _ = sample_skewed_t_component(p.nu, p.lam, rng, size=n, eps=eps)
        r = mu + vol * s
    elif model.has_jumps:
        jump = np.where(rng.random(n) < p.pi1, rng.standard_normal(n), 0.0)
        r = mu + vol * eps + jump
    else:
        r = mu + vol * eps
    return StationarySample(r, h)
