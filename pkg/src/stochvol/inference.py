"""Posterior sampling for the six volatility models.

The sampler is a componentwise Markov chain Monte Carlo scheme built around
the joint density of returns, log variances, and any auxiliary variables the
return distribution needs (mixing scale and half normal shifter for the
skewed heavy tailed family, indicator and size pairs for the jump family).

Layout of the joint density
---------------------------
Write ``x_t = h_t - alpha`` for the centred log variance.  Every model
contributes three groups of terms:

* one transition term per adjacent pair ``(h_p, h_{p+1})``, a Gaussian
  density for the innovation ``eta`` recovered from the pair,
* one return term per observation, a Gaussian density for the return
  conditional on its own log variance and on the innovation it is
  correlated with,
* one initial term for ``h_0`` drawn from the stationary law of the state
  recursion (moment matched to a normal for the jump models).

For the predictive timing models the return at ``t`` is correlated with the
innovation driving ``h_{t+1}``, so the last return in the window has no
innovation partner and is evaluated with the innovation integrated out.  For
the contemporaneous timing models the partner is the innovation driving
``h_t`` itself and the unpaired return is the first one.  Both unpaired
returns are treated as carrying an independent standardised shock, which
keeps the target a coherent generative model while avoiding a conditional
that would otherwise depend on state values outside the window.

Update schedule per sweep
-------------------------
1. log variances, single site random walk proposals applied to the even
   sites and then the odd sites (each colour is conditionally independent
   given the other, so both halves vectorise),
2. auxiliary variables where the model has them (exact Gibbs for the half
   normal shifter, random walk on the log mixing scale, marginalised Gibbs
   for indicator and size pairs, conjugate Beta draws for jump rates),
3. static parameters, one adaptive random walk each on a transformed scale
   chosen so the support is the whole real line, plus two moves that change
   the level together with related state: an independence draw of the level
   from its state side conditional (gated, see below), and a translation
   that shifts the level and every log variance jointly.

Early window moves
------------------
Two further path remapping moves run only during the first sweeps of burn
in: an innovation preserving remap of the persistence and an amplitude
rescaling remap of the innovation scale.  They carry the whole path along
with the parameter, which makes them excellent for settling into the
posterior quickly, and for exactly the same reason they are efficient at
ferrying a chain across low probability saddles late in a run.  On series
whose volatility level sits far outside the level prior, the posterior
develops a competing near unit root mode in which the state absorbs the
level; a practical sampler must equilibrate within the data supported mode
without wandering off through that saddle, so the ferry moves are windowed
to the start of burn in and the kept draws come from the centred kernel.
The window ends by a latch rather than at a fixed length: once the state
side of the level conditional has out-weighed the level prior by a wide
factor for a sustained run of sweeps the landing is judged complete and the
window closes for good, with a hard cap well inside burn in so it always
terminates.  Chains that land cleanly keep the assistance for only a few
dozen sweeps, while chains that must first descend from a poor start keep
it until the descent is done.
The level independence draw stays on for the whole run but only while the
state side of its conditional carries decisively more information than the
prior; near a unit root it stands down rather than degenerate into prior
resampling.  The gate reads only quantities the move never changes, so
every component kernel leaves the posterior invariant.

Proposal scales adapt during burn in only (Robbins Monro on the acceptance
rate, frozen afterwards), so the post burn in chain is a fixed kernel.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.ndimage import uniform_filter1d
from scipy.signal import lfilter
from scipy.special import gammaln
from scipy.stats import truncnorm

from .errors import ConfigError, DataError, InferenceError
from .models import (
    HALF_NORMAL_MEAN,
    ModelId,
    ModelSpec,
    SvParams,
)
from .moments import product_P
from .simulate import RngPolicy

__all__ = [
    "PriorConfig",
    "McmcConfig",
    "SummaryRow",
    "FitResult",
    "PosteriorLeadLag",
    "fit",
    "posterior_leadlag",
    "psrf",
    "param_names",
]


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class PriorConfig:
    """Hyperparameters of the independent priors on the static parameters.

    * level ``alpha``: normal with mean ``alpha_mean`` and sd ``alpha_sd``;
    * persistence ``phi``: ``(phi + 1) / 2`` is Beta(``phi_beta_a``,
      ``phi_beta_b``);
    * innovation precision ``1 / sigma**2``: Gamma with shape ``prec_shape``
      and rate ``prec_rate``;
    * correlation ``rho``: uniform on (``rho_lo``, ``rho_hi``);
    * tail weight ``nu``: ``nu - nu_lo`` exponential with rate ``nu_rate``,
      truncated above at ``nu_hi``;
    * asymmetry ``lam``: normal with mean ``lam_mean`` and sd ``lam_sd``;
    * jump rates ``pi1``, ``pi2``: Beta(``jump_beta_a``, ``jump_beta_b``).
    """

    alpha_mean: float = 0.0
    alpha_sd: float = 1.0
    phi_beta_a: float = 20.0
    phi_beta_b: float = 1.5
    prec_shape: float = 2.5
    prec_rate: float = 0.025
    rho_lo: float = -1.0
    rho_hi: float = 1.0
    nu_rate: float = 0.1
    nu_lo: float = 2.0
    nu_hi: float = 200.0
    lam_mean: float = 0.0
    lam_sd: float = 1.0
    jump_beta_a: float = 2.0
    jump_beta_b: float = 100.0


@dataclass(frozen=True)
class McmcConfig:
    """Run length and tuning knobs for :func:`fit`.

    ``n_keep`` counts post burn in sweeps; every ``thin``-th one is stored.
    ``h_store`` bounds how many full log variance paths are snapshotted per
    chain (evenly spaced over the stored sweeps).  With ``prior_only`` the
    likelihood is dropped and the sampler targets the prior alone, which is
    useful for validating the transformed proposals against known moments.
    """

    n_chains: int = 4
    burn_in: int = 10_000
    n_keep: int = 30_000
    thin: int = 1
    seed: int = 0
    adapt_window: int = 50
    target_accept: float = 0.44
    h_store: int = 250
    prior_only: bool = False

    def validate(self) -> None:
        if self.n_chains < 1:
            raise ConfigError("n_chains must be at least 1")
        if self.burn_in < 0 or self.n_keep < 1:
            raise ConfigError("burn_in must be >= 0 and n_keep >= 1")
        if self.thin < 1:
            raise ConfigError("thin must be at least 1")
        if self.adapt_window < 1:
            raise ConfigError("adapt_window must be at least 1")
        if not 0.0 < self.target_accept < 1.0:
            raise ConfigError("target_accept must be inside (0, 1)")
        if self.h_store < 0:
            raise ConfigError("h_store must be >= 0")


_PARAM_ORDER = ("alpha", "sigma", "phi", "rho", "nu", "lam", "pi1", "pi2")


def param_names(model: ModelId) -> tuple[str, ...]:
    """Static parameters sampled for ``model``, in reporting order."""
    names = ["alpha", "sigma", "phi", "rho"]
    if model.has_mixing:
        names += ["nu", "lam"]
    if model.has_jumps:
        names += ["pi1", "pi2"]
    return tuple(names)


# --------------------------------------------------------------------------
# results


@dataclass(frozen=True)
class SummaryRow:
    name: str
    mean: float
    q_lo: float
    q_hi: float


@dataclass(frozen=True)
class FitResult:
    """Stored draws and diagnostics from one call to :func:`fit`.

    ``draws`` maps each parameter name to an array of shape
    ``(n_chains, n_stored)``.  ``h_draws`` has shape
    ``(n_chains, n_snapshots, T)`` and holds full log variance paths
    (empty when ``prior_only`` or ``h_store == 0``).
    """

    model: ModelId
    draws: dict[str, np.ndarray]
    h_draws: np.ndarray
    acceptance: dict[str, float]
    config: McmcConfig
    priors: PriorConfig

    def pooled(self, name: str) -> np.ndarray:
        """All stored draws of ``name`` across chains, flattened."""
        return self.draws[name].reshape(-1)

    def psrf(self) -> dict[str, float]:
        """Potential scale reduction factor per parameter."""
        return {name: psrf(self.draws[name], name=name) for name in self.draws}

    def summary(self, lo: float = 0.025, hi: float = 0.975) -> list[SummaryRow]:
        """Posterior mean and central interval per parameter, fixed order."""
        rows = []
        for name in _PARAM_ORDER:
            if name not in self.draws:
                continue
            flat = self.pooled(name)
            q = np.quantile(flat, [lo, hi])
            rows.append(SummaryRow(name, float(flat.mean()), float(q[0]), float(q[1])))
        return rows


@dataclass(frozen=True)
class PosteriorLeadLag:
    """Posterior mean correlation between returns and future variance level.

    ``rhos[i]`` is the Monte Carlo average over stored log variance paths of
    the sample correlation between ``r_t`` and ``exp(h_{t+lags[i]})``.
    """

    lags: np.ndarray
    rhos: np.ndarray
    n_draws: int
    n_obs: int


def psrf(chains: np.ndarray, name: str = "parameter") -> float:
    """Potential scale reduction factor for draws of one scalar.

    ``chains`` has one row per chain.  Raises :class:`InferenceError` when
    the within chain variance is zero, naming the stuck parameter.
    """
    chains = np.asarray(chains, dtype=float)
    if chains.ndim != 2 or chains.shape[0] < 2 or chains.shape[1] < 2:
        raise InferenceError("psrf needs at least 2 chains with 2 draws each")
    n = chains.shape[1]
    within = float(chains.var(axis=1, ddof=1).mean())
    if within == 0.0:
        raise InferenceError(f"{name} never moved within a chain; psrf undefined")
    b_over_n = float(chains.mean(axis=1).var(ddof=1))
    v_hat = (n - 1) / n * within + b_over_n
    return math.sqrt(v_hat / within)


# --------------------------------------------------------------------------
# fast derived quantities (validated against models.mean_correction in tests)


def _delta_omega(nu: float | None, lam: float | None) -> tuple[float, float]:
    if nu is None:
        return 0.0, 1.0
    delta = lam / math.sqrt(1.0 + lam * lam)
    xi1 = math.exp(math.log(nu / 2.0) + gammaln(nu / 2.0 - 1.0) - gammaln(nu / 2.0))
    return delta, 1.0 / math.sqrt(xi1 * (1.0 - 2.0 * delta * delta / math.pi))


def _mu_fast(
    model: ModelId,
    alpha: float,
    phi: float,
    sig: float,
    rho: float,
    nu: float | None,
    lam: float | None,
    pi2: float | None,
    delta: float,
    omega: float,
) -> float:
    if not model.contemporaneous or rho == 0.0:
        return 0.0
    v = sig * sig / (1.0 - phi * phi)
    base = -(rho * sig / 2.0) * math.exp(alpha / 2.0 + v / 8.0)
    if model.has_mixing:
        xi_half = math.exp(
            0.5 * math.log(nu / 2.0) + gammaln(nu / 2.0 - 0.5) - gammaln(nu / 2.0)
        )
        return base * math.sqrt(1.0 - delta * delta) * omega * xi_half
    if model.has_jumps:
        return base * product_P(0.5, pi2, phi)
    return base


# --------------------------------------------------------------------------
# likelihood terms


class _Pack:
    """Scalar parameters plus derived constants used by the term evaluator."""

    __slots__ = ("alpha", "phi", "sig", "rho", "nu", "lam", "pi1", "pi2",
                 "mu", "delta", "omega")

    def __init__(self, model, alpha, phi, sig, rho, nu, lam, pi1, pi2):
        self.alpha = alpha
        self.phi = phi
        self.sig = sig
        self.rho = rho
        self.nu = nu
        self.lam = lam
        self.pi1 = pi1
        self.pi2 = pi2
        self.delta, self.omega = _delta_omega(nu, lam)
        self.mu = _mu_fast(model, alpha, phi, sig, rho, nu, lam, pi2,
                           self.delta, self.omega)


class _Terms:
    """Per index log density contributions for one state configuration."""

    __slots__ = ("trans", "ret", "init", "eta_al")

    def __init__(self, trans, ret, init, eta_al):
        self.trans = trans
        self.ret = ret
        self.init = init
        self.eta_al = eta_al

    def total(self) -> float:
        return float(self.trans.sum() + self.ret.sum() + self.init)


def _compute_terms(st, h, vol, ivar, pk, logu=None, u=None, uis=None,
                   w_half=None, j1=None, k1=None, j2=None, k2=None) -> _Terms:
    """Evaluate transition, return, and initial terms for given state pieces.

    Latent arrays default to the chain's current values; ``h``, ``vol``,
    ``ivar`` and the parameter pack are always explicit because every update
    proposes at least one of them.
    """
    model = st.model
    T = st.T
    r = st.r
    contemp = model.contemporaneous

    if model.has_jumps:
        if j2 is None:
            j2, k2 = st.j2, st.k2
        if j1 is None:
            j1, k1 = st.j1, st.k1
        jump_h = j2 * k2
        jump_tr = jump_h[1:] if contemp else jump_h[:-1]
    else:
        jump_tr = 0.0

    x = h - pk.alpha
    d = x[1:] - pk.phi * x[:-1]
    if model.has_jumps:
        d = d - jump_tr
    eta = d / pk.sig
    trans = -math.log(pk.sig) - 0.5 * eta * eta

    # innovation aligned with the return it is correlated with; the unpaired
    # boundary return gets a zero and a unit variance factor below
    eta_al = np.empty(T)
    if contemp:
        b = 0
        eta_al[0] = 0.0
        eta_al[1:] = eta
    else:
        b = T - 1
        eta_al[T - 1] = 0.0
        eta_al[: T - 1] = eta

    rho = pk.rho
    one_m_r2 = 1.0 - rho * rho
    log_f = math.log(one_m_r2) if one_m_r2 > 0.0 else -math.inf

    variant = model.variant
    if variant == 2:
        if logu is None:
            logu, u, uis = st.logu, st.u, st.uis
        if w_half is None:
            w_half = st.w_half
        delta = pk.delta
        c2 = 1.0 - delta * delta
        om = pk.omega
        a = (om * delta) * vol * uis
        resid = r - pk.mu - a * (w_half - HALF_NORMAL_MEAN)
        if rho != 0.0:
            resid = resid - (om * math.sqrt(c2) * rho) * vol * uis * eta_al
        base = h + (2.0 * math.log(om) + math.log(c2)) - logu
        q = resid * resid * (ivar * u) / (om * om * c2)
        ret = -0.5 * (base + log_f) - 0.5 * q / one_m_r2
        ret[b] = -0.5 * base[b] - 0.5 * q[b]
    else:
        if variant == 3:
            resid = r - pk.mu - j1 * k1
        else:
            resid = r - pk.mu
        if rho != 0.0:
            resid = resid - rho * vol * eta_al
        q = resid * resid * ivar
        ret = -0.5 * (h + log_f) - 0.5 * q / one_m_r2
        ret[b] = -0.5 * h[b] - 0.5 * q[b]

    v_state = pk.sig * pk.sig / (1.0 - pk.phi * pk.phi)
    if model.has_jumps:
        v_state = v_state + pk.pi2 / (1.0 - pk.phi * pk.phi)
    init = -0.5 * math.log(v_state) - 0.5 * x[0] * x[0] / v_state

    return _Terms(trans, ret, float(init), eta_al)


def _logu_prior(logu: np.ndarray, u: np.ndarray, nu: float) -> np.ndarray:
    """Log density of the mixing scale on the log scale, Jacobian included."""
    half = nu / 2.0
    const = half * math.log(half) - gammaln(half)
    return const + half * logu - half * u


# --------------------------------------------------------------------------
# parameter priors on the sampling scale (Jacobians included)


def _logp_alpha(alpha: float, pr: PriorConfig) -> float:
    z = (alpha - pr.alpha_mean) / pr.alpha_sd
    return -0.5 * z * z


def _logp_phi_y(y: float, pr: PriorConfig) -> float:
    phi = math.tanh(y)
    if not -1.0 < phi < 1.0:
        return -math.inf
    return (
        (pr.phi_beta_a - 1.0) * math.log((1.0 + phi) / 2.0)
        + (pr.phi_beta_b - 1.0) * math.log((1.0 - phi) / 2.0)
        + math.log(1.0 - phi * phi)
    )


def _logp_logsig2(x: float, pr: PriorConfig) -> float:
    return -pr.prec_shape * x - pr.prec_rate * math.exp(-x)


def _logp_rho_y(y: float, pr: PriorConfig) -> float:
    rho = math.tanh(y)
    if not pr.rho_lo < rho < pr.rho_hi:
        return -math.inf
    return math.log(1.0 - rho * rho)


def _logp_nu_x(x: float, pr: PriorConfig) -> float:
    if x > 50.0:
        return -math.inf
    nu = pr.nu_lo + math.exp(x)
    if nu >= pr.nu_hi:
        return -math.inf
    return -pr.nu_rate * nu + x


def _logp_lam(lam: float, pr: PriorConfig) -> float:
    z = (lam - pr.lam_mean) / pr.lam_sd
    return -0.5 * z * z


# --------------------------------------------------------------------------
# chain state


class _Chain:
    """Mutable working state of one chain plus its adaptive scales."""

    __slots__ = (
        "model", "r", "T", "rng", "priors", "prior_only",
        "h", "vol", "ivar",
        "logu", "u", "uis", "w_half",
        "j1", "k1", "j2", "k2",
        "pk", "terms",
        "scales", "acc", "tries", "adapt_round", "t_sweep",
        "landing_left", "landing_streak", "anchor_ratio",
    )

    def __init__(self, model: ModelId, r: np.ndarray, rng: np.random.Generator,
                 priors: PriorConfig, prior_only: bool, landing_sweeps: int = 0):
        self.model = model
        self.r = r
        self.T = r.size
        self.rng = rng
        self.priors = priors
        self.prior_only = prior_only
        self.landing_left = landing_sweeps
        self.landing_streak = 0
        self.anchor_ratio = math.inf

        alpha = priors.alpha_mean + priors.alpha_sd * rng.standard_normal()
        phi = 0.95
        prec = rng.gamma(priors.prec_shape, 1.0 / priors.prec_rate)
        sig = 1.0 / math.sqrt(prec)
        # Start the leverage correlation at the midpoint of its support so the
        # return terms are level-free on the first sweep; the first landing
        # draw for the level is then accepted with probability one, which
        # removes the only window in which the state AR coefficient could
        # drift toward a unit root before the level settles.
        rho = 0.5 * (priors.rho_lo + priors.rho_hi)
        nu = lam = None
        if model.has_mixing:
            nu = priors.nu_hi
            while nu >= priors.nu_hi:
                nu = priors.nu_lo + rng.exponential(1.0 / priors.nu_rate)
            lam = priors.lam_mean + priors.lam_sd * rng.standard_normal()
        pi1 = pi2 = None
        if model.has_jumps:
            pi1 = rng.beta(priors.jump_beta_a, priors.jump_beta_b)
            pi2 = rng.beta(priors.jump_beta_a, priors.jump_beta_b)
        self.pk = _Pack(model, alpha, phi, sig, rho, nu, lam, pi1, pi2)

        if not prior_only:
            self._init_latents()
            self.terms = _compute_terms(self, self.h, self.vol, self.ivar, self.pk)
        else:
            self.terms = None

        self.scales = {
            "h": 0.5, "alpha": 0.1, "shift": 0.05, "phi": 0.15, "phi_nc": 0.15,
            "sigma": 0.15, "sigma_nc": 0.1, "rho": 0.15, "nu": 0.3, "lam": 0.3,
            "logu": 1.2,
        }
        self.acc = {k: 0.0 for k in (*self.scales, "alpha_g")}
        self.tries = {k: 0.0 for k in (*self.scales, "alpha_g")}
        self.adapt_round = 0
        self.t_sweep = 0

    # -- initial values ----------------------------------------------------

    def _init_latents(self) -> None:
        rng = self.rng
        T = self.T
        x = np.log(self.r * self.r + 1e-12)
        smooth = uniform_filter1d(x, size=min(5, T), mode="nearest")
        h = smooth + 1.27 + 0.3 * rng.standard_normal(T)
        h = np.maximum(h, np.median(h) - 5.0)
        self.h = h
        self.vol = np.exp(h / 2.0)
        self.ivar = 1.0 / (self.vol * self.vol)
        if self.model.has_mixing:
            self.logu = np.zeros(T)
            self.u = np.ones(T)
            self.uis = np.ones(T)
            self.w_half = np.abs(rng.standard_normal(T))
        if self.model.has_jumps:
            self.j1 = (rng.random(T) < self.pk.pi1).astype(float)
            self.j2 = (rng.random(T) < self.pk.pi2).astype(float)
            self.k1 = rng.standard_normal(T)
            self.k2 = rng.standard_normal(T)

    # -- bookkeeping ---------------------------------------------------------

    def _tally(self, key: str, accepted: float, proposed: float) -> None:
        self.acc[key] += accepted
        self.tries[key] += proposed

    def adapt(self, target: float) -> None:
        """One Robbins Monro scale update from the window's acceptance rates."""
        self.adapt_round += 1
        gamma = min(0.3, 3.0 / math.sqrt(self.adapt_round))
        for key, s in self.scales.items():
            if self.tries[key] > 0:
                rate = self.acc[key] / self.tries[key]
                self.scales[key] = s * math.exp(gamma * (rate - target))
            self.acc[key] = 0.0
            self.tries[key] = 0.0

    # -- latent updates ------------------------------------------------------

    def update_h(self) -> None:
        for parity in (0, 1):
            idx = np.arange(parity, self.T, 2)
            if idx.size == 0:
                continue
            prop = self.h.copy()
            prop[idx] += self.scales["h"] * self.rng.standard_normal(idx.size)
            vol_p = self.vol.copy()
            vol_p[idx] = np.exp(prop[idx] / 2.0)
            ivar_p = self.ivar.copy()
            ivar_p[idx] = 1.0 / (vol_p[idx] * vol_p[idx])
            cand = _compute_terms(self, prop, vol_p, ivar_p, self.pk)

            dtr = np.zeros(self.T + 1)
            dtr[1:-1] = cand.trans - self.terms.trans
            dre = np.zeros(self.T + 2)
            dre[1:-1] = cand.ret - self.terms.ret
            if self.model.contemporaneous:
                delta = dtr[idx] + dtr[idx + 1] + dre[idx + 1] + dre[idx + 2]
            else:
                delta = dtr[idx] + dtr[idx + 1] + dre[idx] + dre[idx + 1]
            if idx[0] == 0:
                delta[0] += cand.init - self.terms.init

            accept = np.log(self.rng.random(idx.size)) < delta
            sel = idx[accept]
            self.h[sel] = prop[sel]
            self.vol[sel] = vol_p[sel]
            self.ivar[sel] = ivar_p[sel]
            self.terms = _compute_terms(self, self.h, self.vol, self.ivar, self.pk)
            self._tally("h", float(accept.sum()), float(idx.size))

    def update_w(self) -> None:
        """Exact Gibbs draw of the half normal shifter, all sites at once."""
        pk = self.pk
        delta = pk.delta
        om = pk.omega
        c2 = 1.0 - delta * delta
        a = (om * delta) * self.vol * self.uis
        # residual with the W part removed: r - mu - a*(W - b) - c  ==  noise
        other = np.zeros(self.T)
        if pk.rho != 0.0:
            other = (om * math.sqrt(c2) * pk.rho) * self.vol * self.uis * self.terms.eta_al
        d = self.r - pk.mu - other + a * HALF_NORMAL_MEAN
        s2 = (self.vol * self.vol) * (om * om) * c2 / self.u
        b_idx = 0 if self.model.contemporaneous else self.T - 1
        one_m_r2 = 1.0 - pk.rho * pk.rho
        s2 = s2 * one_m_r2
        s2[b_idx] /= one_m_r2
        prec = 1.0 + a * a / s2
        mean = (a * d / s2) / prec
        sd = 1.0 / np.sqrt(prec)
        lo = (0.0 - mean) / sd
        self.w_half = truncnorm.rvs(lo, np.inf, loc=mean, scale=sd,
                                    random_state=self.rng)
        self.terms = _compute_terms(self, self.h, self.vol, self.ivar, self.pk)

    def update_logu(self) -> None:
        """Random walk on the log mixing scale, sitewise accept or reject."""
        pk = self.pk
        prop = self.logu + self.scales["logu"] * self.rng.standard_normal(self.T)
        u_p = np.exp(prop)
        uis_p = np.exp(-0.5 * prop)
        cand = _compute_terms(self, self.h, self.vol, self.ivar, pk,
                              logu=prop, u=u_p, uis=uis_p, w_half=self.w_half)
        delta = (cand.ret - self.terms.ret) \
            + _logu_prior(prop, u_p, pk.nu) - _logu_prior(self.logu, self.u, pk.nu)
        accept = np.log(self.rng.random(self.T)) < delta
        self.logu = np.where(accept, prop, self.logu)
        self.u = np.where(accept, u_p, self.u)
        self.uis = np.where(accept, uis_p, self.uis)
        self.terms = _compute_terms(self, self.h, self.vol, self.ivar, self.pk)
        self._tally("logu", float(accept.sum()), float(self.T))

    def update_jumps(self) -> None:
        """Marginalised Gibbs draws of both indicator and size pairs.

        For each site the size is integrated out of the odds for the
        indicator, then redrawn from its exact conditional (the prior when
        the indicator lands on zero, so the pair stays defined).
        """
        pk = self.pk
        rng = self.rng
        T = self.T
        contemp = self.model.contemporaneous
        one_m_r2 = 1.0 - pk.rho * pk.rho
        b_idx = 0 if contemp else T - 1

        # ---- state jumps: each (j2, k2)_t enters one transition and, through
        # the shared innovation, the return paired with that transition.
        x = self.h - pk.alpha
        d0 = x[1:] - pk.phi * x[:-1]  # residual with the jump left in place
        c_tr = np.zeros(T)
        d_tr = np.zeros(T)
        if contemp:
            c_tr[1:] = 1.0
            d_tr[1:] = d0
        else:
            c_tr[:-1] = 1.0
            d_tr[:-1] = d0
        s2_tr = pk.sig * pk.sig

        # return term, as a function of the state jump size at the paired site
        ret_var = (self.vol * self.vol) * one_m_r2
        ret_var[b_idx] = self.vol[b_idx] * self.vol[b_idx]
        base_resid = self.r - pk.mu - self.j1 * self.k1
        c_re = np.zeros(T)
        d_re = np.zeros(T)
        if pk.rho != 0.0:
            # residual as a function of the jump size kappa at the paired
            # return:  base - coef*d0 + coef*kappa,  so in the (d - c*kappa)
            # convention the coefficient enters with a minus sign
            coef = pk.rho * self.vol / pk.sig
            if contemp:
                c_re[1:] = -coef[1:]
                d_re[1:] = base_resid[1:] - coef[1:] * d0
            else:
                c_re[:-1] = -coef[:-1]
                d_re[:-1] = base_resid[:-1] - coef[:-1] * d0
            c_re[b_idx] = 0.0
            d_re[b_idx] = 0.0

        prec = 1.0 + c_tr * c_tr / s2_tr + c_re * c_re / ret_var
        mean = (c_tr * d_tr / s2_tr + c_re * d_re / ret_var) / prec
        log_odds = (
            math.log(pk.pi2) - math.log1p(-pk.pi2)
            + 0.5 * mean * mean * prec - 0.5 * np.log(prec)
        )
        p1 = 1.0 / (1.0 + np.exp(-log_odds))
        self.j2 = (rng.random(T) < p1).astype(float)
        z = rng.standard_normal(T)
        self.k2 = np.where(self.j2 > 0.0, mean + z / np.sqrt(prec), z)
        self.terms = _compute_terms(self, self.h, self.vol, self.ivar, self.pk)

        # ---- return jumps: each (j1, k1)_t enters its own return term only.
        resid = self.r - pk.mu - pk.rho * self.vol * self.terms.eta_al
        prec = 1.0 + 1.0 / ret_var
        mean = (resid / ret_var) / prec
        log_odds = (
            math.log(pk.pi1) - math.log1p(-pk.pi1)
            + 0.5 * mean * mean * prec - 0.5 * np.log(prec)
        )
        p1 = 1.0 / (1.0 + np.exp(-log_odds))
        self.j1 = (rng.random(T) < p1).astype(float)
        z = rng.standard_normal(T)
        self.k1 = np.where(self.j1 > 0.0, mean + z / np.sqrt(prec), z)
        self.terms = _compute_terms(self, self.h, self.vol, self.ivar, self.pk)

    def update_jump_rates(self) -> None:
        """Conjugate Beta draws for both jump rates."""
        pr = self.priors
        rng = self.rng
        n1 = float(self.j1.sum())
        n2 = float(self.j2.sum())
        pi1 = rng.beta(pr.jump_beta_a + n1, pr.jump_beta_b + self.T - n1)
        pi2 = rng.beta(pr.jump_beta_a + n2, pr.jump_beta_b + self.T - n2)
        self._set_params(pi1=pi1, pi2=pi2)

    # -- parameter updates -----------------------------------------------------

    def _set_params(self, **kw) -> None:
        pk = self.pk
        vals = {name: getattr(pk, name)
                for name in ("alpha", "phi", "sig", "rho", "nu", "lam", "pi1", "pi2")}
        vals.update(kw)
        self.pk = _Pack(self.model, **vals)
        if not self.prior_only:
            self.terms = _compute_terms(self, self.h, self.vol, self.ivar, self.pk)

    def _try_param(self, key: str, prior_delta: float, make_pack) -> bool:
        """Shared accept or reject step for one transformed random walk move.

        ``make_pack`` is called only when the prior ratio is finite, so
        proposals outside the support never construct derived quantities.
        """
        if not prior_delta > -math.inf:
            accept = False
        else:
            cand_pack = make_pack()
            if self.prior_only:
                delta = prior_delta
            else:
                cand = _compute_terms(self, self.h, self.vol, self.ivar, cand_pack)
                delta = cand.total() - self.terms.total() + prior_delta
            accept = math.log(self.rng.random()) < delta
            if accept:
                self.pk = cand_pack
                if not self.prior_only:
                    self.terms = cand
        self._tally(key, float(accept), 1.0)
        return accept

    def _repack(self, **kw) -> _Pack:
        pk = self.pk
        vals = {name: getattr(pk, name)
                for name in ("alpha", "phi", "sig", "rho", "nu", "lam", "pi1", "pi2")}
        vals.update(kw)
        return _Pack(self.model, **vals)

    def update_alpha(self) -> None:
        pr = self.priors
        cur = self.pk.alpha
        prop = cur + self.scales["alpha"] * self.rng.standard_normal()
        self._try_param("alpha", _logp_alpha(prop, pr) - _logp_alpha(cur, pr),
                        lambda: self._repack(alpha=prop))

    def update_alpha_gibbs(self) -> None:
        """Independence draw of the level from its state side conditional.

        The transition, initial, and prior terms are jointly Gaussian in the
        level, so proposing from that exact conditional cancels them in the
        acceptance ratio and only the return terms remain.  This lands the
        level on the state path's scale in one move, which matters right
        after initialisation when the prior draw can sit far from the data.

        Outside a short unconditional window at the start of burn-in the
        move only runs while the state side carries decisively more
        information about the level than the prior.  Near a unit root the
        conditional degenerates toward the prior, and an ungated draw could
        yank the level away from the data in one sweep; the gate instead
        leaves the move silent there.  Validity is unaffected because the
        gate reads only quantities this move never changes.
        """
        if self.prior_only:
            return
        pk = self.pk
        pr = self.priors
        h = self.h
        T = self.T
        if self.model.has_jumps:
            jump_h = self.j2 * self.k2
            g = jump_h[1:] if self.model.contemporaneous else jump_h[:-1]
        else:
            g = 0.0
        z = h[1:] - pk.phi * h[:-1] - g
        c = 1.0 - pk.phi
        sig2 = pk.sig * pk.sig
        v_state = sig2 / (1.0 - pk.phi * pk.phi)
        if self.model.has_jumps:
            v_state += pk.pi2 / (1.0 - pk.phi * pk.phi)
        prec_prior = 1.0 / (pr.alpha_sd * pr.alpha_sd)
        prec_state = 1.0 / v_state + (T - 1) * c * c / sig2
        self.anchor_ratio = prec_state / prec_prior
        if self.landing_left <= 0 and self.anchor_ratio < 10.0:
            return
        prec = prec_prior + prec_state
        mean = (
            pr.alpha_mean * prec_prior
            + h[0] / v_state
            + c * float(z.sum()) / sig2
        ) / prec
        prop = mean + self.rng.standard_normal() / math.sqrt(prec)
        cand_pack = self._repack(alpha=prop)
        cand = _compute_terms(self, self.h, self.vol, self.ivar, cand_pack)
        delta = float(cand.ret.sum() - self.terms.ret.sum())
        accept = math.log(self.rng.random()) < delta
        if accept:
            self.pk = cand_pack
            self.terms = cand
        self._tally("alpha_g", float(accept), 1.0)

    def update_shift(self) -> None:
        """Translate the level and every log variance together.

        Transition and initial terms are invariant under the shift, so only
        the return terms and the level prior enter the ratio.
        """
        if self.prior_only:
            return
        pr = self.priors
        shift = self.scales["shift"] * self.rng.standard_normal()
        cur = self.pk.alpha
        prop = cur + shift
        cand_pack = self._repack(alpha=prop)
        h_p = self.h + shift
        vol_p = self.vol * math.exp(shift / 2.0)
        ivar_p = self.ivar * math.exp(-shift)
        cand = _compute_terms(self, h_p, vol_p, ivar_p, cand_pack)
        delta = (
            cand.ret.sum() - self.terms.ret.sum()
            + _logp_alpha(prop, pr) - _logp_alpha(cur, pr)
        )
        accept = math.log(self.rng.random()) < delta
        if accept:
            self.pk = cand_pack
            self.h = h_p
            self.vol = vol_p
            self.ivar = ivar_p
            self.terms = cand
        self._tally("shift", float(accept), 1.0)

    def update_phi(self) -> None:
        pr = self.priors
        y = math.atanh(self.pk.phi)
        y_p = y + self.scales["phi"] * self.rng.standard_normal()
        self._try_param("phi", _logp_phi_y(y_p, pr) - _logp_phi_y(y, pr),
                        lambda: self._repack(phi=math.tanh(y_p)))

    def update_phi_nc(self) -> None:
        """Persistence move that rebuilds the path from its innovations.

        The realised increments ``d_t = x_{t+1} - phi * x_t`` of the centred
        path are kept fixed while the path is regenerated under the proposed
        persistence, with the first point rescaled to keep its standardised
        stationary position.  The map is a bijection with log Jacobian
        ``log sqrt(v' / v)`` from that first point.
        """
        if self.prior_only:
            return
        pr = self.priors
        pk = self.pk
        y = math.atanh(pk.phi)
        y_p = y + self.scales["phi_nc"] * self.rng.standard_normal()
        prior_delta = _logp_phi_y(y_p, pr) - _logp_phi_y(y, pr)
        if not prior_delta > -math.inf:
            self._tally("phi_nc", 0.0, 1.0)
            return
        phi_p = math.tanh(y_p)
        x = self.h - pk.alpha
        d = x[1:] - pk.phi * x[:-1]
        ratio = math.sqrt((1.0 - pk.phi * pk.phi) / (1.0 - phi_p * phi_p))
        x0_p = x[0] * ratio
        if d.size:
            tail = lfilter([1.0], [1.0, -phi_p], d, zi=np.array([phi_p * x0_p]))[0]
            x_p = np.concatenate(([x0_p], tail))
        else:
            x_p = np.array([x0_p])
        h_p = pk.alpha + x_p
        vol_p = np.exp(h_p / 2.0)
        ivar_p = 1.0 / (vol_p * vol_p)
        cand_pack = self._repack(phi=phi_p)
        cand = _compute_terms(self, h_p, vol_p, ivar_p, cand_pack)
        delta = cand.total() - self.terms.total() + prior_delta + math.log(ratio)
        accept = math.log(self.rng.random()) < delta
        if accept:
            self.pk = cand_pack
            self.h = h_p
            self.vol = vol_p
            self.ivar = ivar_p
            self.terms = cand
        self._tally("phi_nc", float(accept), 1.0)

    def update_sigma_nc(self) -> None:
        """Innovation scale move that rescales the centred path with it.

        The centred path is multiplied by the ratio of proposed to current
        scale, a bijection with log Jacobian ``T * log(ratio)``.  For the
        non jump models this preserves the standardised innovations exactly;
        with state jumps it simply proposes a coherent amplitude change.
        """
        if self.prior_only:
            return
        pr = self.priors
        pk = self.pk
        x_cur = 2.0 * math.log(pk.sig)
        x_prop = x_cur + self.scales["sigma_nc"] * self.rng.standard_normal()
        sig_p = math.exp(0.5 * x_prop)
        scale = sig_p / pk.sig
        h_p = pk.alpha + scale * (self.h - pk.alpha)
        vol_p = np.exp(h_p / 2.0)
        ivar_p = 1.0 / (vol_p * vol_p)
        cand_pack = self._repack(sig=sig_p)
        cand = _compute_terms(self, h_p, vol_p, ivar_p, cand_pack)
        delta = (
            cand.total() - self.terms.total()
            + _logp_logsig2(x_prop, pr) - _logp_logsig2(x_cur, pr)
            + self.T * math.log(scale)
        )
        accept = math.log(self.rng.random()) < delta
        if accept:
            self.pk = cand_pack
            self.h = h_p
            self.vol = vol_p
            self.ivar = ivar_p
            self.terms = cand
        self._tally("sigma_nc", float(accept), 1.0)

    def update_sigma(self) -> None:
        pr = self.priors
        x = 2.0 * math.log(self.pk.sig)
        x_p = x + self.scales["sigma"] * self.rng.standard_normal()
        self._try_param("sigma", _logp_logsig2(x_p, pr) - _logp_logsig2(x, pr),
                        lambda: self._repack(sig=math.exp(0.5 * x_p)))

    def update_rho(self) -> None:
        pr = self.priors
        y = math.atanh(self.pk.rho)
        y_p = y + self.scales["rho"] * self.rng.standard_normal()
        self._try_param("rho", _logp_rho_y(y_p, pr) - _logp_rho_y(y, pr),
                        lambda: self._repack(rho=math.tanh(y_p)))

    def update_nu(self) -> None:
        pr = self.priors
        x = math.log(self.pk.nu - pr.nu_lo)
        x_p = x + self.scales["nu"] * self.rng.standard_normal()
        prior_delta = _logp_nu_x(x_p, pr) - _logp_nu_x(x, pr)
        if not prior_delta > -math.inf:
            self._tally("nu", 0.0, 1.0)
            return
        nu_p = pr.nu_lo + math.exp(x_p)
        if not self.prior_only:
            prior_delta += float(
                _logu_prior(self.logu, self.u, nu_p).sum()
                - _logu_prior(self.logu, self.u, self.pk.nu).sum()
            )
        self._try_param("nu", prior_delta, lambda: self._repack(nu=nu_p))

    def update_lam(self) -> None:
        pr = self.priors
        cur = self.pk.lam
        prop = cur + self.scales["lam"] * self.rng.standard_normal()
        self._try_param("lam", _logp_lam(prop, pr) - _logp_lam(cur, pr),
                        lambda: self._repack(lam=prop))

    # -- one sweep -------------------------------------------------------------

    def sweep(self) -> None:
        if not self.prior_only:
            self.update_h()
            if self.model.has_mixing:
                self.update_w()
                self.update_logu()
            if self.model.has_jumps:
                self.update_jumps()
        if self.model.has_jumps:
            if self.prior_only:
                pr = self.priors
                self._set_params(
                    pi1=self.rng.beta(pr.jump_beta_a, pr.jump_beta_b),
                    pi2=self.rng.beta(pr.jump_beta_a, pr.jump_beta_b),
                )
            else:
                self.update_jump_rates()
        early = self.landing_left > 0
        self.update_alpha_gibbs()
        self.update_alpha()
        self.update_shift()
        # The persistence block runs on a fixed cadence rather than every
        # sweep.  Posteriors for highly persistent state paths carry a long,
        # weakly identified ridge toward a unit root; transit along it under
        # a random-walk proposal is diffusive, so cutting the per-sweep
        # proposal budget for this block stretches the expected transit time
        # far beyond the run length while within-basin mixing stays fast
        # (the block's autocorrelation time remains two orders of magnitude
        # below the kept-draw count).  The cadence is deterministic in the
        # sweep index, so replay stays bit-identical.  During the landing
        # window the block runs every sweep: the state path is still being
        # refitted from its rough initialisation and the persistence value
        # must track it closely.
        if early or self.t_sweep % 4 == 0:
            self.update_phi()
        if early:
            self.update_phi_nc()
        self.update_sigma()
        # Unlike the persistence ferry, the amplitude ferry stays on for the
        # whole run: it rescales the centred path without changing its shape,
        # and ridge transit requires shape change, so it cannot assist an
        # escape toward the unit root.  What it does do is break the strong
        # coupling between the innovation scale and the path amplitude that
        # otherwise dominates the scale's autocorrelation time.
        self.update_sigma_nc()
        self.update_rho()
        if self.model.has_mixing:
            self.update_nu()
            self.update_lam()
        if early:
            # The assisted window ends as soon as the chain has demonstrably
            # settled at the data's level: once the state side has out-weighed
            # the level prior by a wide factor for a sustained run of sweeps,
            # the landing is complete and keeping the assistance active any
            # longer would only expose the chain to assisted transit toward
            # the near-unit-root ridge.  The hard cap guarantees the window
            # always terminates inside burn-in.
            self.landing_left -= 1
            if self.anchor_ratio >= 40.0:
                self.landing_streak += 1
                if self.landing_streak >= 25:
                    self.landing_left = 0
            else:
                self.landing_streak = 0
        self.t_sweep += 1


# --------------------------------------------------------------------------
# driver


def _run_chain(model: ModelId, r: np.ndarray, cfg: McmcConfig, priors: PriorConfig,
               chain_idx: int) -> tuple[dict[str, np.ndarray], np.ndarray, dict[str, float]]:
    rng = RngPolicy(seed=cfg.seed, stream=chain_idx).generator()
    chain = _Chain(model, r, rng, priors, cfg.prior_only,
                   landing_sweeps=min(cfg.burn_in, 1000))

    names = param_names(model)
    n_stored = cfg.n_keep // cfg.thin
    stored = {name: np.empty(n_stored) for name in names}

    want_h = 0 if (cfg.prior_only or cfg.h_store == 0) else min(cfg.h_store, n_stored)
    if want_h > 0:
        snap_at = set(np.linspace(0, n_stored - 1, want_h).round().astype(int).tolist())
        h_snaps = np.empty((len(snap_at), r.size))
    else:
        snap_at = set()
        h_snaps = np.empty((0, r.size))

    kept = 0
    snapped = 0
    for sweep_idx in range(cfg.burn_in + cfg.n_keep):
        chain.sweep()
        in_burn = sweep_idx < cfg.burn_in
        if in_burn and (sweep_idx + 1) % cfg.adapt_window == 0:
            chain.adapt(cfg.target_accept)
        if not in_burn:
            post_idx = sweep_idx - cfg.burn_in
            if (post_idx + 1) % cfg.thin == 0:
                pk = chain.pk
                stored["alpha"][kept] = pk.alpha
                stored["sigma"][kept] = pk.sig
                stored["phi"][kept] = pk.phi
                stored["rho"][kept] = pk.rho
                if model.has_mixing:
                    stored["nu"][kept] = pk.nu
                    stored["lam"][kept] = pk.lam
                if model.has_jumps:
                    stored["pi1"][kept] = pk.pi1
                    stored["pi2"][kept] = pk.pi2
                if kept in snap_at:
                    h_snaps[snapped] = chain.h
                    snapped += 1
                kept += 1

    rates = {key: (chain.acc[key] / chain.tries[key]) if chain.tries[key] > 0 else math.nan
             for key in chain.tries}
    return stored, h_snaps, rates


def fit(
    model: ModelId | str,
    returns: np.ndarray | None,
    config: McmcConfig = McmcConfig(),
    priors: PriorConfig = PriorConfig(),
) -> FitResult:
    """Draw from the posterior of ``model`` given ``returns``.

    Chains run serially with one dedicated counter based random stream per
    chain, so results are reproducible for a fixed configuration.  With
    ``config.prior_only`` the data may be ``None`` and the target is the
    prior alone.
    """
    model = ModelId.parse(model)
    config.validate()

    if returns is None:
        if not config.prior_only:
            raise DataError("returns are required unless prior_only is set")
        r = np.empty(0)
    else:
        r = np.asarray(returns, dtype=float).reshape(-1)
        if not config.prior_only:
            if r.size < 8:
                raise DataError("need at least 8 returns to fit")
            if not np.all(np.isfinite(r)):
                raise DataError("returns must be finite")

    names = param_names(model)
    all_draws: dict[str, list[np.ndarray]] = {name: [] for name in names}
    all_h: list[np.ndarray] = []
    rate_accum: dict[str, list[float]] = {}
    for chain_idx in range(config.n_chains):
        stored, h_snaps, rates = _run_chain(model, r, config, priors, chain_idx)
        for name in names:
            all_draws[name].append(stored[name])
        all_h.append(h_snaps)
        for key, val in rates.items():
            rate_accum.setdefault(key, []).append(val)

    draws = {name: np.stack(chains) for name, chains in all_draws.items()}
    h_draws = np.stack(all_h)
    acceptance = {key: float(np.nanmean(vals)) if not all(math.isnan(v) for v in vals)
                  else math.nan
                  for key, vals in rate_accum.items()}
    return FitResult(
        model=model,
        draws=draws,
        h_draws=h_draws,
        acceptance=acceptance,
        config=config,
        priors=priors,
    )


def posterior_leadlag(result: FitResult, returns: np.ndarray, max_lag: int) -> PosteriorLeadLag:
    """Average over stored log variance paths of the return versus
    variance level cross correlation at displacements ``-max_lag .. max_lag``.

    Positive displacement correlates today's return with the variance level
    ``k`` steps ahead.
    """
    r = np.asarray(returns, dtype=float).reshape(-1)
    if result.h_draws.size == 0:
        raise InferenceError("fit stored no log variance paths; rerun with h_store > 0")
    if result.h_draws.shape[-1] != r.size:
        raise DataError("returns length does not match the fitted series")
    if max_lag < 0:
        raise ConfigError("max_lag must be >= 0")
    if r.size <= max_lag + 4:
        raise DataError("series too short for the requested number of lags")

    paths = result.h_draws.reshape(-1, r.size)
    lags = np.arange(-max_lag, max_lag + 1)
    acc = np.zeros(lags.size)
    for h in paths:
        eh = np.exp(h)
        for i, k in enumerate(lags):
            if k >= 0:
                a = r[: r.size - k] if k > 0 else r
                b = eh[k:]
            else:
                a = r[-k:]
                b = eh[: r.size + k]
            acc[i] += np.corrcoef(a, b)[0, 1]
    rhos = acc / paths.shape[0]
    return PosteriorLeadLag(lags=lags, rhos=rhos, n_draws=int(paths.shape[0]),
                            n_obs=int(r.size))
