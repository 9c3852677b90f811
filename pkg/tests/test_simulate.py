"""Path simulation: determinism, wiring, timing, and stationary marginals."""
from __future__ import annotations

import math

import numpy as np
import pytest

from stochvol.models import xi
from stochvol.simulate import (
    RngPolicy,
    SimPath,
    draw_stationary_return,
    sample_skewed_t_component,
    simulate_path,
    state_burnin_steps,
)

from conftest import ALL_MODELS, make_spec


def corr_se(n: int) -> float:
    return 1.0 / math.sqrt(n)


class TestRngPolicy:
    def test_same_seed_same_stream_identical(self):
        a = RngPolicy(42, 7).generator().standard_normal(32)
        b = RngPolicy(42, 7).generator().standard_normal(32)
        assert np.array_equal(a, b)

    def test_streams_differ(self):
        a = RngPolicy(42, 0).generator().standard_normal(32)
        b = RngPolicy(42, 1).generator().standard_normal(32)
        assert not np.array_equal(a, b)

    def test_child_derivation(self):
        pol = RngPolicy(42, 0)
        assert pol.child(3) == RngPolicy(42, 3)


class TestDeterminism:
    @pytest.mark.parametrize("name", ALL_MODELS)
    def test_bit_identical_replay(self, name):
        spec = make_spec(name)
        a = simulate_path(spec, 500, RngPolicy(11, 3))
        b = simulate_path(spec, 500, RngPolicy(11, 3))
        assert np.array_equal(a.returns, b.returns)
        assert np.array_equal(a.logvol, b.logvol)
        c = simulate_path(spec, 500, RngPolicy(11, 4))
        assert not np.array_equal(a.returns, c.returns)

    def test_int_policy_shorthand(self):
        spec = make_spec("M2.1")
        a = simulate_path(spec, 100, 5)
        b = simulate_path(spec, 100, RngPolicy(5, 0))
        assert np.array_equal(a.returns, b.returns)


class TestShapesAndFields:
    def test_every_family_has_core_fields(self):
        for name in ALL_MODELS:
            p = simulate_path(make_spec(name), 64, 1)
            assert p.n_steps == 64
            for arr in (p.returns, p.logvol, p.eps, p.eta):
                assert arr.shape == (64,)
                assert np.all(np.isfinite(arr))

    def test_variant_fields_present_only_where_defined(self):
        plain = simulate_path(make_spec("M2.1"), 16, 1)
        assert plain.mixing_u is None and plain.jump_r is None
        mixing = simulate_path(make_spec("M2.2"), 16, 1)
        assert mixing.mixing_u is not None and mixing.mixing_w is not None
        assert np.all(mixing.mixing_u > 0) and np.all(mixing.mixing_w >= 0)
        jumpy = simulate_path(make_spec("M2.3"), 16, 1)
        assert jumpy.jump_r is not None and jumpy.jump_h_size is not None
        assert jumpy.jump_r.dtype == bool

    def test_bad_inputs_rejected(self):
        with pytest.raises(ValueError):
            simulate_path(make_spec("M2.1"), 0, 1)
        with pytest.raises(ValueError):
            simulate_path(make_spec("M2.1"), 10, 1, h0="weird")

    def test_fixed_h0_is_honored_for_predictive_timing(self):
        p = simulate_path(make_spec("M2.1"), 10, 1, h0=-5.5)
        assert p.logvol[0] == pytest.approx(-5.5)


class TestCorrelationWiring:
    def test_shock_pair_correlation_matches_rho(self):
        for name in ALL_MODELS:
            spec = make_spec(name, rho=-0.4)
            p = simulate_path(spec, 1_000_000, 2)
            r = np.corrcoef(p.eps, p.eta)[0, 1]
            assert abs(r - (-0.4)) < 4.0 * corr_se(p.n_steps), name

    def test_timing_separation(self):
        n = 1_000_000
        pred = simulate_path(make_spec("M2.1", rho=-0.6), n, 3)
        shock = pred.returns / np.exp(pred.logvol / 2.0)
        r_pred = np.corrcoef(shock, pred.logvol)[0, 1]
        assert abs(r_pred) < 4.0 * corr_se(n)

        cont = simulate_path(make_spec("M3.1", rho=-0.6), n, 3)
        shock = (cont.returns - cont.mu) / np.exp(cont.logvol / 2.0)
        r_cont = np.corrcoef(shock, cont.logvol)[0, 1]
        assert r_cont < -10.0 * corr_se(n)

    def test_predictive_shock_leads_next_state(self):
        p = simulate_path(make_spec("M2.1", rho=-0.6), 500_000, 4)
        r = np.corrcoef(p.eps[:-1], p.logvol[1:] - 0.95 * p.logvol[:-1])[0, 1]
        assert r < -0.5


class TestStationaryMarginals:
    @staticmethod
    def _batch_se(x: np.ndarray, n_batches: int = 100) -> float:
        m = (x.size // n_batches) * n_batches
        b = x[:m].reshape(n_batches, -1).mean(axis=1)
        return float(b.std(ddof=1) / math.sqrt(n_batches))

    def test_gaussian_state_mean_and_variance(self):
        for name in ("M2.1", "M2.2", "M3.1", "M3.2"):
            spec = make_spec(name)
            p = simulate_path(spec, 1_000_000, 5)
            v = 0.2**2 / (1.0 - 0.95**2)
            h = p.logvol
            assert abs(h.mean() - (-8.0)) < 4.0 * self._batch_se(h), name
            sq = (h - h.mean()) ** 2
            assert abs(sq.mean() - v) < 4.0 * self._batch_se(sq), name

    def test_jump_state_variance_inflated(self):
        # A Bernoulli(pi2) indicator times an independent standard normal
        # size adds pi2 to the innovation variance (the size second moment
        # weighted by the jump rate); pi2 * (1 - pi2) would be the variance
        # of the bare indicator and undercounts the size contribution.
        spec = make_spec("M3.3", pi2=0.2)
        p = simulate_path(spec, 1_000_000, 6)
        v = (0.2**2 + 0.2) / (1.0 - 0.95**2)
        sq = (p.logvol - p.logvol.mean()) ** 2
        assert abs(sq.mean() - v) < 4.0 * self._batch_se(sq)

    def test_jump_rates_match(self):
        spec = make_spec("M2.3", pi1=0.04, pi2=0.08)
        p = simulate_path(spec, 500_000, 7)
        for field, rate in (("jump_r", 0.04), ("jump_h", 0.08)):
            frac = getattr(p, field).mean()
            se = math.sqrt(rate * (1.0 - rate) / p.n_steps)
            assert abs(frac - rate) < 4.0 * se, field


class TestMeanCorrectionToggle:
    def test_disabled_correction_shifts_mean(self):
        spec = make_spec("M3.1", alpha=-2.0, phi=0.8, sigma=0.5, rho=-0.6)
        on = simulate_path(spec, 200_000, 8)
        off = simulate_path(spec, 200_000, 8, mean_corrected=False)
        assert on.mu != 0.0
        assert off.mu == 0.0
        assert np.allclose(off.returns - on.returns, -on.mu)

    def test_predictive_models_unaffected(self):
        spec = make_spec("M2.1")
        on = simulate_path(spec, 1000, 9)
        off = simulate_path(spec, 1000, 9, mean_corrected=False)
        assert np.array_equal(on.returns, off.returns)


class TestStationaryDraws:
    def test_lognormal_identity(self):
        spec = make_spec("M2.1", alpha=0.0, phi=0.0, sigma=1.0, rho=0.0)
        s = draw_stationary_return(spec, 1_000_000, RngPolicy(1, 1).generator())
        m2 = (s.returns**2).mean()
        se = (s.returns**2).std(ddof=1) / math.sqrt(s.returns.size)
        assert abs(m2 - math.exp(0.5)) < 4.0 * se

    def test_skewed_component_inverse_moment(self):
        rng = RngPolicy(2, 2).generator()
        _, u, _, _ = sample_skewed_t_component(6.0, 0.8, rng, size=1_000_000)
        est = (1.0 / u).mean()
        se = (1.0 / u).std(ddof=1) / math.sqrt(u.size)
        assert abs(est - xi(6.0, 1.0)) < 4.0 * se


class TestBurnin:
    def test_burnin_grows_with_persistence(self):
        assert state_burnin_steps(0.5) == 20
        assert state_burnin_steps(0.9) == math.ceil(10.0 / (1.0 - 0.9))
        assert state_burnin_steps(0.99) > state_burnin_steps(0.9)
