"""Model identifiers, parameter validation, and derived constants."""
from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from stochvol.errors import MomentExistenceError, ValidationError
from stochvol.models import (
    HALF_NORMAL_MEAN,
    ModelId,
    ModelSpec,
    SvParams,
    derived_constants,
    mean_correction,
    omega_constant,
    require_valid,
    validate,
    xi,
)

from conftest import ALL_MODELS, make_spec, random_valid_kwargs


class TestModelId:
    def test_parse_all_six(self):
        for name in ALL_MODELS:
            assert ModelId.parse(name).value == name

    @pytest.mark.parametrize("junk", ["M9.9", "", "M2", "m2.1x", "M2.4"])
    def test_parse_rejects_junk(self, junk):
        with pytest.raises(ValidationError):
            ModelId.parse(junk)

    def test_parse_tolerates_case_and_missing_prefix(self):
        assert ModelId.parse("m3.2") is ModelId.M3_2
        assert ModelId.parse("2.1") is ModelId.M2_1

    def test_timing_flag(self):
        for name in ALL_MODELS:
            assert ModelId.parse(name).contemporaneous is name.startswith("M3")

    def test_variant_and_feature_flags(self):
        for name in ALL_MODELS:
            mid = ModelId.parse(name)
            assert mid.variant == int(name[-1])
            assert mid.has_mixing is (mid.variant == 2)
            assert mid.has_jumps is (mid.variant == 3)


class TestValidation:
    def test_base_specs_valid(self):
        for name in ALL_MODELS:
            report = validate(make_spec(name))
            assert report.ok, report.violations

    @pytest.mark.parametrize("phi", [1.0, -1.0, 1.2])
    def test_unit_root_rejected(self, phi):
        spec = ModelSpec(ModelId.M2_1, SvParams(alpha=-8.0, phi=phi, sigma=0.2))
        report = validate(spec)
        assert not report.ok
        assert any("phi" in v for v in report.violations)

    def test_nonpositive_sigma_rejected(self):
        spec = ModelSpec(ModelId.M2_1, SvParams(alpha=-8.0, phi=0.9, sigma=0.0))
        assert not validate(spec).ok

    def test_rho_out_of_range_rejected(self):
        spec = ModelSpec(ModelId.M2_1, SvParams(alpha=-8.0, phi=0.9, sigma=0.2, rho=1.5))
        assert not validate(spec).ok

    def test_variant_parameters_must_match_family(self):
        stray_nu = ModelSpec(
            ModelId.M2_1, SvParams(alpha=-8.0, phi=0.9, sigma=0.2, nu=8.0, lam=0.0)
        )
        assert not validate(stray_nu).ok
        missing_nu = ModelSpec(ModelId.M2_2, SvParams(alpha=-8.0, phi=0.9, sigma=0.2))
        assert not validate(missing_nu).ok
        stray_pi = ModelSpec(
            ModelId.M3_1, SvParams(alpha=-8.0, phi=0.9, sigma=0.2, pi1=0.01, pi2=0.01)
        )
        assert not validate(stray_pi).ok

    def test_jump_size_generalization_rejected(self):
        spec = ModelSpec(
            ModelId.M2_3,
            SvParams(alpha=-8.0, phi=0.9, sigma=0.2, pi1=0.01, pi2=0.01, nu1=0.5),
        )
        report = validate(spec)
        assert not report.ok
        assert any("unsupported extension" in v for v in report.violations)

    def test_violations_collected_not_first_fail(self):
        spec = ModelSpec(ModelId.M2_1, SvParams(alpha=-8.0, phi=1.5, sigma=-1.0))
        report = validate(spec)
        assert len(report.violations) >= 2

    def test_require_valid_raises_with_all_violations(self):
        spec = ModelSpec(ModelId.M2_1, SvParams(alpha=-8.0, phi=1.5, sigma=-1.0))
        with pytest.raises(ValidationError) as exc:
            require_valid(spec)
        assert "phi" in str(exc.value) and "sigma" in str(exc.value)

    def test_capability_map_tracks_tail_index(self):
        caps = validate(make_spec("M2.2", nu=3.5)).capabilities
        assert caps["m2"] and caps["skewness"] and not caps["kurtosis"]
        caps = validate(make_spec("M2.2", nu=2.5)).capabilities
        assert caps["m2"] and not caps["skewness"] and not caps["kurtosis"]

    @given(st.data())
    @settings(max_examples=60, deadline=None)
    def test_random_valid_draws_validate(self, data):
        model = data.draw(st.sampled_from(ALL_MODELS))
        seed = data.draw(st.integers(0, 2**31))
        kwargs = random_valid_kwargs(model, np.random.default_rng(seed))
        assert validate(ModelSpec.create(model, **kwargs)).ok


class TestXi:
    def test_matches_high_precision_gamma_ratio(self):
        for nu, k in [(5.0, 1.0), (8.0, 1.5), (12.0, 2.0), (4.1, 0.5), (150.0, 2.0)]:
            a = mpmath.mpf(nu) / 2
            want = float(mpmath.power(a, k) * mpmath.gamma(a - k) / mpmath.gamma(a))
            assert xi(nu, k) == pytest.approx(want, rel=1e-12)

    def test_existence_boundary(self):
        with pytest.raises(MomentExistenceError) as exc:
            xi(4.0, 2.0)
        assert exc.value.order == 2.0
        assert xi(4.0 + 1e-9, 2.0) > 0.0

    def test_strictly_decreasing_in_nu(self):
        for k in (0.5, 1.0, 1.5, 2.0):
            grid = np.linspace(2.0 * k + 0.5, 120.0, 60)
            values = [xi(float(nu), k) for nu in grid]
            assert all(a > b for a, b in zip(values, values[1:]))

    def test_limit_is_one(self):
        assert xi(1e6, 1.0) == pytest.approx(1.0, rel=1e-4)

    def test_monte_carlo_agreement(self, rng):
        nu, k = 7.0, 1.5
        u = rng.gamma(nu / 2.0, 2.0 / nu, size=400_000)
        est = (u**-k).mean()
        se = (u**-k).std(ddof=1) / math.sqrt(u.size)
        assert abs(est - xi(nu, k)) < 4.0 * se


class TestOmega:
    def test_symmetric_case_normalizes_exactly(self):
        for nu in (2.1, 3.0, 5.0, 17.0, 199.0):
            assert omega_constant(nu, 0.0) ** 2 * xi(nu, 1.0) == pytest.approx(
                1.0, rel=1e-12
            )

    def test_component_variance_is_one(self, rng):
        from stochvol.simulate import sample_skewed_t_component

        nu, lam = 8.0, -0.7
        s, _, _, _ = sample_skewed_t_component(nu, lam, rng, size=2_000_000)
        var = s.var()
        se = (s**2).std(ddof=1) / math.sqrt(s.size)
        assert abs(var - 1.0) < 4.0 * se
        assert abs(s.mean()) < 4.0 * s.std(ddof=1) / math.sqrt(s.size)


class TestMeanCorrection:
    def test_zero_for_predictive_models(self):
        for name in ("M2.1", "M2.2", "M2.3"):
            assert mean_correction(make_spec(name)) == 0.0

    def test_zero_exactly_when_rho_zero(self):
        for name in ("M3.1", "M3.2", "M3.3"):
            assert mean_correction(make_spec(name, rho=0.0)) == 0.0

    def test_sign_opposite_to_rho(self):
        for rho in (-0.8, -0.1, 0.1, 0.8):
            mu = mean_correction(make_spec("M3.1", rho=rho))
            assert mu * rho < 0.0

    def test_m31_closed_form(self):
        spec = make_spec("M3.1", alpha=-6.0, phi=0.9, sigma=0.3, rho=-0.5)
        v = 0.3**2 / (1.0 - 0.81)
        want = -(-0.5 * 0.3 / 2.0) * math.exp(-3.0 + v / 8.0)
        assert mean_correction(spec) == pytest.approx(want, rel=1e-14)

    def test_simulated_uncorrected_mean_matches(self, rng):
        from stochvol.oracle import mc_path_mean

        spec = make_spec("M3.1", alpha=-2.0, phi=0.8, sigma=0.5, rho=-0.6)
        est = mc_path_mean(spec, 400_000, policy=11, mean_corrected=False)
        assert abs(est.value - (-mean_correction(spec))) < 4.0 * est.se


class TestDerivedConstants:
    def test_degenerate_for_non_mixing(self):
        for name in ("M2.1", "M3.3"):
            d = derived_constants(make_spec(name))
            assert (d.delta, d.omega) == (0.0, 1.0)
            assert d.xi_half == d.xi_one == d.xi_threehalf == d.xi_two == 1.0

    def test_mixing_fields(self):
        d = derived_constants(make_spec("M2.2", nu=3.5, lam=-0.5))
        assert d.delta == pytest.approx(-0.5 / math.sqrt(1.25), rel=1e-14)
        assert d.omega == pytest.approx(omega_constant(3.5, -0.5), rel=1e-14)
        assert d.xi_half is not None and d.xi_one is not None
        assert d.xi_threehalf is not None
        assert d.xi_two is None

    def test_half_normal_mean_constant(self):
        assert HALF_NORMAL_MEAN == pytest.approx(math.sqrt(2.0 / math.pi), rel=1e-15)
