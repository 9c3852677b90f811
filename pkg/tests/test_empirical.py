"""Data-side statistics: log-returns, sample moments, lead-lag, CSV loading."""

import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from stochvol.empirical import (
    EmpiricalLeadLag,
    bartlett_band,
    empirical_leadlag,
    from_prices,
    load_series_csv,
    summary_stats,
)
from stochvol.errors import DataError


class TestFromPrices:
    def test_matches_log_diff(self):
        prices = np.array([100.0, 101.5, 99.2, 103.0])
        r = from_prices(prices)
        expect = np.log(prices[1:]) - np.log(prices[:-1])
        assert np.allclose(r, expect, rtol=0, atol=1e-15)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=40, deadline=None)
    def test_round_trip_recovers_prices(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 200))
        prices = np.exp(rng.normal(0.0, 0.5, n).cumsum() + 4.0)
        r = from_prices(prices)
        rebuilt = prices[0] * np.exp(np.cumsum(r))
        assert np.allclose(rebuilt, prices[1:], rtol=1e-12, atol=0)

    def test_demean_centers(self):
        rng = np.random.default_rng(7)
        prices = np.exp(rng.normal(0.0, 0.1, 500).cumsum())
        r = from_prices(prices, demean=True)
        assert abs(r.mean()) < 1e-15

    def test_rejects_bad_input(self):
        with pytest.raises(DataError):
            from_prices(np.array([100.0]))
        with pytest.raises(DataError):
            from_prices(np.array([[100.0, 101.0]]))
        with pytest.raises(DataError):
            from_prices(np.array([100.0, -1.0, 101.0]))
        with pytest.raises(DataError):
            from_prices(np.array([100.0, 0.0, 101.0]))
        with pytest.raises(DataError):
            from_prices(np.array([100.0, np.nan, 101.0]))


class TestSummaryStats:
    def test_matches_manual_moments(self):
        rng = np.random.default_rng(11)
        r = rng.standard_t(6, 400)
        s = summary_stats(r)
        d = r - r.mean()
        assert s.n == 400
        assert s.mean == pytest.approx(r.mean(), rel=0, abs=1e-15)
        assert s.m2 == pytest.approx(np.mean(d**2), rel=1e-14)
        assert s.m3 == pytest.approx(np.mean(d**3), rel=1e-12, abs=1e-15)
        assert s.m4 == pytest.approx(np.mean(d**4), rel=1e-14)
        assert s.skewness == pytest.approx(s.m3 / s.m2**1.5, rel=1e-14)
        assert s.kurtosis == pytest.approx(s.m4 / s.m2**2, rel=1e-14)

    def test_symmetric_two_point_sample(self):
        s = summary_stats(np.array([-1.0, 1.0]))
        assert s.mean == 0.0
        assert s.skewness == 0.0
        assert s.kurtosis == 1.0

    def test_rejects_degenerate(self):
        with pytest.raises(DataError):
            summary_stats(np.array([1.0]))
        with pytest.raises(DataError):
            summary_stats(np.full(10, 3.14))
        with pytest.raises(DataError):
            summary_stats(np.array([1.0, np.inf, 2.0]))


class TestBartlettBand:
    def test_formula(self):
        for n in (10, 100, 2000):
            for level in (0.5, 0.9, 0.95, 0.99):
                assert bartlett_band(n, level) == pytest.approx(
                    norm.ppf((1.0 + level) / 2.0) / math.sqrt(n), rel=0, abs=0
                )

    def test_shrinks_with_n(self):
        assert bartlett_band(400) < bartlett_band(100) < bartlett_band(25)

    def test_rejects_bad_args(self):
        with pytest.raises(DataError):
            bartlett_band(0)
        with pytest.raises(DataError):
            bartlett_band(100, level=1.0)
        with pytest.raises(DataError):
            bartlett_band(100, level=0.0)


class TestEmpiricalLeadLag:
    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=30, deadline=None)
    def test_correlations_bounded(self, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(30, 400))
        r = rng.standard_t(4, n) * np.exp(rng.normal(0, 1, n))
        prof = empirical_leadlag(r, 8)
        assert np.all(np.abs(prof.rhos) <= 1.0 + 1e-12)
        assert np.array_equal(prof.lags, np.arange(-8, 9))
        assert prof.n == n

    def test_reversal_swaps_sides(self):
        rng = np.random.default_rng(23)
        r = rng.standard_normal(300)
        fwd = empirical_leadlag(r, 10)
        rev = empirical_leadlag(r[::-1].copy(), 10)
        assert np.allclose(rev.rhos, fwd.rhos[::-1], rtol=0, atol=1e-14)

    def test_lag_zero_matches_direct(self):
        rng = np.random.default_rng(29)
        r = rng.standard_normal(250)
        prof = empirical_leadlag(r, 0)
        assert prof.lags.tolist() == [0]
        direct = np.corrcoef(r, r**2)[0, 1]
        assert prof.rhos[0] == pytest.approx(direct, rel=0, abs=1e-15)

    def test_known_asymmetric_series(self):
        # Persistent squared-return dependence on the lagged sign shows up
        # on the positive-lag side only.
        rng = np.random.default_rng(31)
        n = 60_000
        z = rng.standard_normal(n + 1)
        scale = np.where(z[:-1] < 0, 2.0, 0.5)
        r = scale * z[1:]
        prof = empirical_leadlag(r, 3)
        rho_plus1 = prof.rhos[prof.lags.tolist().index(1)]
        rho_minus1 = prof.rhos[prof.lags.tolist().index(-1)]
        assert rho_plus1 < -10.0 * prof.band
        assert abs(rho_minus1) < 5.0 * prof.band

    def test_band_level_passthrough(self):
        rng = np.random.default_rng(37)
        r = rng.standard_normal(500)
        p95 = empirical_leadlag(r, 2, level=0.95)
        p99 = empirical_leadlag(r, 2, level=0.99)
        assert p95.band == pytest.approx(bartlett_band(500, 0.95), rel=0, abs=0)
        assert p99.band > p95.band

    def test_preconditions(self):
        r = np.arange(30, dtype=float)
        with pytest.raises(DataError):
            empirical_leadlag(r, -1)
        with pytest.raises(DataError):
            empirical_leadlag(r[:10], 6)
        bad = r.copy()
        bad[3] = np.nan
        with pytest.raises(DataError):
            empirical_leadlag(bad, 2)


class TestLoadSeriesCsv:
    def _write(self, tmp_path, text, name="series.csv"):
        p = tmp_path / name
        p.write_text(text)
        return str(p)

    def test_price_file(self, tmp_path):
        path = self._write(
            tmp_path,
            "date,price\n2024-01-02,100.0\n2024-01-03,101.0\n2024-01-04,99.5\n",
        )
        loaded = load_series_csv(path)
        assert loaded.kind == "price"
        assert loaded.n_skipped == 0
        assert [str(d) for d in loaded.dates] == ["2024-01-03", "2024-01-04"]
        expect = np.diff(np.log([100.0, 101.0, 99.5]))
        assert np.allclose(loaded.returns, expect, rtol=0, atol=1e-15)

    def test_return_file_and_demean(self, tmp_path):
        path = self._write(
            tmp_path,
            "date,return\n2024-02-01,0.01\n2024-02-02,-0.02\n2024-02-03,0.04\n",
        )
        plain = load_series_csv(path)
        assert plain.kind == "return"
        assert np.allclose(plain.returns, [0.01, -0.02, 0.04])
        centered = load_series_csv(path, demean=True)
        assert abs(centered.returns.mean()) < 1e-17

    def test_comments_blanks_and_bad_dates(self, tmp_path):
        path = self._write(
            tmp_path,
            "# provenance note\n"
            "date,return\n"
            "2024-03-01,0.01\n"
            "\n"
            "not-a-date,0.99\n"
            "2024-03-04,0.02\n",
        )
        loaded = load_series_csv(path)
        assert loaded.n_skipped == 1
        assert np.allclose(loaded.returns, [0.01, 0.02])

    def test_header_and_value_errors(self, tmp_path):
        with pytest.raises(DataError):
            load_series_csv(self._write(tmp_path, "", name="empty.csv"))
        with pytest.raises(DataError):
            load_series_csv(
                self._write(tmp_path, "time,price\n2024-01-01,1.0\n", name="h.csv")
            )
        with pytest.raises(DataError):
            load_series_csv(
                self._write(
                    tmp_path, "date,return\n2024-01-01,abc\n", name="v.csv"
                )
            )
        with pytest.raises(DataError):
            load_series_csv(
                self._write(tmp_path, "date,return\nnope,0.1\n", name="s.csv")
            )

    def test_short_row_raises(self, tmp_path):
        with pytest.raises(DataError):
            load_series_csv(
                self._write(tmp_path, "date,return\n2024-01-01\n", name="r.csv")
            )
