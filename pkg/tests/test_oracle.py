"""Monte Carlo audit layer: estimators, grid, report plumbing, CSV format."""

import io
import math

import numpy as np
import pytest

from stochvol.moments import moments
from stochvol.leadlag import gamma, var_exp_h
from stochvol.oracle import (
    CheckRow,
    DOCUMENTED_DISCREPANCIES,
    DiscrepancyReport,
    GridPoint,
    McEstimate,
    Z_THRESHOLD,
    default_verify_grid,
    mc_gamma,
    mc_path_mean,
    mc_stationary_summary,
    oracle_check_point,
    run_discrepancy_report,
    write_discrepancy_csv,
)
from stochvol.simulate import RngPolicy

from conftest import make_spec


class TestMcEstimate:
    def test_z_scales_with_se(self):
        e = McEstimate(1.5, 0.25)
        assert e.z_against(1.0) == pytest.approx(2.0)
        assert e.z_against(2.0) == pytest.approx(-2.0)

    def test_zero_se_degenerate(self):
        e = McEstimate(1.0, 0.0)
        assert e.z_against(1.0) == 0.0
        assert e.z_against(0.5) == math.inf
        assert e.z_against(1.5) == -math.inf


class TestEstimatorCalibration:
    def test_se_shrinks_like_root_n(self):
        # Doubling the sample should multiply the standard error by about
        # 1/sqrt(2); the ratio must land in [0.6, 0.8].
        spec = make_spec("M2.1", phi=0.8)
        ratios = []
        for seed in range(3):
            a = mc_stationary_summary(spec, 40_000, RngPolicy(seed, 3).generator())
            b = mc_stationary_summary(spec, 80_000, RngPolicy(seed, 4).generator())
            ratios.append(b["m2"].se / a["m2"].se)
        med = sorted(ratios)[1]
        assert 0.6 <= med <= 0.8

    def test_lognormal_known_moments(self):
        # With rho = 0 and Gaussian shocks the stationary return is a
        # lognormal-scale mixture whose m2 and m4 are known exactly; the
        # sampler must match within the usual z budget.
        spec = make_spec("M2.1", alpha=-1.0, phi=0.9, sigma=0.4, rho=0.0)
        mom = moments(spec)
        est = mc_stationary_summary(spec, 400_000, RngPolicy(11, 0).generator())
        assert abs(est["m2"].z_against(mom.m2)) <= 4.0
        assert abs(est["m4"].z_against(mom.m4)) <= 4.0
        assert abs(est["mean"].z_against(0.0)) <= 4.0
        assert abs(est["var_exp_h"].z_against(var_exp_h(spec))) <= 4.0

    def test_rejects_tiny_n(self):
        spec = make_spec("M2.1")
        with pytest.raises(ValueError):
            mc_stationary_summary(spec, 50, RngPolicy(0, 0).generator())

    def test_mc_gamma_zero_lags_for_predictive(self):
        spec = make_spec("M2.1", alpha=-1.0, phi=0.85, sigma=0.35)
        est = mc_gamma(spec, 2, 200_000, RngPolicy(5, 7).generator())
        assert set(est) == {-2, -1, 0, 1, 2}
        for k in (-2, -1, 0):
            assert abs(est[k].z_against(0.0)) <= 4.5, k
        for k in (1, 2):
            assert abs(est[k].z_against(gamma(spec, k))) <= 4.5, k

    def test_mc_path_mean_contemporaneous_centering(self):
        spec = make_spec("M3.1", alpha=-2.0, phi=0.9, sigma=0.4, rho=-0.7)
        corrected = mc_path_mean(spec, 400_000, policy=RngPolicy(2, 1))
        assert abs(corrected.z_against(0.0)) <= 4.0
        raw = mc_path_mean(spec, 400_000, policy=RngPolicy(2, 2), mean_corrected=False)
        assert abs(raw.value - corrected.value) > 3.0 * raw.se

    def test_determinism(self):
        spec = make_spec("M2.3")
        a = mc_stationary_summary(spec, 20_000, RngPolicy(9, 0).generator())
        b = mc_stationary_summary(spec, 20_000, RngPolicy(9, 0).generator())
        assert all(a[k].value == b[k].value and a[k].se == b[k].se for k in a)


class TestGrid:
    def test_default_grid_shape(self):
        grid = default_verify_grid()
        assert len(grid) == 18
        by_model: dict[str, int] = {}
        for pt in grid:
            base = pt.label.split("[", 1)[0]
            by_model[base] = by_model.get(base, 0) + 1
            assert pt.label.endswith(("[p0]", "[p1]", "[p2]"))
            assert pt.spec.model.value == base
        assert by_model == {m: 3 for m in
                            ("M2.1", "M2.2", "M2.3", "M3.1", "M3.2", "M3.3")}

    def test_labels_unique(self):
        labels = [pt.label for pt in default_verify_grid()]
        assert len(set(labels)) == len(labels)


class TestCheckRow:
    def test_documented_matches_registry(self):
        row = CheckRow("M3.1[p2]", "m3", 0.0, 0.1, 0.01, 10.0, True)
        assert row.documented
        row2 = CheckRow("M3.1[p2]", "m2", 0.0, 0.1, 0.01, 10.0, True)
        assert not row2.documented
        row3 = CheckRow("M3.2[p0]", "m4", 0.0, 0.1, 0.01, 10.0, True)
        assert row3.documented
        assert set(DOCUMENTED_DISCREPANCIES) == {
            ("M3.1", "m3"), ("M3.2", "m4"), ("M3.3", "m4")
        }


class TestReport:
    def _tiny_report(self, n=60_000, z=Z_THRESHOLD):
        grid = [
            GridPoint("M2.1[p0]", make_spec("M2.1", alpha=-1.0, phi=0.8,
                                            sigma=0.4, rho=-0.5)),
            GridPoint("M3.1[p0]", make_spec("M3.1", alpha=-1.0, phi=0.8,
                                            sigma=0.4, rho=-0.5)),
        ]
        return run_discrepancy_report(grid=grid, n=n, seed=3, max_lag=1,
                                      n_batches=50, z_threshold=z)

    def test_rows_cover_quantities(self):
        rep = self._tiny_report()
        per_model = {"m2", "m3", "m4", "var_exp_h", "gamma[-1]", "gamma[0]",
                     "gamma[1]"}
        got = {(r.model, r.quantity) for r in rep.rows}
        assert got == {(m, q) for m in ("M2.1[p0]", "M3.1[p0]") for q in per_model}

    def test_clean_models_do_not_flag(self):
        # At desk scale the Gaussian families have no retained-form
        # discrepancies, so nothing may flag.
        rep = self._tiny_report()
        assert rep.undocumented_flags == ()
        assert all(not r.flag for r in rep.rows)

    def test_flag_threshold_respected(self):
        rep = self._tiny_report(z=0.0)
        assert all(r.flag == (abs(r.z) > 0.0) for r in rep.rows)
        assert rep.flagged
        assert {r for r in rep.undocumented_flags} == {
            r for r in rep.flagged if not r.documented
        }

    def test_determinism(self):
        a = self._tiny_report()
        b = self._tiny_report()
        assert a.rows == b.rows

    def test_csv_format(self):
        rep = self._tiny_report()
        buf = io.StringIO()
        write_discrepancy_csv(rep, buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == (
            f"# n={rep.n} seed={rep.seed} max_lag={rep.max_lag} "
            f"n_batches={rep.n_batches} z_threshold={repr(rep.z_threshold)}"
        )
        points = [ln for ln in lines if ln.startswith("# point ")]
        assert len(points) == 2
        assert points[0].startswith("# point M2.1[p0]: alpha=-1.0 ")
        documented = [ln for ln in lines if ln.startswith("# documented ")]
        assert len(documented) == len(DOCUMENTED_DISCREPANCIES)
        header_idx = lines.index("model,quantity,analytic,oracle,se,z,flag")
        body = lines[header_idx + 1:]
        assert len(body) == len(rep.rows)
        for ln in body:
            parts = ln.split(",")
            assert len(parts) == 7
            assert parts[0] in ("M2.1[p0]", "M3.1[p0]")
            assert parts[6] in ("0", "1")
            float(parts[2]); float(parts[3]); float(parts[4]); float(parts[5])

    def test_csv_round_trips_floats(self):
        rep = self._tiny_report()
        buf = io.StringIO()
        write_discrepancy_csv(rep, buf)
        body = [ln for ln in buf.getvalue().splitlines()
                if not ln.startswith("#") and not ln.startswith("model,")]
        for row, ln in zip(rep.rows, body):
            parts = ln.split(",")
            assert float(parts[2]) == row.analytic
            assert float(parts[3]) == row.oracle
            assert float(parts[4]) == row.se


class TestStressedPointFlags:
    def test_documented_cell_flags_at_stressed_point(self):
        # A strongly stressed contemporaneous jump point must push the
        # retained fourth-moment form past the z threshold, and the flag
        # must be recognised as documented.  The jump variant is used here
        # because its return tails are light enough for the fourth-moment
        # standard error to stay tight at this sample size; the skewed-t
        # sibling needs far more draws for the same resolution and is
        # exercised at scale by the acceptance suite instead.
        spec = make_spec("M3.3", alpha=-1.0, phi=0.8, sigma=0.4, rho=-0.8,
                         pi1=0.2, pi2=0.2)
        grid = [GridPoint("M3.3[p0]", spec)]
        rep = run_discrepancy_report(grid=grid, n=400_000, seed=1, max_lag=0,
                                     n_batches=50)
        flagged = {(r.quantity) for r in rep.flagged}
        assert "m4" in flagged
        assert rep.undocumented_flags == ()
