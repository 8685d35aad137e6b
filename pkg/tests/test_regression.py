"""Regression-layer tests: exact planted fits, noise recovery, validation."""
import math

import numpy as np
import pytest

from tickzone.errors import CollinearityError, InsufficientDataError, ParameterError
from tickzone.estimators import DailyRecord
from tickzone.regression import (
    REGRESSION_CSV_HEADER,
    RegressionFit,
    design_matrix,
    fit_by_asset,
    fit_spread_vol,
)


def _record(eta, alpha, m, spread_mult=1.2, sigma=None, asset_id="A", date="d", p=(1.0, 0.1, 0.0)):
    """Asset-day whose response sits exactly on the plane unless sigma is given."""
    spread = alpha * spread_mult
    if sigma is None:
        sigma = p[0] * eta * alpha * math.sqrt(m) + p[1] * spread * math.sqrt(m) + p[2]
    return DailyRecord(
        date=date,
        asset_id=asset_id,
        eta_hat=eta,
        alpha=alpha,
        sigma_hat=sigma,
        m_trades=m,
        avg_spread=spread,
        frac_one_tick=90.0,
    )


def _exact_records(p=(1.0, 0.1, 0.0)):
    etas = [0.10, 0.18, 0.25, 0.32, 0.40, 0.45, 0.22, 0.35]
    alphas = [0.01, 0.01, 0.5, 0.5, 0.01, 0.5, 0.01, 0.5]
    ms = [1200, 5400, 900, 3000, 22000, 1500, 8000, 4700]
    mults = [1.0, 1.4, 1.1, 2.0, 1.0, 1.3, 1.8, 1.0]
    return [
        _record(e, a, m, spread_mult=w, p=p)
        for e, a, m, w in zip(etas, alphas, ms, mults)
    ]


def _noisy_records(seed=5, n=60, p=(1.0, 0.1, 0.0), noise=0.02):
    rng = np.random.default_rng(seed)
    recs = []
    for i in range(n):
        eta = rng.uniform(0.10, 0.45)
        alpha = rng.choice([0.005, 0.01, 0.025])
        m = int(rng.integers(1000, 20000))
        mult = 1.0 + 0.5 * rng.random()
        base = p[0] * eta * alpha * math.sqrt(m) + p[1] * alpha * mult * math.sqrt(m) + p[2]
        sigma = base * (1.0 + noise * rng.standard_normal())
        recs.append(_record(eta, alpha, m, spread_mult=mult, sigma=sigma, date=f"d{i}"))
    return recs


class TestFitSpreadVol:
    def test_exact_plane_recovered(self):
        fit = fit_spread_vol(_exact_records())
        assert fit.p1 == pytest.approx(1.0, abs=1e-9)
        assert fit.p2 == pytest.approx(0.1, abs=1e-9)
        assert fit.p3 == pytest.approx(0.0, abs=1e-9)
        assert fit.r2 == pytest.approx(1.0, abs=1e-9)
        assert fit.n_days == 8

    def test_exact_fit_intervals_are_tight_and_ordered(self):
        fit = fit_spread_vol(_exact_records())
        for est, (lo, hi) in ((fit.p1, fit.p1_ci), (fit.p2, fit.p2_ci), (fit.p3, fit.p3_ci)):
            assert lo <= est <= hi
            assert hi - lo < 1e-6

    def test_intercept_recovered(self):
        fit = fit_spread_vol(_exact_records(p=(0.8, 0.05, 3.0)))
        assert fit.p1 == pytest.approx(0.8, abs=1e-9)
        assert fit.p2 == pytest.approx(0.05, abs=1e-9)
        assert fit.p3 == pytest.approx(3.0, abs=1e-9)

    def test_noisy_intervals_bracket_truth(self):
        fit = fit_spread_vol(_noisy_records())
        assert fit.p1_ci[0] <= 1.0 <= fit.p1_ci[1]
        assert fit.p2_ci[0] <= 0.1 <= fit.p2_ci[1]
        assert fit.r2 > 0.95

    def test_residuals_orthogonal_to_design(self):
        recs = _noisy_records()
        fit = fit_spread_vol(recs)
        x, y = design_matrix(recs)
        resid = y - x @ np.array([fit.p1, fit.p2, fit.p3])
        assert np.allclose(x.T @ resid, 0.0, atol=1e-8)

    def test_too_few_records(self):
        with pytest.raises(InsufficientDataError):
            fit_spread_vol(_exact_records()[:3])

    def test_too_few_after_flag_filter(self):
        recs = _exact_records()[:3] + [
            _record(0.9, 0.01, 5000, date="f1"),
            _record(0.7, 0.01, 6000, date="f2"),
        ]
        with pytest.raises(InsufficientDataError):
            fit_spread_vol(recs)

    def test_collinear_regressors_rejected(self):
        # eta*alpha proportional to the spread makes the design rank 2
        recs = [
            _record(1.0, a, m, spread_mult=1.0, date=f"d{i}")
            for i, (a, m) in enumerate([(0.01, 1000), (0.01, 4000), (0.5, 2000), (0.5, 9000), (0.01, 16000)])
        ]
        with pytest.raises(CollinearityError):
            fit_spread_vol(recs, exclude_flagged=False)

    def test_constant_response_rejected(self):
        recs = [
            _record(e, 0.01, m, sigma=2.0, date=f"d{i}")
            for i, (e, m) in enumerate([(0.1, 1000), (0.2, 2000), (0.3, 4000), (0.4, 8000), (0.25, 500)])
        ]
        with pytest.raises(ParameterError):
            fit_spread_vol(recs)

    def test_currency_rescaling(self):
        # measuring prices in cents leaves slopes and fit quality alone
        base = _noisy_records(p=(0.9, 0.08, 0.5))
        scaled = [
            DailyRecord(
                date=r.date, asset_id=r.asset_id, eta_hat=r.eta_hat,
                alpha=r.alpha * 100, sigma_hat=r.sigma_hat * 100,
                m_trades=r.m_trades, avg_spread=r.avg_spread * 100,
                frac_one_tick=r.frac_one_tick,
            )
            for r in base
        ]
        f0 = fit_spread_vol(base)
        f1 = fit_spread_vol(scaled)
        assert f1.p1 == pytest.approx(f0.p1, rel=1e-9)
        assert f1.p2 == pytest.approx(f0.p2, rel=1e-9)
        assert f1.p3 == pytest.approx(f0.p3 * 100, rel=1e-9)
        assert f1.r2 == pytest.approx(f0.r2, rel=1e-12)

    def test_flagged_days_dropped_by_default(self):
        clean = _exact_records()
        tainted = clean + [_record(0.8, 0.01, 5000, sigma=50.0, date="junk")]
        fit = fit_spread_vol(tainted)
        assert fit.n_days == len(clean)
        assert fit.p1 == pytest.approx(1.0, abs=1e-9)
        kept = fit_spread_vol(tainted, exclude_flagged=False)
        assert kept.n_days == len(clean) + 1
        assert abs(kept.p1 - 1.0) > 1e-6


class TestRegressionFit:
    def _fit(self, **over):
        kw = dict(
            p1=1.0, p2=0.1, p3=0.0,
            p1_ci=(0.9, 1.1), p2_ci=(0.05, 0.15), p3_ci=(-0.1, 0.1),
            r2=0.98, n_days=10,
        )
        kw.update(over)
        return RegressionFit(**kw)

    def test_row_matches_header(self):
        row = self._fit().row("BUND")
        assert len(row) == len(REGRESSION_CSV_HEADER) == 11
        assert row[0] == "BUND"
        assert row[1:4] == [1.0, 0.9, 1.1]
        assert row[10] == 0.98

    def test_estimate_must_sit_inside_interval(self):
        with pytest.raises(ParameterError):
            self._fit(p1_ci=(1.1, 1.2))

    def test_r2_bounds(self):
        with pytest.raises(ParameterError):
            self._fit(r2=1.0001)


class TestFitByAsset:
    def test_groups_by_asset_sorted(self):
        recs = [_record(0.2 + 0.02 * i, 0.01, 1000 + 500 * i, asset_id="B", date=f"b{i}") for i in range(5)]
        recs += [_record(0.15 + 0.03 * i, 0.5, 2000 + 700 * i, asset_id="A", date=f"a{i}") for i in range(5)]
        fits = fit_by_asset(recs)
        assert list(fits) == ["A", "B"]
        assert all(f.n_days == 5 for f in fits.values())

    def test_split_regimes_keys(self):
        recs = [_record(0.2 + 0.02 * i, 0.01, 1000 + 500 * i, asset_id="A", date=f"x{i}") for i in range(5)]
        recs += [_record(0.15 + 0.03 * i, 0.025, 2000 + 700 * i, asset_id="A", date=f"y{i}") for i in range(5)]
        assert list(fit_by_asset(recs, split_regimes=True)) == ["A@0.01", "A@0.025"]
        assert list(fit_by_asset(recs)) == ["A"]
