import math
from datetime import date, timedelta

import numpy as np
import pytest

from snellmc import (
    DataError,
    GbmSpec,
    LmmSpec,
    NumericalError,
    TimeGrid,
    simulate_gbm,
    simulate_lmm,
)
from snellmc.calibration import (
    PricePanel,
    estimate_gbm_cov,
    fit_hn_mle,
    interpolate_constant_maturity,
    pca_vol_structure,
)
from snellmc.kernels import hn_loglik

from reference_data import LMM_VOL_MATRIX


def daily_dates(n, start=date(2011, 1, 3)):
    return tuple(start + timedelta(days=k) for k in range(n))


def make_panel(series, labels=None, start=date(2011, 1, 3)):
    series = np.asarray(series, dtype=float)
    labels = labels or [f"c{k}" for k in range(series.shape[1])]
    return PricePanel(dates=daily_dates(series.shape[0], start), series=series, labels=labels)


def chained_lmm_panel(n_segments, seed, vol_matrix=LMM_VOL_MATRIX):
    """Constant-maturity rate panel built by rolling quarter-long segments.

    Each segment restarts the tenor clock at the previous segment's final
    rates, which is exactly what a constant-time-to-maturity series does
    when it rolls to the next contract; within a segment every forward
    keeps the volatility row of its own accrual period.
    """
    seq = np.random.SeedSequence(seed)
    grid = TimeGrid(num_exercise_dates=62, steps_per_exercise=1, dt_years=1 / 252)
    forwards = (0.005, 0.006, 0.007, 0.008, 0.009)
    chunks = []
    for child in seq.spawn(n_segments):
        spec = LmmSpec(initial_forwards=forwards, vol_matrix=vol_matrix, dt=1 / 252)
        paths = simulate_lmm(spec, grid, 1, seed=child)
        # the next segment re-emits this segment's final row as its start
        chunks.append(paths.values[0, :-1, 1:5])
        forwards = tuple(paths.values[0, -1, :])
    chunks.append(np.array(forwards[1:5])[None, :])
    rates = np.vstack(chunks)
    return make_panel(rates, labels=["T1", "T2", "T3", "T4"])


def canonical_form(lam):
    """The PCA-identifiable representative of lam @ lam.T.

    Simulated paths only determine the covariance lam @ lam.T (the factor
    shocks are isotropic), so recalibration can at best recover the
    eigenvector-scaled square root with the same column sign convention.
    """
    cov = lam @ lam.T
    w, v = np.linalg.eigh(cov)
    order = np.argsort(w)[::-1][: lam.shape[1]]
    s = np.sqrt(np.maximum(w[order], 0.0))
    vecs = v[:, order]
    for j in range(vecs.shape[1]):
        if vecs[np.argmax(np.abs(vecs[:, j])), j] < 0.0:
            vecs[:, j] = -vecs[:, j]
    return vecs * s


class TestConstantMaturityInterpolation:
    def quote_panel(self, rates_by_contract, n_days=10):
        # futures prices quote as 100 (1 - rate)
        prices = 100.0 * (1.0 - np.asarray(rates_by_contract))
        series = np.tile(prices, (n_days, 1))
        return make_panel(series)

    def maturities(self, panel, offsets_days):
        base = panel.dates[0]
        return [base + timedelta(days=int(d)) for d in offsets_days]

    def test_exact_knot_passes_through(self):
        panel = self.quote_panel([0.010, 0.020, 0.030, 0.040, 0.050], n_days=1)
        # pick a target spacing whose first maturity lands exactly on the
        # second contract's expiry (91 calendar days)
        spacing = 91 / 365.25
        offsets = [10, 91, 200, 300, 400]
        out = interpolate_constant_maturity(
            panel, self.maturities(panel, offsets), target_spacing_years=spacing
        )
        assert out.column("T1")[0] == pytest.approx(0.020, abs=1e-12)

    def test_flat_series_interpolates_the_midpoint(self):
        panel = self.quote_panel([0.010, 0.010, 0.030, 0.030, 0.030], n_days=1)
        target_days = 0.25 * 365.25
        lo_off, hi_off = 51, 131
        offsets = [5, lo_off, hi_off, 300, 400]
        out = interpolate_constant_maturity(panel, self.maturities(panel, offsets))
        w = (target_days - lo_off) / (hi_off - lo_off)
        assert out.column("T1")[0] == pytest.approx(0.010 + w * 0.020, abs=1e-9)

    def test_interpolation_stays_inside_the_bracket(self):
        rng = np.random.default_rng(6)
        for _ in range(20):
            rates = np.sort(rng.uniform(0.002, 0.06, 5))
            panel = self.quote_panel(rates, n_days=1)
            offsets = sorted(rng.choice(np.arange(20, 480), 5, replace=False))
            try:
                out = interpolate_constant_maturity(panel, self.maturities(panel, offsets))
            except DataError:
                continue
            for k in range(1, 5):
                v = out.column(f"T{k}")[0]
                assert rates.min() - 1e-12 <= v <= rates.max() + 1e-12

    def test_missing_bracket_names_the_target(self):
        panel = self.quote_panel([0.01, 0.02, 0.03, 0.04, 0.05], n_days=1)
        offsets = [400, 500, 600, 700, 800]  # nothing shorter than 1y
        with pytest.raises(DataError, match="0.25y"):
            interpolate_constant_maturity(panel, self.maturities(panel, offsets))

    def test_non_trading_days_are_filled(self):
        prices = np.array([[99.0] * 5, [98.0] * 5])
        panel = PricePanel(
            dates=(date(2012, 1, 2), date(2012, 1, 6)),
            series=prices,
            labels=["a", "b", "c", "d", "e"],
        )
        offsets = [30, 120, 210, 300, 390]
        mats = [date(2012, 1, 2) + timedelta(days=d) for d in offsets]
        out = interpolate_constant_maturity(panel, mats)
        assert len(out.dates) == 5
        # linear fill between the two quotes
        assert out.column("T1")[2] == pytest.approx(
            0.5 * (out.column("T1")[0] + out.column("T1")[4]), abs=1e-9
        )


class TestPcaVolStructure:
    def test_rank_one_panel_keeps_a_single_column(self):
        rng = np.random.default_rng(3)
        shocks = rng.normal(0, 0.01, 200)
        base = np.exp(np.cumsum(np.tile(shocks[:, None], (1, 4)) * [1.0, 0.9, 0.8, 0.7], axis=0))
        panel = make_panel(0.01 * base)
        with pytest.warns(UserWarning, match="rank"):
            structure = pca_vol_structure(panel)
        assert structure.factor_variances[0] > 0.0
        np.testing.assert_allclose(structure.factor_variances[1:], 0.0, atol=1e-12)
        assert (structure.lam[:, 1:] == 0.0).all()
        assert (structure.lam[:, 0] != 0.0).all()

    def test_shape_and_orthonormal_loadings(self):
        panel = chained_lmm_panel(4, seed=10)
        structure = pca_vol_structure(panel)
        assert structure.lam.shape == (4, 3)
        gram = structure.loadings.T @ structure.loadings
        np.testing.assert_allclose(gram, np.eye(3), atol=1e-8)
        assert (np.diff(structure.factor_variances) <= 1e-15).all()

    def test_row_consistency_identity(self):
        panel = chained_lmm_panel(4, seed=12)
        s = pca_vol_structure(panel)
        for i in range(4):
            denom = math.sqrt(float(np.sum(s.factor_variances * s.loadings[i] ** 2)))
            for j in range(3):
                expected = (
                    s.total_vols[i]
                    * math.sqrt(s.factor_variances[j])
                    * s.loadings[i, j]
                    / denom
                )
                assert s.lam[i, j] == pytest.approx(expected, abs=1e-10)

    def test_round_trip_recovers_the_canonical_matrix(self):
        panel = chained_lmm_panel(120, seed=20240601)
        structure = pca_vol_structure(panel)
        target = canonical_form(LMM_VOL_MATRIX)
        lam = structure.lam.copy()
        for j in range(3):
            if np.dot(lam[:, j], target[:, j]) < 0.0:
                lam[:, j] = -lam[:, j]
        rel = np.abs(lam - target) / np.abs(target)
        assert rel.max() < 0.15

    def test_needs_enough_observations(self):
        panel = make_panel(np.full((10, 4), 0.01))
        with pytest.raises(DataError):
            pca_vol_structure(panel)


class TestGbmCovEstimation:
    def test_identical_series(self):
        rng = np.random.default_rng(8)
        prices = 70 * np.exp(np.cumsum(rng.normal(0, 0.01, 60)))
        rho, sa, sb = estimate_gbm_cov(prices, prices, window=50)
        assert rho == pytest.approx(1.0)
        assert sa == pytest.approx(sb)

    def test_sign_flipped_returns_give_minus_one(self):
        rng = np.random.default_rng(9)
        r = rng.normal(0, 0.01, 60)
        a = 70 * np.exp(np.cumsum(r))
        b = 70 * np.exp(np.cumsum(-r))
        rho, _, _ = estimate_gbm_cov(a, b, window=50)
        assert rho == pytest.approx(-1.0)

    def test_round_trip_on_simulated_prices(self):
        true_rho, s1, s2 = 0.920, 0.133, 0.119
        corr = np.array([[1.0, true_rho], [true_rho, 1.0]])
        spec = GbmSpec(s0=(68.05, 69.72), rate=0.015, vols=(s1, s2), corr=corr)
        grid = TimeGrid(num_exercise_dates=50, dt_years=1 / 252)
        paths = simulate_gbm(spec, grid, 1, seed=33)
        a, b = paths.values[0, :, 0], paths.values[0, :, 1]
        rho, sa, sb = estimate_gbm_cov(a, b, window=50)
        n_ret = 49
        se_sigma1 = s1 / math.sqrt(2 * (n_ret - 1))
        se_sigma2 = s2 / math.sqrt(2 * (n_ret - 1))
        se_rho = (1 - true_rho**2) / math.sqrt(n_ret - 1)
        assert abs(sa - s1) <= 3 * se_sigma1
        assert abs(sb - s2) <= 3 * se_sigma2
        assert abs(rho - true_rho) <= 3 * se_rho

    def test_symmetry(self):
        rng = np.random.default_rng(10)
        a = 50 * np.exp(np.cumsum(rng.normal(0, 0.01, 55)))
        b = 60 * np.exp(np.cumsum(rng.normal(0, 0.02, 55)))
        rho_ab, sa, sb = estimate_gbm_cov(a, b, window=50)
        rho_ba, sb2, sa2 = estimate_gbm_cov(b, a, window=50)
        assert rho_ab == pytest.approx(rho_ba)
        assert sa == pytest.approx(sa2)
        assert sb == pytest.approx(sb2)

    def test_rejects_nonpositive_prices(self):
        a = np.linspace(1.0, -0.5, 55)
        with pytest.raises(DataError):
            estimate_gbm_cov(a, np.abs(a) + 1.0, window=50)


class TestHnMle:
    def simulate_returns(self, n, seed, lam=7.28, omega=2.738e-5, alpha=5.238e-5, beta=0.086):
        rng = np.random.default_rng(seed)
        r_daily = 0.015 / 252
        v = (omega + alpha) / (1 - beta)
        eps = rng.standard_normal(n)
        out = np.empty(n)
        for t in range(n):
            sig = math.sqrt(v)
            out[t] = r_daily + lam * v + sig * eps[t]
            v = omega + beta * v + alpha * eps[t] ** 2
        return out, r_daily

    def test_likelihood_not_worse_than_start(self):
        returns, r_daily = self.simulate_returns(3000, seed=44)
        fit = fit_hn_mle(returns, r_daily, restarts=3, seed=1)
        assert fit.loglik >= fit.start_loglik

    def test_parameters_respect_constraints(self):
        returns, r_daily = self.simulate_returns(3000, seed=45)
        fit = fit_hn_mle(returns, r_daily, restarts=3, seed=2)
        spec = fit.spec
        assert spec.omega > 0 and spec.alpha > 0
        assert 0.0 < spec.beta < 1.0
        assert spec.gamma == 0.0
        assert spec.persistence < 1.0

    def test_fitted_point_beats_perturbations(self):
        returns, r_daily = self.simulate_returns(4000, seed=46)
        fit = fit_hn_mle(returns, r_daily, restarts=3, seed=3)
        spec = fit.spec
        v0 = float(returns.var(ddof=1))
        base = hn_loglik(returns, r_daily, spec.lam, 0.0, spec.omega, spec.alpha, spec.beta, v0)
        for bump in (1.2, 0.8):
            worse = hn_loglik(
                returns, r_daily, spec.lam, 0.0, spec.omega * bump, spec.alpha, spec.beta, v0
            )
            assert base >= worse - 1e-6

    def test_constant_returns_raise_instead_of_fabricating(self):
        with pytest.raises(NumericalError):
            fit_hn_mle(np.full(100, 1e-4), 0.0)

    def test_too_few_observations(self):
        with pytest.raises(DataError):
            fit_hn_mle(np.ones(10) * 1e-4, 0.0)
