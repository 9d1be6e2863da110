"""Parameter estimation from historical price panels.

Covers the constant-maturity preprocessing of futures quotes, the PCA
volatility structure for the LIBOR market model, trailing-window covariance
estimation for bivariate GBM and Gaussian maximum likelihood for the
Heston-Nandi recursion.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from datetime import date as _date
from datetime import timedelta
from typing import List, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from . import kernels
from .errors import ConfigError, DataError, NumericalError
from .models import HnSpec

DAYS_PER_YEAR = 365.25


@dataclass(frozen=True)
class PricePanel:
    """Calendar-dated panel of instrument levels (one column per label)."""

    dates: tuple
    series: np.ndarray
    labels: tuple

    def __post_init__(self):
        series = np.asarray(self.series, dtype=float)
        dates = tuple(self.dates)
        labels = tuple(str(x) for x in self.labels)
        if series.ndim != 2 or series.shape != (len(dates), len(labels)):
            raise DataError("panel series must be (n_dates, n_labels)")
        if any(b <= a for a, b in zip(dates, dates[1:])):
            raise DataError("panel dates must be strictly increasing")
        if not np.isfinite(series).all():
            raise DataError("panel contains missing or non-finite cells")
        series.setflags(write=False)
        object.__setattr__(self, "dates", dates)
        object.__setattr__(self, "series", series)
        object.__setattr__(self, "labels", labels)

    def column(self, label: str) -> np.ndarray:
        try:
            idx = self.labels.index(label)
        except ValueError:
            raise DataError(f"panel has no column {label!r}") from None
        return self.series[:, idx]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["date", *self.labels])
            for d, row in zip(self.dates, self.series):
                writer.writerow([d.isoformat(), *[repr(float(x)) for x in row]])

    @classmethod
    def from_csv(cls, path) -> "PricePanel":
        try:
            fh = open(path, newline="")
        except OSError as exc:
            raise DataError(f"cannot read panel {path}: {exc}") from None
        with fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if not header or header[0] != "date" or len(header) < 2:
                raise DataError(f"{path}: expected header 'date,label1,...'")
            labels = tuple(header[1:])
            dates: List[_date] = []
            rows: List[List[float]] = []
            for lineno, row in enumerate(reader, start=2):
                if len(row) != len(header):
                    raise DataError(f"{path}:{lineno}: expected {len(header)} fields")
                try:
                    dates.append(_date.fromisoformat(row[0]))
                    rows.append([float(x) for x in row[1:]])
                except ValueError as exc:
                    raise DataError(f"{path}:{lineno}: {exc}") from None
        return cls(dates=tuple(dates), series=np.array(rows), labels=labels)


def futures_price_to_rate(price: np.ndarray) -> np.ndarray:
    """Eurodollar quote convention: rate = (100 - price) / 100."""
    return (100.0 - np.asarray(price, dtype=float)) / 100.0


def interpolate_constant_maturity(
    panel: PricePanel,
    maturities: Sequence[_date],
    n_targets: int = 4,
    target_spacing_years: float = 0.25,
) -> PricePanel:
    """Constant-time-to-maturity rate series from dated futures quotes.

    The quote panel is first completed to every calendar day by linear
    interpolation between adjacent trading days per contract, quotes are
    converted to forward rates, and for each day the rate at each constant
    maturity is linearly interpolated between the two contracts bracketing
    it by time to maturity.
    """
    if len(maturities) != len(panel.labels):
        raise ConfigError("need one maturity date per panel column")
    if len(panel.labels) < n_targets + 1:
        raise DataError(
            f"need at least {n_targets + 1} contracts to bracket "
            f"{n_targets} constant maturities"
        )
    first, last = panel.dates[0], panel.dates[-1]
    all_days = [first + timedelta(days=k) for k in range((last - first).days + 1)]
    day_ord = np.array([d.toordinal() for d in all_days], dtype=float)
    quote_ord = np.array([d.toordinal() for d in panel.dates], dtype=float)
    filled = np.empty((len(all_days), len(panel.labels)))
    for j in range(len(panel.labels)):
        filled[:, j] = np.interp(day_ord, quote_ord, panel.series[:, j])
    rates = futures_price_to_rate(filled)
    mat_ord = np.array([m.toordinal() for m in maturities], dtype=float)
    out = np.empty((len(all_days), n_targets))
    for di, d in enumerate(day_ord):
        ttm = (mat_ord - d) / DAYS_PER_YEAR
        order = np.argsort(ttm)
        ttm_sorted = ttm[order]
        row = rates[di][order]
        for k in range(1, n_targets + 1):
            target = k * target_spacing_years
            hi = int(np.searchsorted(ttm_sorted, target))
            if hi == 0 or hi == len(ttm_sorted):
                raise DataError(
                    f"no contracts bracket the {target:.2f}y maturity on "
                    f"{all_days[di].isoformat()}"
                )
            lo = hi - 1
            span = ttm_sorted[hi] - ttm_sorted[lo]
            w = 0.0 if span == 0.0 else (target - ttm_sorted[lo]) / span
            out[di, k - 1] = (1.0 - w) * row[lo] + w * row[hi]
    labels = tuple(f"T{k}" for k in range(1, n_targets + 1))
    return PricePanel(dates=tuple(all_days), series=out, labels=labels)


@dataclass(frozen=True)
class PcaVolStructure:
    """Factor volatility structure lambda_j(T_i) with PCA diagnostics.

    ``lam`` has one row per accrual period and one column per factor;
    ``loadings`` are the orthonormal eigenvectors, ``factor_variances`` the
    descending eigenvalues of the daily log-change covariance and
    ``total_vols`` the annualized per-series volatilities used to scale the
    rows.
    """

    lam: np.ndarray
    factor_variances: np.ndarray
    loadings: np.ndarray
    total_vols: np.ndarray

    def __post_init__(self):
        for name in ("lam", "factor_variances", "loadings", "total_vols"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if np.any(np.diff(self.factor_variances) > 1e-15):
            raise NumericalError("factor variances must be sorted descending")

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            for row in self.lam:
                writer.writerow([repr(float(x)) for x in row])


def load_vol_matrix_csv(path) -> np.ndarray:
    """Plain numeric CSV with one row per accrual period."""
    rows = []
    with open(path, newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh), start=1):
            if not row:
                continue
            try:
                rows.append([float(x) for x in row])
            except ValueError as exc:
                raise DataError(f"{path}:{lineno}: {exc}") from None
    if not rows or any(len(r) != len(rows[0]) for r in rows):
        raise DataError(f"{path}: expected a rectangular numeric matrix")
    return np.array(rows)


def pca_vol_structure(
    panel: PricePanel, n_factors: int = 3, day_count: int = 252
) -> PcaVolStructure:
    """PCA of daily log-rate changes assembled into volatility vectors.

    Keeps the top ``n_factors`` eigenpairs of the sample covariance, fixes
    each eigenvector's sign so its largest-magnitude entry is positive and
    scales row i to the annualized total volatility of series i:

        lambda[i, j] = theta_i * s_j * a[i, j] / sqrt(sum_k s_k^2 a[i, k]^2)
    """
    series = panel.series
    n_series = series.shape[1]
    if series.shape[0] < 31:
        raise DataError("need at least 31 observations (30 daily changes)")
    if (series <= 0.0).any():
        raise DataError("rates must be positive to take log changes")
    changes = np.diff(np.log(series), axis=0)
    cov = np.cov(changes, rowvar=False, ddof=1)
    eigvals, eigvecs = np.linalg.eigh(cov)
    order = np.argsort(eigvals)[::-1][:n_factors]
    variances = eigvals[order]
    loadings = eigvecs[:, order]
    rank_floor = 1e-10 * max(float(variances[0]), 0.0)
    n_positive = int((variances > rank_floor).sum())
    if n_positive < n_factors:
        warnings.warn(
            f"covariance has rank {n_positive} < {n_factors}; "
            "missing factors are zero-filled",
            stacklevel=2,
        )
        variances = np.where(variances > rank_floor, variances, 0.0)
        loadings = loadings.copy()
        loadings[:, n_positive:] = 0.0
    for j in range(loadings.shape[1]):
        if loadings[:, j].any() and loadings[np.argmax(np.abs(loadings[:, j])), j] < 0.0:
            loadings[:, j] = -loadings[:, j]
    total_vols = np.sqrt(day_count * changes.var(axis=0, ddof=1))
    s = np.sqrt(variances)
    lam = np.zeros((n_series, n_factors))
    for i in range(n_series):
        recon = math.sqrt(float(np.sum(variances * loadings[i] ** 2)))
        if recon > 0.0:
            lam[i] = total_vols[i] * s * loadings[i] / recon
    return PcaVolStructure(
        lam=lam,
        factor_variances=variances,
        loadings=loadings,
        total_vols=total_vols,
    )


def estimate_gbm_cov(
    series_a: np.ndarray, series_b: np.ndarray, window: int = 50,
    day_count: int = 252,
) -> Tuple[float, float, float]:
    """Correlation and annualized volatilities from trailing log-returns.

    Uses the last ``window`` price observations (window - 1 returns).
    Returns (rho, sigma_a, sigma_b); symmetric in the two inputs.
    """
    a = np.asarray(series_a, dtype=float)
    b = np.asarray(series_b, dtype=float)
    if window < 2:
        raise ConfigError("window must be >= 2")
    if a.shape != b.shape or a.ndim != 1 or a.shape[0] < window:
        raise DataError(f"need two equal series with at least {window} observations")
    a = a[-window:]
    b = b[-window:]
    if (a <= 0.0).any() or (b <= 0.0).any():
        raise DataError("prices must be positive")
    ra = np.diff(np.log(a))
    rb = np.diff(np.log(b))
    cov = np.cov(np.column_stack([ra, rb]), rowvar=False, ddof=1)
    sigma_a = math.sqrt(day_count * cov[0, 0])
    sigma_b = math.sqrt(day_count * cov[1, 1])
    denom = math.sqrt(cov[0, 0] * cov[1, 1])
    rho = 1.0 if denom == 0.0 else float(np.clip(cov[0, 1] / denom, -1.0, 1.0))
    return rho, sigma_a, sigma_b


@dataclass(frozen=True)
class HnFit:
    """Fitted Heston-Nandi parameters with the achieved log-likelihood."""

    spec: HnSpec
    loglik: float
    start_loglik: float
    n_obs: int
    converged: bool


def _hn_transform(u: np.ndarray, fix_gamma_zero: bool) -> Tuple[float, float, float, float, float]:
    lam = u[0]
    omega = math.exp(u[1])
    alpha = math.exp(u[2])
    beta = 1.0 / (1.0 + math.exp(-u[3]))
    gamma = 0.0 if fix_gamma_zero else u[4]
    return lam, omega, alpha, beta, gamma


def fit_hn_mle(
    returns: np.ndarray,
    r_daily: float,
    fix_gamma_zero: bool = True,
    s0: float = 1.0,
    restarts: int = 5,
    seed: int = 0,
    max_iter: int = 4000,
) -> HnFit:
    """Maximize the Gaussian conditional likelihood of the GARCH recursion.

    A derivative-free simplex search runs from ``restarts`` seeded starting
    points on log/logistic-transformed parameters, which keeps omega and
    alpha positive and beta inside (0, 1). The first day's variance is the
    sample variance of the returns. Raises NumericalError carrying the best
    point when no restart converges or the input is degenerate.
    """
    returns = np.ascontiguousarray(returns, dtype=float)
    if returns.ndim != 1 or returns.shape[0] < 30:
        raise DataError("need at least 30 return observations")
    if not np.isfinite(returns).all():
        raise DataError("returns must be finite")
    sample_var = float(returns.var(ddof=1))
    if sample_var <= 0.0:
        raise NumericalError("returns have zero variance; parameters are unidentified")

    def negloglik(u: np.ndarray) -> float:
        lam, omega, alpha, beta, gamma = _hn_transform(u, fix_gamma_zero)
        if beta + alpha * gamma * gamma >= 1.0:
            return 1e300
        return -kernels.hn_loglik(
            returns, r_daily, lam, gamma, omega, alpha, beta, sample_var
        )

    rng = np.random.default_rng(seed)
    n_params = 4 if fix_gamma_zero else 5
    best = None
    best_start = None
    any_converged = False
    for _ in range(max(1, restarts)):
        u0 = np.empty(n_params)
        u0[0] = rng.normal(0.0, 2.0)
        u0[1] = math.log(sample_var) + rng.uniform(-3.0, -0.7)
        u0[2] = math.log(sample_var) + rng.uniform(-2.3, 0.0)
        u0[3] = rng.normal(-1.0, 1.0)
        if not fix_gamma_zero:
            u0[4] = rng.normal(0.0, 1.0)
        result = minimize(
            negloglik, u0, method="Nelder-Mead",
            options={"maxiter": max_iter, "xatol": 1e-8, "fatol": 1e-10},
        )
        any_converged = any_converged or bool(result.success)
        if best is None or result.fun < best.fun:
            best = result
            best_start = float(negloglik(u0))
    lam, omega, alpha, beta, gamma = _hn_transform(best.x, fix_gamma_zero)
    spec = HnSpec(
        lam=lam, omega=omega, alpha=alpha, beta=beta, gamma=gamma,
        r_daily=r_daily, s0=s0, sigma0_sq=sample_var,
    )
    fit = HnFit(
        spec=spec,
        loglik=-float(best.fun),
        start_loglik=-best_start,
        n_obs=returns.shape[0],
        converged=any_converged,
    )
    if not any_converged:
        raise NumericalError(
            "simplex search did not converge within the iteration budget",
            best=fit,
        )
    return fit
