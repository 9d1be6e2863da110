"""Risk-neutral path simulators: multivariate GBM, the spot-measure LIBOR
market model and the Heston-Nandi GARCH recursion.

All simulators are pure functions of (spec, grid, n_paths, seed). Normals
are drawn in fixed-size path chunks from a single seeded generator, so
results are reproducible bit for bit and independent of any parallelism in
the callers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from . import kernels
from .core import PathBundle, TimeGrid
from .errors import ConfigError, NumericalError

#: Paths simulated per normals block; fixed so draw order never depends on
#: worker counts or memory pressure.
CHUNK_PATHS = 16384

#: Fraction of LMM paths that may be resampled before the run aborts.
LMM_RESAMPLE_LIMIT = 1e-3


@dataclass(frozen=True)
class GbmSpec:
    """Multivariate geometric Brownian motion under the risk-neutral measure."""

    s0: tuple
    rate: float
    vols: tuple
    corr: Optional[np.ndarray] = None

    def __post_init__(self):
        s0 = tuple(float(x) for x in np.atleast_1d(self.s0))
        vols = tuple(float(x) for x in np.atleast_1d(self.vols))
        if any(x <= 0.0 for x in s0):
            raise ConfigError("initial prices must be positive")
        if any(v < 0.0 for v in vols):
            raise ConfigError("volatilities must be nonnegative")
        if len(vols) != len(s0):
            raise ConfigError("vols must match the dimension of s0")
        corr = self.corr
        if corr is None:
            corr = np.eye(len(s0))
        corr = np.asarray(corr, dtype=float)
        if corr.shape != (len(s0), len(s0)):
            raise ConfigError("correlation matrix has the wrong shape")
        if not np.allclose(corr, corr.T, atol=1e-12):
            raise ConfigError("correlation matrix must be symmetric")
        if not np.allclose(np.diag(corr), 1.0, atol=1e-12):
            raise ConfigError("correlation matrix must have a unit diagonal")
        corr.setflags(write=False)
        object.__setattr__(self, "s0", s0)
        object.__setattr__(self, "vols", vols)
        object.__setattr__(self, "corr", corr)

    @property
    def dim(self) -> int:
        return len(self.s0)


def _corr_factor(corr: np.ndarray) -> np.ndarray:
    """Cholesky factor, or the eigenvalue-clipped square root for PSD input."""
    try:
        return np.linalg.cholesky(corr)
    except np.linalg.LinAlgError:
        eigvals, eigvecs = np.linalg.eigh(corr)
        if eigvals.min() < -1e-8:
            raise ConfigError(
                f"correlation matrix is not positive semidefinite "
                f"(min eigenvalue {eigvals.min():.3e})"
            ) from None
        return eigvecs * np.sqrt(np.clip(eigvals, 0.0, None))


def simulate_gbm(spec: GbmSpec, grid: TimeGrid, n_paths: int, seed) -> PathBundle:
    """Exact log-Euler scheme; the discounted price is a martingale."""
    d = spec.dim
    vols = np.asarray(spec.vols)
    drift = (spec.rate - 0.5 * vols**2) * grid.dt_years
    shock = (np.diag(vols) @ _corr_factor(spec.corr)) * math.sqrt(grid.dt_years)
    log_s0 = np.log(np.asarray(spec.s0))
    rng = np.random.default_rng(seed)
    blocks = []
    for start in range(0, n_paths, CHUNK_PATHS):
        m = min(CHUNK_PATHS, n_paths - start)
        normals = rng.standard_normal((m, grid.total_steps, d))
        blocks.append(
            kernels.gbm_paths(log_s0, drift, shock, normals, grid.steps_per_exercise)
        )
    values = np.concatenate(blocks, axis=0) if len(blocks) > 1 else blocks[0]
    factor = math.exp(-spec.rate * grid.exercise_period_years)
    accrual = np.full((n_paths, grid.num_exercise_dates), factor)
    return PathBundle(values=values, accrual=accrual)


@dataclass(frozen=True)
class LmmSpec:
    """Spot-measure LIBOR market model on a quarterly tenor strip.

    ``initial_forwards`` lists the already-fixed front rate L_0 followed by
    the live forward rates L_1..L_m (L_i fixes at i * accrual_length years).
    ``vol_matrix`` holds the piecewise-constant volatility vectors by time
    to fixing: row k applies when the time to fixing lies in the k-th
    accrual period.
    """

    initial_forwards: tuple
    vol_matrix: np.ndarray
    accrual_length: float = 0.25
    dt: float = 1.0 / 360.0

    def __post_init__(self):
        fwd = tuple(float(x) for x in np.atleast_1d(self.initial_forwards))
        vol = np.asarray(self.vol_matrix, dtype=float)
        if len(fwd) < 2:
            raise ConfigError("need the spot rate plus at least one forward rate")
        if not self.accrual_length > 0.0 or not self.dt > 0.0:
            raise ConfigError("accrual_length and dt must be positive")
        if any(1.0 + self.accrual_length * f <= 0.0 for f in fwd):
            raise ConfigError("rates must keep 1 + delta * L positive")
        if vol.ndim != 2 or not np.isfinite(vol).all():
            raise ConfigError("vol_matrix must be a finite 2-d array")
        vol.setflags(write=False)
        object.__setattr__(self, "initial_forwards", fwd)
        object.__setattr__(self, "vol_matrix", vol)

    @property
    def n_rates(self) -> int:
        return len(self.initial_forwards)

    @property
    def n_factors(self) -> int:
        return self.vol_matrix.shape[1]


def _lmm_step_tables(spec: LmmSpec, grid: TimeGrid):
    """Per-step volatility rows, alive flags and front-rate indices.

    These depend on time only, not on the path, so they are tabulated once.
    """
    steps = grid.total_steps
    n_rates = spec.n_rates
    delta = spec.accrual_length
    sig = np.zeros((steps, n_rates, spec.n_factors))
    alive = np.zeros((steps, n_rates), dtype=np.uint8)
    front = np.zeros(steps, dtype=np.int64)
    n_rows = spec.vol_matrix.shape[0]
    for s in range(steps):
        tau = s * spec.dt
        front[s] = min(n_rates - 1, int(math.floor(tau / delta + 1e-9)))
        for i in range(1, n_rates):
            to_fixing = delta * i - tau
            if to_fixing > 1e-12:
                row = min(n_rows, max(1, int(math.ceil(to_fixing / delta - 1e-9))))
                sig[s, i] = spec.vol_matrix[row - 1]
                alive[s, i] = 1
    return sig, alive, front


def simulate_lmm(spec: LmmSpec, grid: TimeGrid, n_paths: int, seed) -> PathBundle:
    """Euler scheme for all live forwards with shared factor shocks.

    Paths producing non-finite levels are resampled from spawned sub-seeds;
    the run aborts when more than LMM_RESAMPLE_LIMIT of the paths needed it.
    """
    if not math.isclose(grid.dt_years, spec.dt, rel_tol=1e-9):
        raise ConfigError(
            f"grid fine step {grid.dt_years} does not match the model step {spec.dt}"
        )
    sig, alive, front = _lmm_step_tables(spec, grid)
    l0 = np.asarray(spec.initial_forwards)
    seed_seq = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    main_seq, resample_seq = seed_seq.spawn(2)
    rng = np.random.default_rng(main_seq)
    values_parts = []
    accrual_parts = []
    ok_parts = []
    for start in range(0, n_paths, CHUNK_PATHS):
        m = min(CHUNK_PATHS, n_paths - start)
        normals = rng.standard_normal((m, grid.total_steps, spec.n_factors))
        values, accrual, ok = kernels.lmm_paths(
            l0, sig, alive, front, spec.accrual_length, spec.dt,
            normals, grid.steps_per_exercise,
        )
        values_parts.append(values)
        accrual_parts.append(accrual)
        ok_parts.append(ok)
    values = np.concatenate(values_parts) if len(values_parts) > 1 else values_parts[0]
    accrual = np.concatenate(accrual_parts) if len(accrual_parts) > 1 else accrual_parts[0]
    ok = np.concatenate(ok_parts) if len(ok_parts) > 1 else ok_parts[0]

    n_resampled = int((ok == 0).sum())
    rounds = 0
    resample_rng = np.random.default_rng(resample_seq)
    while (ok == 0).any():
        rounds += 1
        if rounds > 8 or n_resampled > max(1, LMM_RESAMPLE_LIMIT * n_paths):
            raise NumericalError(
                f"{n_resampled} of {n_paths} LMM paths blew up; "
                "volatility or step size looks inconsistent"
            )
        bad = np.flatnonzero(ok == 0)
        normals = resample_rng.standard_normal((bad.size, grid.total_steps, spec.n_factors))
        new_values, new_accrual, new_ok = kernels.lmm_paths(
            l0, sig, alive, front, spec.accrual_length, spec.dt,
            normals, grid.steps_per_exercise,
        )
        values[bad] = new_values
        accrual[bad] = new_accrual
        ok[bad] = new_ok
        n_resampled += int((new_ok == 0).sum())
    return PathBundle(values=values, accrual=accrual)


@dataclass(frozen=True)
class HnSpec:
    """Heston-Nandi GARCH(1,1) daily return dynamics.

    ``sigma0_sq`` is the variance used for the first day's return; when
    omitted, the long-run daily variance of the spec is used.
    """

    lam: float
    omega: float
    alpha: float
    beta: float
    gamma: float
    r_daily: float
    s0: float
    sigma0_sq: Optional[float] = None

    def __post_init__(self):
        if self.omega < 0.0 or self.alpha < 0.0 or self.beta < 0.0:
            raise ConfigError("omega, alpha and beta must be nonnegative")
        if self.s0 <= 0.0:
            raise ConfigError("initial price must be positive")
        if self.sigma0_sq is not None and self.sigma0_sq < 0.0:
            raise ConfigError("initial variance must be nonnegative")

    @property
    def persistence(self) -> float:
        return self.beta + self.alpha * self.gamma**2


def risk_neutralize_hn(spec: HnSpec) -> HnSpec:
    """Swap to the risk-neutral dynamics: lam -> -1/2, gamma -> gamma + lam + 1/2."""
    return replace(spec, lam=-0.5, gamma=spec.gamma + spec.lam + 0.5)


def hn_long_run_vol(spec: HnSpec, day_count: int = 252) -> Tuple[float, float]:
    """Long-run daily variance (omega + alpha) / (1 - beta - alpha gamma^2)
    and the corresponding annualized volatility."""
    denom = 1.0 - spec.persistence
    if denom <= 0.0:
        raise ConfigError(
            f"nonstationary parameters: beta + alpha * gamma^2 = {spec.persistence:.6f}"
        )
    daily_variance = (spec.omega + spec.alpha) / denom
    return daily_variance, math.sqrt(day_count * daily_variance)


def simulate_hn(spec: HnSpec, grid: TimeGrid, n_paths: int, seed) -> PathBundle:
    """Daily recursion for (log price, variance); one fine step per day."""
    v0 = spec.sigma0_sq
    if v0 is None:
        v0, _ = hn_long_run_vol(spec, grid.day_count)
    rng = np.random.default_rng(seed)
    blocks = []
    for start in range(0, n_paths, CHUNK_PATHS):
        m = min(CHUNK_PATHS, n_paths - start)
        normals = rng.standard_normal((m, grid.total_steps))
        blocks.append(
            kernels.hn_paths(
                math.log(spec.s0), spec.r_daily, spec.lam, spec.gamma,
                spec.omega, spec.alpha, spec.beta, v0,
                normals, grid.steps_per_exercise,
            )
        )
    values = np.concatenate(blocks) if len(blocks) > 1 else blocks[0]
    factor = math.exp(-spec.r_daily * grid.steps_per_exercise)
    accrual = np.full((n_paths, grid.num_exercise_dates), factor)
    return PathBundle(values=values, accrual=accrual)


def simulate(model, grid: TimeGrid, n_paths: int, seed) -> PathBundle:
    """Dispatch on the model family."""
    if isinstance(model, GbmSpec):
        return simulate_gbm(model, grid, n_paths, seed)
    if isinstance(model, LmmSpec):
        return simulate_lmm(model, grid, n_paths, seed)
    if isinstance(model, HnSpec):
        return simulate_hn(model, grid, n_paths, seed)
    raise ConfigError(f"unknown model type {type(model).__name__}")
