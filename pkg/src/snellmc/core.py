"""Time grids, path storage, payoff evaluation and discounting.

These types are shared by the simulators, the regression machinery and the
pricing engine. All of them are immutable after construction; the numpy
arrays they hold are marked read-only so they can be shared freely across
worker threads.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError, DataError

PAYOFF_KINDS = ("vanilla_put", "vanilla_call", "basket_put", "dual_strike_put", "custom")


@dataclass(frozen=True)
class TimeGrid:
    """Exercise-date grid with optional fine simulation substeps.

    The option is exercisable at dates ``0..num_exercise_dates``; between two
    consecutive exercise dates the simulators take ``steps_per_exercise``
    fine steps of length ``dt_years``. Payoffs are evaluated on exercise
    dates only.
    """

    num_exercise_dates: int
    steps_per_exercise: int = 1
    dt_years: float = 1.0 / 252.0
    day_count: int = 252

    def __post_init__(self):
        if self.num_exercise_dates < 1:
            raise ConfigError("num_exercise_dates must be >= 1")
        if self.steps_per_exercise < 1:
            raise ConfigError("steps_per_exercise must be >= 1")
        if not self.dt_years > 0.0:
            raise ConfigError("dt_years must be positive")
        if self.day_count < 1:
            raise ConfigError("day_count must be >= 1")

    @property
    def total_steps(self) -> int:
        return self.num_exercise_dates * self.steps_per_exercise

    @property
    def exercise_period_years(self) -> float:
        return self.steps_per_exercise * self.dt_years

    @property
    def maturity_years(self) -> float:
        return self.total_steps * self.dt_years

    def exercise_times(self) -> np.ndarray:
        """Times in years of dates 0..T."""
        return np.arange(self.num_exercise_dates + 1) * self.exercise_period_years


@dataclass(frozen=True)
class PathBundle:
    """Simulated trajectories at exercise dates plus per-period accrual.

    values  : (n_paths, T + 1, dim) state levels, identical across paths at
              date 0
    accrual : (n_paths, T) per-period discount factors, positive and at most
              1 whenever rates are nonnegative
    """

    values: np.ndarray
    accrual: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        accrual = np.asarray(self.accrual, dtype=float)
        if values.ndim != 3:
            raise ConfigError("values must have shape (n_paths, T + 1, dim)")
        n, t_plus_1, _ = values.shape
        if t_plus_1 < 2:
            raise ConfigError("paths need at least one exercise date beyond t=0")
        if accrual.shape != (n, t_plus_1 - 1):
            raise ConfigError(
                f"accrual shape {accrual.shape} does not match values shape {values.shape}"
            )
        if not np.isfinite(values).all() or not np.isfinite(accrual).all():
            raise ConfigError("path values and accrual factors must be finite")
        if n > 1 and not (values[:, 0, :] == values[0, 0, :]).all():
            raise ConfigError("all paths must share the same starting state")
        if (accrual <= 0.0).any():
            raise ConfigError("accrual factors must be positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "accrual", accrual)
        values.setflags(write=False)
        accrual.setflags(write=False)

    @property
    def n_paths(self) -> int:
        return self.values.shape[0]

    @property
    def n_dates(self) -> int:
        """Number of exercise dates T (dates run 0..T)."""
        return self.values.shape[1] - 1

    @property
    def dim(self) -> int:
        return self.values.shape[2]

    def to_csv(self, values_path, accrual_path) -> None:
        """Write the bundle as ``path,t,coord,value`` plus a parallel accrual file."""
        with open(values_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "t", "coord", "value"])
            for p in range(self.n_paths):
                for t in range(self.n_dates + 1):
                    for c in range(self.dim):
                        writer.writerow([p, t, c, repr(float(self.values[p, t, c]))])
        with open(accrual_path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["path", "t", "factor"])
            for p in range(self.n_paths):
                for t in range(self.n_dates):
                    writer.writerow([p, t, repr(float(self.accrual[p, t]))])

    @classmethod
    def from_csv(cls, values_path, accrual_path) -> "PathBundle":
        def load(path, cols):
            rows = []
            with open(path, newline="") as fh:
                reader = csv.reader(fh)
                header = next(reader, None)
                if header != cols:
                    raise DataError(f"{path}: expected header {','.join(cols)}")
                for lineno, row in enumerate(reader, start=2):
                    if len(row) != len(cols):
                        raise DataError(f"{path}:{lineno}: expected {len(cols)} fields")
                    rows.append(row)
            return rows

        vrows = load(values_path, ["path", "t", "coord", "value"])
        arows = load(accrual_path, ["path", "t", "factor"])
        n = max(int(r[0]) for r in vrows) + 1
        t_max = max(int(r[1]) for r in vrows)
        dim = max(int(r[2]) for r in vrows) + 1
        values = np.full((n, t_max + 1, dim), np.nan)
        for r in vrows:
            values[int(r[0]), int(r[1]), int(r[2])] = float(r[3])
        accrual = np.full((n, t_max), np.nan)
        for r in arows:
            accrual[int(r[0]), int(r[1])] = float(r[2])
        if np.isnan(values).any() or np.isnan(accrual).any():
            raise DataError("path CSV files do not cover the full (path, t, coord) grid")
        return cls(values=values, accrual=accrual)


@dataclass(frozen=True)
class PayoffSpec:
    """Intrinsic payoff of the option, evaluated at exercise dates.

    ``weights`` multiply the raw state coordinates before the payoff formula
    is applied (share multipliers, or a coordinate selector for vanilla
    payoffs on a multi-coordinate state). Vanilla payoffs act on the sum of
    the weighted coordinates; basket and dual-strike payoffs act on the two
    weighted coordinates.
    """

    kind: str
    strikes: tuple = ()
    weights: tuple = (1.0,)
    custom_fn: Optional[Callable[[np.ndarray, int], np.ndarray]] = None

    def __post_init__(self):
        if self.kind not in PAYOFF_KINDS:
            raise ConfigError(f"unknown payoff kind {self.kind!r}")
        object.__setattr__(self, "strikes", tuple(float(k) for k in self.strikes))
        object.__setattr__(self, "weights", tuple(float(w) for w in self.weights))
        if self.kind == "custom":
            if self.custom_fn is None:
                raise ConfigError("custom payoff requires custom_fn")
            return
        if any(k <= 0.0 for k in self.strikes):
            raise ConfigError("strikes must be positive")
        expected = 2 if self.kind in ("basket_put", "dual_strike_put") else 1
        if len(self.strikes) != expected:
            raise ConfigError(f"payoff kind {self.kind!r} needs {expected} strike(s)")

    def evaluate_batch(self, states: np.ndarray, t: int) -> np.ndarray:
        """Payoff for a batch of states of shape (n, dim); returns (n,)."""
        states = np.atleast_2d(np.asarray(states, dtype=float))
        if self.kind == "custom":
            out = np.asarray(self.custom_fn(states, t), dtype=float)
            if out.shape != (states.shape[0],):
                raise ConfigError("custom payoff must return one value per state row")
            return np.maximum(out, 0.0)
        if len(self.weights) != states.shape[1]:
            raise ConfigError(
                f"payoff weights have length {len(self.weights)} "
                f"but states have dimension {states.shape[1]}"
            )
        weighted = states * np.asarray(self.weights)
        if self.kind in ("vanilla_put", "vanilla_call"):
            level = weighted.sum(axis=1)
            k = self.strikes[0]
            raw = k - level if self.kind == "vanilla_put" else level - k
            return np.maximum(raw, 0.0)
        k1, k2 = self.strikes
        s1, s2 = weighted[:, 0], weighted[:, 1]
        if self.kind == "dual_strike_put":
            return np.maximum(np.maximum(k1 - s1, k2 - s2), 0.0)
        return np.maximum(0.5 * (k1 + k2) - 0.5 * (s1 + s2), 0.0)


def evaluate_payoff(spec: PayoffSpec, state: Sequence[float], t: int = 0) -> float:
    """Intrinsic (undiscounted) payoff at date ``t`` for a single state."""
    state = np.asarray(state, dtype=float).reshape(1, -1)
    return float(spec.evaluate_batch(state, t)[0])


def intrinsic_matrix(paths: PathBundle, spec: PayoffSpec) -> np.ndarray:
    """Payoff of every path at every exercise date; shape (n_paths, T + 1)."""
    n, t_plus_1, _ = paths.values.shape
    out = np.empty((n, t_plus_1))
    for t in range(t_plus_1):
        out[:, t] = spec.evaluate_batch(paths.values[:, t, :], t)
    return out


@dataclass(frozen=True)
class DiscountSpec:
    """Per-exercise-period discounting, constant or path-dependent.

    ``constant_rate`` discounts every period by exp(-annual_rate * period
    length); ``path_accrual`` reads the per-path factors recorded by the
    simulator in ``PathBundle.accrual``.
    """

    grid: TimeGrid
    mode: str = "constant_rate"
    annual_rate: float = 0.0

    def __post_init__(self):
        if self.mode not in ("constant_rate", "path_accrual"):
            raise ConfigError(f"unknown discount mode {self.mode!r}")

    def period_factors(self, paths: PathBundle) -> np.ndarray:
        """Discount factors for periods [t, t+1), shape (n_paths, T)."""
        if self.mode == "path_accrual":
            return paths.accrual
        factor = float(np.exp(-self.annual_rate * self.grid.exercise_period_years))
        return np.full((paths.n_paths, paths.n_dates), factor)


def cumulative_discount(
    spec: DiscountSpec, paths: PathBundle, t_from: int, t_to: int, path: int = 0
) -> float:
    """Product of per-period discount factors over [t_from, t_to)."""
    if t_from < 0 or t_to > paths.n_dates or t_from > t_to:
        raise ConfigError(f"invalid date range [{t_from}, {t_to}]")
    if t_from == t_to:
        return 1.0
    factors = spec.period_factors(paths)
    return float(np.prod(factors[path, t_from:t_to]))
