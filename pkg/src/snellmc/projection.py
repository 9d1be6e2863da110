"""Regression bases and the per-date least-squares continuation fit.

A basis system maps the path prefix at an exercise date to a fixed-length
feature vector; the engine regresses discounted future cashflows on those
features to estimate continuation values. Basis evaluators only read
coordinates with date index <= t, so they are measurable with respect to
the information available at the exercise date.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import ConfigError

#: Gram matrices with a condition estimate above this are solved by
#: minimum-norm least squares instead of the normal equations.
CONDITION_LIMIT = 1e12


@dataclass(frozen=True)
class BasisSystem:
    """A finite family of features of the path prefix, per exercise date.

    ``evaluate(values, t)`` takes the full path tensor (n, T + 1, dim) and a
    date index and returns the (n, size) design matrix built from
    coordinates at dates <= t.
    """

    name: str
    size: int
    evaluate: Callable[[np.ndarray, int], np.ndarray]

    def design_matrix(self, values: np.ndarray, t: int) -> np.ndarray:
        out = np.asarray(self.evaluate(values, t), dtype=float)
        if out.shape != (values.shape[0], self.size):
            raise ConfigError(
                f"basis {self.name!r} returned shape {out.shape}, "
                f"expected ({values.shape[0]}, {self.size})"
            )
        return out


@dataclass(frozen=True)
class RegressionFit:
    """Coefficients and diagnostics of one exercise date's fit."""

    date: int
    coefficients: np.ndarray
    gram_condition: float
    n_regression_paths: int

    @property
    def is_sentinel(self) -> bool:
        """True when no paths entered the fit; continuation is treated as 0."""
        return self.n_regression_paths == 0


def laguerre_values(x: np.ndarray, max_degree: int) -> np.ndarray:
    """Laguerre polynomials L_0..L_max evaluated columnwise via the
    three-term recurrence (j+1) L_{j+1} = (2j+1-x) L_j - j L_{j-1}."""
    x = np.asarray(x, dtype=float)
    out = np.empty((x.shape[0], max_degree + 1))
    out[:, 0] = 1.0
    if max_degree >= 1:
        out[:, 1] = 1.0 - x
    for j in range(1, max_degree):
        out[:, j + 1] = ((2 * j + 1 - x) * out[:, j] - j * out[:, j - 1]) / (j + 1)
    return out


def weighted_laguerre_basis(
    max_degree: int, scaling: float, coordinate: int = 0
) -> BasisSystem:
    """Constant plus exponentially weighted Laguerre polynomials.

    Features are [1, e^{-x/2} L_0(x), ..., e^{-x/2} L_max(x)] with
    x = level / scaling; ``scaling`` is typically the strike so that the
    weight is well conditioned near the money.
    """
    if max_degree < 0:
        raise ConfigError("max_degree must be >= 0")
    if not scaling > 0.0:
        raise ConfigError("scaling must be positive")

    def evaluate(values: np.ndarray, t: int) -> np.ndarray:
        x = values[:, t, coordinate] / scaling
        lag = laguerre_values(x, max_degree)
        weight = np.exp(-0.5 * x)
        return np.column_stack([np.ones_like(x), weight[:, None] * lag])

    return BasisSystem(
        name=f"laguerre(degree={max_degree})", size=max_degree + 2, evaluate=evaluate
    )


def bivariate_weighted_basis(
    scaling: Sequence[float], coordinates: Sequence[int] = (0, 1)
) -> BasisSystem:
    """The seven exponentially weighted two-variable monomials.

    e^{1/2}; e^{-x/2} x; e^{-y/2} y; e^{-(x+y)/4} xy; e^{-(x+y)/4} xy^2;
    e^{-(x+y)/4} x^2 y; e^{-(x+y)/4} x^2 y^2, with x, y the two scaled
    coordinates.
    """
    sx, sy = (float(s) for s in scaling)
    if sx <= 0.0 or sy <= 0.0:
        raise ConfigError("scalings must be positive")
    cx, cy = coordinates

    def evaluate(values: np.ndarray, t: int) -> np.ndarray:
        if values.shape[2] <= max(cx, cy):
            raise ConfigError("bivariate basis needs at least two state coordinates")
        x = values[:, t, cx] / sx
        y = values[:, t, cy] / sy
        wx = np.exp(-0.5 * x)
        wy = np.exp(-0.5 * y)
        wxy = np.exp(-0.25 * (x + y))
        return np.column_stack(
            [
                np.full_like(x, math.exp(0.5)),
                wx * x,
                wy * y,
                wxy * x * y,
                wxy * x * y * y,
                wxy * x * x * y,
                wxy * x * x * y * y,
            ]
        )

    return BasisSystem(name="bivariate_weighted", size=7, evaluate=evaluate)


def custom_product_basis(
    terms: Sequence[tuple], scaling: Sequence[float]
) -> BasisSystem:
    """User-defined family of exponentially weighted monomials.

    Each term is a pair (exponent weights w, monomial powers p), both of the
    state dimension, contributing exp(-sum_i w_i x_i) * prod_i x_i^{p_i}
    with x the scaled state.
    """
    scale = np.asarray(scaling, dtype=float)
    if (scale <= 0.0).any():
        raise ConfigError("scalings must be positive")
    parsed = []
    for w, p in terms:
        w = np.asarray(w, dtype=float)
        p = np.asarray(p, dtype=float)
        if w.shape != scale.shape or p.shape != scale.shape:
            raise ConfigError("basis term weights/powers must match the state dimension")
        parsed.append((w, p))
    if not parsed:
        raise ConfigError("custom basis needs at least one term")

    def evaluate(values: np.ndarray, t: int) -> np.ndarray:
        if values.shape[2] != scale.shape[0]:
            raise ConfigError(
                f"custom basis built for dimension {scale.shape[0]}, "
                f"paths have dimension {values.shape[2]}"
            )
        x = values[:, t, :] / scale
        cols = []
        for w, p in parsed:
            col = np.exp(-(x @ w))
            with np.errstate(divide="ignore", invalid="ignore"):
                mono = np.prod(np.where(p == 0.0, 1.0, x**p), axis=1)
            cols.append(col * mono)
        return np.column_stack(cols)

    return BasisSystem(name="custom_product", size=len(parsed), evaluate=evaluate)


def indicator_basis(
    levels_per_date: Sequence[Sequence[float]], coordinate: int = 0
) -> BasisSystem:
    """Indicators of the finitely many state levels of a lattice.

    With one indicator per reachable level this basis represents every
    function of the date-t state exactly, which makes the regression
    estimator consistent for the true continuation value.
    """
    levels = [np.asarray(lv, dtype=float) for lv in levels_per_date]
    size = max(lv.shape[0] for lv in levels)

    def evaluate(values: np.ndarray, t: int) -> np.ndarray:
        lv = levels[t]
        x = values[:, t, coordinate]
        out = np.zeros((x.shape[0], size))
        for k, level in enumerate(lv):
            out[:, k] = np.isclose(x, level, rtol=1e-12, atol=1e-12).astype(float)
        return out

    return BasisSystem(name="indicator", size=size, evaluate=evaluate)


def gram_matrix(design: np.ndarray) -> np.ndarray:
    """Sample Gram matrix (1/N) B^T B of a design matrix B."""
    design = np.asarray(design, dtype=float)
    n = design.shape[0]
    return design.T @ design / n


def fit_continuation(
    design: np.ndarray,
    y: np.ndarray,
    mask: Optional[np.ndarray] = None,
    date: int = -1,
) -> RegressionFit:
    """Least-squares continuation coefficients on the masked-in rows.

    Solves the normal equations A alpha = (1/N) B^T y restricted to the
    masked rows; falls back to minimum-norm least squares when the Gram
    matrix is singular or its condition estimate exceeds CONDITION_LIMIT.
    With no masked-in rows, returns a sentinel fit whose prediction is 0.
    """
    design = np.asarray(design, dtype=float)
    y = np.asarray(y, dtype=float)
    k = design.shape[1]
    if mask is None:
        mask = np.ones(design.shape[0], dtype=bool)
    rows = design[mask]
    target = y[mask]
    n_rows = rows.shape[0]
    if n_rows == 0:
        return RegressionFit(
            date=date,
            coefficients=np.zeros(k),
            gram_condition=float("inf"),
            n_regression_paths=0,
        )
    gram = gram_matrix(rows)
    try:
        condition = float(np.linalg.cond(gram))
    except np.linalg.LinAlgError:
        condition = float("inf")
    if math.isfinite(condition) and condition < CONDITION_LIMIT:
        alpha = np.linalg.solve(gram, rows.T @ target / n_rows)
    else:
        alpha = np.linalg.lstsq(rows, target, rcond=None)[0]
    # Iterative refinement: ill-conditioned designs otherwise leave the
    # residual visibly correlated with the columns.
    for _ in range(2):
        residual = target - rows @ alpha
        alpha = alpha + np.linalg.lstsq(rows, residual, rcond=None)[0]
    return RegressionFit(
        date=date,
        coefficients=alpha,
        gram_condition=condition,
        n_regression_paths=int(n_rows),
    )
