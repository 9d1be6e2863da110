"""Independent reference pricers: Cox-Ross-Rubinstein trees and the
Black-Scholes closed form. Used as validation columns and by the tests."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Tuple

from . import kernels
from .errors import ConfigError

#: Step count at which the tree price is stable to well under half a cent
#: for the parameter ranges exercised here.
DEFAULT_STEPS = 2000


@dataclass(frozen=True)
class CrrSpec:
    s0: float
    strike: float
    rate: float
    sigma: float
    maturity: float
    steps: int = DEFAULT_STEPS
    exercise: str = "american"
    side: str = "put"

    def __post_init__(self):
        if self.s0 <= 0.0 or self.strike <= 0.0:
            raise ConfigError("spot and strike must be positive")
        if self.sigma < 0.0:
            raise ConfigError("volatility must be nonnegative")
        if self.maturity <= 0.0:
            raise ConfigError("maturity must be positive")
        if self.steps < 1:
            raise ConfigError("steps must be >= 1")
        if self.exercise not in ("american", "european"):
            raise ConfigError(f"unknown exercise style {self.exercise!r}")
        if self.side not in ("put", "call"):
            raise ConfigError(f"unknown option side {self.side!r}")
        if self.sigma > 0.0:
            dt = self.maturity / self.steps
            u = math.exp(self.sigma * math.sqrt(dt))
            d = 1.0 / u
            p = (math.exp(self.rate * dt) - d) / (u - d)
            if not 0.0 <= p <= 1.0:
                raise ConfigError(
                    f"risk-neutral probability {p:.6f} outside [0, 1]; "
                    "reduce the step length or the drift"
                )


def _deterministic_values(spec: CrrSpec) -> Tuple[float, float]:
    """Zero-volatility limit: the price path is deterministic."""
    dt = spec.maturity / spec.steps
    put = spec.side == "put"
    best = 0.0
    for i in range(spec.steps + 1):
        level = spec.s0 * math.exp(spec.rate * dt * i)
        intrinsic = (spec.strike - level) if put else (level - spec.strike)
        best = max(best, math.exp(-spec.rate * dt * i) * max(intrinsic, 0.0))
    terminal = spec.s0 * math.exp(spec.rate * spec.maturity)
    intrinsic = (spec.strike - terminal) if put else (terminal - spec.strike)
    european = math.exp(-spec.rate * spec.maturity) * max(intrinsic, 0.0)
    return best, european


def crr_price(spec: CrrSpec) -> Tuple[float, float]:
    """Price and early-exercise premium of the requested tree.

    The premium is american minus european at the identical spec,
    regardless of which style is requested.
    """
    if spec.sigma == 0.0:
        american, european = _deterministic_values(spec)
    else:
        american, european = kernels.crr_values(
            spec.s0, spec.strike, spec.rate, spec.sigma,
            spec.maturity, spec.steps, spec.side == "put",
        )
    premium = american - european
    value = american if spec.exercise == "american" else european
    return value, premium


def _norm_cdf(x: float) -> float:
    return 0.5 * math.erfc(-x / math.sqrt(2.0))


def black_scholes_european(
    s0: float, strike: float, rate: float, sigma: float, maturity: float,
    side: str = "put",
) -> float:
    """Closed-form European price; sigma = 0 gives the discounted intrinsic
    value of the forward."""
    if maturity < 0.0:
        raise ConfigError("maturity must be nonnegative")
    if s0 <= 0.0 or strike < 0.0:
        raise ConfigError("spot must be positive and strike nonnegative")
    if side not in ("put", "call"):
        raise ConfigError(f"unknown option side {side!r}")
    disc = math.exp(-rate * maturity)
    if sigma <= 0.0 or maturity == 0.0 or strike == 0.0:
        forward = s0 / disc if maturity > 0.0 else s0
        intrinsic = (strike - forward) if side == "put" else (forward - strike)
        return disc * max(intrinsic, 0.0)
    sq = sigma * math.sqrt(maturity)
    d1 = (math.log(s0 / strike) + (rate + 0.5 * sigma * sigma) * maturity) / sq
    d2 = d1 - sq
    if side == "call":
        return s0 * _norm_cdf(d1) - strike * disc * _norm_cdf(d2)
    return strike * disc * _norm_cdf(-d2) - s0 * _norm_cdf(-d1)
