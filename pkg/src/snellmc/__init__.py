"""Least-squares Monte Carlo pricing of American-style options.

The engine regresses discounted future cashflows on configurable basis
families to approximate continuation values inside the optimal-stopping
recursion, and ships risk-neutral simulators for multivariate GBM, a
spot-measure LIBOR market model and Heston-Nandi GARCH dynamics, together
with binomial-tree and closed-form reference pricers.
"""

from .core import (
    DiscountSpec,
    PathBundle,
    PayoffSpec,
    TimeGrid,
    cumulative_discount,
    evaluate_payoff,
    intrinsic_matrix,
)
from .engine import (
    Lattice,
    PriceEstimate,
    PricingProblem,
    RunDistribution,
    StoppingRule,
    backward_induction,
    exact_snell_oracle,
    multi_run,
    price,
    price_once,
    simulate_lattice,
)
from .errors import ConfigError, DataError, NumericalError, SnellmcError
from .kernels import BACKEND
from .models import (
    GbmSpec,
    HnSpec,
    LmmSpec,
    hn_long_run_vol,
    risk_neutralize_hn,
    simulate,
    simulate_gbm,
    simulate_hn,
    simulate_lmm,
)
from .oracles import CrrSpec, black_scholes_european, crr_price
from .projection import (
    BasisSystem,
    RegressionFit,
    bivariate_weighted_basis,
    custom_product_basis,
    fit_continuation,
    gram_matrix,
    indicator_basis,
    weighted_laguerre_basis,
)

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "BasisSystem",
    "ConfigError",
    "CrrSpec",
    "DataError",
    "DiscountSpec",
    "GbmSpec",
    "HnSpec",
    "Lattice",
    "LmmSpec",
    "NumericalError",
    "PathBundle",
    "PayoffSpec",
    "PriceEstimate",
    "PricingProblem",
    "RegressionFit",
    "RunDistribution",
    "SnellmcError",
    "StoppingRule",
    "TimeGrid",
    "backward_induction",
    "bivariate_weighted_basis",
    "black_scholes_european",
    "crr_price",
    "cumulative_discount",
    "custom_product_basis",
    "evaluate_payoff",
    "exact_snell_oracle",
    "fit_continuation",
    "gram_matrix",
    "hn_long_run_vol",
    "indicator_basis",
    "intrinsic_matrix",
    "multi_run",
    "price",
    "price_once",
    "risk_neutralize_hn",
    "simulate",
    "simulate_gbm",
    "simulate_hn",
    "simulate_lattice",
    "simulate_lmm",
    "weighted_laguerre_basis",
]
