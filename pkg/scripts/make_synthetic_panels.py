#!/usr/bin/env python3
"""Generate synthetic market panels for the calibration commands.

The real quote history behind the shipped parameter sets is not
redistributable, so this script fabricates statistically similar panels
from the package's own simulators:

  futures_quotes.csv   five staggered-maturity futures price series
                       (quoted as 100 (1 - rate)), weekday dates only
  etf_prices.csv       two correlated index-basket price series
  index_closes.csv     a single GARCH-driven closing price series

Usage: python scripts/make_synthetic_panels.py [--out DIR] [--seed N]
"""

import argparse
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from snellmc import GbmSpec, HnSpec, LmmSpec, TimeGrid, simulate_gbm, simulate_hn, simulate_lmm
from snellmc.calibration import PricePanel

LMM_VOLS = np.array(
    [
        [0.024063776, 0.024267981, 0.007801289],
        [0.033758193, 0.018222734, -0.001039692],
        [0.040538115, 0.007111945, -0.006052515],
        [0.043033555, -0.004846372, -0.004629562],
    ]
)


def weekdays(start: date, count: int):
    out = []
    d = start
    while len(out) < count:
        if d.weekday() < 5:
            out.append(d)
        d += timedelta(days=1)
    return out


def futures_panel(out_dir: Path, seed: int) -> None:
    n_days = 60
    spec = LmmSpec(
        initial_forwards=(0.005, 0.006, 0.007, 0.008, 0.009, 0.010),
        vol_matrix=LMM_VOLS,
        dt=1 / 252,
    )
    grid = TimeGrid(num_exercise_dates=n_days, steps_per_exercise=1, dt_years=1 / 252)
    paths = simulate_lmm(spec, grid, 1, seed=seed)
    rates = paths.values[0, :, 1:6]
    prices = 100.0 * (1.0 - rates)
    dates = weekdays(date(2011, 12, 26), n_days + 1)
    labels = [f"fut{k}" for k in range(1, 6)]
    panel = PricePanel(dates=tuple(dates), series=prices, labels=labels)
    panel.to_csv(out_dir / "futures_quotes.csv")
    maturities = [dates[0] + timedelta(days=round(91.3125 * k)) for k in range(1, 6)]
    (out_dir / "futures_maturities.txt").write_text(
        ",".join(m.isoformat() for m in maturities) + "\n"
    )


def etf_panel(out_dir: Path, seed: int) -> None:
    corr = np.array([[1.0, 0.92], [0.92, 1.0]])
    spec = GbmSpec(s0=(68.05, 69.72), rate=0.015, vols=(0.133, 0.119), corr=corr)
    grid = TimeGrid(num_exercise_dates=60, steps_per_exercise=1, dt_years=1 / 252)
    paths = simulate_gbm(spec, grid, 1, seed=seed)
    dates = weekdays(date(2012, 10, 15), 61)
    panel = PricePanel(
        dates=tuple(dates), series=paths.values[0, :, :], labels=["eur_etf", "dax_etf"]
    )
    panel.to_csv(out_dir / "etf_prices.csv")


def index_panel(out_dir: Path, seed: int) -> None:
    spec = HnSpec(
        lam=7.280, omega=2.738e-5, alpha=5.238e-5, beta=0.086, gamma=0.0,
        r_daily=0.015 / 252, s0=68.05,
    )
    grid = TimeGrid(num_exercise_dates=500, steps_per_exercise=1, dt_years=1 / 252)
    paths = simulate_hn(spec, grid, 1, seed=seed)
    dates = weekdays(date(2011, 1, 3), 501)
    panel = PricePanel(
        dates=tuple(dates), series=paths.values[0, :, :], labels=["index_close"]
    )
    panel.to_csv(out_dir / "index_closes.csv")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="data", help="output directory")
    parser.add_argument("--seed", type=int, default=2012)
    args = parser.parse_args()
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    futures_panel(out_dir, args.seed)
    etf_panel(out_dir, args.seed + 1)
    index_panel(out_dir, args.seed + 2)
    print(f"wrote synthetic panels to {out_dir}/")


if __name__ == "__main__":
    main()
