"""Command-line surface: calibrate, price, density, convergence, oracle.

Every command is deterministic given (config, seed); reports contain no
timestamps, so re-running a command reproduces the output files byte for
byte regardless of the worker count.
"""

from __future__ import annotations

import argparse
import csv
import sys
from datetime import date as _date
from pathlib import Path

import numpy as np

from . import calibration, engine, oracles
from .config import JobConfig, load_config
from .engine import Lattice
from .errors import ConfigError, SnellmcError
from .models import GbmSpec


def _write_rows(path: Path, header, rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _fmt(x: float) -> str:
    return f"{x:.10g}"


def cmd_price(job: JobConfig, out_dir: Path, workers: int) -> int:
    estimate = engine.price_once(job.problem, job.n_paths, job.seed)
    _write_rows(
        out_dir / "price.csv",
        ["price", "std_error", "continuation_mean", "n_paths", "seed"],
        [[
            _fmt(estimate.price), _fmt(estimate.std_error),
            _fmt(estimate.continuation_mean), estimate.n_paths, job.seed,
        ]],
    )
    _write_rows(
        out_dir / "regression_diagnostics.csv",
        ["date", "n_regression_paths", "gram_condition", "coefficients"],
        [
            [f.date, f.n_regression_paths, _fmt(f.gram_condition),
             " ".join(_fmt(c) for c in f.coefficients)]
            for f in estimate.per_date_fits
        ],
    )
    print(f"price {estimate.price:.6f}  std_error {estimate.std_error:.6f}")
    return 0


def cmd_density(job: JobConfig, out_dir: Path, workers: int, n_runs: int) -> int:
    if n_runs < 2:
        raise ConfigError("density needs n_runs >= 2 for a nondegenerate spread")
    dist = engine.multi_run(
        job.problem, n_runs, job.n_paths, job.seed, workers=workers
    )
    _write_rows(
        out_dir / "samples.csv",
        ["run", "price"],
        [[r, _fmt(p)] for r, p in enumerate(dist.samples)],
    )
    _write_rows(
        out_dir / "density.csv",
        ["abscissa", "density"],
        [[_fmt(x), _fmt(y)] for x, y in zip(dist.density_x, dist.density_y)],
    )
    strikes = job.problem.payoff.strikes
    strike_text = " ".join(_fmt(k) for k in strikes) if strikes else ""
    _write_rows(
        out_dir / "summary.csv",
        ["strike", "market", "mu", "sigma"],
        [[strike_text, "", _fmt(dist.mean), _fmt(dist.std)]],
    )
    print(f"mu {dist.mean:.6f}  sigma {dist.std:.6f}  runs {n_runs}")
    return 0


def _reference_price(job: JobConfig) -> float:
    problem = job.problem
    model = problem.model
    if isinstance(model, Lattice):
        return engine.exact_snell_oracle(model, payoff=problem.payoff)
    if isinstance(model, GbmSpec) and model.dim == 1:
        side = "put" if problem.payoff.kind == "vanilla_put" else "call"
        spec = oracles.CrrSpec(
            s0=model.s0[0] * problem.payoff.weights[0],
            strike=problem.payoff.strikes[0],
            rate=model.rate,
            sigma=model.vols[0],
            maturity=problem.grid.maturity_years,
            steps=problem.grid.num_exercise_dates,
            exercise="american",
            side=side,
        )
        return oracles.crr_price(spec)[0]
    raise ConfigError(
        "convergence needs a reference price: use a lattice model or a "
        "one-dimensional GBM vanilla option"
    )


def cmd_convergence(job: JobConfig, out_dir: Path, workers: int,
                    path_counts, repeats: int) -> int:
    reference = _reference_price(job)
    rows = []
    seq = np.random.SeedSequence(job.seed)
    for n_paths, child in zip(path_counts, seq.spawn(len(path_counts))):
        dist = engine.multi_run(
            job.problem, repeats, n_paths, child, workers=workers
        )
        errors = np.abs(dist.samples - reference)
        rows.append([n_paths, _fmt(float(errors.mean())), _fmt(dist.std)])
    _write_rows(out_dir / "convergence.csv",
                ["n_paths", "mean_abs_error", "sigma"], rows)
    for row in rows:
        print(f"N={row[0]}  mean_abs_error={row[1]}  sigma={row[2]}")
    return 0


def cmd_oracle(args) -> int:
    spec = oracles.CrrSpec(
        s0=args.s0, strike=args.strike, rate=args.rate, sigma=args.vol,
        maturity=args.maturity, steps=args.steps,
        exercise=args.exercise, side=args.side,
    )
    value, premium = oracles.crr_price(spec)
    print(f"crr_{args.exercise} {value:.6f}  early_exercise_premium {premium:.6f}")
    if args.check_bs:
        bs = oracles.black_scholes_european(
            args.s0, args.strike, args.rate, args.vol, args.maturity, args.side
        )
        european = oracles.crr_price(
            oracles.CrrSpec(
                s0=args.s0, strike=args.strike, rate=args.rate, sigma=args.vol,
                maturity=args.maturity, steps=args.steps,
                exercise="european", side=args.side,
            )
        )[0]
        agree = abs(bs - european) < 0.005
        print(f"black_scholes {bs:.6f}  crr_european {european:.6f}  "
              f"agree {'yes' if agree else 'no'}")
        if not agree:
            return 3
    return 0


def cmd_calibrate(args) -> int:
    panel = calibration.PricePanel.from_csv(args.panel)
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    fragment = out_dir / "model_fragment.ini"
    report = out_dir / "calibration_report.csv"
    if args.method == "gbm-cov":
        if len(panel.labels) < 2:
            raise ConfigError("gbm-cov needs a two-column panel")
        rho, sig_a, sig_b = calibration.estimate_gbm_cov(
            panel.series[:, 0], panel.series[:, 1], window=args.window
        )
        s0a, s0b = panel.series[-1, 0], panel.series[-1, 1]
        fragment.write_text(
            "[model]\n"
            "kind = gbm\n"
            f"s0 = {_fmt(s0a)} {_fmt(s0b)}\n"
            f"vols = {_fmt(sig_a)} {_fmt(sig_b)}\n"
            f"corr = 1.0 {_fmt(rho)} ; {_fmt(rho)} 1.0\n"
        )
        _write_rows(report, ["quantity", "value"],
                    [["rho", _fmt(rho)], ["sigma_1", _fmt(sig_a)],
                     ["sigma_2", _fmt(sig_b)], ["window", args.window]])
    elif args.method == "pca-lmm":
        if args.futures_maturities:
            maturities = [
                _date.fromisoformat(x) for x in args.futures_maturities.split(",")
            ]
            panel = calibration.interpolate_constant_maturity(panel, maturities)
        structure = calibration.pca_vol_structure(panel)
        rows = [" ".join(_fmt(x) for x in row) for row in structure.lam]
        fragment.write_text(
            "[model]\n"
            "kind = lmm\n"
            f"vol_matrix = {' ; '.join(rows)}\n"
        )
        _write_rows(
            report, ["quantity", "value"],
            [["factor_variance_1", _fmt(structure.factor_variances[0])],
             ["factor_variance_2", _fmt(structure.factor_variances[1])],
             ["factor_variance_3", _fmt(structure.factor_variances[2])],
             *[[f"total_vol_{i + 1}", _fmt(v)]
               for i, v in enumerate(structure.total_vols)]],
        )
    else:
        prices = panel.series[:, 0]
        if (prices <= 0.0).any():
            raise ConfigError("hn-mle needs positive prices in the first column")
        returns = np.diff(np.log(prices))
        if args.window and args.window < returns.shape[0]:
            returns = returns[-args.window:]
        fit = calibration.fit_hn_mle(returns, r_daily=args.r_daily, seed=job_seed(args))
        spec = fit.spec
        fragment.write_text(
            "[model]\n"
            "kind = heston_nandi\n"
            f"lam = {_fmt(spec.lam)}\n"
            f"omega = {_fmt(spec.omega)}\n"
            f"alpha = {_fmt(spec.alpha)}\n"
            f"beta = {_fmt(spec.beta)}\n"
            f"gamma = {_fmt(spec.gamma)}\n"
            f"r_daily = {_fmt(spec.r_daily)}\n"
            f"s0 = {_fmt(prices[-1])}\n"
            "risk_neutralize = true\n"
        )
        _write_rows(report, ["quantity", "value"],
                    [["loglik", _fmt(fit.loglik)],
                     ["n_obs", fit.n_obs],
                     ["converged", fit.converged]])
    print(f"wrote {fragment}")
    return 0


def job_seed(args) -> int:
    return args.seed if args.seed is not None else 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="snellmc",
        description="Least-squares Monte Carlo pricing of American-style options",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", required=True, help="job file path")
        p.add_argument("--seed", type=int, default=None, help="overrides [run] seed")
        p.add_argument("--workers", type=int, default=1)
        p.add_argument("--out", default=None, help="overrides [output] directory")

    p_price = sub.add_parser("price", help="single-run least-squares price")
    common(p_price)

    p_density = sub.add_parser("density", help="multi-run price distribution")
    common(p_density)
    p_density.add_argument("--runs", type=int, default=None,
                           help="overrides [run] n_runs")

    p_conv = sub.add_parser("convergence", help="error versus path count")
    common(p_conv)
    p_conv.add_argument("--path-counts", default="1000,10000,100000")
    p_conv.add_argument("--repeats", type=int, default=10)

    p_oracle = sub.add_parser("oracle", help="binomial tree reference price")
    p_oracle.add_argument("--s0", type=float, required=True)
    p_oracle.add_argument("--strike", type=float, required=True)
    p_oracle.add_argument("--rate", type=float, default=0.0)
    p_oracle.add_argument("--vol", type=float, required=True)
    p_oracle.add_argument("--maturity", type=float, required=True)
    p_oracle.add_argument("--steps", type=int, default=oracles.DEFAULT_STEPS)
    p_oracle.add_argument("--side", choices=("put", "call"), default="put")
    p_oracle.add_argument("--exercise", choices=("american", "european"),
                          default="american")
    p_oracle.add_argument("--check-bs", action="store_true",
                          help="cross-check the European tree against Black-Scholes")

    p_cal = sub.add_parser("calibrate", help="estimate model parameters from a panel")
    p_cal.add_argument("--panel", required=True, help="price panel CSV")
    p_cal.add_argument("--method", required=True,
                       choices=("pca-lmm", "gbm-cov", "hn-mle"))
    p_cal.add_argument("--window", type=int, default=50)
    p_cal.add_argument("--r-daily", dest="r_daily", type=float,
                       default=0.015 / 252.0)
    p_cal.add_argument("--futures-maturities", default=None,
                       help="comma-separated ISO maturity dates, one per column")
    p_cal.add_argument("--seed", type=int, default=None)
    p_cal.add_argument("--out", default="out")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return 0 if exc.code == 0 else 1
    try:
        if args.command == "oracle":
            return cmd_oracle(args)
        if args.command == "calibrate":
            return cmd_calibrate(args)
        job = load_config(args.config, seed_override=args.seed)
        out_dir = Path(args.out) if args.out else Path(job.out_dir)
        if args.command == "price":
            return cmd_price(job, out_dir, args.workers)
        if args.command == "density":
            n_runs = args.runs if args.runs is not None else job.n_runs
            return cmd_density(job, out_dir, args.workers, n_runs)
        path_counts = [int(x) for x in args.path_counts.split(",") if x]
        return cmd_convergence(job, out_dir, args.workers, path_counts, args.repeats)
    except SnellmcError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return getattr(exc, "exit_code", 1)


if __name__ == "__main__":
    sys.exit(main())
