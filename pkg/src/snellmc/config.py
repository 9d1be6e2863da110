"""Sectioned key-value job configuration.

A job file is INI-style with sections [model], [payoff], [grid], [basis],
[run] and [output]. Vectors are whitespace-separated numbers; matrices
separate rows with ';'. Validation errors always name the offending
section and key.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from .calibration import load_vol_matrix_csv
from .core import PayoffSpec, TimeGrid
from .engine import Lattice, PricingProblem
from .errors import ConfigError
from .models import GbmSpec, HnSpec, LmmSpec, risk_neutralize_hn
from .projection import (
    BasisSystem,
    bivariate_weighted_basis,
    custom_product_basis,
    indicator_basis,
    weighted_laguerre_basis,
)

MODEL_KINDS = ("gbm", "lmm", "heston_nandi", "lattice")


@dataclass(frozen=True)
class JobConfig:
    problem: PricingProblem
    n_paths: int
    n_runs: int
    seed: int
    out_dir: str
    formats: tuple


class _Section:
    """Typed accessors over one config section with key-level errors."""

    def __init__(self, name: str, proxy):
        self.name = name
        self.proxy = proxy

    def _raw(self, key: str) -> str:
        if key not in self.proxy:
            raise ConfigError(f"[{self.name}] is missing required key '{key}'")
        return self.proxy[key]

    def has(self, key: str) -> bool:
        return key in self.proxy and self.proxy[key].strip() != ""

    def text(self, key: str, default: Optional[str] = None) -> str:
        if not self.has(key):
            if default is None:
                return self._raw(key)
            return default
        return self.proxy[key].strip()

    def number(self, key: str, default: Optional[float] = None) -> float:
        raw = self.text(key, None if default is None else str(default))
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a number") from None
        if not math.isfinite(value):
            raise ConfigError(f"[{self.name}] {key} must be finite")
        return value

    def integer(self, key: str, default: Optional[int] = None) -> int:
        raw = self.text(key, None if default is None else str(default))
        try:
            return int(raw)
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not an integer") from None

    def flag(self, key: str, default: bool) -> bool:
        raw = self.text(key, str(default)).lower()
        if raw in ("1", "true", "yes", "on"):
            return True
        if raw in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a boolean")

    def vector(self, key: str, default: Optional[str] = None) -> np.ndarray:
        raw = self.text(key, default)
        try:
            return np.array([float(x) for x in raw.split()])
        except ValueError:
            raise ConfigError(f"[{self.name}] {key} = {raw!r} is not a number list") from None

    def matrix(self, key: str) -> np.ndarray:
        raw = self.text(key)
        rows = []
        for part in raw.split(";"):
            part = part.strip()
            if not part:
                continue
            try:
                rows.append([float(x) for x in part.split()])
            except ValueError:
                raise ConfigError(f"[{self.name}] {key} has a non-numeric entry") from None
        if not rows or any(len(r) != len(rows[0]) for r in rows):
            raise ConfigError(f"[{self.name}] {key} must be a rectangular matrix")
        return np.array(rows)


def _build_model(section: _Section, base_dir: Path):
    kind = section.text("kind")
    if kind not in MODEL_KINDS:
        raise ConfigError(f"[model] kind = {kind!r}; expected one of {MODEL_KINDS}")
    if kind == "gbm":
        s0 = section.vector("s0")
        vols = section.vector("vols")
        corr = section.matrix("corr") if section.has("corr") else None
        return GbmSpec(s0=tuple(s0), rate=section.number("rate"), vols=tuple(vols), corr=corr)
    if kind == "lmm":
        if section.has("vol_matrix_csv"):
            vol = load_vol_matrix_csv(base_dir / section.text("vol_matrix_csv"))
        else:
            vol = section.matrix("vol_matrix")
        return LmmSpec(
            initial_forwards=tuple(section.vector("initial_forwards")),
            vol_matrix=vol,
            accrual_length=section.number("accrual_length", 0.25),
            dt=section.number("dt", 1.0 / 360.0),
        )
    if kind == "heston_nandi":
        spec = HnSpec(
            lam=section.number("lam"),
            omega=section.number("omega"),
            alpha=section.number("alpha"),
            beta=section.number("beta"),
            gamma=section.number("gamma", 0.0),
            r_daily=section.number("r_daily"),
            s0=section.number("s0"),
            sigma0_sq=section.number("sigma0_sq") if section.has("sigma0_sq") else None,
        )
        if section.flag("risk_neutralize", True):
            spec = risk_neutralize_hn(spec)
        return spec
    levels = []
    t = 0
    while section.has(f"levels_{t}"):
        levels.append(section.vector(f"levels_{t}"))
        t += 1
    if t < 2:
        raise ConfigError("[model] lattice needs levels_0, levels_1, ...")
    transitions = [section.matrix(f"transition_{k}") for k in range(t - 1)]
    discounts = section.vector("discounts")
    return Lattice(levels=levels, transitions=transitions, discounts=tuple(discounts))


def _build_payoff(section: _Section) -> PayoffSpec:
    kind = section.text("kind")
    strikes = tuple(section.vector("strikes"))
    weights = tuple(section.vector("weights", "1.0"))
    return PayoffSpec(kind=kind, strikes=strikes, weights=weights)


def _build_basis(section: _Section, model) -> BasisSystem:
    family = section.text("family")
    if family == "laguerre":
        return weighted_laguerre_basis(
            max_degree=section.integer("degree", 3),
            scaling=section.number("scaling"),
            coordinate=section.integer("coordinate", 0),
        )
    if family == "bivariate":
        coords = section.vector("coordinates", "0 1").astype(int)
        return bivariate_weighted_basis(
            scaling=section.vector("scaling"), coordinates=tuple(coords)
        )
    if family == "custom":
        scaling = section.vector("scaling")
        terms = []
        for part in section.text("terms").split(";"):
            part = part.strip()
            if not part:
                continue
            halves = part.split("|")
            if len(halves) != 2:
                raise ConfigError(
                    "[basis] terms entries must look like 'w1 w2 | p1 p2'"
                )
            w = [float(x) for x in halves[0].split()]
            p = [float(x) for x in halves[1].split()]
            terms.append((w, p))
        return custom_product_basis(terms=terms, scaling=scaling)
    if family == "indicator":
        if not isinstance(model, Lattice):
            raise ConfigError("[basis] family = indicator requires a lattice model")
        return indicator_basis(
            [lv for lv in model.levels], coordinate=section.integer("coordinate", 0)
        )
    raise ConfigError(f"[basis] unknown family {family!r}")


def load_config(path, seed_override: Optional[int] = None) -> JobConfig:
    """Parse and validate a job file into a ready-to-run configuration."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file {path} does not exist")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    required = ("model", "payoff", "grid", "basis", "run")
    for name in required:
        if not parser.has_section(name):
            raise ConfigError(f"{path}: missing required section [{name}]")
    model_sec = _Section("model", parser["model"])
    grid_sec = _Section("grid", parser["grid"])
    run_sec = _Section("run", parser["run"])

    model = _build_model(model_sec, path.parent)
    if isinstance(model, Lattice):
        grid = TimeGrid(
            num_exercise_dates=model.n_dates,
            steps_per_exercise=1,
            dt_years=grid_sec.number("dt_years", 1.0 / 252.0),
            day_count=grid_sec.integer("day_count", 252),
        )
    else:
        grid = TimeGrid(
            num_exercise_dates=grid_sec.integer("num_exercise_dates"),
            steps_per_exercise=grid_sec.integer("steps_per_exercise", 1),
            dt_years=grid_sec.number("dt_years", 1.0 / 252.0),
            day_count=grid_sec.integer("day_count", 252),
        )
    payoff = _build_payoff(_Section("payoff", parser["payoff"]))
    basis = _build_basis(_Section("basis", parser["basis"]), model)

    if isinstance(model, GbmSpec):
        discount_mode, annual_rate = "constant_rate", model.rate
    elif isinstance(model, HnSpec):
        discount_mode, annual_rate = "constant_rate", model.r_daily * grid.day_count
    else:
        discount_mode, annual_rate = "path_accrual", 0.0

    problem = PricingProblem(
        model=model,
        grid=grid,
        payoff=payoff,
        basis=basis,
        discount_mode=discount_mode,
        annual_rate=annual_rate,
    )
    if seed_override is None and not run_sec.has("seed"):
        raise ConfigError("[run] seed is mandatory (pass --seed or set it in the file)")
    seed = seed_override if seed_override is not None else run_sec.integer("seed")
    out_sec = (
        _Section("output", parser["output"]) if parser.has_section("output") else None
    )
    out_dir = out_sec.text("directory", "out") if out_sec else "out"
    formats = tuple(
        (out_sec.text("formats", "csv") if out_sec else "csv").split()
    )
    for fmt in formats:
        if fmt != "csv":
            raise ConfigError(f"[output] unsupported format {fmt!r}")
    return JobConfig(
        problem=problem,
        n_paths=run_sec.integer("n_paths"),
        n_runs=run_sec.integer("n_runs", 1),
        seed=seed,
        out_dir=out_dir,
        formats=formats,
    )

