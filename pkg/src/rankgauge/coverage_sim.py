"""Simulation study over random centres: coverage and efficiency per cell.

A cell draws ``center_draws`` mean vectors ``mu ~ N(0, tau^2 I_n)``, one
dataset ``y ~ N(mu, I_n)`` per mean vector, builds intervals with one method
and records whether all true set-ranks are covered together with the
average normalised interval length ``1 - R_hat``. Coverage is therefore
averaged over the prior on ``mu``.

Grids are read from plain key=value config files::

    [defaults]
    alpha = 0.1
    center_draws = 1000
    seed = 20190101

    [cell tukey-n10]
    tau = 0.5
    n = 10
    method = tukey
    rescaled = false

Section names starting with ``cell`` become cells; ``[grid ...]`` sections
expand comma-separated ``tau``, ``n``, ``method`` and ``rescaled`` values into
their product; ``[sweep ...]`` sections describe epsilon sweeps.
"""

from __future__ import annotations

import configparser
import itertools
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

import numpy as np

from . import rng
from .core import Method, set_rank_bounds
from .errors import InvalidInput, RankGaugeError, ResolutionExhausted
from .rankability import efficiency
from .rescaler import (
    CoverageEstimate,
    MethodSettings,
    OrderingKind,
    epsilon_sweep,
    rescale_alpha,
    sigma_ordering,
)
from .studentized_range import DEFAULT_B, CriticalValues
from .tukey import rank_bounds
from .zhang import RankSimulation

_ZHANG_TASK = 32


@dataclass(frozen=True)
class SimulationSpec:
    tau: float
    n: int
    alpha: float = 0.1
    method: Method = Method.TUKEY
    rescaled: bool = False
    center_draws: int = 1000
    seed: int = 0
    zhang_K: int = 10_000
    tukey_B: int = DEFAULT_B
    rescale_R: int = 10_000
    rescale_seed: int = 1
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))
        if not self.tau > 0:
            raise InvalidInput("tau must be > 0")
        if self.n < 1 or self.center_draws < 1 or self.zhang_K < 1 or self.tukey_B < 1 or self.rescale_R < 1:
            raise InvalidInput("counts must be positive")
        if not 0 < self.alpha < 1:
            raise InvalidInput("alpha must lie in (0, 1)")

    @property
    def label(self) -> str:
        return self.name or f"tau={self.tau:g} n={self.n} {self.method.value}{' rescaled' if self.rescaled else ''}"

    @property
    def settings(self) -> MethodSettings:
        return MethodSettings(K=self.zhang_K, B=self.tukey_B)


@dataclass(frozen=True)
class CellResult:
    spec: SimulationSpec
    coverage: CoverageEstimate
    efficiency: float
    efficiency_se: float
    level: float


def _draw_cell_data(spec: SimulationSpec) -> tuple[np.ndarray, np.ndarray]:
    mu = np.empty((spec.center_draws, spec.n))
    y = np.empty_like(mu)
    for b, s, e in rng.blocks(spec.center_draws):
        g = rng.stream(spec.seed, rng.TAG_CENTERS, b)
        mu[s:e] = spec.tau * g.standard_normal((e - s, spec.n))
        y[s:e] = mu[s:e] + g.standard_normal((e - s, spec.n))
    return mu, y


def _zhang_cell_task(task):
    mu, y, first, level, settings, seed = task
    out = np.empty((mu.shape[0], 2))
    sigma = np.ones(mu.shape[1])
    for r in range(mu.shape[0]):
        sim = RankSimulation.from_data(y[r], sigma, settings.K, seed, key=(rng.TAG_ZHANG_REPLICATE, first + r))
        lo, hi, _ = sim.simultaneous(level, settings.precision, settings.maxiter)
        tl, tu = set_rank_bounds(mu[r])
        out[r] = np.all((lo <= tl) & (hi >= tu)), efficiency(lo, hi)
    return out


def _tukey_cell_task(task):
    mu, y, q = task
    sigma = np.ones(mu.shape[1])
    L, U = rank_bounds(y, sigma, q)
    out = np.empty((mu.shape[0], 2))
    for r in range(mu.shape[0]):
        tl, tu = set_rank_bounds(mu[r])
        out[r] = np.all((L[r] <= tl) & (U[r] >= tu)), efficiency(L[r], U[r])
    return out


def run_cell(spec: SimulationSpec, alpha_tilde: float | None = None, workers: int | None = None) -> CellResult:
    """Coverage and efficiency for one cell.

    For rescaled cells ``alpha_tilde`` is used when given, otherwise it is
    computed here with the rescaler.
    """
    level = spec.alpha
    if spec.rescaled:
        if alpha_tilde is None:
            alpha_tilde = rescale_alpha(
                spec.n, 1.0, spec.alpha, spec.method, spec.rescale_R, spec.rescale_seed,
                settings=spec.settings, workers=workers,
            ).alpha_tilde
        level = alpha_tilde
    mu, y = _draw_cell_data(spec)
    if spec.n < 2:
        raise InvalidInput("simulation cells need n >= 2")
    if spec.method is Method.TUKEY:
        q = CriticalValues(np.ones(spec.n), spec.tukey_B, 0, workers=workers)(level)
        tasks = [(mu[s:e], y[s:e], q) for _, s, e in rng.blocks(spec.center_draws, 1024)]
        rows = np.concatenate(rng.pmap(_tukey_cell_task, tasks, workers))
    else:
        tasks = [
            (mu[s:e], y[s:e], s, level, spec.settings, spec.seed)
            for _, s, e in rng.blocks(spec.center_draws, _ZHANG_TASK)
        ]
        rows = np.concatenate(rng.pmap(_zhang_cell_task, tasks, workers))
    hits = int(rows[:, 0].sum())
    eff = rows[:, 1]
    se = float(eff.std(ddof=1) / math.sqrt(eff.size)) if eff.size > 1 else float("nan")
    cov = CoverageEstimate.from_hits(hits, spec.center_draws, spec.seed, level)
    return CellResult(spec, cov, float(eff.mean()), se, level)


# ---------------------------------------------------------------------------
# tables


@dataclass
class TableReport:
    rows: list[dict] = field(default_factory=list)
    alpha_tilde: dict[str, float | str] = field(default_factory=dict)

    TSV_COLUMNS = (
        "name", "tau", "n", "method", "rescaled", "alpha", "level", "status",
        "coverage", "coverage_se", "efficiency", "efficiency_se", "center_draws", "seed",
    )

    def to_tsv(self) -> str:
        lines = ["\t".join(self.TSV_COLUMNS)]
        for row in self.rows:
            lines.append("\t".join(_fmt(row.get(c, "")) for c in self.TSV_COLUMNS))
        return "\n".join(lines) + "\n"

    def to_json(self) -> str:
        return json.dumps({"cells": self.rows, "alpha_tilde": self.alpha_tilde}, indent=2, sort_keys=True) + "\n"


def _fmt(v) -> str:
    if isinstance(v, float):
        return "" if math.isnan(v) else f"{v:.6g}"
    if isinstance(v, bool):
        return "true" if v else "false"
    return str(v)


def _base_row(spec: SimulationSpec) -> dict:
    return {
        "name": spec.label,
        "tau": spec.tau,
        "n": spec.n,
        "method": spec.method.value,
        "rescaled": spec.rescaled,
        "alpha": spec.alpha,
        "center_draws": spec.center_draws,
        "seed": spec.seed,
    }


def run_table(grid: Iterable[SimulationSpec], workers: int | None = None) -> TableReport:
    """Run every cell; failures are recorded per cell and do not stop the grid.

    Rescaled levels are computed once per (n, method, alpha, K) and cached in
    the report.
    """
    report = TableReport()
    cache: dict[tuple, float | RankGaugeError] = {}
    for spec in grid:
        row = _base_row(spec)
        try:
            alpha_tilde = None
            if spec.rescaled:
                key = (spec.n, spec.method.value, spec.alpha, spec.zhang_K if spec.method is Method.ZHANG else 0,
                       spec.rescale_R, spec.rescale_seed)
                if key not in cache:
                    try:
                        cache[key] = rescale_alpha(
                            spec.n, 1.0, spec.alpha, spec.method, spec.rescale_R, spec.rescale_seed,
                            settings=spec.settings, workers=workers,
                        ).alpha_tilde
                    except RankGaugeError as exc:
                        cache[key] = exc
                label = f"n={spec.n} {spec.method.value} alpha={spec.alpha:g}"
                got = cache[key]
                report.alpha_tilde[label] = got if isinstance(got, float) else "infeasible"
                if isinstance(got, RankGaugeError):
                    raise got
                alpha_tilde = got
            res = run_cell(spec, alpha_tilde, workers)
            row.update(
                level=res.level,
                status="ok",
                coverage=res.coverage.p_hat,
                coverage_se=res.coverage.std_error,
                efficiency=res.efficiency,
                efficiency_se=res.efficiency_se,
            )
        except ResolutionExhausted as exc:
            row.update(level=float("nan"), status="infeasible", message=str(exc))
        except RankGaugeError as exc:
            row.update(level=float("nan"), status="error", message=str(exc))
        report.rows.append(row)
    return report


# ---------------------------------------------------------------------------
# sweeps (coverage along eps * mu)


@dataclass(frozen=True)
class SweepSpec:
    name: str
    n: int = 10
    alpha: float = 0.1
    method: Method = Method.TUKEY
    rescaled: bool = False
    eps_min: float = -1.0
    eps_max: float = 1.0
    eps_step: float = 0.1
    sigma: str = "equal"  # "equal" or "inverse" (1/n, ..., 1)
    ordering: str = "ascending"
    replicates: int = 1000
    seed: int = 0
    zhang_K: int = 10_000
    tukey_B: int = DEFAULT_B
    rescale_R: int = 10_000
    rescale_seed: int = 1

    def __post_init__(self):
        object.__setattr__(self, "method", Method.parse(self.method))

    @property
    def grid(self) -> list[float]:
        steps = int(round((self.eps_max - self.eps_min) / self.eps_step))
        return [round(self.eps_min + k * self.eps_step, 10) for k in range(steps + 1)]

    def sigma_vector(self) -> np.ndarray:
        if self.sigma == "equal":
            base = np.ones(self.n)
        elif self.sigma == "inverse":
            base = 1.0 / np.arange(self.n, 0, -1)
        else:
            raise InvalidInput(f"unknown sigma profile {self.sigma!r}")
        return sigma_ordering(base, OrderingKind(self.ordering)).apply(base)


def run_sweep(spec: SweepSpec, workers: int | None = None) -> list[dict]:
    settings = MethodSettings(K=spec.zhang_K, B=spec.tukey_B)
    sigma = spec.sigma_vector()
    level = spec.alpha
    if spec.rescaled:
        level = rescale_alpha(spec.n, sigma, spec.alpha, spec.method, spec.rescale_R, spec.rescale_seed,
                              settings=settings, workers=workers).alpha_tilde
    mu_base = np.arange(1, spec.n + 1, dtype=float)
    rows = []
    for eps, est in epsilon_sweep(mu_base, sigma, level, spec.grid, spec.method, spec.replicates, spec.seed, settings, workers):
        rows.append({"sweep": spec.name, "epsilon": eps, "level": level, "coverage": est.p_hat, "se": est.std_error})
    return rows


# ---------------------------------------------------------------------------
# config files


_BOOL = {"true": True, "yes": True, "1": True, "false": False, "no": False, "0": False}


def _coerce(key: str, value: str):
    value = value.strip()
    if key in {"n", "center_draws", "seed", "zhang_K", "tukey_B", "rescale_R", "rescale_seed", "replicates"}:
        return int(float(value))
    if key in {"tau", "alpha", "eps_min", "eps_max", "eps_step"}:
        return float(value)
    if key == "rescaled":
        try:
            return _BOOL[value.lower()]
        except KeyError:
            raise InvalidInput(f"bad boolean {value!r}") from None
    return value


def _split(value: str) -> list[str]:
    return [v.strip() for v in value.split(",") if v.strip()]


@dataclass
class SimulationConfig:
    cells: list[SimulationSpec] = field(default_factory=list)
    sweeps: list[SweepSpec] = field(default_factory=list)


def parse_config(text: str) -> SimulationConfig:
    parser = configparser.ConfigParser(interpolation=None, default_section="defaults")
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise InvalidInput(f"bad config: {exc}") from exc
    defaults = {k: v for k, v in parser.defaults().items()}
    out = SimulationConfig()
    cell_keys = {f for f in SimulationSpec.__dataclass_fields__}
    sweep_keys = {f for f in SweepSpec.__dataclass_fields__}
    try:
        for section in parser.sections():
            kind, _, name = section.partition(" ")
            raw = dict(parser.items(section))
            if kind == "cell":
                kw = {k: _coerce(k, v) for k, v in raw.items() if k in cell_keys}
                _reject_unknown(raw, cell_keys | set(defaults), section)
                out.cells.append(SimulationSpec(name=name.strip(), **kw))
            elif kind == "grid":
                _reject_unknown(raw, cell_keys | set(defaults), section)
                axes = {k: _split(raw[k]) for k in ("tau", "n", "method", "rescaled") if k in raw}
                fixed = {k: _coerce(k, v) for k, v in raw.items() if k in cell_keys and k not in axes}
                names = list(axes)
                for combo in itertools.product(*(axes[k] for k in names)):
                    kw = dict(fixed)
                    kw.update({k: _coerce(k, v) for k, v in zip(names, combo)})
                    out.cells.append(SimulationSpec(**kw))
            elif kind == "sweep":
                _reject_unknown(raw, sweep_keys | set(defaults), section)
                kw = {k: _coerce(k, v) for k, v in raw.items() if k in sweep_keys and k != "name"}
                out.sweeps.append(SweepSpec(name=name.strip() or section, **kw))
            else:
                raise InvalidInput(f"unknown section [{section}]")
    except (TypeError, ValueError) as exc:
        raise InvalidInput(f"bad config: {exc}") from exc
    return out


def _reject_unknown(raw: dict, allowed: set, section: str):
    extra = set(raw) - allowed
    if extra:
        raise InvalidInput(f"unknown keys in [{section}]: {', '.join(sorted(extra))}")


def load_config(path: str | Path) -> SimulationConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))
