"""Monte-Carlo sweeps: random games, batched dynamics, bootstrap summaries, figure CSVs.

Seeding is positional. A game's geometry depends only on
(master_seed, n, k, game index), so every ranking and every lambda in a sweep
sees the same initial documents and information need. Each simulation then
gets its own stream from the game key plus the ranking and lambda.
"""

from __future__ import annotations

import csv
import io
import json
import math
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .dynamics import DynamicsConfig, SimulationTrace, run_dynamic
from .errors import InvalidConfigError, InvalidInputError, UnsupportedConfigurationError
from .model import PublishersGame
from .ranking import RankingSpec

log = logging.getLogger(__name__)

CSV_HEADER = ["figure", "x_name", "x_value", "ranking", "metric", "mean", "ci_lo", "ci_hi", "n_converged", "n_total"]
METRICS = ("convergence_rate", "publishers_welfare", "users_welfare")
RANKING_CODES = {"prp": 0, "linear": 1, "softmax": 2, "random": 3}
_METRIC_CODES = {m: i for i, m in enumerate(METRICS)}

DEFAULT_LAMBDAS = tuple(round(0.1 * j, 1) for j in range(1, 21))
DEFAULT_KS = (2, 4, 8, 16, 32)


def sample_game(n: int, k: int, lam: float, ranking: RankingSpec | str, rng: np.random.Generator) -> PublishersGame:
    """Initial documents then information need, every coordinate iid Uniform[0, 1]."""
    spec = ranking if isinstance(ranking, RankingSpec) else RankingSpec(ranking)
    x0 = rng.random((n, k))
    xs = rng.random(k)
    return PublishersGame(x0, xs, lam, spec)


def bootstrap_ci(samples: Sequence[float], B: int, confidence: float, rng: np.random.Generator) -> tuple[float, float]:
    """Percentile bootstrap interval for the mean."""
    x = np.asarray(samples, dtype=float)
    if x.size == 0:
        raise InvalidInputError("bootstrap needs at least one sample")
    if B < 1 or not 0 < confidence < 1:
        raise InvalidConfigError("need B >= 1 and confidence in (0, 1)")
    means = x[rng.integers(0, x.size, size=(B, x.size))].mean(axis=1)
    alpha = (1.0 - confidence) / 2.0
    lo, hi = np.quantile(means, [alpha, 1.0 - alpha])
    # the mean of a resample can't leave the sample range; clip float noise
    lo, hi = np.clip([lo, hi], x.min(), x.max())
    return float(lo), float(hi)


@dataclass(frozen=True)
class ExperimentConfig:
    """Sweep parameters. ``max_iters=None`` means 100 (discrete) or 100*k (smooth)."""

    n: int = 2
    k: int = 2
    lam: float = 1.0
    lambdas: tuple[float, ...] = DEFAULT_LAMBDAS
    ks: tuple[int, ...] = DEFAULT_KS
    rankings: tuple[str, ...] = ("prp", "linear", "softmax")
    mode: str = "discrete"
    games_per_cell: int = 200
    bootstrap: int = 500
    confidence: float = 0.95
    master_seed: int = 42
    epsilon: float = 1e-6
    max_iters: int | None = None
    boundary: str = "clamp"
    gradient: str = "exact"
    jobs: int = 1

    def __post_init__(self):
        if self.games_per_cell < 1:
            raise InvalidConfigError("games_per_cell must be >= 1")
        if self.bootstrap < 1:
            raise InvalidConfigError("bootstrap sample count must be >= 1")
        if not 0 < self.confidence < 1:
            raise InvalidConfigError("confidence must lie in (0, 1)")
        if self.n < 2 or self.k < 1:
            raise InvalidConfigError("need n >= 2 and k >= 1")
        if not self.rankings:
            raise InvalidConfigError("at least one ranking is required")
        object.__setattr__(self, "rankings", tuple(RankingSpec(r).kind for r in self.rankings))
        object.__setattr__(self, "lambdas", tuple(float(v) for v in self.lambdas))
        object.__setattr__(self, "ks", tuple(int(v) for v in self.ks))
        # validate the dynamics parameters eagerly
        self.dynamics(2)
        if self.mode == "smooth" and "prp" in self.rankings:
            raise UnsupportedConfigurationError("smooth dynamics need a differentiable ranking (not PRP)")

    def dynamics(self, seed: int) -> DynamicsConfig:
        return DynamicsConfig(
            mode=self.mode, epsilon=self.epsilon, max_iters=self.max_iters, boundary=self.boundary,
            gradient=self.gradient, seed=seed,
        )

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lambdas"] = list(self.lambdas)
        d["ks"] = list(self.ks)
        d["rankings"] = list(self.rankings)
        return d


@dataclass(frozen=True)
class Cell:
    """One point of a sweep: every ranking is run on the same games."""

    figure: str
    x_name: str
    x_value: float
    n: int
    k: int
    lam: float


@dataclass
class RunRecord:
    game_index: int
    ranking: str
    converged: bool
    iters: int
    publishers_welfare: float
    users_welfare: float


@dataclass
class SummaryRow:
    figure: str
    x_name: str
    x_value: float
    ranking: str
    metric: str
    mean: float | None
    ci_lo: float | None
    ci_hi: float | None
    n_converged: int
    n_total: int

    def csv_fields(self) -> list[str]:
        def fmt(v):
            return "" if v is None else repr(float(v))

        x = self.x_value
        x_str = str(int(x)) if self.x_name == "k" else repr(float(x))
        return [
            self.figure, self.x_name, x_str, self.ranking, self.metric,
            fmt(self.mean), fmt(self.ci_lo), fmt(self.ci_hi), str(self.n_converged), str(self.n_total),
        ]


@dataclass
class ExperimentSummary:
    rows: list[SummaryRow] = field(default_factory=list)
    runs: list[dict] = field(default_factory=list)

    def extend(self, other: ExperimentSummary) -> None:
        self.rows.extend(other.rows)
        self.runs.extend(other.runs)

    def get(self, x_value, ranking: str, metric: str) -> SummaryRow:
        for r in self.rows:
            if r.x_value == x_value and r.ranking == ranking and r.metric == metric:
                return r
        raise KeyError((x_value, ranking, metric))

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in self.rows:
            w.writerow(r.csv_fields())
        return buf.getvalue()

    def write_csv(self, path: str | Path) -> Path:
        path = Path(path)
        path.write_text(self.to_csv())
        return path

    def write_runs(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w") as fh:
            for rec in self.runs:
                fh.write(json.dumps(rec) + "\n")
        return path


def _game_seed(config: ExperimentConfig, cell: Cell, g: int) -> np.random.SeedSequence:
    return np.random.SeedSequence([config.master_seed, cell.n, cell.k, g])


def _sim_seed(config: ExperimentConfig, cell: Cell, g: int, ranking: str) -> np.random.SeedSequence:
    lam_key = int(round(cell.lam * 1_000_000))
    return np.random.SeedSequence([config.master_seed, cell.n, cell.k, g, RANKING_CODES[ranking], lam_key])


def _simulate(config: ExperimentConfig, cell: Cell, g: int, ranking: str) -> RunRecord:
    geometry = np.random.default_rng(_game_seed(config, cell, g))
    game = sample_game(cell.n, cell.k, cell.lam, ranking, geometry)
    seq = _sim_seed(config, cell, g, ranking)
    trace: SimulationTrace = run_dynamic(game, config.dynamics(int(seq.generate_state(1)[0])), np.random.default_rng(seq))
    return RunRecord(
        g, ranking, trace.converged, trace.iterations_used,
        trace.final_welfare.publishers_welfare, trace.final_welfare.users_welfare,
    )


def _map(fn, tasks: list[tuple], jobs: int) -> list:
    if jobs == 1 or len(tasks) < 2:
        return [fn(*t) for t in tasks]
    from joblib import Parallel, delayed

    return Parallel(n_jobs=jobs)(delayed(fn)(*t) for t in tasks)


def _boot_rng(config: ExperimentConfig, cell: Cell, ranking: str, metric: str) -> np.random.Generator:
    x_key = int(round(cell.x_value * 1_000_000))
    return np.random.default_rng(
        [config.master_seed, cell.n, cell.k, x_key, RANKING_CODES[ranking], _METRIC_CODES[metric], 7]
    )


def summarize_cell(config: ExperimentConfig, cell: Cell, records: list[RunRecord]) -> ExperimentSummary:
    """Reduce per-run records to summary rows.

    Welfare means use only the games on which every ranking in the cell
    converged, so rankings are compared on identical games.
    """
    by_rank: dict[str, dict[int, RunRecord]] = {}
    for rec in records:
        by_rank.setdefault(rec.ranking, {})[rec.game_index] = rec
    rankings = [r for r in config.rankings if r in by_rank]
    games = sorted({rec.game_index for rec in records})
    joint = [g for g in games if all(by_rank[r][g].converged for r in rankings)]
    out = ExperimentSummary()
    total = len(games)
    for r in rankings:
        recs = [by_rank[r][g] for g in games]
        flags = np.array([float(rec.converged) for rec in recs])
        n_conv = int(flags.sum())
        rate = n_conv / total
        lo, hi = bootstrap_ci(flags, config.bootstrap, config.confidence, _boot_rng(config, cell, r, "convergence_rate"))
        lo, hi = min(lo, rate), max(hi, rate)
        out.rows.append(
            SummaryRow(cell.figure, cell.x_name, cell.x_value, r, "convergence_rate", rate, lo, hi, n_conv, total)
        )
        for metric in ("publishers_welfare", "users_welfare"):
            vals = [getattr(by_rank[r][g], metric) for g in joint]
            if vals:
                lo, hi = bootstrap_ci(vals, config.bootstrap, config.confidence, _boot_rng(config, cell, r, metric))
                mean = math.fsum(vals) / len(vals)
                # a percentile interval can miss a skewed point estimate; report one that brackets it
                lo, hi = min(lo, mean), max(hi, mean)
            else:
                mean = lo = hi = None
            out.rows.append(SummaryRow(cell.figure, cell.x_name, cell.x_value, r, metric, mean, lo, hi, len(vals), total))
    for rec in records:
        out.runs.append(
            {"figure": cell.figure, cell.x_name: cell.x_value, "n": cell.n, "k": cell.k, "lambda": cell.lam, **asdict(rec)}
        )
    return out


def run_cell(config: ExperimentConfig, cell: Cell) -> ExperimentSummary:
    """Run ``games_per_cell`` games under every configured ranking and summarise."""
    tasks = [(config, cell, g, r) for g in range(config.games_per_cell) for r in config.rankings]
    records = _map(_simulate, tasks, config.jobs)
    summary = summarize_cell(config, cell, records)
    log.info(
        "%s %s=%s: %s",
        cell.figure, cell.x_name, cell.x_value,
        ", ".join(f"{row.ranking} conv={row.mean:.3f}" for row in summary.rows if row.metric == "convergence_rate"),
    )
    return summary


def sweep(config: ExperimentConfig, x_name: str, figure: str = "sweep") -> ExperimentSummary:
    """Sweep lambda (at ``config.k``) or k (at ``config.lam``)."""
    if x_name == "lambda":
        cells = [Cell(figure, "lambda", lam, config.n, config.k, lam) for lam in config.lambdas]
    elif x_name == "k":
        cells = [Cell(figure, "k", float(k), config.n, k, config.lam) for k in config.ks]
    else:
        raise InvalidConfigError(f"can only sweep 'lambda' or 'k', not {x_name!r}")
    out = ExperimentSummary()
    for cell in cells:
        out.extend(run_cell(config, cell))
    return out


def figure_configs(config: ExperimentConfig) -> dict[str, tuple[ExperimentConfig, str]]:
    """The three figure protocols derived from a base config (seed, sample sizes, grids)."""
    fig1 = replace(config, n=2, k=2, mode="discrete", rankings=("prp", "linear", "softmax"))
    fig2 = replace(config, n=2, lam=1.0, mode="smooth", rankings=("linear", "softmax"))
    fig3 = replace(fig2, lam=0.1)
    return {"fig1": (fig1, "lambda"), "fig2": (fig2, "k"), "fig3": (fig3, "k")}


def reproduce_figures(
    config: ExperimentConfig, out_dir: str | Path | None = None, figures: Iterable[str] = ("fig1", "fig2", "fig3")
) -> dict[str, ExperimentSummary]:
    """Run the figure protocols; with ``out_dir`` write figN.csv and figN_runs.jsonl."""
    protocols = figure_configs(config)
    results = {}
    for name in figures:
        cfg, x_name = protocols[name]
        summary = sweep(cfg, x_name, figure=name)
        results[name] = summary
        if out_dir is not None:
            out = Path(out_dir)
            summary.write_csv(out / f"{name}.csv")
            summary.write_runs(out / f"{name}_runs.jsonl")
    return results
