"""Restricted better-response dynamics (discrete directions or utility gradient).

Each iteration finds the publishers that can gain at least ``epsilon`` with a
restricted best response, draws one of them uniformly, then draws one of its
tied best responses uniformly. The run stops once nobody can gain ``epsilon``
or after ``max_iters`` moves.
"""

from __future__ import annotations

import itertools
import json
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import IO, Literal, NamedTuple

import numpy as np

from .errors import InvalidConfigError, InvalidInputError, UnsupportedConfigurationError
from .model import (
    PublishersGame,
    ProfileLike,
    StrategyProfile,
    WelfareReport,
    welfare,
)
from .ranking import rank_dstar, win_prob_sensitivity

Mode = Literal["discrete", "smooth"]
Boundary = Literal["clamp", "discard"]
# "exact": true partial derivative of u_i in x_i.
# "own-relevance": differentiates r_i through nu_i alone, holding the other
# nu_j fixed; for softmax this drops the factor n/(n-1). Sensitivity option only.
GradientRule = Literal["exact", "own-relevance"]

DEFAULT_STEP_SIZES = tuple(0.5**j for j in range(1, 11))
ARGMAX_TIE_TOL = 1e-12
MAX_DISCRETE_K = 12  # 3^k - 1 directions


def default_directions(k: int) -> np.ndarray:
    """Normalised nonzero vectors of {-1, 0, 1}^k, in lexicographic order."""
    if k > MAX_DISCRETE_K:
        raise InvalidConfigError(f"default direction set is 3^k - 1; k = {k} is too large")
    dirs = np.array([d for d in itertools.product((-1.0, 0.0, 1.0), repeat=k) if any(d)])
    return dirs / np.linalg.norm(dirs, axis=1, keepdims=True)


@dataclass(frozen=True)
class DynamicsConfig:
    """Parameters of one better-response run.

    ``max_iters=None`` resolves to 100 in discrete mode and 100*k in smooth
    mode; ``directions=None`` resolves to :func:`default_directions`.
    """

    mode: Mode = "discrete"
    epsilon: float = 1e-6
    max_iters: int | None = None
    step_sizes: tuple[float, ...] = DEFAULT_STEP_SIZES
    directions: tuple[tuple[float, ...], ...] | None = None
    boundary: Boundary = "clamp"
    seed: int = 0
    gradient: GradientRule = "exact"

    def __post_init__(self):
        if self.gradient not in ("exact", "own-relevance"):
            raise InvalidConfigError(f"unknown gradient rule {self.gradient!r}")
        if self.mode not in ("discrete", "smooth"):
            raise InvalidConfigError(f"unknown mode {self.mode!r}")
        if self.boundary not in ("clamp", "discard"):
            raise InvalidConfigError(f"unknown boundary rule {self.boundary!r}")
        if not self.epsilon > 0:
            raise InvalidConfigError("epsilon must be positive")
        if self.max_iters is not None and (int(self.max_iters) != self.max_iters or self.max_iters < 1):
            raise InvalidConfigError("max_iters must be a positive integer")
        steps = tuple(float(s) for s in self.step_sizes)
        if not steps or any(not s > 0 for s in steps):
            raise InvalidConfigError("step sizes must be a nonempty set of positive reals")
        object.__setattr__(self, "step_sizes", steps)
        if self.directions is not None:
            dirs = np.atleast_2d(np.asarray(self.directions, dtype=float))
            if dirs.size == 0:
                raise InvalidConfigError("direction set must be nonempty")
            if np.any(np.abs(np.linalg.norm(dirs, axis=1) - 1.0) > 1e-9):
                raise InvalidConfigError("directions must have unit Euclidean norm")
            object.__setattr__(self, "directions", tuple(tuple(map(float, d)) for d in dirs))

    def iters_for(self, k: int) -> int:
        if self.max_iters is not None:
            return int(self.max_iters)
        return 100 if self.mode == "discrete" else 100 * k

    def directions_for(self, k: int) -> np.ndarray:
        if self.directions is None:
            return default_directions(k)
        dirs = np.asarray(self.directions, dtype=float)
        if dirs.shape[1] != k:
            raise InvalidConfigError(f"directions have dimension {dirs.shape[1]}, game has k = {k}")
        return dirs

    def to_dict(self) -> dict:
        d = asdict(self)
        d["step_sizes"] = list(self.step_sizes)
        d["directions"] = None if self.directions is None else [list(v) for v in self.directions]
        return d


class BestResponse(NamedTuple):
    points: np.ndarray  # (m, k) distinct tied maximisers
    value: float  # utility at the maximisers
    gain: float  # value minus current utility


def _check_compatible(game: PublishersGame, config: DynamicsConfig) -> None:
    if config.mode == "smooth":
        if not game.ranking.differentiable:
            raise UnsupportedConfigurationError("smooth dynamics need a differentiable ranking (not PRP)")
        if game.distance.kind != "sqeuclidean":
            raise UnsupportedConfigurationError("smooth dynamics need the squared Euclidean distance")


def candidate_utilities(game: PublishersGame, docs: np.ndarray, i: int, cands: np.ndarray) -> np.ndarray:
    """Utility of publisher i at each row of ``cands`` with the others fixed at ``docs``."""
    ds = np.broadcast_to(game.dstar(docs), (len(cands), game.n)).copy()
    ds[:, i] = game.dstar(cands)
    return rank_dstar(game.ranking, ds)[:, i] - game.lam * game.d0(cands, i)


def _gradient(game: PublishersGame, docs: np.ndarray, i: int, rule: GradientRule = "exact") -> np.ndarray:
    sens = win_prob_sensitivity(game.ranking, game.dstar(docs), i)
    if rule == "own-relevance" and game.ranking.kind == "softmax":
        sens *= (game.n - 1) / game.n
    dist = game.distance
    return sens * dist.gradient(docs[i], game.info_need) - game.lam * dist.gradient(docs[i], game.initial_docs[i])


def utility_gradient(game: PublishersGame, profile: ProfileLike, i: int) -> np.ndarray:
    """Analytic gradient of publisher i's utility with respect to its own document."""
    if not game.ranking.differentiable:
        raise UnsupportedConfigurationError("the PRP ranking has no gradient")
    docs = game.docs_of(profile)
    if not 0 <= i < game.n:
        raise InvalidInputError(f"publisher index {i} out of range")
    return _gradient(game, docs, i)


def _candidates(game: PublishersGame, docs: np.ndarray, i: int, config: DynamicsConfig, dirs) -> np.ndarray:
    steps = np.asarray(config.step_sizes)
    if config.mode == "discrete":
        moves = (steps[:, None, None] * dirs[None, :, :]).reshape(-1, game.k)
    else:
        moves = steps[:, None] * _gradient(game, docs, i, config.gradient)[None, :]
    cands = docs[i] + moves
    if config.boundary == "clamp":
        return np.clip(cands, 0.0, 1.0)
    return cands[np.all((cands >= 0.0) & (cands <= 1.0), axis=1)]


def _best_response(game, docs, i, config, dirs, current: float) -> BestResponse:
    cands = _candidates(game, docs, i, config, dirs)
    if len(cands) == 0:
        return BestResponse(np.empty((0, game.k)), current, 0.0)
    u = candidate_utilities(game, docs, i, cands)
    best = u.max()
    tied = np.unique(cands[u >= best - ARGMAX_TIE_TOL], axis=0)
    return BestResponse(tied, float(best), float(best - current))


def _current_utilities(game: PublishersGame, docs: np.ndarray) -> np.ndarray:
    return rank_dstar(game.ranking, game.dstar(docs)) - game.lam * game.d0(docs)


def restricted_best_response(
    game: PublishersGame, profile: ProfileLike, i: int, config: DynamicsConfig
) -> BestResponse:
    """Maximisers of publisher i's utility over the allowed moves from its current document.

    The argmax is total: it is returned even when no move beats staying put.
    """
    _check_compatible(game, config)
    docs = game.docs_of(profile)
    if not 0 <= i < game.n:
        raise InvalidInputError(f"publisher index {i} out of range")
    dirs = config.directions_for(game.k) if config.mode == "discrete" else None
    return _best_response(game, docs, i, config, dirs, float(_current_utilities(game, docs)[i]))


def _all_best_responses(game, docs, config, dirs) -> list[BestResponse]:
    u = _current_utilities(game, docs)
    return [_best_response(game, docs, i, config, dirs, float(u[i])) for i in range(game.n)]


def non_optimal_publishers(game: PublishersGame, profile: ProfileLike, config: DynamicsConfig) -> list[int]:
    """Publishers whose restricted best response gains at least epsilon."""
    _check_compatible(game, config)
    docs = game.docs_of(profile)
    dirs = config.directions_for(game.k) if config.mode == "discrete" else None
    return [i for i, br in enumerate(_all_best_responses(game, docs, config, dirs)) if br.gain >= config.epsilon]


@dataclass(frozen=True)
class Step:
    t: int
    mover: int
    old: tuple[float, ...]
    new: tuple[float, ...]
    gain: float


@dataclass
class SimulationTrace:
    game: PublishersGame
    config: DynamicsConfig
    steps: list[Step]
    final_profile: StrategyProfile
    converged: bool
    iterations_used: int
    final_welfare: WelfareReport
    meta: dict = field(default_factory=dict)

    def to_jsonl(self, fh: IO[str]) -> None:
        header = {"type": "header", "game": self.game.to_dict(), "config": self.config.to_dict(), **self.meta}
        fh.write(json.dumps(header) + "\n")
        for s in self.steps:
            fh.write(json.dumps({"t": s.t, "mover": s.mover, "old": list(s.old), "new": list(s.new), "gain": s.gain}) + "\n")
        final = {
            "converged": self.converged,
            "iters": self.iterations_used,
            "publishers_welfare": self.final_welfare.publishers_welfare,
            "users_welfare": self.final_welfare.users_welfare,
        }
        fh.write(json.dumps(final) + "\n")

    def write(self, path: str | Path) -> Path:
        path = Path(path)
        with path.open("w") as fh:
            self.to_jsonl(fh)
        return path


def read_trace(path: str | Path) -> dict:
    """Parse a JSON-lines trace into ``{"header", "steps", "final"}``."""
    lines = [json.loads(line) for line in Path(path).read_text().splitlines() if line.strip()]
    if len(lines) < 2 or lines[0].get("type") != "header":
        raise InvalidInputError(f"{path} is not a trace file")
    return {"header": lines[0], "steps": lines[1:-1], "final": lines[-1]}


def run_dynamic(
    game: PublishersGame, config: DynamicsConfig, rng: np.random.Generator | None = None
) -> SimulationTrace:
    """Run a better-response dynamic from the initial documents.

    Random draws per move: the mover first, then its new document.
    """
    _check_compatible(game, config)
    if rng is None:
        rng = np.random.default_rng(config.seed)
    dirs = config.directions_for(game.k) if config.mode == "discrete" else None
    docs = np.array(game.initial_docs)
    steps: list[Step] = []
    converged = False
    for t in range(1, config.iters_for(game.k) + 1):
        brs = _all_best_responses(game, docs, config, dirs)
        movers = [i for i, br in enumerate(brs) if br.gain >= config.epsilon]
        if not movers:
            converged = True
            break
        i = movers[rng.integers(len(movers))]
        br = brs[i]
        new = br.points[rng.integers(len(br.points))]
        steps.append(Step(t, i, tuple(docs[i].tolist()), tuple(new.tolist()), br.gain))
        docs[i] = new
    final = StrategyProfile(docs)
    return SimulationTrace(
        game=game,
        config=config,
        steps=steps,
        final_profile=final,
        converged=converged,
        iterations_used=len(steps),
        final_welfare=welfare(game, final),
    )
