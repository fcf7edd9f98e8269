"""Ranking functions: distribution over which publisher is ranked first.

All rankings depend on the profile only through the distances to the
information need, so the workhorse :func:`rank_dstar` takes an array of those
distances with publishers on the last axis and any number of leading batch
axes. The game/profile wrappers are thin.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .errors import InvalidConfigError, InvalidInputError, UnsupportedConfigurationError
from .model import PublishersGame, ProfileLike, relative_relevance_from_dstar

RankingKind = Literal["prp", "linear", "softmax", "random"]

_ALIASES = {
    "prp": "prp",
    "linear": "linear",
    "linear-rrp": "linear",
    "softmax": "softmax",
    "softmax-rrp": "softmax",
    "random": "random",
}

DEFAULT_TIE_TOLERANCE = 1e-12

# Switched off only by fault-injection tests of the verification table.
SLOPE_VALIDATION = True


def max_valid_slope(n: int) -> float:
    """Largest admissible slope of the linear ranking, 1/n."""
    if int(n) != n or n < 2:
        raise InvalidInputError(f"n must be an integer >= 2, got {n}")
    return 1.0 / n


def validate_slope(a: float, n: int) -> float:
    """Return ``a`` if the linear ranking a*nu + 1/n is a distribution for every profile."""
    bound = max_valid_slope(n)
    if SLOPE_VALIDATION and not (0.0 < a <= bound):
        raise InvalidConfigError(f"linear slope must lie in (0, 1/n] = (0, {bound}], got {a}")
    return float(a)


@dataclass(frozen=True)
class RankingSpec:
    kind: RankingKind = "linear"
    slope: float | None = None
    tie_tolerance: float = DEFAULT_TIE_TOLERANCE

    def __post_init__(self):
        kind = _ALIASES.get(str(self.kind).lower())
        if kind is None:
            raise InvalidConfigError(f"unknown ranking kind {self.kind!r}")
        object.__setattr__(self, "kind", kind)
        if self.slope is not None and kind != "linear":
            raise InvalidConfigError("slope only applies to the linear ranking")
        if self.tie_tolerance < 0:
            raise InvalidConfigError("tie_tolerance must be nonnegative")

    def slope_for(self, n: int) -> float:
        return 1.0 / n if self.slope is None else float(self.slope)

    @property
    def differentiable(self) -> bool:
        return self.kind in ("linear", "softmax", "random")


@dataclass(frozen=True)
class RankingDistribution:
    probs: np.ndarray

    def __post_init__(self):
        p = np.array(self.probs, dtype=float)
        if p.ndim != 1:
            raise InvalidInputError("a ranking distribution is a vector")
        if np.any(p < -1e-12) or np.any(p > 1 + 1e-12) or abs(p.sum() - 1.0) > 1e-9:
            raise InvalidInputError(f"not a probability vector: {p}")
        p.setflags(write=False)
        object.__setattr__(self, "probs", p)

    def __getitem__(self, i):
        return self.probs[i]

    def __len__(self):
        return len(self.probs)


def _prp(dstar: np.ndarray, tol: float) -> np.ndarray:
    best = dstar.min(axis=-1, keepdims=True)
    winners = dstar <= best + tol
    return winners / winners.sum(axis=-1, keepdims=True)


def _softmax(nu: np.ndarray) -> np.ndarray:
    z = np.exp(nu - nu.max(axis=-1, keepdims=True))
    return z / z.sum(axis=-1, keepdims=True)


def relevance_map(spec: RankingSpec, nu) -> np.ndarray:
    """The map from relative relevance to probabilities for the two RRP rankings."""
    nu = np.asarray(nu, dtype=float)
    n = nu.shape[-1]
    if spec.kind == "linear":
        return validate_slope(spec.slope_for(n), n) * nu + 1.0 / n
    if spec.kind == "softmax":
        return _softmax(nu)
    raise UnsupportedConfigurationError(f"{spec.kind} is not a relative-relevance ranking")


def rank_dstar(spec: RankingSpec, dstar) -> np.ndarray:
    """First-rank probabilities for distances-to-need ``dstar`` (publishers on the last axis)."""
    dstar = np.asarray(dstar, dtype=float)
    n = dstar.shape[-1]
    if spec.kind == "prp":
        return _prp(dstar, spec.tie_tolerance)
    if spec.kind == "random":
        return np.full(dstar.shape, 1.0 / n)
    return relevance_map(spec, relative_relevance_from_dstar(dstar))


def win_prob_sensitivity(spec: RankingSpec, dstar: np.ndarray, i: int) -> float:
    """Derivative of publisher i's win probability w.r.t. its own distance to the need.

    For the softmax ranking, moving d*_i shifts nu_i by -1 and every other
    nu_j by +1/(n-1), which gives -r_i (1 - r_i) n / (n - 1).
    """
    n = dstar.shape[-1]
    if spec.kind == "linear":
        return -spec.slope_for(n)
    if spec.kind == "softmax":
        r = _softmax(relative_relevance_from_dstar(dstar))[..., i]
        return -r * (1.0 - r) * n / (n - 1)
    if spec.kind == "random":
        return 0.0
    raise UnsupportedConfigurationError("the PRP ranking is not differentiable")


def rank(game: PublishersGame, profile: ProfileLike) -> RankingDistribution:
    """Evaluate the game's own ranking at ``profile``."""
    return RankingDistribution(rank_dstar(game.ranking, game.dstar(game.docs_of(profile))))


def _with_kind(game: PublishersGame, kind: str, **kw) -> RankingSpec:
    if game.ranking.kind == kind:
        return game.ranking
    return RankingSpec(kind, **kw)


def prp_rank(game: PublishersGame, profile: ProfileLike) -> RankingDistribution:
    spec = _with_kind(game, "prp")
    return RankingDistribution(rank_dstar(spec, game.dstar(game.docs_of(profile))))


def linear_rrp_rank(game: PublishersGame, profile: ProfileLike, slope: float | None = None) -> RankingDistribution:
    spec = RankingSpec("linear", slope) if slope is not None else _with_kind(game, "linear")
    return RankingDistribution(rank_dstar(spec, game.dstar(game.docs_of(profile))))


def softmax_rrp_rank(game: PublishersGame, profile: ProfileLike) -> RankingDistribution:
    return RankingDistribution(rank_dstar(RankingSpec("softmax"), game.dstar(game.docs_of(profile))))


def random_rank(game: PublishersGame, profile: ProfileLike | None = None) -> RankingDistribution:
    return RankingDistribution(np.full(game.n, 1.0 / game.n))
