"""Publishers game: data model, distances, relative relevance, utility and welfare.

Points live in the unit cube [0,1]^k. A game bundles the publishers' initial
documents, the information need and a ranking rule; everything here is a pure
function of immutable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import TYPE_CHECKING, Literal, Optional, Union

import numpy as np

from .errors import InvalidInputError, UnsupportedConfigurationError

if TYPE_CHECKING:
    from .ranking import RankingSpec

DistanceKind = Literal["sqeuclidean", "abs1d"]

# absolute tolerance for exact identities (sums, welfare identities)
IDENTITY_TOL = 1e-12


def _as_points(x, k: int | None = None, name: str = "point") -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if k is not None and arr.shape[-1] != k:
        raise InvalidInputError(f"{name} has dimension {arr.shape[-1]}, expected {k}")
    return arr


def _check_unit_cube(arr: np.ndarray, name: str) -> None:
    if not np.all(np.isfinite(arr)):
        raise InvalidInputError(f"{name} contains non-finite values")
    if np.any(arr < 0.0) or np.any(arr > 1.0):
        raise InvalidInputError(f"{name} has coordinates outside [0, 1]")


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr = np.array(arr, dtype=float, copy=True)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class DistanceSpec:
    """Distance on [0,1]^k bounded by 1.

    ``sqeuclidean`` is ||x - y||^2 / c; ``normalizer=None`` means c = k, the
    largest squared distance in the unit cube. ``abs1d`` is |x - y| for k = 1.
    """

    kind: DistanceKind = "sqeuclidean"
    normalizer: float | None = None

    def __post_init__(self):
        if self.kind not in ("sqeuclidean", "abs1d"):
            raise InvalidInputError(f"unknown distance kind {self.kind!r}")
        if self.normalizer is not None and not self.normalizer > 0:
            raise InvalidInputError("distance normalizer must be positive")

    def c(self, k: int) -> float:
        return float(k) if self.normalizer is None else float(self.normalizer)

    def pairwise(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """Vectorised distance over the last axis (broadcasts)."""
        diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
        if self.kind == "abs1d":
            if diff.shape[-1] != 1:
                raise InvalidInputError("abs1d distance is defined for k = 1 only")
            return np.abs(diff[..., 0])
        return np.einsum("...i,...i->...", diff, diff) / self.c(diff.shape[-1])

    def gradient(self, x: np.ndarray, y: np.ndarray) -> np.ndarray:
        """d/dx of d(x, y); only the squared Euclidean distance is smooth."""
        if self.kind != "sqeuclidean":
            raise UnsupportedConfigurationError(f"{self.kind} distance has no gradient")
        x = np.asarray(x, dtype=float)
        return 2.0 * (x - np.asarray(y, dtype=float)) / self.c(x.shape[-1])


SQEUCLIDEAN = DistanceSpec("sqeuclidean")
ABS1D = DistanceSpec("abs1d")


def distance(spec: DistanceSpec, x, y) -> float:
    """Distance between two points of equal dimension."""
    x = _as_points(x, name="x")
    y = _as_points(y, name="y")
    if x.ndim != 1 or y.ndim != 1 or x.shape != y.shape:
        raise InvalidInputError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return float(spec.pairwise(x, y))


@dataclass(frozen=True)
class StrategyProfile:
    """One document per publisher, stored as an (n, k) read-only array."""

    docs: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.docs, dtype=float)
        if arr.ndim == 1:
            arr = arr.reshape(-1, 1)
        if arr.ndim != 2:
            raise InvalidInputError("profile must be an (n, k) array")
        _check_unit_cube(arr, "profile")
        object.__setattr__(self, "docs", _frozen(arr))

    @property
    def n(self) -> int:
        return self.docs.shape[0]

    def replace(self, i: int, doc) -> StrategyProfile:
        docs = np.array(self.docs)
        docs[i] = doc
        return StrategyProfile(docs)

    def __eq__(self, other):
        return isinstance(other, StrategyProfile) and np.array_equal(self.docs, other.docs)

    def __hash__(self):
        return hash(self.docs.tobytes())


ProfileLike = Union[StrategyProfile, np.ndarray, list]


@dataclass(frozen=True, eq=False)
class PublishersGame:
    """Immutable game description.

    ``ranking`` is a :class:`pubgame.ranking.RankingSpec`; a linear slope of
    ``None`` resolves to 1/n.
    """

    initial_docs: np.ndarray
    info_need: np.ndarray
    lam: float
    ranking: Optional[RankingSpec] = None
    distance: DistanceSpec = field(default_factory=DistanceSpec)

    def __post_init__(self):
        from .ranking import RankingSpec, validate_slope

        x0 = np.asarray(self.initial_docs, dtype=float)
        if x0.ndim == 1:
            x0 = x0.reshape(-1, 1)
        if x0.ndim != 2:
            raise InvalidInputError("initial_docs must be an (n, k) array")
        n, k = x0.shape
        if n < 2:
            raise InvalidInputError("a publishers game needs n >= 2")
        if k < 1:
            raise InvalidInputError("k must be >= 1")
        xs = _as_points(self.info_need, k, "info_need")
        if xs.ndim != 1:
            raise InvalidInputError("info_need must be a single point")
        _check_unit_cube(x0, "initial_docs")
        _check_unit_cube(xs, "info_need")
        if not (np.isfinite(self.lam) and self.lam > 0):
            raise InvalidInputError("lambda must be positive")
        if self.distance.kind == "abs1d" and k != 1:
            raise InvalidInputError("abs1d distance requires k = 1")
        ranking = self.ranking if self.ranking is not None else RankingSpec("linear")
        if ranking.kind == "linear":
            validate_slope(ranking.slope_for(n), n)
        object.__setattr__(self, "initial_docs", _frozen(x0))
        object.__setattr__(self, "info_need", _frozen(xs))
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "ranking", ranking)

    @property
    def n(self) -> int:
        return self.initial_docs.shape[0]

    @property
    def k(self) -> int:
        return self.initial_docs.shape[1]

    def with_ranking(self, ranking) -> PublishersGame:
        return PublishersGame(self.initial_docs, self.info_need, self.lam, ranking, self.distance)

    def to_dict(self) -> dict:
        r = self.ranking
        return {
            "n": self.n,
            "k": self.k,
            "lambda": self.lam,
            "distance": {"kind": self.distance.kind, "normalizer": self.distance.normalizer},
            "initial_docs": self.initial_docs.tolist(),
            "info_need": self.info_need.tolist(),
            "ranking": {"kind": r.kind, "slope": r.slope, "tie_tolerance": r.tie_tolerance},
        }

    @classmethod
    def from_dict(cls, d: dict) -> PublishersGame:
        from .ranking import RankingSpec

        game = cls(
            initial_docs=d["initial_docs"],
            info_need=d["info_need"],
            lam=d["lambda"],
            ranking=RankingSpec(**d.get("ranking", {})),
            distance=DistanceSpec(**d.get("distance", {})),
        )
        if ("n" in d and d["n"] != game.n) or ("k" in d and d["k"] != game.k):
            raise InvalidInputError("n/k do not match the document arrays")
        return game

    def initial_profile(self) -> StrategyProfile:
        return StrategyProfile(self.initial_docs)

    # vectorised helpers used by the hot loops
    def dstar(self, docs: np.ndarray) -> np.ndarray:
        """Distance of each document (last axis = coordinates) to the information need."""
        return self.distance.pairwise(docs, self.info_need)

    def d0(self, docs: np.ndarray, i: int | None = None) -> np.ndarray:
        """Distance to initial documents: row-wise for a profile, or to publisher i's."""
        if i is None:
            return self.distance.pairwise(docs, self.initial_docs)
        return self.distance.pairwise(docs, self.initial_docs[i])

    def docs_of(self, profile: ProfileLike) -> np.ndarray:
        docs = profile.docs if isinstance(profile, StrategyProfile) else StrategyProfile(profile).docs
        if docs.shape != self.initial_docs.shape:
            raise InvalidInputError(
                f"profile shape {docs.shape} does not match game ({self.n}, {self.k})"
            )
        return docs


def relative_relevance_from_dstar(dstar: np.ndarray) -> np.ndarray:
    """Mean distance of the others minus own distance, along the last axis."""
    dstar = np.asarray(dstar, dtype=float)
    n = dstar.shape[-1]
    total = dstar.sum(axis=-1, keepdims=True)
    return (total - dstar) / (n - 1) - dstar


def relative_relevance(game: PublishersGame, profile: ProfileLike) -> np.ndarray:
    return relative_relevance_from_dstar(game.dstar(game.docs_of(profile)))


def utility(game: PublishersGame, profile: ProfileLike) -> np.ndarray:
    """Winning probability minus lambda times the distance to the initial document."""
    from .ranking import rank_dstar

    docs = game.docs_of(profile)
    probs = rank_dstar(game.ranking, game.dstar(docs))
    return probs - game.lam * game.d0(docs)


@dataclass(frozen=True)
class WelfareReport:
    publishers_welfare: float
    users_welfare: float
    per_publisher_utility: tuple[float, ...]


def welfare(game: PublishersGame, profile: ProfileLike) -> WelfareReport:
    docs = game.docs_of(profile)
    d0 = game.d0(docs)
    dstar = game.dstar(docs)
    u = utility(game, docs)
    return WelfareReport(
        publishers_welfare=float(1.0 - game.lam * d0.sum()),
        users_welfare=float(-(dstar * d0).sum()),
        per_publisher_utility=tuple(float(v) for v in u),
    )
