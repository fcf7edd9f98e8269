"""Numerical checks of the game's structural properties.

* exact potential of the linear ranking and its unilateral-deviation identity;
* winner/loser probability ratios in the extreme profile;
* slope bounds of the linear ranking;
* exhaustive grid search for pure equilibria (the PRP instability oracle).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import ranking as _ranking
from .errors import InvalidConfigError, SearchBudgetError, UnsupportedConfigurationError
from .model import ABS1D, PublishersGame, ProfileLike, relative_relevance_from_dstar, utility
from .ranking import RankingSpec, rank_dstar

GRID_BUDGET = 10**8
POTENTIAL_TOL = 1e-9


def _require_linear(game: PublishersGame) -> float:
    if game.ranking.kind != "linear":
        raise UnsupportedConfigurationError(
            f"exact potential is only known for the linear ranking, got {game.ranking.kind!r}"
        )
    return game.ranking.slope_for(game.n)


def exact_potential(game: PublishersGame, profile: ProfileLike) -> float:
    """sum_i -(a * d*(x_i) + 1/n) - lambda * d0(x_i) for the linear ranking with slope a."""
    a = _require_linear(game)
    docs = game.docs_of(profile)
    ds = game.dstar(docs)
    d0 = game.d0(docs)
    return float(np.sum(-(a * ds + 1.0 / game.n) - game.lam * d0))


def check_potential_identity(game: PublishersGame, samples: int, seed: int = 0) -> float:
    """Largest |delta potential - delta utility| over random unilateral deviations."""
    _require_linear(game)
    rng = np.random.default_rng(seed)
    n, k = game.n, game.k
    worst = 0.0
    for _ in range(samples):
        i = int(rng.integers(n))
        x1 = rng.random((n, k))
        x2 = x1.copy()
        x2[i] = rng.random(k)
        d_phi = exact_potential(game, x1) - exact_potential(game, x2)
        d_u = utility(game, x1)[i] - utility(game, x2)[i]
        worst = max(worst, abs(d_phi - d_u))
    return worst


@dataclass(frozen=True)
class DiecReport:
    kind: str
    n: int
    ratio: float  # math.inf when the loser gets probability zero
    claimed_alpha: float
    expected_ratio: float
    slope: float | None = None

    @property
    def holds(self) -> bool:
        return self.ratio >= self.claimed_alpha


def _expected_diec(spec: RankingSpec, n: int) -> tuple[float, float]:
    """(claimed alpha, closed-form extreme ratio) for a ranking at n publishers."""
    if spec.kind == "prp":
        return math.inf, math.inf
    if spec.kind == "random":
        return 1.0, 1.0
    if spec.kind == "softmax":
        return math.e, math.exp(n / (n - 1))
    a = spec.slope_for(n)
    denom = n * (1 - a) - 1
    closed = math.inf if denom <= 0 else (a * n + 1) * (n - 1) / denom
    claimed = 2.0 if math.isclose(a, 1.0 / n, rel_tol=0, abs_tol=1e-15) else 1.0
    return claimed, closed


def diec_ratio(ranking: RankingSpec | str, n: int) -> DiecReport:
    """Winner/loser probability ratio when one publisher sits on the need and the rest are maximally far."""
    spec = ranking if isinstance(ranking, RankingSpec) else RankingSpec(ranking)
    _ranking.max_valid_slope(n)
    dstar = np.ones(n)
    dstar[0] = 0.0
    probs = rank_dstar(spec, dstar)
    ratio = math.inf if probs[1] == 0 else float(probs[0] / probs[1])
    claimed, closed = _expected_diec(spec, n)
    return DiecReport(spec.kind, n, ratio, claimed, closed, spec.slope_for(n) if spec.kind == "linear" else None)


@dataclass
class GridSearchResult:
    resolution: int
    epsilon: float
    found_equilibria: list[np.ndarray]
    exhaustive: bool
    profiles_checked: int = 0


def grid_points(resolution: int, k: int) -> np.ndarray:
    axis = np.linspace(0.0, 1.0, resolution)
    mesh = np.meshgrid(*([axis] * k), indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=1)


def _utility_slab(game: PublishersGame, ds_pts, d0_pts, i: int, fixed_axis: int, fixed_idx: int) -> np.ndarray:
    """Publisher i's utility on every grid profile with publisher ``fixed_axis`` pinned.

    Returned axes are the remaining publishers in order.
    """
    n, g = game.n, len(ds_pts)
    free = [m for m in range(n) if m != fixed_axis]
    shape = (g,) * (n - 1)
    ds = np.empty(shape + (n,))
    for pos, m in enumerate(free):
        view = [1] * (n - 1)
        view[pos] = g
        ds[..., m] = ds_pts.reshape(view)
    ds[..., fixed_axis] = ds_pts[fixed_idx]
    u = rank_dstar(game.ranking, ds)[..., i]
    view = [1] * (n - 1)
    view[free.index(i)] = g
    return u - game.lam * d0_pts[i].reshape(view)


def grid_pne_search(game: PublishersGame, resolution: int, epsilon: float | None = None) -> GridSearchResult:
    """All grid profiles where no publisher gains more than ``epsilon`` by moving to another grid point.

    ``epsilon=None`` ties the threshold to the grid: lambda * 0.5 / resolution.
    """
    if resolution < 2:
        raise InvalidConfigError("resolution must be at least 2")
    total = resolution ** (game.n * game.k)
    if total > GRID_BUDGET:
        raise SearchBudgetError(f"{total} grid profiles exceed the budget of {GRID_BUDGET}")
    if epsilon is None:
        epsilon = 0.5 * game.lam / resolution
    pts = grid_points(resolution, game.k)
    g = len(pts)
    ds_pts = game.dstar(pts)
    d0_pts = np.stack([game.d0(pts, i) for i in range(game.n)])
    n = game.n
    stable = np.ones((g,) * n, dtype=bool)
    for i in range(n):
        j = 1 if i == 0 else 0
        for idx in range(g):
            u = _utility_slab(game, ds_pts, d0_pts, i, j, idx)
            ax = [m for m in range(n) if m != j].index(i)
            best = u.max(axis=ax, keepdims=True)
            sl = [slice(None)] * n
            sl[j] = idx
            stable[tuple(sl)] &= best - u <= epsilon
    found = [pts[np.array(p)] for p in np.argwhere(stable)]
    return GridSearchResult(resolution, float(epsilon), found, exhaustive=True, profiles_checked=total)


def line_game(lam: float = 1.0, ranking: RankingSpec | str = "prp") -> PublishersGame:
    """Two publishers on [0,1] both starting at 0, need at 1, absolute distance."""
    spec = ranking if isinstance(ranking, RankingSpec) else RankingSpec(ranking)
    return PublishersGame([[0.0], [0.0]], [1.0], lam, spec, ABS1D)


# --- check table -----------------------------------------------------------


@dataclass
class CheckResult:
    group: str
    name: str
    passed: bool
    detail: str = ""


@dataclass
class CheckTable:
    rows: list[CheckResult] = field(default_factory=list)

    def add(self, group: str, name: str, passed: bool, detail: str = "") -> None:
        self.rows.append(CheckResult(group, name, bool(passed), detail))

    @property
    def ok(self) -> bool:
        return all(r.passed for r in self.rows)

    def failures(self) -> list[CheckResult]:
        return [r for r in self.rows if not r.passed]

    def format(self) -> str:
        width = max((len(r.name) for r in self.rows), default=10)
        lines = [f"{'group':<12} {'check':<{width}}  result  detail"]
        for r in self.rows:
            lines.append(f"{r.group:<12} {r.name:<{width}}  {'PASS' if r.passed else 'FAIL':<6}  {r.detail}")
        return "\n".join(lines)


CHECK_GROUPS = ("potential", "slope-bounds", "diec", "grid-equilibria")


def _random_game(rng, n, k, lam, spec) -> PublishersGame:
    return PublishersGame(rng.random((n, k)), rng.random(k), lam, spec)


def _check_potential(table: CheckTable, seed: int, samples: int) -> None:
    rng = np.random.default_rng(seed)
    for n in (2, 3, 5):
        for k in (1, 2, 8):
            for denom in (1, 2, 10):
                a = 1.0 / (denom * n)
                game = _random_game(rng, n, k, float(rng.uniform(0.1, 2.0)), RankingSpec("linear", a))
                worst = check_potential_identity(game, samples, seed=int(rng.integers(2**31)))
                table.add("potential", f"n={n} k={k} a=1/({denom}n)", worst < POTENTIAL_TOL, f"max violation {worst:.2e}")
    game = _random_game(rng, 2, 2, 1.0, RankingSpec("softmax"))
    try:
        check_potential_identity(game, 1)
        table.add("potential", "softmax rejected", False, "no error raised")
    except UnsupportedConfigurationError:
        table.add("potential", "softmax rejected", True)


def _slope_accepted(a: float, n: int) -> bool:
    try:
        _ranking.validate_slope(a, n)
        return True
    except InvalidConfigError:
        return False


def _check_slope_bounds(table: CheckTable, seed: int, profiles: int) -> None:
    rng = np.random.default_rng(seed)
    for n in (2, 3, 5, 10):
        bound = 1.0 / n
        table.add("slope-bounds", f"n={n} a=1/n accepted", _slope_accepted(bound, n))
        table.add("slope-bounds", f"n={n} a=1/n+1e-9 rejected", not _slope_accepted(bound + 1e-9, n))
        table.add("slope-bounds", f"n={n} a=0 rejected", not _slope_accepted(0.0, n))
        table.add("slope-bounds", f"n={n} a<0 rejected", not _slope_accepted(-bound, n))
        worst_sum, worst_range = 0.0, 0.0
        for a in (bound, bound / 2, bound / 10):
            ds = rng.random((profiles, n))
            ds[: profiles // 10] = np.round(ds[: profiles // 10])  # extreme corners
            p = rank_dstar(RankingSpec("linear", a), ds)
            worst_sum = max(worst_sum, float(np.abs(p.sum(axis=1) - 1).max()))
            worst_range = max(worst_range, float(np.maximum(-p, p - 1).max()))
        table.add(
            "slope-bounds",
            f"n={n} distributions valid",
            worst_sum <= 1e-12 and worst_range <= 1e-12,
            f"|sum-1| {worst_sum:.1e}, range excess {worst_range:.1e}",
        )
        # nu_i = -1 (publisher i farthest, rest on the need) binds the lower bound
        nu = relative_relevance_from_dstar(np.r_[1.0, np.zeros(n - 1)])
        at_bound = bound * nu + 1.0 / n
        past = 1.5 * bound * nu + 1.0 / n
        table.add(
            "slope-bounds",
            f"n={n} bound is tight",
            abs(at_bound.min()) <= 1e-15 and past.min() < 0,
            f"min prob at 1/n {at_bound.min():.1e}, at 1.5/n {past.min():.3f}",
        )


def _check_diec(table: CheckTable) -> None:
    for n in (3, 4, 10, 1000):
        rep = diec_ratio("linear", n)
        target = (2 * n - 2) / (n - 2)
        table.add("diec", f"linear n={n}", abs(rep.ratio - target) <= 1e-12 and rep.holds, f"ratio {rep.ratio:.12g}")
    rep = diec_ratio("linear", 2)
    table.add("diec", "linear n=2 deterministic", rep.ratio == math.inf)
    table.add("diec", "linear n=1000 near 2", abs(diec_ratio("linear", 1000).ratio - 2) / 2 < 0.01)
    worst = 0.0
    for n in range(2, 1001):
        worst = max(worst, abs(diec_ratio("softmax", n).ratio - math.exp(n / (n - 1))))
    table.add("diec", "softmax n=2..1000", worst <= 1e-12, f"max error {worst:.1e}")
    table.add("diec", "softmax n=2 is e^2", abs(diec_ratio("softmax", 2).ratio - math.exp(2)) <= 1e-12)
    table.add("diec", "softmax n=1000 near e", abs(diec_ratio("softmax", 1000).ratio - math.e) / math.e < 0.01)
    table.add("diec", "random ratio 1", all(diec_ratio("random", n).ratio == 1.0 for n in (2, 3, 10, 1000)))
    table.add("diec", "prp deterministic", all(diec_ratio("prp", n).ratio == math.inf for n in (2, 3, 10)))
    mono = True
    for n in (3, 5, 10):
        ratios = [diec_ratio(RankingSpec("linear", a), n).ratio for a in np.linspace(0.05, 1.0, 20) / n]
        mono &= bool(np.all(np.diff(ratios) > 0))
    table.add("diec", "linear ratio increasing in slope", mono)


def _check_grid_equilibria(table: CheckTable, resolution: int) -> None:
    prp = grid_pne_search(line_game(1.0, "prp"), resolution)
    table.add("grid-equilibria", "prp has no grid equilibrium", not prp.found_equilibria, f"{len(prp.found_equilibria)} found")
    lin = grid_pne_search(line_game(1.0, "linear"), resolution)
    table.add("grid-equilibria", "linear has a grid equilibrium", bool(lin.found_equilibria), f"{len(lin.found_equilibria)} found")


def run_checks(
    only: list[str] | tuple[str, ...] | None = None,
    seed: int = 0,
    potential_samples: int = 400,
    slope_profiles: int = 10_000,
    resolution: int = 101,
) -> CheckTable:
    """Run the verification table; ``only`` restricts to a subset of :data:`CHECK_GROUPS`."""
    groups = CHECK_GROUPS if not only else tuple(only)
    unknown = set(groups) - set(CHECK_GROUPS)
    if unknown:
        raise InvalidConfigError(f"unknown check groups: {sorted(unknown)}")
    table = CheckTable()
    if "potential" in groups:
        _check_potential(table, seed, potential_samples)
    if "slope-bounds" in groups:
        _check_slope_bounds(table, seed, slope_profiles)
    if "diec" in groups:
        _check_diec(table)
    if "grid-equilibria" in groups:
        _check_grid_equilibria(table, resolution)
    return table
