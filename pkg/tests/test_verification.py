import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings

from pubgame import (
    ABS1D,
    InvalidInputError,
    PublishersGame,
    RankingSpec,
    SearchBudgetError,
    UnsupportedConfigurationError,
    check_potential_identity,
    diec_ratio,
    exact_potential,
    grid_pne_search,
    utility,
)
from pubgame import ranking as ranking_module
from pubgame.verification import CHECK_GROUPS, grid_points, line_game, run_checks

from .conftest import game_and_profile


def brute_force_pne(game, resolution, epsilon):
    """Nested-loop enumeration: every profile, every publisher, every grid deviation."""
    pts = [np.array(p) for p in itertools.product(np.linspace(0, 1, resolution), repeat=game.k)]
    found = []
    for combo in itertools.product(range(len(pts)), repeat=game.n):
        docs = np.array([pts[c] for c in combo])
        base = utility(game, docs)
        stable = True
        for i in range(game.n):
            for p in pts:
                dev = docs.copy()
                dev[i] = p
                if utility(game, dev)[i] - base[i] > epsilon:
                    stable = False
                    break
            if not stable:
                break
        if stable:
            found.append(docs)
    return found


def as_set(profiles):
    return {tuple(np.round(p, 12).ravel()) for p in profiles}


@pytest.mark.parametrize(
    "n,k,res,kind,lam",
    [(2, 1, 11, "prp", 1.0), (2, 1, 11, "linear", 1.0), (3, 1, 6, "softmax", 0.3), (3, 1, 5, "prp", 0.5), (2, 2, 4, "linear", 0.7), (2, 2, 4, "prp", 0.2)],
)
def test_grid_search_matches_brute_force(n, k, res, kind, lam):
    rng = np.random.default_rng(n * 100 + k * 10 + res)
    game = PublishersGame(rng.random((n, k)), rng.random(k), lam, RankingSpec(kind))
    eps = 0.5 * lam / res
    got = grid_pne_search(game, res, eps)
    assert got.exhaustive and got.profiles_checked == res ** (n * k)
    assert as_set(got.found_equilibria) == as_set(brute_force_pne(game, res, eps))


def test_line_game_grid_search_small():
    for res in (11, 21):
        eps = 0.5 / res
        assert grid_pne_search(line_game(), res, eps).found_equilibria == []
        assert as_set(brute_force_pne(line_game(), res, eps)) == set()
        assert len(grid_pne_search(line_game(ranking="linear"), res, eps).found_equilibria) >= 1


def test_default_epsilon_tied_to_grid():
    assert grid_pne_search(line_game(), 11).epsilon == pytest.approx(0.5 / 11)


def test_dominant_initial_docs_are_found():
    # lambda huge with the random ranking: only the profile at the grid points nearest x0 survives
    x0 = np.array([[0.12, 0.77], [0.53, 0.31]])
    game = PublishersGame(x0, [0.5, 0.5], 1e6, RankingSpec("random"))
    res = 11
    found = grid_pne_search(game, res, 1e-9).found_equilibria
    nearest = np.round(x0 * (res - 1)) / (res - 1)
    assert as_set(found) == as_set([nearest])


def test_budget_refused():
    game = PublishersGame(np.zeros((3, 2)), [0.5, 0.5], 1.0)
    with pytest.raises(SearchBudgetError):
        grid_pne_search(game, 101)


def test_grid_points():
    pts = grid_points(3, 2)
    assert pts.shape == (9, 2)
    assert pts[0].tolist() == [0.0, 0.0] and pts[-1].tolist() == [1.0, 1.0]


def test_potential_examples():
    g = PublishersGame([[0.4, 0.6]] * 3, [0.4, 0.6], 2.0, RankingSpec("linear"))
    assert exact_potential(g, [[0.4, 0.6]] * 3) == pytest.approx(-1.0, abs=1e-15)
    with pytest.raises(UnsupportedConfigurationError):
        exact_potential(g.with_ranking(RankingSpec("softmax")), g.initial_docs)
    with pytest.raises(UnsupportedConfigurationError):
        check_potential_identity(g.with_ranking(RankingSpec("softmax")), 10)


@settings(max_examples=200)
@given(game_and_profile(rankings=("linear",)))
def test_potential_identity_property(gp):
    game, docs = gp
    rng = np.random.default_rng(0)
    i = int(rng.integers(game.n))
    dev = docs.copy()
    dev[i] = rng.random(game.k)
    d_phi = exact_potential(game, docs) - exact_potential(game, dev)
    d_u = utility(game, docs)[i] - utility(game, dev)[i]
    assert abs(d_phi - d_u) < 1e-12
    # degenerate deviation
    assert exact_potential(game, docs) - exact_potential(game, docs.copy()) == 0.0


def test_potential_identity_with_custom_slope():
    rng = np.random.default_rng(5)
    g = PublishersGame(rng.random((4, 3)), rng.random(3), 0.9, RankingSpec("linear", 0.1))
    assert check_potential_identity(g, 500, seed=1) < 1e-12


@pytest.mark.parametrize("n,ratio", [(3, 4.0), (4, 3.0), (10, 18 / 8)])
def test_diec_linear(n, ratio):
    rep = diec_ratio("linear", n)
    assert rep.ratio == pytest.approx(ratio, rel=1e-13)
    assert rep.ratio == pytest.approx(rep.expected_ratio, rel=1e-13)
    assert rep.holds


def test_diec_other_rankings():
    assert diec_ratio("softmax", 2).ratio == pytest.approx(7.389056, abs=1e-6)
    assert diec_ratio("linear", 2).ratio == math.inf
    assert diec_ratio("prp", 5).ratio == math.inf
    for n in (2, 3, 17):
        assert diec_ratio("random", n).ratio == 1.0
    assert abs(diec_ratio("linear", 1000).ratio - 2) / 2 < 0.01
    assert abs(diec_ratio("softmax", 1000).ratio - math.e) / math.e < 0.01


def test_diec_decreases_with_smaller_slope():
    ratios = [diec_ratio(RankingSpec("linear", a), 5).ratio for a in (0.2, 0.15, 0.1, 0.05)]
    assert all(x > y for x, y in zip(ratios, ratios[1:]))
    for a in (0.2, 0.15, 0.1, 0.05):
        rep = diec_ratio(RankingSpec("linear", a), 5)
        assert rep.ratio == pytest.approx(rep.expected_ratio, rel=1e-13)


def test_run_checks_all_pass():
    table = run_checks(seed=0, potential_samples=100, slope_profiles=500, resolution=31)
    assert table.ok, table.format()
    assert {r.group for r in table.rows} == set(CHECK_GROUPS)


def test_run_checks_only_filter():
    table = run_checks(only=["diec"])
    assert {r.group for r in table.rows} == {"diec"}


def test_run_checks_detects_disabled_slope_validation(monkeypatch):
    monkeypatch.setattr(ranking_module, "SLOPE_VALIDATION", False)
    table = run_checks(only=["slope-bounds"], slope_profiles=200)
    assert not table.ok
    assert all(r.group == "slope-bounds" for r in table.failures())


def test_abs1d_game_needs_k1():
    with pytest.raises(InvalidInputError):
        PublishersGame([[0.0, 0.0], [0.0, 0.0]], [1.0, 1.0], 1.0, distance=ABS1D)
