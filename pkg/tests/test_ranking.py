import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pubgame import (
    InvalidConfigError,
    InvalidInputError,
    PublishersGame,
    RankingSpec,
    linear_rrp_rank,
    max_valid_slope,
    prp_rank,
    random_rank,
    rank,
    softmax_rrp_rank,
)
from pubgame.ranking import rank_dstar, relevance_map

from .conftest import game_and_profile


def dstar_game(dstar, ranking="prp"):
    """1-d game with need at 0 and |x - y| so that d* equals the documents."""
    from pubgame import ABS1D

    n = len(dstar)
    return PublishersGame([[0.0]] * n, [0.0], 1.0, RankingSpec(ranking), ABS1D), np.array(dstar, float).reshape(-1, 1)


def test_prp_examples():
    g, x = dstar_game([0.3, 0.7])
    assert list(prp_rank(g, x).probs) == [1.0, 0.0]
    g, x = dstar_game([0.5, 0.5, 0.9])
    assert list(prp_rank(g, x).probs) == [0.5, 0.5, 0.0]
    g, x = dstar_game([0.0, 1.0, 1.0, 1.0])
    assert list(prp_rank(g, x).probs) == [1.0, 0.0, 0.0, 0.0]


def test_prp_tie_tolerance():
    p = rank_dstar(RankingSpec("prp", tie_tolerance=1e-3), [0.5, 0.5005, 0.9])
    assert list(p) == [0.5, 0.5, 0.0]
    p = rank_dstar(RankingSpec("prp"), [0.5, 0.5005, 0.9])
    assert list(p) == [1.0, 0.0, 0.0]


def test_linear_examples():
    g, x = dstar_game([0.4, 0.4, 0.4], "linear")
    assert np.allclose(linear_rrp_rank(g, x).probs, 1 / 3)
    g, x = dstar_game([1.0, 0.0], "linear")  # nu = (-1, 1)... reversed below
    g, x = dstar_game([0.5, 0.0], "linear")  # nu = (-0.5, 0.5)
    assert np.allclose(linear_rrp_rank(g, x).probs, [0.25, 0.75])
    g, x = dstar_game([0.0, 1.0], "linear")  # extreme profile, n = 2
    assert list(linear_rrp_rank(g, x).probs) == [1.0, 0.0]


def test_softmax_examples():
    g, x = dstar_game([0.3, 0.3, 0.3, 0.3], "softmax")
    assert np.allclose(softmax_rrp_rank(g, x).probs, 0.25)
    g, x = dstar_game([0.0, 1.0], "softmax")  # nu = (1, -1)
    e2 = math.exp(2)
    assert np.allclose(softmax_rrp_rank(g, x).probs, [e2 / (e2 + 1), 1 / (e2 + 1)], atol=1e-15)
    assert softmax_rrp_rank(g, x).probs[0] == pytest.approx(0.8808, abs=1e-4)
    for n in (2, 3, 7, 50):
        p = rank_dstar(RankingSpec("softmax"), np.r_[0.0, np.ones(n - 1)])
        assert p[0] / p[1] == pytest.approx(math.exp(n / (n - 1)), rel=1e-13)


def test_random_examples():
    g, x = dstar_game([0.1, 0.9], "random")
    assert list(random_rank(g, x).probs) == [0.5, 0.5]
    g, x = dstar_game([0.1, 0.9, 0.3, 0.2, 0.0], "random")
    assert np.allclose(random_rank(g, x).probs, 0.2)
    g, x = dstar_game([0.0, 1.0, 1.0], "random")
    p = rank(g, x).probs
    assert p[0] / p[1] == 1.0


@pytest.mark.parametrize("n,expected", [(2, 0.5), (4, 0.25), (10, 0.1)])
def test_max_valid_slope(n, expected):
    assert max_valid_slope(n) == expected


def test_max_valid_slope_rejects_small_n():
    with pytest.raises(InvalidInputError):
        max_valid_slope(1)


@pytest.mark.parametrize("n", [2, 3, 5, 10])
def test_slope_boundary(n):
    RankingSpec("linear", 1 / n)
    PublishersGame([[0.5]] * n, [0.5], 1.0, RankingSpec("linear", 1 / n))
    for bad in (1 / n + 1e-9, 0.0, -0.1):
        with pytest.raises(InvalidConfigError):
            PublishersGame([[0.5]] * n, [0.5], 1.0, RankingSpec("linear", bad))
        with pytest.raises(InvalidConfigError):
            rank_dstar(RankingSpec("linear", bad), np.zeros(n))


def test_unknown_ranking_and_stray_slope():
    with pytest.raises(InvalidConfigError):
        RankingSpec("bm25")
    with pytest.raises(InvalidConfigError):
        RankingSpec("softmax", slope=0.1)
    assert RankingSpec("linear-rrp").kind == "linear"


@given(game_and_profile())
def test_distributions_valid(gp):
    game, docs = gp
    p = rank(game, docs).probs
    assert abs(p.sum() - 1.0) <= 1e-12
    assert np.all(p >= 0.0) and np.all(p <= 1.0)


@given(game_and_profile(), st.randoms(use_true_random=False))
def test_permutation_equivariance(gp, rnd):
    game, docs = gp
    perm = list(range(game.n))
    rnd.shuffle(perm)
    permuted = PublishersGame(game.initial_docs[perm], game.info_need, game.lam, game.ranking, game.distance)
    p = rank(game, docs).probs
    q = rank(permuted, docs[perm]).probs
    assert np.allclose(q, p[perm], atol=1e-15)


@given(
    st.sampled_from(["linear", "softmax"]),
    st.integers(2, 8).flatmap(lambda n: st.lists(st.floats(-1, 1), min_size=n, max_size=n)),
    st.data(),
)
def test_rrp_monotone_in_own_relevance(kind, nu, data):
    nu = np.array(nu)
    i = data.draw(st.integers(0, len(nu) - 1))
    spec = RankingSpec(kind)
    bumped = nu.copy()
    bumped[i] += 1e-3
    assert relevance_map(spec, bumped)[i] > relevance_map(spec, nu)[i]


def test_prp_discontinuity_witness():
    x = np.array([0.5, 0.5 + 5e-7])
    y = np.array([0.5 + 9e-7, 0.5 + 5e-7])
    assert np.max(np.abs(x - y)) < 1e-6
    px = rank_dstar(RankingSpec("prp"), x)
    py = rank_dstar(RankingSpec("prp"), y)
    assert np.max(np.abs(px - py)) == 1.0


def test_batched_evaluation_matches_rowwise(rng):
    ds = rng.random((50, 4))
    for kind in ("prp", "linear", "softmax", "random"):
        spec = RankingSpec(kind)
        batch = rank_dstar(spec, ds)
        rows = np.stack([rank_dstar(spec, row) for row in ds])
        assert np.array_equal(batch, rows)
