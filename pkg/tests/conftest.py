import numpy as np
import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from pubgame import ABS1D, PublishersGame, RankingSpec

settings.register_profile("default", max_examples=100, deadline=None, suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

unit = st.floats(min_value=0.0, max_value=1.0, allow_nan=False)


@st.composite
def games(draw, rankings=("prp", "linear", "softmax", "random"), max_n=6, max_k=4):
    n = draw(st.integers(2, max_n))
    k = draw(st.integers(1, max_k))
    x0 = draw(st.lists(st.lists(unit, min_size=k, max_size=k), min_size=n, max_size=n))
    xs = draw(st.lists(unit, min_size=k, max_size=k))
    lam = draw(st.floats(0.01, 5.0))
    kind = draw(st.sampled_from(rankings))
    return PublishersGame(x0, xs, lam, RankingSpec(kind))


@st.composite
def game_and_profile(draw, **kw):
    game = draw(games(**kw))
    docs = draw(st.lists(st.lists(unit, min_size=game.k, max_size=game.k), min_size=game.n, max_size=game.n))
    return game, np.array(docs)


@pytest.fixture
def line_game_factory():
    """Two publishers on [0,1] both starting at 0, need at 1, |x - y|, lambda = 1."""

    def make(ranking="prp", lam=1.0):
        return PublishersGame([[0.0], [0.0]], [1.0], lam, RankingSpec(ranking), ABS1D)

    return make


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("tests.test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in mod.RESULTS:
        terminalreporter.write_line(line)
