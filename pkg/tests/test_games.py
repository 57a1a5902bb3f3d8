import itertools

import numpy as np
import pytest

from helpers import random_behavioral, random_pure
from laminar.games import (GoofspielRules, InvalidParameter, LeducRules, build_goofspiel,
                           build_kuhn, build_leduc, kuhn_equilibrium, load_game, perturb_game)
from laminar.oracles import exhaustive_game_value
from laminar.solver import saddle_point_gap


@pytest.fixture(scope="module")
def kuhn():
    return build_kuhn()


@pytest.fixture(scope="module")
def leduc2():
    return build_leduc(2)


@pytest.fixture(scope="module")
def goof3():
    return build_goofspiel(3)


def test_kuhn_shapes(kuhn):
    assert kuhn.treeplex_x.n_points == 7
    ty = kuhn.treeplex_y
    assert ty.n_points == 7 and ty.names[0] == "root"    # six infosets under a dummy root
    assert all(ty.sizes[1:] == 2)
    assert kuhn.payoff.shape == (13, 13)


def test_kuhn_uniform_value(kuhn):
    x, y = kuhn.treeplex_x.uniform_strategy(), kuhn.treeplex_y.uniform_strategy()
    assert kuhn.utility(x, y) == pytest.approx(exhaustive_game_value(kuhn, x, y), abs=1e-12)
    # hand enumeration over deals and betting lines at uniform play
    total = 0.0
    for c1, c2 in itertools.permutations(range(3), 2):
        sign = 1 if c1 > c2 else -1
        lines = [(0.25, sign), (0.125, -1), (0.125, 2 * sign), (0.25, 1), (0.25, 2 * sign)]
        total += sum(p * u for p, u in lines) / 6
    assert kuhn.utility(x, y) == pytest.approx(total, abs=1e-12)


def test_kuhn_game_value(kuhn):
    for alpha in (0.0, 0.1, 1 / 3):
        x, y = kuhn_equilibrium(kuhn, alpha)
        assert kuhn.utility(x, y) == pytest.approx(-1 / 18, abs=1e-12)
        assert saddle_point_gap(kuhn, x, y) <= 1e-9


def test_leduc_sizes():
    assert LeducRules(5).deck_size == 10
    with pytest.raises(InvalidParameter):
        build_leduc(1)


def test_leduc_chance_normalization(leduc2):
    rng = np.random.default_rng(0)
    tx, ty = leduc2.treeplex_x, leduc2.treeplex_y
    for _ in range(5):
        x, y = random_pure(tx, rng), random_pure(ty, rng)
        exhaustive_game_value(leduc2, x, y)          # raises if chance does not sum to 1


@pytest.mark.parametrize("name", ["kuhn", "leduc2", "goof3"])
def test_payoff_matches_tree_walk(name, request):
    g = request.getfixturevalue(name)
    rng = np.random.default_rng(1)
    for _ in range(5):
        x = random_behavioral(g.treeplex_x, rng)
        y = random_behavioral(g.treeplex_y, rng)
        assert g.utility(x, y) == pytest.approx(exhaustive_game_value(g, x, y), abs=1e-9)
    x, y = random_pure(g.treeplex_x, rng), random_pure(g.treeplex_y, rng)
    assert g.utility(x, y) == pytest.approx(exhaustive_game_value(g, x, y), abs=1e-9)


def test_leduc_seat_antisymmetry():
    """At ranks=2 the payoff to a seat flips sign when the cards are swapped."""
    rules = LeducRules(2)
    showdowns = _terminal_showdowns(rules)
    assert showdowns
    for cards, rounds in showdowns:
        c1, c2, pub = cards
        assert rules.payoff((cards, rounds)) == -rules.payoff(((c2, c1, pub), rounds))


def _terminal_showdowns(rules):
    out = []

    def walk(s):
        if rules.is_terminal(s):
            if s[1][-1][-1] != "fold":
                out.append(s)
            return
        if rules.player(s) < 0:
            for a, _ in rules.chance_outcomes(s):
                walk(rules.apply(s, a))
            return
        for a in rules.actions(s):
            walk(rules.apply(s, a))

    walk(rules.initial())
    return out


def test_goofspiel_chance():
    rules = GoofspielRules(4)
    leaves = []

    def walk(s, prob):                    # players always bid their lowest card
        if rules.is_terminal(s):
            leaves.append((s[0], prob))
        elif rules.player(s) < 0:
            for a, q in rules.chance_outcomes(s):
                walk(rules.apply(s, a), prob * q)
        else:
            walk(rules.apply(s, rules.actions(s)[0]), prob)

    walk(rules.initial(), 1.0)
    assert len(leaves) == 24 and len({order for order, _ in leaves}) == 24
    assert all(abs(q - 1 / 24) < 1e-15 for _, q in leaves)
    with pytest.raises(InvalidParameter):
        build_goofspiel(1)


def test_goofspiel_two_identical_bids():
    g = build_goofspiel(2)
    rules = g.rules
    s = rules.initial()
    s = rules.apply(s, 2)                 # prize 2 first
    s = rules.apply(s, "1")
    s = rules.apply(s, "1")
    s = rules.apply(s, 1)
    s = rules.apply(s, "2")
    s = rules.apply(s, "2")
    assert rules.is_terminal(s) and rules.payoff(s) == 0


def test_goofspiel_symmetry(goof3):
    tx, ty = goof3.treeplex_x, goof3.treeplex_y
    assert goof3.utility(tx.uniform_strategy(), ty.uniform_strategy()) == pytest.approx(0, abs=1e-12)
    # mirrored profile: player 2 copies player 1's behavior with the bid histories swapped
    x = random_behavioral(tx, np.random.default_rng(9), interior=True)
    y = ty.uniform_strategy()
    for p in ty.points[1:]:
        prizes, b1, b2 = p.name.split("|")
        ty.block(y, p.id)[:] = tx.block(x, tx.index("%s|%s|%s" % (prizes, b2, b1)))
    assert goof3.utility(x, y) == pytest.approx(0, abs=1e-9)


def test_load_game():
    assert load_game("kuhn").name == "kuhn"
    assert load_game("leduc:2").treeplex_x.n_points == build_leduc(2).treeplex_x.n_points
    for bad in ("poker", "leduc:x", "goofspiel:1", "kuhn:3"):
        with pytest.raises(InvalidParameter):
            load_game(bad)


def test_perturb_game(kuhn):
    g = perturb_game(kuhn, 0.05)
    assert g.treeplex_x.perturbed and g.treeplex_x.names == kuhn.treeplex_x.names
    assert g.treeplex_x.lower_bounds[0] == 0      # single-action root stays unconstrained
    assert g.payoff is kuhn.payoff
