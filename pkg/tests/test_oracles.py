import numpy as np
import pytest

from helpers import chain_treeplex, single_point
from laminar import oracles
from laminar.games import build_kuhn, build_leduc
from laminar.losses import entropy_regularizer, linear_loss
from laminar.oracles import (NonLinearLoss, TooLarge, brute_force_min, brute_force_subtree_regret,
                             count_pure, enumerate_pure, finite_difference_gradient, grid_minimize,
                             projection_kkt_check, subtree_value)


def test_pure_counts():
    assert count_pure(single_point(2)) == 2
    assert count_pure(chain_treeplex()) == 4
    assert count_pure(build_kuhn().treeplex_x) == 64
    assert len(list(enumerate_pure(chain_treeplex()))) == 4


def test_subtree_enumeration_leaves_the_rest_uniform():
    tp = chain_treeplex()
    xs = list(enumerate_pure(tp, 1))
    assert len(xs) == 2
    assert all(np.allclose(x[:2], 0.5) for x in xs)


def test_too_large_guard(monkeypatch):
    tp = build_leduc(2).treeplex_x
    with pytest.raises(TooLarge):
        next(enumerate_pure(tp))
    monkeypatch.setattr(oracles, "MAX_PURE", 3)
    with pytest.raises(TooLarge):
        next(enumerate_pure(chain_treeplex()))


def test_subtree_value_chain():
    tp = chain_treeplex()
    x = np.array([0.5, 0.5, 0.75, 0.25])
    loss = linear_loss(tp, [1, 2, 0, 4])
    assert subtree_value(tp, 1, x, loss) == pytest.approx(1.0)
    assert subtree_value(tp, 0, x, loss) == pytest.approx(2.0)
    assert subtree_value(tp, 0, x, np.array([1, 2, 0, 4.0])) == pytest.approx(2.0)


def test_brute_force_min_chain():
    tp = chain_treeplex()
    value, arg = brute_force_min(tp, 0, linear_loss(tp, [1, 2, 0, 4]))
    assert value == 1.0 and arg[0] == 1.0
    value, _ = brute_force_min(tp, 0, linear_loss(tp, [3, 2, -5, 4]))
    assert value == -3.0


def test_brute_force_regret():
    tp = single_point(2)
    losses = [linear_loss(tp, [1, 3]), linear_loss(tp, [1, 3])]
    played = [np.array([0.5, 0.5]), np.array([0.0, 1.0])]
    assert brute_force_subtree_regret(tp, 0, losses, played) == pytest.approx(2 + 3 - 2)
    with pytest.raises(ValueError):
        brute_force_subtree_regret(tp, 0, [], [])


def test_nonlinear_loss_rejected():
    tp = single_point(2)
    with pytest.raises(NonLinearLoss):
        subtree_value(tp, 0, [0.5, 0.5], entropy_regularizer(tp, 1.0))


def test_finite_difference_examples():
    g = finite_difference_gradient(lambda z: float(z @ z), np.array([1.0, -2.0]))
    assert np.allclose(g, [2.0, -4.0], atol=1e-8)
    g = finite_difference_gradient(lambda z: float(np.sum(z * np.log(z))), np.array([0.5, 0.5]))
    assert np.allclose(g, 1 + np.log(0.5), atol=1e-8)


def test_projection_kkt_examples():
    assert projection_kkt_check([0.2, 0.8], None, [0.2, 0.8])
    assert projection_kkt_check([2.0, 0.0], None, [1.0, 0.0])
    assert projection_kkt_check([2.0, 0.0], [0.1, 0.1], [0.9, 0.1])
    assert not projection_kkt_check([2.0, 0.0], None, [0.5, 0.5])
    assert not projection_kkt_check([0.2, 0.8], None, [0.3, 0.8])
    assert not projection_kkt_check([2.0, 0.0], [0.1, 0.1], [1.0, 0.0])


def test_grid_minimize():
    value, arg = grid_minimize(lambda q: float((q[0] - 0.3) ** 2), 2)
    assert value == pytest.approx(0, abs=1e-12) and arg[0] == pytest.approx(0.3)
    value, arg = grid_minimize(lambda q: float(np.sum((q - [0.2, 0.3, 0.5]) ** 2)), 3, 0.01)
    assert np.allclose(arg, [0.2, 0.3, 0.5])
    with pytest.raises(ValueError):
        grid_minimize(lambda q: 0.0, 4)
