import numpy as np
import pytest

from helpers import single_point
from laminar.exploit import (ExploitConfig, adversary_value, best_response_gain, default_alpha_grid,
                             evaluate_tradeoff, exploit_run, sample_pure_strategy, sweep)
from laminar.games import build_kuhn, kuhn_equilibrium
from laminar.solver import solve
from laminar.treeplex import to_sequence_form


@pytest.fixture(scope="module")
def setup():
    g = build_kuhn()
    sp, _ = solve(g, 5000, gap_every=1, target_gap=0.1)
    opponent = sp.average("uniform")[1]
    anchor = kuhn_equilibrium(g)[0]
    return g, opponent, anchor


def test_sampling_frequency():
    tp = single_point(2)
    rng = np.random.default_rng(0)
    draws = np.array([sample_pure_strategy(tp, [0.5, 0.5], rng) for _ in range(10000)])
    assert set(np.unique(draws)) == {0.0, 1.0}
    assert abs(draws[:, 0].mean() - 0.5) <= 0.015


def test_pure_opponent_gives_fixed_sample(setup):
    g, _, _ = setup
    ty = g.treeplex_y
    y = np.zeros(ty.n_sequences)
    for j in range(ty.n_points):
        y[ty.starts[j] + ty.sizes[j] - 1] = 1.0
    rng = np.random.default_rng(1)
    target = to_sequence_form(ty, y)
    for _ in range(20):
        assert np.array_equal(sample_pure_strategy(ty, y, rng), target)


def test_sample_is_a_pure_sequence_form(setup):
    g, opponent, _ = setup
    ty = g.treeplex_y
    m = sample_pure_strategy(ty, opponent, np.random.default_rng(2))
    parent = np.ones(ty.n_points)
    parent[1:] = m[ty.parent_sequence[1:]]
    assert np.array_equal(ty.reduce(m), parent)


def test_run_is_deterministic(setup):
    g, opponent, anchor = setup
    cfg = ExploitConfig(alpha=0.5, max_iterations=200, seed=7, opponent=opponent, anchor=anchor)
    a, b = exploit_run(g, cfg), exploit_run(g, cfg)
    assert np.array_equal(a.strategy, b.strategy) and a.trace == b.trace


def test_large_alpha_stays_at_anchor(setup):
    g, opponent, anchor = setup
    res = exploit_run(g, ExploitConfig(alpha=1e6, max_iterations=500, opponent=opponent, anchor=anchor))
    assert np.abs(res.strategy - anchor).max() <= 0.01


def test_trace_and_budget(setup):
    g, opponent, anchor = setup
    res = exploit_run(g, ExploitConfig(alpha=1.0, max_iterations=300, opponent=opponent, anchor=anchor))
    assert res.iterations <= 300 and len(res.trace) == res.iterations
    assert [t for t, _ in res.trace] == list(range(1, res.iterations + 1))
    loose = exploit_run(g, ExploitConfig(alpha=1.0, max_iterations=300, regret_threshold=10.0,
                                         opponent=opponent, anchor=anchor))
    assert loose.iterations == 1


def test_tradeoff_at_anchor(setup):
    g, opponent, anchor = setup
    assert evaluate_tradeoff(g, anchor, anchor, opponent) == (0.0, 0.0)
    # the anchor is an exact equilibrium, so nothing can be less exploitable
    assert adversary_value(g, anchor) == pytest.approx(1 / 18, abs=1e-12)


def test_gain_never_exceeds_best_response(setup):
    g, opponent, anchor = setup
    cap = best_response_gain(g, anchor, opponent)
    assert cap > 0
    for alpha in (0.0, 0.1, 10.0):
        res = exploit_run(g, ExploitConfig(alpha=alpha, max_iterations=300, opponent=opponent,
                                           anchor=anchor))
        gain, expl = evaluate_tradeoff(g, res.strategy, anchor, opponent)
        assert gain <= cap + 0.01 and expl >= -1e-12


def test_sweep_rows(setup):
    g, opponent, anchor = setup
    base = ExploitConfig(max_iterations=100, opponent=opponent, anchor=anchor)
    rows = sweep(g, [10.0, 1.0], base)
    assert [r.alpha for r in rows] == [10.0, 1.0, 0.0] and rows[-1].iterations_used == 0
    assert rows[-1].utility_increase == pytest.approx(best_response_gain(g, anchor, opponent))
    threaded = sweep(g, [10.0, 1.0], base, workers=2)
    assert [r.as_tuple() for r in threaded] == [r.as_tuple() for r in rows]


def test_alpha_grid():
    grid = default_alpha_grid()
    assert len(grid) == 8 and grid[0] == 100 and grid[-1] == pytest.approx(1e-3)
    assert np.all(np.diff(grid) < 0)


def test_config_validation():
    with pytest.raises(ValueError):
        ExploitConfig(alpha=-1)
    with pytest.raises(ValueError):
        ExploitConfig(max_iterations=0)
    with pytest.raises(ValueError):
        exploit_run(build_kuhn(), ExploitConfig())
