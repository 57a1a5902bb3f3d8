import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from laminar.losses import BregmanL2Anchor, DilatedL2, NegEntropy
from laminar.minimizers import (LocalLoss, NonFiniteGradient, OnlineGradientDescent,
                                RegretMatching, RegretMatchingPlus, UnsupportedDomain,
                                UnsupportedLossForm, external_regret, local_argmin,
                                make_minimizer, project_simplex, project_simplex_rows)
from laminar.oracles import projection_kkt_check

vectors = arrays(np.float64, st.integers(1, 8), elements=st.floats(-50, 50))


# ------------------------------------------------------------- projection

def test_projection_examples():
    assert np.allclose(project_simplex([0.2, 0.8]), [0.2, 0.8])
    assert np.allclose(project_simplex([0.5, 0.5, 0.5]), [1 / 3] * 3)
    assert np.allclose(project_simplex([2.0, 0.0]), [1.0, 0.0])
    assert np.allclose(project_simplex([2.0, 0.0], [0.1, 0.1]), [0.9, 0.1])


@given(vectors)
def test_projection_kkt(v):
    p = project_simplex(v)
    assert projection_kkt_check(v, None, p)


@given(vectors, st.floats(0.0, 0.9))
def test_perturbed_projection_kkt(v, mass):
    lb = np.full(v.size, mass / v.size)
    p = project_simplex(v, lb)
    assert projection_kkt_check(v, lb, p)


@given(arrays(np.float64, st.integers(1, 6), elements=st.floats(0.01, 1)))
def test_projection_fixes_feasible_points(w):
    x = w / w.sum()
    assert np.abs(project_simplex(x) - x).max() <= 1e-12


def test_row_projection_matches_single():
    rng = np.random.default_rng(0)
    V = rng.normal(size=(20, 4))
    P = project_simplex_rows(V)
    for v, p in zip(V, P):
        assert np.allclose(project_simplex(v), p)


# ---------------------------------------------------------- local argmin

def test_local_argmin_rejects_mixed_forms():
    with pytest.raises(UnsupportedLossForm):
        local_argmin(np.zeros((1, 2)), [1.0], [1.0])
    with pytest.raises(UnsupportedLossForm):
        local_argmin(np.zeros((1, 2)), [1.0], [0.0], [[0.1, 0.1]])


def test_local_argmin_quadratic_is_projection():
    C = np.array([[0.3, -0.2, 0.1]])
    X, v = local_argmin(C, [0.0], [2.0])
    assert np.allclose(X[0], project_simplex(-C[0] / 2.0))
    assert v[0] == pytest.approx(C[0] @ X[0] + X[0] @ X[0])


# ----------------------------------------------------------- minimizers

def test_rm_recommend_examples():
    rm = RegretMatching(3)
    rm.cumulative[:] = [2, -1, 0]
    assert np.allclose(rm.recommend(), [1, 0, 0])
    rm = RegretMatching(2)
    rm.cumulative[:] = [-1, -2]
    assert np.allclose(rm.recommend(), [0.5, 0.5])
    rmp = RegretMatchingPlus(2)
    rmp.cumulative[:] = [1, 1]
    assert np.allclose(rmp.recommend(), [0.5, 0.5])


def test_observe_examples():
    rm = RegretMatching(2)
    rm.observe([1.0, 0.0], [0.5, 0.5])
    assert np.allclose(rm.cumulative, [[-0.5, 0.5]])
    rmp = RegretMatchingPlus(2)
    rmp.observe([1.0, 0.0], [0.5, 0.5])
    assert np.allclose(rmp.cumulative, [[0.0, 0.5]])
    ogd = OnlineGradientDescent(2, step_scale=0.1, step_exponent=0.0)
    ogd.observe([1.0, 0.0], ogd.recommend())
    assert np.allclose(ogd.recommend(), [[0.45, 0.55]])


def test_rm_requires_full_simplex():
    for cls in (RegretMatching, RegretMatchingPlus):
        with pytest.raises(UnsupportedDomain):
            cls(2, lower_bounds=[0.1, 0.1])
    ogd = OnlineGradientDescent(2, lower_bounds=[0.1, 0.1])
    assert np.allclose(ogd.recommend(), [[0.5, 0.5]])


def test_non_finite_gradient():
    with pytest.raises(NonFiniteGradient):
        RegretMatching(2).observe([np.nan, 0.0], [0.5, 0.5])
    with pytest.raises(NonFiniteGradient):
        OnlineGradientDescent(2).observe([np.inf, 0.0], [0.5, 0.5])


def test_make_minimizer():
    assert isinstance(make_minimizer("rmplus", 3), RegretMatchingPlus)
    assert make_minimizer("ogd", 3, step_scale=0.5).step_scale == 0.5
    with pytest.raises(ValueError):
        make_minimizer("hedge", 3)


@given(st.integers(0, 2**32 - 1))
@settings(max_examples=30, deadline=None)
def test_rmplus_stays_nonnegative_and_ogd_feasible(seed):
    rng = np.random.default_rng(seed)
    rmp = RegretMatchingPlus(3, n_points=4)
    ogd = OnlineGradientDescent(3, n_points=4, lower_bounds=[0.05, 0.0, 0.1])
    for _ in range(30):
        g = rng.normal(size=(4, 3))
        rmp.observe(g, rmp.recommend())
        ogd.observe(g, ogd.recommend())
        assert rmp.cumulative.min() >= 0
        x = ogd.recommend()
        assert np.abs(x.sum(axis=1) - 1).max() <= 1e-9
        assert (x - ogd.lower_bounds).min() >= -1e-9


# ---------------------------------------------------------------- regret

def test_external_regret_examples():
    assert external_regret([([1.0, 3.0], [1.0, 0.0])]) == 0.0
    assert external_regret([([1.0, 0.0], [1.0, 0.0]), ([0.0, 1.0], [1.0, 0.0])]) == 0.0
    with pytest.raises(ValueError):
        external_regret([])


def test_rm_adversarial_regret_bound():
    T = 10000
    rm = RegretMatching(2)
    history = []
    for t in range(T):
        x = rm.recommend()[0]
        g = np.array([1.0, -1.0]) if x[0] >= x[1] else np.array([-1.0, 1.0])
        history.append((g, x))
        rm.observe(g, x)
    # per-round loss range is 2, so the regret-matching bound is 2 * sqrt(2 T)
    assert external_regret(history) <= 2 * np.sqrt(2 * T)


@pytest.mark.parametrize("kind", ["rm", "rmplus", "ogd"])
def test_hannan_consistency_smoke(kind):
    rng = np.random.default_rng(42)
    means = np.array([0.2, -0.1, 0.4])
    m = make_minimizer(kind, 3)
    history, averages = [], {}
    for t in range(1, 10001):
        x = m.recommend()[0]
        g = means + rng.uniform(-1, 1, 3)
        history.append((g, x))
        m.observe(g, x)
        if t in (100, 10000):
            averages[t] = external_regret(history) / t
    assert averages[10000] < averages[100]


@pytest.mark.parametrize("term", [NegEntropy(0.7), DilatedL2(1.3),
                                  BregmanL2Anchor(2.0, np.array([0.2, 0.5, 0.3]))])
def test_linearization_soundness(term):
    rng = np.random.default_rng(7)
    m = make_minimizer("rmplus", 3)
    true_hist, lin_hist = [], []
    for _ in range(200):
        x = m.recommend()[0]
        loss = LocalLoss(rng.uniform(-1, 1, 3), term)
        g = loss.gradient(x)
        true_hist.append((loss, x))
        lin_hist.append((g, x))
        m.observe(g, x)
        assert external_regret(true_hist) <= external_regret(lin_hist) + 1e-9
