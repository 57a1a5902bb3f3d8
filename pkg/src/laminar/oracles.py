"""Brute-force reference computations for checking the fast code paths.

Everything here deliberately avoids the vectorized traversals of
:mod:`laminar.treeplex`: values are computed by plain recursion over the
decision points, minima by enumerating pure strategies, and game values by
walking the rules-level game tree.
"""

from __future__ import annotations

import itertools
from typing import Callable, Iterator, Sequence

import numpy as np

MAX_PURE = 2 ** 20
MAX_NODES = 5_000_000


class TooLarge(RuntimeError):
    """The requested enumeration exceeds the configured guard."""


class NonLinearLoss(ValueError):
    pass


def count_pure(tp, j: int = 0) -> int:
    count = 1
    for k in tp.subtree(j):
        count *= tp.points[k].n_actions
    return count


def enumerate_pure(tp, j: int = 0) -> Iterator[np.ndarray]:
    """Yield every pure strategy of the subtree rooted at ``j``.

    Each yield is a full-length behavioral vector: one-hot blocks on the
    subtree's points, the uniform point elsewhere.  Every point in the subtree
    gets an action, reachable or not, so the count is the product of the
    action counts.
    """
    pts = tp.subtree(j)
    if count_pure(tp, j) > MAX_PURE:
        raise TooLarge("subtree of %r has more than %d pure strategies" % (tp.names[j], MAX_PURE))
    base = tp.uniform_strategy()
    for choice in itertools.product(*(range(tp.points[k].n_actions) for k in pts)):
        x = base.copy()
        for k, a in zip(pts, choice):
            p = tp.points[k]
            x[p.first_sequence:p.first_sequence + p.n_actions] = 0.0
            x[p.first_sequence + a] = 1.0
        yield x


def _linear_parts(tp, loss):
    """Per-sequence coefficients and per-point constants of a linear loss."""
    if isinstance(loss, tuple):
        return loss
    if hasattr(loss, "linear"):
        if np.any(loss.entropy) or np.any(loss.quadratic):
            raise NonLinearLoss("brute-force regret needs linear losses")
        return np.asarray(loss.linear, float), np.asarray(loss.constant, float)
    return np.asarray(loss, dtype=float), np.zeros(tp.n_points)


def subtree_value(tp, j: int, x, loss) -> float:
    """Recursive ``V_j(x)`` of a linear loss (coefficients or a SeparableLoss)."""
    c, k = _linear_parts(tp, loss)
    x = np.asarray(x, dtype=float)

    def rec(i):
        p = tp.points[i]
        total = k[i]
        for a in range(p.n_actions):
            s = p.first_sequence + a
            inner = c[s] + sum(rec(child) for child in p.children[a])
            total += x[s] * inner
        return total

    return rec(j)


def brute_force_min(tp, j: int, loss) -> tuple:
    """Minimum of ``V_j`` over the pure strategies of the subtree, and a minimizer."""
    best, arg = np.inf, None
    for x in enumerate_pure(tp, j):
        v = subtree_value(tp, j, x, loss)
        if v < best:
            best, arg = v, x
    return best, arg


def brute_force_subtree_regret(tp, j: int, losses: Sequence, played: Sequence) -> float:
    """``sum_t V_j^t(x^t) - min_x sum_t V_j^t(x)`` over the subtree rooted at ``j``."""
    if len(losses) != len(played) or not losses:
        raise ValueError("need matching, nonempty loss and strategy histories")
    parts = [_linear_parts(tp, l) for l in losses]
    total_c = sum(p[0] for p in parts)
    total_k = sum(p[1] for p in parts)
    incurred = sum(subtree_value(tp, j, x, (c, k)) for (c, k), x in zip(parts, played))
    best = min(subtree_value(tp, j, x, (total_c, total_k)) for x in enumerate_pure(tp, j))
    return float(incurred - best)


def finite_difference_gradient(f: Callable, x, h: float = 1e-5) -> np.ndarray:
    """Central differences ``(f(x + h e_i) - f(x - h e_i)) / 2h``."""
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def projection_kkt_check(v, lower_bounds, p, tol: float = 1e-9) -> bool:
    """Check that ``p`` is the Euclidean projection of ``v`` onto ``{x >= lb, sum x = 1}``.

    ``lower_bounds`` may be ``None`` (plain simplex).  Verifies feasibility,
    a common multiplier on the free coordinates and the sign condition on the
    coordinates held at their bounds.
    """
    v = np.asarray(v, dtype=float)
    p = np.asarray(p, dtype=float)
    lb = np.zeros_like(v) if lower_bounds is None else np.asarray(lower_bounds, dtype=float)
    scale = tol * max(1.0, float(np.abs(v).max()))
    if np.any(p < lb - scale) or abs(p.sum() - 1.0) > scale:
        return False
    r = v - p
    free = p > lb + scale
    if not free.any():
        return False
    lam = r[free].mean()
    if np.abs(r[free] - lam).max() > scale:
        return False
    return bool(np.all(r[~free] <= lam + scale))


def grid_minimize(f: Callable, n: int, resolution: float = 1e-3) -> tuple:
    """Minimize ``f`` over a regular grid of the 2- or 3-simplex."""
    steps = int(round(1 / resolution))
    if n == 2:
        a = np.arange(steps + 1) / steps
        pts = np.stack([a, 1 - a], axis=1)
    elif n == 3:
        i, k = np.meshgrid(np.arange(steps + 1), np.arange(steps + 1), indexing="ij")
        keep = i + k <= steps
        a, b = i[keep] / steps, k[keep] / steps
        pts = np.stack([a, b, 1 - a - b], axis=1)
    else:
        raise ValueError("grid search supports 2 or 3 actions")
    vals = np.array([f(q) for q in pts]) if not getattr(f, "vectorized", False) else f(pts)
    i = int(np.argmin(vals))
    return float(vals[i]), pts[i]


def exhaustive_game_value(game, x, y) -> float:
    """Expected payoff to player 1 by walking the rules-level game tree.

    Only ``game.rules`` and the information-set names of the compiled
    treeplexes are used; the payoff matrix is never touched.
    """
    rules = game.rules
    tps = (game.treeplex_x, game.treeplex_y)
    strategies = (np.asarray(x, dtype=float), np.asarray(y, dtype=float))
    nodes = [0]

    def walk(s, prob):
        nodes[0] += 1
        if nodes[0] > MAX_NODES:
            raise TooLarge("game tree has more than %d nodes" % MAX_NODES)
        if rules.is_terminal(s):
            return prob * rules.payoff(s)
        p = rules.player(s)
        if p < 0:
            outcomes = list(rules.chance_outcomes(s))
            total = sum(q for _, q in outcomes)
            if abs(total - 1.0) > 1e-12:
                raise ValueError("chance probabilities sum to %r" % (total,))
            return sum(walk(rules.apply(s, a), prob * q) for a, q in outcomes)
        tp = tps[p]
        point = tp.points[tp.index(rules.infoset(s))]
        value = 0.0
        for i, a in enumerate(rules.actions(s)):
            q = strategies[p][point.first_sequence + i]
            if q > 0:
                value += walk(rules.apply(s, a), prob * q)
        return value

    return float(walk(rules.initial(), 1.0))
