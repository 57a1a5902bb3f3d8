"""Shared generators for the test suite."""

import numpy as np

from laminar.losses import SeparableLoss
from laminar.treeplex import PerturbedSimplex, PointSpec, build_treeplex

# one "CRITERION n: PASS|FAIL ..." line per acceptance criterion, echoed in the summary
ACCEPTANCE_LOG = []


def chain_treeplex():
    """``j0`` with two actions; the second leads to ``j1`` (two actions)."""
    return build_treeplex([PointSpec("j0", ["a0", "a1"], [[], ["j1"]]),
                           PointSpec("j1", ["b0", "b1"])])


def single_point(n=2, lower_bounds=None):
    dom = PerturbedSimplex(lower_bounds) if lower_bounds is not None else None
    return build_treeplex([PointSpec("p", n, None, dom)])


def random_treeplex(rng, max_depth=3, max_actions=3, max_points=7, min_actions=1):
    """Random tree of decision points with at most ``max_depth`` levels.

    Each action gets zero, one or two child points while the point budget
    lasts, so the number of pure strategies stays small enough to enumerate.
    """
    specs = []
    counter = [0]

    def make(depth):
        name = "p%d" % counter[0]
        counter[0] += 1
        n = int(rng.integers(min_actions, max_actions + 1))
        kids = []
        for _ in range(n):
            group = []
            if depth + 1 < max_depth:
                for _ in range(int(rng.integers(0, 3))):
                    if counter[0] >= max_points:
                        break
                    group.append(make(depth + 1))
            kids.append(group)
        specs.append(PointSpec(name, n, kids))
        return name

    make(0)
    return build_treeplex(specs)


def random_behavioral(tp, rng, interior=False):
    x = rng.random(tp.n_sequences) + (0.05 if interior else 0.0)
    if not interior:
        x[rng.random(tp.n_sequences) < 0.2] = 0.0
    sums = tp.reduce(x)
    empty = sums == 0
    if empty.any():
        x[tp.expand(empty)] = 1.0
        sums = tp.reduce(x)
    return x / tp.expand(sums)


def random_pure(tp, rng):
    x = np.zeros(tp.n_sequences)
    for j in range(tp.n_points):
        x[tp.starts[j] + rng.integers(tp.sizes[j])] = 1.0
    return x


def random_linear_loss(tp, rng, low=-1.0, high=1.0):
    return SeparableLoss(tp, linear=rng.uniform(low, high, tp.n_sequences))
