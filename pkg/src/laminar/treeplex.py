"""Sequential decision spaces (treeplexes) and their traversals.

A treeplex is stored as a breadth-first list of decision points whose actions
occupy contiguous blocks of a single sequence index space.  Strategies are flat
``float64`` vectors over that index space:

* a *behavioral* strategy holds ``x_j`` in the block of every decision point;
* a *sequence-form* strategy holds, for each sequence ``(j, a)``, the product
  of the agent's own probabilities from the root down to ``a``.

Breadth-first order makes every depth level a contiguous range of points and
sequences, so bottom-up passes are one vectorized step per level.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Sequence, Union

import numpy as np

from .minimizers import local_argmin

ROOT = -1
DUMMY_ROOT = "root"


class TreeplexError(ValueError):
    pass


class CycleOrSharedChild(TreeplexError):
    """The decision points do not form a tree."""


class InfeasibleDomain(TreeplexError):
    """Perturbed-simplex lower bounds are negative or sum to one or more."""


class FlowViolation(ValueError):
    """A sequence-form vector does not conserve probability flow."""


@dataclass(frozen=True)
class FullSimplex:
    def lower_bounds(self, n):
        return np.zeros(n)


@dataclass(frozen=True)
class PerturbedSimplex:
    lower_bounds_: tuple

    def __init__(self, lower_bounds):
        object.__setattr__(self, "lower_bounds_", tuple(float(v) for v in lower_bounds))
        lb = np.asarray(self.lower_bounds_)
        if np.any(lb < 0) or lb.sum() >= 1.0:
            raise InfeasibleDomain(
                "lower bounds must be nonnegative and sum to less than 1, got %r"
                % (self.lower_bounds_,))

    def lower_bounds(self, n):
        if len(self.lower_bounds_) != n:
            raise InfeasibleDomain("expected %d lower bounds, got %d" % (n, len(self.lower_bounds_)))
        return np.asarray(self.lower_bounds_)


Domain = Union[FullSimplex, PerturbedSimplex]


@dataclass
class PointSpec:
    """Description of one decision point for :func:`build_treeplex`.

    ``actions`` is an action count or a list of action labels.  ``children``
    gives, per action, the names of the decision points the agent may face
    next (``None`` means no children anywhere).
    """

    name: str
    actions: Union[int, Sequence[str]]
    children: Optional[Sequence[Sequence[str]]] = None
    domain: Optional[Domain] = None


@dataclass(frozen=True)
class DecisionPoint:
    id: int
    name: str
    actions: tuple
    parent_sequence: int
    first_sequence: int
    children: tuple
    domain: Domain = field(default_factory=FullSimplex)

    @property
    def n_actions(self) -> int:
        return len(self.actions)

    @property
    def sequences(self) -> range:
        return range(self.first_sequence, self.first_sequence + len(self.actions))


class _Level:
    __slots__ = ("p0", "p1", "s0", "s1", "local_starts", "parents", "groups")

    def __init__(self, p0, p1, s0, s1, local_starts, parents, groups):
        self.p0, self.p1, self.s0, self.s1 = p0, p1, s0, s1
        self.local_starts = local_starts
        self.parents = parents
        self.groups = groups


class Treeplex:
    """Immutable sequential decision space.  Build it with :func:`build_treeplex`."""

    def __init__(self, points: Sequence[DecisionPoint]):
        self.points = tuple(points)
        self.n_points = len(self.points)
        self.root = 0
        self.sizes = np.array([p.n_actions for p in self.points], dtype=np.intp)
        self.starts = np.array([p.first_sequence for p in self.points], dtype=np.intp)
        self.n_sequences = int(self.sizes.sum())
        self.parent_sequence = np.array([p.parent_sequence for p in self.points], dtype=np.intp)
        self.sequence_point = np.repeat(np.arange(self.n_points), self.sizes)
        self.lower_bounds = np.concatenate(
            [p.domain.lower_bounds(p.n_actions) for p in self.points])
        self.perturbed = bool(self.lower_bounds.any())
        self.names = tuple(p.name for p in self.points)
        self._index = {name: i for i, name in enumerate(self.names)}
        depth = np.zeros(self.n_points, dtype=np.intp)
        for p in self.points[1:]:
            depth[p.id] = depth[self.sequence_point[p.parent_sequence]] + 1
        self.depth = depth
        self.levels = self._make_levels()
        self.groups = self._make_groups(np.arange(self.n_points))
        for arr in (self.sizes, self.starts, self.parent_sequence, self.sequence_point,
                    self.lower_bounds, self.depth):
            arr.setflags(write=False)

    def _make_groups(self, pts):
        groups = []
        for n in np.unique(self.sizes[pts]):
            sel = pts[self.sizes[pts] == n]
            idx = self.starts[sel][:, None] + np.arange(n)[None, :]
            groups.append((int(n), sel, idx))
        return groups

    def _make_levels(self):
        levels = []
        for d in range(int(self.depth.max()) + 1):
            pts = np.flatnonzero(self.depth == d)
            p0, p1 = int(pts[0]), int(pts[-1]) + 1
            s0 = int(self.starts[p0])
            s1 = int(self.starts[p1 - 1] + self.sizes[p1 - 1])
            parents = self.parent_sequence[p0:p1] if d > 0 else None
            levels.append(_Level(p0, p1, s0, s1, self.starts[p0:p1] - s0, parents,
                                 self._make_groups(pts)))
        return levels

    def __repr__(self):
        return "Treeplex(points=%d, sequences=%d)" % (self.n_points, self.n_sequences)

    def index(self, name: str) -> int:
        return self._index[name]

    def block(self, v, j: int) -> np.ndarray:
        """View of the entries of ``v`` that belong to decision point ``j``."""
        s = self.starts[j]
        return v[s:s + self.sizes[j]]

    def children(self, j: int, a: int) -> tuple:
        return self.points[j].children[a]

    def subtree(self, j: int) -> list:
        """Decision points of the subtree rooted at ``j`` (``j`` first, BFS order)."""
        out, queue = [], deque([j])
        while queue:
            k = queue.popleft()
            out.append(k)
            for kids in self.points[k].children:
                queue.extend(kids)
        return out

    def uniform_strategy(self) -> np.ndarray:
        lb = self.lower_bounds
        slack = 1.0 - np.add.reduceat(lb, self.starts)
        return lb + np.repeat(slack / self.sizes, self.sizes)

    def reduce(self, v) -> np.ndarray:
        """Sum a per-sequence vector over each decision point's block."""
        return np.add.reduceat(v, self.starts)

    def expand(self, v) -> np.ndarray:
        """Broadcast a per-point vector to the point's sequences."""
        return np.repeat(v, self.sizes)


def build_treeplex(specs: Sequence[PointSpec]) -> Treeplex:
    """Validate point descriptions and lay out a :class:`Treeplex`.

    Points are renumbered in breadth-first order.  When several points have no
    parent, a dummy root with the single action ``"start"`` is synthesized.
    """
    specs = list(specs)
    if not specs:
        raise TreeplexError("a treeplex needs at least one decision point")
    by_name = {}
    for s in specs:
        if s.name in by_name:
            raise TreeplexError("duplicate decision point name %r" % (s.name,))
        by_name[s.name] = s

    def actions_of(s):
        if isinstance(s.actions, (int, np.integer)):
            if s.actions < 1:
                raise TreeplexError("point %r needs at least one action" % (s.name,))
            return tuple(str(a) for a in range(int(s.actions)))
        acts = tuple(s.actions)
        if not acts:
            raise TreeplexError("point %r needs at least one action" % (s.name,))
        return acts

    actions = {s.name: actions_of(s) for s in specs}
    children = {}
    seen_as_child = set()
    for s in specs:
        n = len(actions[s.name])
        kids = s.children if s.children is not None else [()] * n
        if len(kids) != n:
            raise TreeplexError("point %r: %d child lists for %d actions" % (s.name, len(kids), n))
        kids = [tuple(k) for k in kids]
        for group in kids:
            for c in group:
                if c not in by_name:
                    raise TreeplexError("point %r references unknown child %r" % (s.name, c))
                if c in seen_as_child:
                    raise CycleOrSharedChild("point %r is the child of two sequences" % (c,))
                seen_as_child.add(c)
        children[s.name] = kids

    roots = [s.name for s in specs if s.name not in seen_as_child]
    if not roots:
        raise CycleOrSharedChild("no root: the child relation contains a cycle")
    domains = {s.name: (s.domain or FullSimplex()) for s in specs}
    for name, dom in domains.items():
        dom.lower_bounds(len(actions[name]))
    if len(roots) > 1:
        root = DUMMY_ROOT
        while root in by_name:
            root = "_" + root
        actions[root] = ("start",)
        children[root] = [tuple(roots)]
        domains[root] = FullSimplex()
    else:
        root = roots[0]

    order, queue, parent_of = [], deque([root]), {root: None}
    while queue:
        name = queue.popleft()
        order.append(name)
        for a, group in enumerate(children[name]):
            for c in group:
                parent_of[c] = (name, a)
                queue.append(c)
    if len(order) != len(actions):
        raise CycleOrSharedChild("some decision points are unreachable from the root (cycle)")

    ids = {name: i for i, name in enumerate(order)}
    first, seq = {}, 0
    for name in order:
        first[name] = seq
        seq += len(actions[name])
    points = []
    for name in order:
        par = parent_of[name]
        parent_seq = ROOT if par is None else first[par[0]] + par[1]
        kids = tuple(tuple(ids[c] for c in group) for group in children[name])
        points.append(DecisionPoint(ids[name], name, actions[name], parent_seq,
                                    first[name], kids, domains[name]))
    return Treeplex(points)


def to_sequence_form(tp: Treeplex, x) -> np.ndarray:
    """Map a behavioral strategy to its sequence-form vector."""
    x = np.asarray(x, dtype=float)
    mu = np.empty(tp.n_sequences)
    for lev in tp.levels:
        if lev.parents is None:
            mu[lev.s0:lev.s1] = x[lev.s0:lev.s1]
        else:
            mass = np.repeat(mu[lev.parents], tp.sizes[lev.p0:lev.p1])
            mu[lev.s0:lev.s1] = x[lev.s0:lev.s1] * mass
    return mu


def parent_mass(tp: Treeplex, m) -> np.ndarray:
    """Sequence-form mass of every decision point's parent sequence (1 at the root)."""
    m = np.asarray(m, dtype=float)
    out = np.ones(tp.n_points)
    nonroot = tp.parent_sequence >= 0
    out[nonroot] = m[tp.parent_sequence[nonroot]]
    return out


def from_sequence_form(tp: Treeplex, m, tol: float = 1e-6) -> np.ndarray:
    """Recover a behavioral strategy; unreached points get the domain's uniform point."""
    m = np.asarray(m, dtype=float)
    parent = parent_mass(tp, m)
    err = np.abs(tp.reduce(m) - parent)
    if err.max() > tol:
        j = int(err.argmax())
        raise FlowViolation("flow violated at decision point %d (%s) by %.3g"
                            % (j, tp.names[j], err[j]))
    reached = parent > 0
    x = tp.uniform_strategy()
    seq_reached = tp.expand(reached)
    x[seq_reached] = m[seq_reached] / tp.expand(parent)[seq_reached]
    return x


def reach(tp: Treeplex, x, j: Optional[int] = None):
    """Product of the agent's own probabilities on the path to each decision point."""
    pi = parent_mass(tp, to_sequence_form(tp, x))
    return pi if j is None else float(pi[j])


def subtree_values(tp: Treeplex, x, local_values):
    """Bottom-up subtree values given the per-point local loss values.

    Returns ``(values, child_sums)`` where ``child_sums[s]`` is the total value
    of the decision points that follow sequence ``s``.
    """
    x = np.asarray(x, dtype=float)
    values = np.array(local_values, dtype=float)
    child_sums = np.zeros(tp.n_sequences)
    for lev in reversed(tp.levels):
        prod = x[lev.s0:lev.s1] * child_sums[lev.s0:lev.s1]
        values[lev.p0:lev.p1] += np.add.reduceat(prod, lev.local_starts)
        if lev.parents is not None:
            np.add.at(child_sums, lev.parents, values[lev.p0:lev.p1])
    return values, child_sums


def bottom_up_values(tp: Treeplex, x, loss) -> np.ndarray:
    """Values ``V_j = l_j(x_j) + sum_a x_{j,a} sum_{j' in C(j,a)} V_j'`` for every point."""
    return subtree_values(tp, x, loss.point_values(x))[0]


def expected_loss(tp: Treeplex, x, loss) -> float:
    """Separable loss ``sum_j pi_j(x) l_j(x_j)``, evaluated as the root value."""
    return float(bottom_up_values(tp, x, loss)[tp.root])


def best_response_values(tp: Treeplex, loss):
    """Bottom-up exact minimization of a separable loss.

    Returns ``(x, values)`` with ``values[j]`` the minimum of the subtree loss
    rooted at ``j``.
    """
    x = np.empty(tp.n_sequences)
    values = np.empty(tp.n_points)
    child_sums = np.zeros(tp.n_sequences)
    lin, tau, quad, const = loss.linear, loss.entropy, loss.quadratic, loss.constant
    lb = tp.lower_bounds if tp.perturbed else None
    for lev in reversed(tp.levels):
        for _, pts, idx in lev.groups:
            X, v = local_argmin(lin[idx] + child_sums[idx], tau[pts], quad[pts],
                                None if lb is None else lb[idx])
            x[idx] = X
            values[pts] = v + const[pts]
        if lev.parents is not None:
            np.add.at(child_sums, lev.parents, values[lev.p0:lev.p1])
    return x, values


def best_response(tp: Treeplex, loss):
    """Return ``(argmin, min)`` of a separable loss over the whole treeplex."""
    x, values = best_response_values(tp, loss)
    return x, float(values[tp.root])


def best_response_differential(previous, tp: Treeplex, cumulative_loss):
    """Change of every subtree's best-response value between two rounds.

    ``previous`` holds each subtree's best-response value for the cumulative
    loss of the previous round (``None`` or zeros before the first round).
    Returns ``(differential, current)``.
    """
    _, current = best_response_values(tp, cumulative_loss)
    if previous is None:
        previous = np.zeros(tp.n_points)
    return current - previous, current


def max_value_pass(tp: Treeplex, local_values) -> np.ndarray:
    """Bottom-up ``B_j = r_j + max_{x_j in X_j} sum_a x_{j,a} sum_{j'} B_j'``."""
    values = np.array(local_values, dtype=float)
    child_sums = np.zeros(tp.n_sequences)
    lb = tp.lower_bounds if tp.perturbed else None
    for lev in reversed(tp.levels):
        for _, pts, idx in lev.groups:
            C = child_sums[idx]
            if lb is None:
                values[pts] += C.max(axis=1)
            else:
                L = lb[idx]
                values[pts] += (C * L).sum(axis=1) + (1 - L.sum(axis=1)) * C.max(axis=1)
        if lev.parents is not None:
            np.add.at(child_sums, lev.parents, values[lev.p0:lev.p1])
    return values
