"""Benchmark two-player zero-sum games in sequence form.

Each game is described at the rules level (a small class walking histories)
and compiled by :func:`compile_game`, which walks the full game tree once,
collects both players' information sets into treeplexes, and folds chance
probabilities into a sparse sequence-form payoff matrix ``A``.

Sign convention: ``A`` holds the payoff to player 1 (the ``x`` player), so
``mu(x) @ A @ mu(y)`` is player 1's expected utility.  Player 1's loss is
``<-A mu(y), mu(x)>`` and player 2's loss is ``<A^T mu(x), mu(y)>``.
"""

from __future__ import annotations

import dataclasses
import itertools
from collections import defaultdict
from typing import Optional

import numpy as np
import scipy.sparse as sp

from .losses import SeparableLoss
from .treeplex import PerturbedSimplex, PointSpec, Treeplex, build_treeplex, to_sequence_form

CHANCE = -1


class InvalidParameter(ValueError):
    pass


class PerfectRecallError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class GameInstance:
    name: str
    treeplex_x: Treeplex
    treeplex_y: Treeplex
    payoff: sp.csr_matrix
    payoff_t: sp.csr_matrix
    regularizer_x: Optional[SeparableLoss] = None
    regularizer_y: Optional[SeparableLoss] = None
    rules: object = None

    def with_regularizers(self, regularizer_x=None, regularizer_y=None) -> "GameInstance":
        return dataclasses.replace(self, regularizer_x=regularizer_x, regularizer_y=regularizer_y)

    def utility(self, x, y) -> float:
        """Player 1's expected payoff for behavioral strategies ``x`` and ``y``."""
        return self.utility_seq(to_sequence_form(self.treeplex_x, x),
                                to_sequence_form(self.treeplex_y, y))

    def utility_seq(self, mu_x, mu_y) -> float:
        return float(mu_x @ (self.payoff @ mu_y))


class GameRules:
    """Rules-level game description.  States are immutable tuples."""

    name = "game"

    def initial(self):
        raise NotImplementedError

    def player(self, s) -> int:
        raise NotImplementedError

    def chance_outcomes(self, s):
        raise NotImplementedError

    def actions(self, s):
        raise NotImplementedError

    def infoset(self, s) -> str:
        raise NotImplementedError

    def apply(self, s, a):
        raise NotImplementedError

    def is_terminal(self, s) -> bool:
        raise NotImplementedError

    def payoff(self, s) -> float:
        """Payoff to player 1 at a terminal state."""
        raise NotImplementedError


def compile_game(rules: GameRules) -> GameInstance:
    """Walk the game tree and build both treeplexes and the payoff matrix."""
    infosets = [dict(), dict()]          # key -> (parent sequence, actions)
    children = [defaultdict(list), defaultdict(list)]
    order = [[], []]
    entries = defaultdict(float)

    def visit(s, prob, last):
        if rules.is_terminal(s):
            if last[0] is None or last[1] is None:
                raise ValueError("terminal history where a player never acted")
            u = rules.payoff(s)
            if u != 0.0:
                entries[(last[0], last[1])] += prob * u
            return
        p = rules.player(s)
        if p == CHANCE:
            for a, q in rules.chance_outcomes(s):
                visit(rules.apply(s, a), prob * q, last)
            return
        key = rules.infoset(s)
        acts = tuple(rules.actions(s))
        known = infosets[p].get(key)
        if known is None:
            infosets[p][key] = (last[p], acts)
            order[p].append(key)
            if last[p] is not None:
                children[p][last[p]].append(key)
        elif known != (last[p], acts):
            raise PerfectRecallError("information set %r reached along different paths" % (key,))
        for i, a in enumerate(acts):
            nxt = list(last)
            nxt[p] = (key, i)
            visit(rules.apply(s, a), prob, tuple(nxt))

    visit(rules.initial(), 1.0, (None, None))

    tps = []
    for p in (0, 1):
        specs = [PointSpec(k, infosets[p][k][1],
                           [children[p][(k, i)] for i in range(len(infosets[p][k][1]))])
                 for k in order[p]]
        tps.append(build_treeplex(specs))

    def seq(tp, ref):
        key, i = ref
        return int(tp.starts[tp.index(key)]) + i

    rows, cols, vals = [], [], []
    for (rx, ry), v in entries.items():
        rows.append(seq(tps[0], rx))
        cols.append(seq(tps[1], ry))
        vals.append(v)
    A = sp.csr_matrix((vals, (rows, cols)), shape=(tps[0].n_sequences, tps[1].n_sequences))
    return GameInstance(rules.name, tps[0], tps[1], A, A.T.tocsr(), rules=rules)


# --------------------------------------------------------------------- Kuhn

class KuhnRules(GameRules):
    """Three-card Kuhn poker with antes of 1 and a single bet of 1."""

    name = "kuhn"
    cards = ("J", "Q", "K")

    def initial(self):
        return (None, ())

    def player(self, s):
        deal, hist = s
        if deal is None:
            return CHANCE
        return len(hist) % 2

    def chance_outcomes(self, s):
        deals = list(itertools.permutations(range(3), 2))
        return [(d, 1.0 / len(deals)) for d in deals]

    def actions(self, s):
        hist = s[1]
        if hist and hist[-1] == "raise":
            return ("fold", "call")
        return ("check", "raise")

    def infoset(self, s):
        deal, hist = s
        card = self.cards[deal[len(hist) % 2]]
        return card + ("/" + ",".join(hist) if hist else "")

    def apply(self, s, a):
        deal, hist = s
        if deal is None:
            return (a, ())
        return (deal, hist + (a,))

    def is_terminal(self, s):
        hist = s[1]
        return hist in (("check", "check"), ("raise", "fold"), ("raise", "call"),
                        ("check", "raise", "fold"), ("check", "raise", "call"))

    def payoff(self, s):
        deal, hist = s
        if hist[-1] == "fold":
            return 1.0 if len(hist) == 2 else -1.0
        stake = 2.0 if "raise" in hist else 1.0
        return stake if deal[0] > deal[1] else -stake


def build_kuhn() -> GameInstance:
    return compile_game(KuhnRules())


# -------------------------------------------------------------------- Leduc

class LeducRules(GameRules):
    """Leduc hold'em with ``ranks`` ranks, two copies each.

    Ante 1; two betting rounds (bet size 1 then 2, at most two raises per
    round, player 1 first); a public card between rounds.  Pairing the public
    card wins, otherwise the higher rank; equal ranks split the pot.
    """

    def __init__(self, ranks: int = 3):
        if int(ranks) != ranks or ranks < 2:
            raise InvalidParameter("leduc needs ranks >= 2, got %r" % (ranks,))
        self.ranks = int(ranks)
        self.name = "leduc%d" % self.ranks

    @property
    def deck_size(self) -> int:
        return 2 * self.ranks

    # state: (cards, rounds) with cards a tuple of dealt ranks (p1, p2, public)
    # and rounds a tuple of per-round action tuples.
    def initial(self):
        return ((), ((),))

    def _round_over(self, rnd):
        return rnd[-2:] == ("check", "check") or (len(rnd) > 0 and rnd[-1] == "call")

    def player(self, s):
        cards, rounds = s
        if len(cards) < 2:
            return CHANCE
        rnd = rounds[-1]
        if len(rounds) == 1 and self._round_over(rnd):
            return CHANCE
        return len(rnd) % 2

    def chance_outcomes(self, s):
        cards = s[0]
        remaining = 2 * self.ranks - len(cards)
        out = []
        for r in range(self.ranks):
            left = 2 - cards.count(r)
            if left:
                out.append((r, left / remaining))
        return out

    def actions(self, s):
        rnd = s[1][-1]
        raises = rnd.count("raise")
        if rnd and rnd[-1] == "raise":
            return ("fold", "call", "raise") if raises < 2 else ("fold", "call")
        return ("check", "raise")

    def infoset(self, s):
        cards, rounds = s
        p = len(rounds[-1]) % 2
        pub = str(cards[2]) if len(cards) > 2 else "-"
        return "%d|%s|%s" % (cards[p], pub, "/".join(",".join(r) for r in rounds))

    def apply(self, s, a):
        cards, rounds = s
        if self.player(s) == CHANCE:
            cards = cards + (a,)
            if len(cards) == 3:
                rounds = rounds + ((),)
            return (cards, rounds)
        return (cards, rounds[:-1] + (rounds[-1] + (a,),))

    def is_terminal(self, s):
        cards, rounds = s
        rnd = rounds[-1]
        if rnd and rnd[-1] == "fold":
            return True
        return len(rounds) == 2 and self._round_over(rnd)

    def _contributions(self, rounds):
        c = [1.0, 1.0]
        for r, rnd in enumerate(rounds):
            bet = 1.0 if r == 0 else 2.0
            for i, a in enumerate(rnd):
                p = i % 2
                if a == "call":
                    c[p] = c[1 - p]
                elif a == "raise":
                    c[p] = c[1 - p] + bet
        return c

    def payoff(self, s):
        cards, rounds = s
        c = self._contributions(rounds)
        rnd = rounds[-1]
        if rnd[-1] == "fold":
            folder = (len(rnd) - 1) % 2
            return -c[0] if folder == 0 else c[1]
        p1, p2, pub = cards
        if p1 == pub:
            return c[1]
        if p2 == pub:
            return -c[0]
        if p1 == p2:
            return 0.0
        return c[1] if p1 > p2 else -c[0]


def build_leduc(ranks: int = 5) -> GameInstance:
    return compile_game(LeducRules(ranks))


# ---------------------------------------------------------------- Goofspiel

class GoofspielRules(GameRules):
    """Goofspiel with ``n`` cards per hand and a shuffled prize stack.

    Bids are simultaneous (player 2 does not see player 1's pending bid) and
    revealed after each turn.  Player 1's payoff is the difference of the
    prize totals; ties split the prize, contributing zero to the difference.
    """

    def __init__(self, n: int = 4):
        if int(n) != n or n < 2:
            raise InvalidParameter("goofspiel needs n >= 2, got %r" % (n,))
        self.n = int(n)
        self.name = "goofspiel%d" % self.n

    # state: (prizes, bids1, bids2, pending) ; pending is player 1's hidden bid
    def initial(self):
        return ((), (), (), None)

    def player(self, s):
        prizes, b1, b2, pending = s
        if len(prizes) == len(b1) and pending is None:
            return CHANCE
        return 0 if pending is None else 1

    def chance_outcomes(self, s):
        left = [c for c in range(1, self.n + 1) if c not in s[0]]
        return [(c, 1.0 / len(left)) for c in left]

    def actions(self, s):
        prizes, b1, b2, pending = s
        used = b1 if pending is None else b2
        return tuple(str(c) for c in range(1, self.n + 1) if c not in used)

    def infoset(self, s):
        prizes, b1, b2, _ = s
        return "%s|%s|%s" % (",".join(map(str, prizes)), ",".join(map(str, b1)),
                             ",".join(map(str, b2)))

    def apply(self, s, a):
        prizes, b1, b2, pending = s
        if self.player(s) == CHANCE:
            return (prizes + (a,), b1, b2, None)
        if pending is None:
            return (prizes, b1, b2, int(a))
        return (prizes, b1 + (pending,), b2 + (int(a),), None)

    def is_terminal(self, s):
        return len(s[1]) == self.n

    def payoff(self, s):
        prizes, b1, b2, _ = s
        total = 0.0
        for prize, u, v in zip(prizes, b1, b2):
            if u > v:
                total += prize
            elif u < v:
                total -= prize
        return total


def build_goofspiel(n: int = 4) -> GameInstance:
    return compile_game(GoofspielRules(n))


def perturb_treeplex(tp: Treeplex, eps: float) -> Treeplex:
    """Same treeplex with every multi-action point restricted to ``x_{j,a} >= eps``."""
    specs = []
    for p in tp.points:
        kids = [[tp.names[c] for c in group] for group in p.children]
        dom = PerturbedSimplex([eps] * p.n_actions) if p.n_actions > 1 and eps > 0 else None
        specs.append(PointSpec(p.name, p.actions, kids, dom))
    out = build_treeplex(specs)
    if out.names != tp.names:
        raise AssertionError("perturbation changed the point layout")
    return out


def perturb_game(game: GameInstance, eps: float) -> GameInstance:
    """Restrict both players to epsilon-perturbed simplexes (equilibrium refinement)."""
    if not 0 <= eps:
        raise InvalidParameter("eps must be nonnegative, got %r" % (eps,))
    tx = perturb_treeplex(game.treeplex_x, eps)
    ty = perturb_treeplex(game.treeplex_y, eps)
    return dataclasses.replace(game, treeplex_x=tx, treeplex_y=ty)


def load_game(spec: str) -> GameInstance:
    """Build a game from ``kuhn``, ``leduc:RANKS`` or ``goofspiel:N``."""
    name, _, arg = spec.partition(":")
    try:
        if name == "kuhn" and not arg:
            return build_kuhn()
        if name == "leduc":
            return build_leduc(int(arg) if arg else 5)
        if name == "goofspiel":
            return build_goofspiel(int(arg) if arg else 4)
    except ValueError as exc:
        raise InvalidParameter("bad game spec %r: %s" % (spec, exc)) from exc
    raise InvalidParameter("unknown game %r" % (spec,))


def kuhn_equilibrium(game: GameInstance, alpha: float = 0.0):
    """Kuhn's analytic equilibrium family (player 1 bluff frequency ``alpha`` in [0, 1/3])."""
    tx, ty = game.treeplex_x, game.treeplex_y
    x = np.zeros(tx.n_sequences)
    y = np.zeros(ty.n_sequences)
    p1 = {
        "J": (1 - alpha, alpha), "Q": (1.0, 0.0), "K": (1 - 3 * alpha, 3 * alpha),
        "J/check,raise": (1.0, 0.0), "Q/check,raise": (2 / 3 - alpha, 1 / 3 + alpha),
        "K/check,raise": (0.0, 1.0),
    }
    p2 = {
        "J/check": (2 / 3, 1 / 3), "Q/check": (1.0, 0.0), "K/check": (0.0, 1.0),
        "J/raise": (1.0, 0.0), "Q/raise": (2 / 3, 1 / 3), "K/raise": (0.0, 1.0),
    }
    for tp, v, table in ((tx, x, p1), (ty, y, p2)):
        tp.block(v, 0)[:] = 1.0
        for name, probs in table.items():
            tp.block(v, tp.index(name))[:] = probs
    return x, y
