"""Laminar regret decomposition and two-player self-play.

:class:`LaminarRegretSolver` minimizes regret over a whole treeplex by running
one local regret minimizer per decision point on its *laminar* loss: the point's
own convex loss plus, for every action, a linear term equal to the value of the
subtrees below that action.  In ``"cfr"`` mode the subtree value is the
counterfactual value of the current strategy; in ``"brd"`` mode it is the
change of the subtree's best-response value to the cumulative loss (which
equals the counterfactual value minus the round's increase of subtree regret).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .losses import SeparableLoss, dilated_value, game_loss_for_X, game_loss_for_Y
from .minimizers import local_argmin, make_minimizer, external_regret, LocalLoss
from .treeplex import (Treeplex, best_response, best_response_values, from_sequence_form,
                       max_value_pass, subtree_values, to_sequence_form)

MODES = ("cfr", "brd")
SCHEDULES = ("simultaneous", "alternation")
AVERAGING = ("uniform", "linear")


class LaminarRegretSolver:
    """Regret minimizer for a treeplex built from local minimizers.

    Parameters
    ----------
    treeplex : Treeplex
    minimizer : {"rm", "rmplus", "ogd"}
    mode : {"cfr", "brd"}
    step_scale, step_exponent : float
        OGD step rule ``eta_t = step_scale * t ** -step_exponent``.
    keep_history : bool
        Record every observed loss, played strategy and laminar child
        coefficient (used by the exact recomputation checks in the tests).
    """

    def __init__(self, treeplex: Treeplex, minimizer: str = "rmplus", mode: str = "cfr",
                 step_scale: float = 1.0, step_exponent: float = 0.5,
                 keep_history: bool = False):
        if mode not in MODES:
            raise ValueError("mode must be one of %s, got %r" % (MODES, mode))
        self.treeplex = tp = treeplex
        self.mode = mode
        self.minimizer = minimizer
        options = {}
        if minimizer == "ogd":
            options = dict(step_scale=step_scale, step_exponent=step_exponent)
        self._locals = [
            (idx, make_minimizer(minimizer, n, len(pts),
                                 tp.lower_bounds[idx] if tp.perturbed else None, **options))
            for n, pts, idx in tp.groups
        ]
        self.iteration = 0
        self.cumulative_loss = SeparableLoss(tp)
        self.cumulative_laminar = SeparableLoss(tp)
        self.played_loss = 0.0
        self.played_laminar = np.zeros(tp.n_points)
        self._best_values = np.zeros(tp.n_points)
        self._nonroot = np.flatnonzero(tp.parent_sequence >= 0)
        self.history: Optional[List] = [] if keep_history else None

    def recommend(self) -> np.ndarray:
        x = np.empty(self.treeplex.n_sequences)
        for idx, m in self._locals:
            x[idx] = m.recommend()
        return x

    def child_coefficients(self, loss: SeparableLoss, played) -> tuple:
        """Per-sequence child terms of the laminar loss and the subtree values.

        In ``brd`` mode this also advances the stored best-response values, so
        it must be called exactly once per round (``observe`` does so).
        """
        tp = self.treeplex
        values, child_sums = subtree_values(tp, played, loss.point_values(played))
        if self.mode == "cfr":
            return child_sums, values
        cumulative = self.cumulative_loss + loss
        _, current = best_response_values(tp, cumulative)
        diff = current - self._best_values
        self._best_values = current
        coeffs = np.zeros(tp.n_sequences)
        np.add.at(coeffs, tp.parent_sequence[self._nonroot], diff[self._nonroot])
        return coeffs, values

    def observe(self, loss: SeparableLoss, played) -> None:
        """Feed the round's separable loss evaluated at the played strategy."""
        played = np.asarray(played, dtype=float)
        coeffs, values = self.child_coefficients(loss, played)
        laminar = loss.with_linear(coeffs)
        grads = laminar.point_gradients(played)
        for idx, m in self._locals:
            m.observe(grads[idx], played[idx])
        self.played_laminar += laminar.point_values(played)
        self.cumulative_laminar = self.cumulative_laminar + laminar
        self.cumulative_loss = self.cumulative_loss + loss
        self.played_loss += float(values[self.treeplex.root])
        self.iteration += 1
        if self.history is not None:
            self.history.append((loss, played.copy(), coeffs))

    def laminar_regrets(self) -> np.ndarray:
        """Cumulative laminar regret at every decision point."""
        tp = self.treeplex
        cum = self.cumulative_laminar
        best = np.empty(tp.n_points)
        for _, pts, idx in tp.groups:
            _, v = local_argmin(cum.linear[idx], cum.entropy[pts], cum.quadratic[pts],
                                tp.lower_bounds[idx] if tp.perturbed else None)
            best[pts] = v + cum.constant[pts]
        return self.played_laminar - best

    def regret_bound(self) -> float:
        """Upper bound ``max_x sum_j pi_j(x) R_j`` on the cumulative regret."""
        return float(max_value_pass(self.treeplex, self.laminar_regrets())[self.treeplex.root])

    def regret(self) -> float:
        """Exact cumulative external regret over the whole treeplex."""
        if self.iteration == 0:
            return 0.0
        return self.played_loss - best_response(self.treeplex, self.cumulative_loss)[1]

    def average_regret(self) -> float:
        return self.regret() / max(self.iteration, 1)

    def laminar_regret_report(self):
        """Return ``(per-point laminar regrets, bound on the cumulative regret)``."""
        if self.iteration < 1:
            raise ValueError("no rounds observed yet")
        r = self.laminar_regrets()
        return r, float(max_value_pass(self.treeplex, r)[self.treeplex.root])


class RunAverages:
    """Uniform and linear (weight ``t``) averages of sequence-form iterates."""

    def __init__(self, treeplex: Treeplex):
        self.treeplex = treeplex
        self.uniform = np.zeros(treeplex.n_sequences)
        self.linear = np.zeros(treeplex.n_sequences)
        self.count = 0
        self.linear_weight = 0.0

    def update(self, mu, t: Optional[int] = None) -> None:
        t = self.count + 1 if t is None else t
        if t < 1:
            raise ValueError("t must be >= 1")
        mu = np.asarray(mu, dtype=float)
        self.count += 1
        self.uniform += (mu - self.uniform) / self.count
        self.linear_weight += t
        self.linear += (t / self.linear_weight) * (mu - self.linear)

    def sequence_form(self, scheme: str = "uniform") -> np.ndarray:
        if scheme not in AVERAGING:
            raise ValueError("unknown averaging scheme %r" % (scheme,))
        return self.uniform if scheme == "uniform" else self.linear

    def behavioral(self, scheme: str = "uniform") -> np.ndarray:
        return from_sequence_form(self.treeplex, self.sequence_form(scheme))


def update_average(avg: RunAverages, x, t: int) -> RunAverages:
    avg.update(to_sequence_form(avg.treeplex, x), t)
    return avg


def _reg_value(tp, x, reg):
    return 0.0 if reg is None else dilated_value(tp, x, reg, check=False)


def saddle_point_gap(game, x, y) -> float:
    """Saddle-point residual of the behavioral profile ``(x, y)``.

    ``max_y' F(x, y') - min_x' F(x', y)`` for ``F(x, y) = -mu(x) A mu(y) +
    d_1(x) - d_2(y)``; both inner problems are solved exactly.
    """
    tx, ty = game.treeplex_x, game.treeplex_y
    mx, my = to_sequence_form(tx, x), to_sequence_form(ty, y)
    bx = best_response(tx, game_loss_for_X(game, my))[1]
    by = best_response(ty, game_loss_for_Y(game, mx))[1]
    return (_reg_value(tx, x, game.regularizer_x) + _reg_value(ty, y, game.regularizer_y)
            - bx - by)


def softmax_stationarity_residual(game, x, y) -> float:
    """Largest deviation of ``x_j`` from the softmax of its own laminar coefficients.

    At an entropy-regularized equilibrium every local strategy is the softmax
    of ``-(c_j + child values)/tau_j``; points without entropy are skipped.
    """
    worst = 0.0
    for tp, own, loss in ((game.treeplex_x, x, game_loss_for_X(game, to_sequence_form(game.treeplex_y, y))),
                          (game.treeplex_y, y, game_loss_for_Y(game, to_sequence_form(game.treeplex_x, x)))):
        own = np.asarray(own, dtype=float)
        _, child_sums = subtree_values(tp, own, loss.point_values(own))
        C = loss.linear + child_sums
        for _, pts, idx in tp.groups:
            tau = loss.entropy[pts]
            keep = tau > 0
            if not keep.any():
                continue
            Z = -C[idx[keep]] / tau[keep][:, None]
            Z = np.exp(Z - Z.max(axis=1, keepdims=True))
            target = Z / Z.sum(axis=1, keepdims=True)
            worst = max(worst, float(np.abs(own[idx[keep]] - target).max()))
    return worst


@dataclass
class TraceRow:
    iteration: int
    gap_uniform: float
    gap_linear: float
    avg_regret_x: float
    avg_regret_y: float
    bound_x: float
    bound_y: float

    FIELDS = ("iter", "gap_uniform", "gap_linear", "avg_regret_x", "avg_regret_y",
              "bound_x", "bound_y")

    def as_tuple(self):
        return (self.iteration, self.gap_uniform, self.gap_linear, self.avg_regret_x,
                self.avg_regret_y, self.bound_x, self.bound_y)


def parse_algorithm(spec: str, step_scale: float = 1.0) -> tuple:
    """Split ``"ogd:c"`` into ``("ogd", c)``; other names keep ``step_scale``."""
    kind, _, arg = str(spec).partition(":")
    if arg:
        if kind != "ogd":
            raise ValueError("only ogd takes a step scale, got %r" % (spec,))
        step_scale = float(arg)
        if not step_scale > 0:
            raise ValueError("ogd step scale must be positive, got %r" % (spec,))
    return kind, step_scale


class SelfPlay:
    """Two laminar solvers playing a game against each other.

    ``schedule="simultaneous"`` builds both round-``t`` losses from the other
    player's round-``t`` strategy.  ``"alternation"`` lets player 2 observe the
    loss built from player 1's newest strategy before it recommends.
    """

    def __init__(self, game, algo_x: str = "rmplus", algo_y: str = "rmplus",
                 mode: str = "cfr", schedule: str = "simultaneous",
                 step_scale: float = 1.0, step_exponent: float = 0.5,
                 keep_history: bool = False):
        if schedule not in SCHEDULES:
            raise ValueError("schedule must be one of %s, got %r" % (SCHEDULES, schedule))
        self.game = game
        self.schedule = schedule
        opts = dict(mode=mode, step_exponent=step_exponent, keep_history=keep_history)
        kind_x, scale_x = parse_algorithm(algo_x, step_scale)
        kind_y, scale_y = parse_algorithm(algo_y, step_scale)
        self.solver_x = LaminarRegretSolver(game.treeplex_x, kind_x, step_scale=scale_x, **opts)
        self.solver_y = LaminarRegretSolver(game.treeplex_y, kind_y, step_scale=scale_y, **opts)
        self.avg_x = RunAverages(game.treeplex_x)
        self.avg_y = RunAverages(game.treeplex_y)
        self.t = 0
        self._last_y = None

    def step(self):
        g = self.game
        tx, ty = g.treeplex_x, g.treeplex_y
        self.t += 1
        x = self.solver_x.recommend()
        mx = to_sequence_form(tx, x)
        if self.schedule == "simultaneous":
            y = self.solver_y.recommend()
            my = to_sequence_form(ty, y)
            lx, ly = game_loss_for_X(g, my), game_loss_for_Y(g, mx)
            self.solver_x.observe(lx, x)
            self.solver_y.observe(ly, y)
        else:
            if self._last_y is not None:
                self.solver_y.observe(game_loss_for_Y(g, mx), self._last_y)
            y = self.solver_y.recommend()
            my = to_sequence_form(ty, y)
            self.solver_x.observe(game_loss_for_X(g, my), x)
            self._last_y = y
        self.avg_x.update(mx, self.t)
        self.avg_y.update(my, self.t)
        return x, y

    def average(self, scheme: str = "uniform"):
        return self.avg_x.behavioral(scheme), self.avg_y.behavioral(scheme)

    def gap(self, scheme: str = "uniform") -> float:
        return saddle_point_gap(self.game, *self.average(scheme))

    def trace_row(self) -> TraceRow:
        sx, sy = self.solver_x, self.solver_y
        tx = max(sx.iteration, 1)
        ty = max(sy.iteration, 1)
        bx = sx.regret_bound() / tx if sx.iteration else 0.0
        by = sy.regret_bound() / ty if sy.iteration else 0.0
        return TraceRow(self.t, self.gap("uniform"), self.gap("linear"),
                        sx.regret() / tx, sy.regret() / ty, bx, by)


def self_play_step(state: SelfPlay, game=None, schedule=None):
    """One round of self-play; ``game`` and ``schedule`` are taken from ``state``."""
    return state.step()


def solve(game, iterations: int, algo_x: str = "rmplus", algo_y: str = "rmplus",
          mode: str = "cfr", schedule: str = "simultaneous", gap_every: int = 10,
          step_scale: float = 1.0, step_exponent: float = 0.5,
          target_gap: Optional[float] = None, target_scheme: str = "uniform",
          callback=None):
    """Run self-play and return ``(SelfPlay, trace rows)``.

    A trace row is recorded every ``gap_every`` iterations (and at the last
    one).  With ``target_gap`` the run stops at the first evaluated iteration
    whose ``target_scheme`` gap is at most the target.
    """
    if iterations < 1 or gap_every < 1:
        raise ValueError("iterations and gap_every must be positive")
    sp = SelfPlay(game, algo_x, algo_y, mode, schedule, step_scale, step_exponent)
    rows = []
    for t in range(1, iterations + 1):
        sp.step()
        if t % gap_every == 0 or t == iterations:
            row = sp.trace_row()
            rows.append(row)
            if callback is not None:
                callback(row)
            if target_gap is not None:
                gap = row.gap_uniform if target_scheme == "uniform" else row.gap_linear
                if gap <= target_gap:
                    break
    return sp, rows


@dataclass
class AlternationReport:
    rounds: int
    average_regret_x: float
    average_regret_y: float
    average_x: float
    average_y: float
    residual: float
    xs: list = field(repr=False, default_factory=list)
    ys: list = field(repr=False, default_factory=list)


def alternation_counterexample(T: int) -> AlternationReport:
    """Bilinear ``x * y`` on ``[0, 1]^2`` with the alternating loss schedule.

    Plays ``x^t = t mod 2`` and ``y^t = (t + 1) mod 2`` for ``2T`` rounds with
    losses ``x -> x * y^t`` and ``y -> -y * x^(t+1)``; both players end with
    zero average regret while the average profile ``(1/2, 1/2)`` has residual
    ``1/2``.  The interval is encoded as the first coordinate of a 2-simplex.
    """
    if T < 1:
        raise ValueError("T must be positive")
    rounds = 2 * T
    xs = [t % 2 for t in range(1, rounds + 2)]
    ys = [(t + 1) % 2 for t in range(1, rounds + 1)]
    hist_x, hist_y = [], []
    for t in range(1, rounds + 1):
        x, y, x_next = xs[t - 1], ys[t - 1], xs[t]
        hist_x.append((LocalLoss([float(y), 0.0]), [float(x), 1.0 - x]))
        hist_y.append((LocalLoss([-float(x_next), 0.0]), [float(y), 1.0 - y]))
    xbar = sum(xs[:rounds]) / rounds
    ybar = sum(ys) / rounds
    # residual of (xbar, ybar) for min_x max_y x*y over [0, 1]^2
    _, best_y = local_argmin(np.array([[-xbar, 0.0]]), [0.0], [0.0])
    _, best_x = local_argmin(np.array([[ybar, 0.0]]), [0.0], [0.0])
    residual = float(-best_y[0] - best_x[0])
    return AlternationReport(rounds, external_regret(hist_x) / rounds,
                             external_regret(hist_y) / rounds, xbar, ybar, residual,
                             xs[:rounds], ys)
