"""Exploiting a fixed opponent while staying close to an equilibrium.

The learner controls player 1 and faces pure strategies sampled from a static
opponent ``y*``.  Its round loss is the game loss against the sample plus
``alpha`` times the dilated l2 distance to an equilibrium anchor ``x_ne``, so
large ``alpha`` keeps it at the anchor and ``alpha = 0`` drives it toward a
best response.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import List, NamedTuple, Optional, Sequence

import numpy as np

from .losses import exploitation_loss, game_loss_for_X, game_loss_for_Y
from .solver import LaminarRegretSolver, RunAverages, solve
from .treeplex import Treeplex, best_response, to_sequence_form


@dataclass(frozen=True)
class ExploitConfig:
    """Settings of one exploitation run.

    ``step_scale=None`` picks the OGD scale ``1 / max(1, alpha)``, which keeps
    the step proportional to the inverse curvature of the anchor penalty.
    """

    alpha: float = 0.0
    max_iterations: int = 5000
    regret_threshold: float = 5e-4
    seed: int = 0
    opponent: Optional[np.ndarray] = None
    anchor: Optional[np.ndarray] = None
    minimizer: str = "ogd"
    step_scale: Optional[float] = None

    def __post_init__(self):
        if self.alpha < 0:
            raise ValueError("alpha must be nonnegative")
        if self.max_iterations < 1 or self.regret_threshold <= 0:
            raise ValueError("max_iterations and regret_threshold must be positive")


class ExploitResult(NamedTuple):
    strategy: np.ndarray
    iterations: int
    trace: List[tuple]


def sample_pure_strategy(tp: Treeplex, y, rng: np.random.Generator) -> np.ndarray:
    """Draw one action per decision point from behavioral ``y``; return its sequence form."""
    y = np.asarray(y, dtype=float)
    pure = np.zeros(tp.n_sequences)
    for n, pts, idx in tp.groups:
        cdf = np.cumsum(y[idx], axis=1)
        u = rng.random(len(pts)) * cdf[:, -1]
        choice = np.minimum((cdf <= u[:, None]).sum(axis=1), n - 1)
        pure[idx[np.arange(len(pts)), choice]] = 1.0
    return to_sequence_form(tp, pure)


def exploit_run(game, cfg: ExploitConfig) -> ExploitResult:
    """Learn against samples of ``cfg.opponent``; return the uniform average strategy.

    Stops after ``cfg.max_iterations`` rounds or as soon as the average regret
    against the sampled losses is at most ``cfg.regret_threshold``.  The trace
    holds ``(iteration, average regret)`` per round.
    """
    if cfg.opponent is None or cfg.anchor is None:
        raise ValueError("exploit_run needs both an opponent and an anchor strategy")
    tx, ty = game.treeplex_x, game.treeplex_y
    scale = cfg.step_scale if cfg.step_scale is not None else 1.0 / max(1.0, cfg.alpha)
    solver = LaminarRegretSolver(tx, cfg.minimizer, step_scale=scale)
    avg = RunAverages(tx)
    rng = np.random.default_rng(cfg.seed)
    trace = []
    for t in range(1, cfg.max_iterations + 1):
        x = solver.recommend()
        avg.update(to_sequence_form(tx, x))
        sample = sample_pure_strategy(ty, cfg.opponent, rng)
        solver.observe(exploitation_loss(game, sample, cfg.anchor, cfg.alpha), x)
        r = solver.average_regret()
        trace.append((t, r))
        if r <= cfg.regret_threshold:
            break
    return ExploitResult(avg.behavioral("uniform"), t, trace)


def adversary_value(game, x) -> float:
    """Player 2's best-response gain ``max_y -u(x, y)`` against behavioral ``x``."""
    loss = game_loss_for_Y(game, to_sequence_form(game.treeplex_x, x))
    return -best_response(game.treeplex_y, loss)[1]


def best_response_gain(game, anchor, opponent) -> float:
    """Utility gain of a best response to ``opponent`` over playing ``anchor``."""
    loss = game_loss_for_X(game.with_regularizers(), to_sequence_form(game.treeplex_y, opponent))
    return -best_response(game.treeplex_x, loss)[1] - game.utility(anchor, opponent)


def evaluate_tradeoff(game, x, anchor, opponent) -> tuple:
    """Return ``(utility increase, exploitability)`` of ``x`` relative to ``anchor``."""
    gain = game.utility(x, opponent) - game.utility(anchor, opponent)
    exploitability = adversary_value(game, x) - adversary_value(game, anchor)
    return gain, exploitability


def reference_profiles(game, opponent_gap: float = 0.1, anchor_gap: float = 1e-3,
                       max_iterations: int = 100_000):
    """Opponent and anchor from regret-matching+ self-play.

    The opponent is player 2's uniform average at the first iteration whose
    gap is at most ``opponent_gap``.  The anchor is player 1's linear average
    from a separate run stopped at ``anchor_gap``.
    """
    sp, _ = solve(game, max_iterations, gap_every=1, target_gap=opponent_gap)
    opponent = sp.average("uniform")[1]
    sp, _ = solve(game, max_iterations, gap_every=10, target_gap=anchor_gap,
                  target_scheme="linear")
    anchor = sp.average("linear")[0]
    return opponent, anchor


def default_alpha_grid(count: int = 8) -> np.ndarray:
    """Log-spaced penalties over ``[1e-3, 1e2]`` in decreasing order."""
    return np.logspace(2, -3, count)


@dataclass
class SweepRow:
    alpha: float
    utility_increase: float
    exploitability: float
    iterations_used: int

    FIELDS = ("alpha", "utility_increase", "exploitability", "iterations_used")

    def as_tuple(self):
        return (self.alpha, self.utility_increase, self.exploitability, self.iterations_used)


def sweep(game, alphas: Sequence[float], base: ExploitConfig, workers: int = 1) -> List[SweepRow]:
    """Run one exploitation per ``alpha`` (in the given order) and a best-response row.

    The final row, with ``alpha = 0`` and zero iterations, reports an exact best
    response to the opponent (the maximal-exploitation end of the curve).
    """
    def one(alpha):
        res = exploit_run(game, replace(base, alpha=float(alpha)))
        gain, expl = evaluate_tradeoff(game, res.strategy, base.anchor, base.opponent)
        return SweepRow(float(alpha), gain, expl, res.iterations)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(one, alphas))
    else:
        rows = [one(a) for a in alphas]
    tx = game.treeplex_x
    loss = game_loss_for_X(game.with_regularizers(), to_sequence_form(game.treeplex_y, base.opponent))
    br = best_response(tx, loss)[0]
    gain, expl = evaluate_tradeoff(game, br, base.anchor, base.opponent)
    rows.append(SweepRow(0.0, gain, expl, 0))
    return rows
