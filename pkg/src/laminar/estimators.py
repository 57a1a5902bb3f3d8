"""scikit-learn style wrappers around the solvers.

``fit`` takes a :class:`~laminar.games.GameInstance` in place of a data
matrix.  Hyperparameters live in ``__init__`` so ``get_params``/``set_params``
and ``sklearn.base.clone`` work as usual.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .exploit import ExploitConfig, evaluate_tradeoff, exploit_run
from .losses import regularizer_from_spec
from .solver import saddle_point_gap, solve
from .validation import check_behavioral, check_game


def regularized(game, reg):
    """``game`` with the same dilated regularizer (``none|entropy:t|l2:b``) on both sides."""
    return game.with_regularizers(regularizer_from_spec(game.treeplex_x, reg),
                                  regularizer_from_spec(game.treeplex_y, reg))


class EquilibriumSolver(BaseEstimator):
    """Saddle-point solver by laminar regret self-play.

    After ``fit(game)``: ``strategy_x_``, ``strategy_y_`` (behavioral averages
    under ``averaging``), ``gap_``, ``n_iter_`` and ``trace_`` (list of
    :class:`~laminar.solver.TraceRow`).
    """

    def __init__(self, algo_x="rmplus", algo_y="rmplus", mode="cfr", schedule="simultaneous",
                 averaging="uniform", reg="none", iterations=1000, gap_every=10,
                 step_scale=1.0, step_exponent=0.5, target_gap=None):
        self.algo_x = algo_x
        self.algo_y = algo_y
        self.mode = mode
        self.schedule = schedule
        self.averaging = averaging
        self.reg = reg
        self.iterations = iterations
        self.gap_every = gap_every
        self.step_scale = step_scale
        self.step_exponent = step_exponent
        self.target_gap = target_gap

    def fit(self, game, y=None):
        check_game(game)
        g = regularized(game, self.reg)
        sp, rows = solve(g, self.iterations, self.algo_x, self.algo_y, self.mode, self.schedule,
                         self.gap_every, self.step_scale, self.step_exponent,
                         target_gap=self.target_gap, target_scheme=self.averaging)
        self.strategy_x_, self.strategy_y_ = sp.average(self.averaging)
        self.gap_ = saddle_point_gap(g, self.strategy_x_, self.strategy_y_)
        self.n_iter_ = sp.t
        self.trace_ = rows
        return self

    def score(self, game, y=None) -> float:
        """Negated saddle-point gap of the fitted profile on ``game`` (higher is better)."""
        check_is_fitted(self, "strategy_x_")
        return -saddle_point_gap(regularized(game, self.reg), self.strategy_x_, self.strategy_y_)


class ExploitLearner(BaseEstimator):
    """Nash-anchored exploitation of a fixed opponent.

    ``fit(game, opponent=..., anchor=...)`` sets ``strategy_``, ``n_iter_``,
    ``trace_``, ``utility_increase_`` and ``exploitability_``.
    """

    def __init__(self, alpha=1.0, max_iterations=5000, regret_threshold=5e-4, seed=0,
                 minimizer="ogd", step_scale=None):
        self.alpha = alpha
        self.max_iterations = max_iterations
        self.regret_threshold = regret_threshold
        self.seed = seed
        self.minimizer = minimizer
        self.step_scale = step_scale

    def fit(self, game, y=None, *, opponent, anchor):
        check_game(game)
        opponent = check_behavioral(game.treeplex_y, opponent)
        anchor = check_behavioral(game.treeplex_x, anchor)
        cfg = ExploitConfig(alpha=self.alpha, max_iterations=self.max_iterations,
                            regret_threshold=self.regret_threshold, seed=self.seed,
                            opponent=opponent, anchor=anchor, minimizer=self.minimizer,
                            step_scale=self.step_scale)
        res = exploit_run(game, cfg)
        self.strategy_ = res.strategy
        self.n_iter_ = res.iterations
        self.trace_ = res.trace
        self.utility_increase_, self.exploitability_ = evaluate_tradeoff(
            game, res.strategy, anchor, opponent)
        return self

    def score(self, game, y=None, *, opponent):
        check_is_fitted(self, "strategy_")
        return game.utility(self.strategy_, np.asarray(opponent, dtype=float))
