"""Input validation for strategies and games."""

from __future__ import annotations

import numpy as np
from sklearn.utils import check_array

from .treeplex import FlowViolation, Treeplex, parent_mass


def _as_vector(tp: Treeplex, v, what: str) -> np.ndarray:
    v = check_array(np.asarray(v, dtype=float).reshape(1, -1), ensure_all_finite=True,
                    input_name=what)[0]
    if v.shape[0] != tp.n_sequences:
        raise ValueError("%s has %d entries, the treeplex has %d sequences"
                         % (what, v.shape[0], tp.n_sequences))
    return v


def check_behavioral(tp: Treeplex, x, tol: float = 1e-9) -> np.ndarray:
    """Return ``x`` as a float vector after checking every block lies in its domain."""
    x = _as_vector(tp, x, "behavioral strategy")
    if np.any(x < tp.lower_bounds - tol):
        raise ValueError("behavioral strategy violates a lower bound")
    err = np.abs(tp.reduce(x) - 1.0)
    if err.max() > tol:
        j = int(err.argmax())
        raise ValueError("block of decision point %r sums to %r" % (tp.names[j], tp.reduce(x)[j]))
    return x


def check_sequence_form(tp: Treeplex, m, tol: float = 1e-9) -> np.ndarray:
    """Return ``m`` after checking bounds and flow conservation."""
    m = _as_vector(tp, m, "sequence-form strategy")
    if np.any(m < -tol) or np.any(m > 1 + tol):
        raise ValueError("sequence-form entries must lie in [0, 1]")
    err = np.abs(tp.reduce(m) - parent_mass(tp, m))
    if err.max() > tol:
        j = int(err.argmax())
        raise FlowViolation("flow violated at decision point %r by %.3g" % (tp.names[j], err[j]))
    return m


def check_game(game) -> None:
    """Check that a game's payoff matrix matches its two treeplexes."""
    for attr in ("treeplex_x", "treeplex_y", "payoff", "payoff_t"):
        if not hasattr(game, attr):
            raise TypeError("expected a GameInstance, got %r" % (type(game).__name__,))
    shape = (game.treeplex_x.n_sequences, game.treeplex_y.n_sequences)
    if game.payoff.shape != shape or game.payoff_t.shape != shape[::-1]:
        raise ValueError("payoff matrix shape %s does not match treeplexes %s"
                         % (game.payoff.shape, shape))
    if not np.all(np.isfinite(game.payoff.data)):
        raise ValueError("payoff matrix has non-finite entries")
