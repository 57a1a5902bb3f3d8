"""Separable convex losses over a treeplex.

Every per-point term used here fits one canonical form,

    l_j(x_j) = <c_j, x_j> + tau_j * sum_a x_a ln x_a + q_j / 2 * ||x_j||^2 + k_j,

which is closed under addition.  A :class:`SeparableLoss` stores the four
coefficient arrays, so cumulative losses are just sums and every local argmin
has a closed form (vertex, softmax or simplex projection).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Mapping, Sequence, Union

import numpy as np

from .minimizers import ENTROPY_CLAMP
from .treeplex import Treeplex, expected_loss, parent_mass, to_sequence_form


class DomainError(ValueError):
    """A loss was evaluated outside its domain."""


class DimensionMismatch(ValueError):
    pass


class InvalidParameter(ValueError):
    pass


def xlogx(x, clamp=True):
    x = np.asarray(x, dtype=float)
    if np.any(x < -1e-12):
        raise DomainError("entropy evaluated at a negative probability")
    if not clamp and np.any(x <= 0):
        raise DomainError("entropy evaluated on the boundary with clamping disabled")
    return x * np.log(np.maximum(x, ENTROPY_CLAMP))


def dlogx(x):
    return np.log(np.maximum(np.asarray(x, dtype=float), ENTROPY_CLAMP)) + 1.0


class PointTerm:
    """A convex function of one decision point's local strategy."""

    def value_and_gradient(self, x):
        raise NotImplementedError

    def canonical(self, n):
        """``(linear, entropy, quadratic, constant)`` coefficients for ``n`` actions."""
        raise NotImplementedError

    def __add__(self, other):
        return TermSum((self, other))


@dataclass(frozen=True, eq=False)
class Linear(PointTerm):
    coeffs: np.ndarray

    def value_and_gradient(self, x):
        c = np.asarray(self.coeffs, dtype=float)
        return float(c @ x), c.copy()

    def canonical(self, n):
        return np.asarray(self.coeffs, dtype=float).copy(), 0.0, 0.0, 0.0


@dataclass(frozen=True)
class NegEntropy(PointTerm):
    weight: float = 1.0

    def __post_init__(self):
        if self.weight < 0:
            raise InvalidParameter("entropy weight must be nonnegative")

    def value_and_gradient(self, x):
        return float(self.weight * xlogx(x).sum()), self.weight * dlogx(x)

    def canonical(self, n):
        return np.zeros(n), float(self.weight), 0.0, 0.0


@dataclass(frozen=True)
class DilatedL2(PointTerm):
    weight: float = 1.0

    def __post_init__(self):
        if self.weight < 0:
            raise InvalidParameter("l2 weight must be nonnegative")

    def value_and_gradient(self, x):
        x = np.asarray(x, dtype=float)
        return float(0.5 * self.weight * (x @ x)), self.weight * x

    def canonical(self, n):
        return np.zeros(n), 0.0, float(self.weight), 0.0


@dataclass(frozen=True, eq=False)
class BregmanL2Anchor(PointTerm):
    """``w/2 * ||x - anchor||^2``, the l2 Bregman divergence to a fixed point."""

    weight: float
    anchor: np.ndarray

    def __post_init__(self):
        if self.weight < 0:
            raise InvalidParameter("anchor weight must be nonnegative")

    def value_and_gradient(self, x):
        d = np.asarray(x, dtype=float) - self.anchor
        return float(0.5 * self.weight * (d @ d)), self.weight * d

    def canonical(self, n):
        a = np.asarray(self.anchor, dtype=float)
        return -self.weight * a, 0.0, float(self.weight), float(0.5 * self.weight * (a @ a))


@dataclass(frozen=True)
class TermSum(PointTerm):
    terms: tuple

    def value_and_gradient(self, x):
        v, g = 0.0, np.zeros(len(x))
        for t in self.terms:
            tv, tg = t.value_and_gradient(x)
            v += tv
            g = g + tg
        return v, g

    def canonical(self, n):
        lin, tau, q, k = np.zeros(n), 0.0, 0.0, 0.0
        for t in self.terms:
            l_, t_, q_, k_ = t.canonical(n)
            lin, tau, q, k = lin + l_, tau + t_, q + q_, k + k_
        return lin, tau, q, k


def term_value_and_gradient(term: PointTerm, x):
    return term.value_and_gradient(np.asarray(x, dtype=float))


class SeparableLoss:
    """Per-decision-point canonical coefficients on a fixed treeplex."""

    __slots__ = ("treeplex", "linear", "entropy", "quadratic", "constant")

    def __init__(self, treeplex: Treeplex, linear=None, entropy=None, quadratic=None,
                 constant=None):
        tp = treeplex
        self.treeplex = tp
        self.linear = np.zeros(tp.n_sequences) if linear is None else np.asarray(linear, float)
        self.entropy = np.zeros(tp.n_points) if entropy is None else np.asarray(entropy, float)
        self.quadratic = np.zeros(tp.n_points) if quadratic is None else np.asarray(quadratic, float)
        self.constant = np.zeros(tp.n_points) if constant is None else np.asarray(constant, float)
        if self.linear.shape != (tp.n_sequences,):
            raise DimensionMismatch("linear part has shape %s, expected (%d,)"
                                    % (self.linear.shape, tp.n_sequences))
        for name in ("entropy", "quadratic", "constant"):
            if getattr(self, name).shape != (tp.n_points,):
                raise DimensionMismatch("%s has wrong shape" % name)
        if np.any(self.entropy < 0) or np.any(self.quadratic < 0):
            raise InvalidParameter("entropy and quadratic weights must be nonnegative")

    @classmethod
    def from_terms(cls, tp: Treeplex, terms: Mapping[Union[int, str], PointTerm]):
        loss = cls(tp)
        for key, term in terms.items():
            j = tp.index(key) if isinstance(key, str) else int(key)
            n = int(tp.sizes[j])
            lin, tau, q, k = term.canonical(n)
            tp.block(loss.linear, j)[:] += lin
            loss.entropy[j] += tau
            loss.quadratic[j] += q
            loss.constant[j] += k
        return loss

    @property
    def is_linear(self) -> bool:
        return not (self.entropy.any() or self.quadratic.any())

    def __add__(self, other):
        if other is None or other == 0:
            return self
        if other.treeplex is not self.treeplex:
            raise DimensionMismatch("losses live on different treeplexes")
        return SeparableLoss(self.treeplex, self.linear + other.linear,
                             self.entropy + other.entropy,
                             self.quadratic + other.quadratic,
                             self.constant + other.constant)

    __radd__ = __add__

    def __mul__(self, c):
        return SeparableLoss(self.treeplex, c * self.linear, c * self.entropy,
                             c * self.quadratic, c * self.constant)

    __rmul__ = __mul__

    def with_linear(self, extra):
        """Copy with ``extra`` added to the linear coefficients (other parts shared)."""
        return SeparableLoss(self.treeplex, self.linear + extra, self.entropy,
                             self.quadratic, self.constant)

    def point_values(self, x, clamp=True) -> np.ndarray:
        tp = self.treeplex
        x = np.asarray(x, dtype=float)
        v = tp.reduce(self.linear * x) + self.constant
        if self.entropy.any():
            v = v + self.entropy * tp.reduce(xlogx(x, clamp))
        if self.quadratic.any():
            v = v + 0.5 * self.quadratic * tp.reduce(x * x)
        return v

    def point_gradients(self, x) -> np.ndarray:
        """Gradient of every ``l_j`` at ``x_j``, laid out per sequence."""
        tp = self.treeplex
        x = np.asarray(x, dtype=float)
        g = self.linear.copy()
        if self.entropy.any():
            g += tp.expand(self.entropy) * dlogx(x)
        if self.quadratic.any():
            g += tp.expand(self.quadratic) * x
        return g

    def value(self, x) -> float:
        return expected_loss(self.treeplex, x, self)


def linear_loss(tp: Treeplex, coeffs) -> SeparableLoss:
    return SeparableLoss(tp, linear=np.array(coeffs, dtype=float))


def entropy_regularizer(tp: Treeplex, tau=1.0) -> SeparableLoss:
    """Dilated negative entropy with weight ``tau`` (scalar or per point)."""
    return SeparableLoss(tp, entropy=np.broadcast_to(np.asarray(tau, float), (tp.n_points,)).copy())


def l2_regularizer(tp: Treeplex, beta=1.0) -> SeparableLoss:
    """Dilated ``beta/2 * ||x_j||^2`` at every decision point."""
    return SeparableLoss(tp, quadratic=np.broadcast_to(np.asarray(beta, float), (tp.n_points,)).copy())


def bregman_regularizer(tp: Treeplex, anchor, weight=1.0) -> SeparableLoss:
    """Dilated l2 Bregman divergence to a behavioral ``anchor`` (unit local weights)."""
    anchor = np.asarray(anchor, dtype=float)
    w = np.broadcast_to(np.asarray(weight, float), (tp.n_points,)).copy()
    return SeparableLoss(tp, linear=-tp.expand(w) * anchor, quadratic=w,
                         constant=0.5 * w * tp.reduce(anchor * anchor))


def dilated_value(tp: Treeplex, x, loss: SeparableLoss, check=True) -> float:
    """Evaluate a dilated function at behavioral ``x``.

    Computes ``sum_j pi_j(x) l_j(x_j)`` and, with ``check``, verifies that it
    matches the sequence-form expression ``sum_j mu_{p_j} d_j(mu_j / mu_{p_j})``
    (unreached points contribute zero).
    """
    value = expected_loss(tp, x, loss)
    if check:
        mu = to_sequence_form(tp, x)
        mass = parent_mass(tp, mu)
        reached = mass > 0
        ratio = np.zeros(tp.n_sequences)
        seq_mass = tp.expand(mass)
        sel = seq_mass > 0
        ratio[sel] = mu[sel] / seq_mass[sel]
        local = loss.point_values(ratio)
        other = float((mass[reached] * local[reached]).sum())
        if abs(other - value) > 1e-9 * max(1.0, abs(value)):
            raise ValueError("dilated forms disagree: %r vs %r" % (value, other))
    return value


def _payoff_of(game):
    return game.payoff, game.payoff_t


def game_loss_for_X(game, y_seq) -> SeparableLoss:
    """Loss of the row player: ``<-A mu(y), mu(x)> + d_1(x)``."""
    A, _ = _payoff_of(game)
    y_seq = np.asarray(y_seq, dtype=float)
    if y_seq.shape != (A.shape[1],):
        raise DimensionMismatch("opponent vector has %s entries, expected %d"
                                % (y_seq.shape, A.shape[1]))
    lin = -(A @ y_seq)
    if game.regularizer_x is None:
        return SeparableLoss(game.treeplex_x, linear=lin)
    return game.regularizer_x.with_linear(lin)


def game_loss_for_Y(game, x_seq) -> SeparableLoss:
    """Loss of the column player: ``<A^T mu(x), mu(y)> + d_2(y)``."""
    _, At = _payoff_of(game)
    x_seq = np.asarray(x_seq, dtype=float)
    if x_seq.shape != (At.shape[1],):
        raise DimensionMismatch("opponent vector has %s entries, expected %d"
                                % (x_seq.shape, At.shape[1]))
    lin = At @ x_seq
    if game.regularizer_y is None:
        return SeparableLoss(game.treeplex_y, linear=lin)
    return game.regularizer_y.with_linear(lin)


def exploitation_loss(game, y_sample, anchor, alpha: float) -> SeparableLoss:
    """Game loss against ``y_sample`` plus ``alpha`` times the dilated l2 distance to ``anchor``."""
    if alpha < 0:
        raise InvalidParameter("alpha must be nonnegative, got %r" % (alpha,))
    A, _ = _payoff_of(game)
    lin = -(A @ np.asarray(y_sample, dtype=float))
    tp = game.treeplex_x
    if alpha == 0:
        return SeparableLoss(tp, linear=lin)
    return bregman_regularizer(tp, anchor, alpha).with_linear(lin)


def regularizer_from_spec(tp: Treeplex, spec: Union[None, str, Sequence]) -> SeparableLoss | None:
    """Parse ``none``, ``entropy:tau`` or ``l2:beta`` into a regularizer."""
    if spec is None or spec == "none":
        return None
    kind, _, arg = str(spec).partition(":")
    weight = float(arg) if arg else 1.0
    if weight <= 0:
        raise InvalidParameter("regularizer weight must be positive")
    if kind == "entropy":
        return entropy_regularizer(tp, weight)
    if kind == "l2":
        return l2_regularizer(tp, weight)
    raise InvalidParameter("unknown regularizer %r" % (spec,))
