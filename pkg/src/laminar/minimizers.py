"""Local regret minimizers over a single decision point's domain.

Every minimizer here is *batched*: it holds the state of ``k`` decision points
that share the same action count ``n`` as a ``(k, n)`` array, so a whole
treeplex can be updated with a handful of numpy calls.  A single decision point
is simply the ``k == 1`` case.

The module also hosts the simplex projection and the closed-form local argmin
used by best-response passes, since both are needed by the minimizers and by
the treeplex traversals.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Any, Iterable, Optional, Sequence

import numpy as np

ENTROPY_CLAMP = 1e-12


class UnsupportedDomain(ValueError):
    """Raised when a minimizer cannot operate on the requested domain."""


class UnsupportedLossForm(ValueError):
    """Raised when no closed-form local solver exists for a loss."""


class NonFiniteGradient(FloatingPointError):
    pass


def _as_rows(v):
    v = np.asarray(v, dtype=float)
    return v[None, :] if v.ndim == 1 else v


def project_simplex_rows(V, lower_bounds=None):
    """Euclidean projection of every row of ``V`` onto the (perturbed) simplex.

    With ``lower_bounds`` ``lb`` the target set is ``{x : x >= lb, sum(x) = 1}``,
    handled through the substitution ``x = lb + (1 - sum(lb)) z`` with ``z`` in
    the unit simplex.  Sort-based exact method, O(n log n) per row.
    """
    V = np.asarray(V, dtype=float)
    if lower_bounds is not None:
        lb = np.broadcast_to(np.asarray(lower_bounds, dtype=float), V.shape)
        slack = 1.0 - lb.sum(axis=1, keepdims=True)
        return lb + slack * project_simplex_rows((V - lb) / slack)
    n = V.shape[1]
    U = -np.sort(-V, axis=1)
    css = np.cumsum(U, axis=1) - 1.0
    ind = np.arange(1, n + 1)
    rho = np.count_nonzero(U - css / ind > 0, axis=1)
    theta = css[np.arange(V.shape[0]), rho - 1] / rho
    return np.maximum(V - theta[:, None], 0.0)


def project_simplex(v, lower_bounds=None) -> np.ndarray:
    """Project a single vector onto the simplex (optionally with lower bounds)."""
    lb = None if lower_bounds is None else _as_rows(lower_bounds)
    return project_simplex_rows(_as_rows(v), lb)[0]


def uniform_point(n: int, lower_bounds=None) -> np.ndarray:
    if lower_bounds is None:
        return np.full(n, 1.0 / n)
    lb = np.asarray(lower_bounds, dtype=float)
    return lb + (1.0 - lb.sum()) / n


def local_argmin(C, entropy, quadratic, lower_bounds=None):
    """Minimize ``<c, x> + tau * sum(x ln x) + q/2 ||x||^2`` row by row.

    ``C`` has shape ``(k, n)``; ``entropy`` and ``quadratic`` are per-row
    weights.  Returns ``(X, values)``.  A row may carry entropy or a quadratic
    term but not both; entropy is only supported on the full simplex.  Ties in
    the linear case go to the lowest action index.
    """
    C = np.asarray(C, dtype=float)
    k, n = C.shape
    tau = np.broadcast_to(np.asarray(entropy, dtype=float), (k,))
    q = np.broadcast_to(np.asarray(quadratic, dtype=float), (k,))
    lb = None
    if lower_bounds is not None:
        lb = np.broadcast_to(np.asarray(lower_bounds, dtype=float), C.shape)
        if not lb.any():
            lb = None
    ent = tau > 0
    quad = q > 0
    if np.any(ent & quad):
        raise UnsupportedLossForm("entropy and quadratic terms on the same decision point")
    if lb is not None and np.any(ent & lb.any(axis=1)):
        raise UnsupportedLossForm("entropy term on a perturbed simplex")

    X = np.empty_like(C)
    values = np.empty(k)
    lin = ~(ent | quad)
    if lin.all():
        rows = slice(None)
    else:
        rows = np.flatnonzero(lin)
    if lin.any():
        Cl = C[rows]
        best = np.argmin(Cl, axis=1)
        m = Cl[np.arange(Cl.shape[0]), best]
        if lb is None:
            Xl = np.zeros_like(Cl)
            Xl[np.arange(Cl.shape[0]), best] = 1.0
            vl = m
        else:
            lbl = lb[rows]
            slack = 1.0 - lbl.sum(axis=1)
            Xl = lbl.copy()
            Xl[np.arange(Cl.shape[0]), best] += slack
            vl = (Cl * lbl).sum(axis=1) + slack * m
        X[rows] = Xl
        values[rows] = vl
    if ent.any():
        r = np.flatnonzero(ent)
        t = tau[r][:, None]
        Z = -C[r] / t
        zmax = Z.max(axis=1, keepdims=True)
        E = np.exp(Z - zmax)
        S = E.sum(axis=1, keepdims=True)
        X[r] = E / S
        values[r] = -t[:, 0] * (np.log(S[:, 0]) + zmax[:, 0])
    if quad.any():
        r = np.flatnonzero(quad)
        qq = q[r][:, None]
        Xq = project_simplex_rows(-C[r] / qq, None if lb is None else lb[r])
        X[r] = Xq
        values[r] = (C[r] * Xq).sum(axis=1) + 0.5 * qq[:, 0] * (Xq * Xq).sum(axis=1)
    return X, values


@dataclass
class LocalLoss:
    """Loss seen by one decision point: a linear part plus an optional convex term.

    ``extra`` is any object exposing ``value_and_gradient(x)`` and
    ``canonical(n)`` (the point terms in :mod:`laminar.losses` do).
    """

    linear: np.ndarray
    extra: Optional[Any] = None

    def __post_init__(self):
        self.linear = np.asarray(self.linear, dtype=float)

    def value(self, x) -> float:
        v = float(self.linear @ x)
        if self.extra is not None:
            v += self.extra.value_and_gradient(x)[0]
        return v

    def gradient(self, x) -> np.ndarray:
        g = self.linear.copy()
        if self.extra is not None:
            g = g + self.extra.value_and_gradient(x)[1]
        return g

    def canonical(self):
        """Return ``(linear, entropy, quadratic, constant)`` coefficients."""
        n = self.linear.shape[0]
        if self.extra is None:
            return self.linear.copy(), 0.0, 0.0, 0.0
        lin, tau, q, k = self.extra.canonical(n)
        return self.linear + lin, tau, q, k


class LocalMinimizer:
    """Shared plumbing for the batched local regret minimizers."""

    kind = "base"

    def __init__(self, n_actions: int, n_points: int = 1, lower_bounds=None):
        if n_actions < 1:
            raise ValueError("n_actions must be positive")
        self.n_actions = n_actions
        self.n_points = n_points
        if lower_bounds is not None:
            lower_bounds = np.broadcast_to(
                np.asarray(lower_bounds, dtype=float), (n_points, n_actions)
            ).copy()
            if not lower_bounds.any():
                lower_bounds = None
        self.lower_bounds = lower_bounds
        self.t = 0

    def _check(self, gradient, played):
        g = np.asarray(gradient, dtype=float).reshape(self.n_points, self.n_actions)
        if not np.all(np.isfinite(g)):
            raise NonFiniteGradient("non-finite gradient passed to %s" % self.kind)
        x = np.asarray(played, dtype=float).reshape(self.n_points, self.n_actions)
        return g, x

    def recommend(self) -> np.ndarray:
        raise NotImplementedError

    def observe(self, gradient, played) -> None:
        raise NotImplementedError

    def observe_loss(self, loss: LocalLoss, played) -> None:
        """Single-point convenience: linearize ``loss`` at ``played`` and observe."""
        played = np.asarray(played, dtype=float)
        self.observe(loss.gradient(played), played)


class RegretMatching(LocalMinimizer):
    """Regret matching: play proportionally to positive cumulative regret."""

    kind = "rm"

    def __init__(self, n_actions: int, n_points: int = 1, lower_bounds=None):
        super().__init__(n_actions, n_points, lower_bounds)
        if self.lower_bounds is not None:
            raise UnsupportedDomain("%s requires a full simplex domain" % self.kind)
        self.cumulative = np.zeros((n_points, n_actions))

    def _weights(self):
        return np.maximum(self.cumulative, 0.0)

    def recommend(self):
        w = self._weights()
        s = w.sum(axis=1, keepdims=True)
        out = np.full_like(w, 1.0 / self.n_actions)
        pos = s[:, 0] > 0
        out[pos] = w[pos] / s[pos]
        return out

    def observe(self, gradient, played):
        g, x = self._check(gradient, played)
        self.cumulative += (g * x).sum(axis=1, keepdims=True) - g
        self.t += 1


class RegretMatchingPlus(RegretMatching):
    """Regret matching+: cumulative regrets are clipped at zero after every update."""

    kind = "rmplus"

    def _weights(self):
        return self.cumulative

    def observe(self, gradient, played):
        g, x = self._check(gradient, played)
        np.maximum(self.cumulative + (g * x).sum(axis=1, keepdims=True) - g, 0.0,
                   out=self.cumulative)
        self.t += 1


class OnlineGradientDescent(LocalMinimizer):
    """Projected online gradient descent (mirror descent with the Euclidean map).

    Step size ``eta_t = step_scale * t ** -step_exponent``.  The first iterate
    is the uniform point of the domain.
    """

    kind = "ogd"

    def __init__(self, n_actions: int, n_points: int = 1, lower_bounds=None,
                 step_scale: float = 1.0, step_exponent: float = 0.5):
        super().__init__(n_actions, n_points, lower_bounds)
        if step_scale <= 0:
            raise ValueError("step_scale must be positive")
        self.step_scale = float(step_scale)
        self.step_exponent = float(step_exponent)
        if self.lower_bounds is None:
            self.iterate = np.full((n_points, n_actions), 1.0 / n_actions)
        else:
            slack = 1.0 - self.lower_bounds.sum(axis=1, keepdims=True)
            self.iterate = self.lower_bounds + slack / n_actions

    @property
    def cumulative(self):
        return self.iterate

    def recommend(self):
        return self.iterate.copy()

    def observe(self, gradient, played):
        g, _ = self._check(gradient, played)
        self.t += 1
        eta = self.step_scale * self.t ** (-self.step_exponent)
        self.iterate = project_simplex_rows(self.iterate - eta * g, self.lower_bounds)


MINIMIZERS = {
    "rm": RegretMatching,
    "rmplus": RegretMatchingPlus,
    "ogd": OnlineGradientDescent,
}


def make_minimizer(kind: str, n_actions: int, n_points: int = 1, lower_bounds=None,
                   **options) -> LocalMinimizer:
    try:
        cls = MINIMIZERS[kind]
    except KeyError:
        raise ValueError("unknown minimizer %r (choose from %s)" % (kind, sorted(MINIMIZERS)))
    if cls is OnlineGradientDescent:
        return cls(n_actions, n_points, lower_bounds, **options)
    return cls(n_actions, n_points, lower_bounds)


def external_regret(history: Iterable[tuple], lower_bounds: Optional[Sequence[float]] = None) -> float:
    """Cumulative external regret of a single decision point.

    ``history`` is a sequence of ``(loss, played)`` pairs where ``loss`` is a
    :class:`LocalLoss` (or a plain coefficient vector).  The comparator minimum
    is solved in closed form on the summed loss.
    """
    total = 0.0
    lin = tau = q = k = None
    for loss, played in history:
        if not isinstance(loss, LocalLoss):
            loss = LocalLoss(loss)
        played = np.asarray(played, dtype=float)
        total += loss.value(played)
        l, t_, q_, k_ = loss.canonical()
        if lin is None:
            lin, tau, q, k = l, t_, q_, k_
        else:
            if l.shape != lin.shape:
                raise ValueError("inconsistent dimensions in history")
            lin, tau, q, k = lin + l, tau + t_, q + q_, k + k_
    if lin is None:
        raise ValueError("empty history")
    lb = None if lower_bounds is None else _as_rows(lower_bounds)
    _, best = local_argmin(lin[None, :], [tau], [q], lb)
    return float(total - (best[0] + k))
