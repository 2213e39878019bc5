"""Weighted-mean solver for the f-shaped estimating equation.

The stationarity condition of the f-separable loss,

    (1/n) sum_i f'(d(x_i, theta)) (x_i - theta) = 0,

is algebraically a weighted-mean condition: theta must equal the
f'-weighted mean of the data, with one scalar weight per observation
applied to the whole vector.  The solver iterates that map from the
componentwise median, halving any step that increases the residual norm.
Concave f can in principle leave multiple stationary points; ``multistart``
reruns the iteration from data quantiles and keeps the lowest-loss root.

lam is a known nuisance scale and is never estimated.
"""

from __future__ import annotations

import dataclasses
from typing import Optional

import numpy as np

from .divergence import (
    DomainError,
    inverse_div,
    itakura_saito_div,
    squared_div,
)
from .funcs import FFunction

__all__ = [
    "EstimationProblem",
    "EstimateResult",
    "pointwise_divergence",
    "estimating_residual",
    "normalized_residual",
    "loss_value",
    "solve",
]

_DIVERGENCES = ("inverse", "multivariate_inverse", "squared", "itakura_saito")


@dataclasses.dataclass(frozen=True)
class EstimationProblem:
    """Data plus the divergence/shaper pair defining the loss."""

    data: np.ndarray
    divergence: str
    lam: np.ndarray  # per-dimension scale: lam, sigma2 or k by divergence kind
    f: FFunction

    def __post_init__(self):
        data = np.asarray(self.data, dtype=float)
        if data.ndim == 1:
            data = data[:, None]
        if data.ndim != 2 or data.shape[0] < 1:
            raise ValueError("data must be an (n,) or (n, d) array with n >= 1")
        if self.divergence not in _DIVERGENCES:
            raise ValueError(f"unknown divergence {self.divergence!r}")
        if self.divergence != "multivariate_inverse" and data.shape[1] != 1:
            raise ValueError(f"{self.divergence} divergence expects scalar data")
        lam = np.broadcast_to(np.atleast_1d(np.asarray(self.lam, dtype=float)),
                              (data.shape[1],)).copy()
        if np.any(lam <= 0) or not np.all(np.isfinite(lam)):
            raise ValueError("scale parameters must be positive and finite")
        if self.divergence in ("inverse", "multivariate_inverse", "itakura_saito"):
            if np.any(data <= 0):
                raise DomainError("this divergence requires positive data")
        data.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "lam", lam)

    @property
    def n(self):
        return self.data.shape[0]

    @property
    def dim(self):
        return self.data.shape[1]


@dataclasses.dataclass(frozen=True)
class EstimateResult:
    theta_hat: np.ndarray
    iterations: int
    residual_norm: float
    converged: bool
    loss: float
    weight_trace: Optional[list] = None


def _theta_row(p, theta):
    theta = np.broadcast_to(np.atleast_1d(np.asarray(theta, dtype=float)), (p.dim,))
    if p.divergence != "squared" and np.any(theta <= 0):
        raise DomainError("theta must be positive for this divergence")
    return theta


def pointwise_divergence(p, theta):
    """Vector of d(x_i, theta) over the data set."""
    theta = _theta_row(p, theta)
    if p.divergence in ("inverse", "multivariate_inverse"):
        per_dim = inverse_div(p.data, theta[None, :], p.lam[None, :])
        return per_dim.sum(axis=1)
    if p.divergence == "squared":
        return squared_div(p.data[:, 0], theta[0], p.lam[0])
    return itakura_saito_div(p.data[:, 0], theta[0], p.lam[0])


def estimating_residual(p, theta):
    """(1/n) sum f'(d(x_i, theta)) (x_i - theta), one entry per dimension."""
    theta = _theta_row(p, theta)
    w = np.asarray(p.f.deriv(pointwise_divergence(p, theta)), dtype=float)
    return (w[:, None] * (p.data - theta[None, :])).mean(axis=0)


def normalized_residual(p, theta):
    """The weight-normalized residual; same zero set, weighted-mean units."""
    theta = _theta_row(p, theta)
    w = np.asarray(p.f.deriv(pointwise_divergence(p, theta)), dtype=float)
    total = w.sum()
    if not np.isfinite(total) or total <= 0.0:
        raise ArithmeticError("all estimating weights vanished or overflowed")
    return (w[:, None] * (p.data - theta[None, :])).sum(axis=0) / total


def loss_value(p, theta):
    """(1/n) sum f(d(x_i, theta))."""
    return float(np.mean(p.f(pointwise_divergence(p, theta))))


def _iterate(p, start, tol, max_iter, keep_trace):
    theta = np.array(start, dtype=float)
    trace = [] if keep_trace else None
    res_norm = float(np.max(np.abs(estimating_residual(p, theta))))
    iterations = 0
    for iterations in range(1, max_iter + 1):
        w = np.asarray(p.f.deriv(pointwise_divergence(p, theta)), dtype=float)
        total = w.sum()
        if not np.isfinite(total) or total <= 0.0:
            break
        proposal = (w[:, None] * p.data).sum(axis=0) / total
        new_norm = float(np.max(np.abs(estimating_residual(p, proposal))))
        if new_norm > res_norm:  # damp steps that overshoot
            proposal = 0.5 * (theta + proposal)
            new_norm = float(np.max(np.abs(estimating_residual(p, proposal))))
        step = float(np.max(np.abs(proposal - theta)))
        theta, res_norm = proposal, new_norm
        if keep_trace:
            trace.append(
                {"iteration": iterations, "w_min": float(w.min()),
                 "w_mean": float(w.mean()), "w_max": float(w.max()),
                 "residual": res_norm}
            )
        if step < tol:
            break
    return theta, iterations, res_norm, trace


def solve(p, tol=1e-10, max_iter=500, multistart=0, keep_trace=False):
    """Solve the estimating equation by damped weighted-mean iteration.

    Starts at the componentwise median; ``multistart=k`` additionally
    restarts from k evenly spaced data quantiles and returns the
    lowest-loss solution.  Non-convergence is reported through the result
    flags, not raised.
    """
    starts = [np.median(p.data, axis=0)]
    if multistart > 0:
        qs = np.linspace(0.0, 1.0, multistart + 2)[1:-1]
        starts.extend(np.quantile(p.data, q, axis=0) for q in qs)
    best = None
    for start in starts:
        theta, iterations, res_norm, trace = _iterate(p, start, tol, max_iter, keep_trace)
        loss = loss_value(p, theta)
        candidate = EstimateResult(
            theta_hat=theta,
            iterations=iterations,
            residual_norm=res_norm,
            converged=bool(res_norm <= 10.0 * tol),
            loss=loss,
            weight_trace=trace,
        )
        if best is None or candidate.loss < best.loss:
            best = candidate
    return best
