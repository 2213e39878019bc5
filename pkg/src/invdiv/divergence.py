"""Bregman divergences on the positive half-line and their dimension-wise sums.

The workhorse is the divergence generated by the reciprocal map
``phi(x) = lam / x`` on ``x > 0``,

    inv_div(x, theta; lam) = lam * (x - theta)**2 / (theta**2 * x),

together with its linear sum over coordinates, and two classical baselines
(squared distance and Itakura-Saito) used for cross-family comparisons.

All functions broadcast over numpy arrays and validate their domains
eagerly: nonpositive or non-finite inputs raise :class:`DomainError` instead
of silently producing inf, so quadrature code downstream controls its own
limits.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "DomainError",
    "inverse_div",
    "multivariate_inverse_div",
    "squared_div",
    "itakura_saito_div",
    "divergence_fn",
]


class DomainError(ValueError):
    """Raised when an input lies outside a divergence's domain."""


def _positive(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    if np.any(arr <= 0.0):
        raise DomainError(f"{name} must be strictly positive, got {value!r}")
    return arr


def _finite(name, value):
    arr = np.asarray(value, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise DomainError(f"{name} must be finite, got {value!r}")
    return arr


def inverse_div(x, theta, lam):
    """Divergence generated by phi(x) = lam/x: lam*(x-theta)^2/(theta^2*x).

    Nonnegative, zero exactly at ``x == theta``, and linear in ``lam``.
    Broadcasts elementwise.
    """
    x = _positive("x", x)
    theta = _positive("theta", theta)
    lam = _positive("lam", lam)
    return lam * (x - theta) ** 2 / (theta ** 2 * x)


def multivariate_inverse_div(x, theta, lam):
    """Sum of per-coordinate inverse divergences for equal-length vectors."""
    x = _positive("x", np.atleast_1d(x))
    theta = _positive("theta", np.atleast_1d(theta))
    lam = _positive("lam", np.atleast_1d(lam))
    if not (x.shape[-1] == theta.shape[-1] == lam.shape[-1]):
        raise DomainError(
            f"dimension mismatch: x has {x.shape[-1]}, theta {theta.shape[-1]}, lam {lam.shape[-1]}"
        )
    return np.sum(lam * (x - theta) ** 2 / (theta ** 2 * x), axis=-1)


def squared_div(x, theta, sigma2):
    """Scaled squared distance (x-theta)^2/sigma2 on the whole real line."""
    x = _finite("x", x)
    theta = _finite("theta", theta)
    sigma2 = _positive("sigma2", sigma2)
    return (x - theta) ** 2 / sigma2


def itakura_saito_div(x, theta, k):
    """Itakura-Saito distance k*(x/theta - log(x/theta) - 1) on positives."""
    x = _positive("x", x)
    theta = _positive("theta", theta)
    k = _positive("k", k)
    r = x / theta
    return k * (r - np.log(r) - 1.0)


def divergence_fn(kind, scale):
    """Return ``d(x, theta)`` for a named divergence with its scale bound in.

    ``kind`` is one of ``inverse`` (scale = lam), ``multivariate_inverse``
    (scale = lam vector), ``squared`` (scale = sigma2) or ``itakura_saito``
    (scale = k).
    """
    if kind == "inverse":
        return lambda x, theta: inverse_div(x, theta, scale)
    if kind == "multivariate_inverse":
        return lambda x, theta: multivariate_inverse_div(x, theta, scale)
    if kind == "squared":
        return lambda x, theta: squared_div(x, theta, scale)
    if kind == "itakura_saito":
        return lambda x, theta: itakura_saito_div(x, theta, scale)
    raise DomainError(f"unknown divergence kind {kind!r}")
