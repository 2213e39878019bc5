"""Catalogs of loss-shaping functions f and generating functions g.

An :class:`FFunction` is a strictly increasing differentiable map on
[0, inf) applied to per-point divergences before averaging; its derivative
is what enters the estimating equation, so both are carried explicitly.
A :class:`GeneratingFunction` is a nonnegative map on [0, inf) that shapes
a density through the divergence.

Entries are closed-form callables (numpy-compatible), not tabulated
splines, so the condition integrals computed elsewhere stay honest.
The string grammar used by the CLI (``log1p:1``, ``student:5``, ...) is a
stable interface.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Callable, Mapping

import numpy as np

__all__ = [
    "CatalogError",
    "FFunction",
    "GeneratingFunction",
    "TailClass",
    "make_f",
    "make_g",
    "parse_f",
    "parse_g",
    "default_f_catalog",
    "default_g_catalog",
]

SQRT_2PI = math.sqrt(2.0 * math.pi)

# exp(-t/2) underflows below the smallest normal; cut explicitly so products
# with overflowing factors stay well-defined (0 * inf -> 0 mass, not nan)
_EXP_CUT = 1450.0


class CatalogError(ValueError):
    """Unknown catalog name or parameter outside its admissible range."""


@dataclasses.dataclass(frozen=True)
class FFunction:
    """Monotone increasing distortion shaper with analytic derivative."""

    name: str
    spec: str
    shape: str  # 'linear' | 'concave' | 'convex'
    fn: Callable = dataclasses.field(repr=False)
    dfn: Callable = dataclasses.field(repr=False)

    def __call__(self, t):
        return self.fn(t)

    def deriv(self, t):
        return self.dfn(t)


@dataclasses.dataclass(frozen=True)
class TailClass:
    """Decay class of a generating function.

    kind 'exponential' with param = rate r (g ~ e^{-rt}),
    kind 'polynomial' with param = p > 0 (g ~ t^{-p}),
    kind 'compact' with param = support bound.
    """

    kind: str
    param: float


@dataclasses.dataclass(frozen=True)
class GeneratingFunction:
    """Nonnegative density-shaping function with tail metadata."""

    name: str
    spec: str
    tail: TailClass
    fn: Callable = dataclasses.field(repr=False)
    closed_forms: Mapping[str, float] = dataclasses.field(default_factory=dict)

    def __call__(self, t):
        return self.fn(t)


def _ones(t):
    return np.ones_like(np.asarray(t, dtype=float))


def make_f(name, params=()):
    """Build a catalog FFunction.

    identity        f(t) = t
    log1p(eta)      f(t) = eta*log(1 + t/eta),  f'(t) = 1/(1 + t/eta)
    power(gamma)    f(t) = ((1+t)^gamma - 1)/gamma,  f'(t) = (1+t)^(gamma-1),
                    gamma in (0, 1]
    exp_tilt(c)     f'(t) = e^{ct}, c != 0
    """
    params = tuple(float(p) for p in params)
    if name == "identity":
        if params:
            raise CatalogError("identity takes no parameters")
        return FFunction("identity", "identity", "linear", lambda t: np.asarray(t, float) + 0.0, _ones)
    if name == "log1p":
        if len(params) != 1 or params[0] <= 0:
            raise CatalogError("log1p requires eta > 0")
        eta = params[0]
        return FFunction(
            "log1p",
            f"log1p:{eta:g}",
            "concave",
            lambda t: eta * np.log1p(np.asarray(t, float) / eta),
            lambda t: 1.0 / (1.0 + np.asarray(t, float) / eta),
        )
    if name == "power":
        if len(params) != 1 or not (0.0 < params[0] <= 1.0):
            raise CatalogError("power requires gamma in (0, 1]")
        gam = params[0]
        return FFunction(
            "power",
            f"power:{gam:g}",
            "linear" if gam == 1.0 else "concave",
            lambda t: ((1.0 + np.asarray(t, float)) ** gam - 1.0) / gam,
            lambda t: (1.0 + np.asarray(t, float)) ** (gam - 1.0),
        )
    if name == "exp_tilt":
        if len(params) != 1 or params[0] == 0.0:
            raise CatalogError("exp_tilt requires nonzero c")
        c = params[0]

        def _f(t, c=c):
            with np.errstate(over="ignore"):
                return (np.exp(c * np.asarray(t, float)) - 1.0) / c

        def _df(t, c=c):
            with np.errstate(over="ignore"):
                return np.exp(c * np.asarray(t, float))

        return FFunction("exp_tilt", f"exp_tilt:{c:g}", "convex" if c > 0 else "concave", _f, _df)
    raise CatalogError(f"unknown f name {name!r}")


def make_g(name, params=()):
    """Build a catalog GeneratingFunction.

    gauss_kernel    g(t) = e^{-t/2}
    student(nu)     g(t) = (1 + t/nu)^{-(nu+1)/2}, nu > 0
    cauchy_like     g(t) = (1 + t)^{-1}
    tricube_like    g(t) = max(0, 1 - t)
    """
    params = tuple(float(p) for p in params)
    if name == "gauss_kernel":
        if params:
            raise CatalogError("gauss_kernel takes no parameters")

        def _g(t):
            t = np.asarray(t, float)
            return np.exp(-np.minimum(t, _EXP_CUT) / 2.0) * (t < _EXP_CUT)

        return GeneratingFunction(
            "gauss_kernel",
            "gauss",
            TailClass("exponential", 0.5),
            _g,
            closed_forms={"igt_norm": SQRT_2PI, "total_mass": 2.0},
        )
    if name == "student":
        if len(params) != 1 or params[0] <= 0:
            raise CatalogError("student requires nu > 0")
        nu = params[0]
        expo = (nu + 1.0) / 2.0
        return GeneratingFunction(
            "student",
            f"student:{nu:g}",
            TailClass("polynomial", expo),
            lambda t: (1.0 + np.asarray(t, float) / nu) ** -expo,
        )
    if name == "cauchy_like":
        if params:
            raise CatalogError("cauchy_like takes no parameters")
        return GeneratingFunction(
            "cauchy_like",
            "cauchy",
            TailClass("polynomial", 1.0),
            lambda t: 1.0 / (1.0 + np.asarray(t, float)),
            closed_forms={"igt_norm": math.pi},
        )
    if name == "tricube_like":
        if params:
            raise CatalogError("tricube_like takes no parameters")
        return GeneratingFunction(
            "tricube_like",
            "tricube",
            TailClass("compact", 1.0),
            lambda t: np.maximum(0.0, 1.0 - np.asarray(t, float)),
            closed_forms={"igt_norm": 4.0 / 3.0},
        )
    raise CatalogError(f"unknown g name {name!r}")


_F_SHORT = {"identity": "identity", "log1p": "log1p", "power": "power", "exp_tilt": "exp_tilt"}
_G_SHORT = {
    "gauss": "gauss_kernel",
    "gauss_kernel": "gauss_kernel",
    "student": "student",
    "cauchy": "cauchy_like",
    "cauchy_like": "cauchy_like",
    "tricube": "tricube_like",
    "tricube_like": "tricube_like",
}


def _split_spec(spec):
    parts = str(spec).strip().split(":")
    name, args = parts[0], parts[1:]
    try:
        params = tuple(float(a) for a in args)
    except ValueError as exc:
        raise CatalogError(f"bad parameter in {spec!r}: {exc}") from None
    return name, params


def parse_f(spec):
    """Parse the CLI spelling of an f-function, e.g. ``log1p:1``."""
    name, params = _split_spec(spec)
    if name not in _F_SHORT:
        raise CatalogError(f"unknown f spec {spec!r}")
    return make_f(_F_SHORT[name], params)


def parse_g(spec):
    """Parse the CLI spelling of a generating function, e.g. ``student:5``."""
    name, params = _split_spec(spec)
    if name not in _G_SHORT:
        raise CatalogError(f"unknown g spec {spec!r}")
    return make_g(_G_SHORT[name], params)


def default_f_catalog():
    """The four shapers exercised by the condition matrix.

    Spans bounded f' (identity, log1p), polynomially decaying f' (power)
    and exponentially growing f' (exp_tilt), so both verdicts of every
    condition checker are reachable.
    """
    return [
        make_f("identity"),
        make_f("log1p", (1.0,)),
        make_f("power", (0.5,)),
        make_f("exp_tilt", (0.25,)),
    ]


def default_g_catalog():
    """Exponential, heavy-polynomial, borderline-polynomial and compact tails."""
    return [
        make_g("gauss_kernel"),
        make_g("student", (5.0,)),
        make_g("cauchy_like"),
        make_g("tricube_like"),
    ]
