"""Density evaluation, normalization and moments for the model families.

Families built on the inverse divergence:

* IGT      p(x) = sqrt(lam/x^3) g(d(x, theta)) / C,  C = int t^{-1/2} g(t) dt
* GIGT     q(x) = x^{nu-1} g(d(x, theta)) / C(theta, lam, nu)
* GIGT mixture  w q(.|nu=0) + (1-w) q(.|nu=-1) with the weight determined
  by the normalization constants, not fitted
* GIG      closed-form special case of GIGT at g(t) = e^{-t/2}
* MIGT     product of sqrt(lam_j/x_j^3) factors times g of the summed
  divergence, normalized by pi^{d/2}/Gamma(d/2) * int g(t) t^{(d-2)/2} dt

plus the Gaussian and gamma baselines used in cross-family bias tests.

Each model verifies at construction that its normalization integral is
finite (the existence assumption of its family).  A divergent probe refuses
to build the model; an inconclusive probe builds it but leaves a flag that
the CLI surfaces, because every downstream unbiasedness check is
conditional on existence.  Constants are cached on the model so density
evaluation stays cheap inside Monte Carlo loops.
"""

from __future__ import annotations

import dataclasses
import math
import re
import numpy as np

from .divergence import DomainError, inverse_div, multivariate_inverse_div
from .funcs import GeneratingFunction, parse_g
from .numerics import (
    BoundednessVerdict,
    bessel_k,
    gamma_fn,
    integrate_halfline,
    integrate_interval,
    probe_boundedness,
    probe_boundedness_two_sided,
)

__all__ = [
    "ModelError",
    "IgtModel",
    "GigtModel",
    "GigtMixtureModel",
    "GigModel",
    "MigtModel",
    "GaussianModel",
    "GammaModel",
    "igt_pdf",
    "igt_mean",
    "gigt_pdf",
    "gigt_mixture_pdf",
    "gig_pdf",
    "migt_pdf",
    "baseline_pdf",
    "radial_pdf",
    "pdf",
    "model_mean",
    "model_dim",
    "quadrature_mean",
    "parse_model",
]


class ModelError(ValueError):
    """Model cannot be constructed (parameters or normalizability)."""


def _positive_scalar(name, v):
    v = float(v)
    if not np.isfinite(v) or v <= 0.0:
        raise ModelError(f"{name} must be positive and finite, got {v!r}")
    return v


def _positive_vector(name, v):
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1 or arr.size < 1 or not np.all(np.isfinite(arr)) or np.any(arr <= 0):
        raise ModelError(f"{name} must be a vector of positive reals, got {v!r}")
    return arr


def _x_positive(x):
    arr = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(arr)) or np.any(arr <= 0.0):
        raise DomainError("density argument must be positive and finite")
    return arr


# ---------------------------------------------------------------------------
# IGT


@dataclasses.dataclass(frozen=True)
class IgtModel:
    theta: float
    lam: float
    g: GeneratingFunction
    norm_const: float = dataclasses.field(init=False)
    existence: BoundednessVerdict = dataclasses.field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", _positive_scalar("theta", self.theta))
        object.__setattr__(self, "lam", _positive_scalar("lam", self.lam))
        verdict = probe_boundedness(lambda t: self.g(t) / math.sqrt(t) if t > 0 else 0.0)
        if verdict.is_divergent:
            raise ModelError(f"IGT normalization diverges for g={self.g.spec}")
        c = self.g.closed_forms.get("igt_norm")
        if c is None:
            if verdict.is_finite:
                c = verdict.value
            else:  # flagged; keep a best-effort constant so the pdf is usable
                c = integrate_halfline(lambda t: self.g(t) / math.sqrt(t) if t > 0 else 0.0).value
        object.__setattr__(self, "norm_const", float(c))
        object.__setattr__(self, "existence", verdict)

    @property
    def flagged(self):
        return not self.existence.is_finite

    @property
    def spec(self):
        return f"igt(theta={self.theta:g},lambda={self.lam:g},g={self.g.spec})"


def igt_pdf(m, x):
    """Density sqrt(lam/x^3) g(d(x, theta)) / C, vectorized over x."""
    x = _x_positive(x)
    d = inverse_div(x, m.theta, m.lam)
    return np.sqrt(m.lam / x ** 3) * m.g(d) / m.norm_const


def igt_mean(m, verify=False, tol=1e-6):
    """Mean of an IGT model: theta, for every admissible generating function.

    With ``verify=True`` the mean is recomputed as int x p(x) dx by
    quadrature and required to agree within ``tol``.
    """
    if verify:
        q = quadrature_mean(m)
        if abs(q - m.theta) > tol:
            raise ArithmeticError(
                f"quadrature mean {q!r} disagrees with theta={m.theta!r} beyond {tol}"
            )
    return m.theta


# ---------------------------------------------------------------------------
# GIGT and its two-component mixture


def _gigt_norm_integrand(theta, lam, nu, g):
    def h(x):
        if x <= 0.0:
            return 0.0
        return x ** (nu - 1.0) * float(g(inverse_div(x, theta, lam)))

    return h


@dataclasses.dataclass(frozen=True)
class GigtModel:
    theta: float
    lam: float
    nu: float
    g: GeneratingFunction
    norm_const: float = dataclasses.field(init=False)
    existence: BoundednessVerdict = dataclasses.field(init=False, repr=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", _positive_scalar("theta", self.theta))
        object.__setattr__(self, "lam", _positive_scalar("lam", self.lam))
        object.__setattr__(self, "nu", float(self.nu))
        h = _gigt_norm_integrand(self.theta, self.lam, self.nu, self.g)
        verdict = probe_boundedness_two_sided(h)
        if verdict.is_divergent:
            raise ModelError(
                f"GIGT normalization diverges for g={self.g.spec}, nu={self.nu:g}"
            )
        c = verdict.value
        if c is None:
            c = integrate_halfline(h).value
        object.__setattr__(self, "norm_const", float(c))
        object.__setattr__(self, "existence", verdict)

    @property
    def flagged(self):
        return not self.existence.is_finite

    @property
    def spec(self):
        return f"gigt(theta={self.theta:g},lambda={self.lam:g},nu={self.nu:g},g={self.g.spec})"


def gigt_pdf(m, x):
    """Density x^{nu-1} g(d(x, theta)) / C, vectorized over x."""
    x = _x_positive(x)
    d = inverse_div(x, m.theta, m.lam)
    return x ** (m.nu - 1.0) * m.g(d) / m.norm_const


@dataclasses.dataclass(frozen=True)
class GigtMixtureModel:
    """Equal-divergence mixture of GIGT components at nu = 0 and nu = -1.

    The weight w = C0 / (C0 + theta*C_{-1}) is a derived property of
    (theta, lam, g); it is recomputed from the normalization constants at
    construction, never treated as a free parameter.
    """

    theta: float
    lam: float
    g: GeneratingFunction
    comp0: GigtModel = dataclasses.field(init=False, repr=False)
    comp1: GigtModel = dataclasses.field(init=False, repr=False)
    weight: float = dataclasses.field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "theta", _positive_scalar("theta", self.theta))
        object.__setattr__(self, "lam", _positive_scalar("lam", self.lam))
        try:
            c0 = GigtModel(self.theta, self.lam, 0.0, self.g)
            c1 = GigtModel(self.theta, self.lam, -1.0, self.g)
        except ModelError as exc:
            raise ModelError(f"GIGT mixture does not exist: {exc}") from None
        object.__setattr__(self, "comp0", c0)
        object.__setattr__(self, "comp1", c1)
        w = c0.norm_const / (c0.norm_const + self.theta * c1.norm_const)
        object.__setattr__(self, "weight", float(w))

    @property
    def flagged(self):
        return self.comp0.flagged or self.comp1.flagged

    @property
    def spec(self):
        return f"gigt_mixture(theta={self.theta:g},lambda={self.lam:g},g={self.g.spec})"


def gigt_mixture_pdf(m, x):
    return m.weight * gigt_pdf(m.comp0, x) + (1.0 - m.weight) * gigt_pdf(m.comp1, x)


# ---------------------------------------------------------------------------
# GIG (closed-form special case at g = e^{-t/2})


@dataclasses.dataclass(frozen=True)
class GigModel:
    alpha: float
    eta: float
    nu: float
    norm_const: float = dataclasses.field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "alpha", _positive_scalar("alpha", self.alpha))
        object.__setattr__(self, "eta", _positive_scalar("eta", self.eta))
        object.__setattr__(self, "nu", float(self.nu))
        object.__setattr__(
            self, "norm_const", 2.0 * self.eta ** self.nu * bessel_k(self.nu, self.alpha)
        )

    @property
    def spec(self):
        return f"gig(alpha={self.alpha:g},eta={self.eta:g},nu={self.nu:g})"


def gig_pdf(m, x):
    """eta^{-nu} x^{nu-1} exp(-(alpha/2)(x/eta + eta/x)) / (2 K_nu(alpha))."""
    x = _x_positive(x)
    with np.errstate(over="ignore", under="ignore"):
        expo = np.exp(-(m.alpha / 2.0) * (x / m.eta + m.eta / x))
    return x ** (m.nu - 1.0) * expo / m.norm_const


def gig_mean(m):
    """eta * K_{nu+1}(alpha) / K_nu(alpha)."""
    return m.eta * bessel_k(m.nu + 1.0, m.alpha) / bessel_k(m.nu, m.alpha)


# ---------------------------------------------------------------------------
# MIGT


@dataclasses.dataclass(frozen=True)
class MigtModel:
    theta: np.ndarray
    lam: np.ndarray
    g: GeneratingFunction
    norm_const: float = dataclasses.field(init=False)
    existence: BoundednessVerdict = dataclasses.field(init=False, repr=False)

    def __post_init__(self):
        theta = _positive_vector("theta", self.theta)
        lam = _positive_vector("lam", self.lam)
        if theta.shape != lam.shape:
            raise ModelError("theta and lam must share length")
        theta.setflags(write=False)
        lam.setflags(write=False)
        object.__setattr__(self, "theta", theta)
        object.__setattr__(self, "lam", lam)
        d = theta.size
        power = (d - 2.0) / 2.0

        def h(t):
            return float(self.g(t)) * t ** power if t > 0 else 0.0

        verdict = probe_boundedness(h)
        if verdict.is_divergent:
            raise ModelError(f"MIGT normalization diverges for g={self.g.spec}, d={d}")
        radial = verdict.value if verdict.is_finite else integrate_halfline(h).value
        c = math.pi ** (d / 2.0) / gamma_fn(d / 2.0) * radial
        object.__setattr__(self, "norm_const", float(c))
        object.__setattr__(self, "existence", verdict)

    @property
    def dim(self):
        return int(self.theta.size)

    @property
    def flagged(self):
        return not self.existence.is_finite

    @property
    def spec(self):
        th = ",".join(f"{v:g}" for v in self.theta)
        la = ",".join(f"{v:g}" for v in self.lam)
        return f"migt(theta=[{th}],lambda=[{la}],g={self.g.spec})"


def migt_pdf(m, x):
    """Joint density; x is a length-d vector or an (n, d) array of rows."""
    x = _x_positive(np.atleast_1d(x))
    if x.shape[-1] != m.dim:
        raise DomainError(f"expected dimension {m.dim}, got {x.shape[-1]}")
    d = multivariate_inverse_div(x, m.theta, m.lam)
    pref = np.prod(np.sqrt(m.lam / x ** 3), axis=-1)
    return pref * m.g(d) / m.norm_const


# ---------------------------------------------------------------------------
# baselines (Gaussian location, gamma with mean parameterization)


@dataclasses.dataclass(frozen=True)
class GaussianModel:
    theta: float
    sigma2: float

    def __post_init__(self):
        object.__setattr__(self, "theta", float(self.theta))
        object.__setattr__(self, "sigma2", _positive_scalar("sigma2", self.sigma2))

    @property
    def spec(self):
        return f"gaussian(theta={self.theta:g},sigma2={self.sigma2:g})"


@dataclasses.dataclass(frozen=True)
class GammaModel:
    theta: float  # mean
    k: float      # shape

    def __post_init__(self):
        object.__setattr__(self, "theta", _positive_scalar("theta", self.theta))
        object.__setattr__(self, "k", _positive_scalar("k", self.k))

    @property
    def spec(self):
        return f"gamma(theta={self.theta:g},k={self.k:g})"


def baseline_pdf(family, params, x):
    """Textbook baseline densities.

    gaussian: params = (theta, sigma2); gamma: params = (theta, k) with
    density (k/theta)^k x^{k-1} e^{-k x/theta} / Gamma(k), mean theta.
    """
    if family == "gaussian":
        theta, sigma2 = params
        sigma2 = _positive_scalar("sigma2", sigma2)
        x = np.asarray(x, dtype=float)
        return np.exp(-((x - theta) ** 2) / (2.0 * sigma2)) / math.sqrt(2.0 * math.pi * sigma2)
    if family == "gamma":
        theta, k = params
        theta = _positive_scalar("theta", theta)
        k = _positive_scalar("k", k)
        x = _x_positive(x)
        rate = k / theta
        return rate ** k * x ** (k - 1.0) * np.exp(-rate * x) / gamma_fn(k)
    raise ModelError(f"unknown baseline family {family!r}")


# ---------------------------------------------------------------------------
# radial law of the divergence statistic


def radial_pdf(g, alpha, t):
    """Density proportional to t^{alpha-1} g(t) of the divergence statistic.

    For an IGT draw X the statistic T = d(X, theta) follows this law with
    alpha = 1/2; for MIGT the summed statistic has alpha = d/2.
    """
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("radial variable must be nonnegative")
    z = integrate_halfline(lambda s: s ** (alpha - 1.0) * float(g(s)) if s > 0 else 0.0)
    with np.errstate(divide="ignore"):
        head = t ** (alpha - 1.0)
    return head * g(t) / z.value


# ---------------------------------------------------------------------------
# generic dispatch


def pdf(model, x):
    if isinstance(model, IgtModel):
        return igt_pdf(model, x)
    if isinstance(model, GigtModel):
        return gigt_pdf(model, x)
    if isinstance(model, GigtMixtureModel):
        return gigt_mixture_pdf(model, x)
    if isinstance(model, GigModel):
        return gig_pdf(model, x)
    if isinstance(model, MigtModel):
        return migt_pdf(model, x)
    if isinstance(model, GaussianModel):
        return baseline_pdf("gaussian", (model.theta, model.sigma2), x)
    if isinstance(model, GammaModel):
        return baseline_pdf("gamma", (model.theta, model.k), x)
    raise ModelError(f"no density for {model!r}")


def model_dim(model):
    return model.dim if isinstance(model, MigtModel) else 1


def model_mean(model):
    """Mean of the model; quadrature where no closed form applies."""
    if isinstance(model, (IgtModel, GammaModel, GaussianModel)):
        return model.theta
    if isinstance(model, MigtModel):
        return model.theta.copy()
    if isinstance(model, GigModel):
        return gig_mean(model)
    return quadrature_mean(model)


def quadrature_mean(model, tol=1e-10):
    """int x p(x) dx for scalar models, split at theta-scale."""
    if isinstance(model, MigtModel):
        raise ModelError("quadrature_mean handles scalar models only")
    if isinstance(model, GaussianModel):
        return model.theta
    split = getattr(model, "theta", None) or getattr(model, "eta", 1.0)
    fn = lambda x: x * float(pdf(model, x))
    left = integrate_interval(fn, 0.0, split, tol=tol, sqrt_head=True)
    right = integrate_interval(fn, split, math.inf, tol=tol)
    return left.value + right.value


# ---------------------------------------------------------------------------
# model grammar shared with the CLI


_MODEL_RE = re.compile(r"^\s*([a-z_][a-z_0-9]*)\s*\((.*)\)\s*$", re.IGNORECASE)


def _split_args(body):
    parts, depth, cur = [], 0, []
    for ch in body:
        if ch == "[":
            depth += 1
        elif ch == "]":
            depth -= 1
        if ch == "," and depth == 0:
            parts.append("".join(cur))
            cur = []
        else:
            cur.append(ch)
    if cur:
        parts.append("".join(cur))
    return [p.strip() for p in parts if p.strip()]


def _parse_value(text):
    text = text.strip()
    if text.startswith("[") and text.endswith("]"):
        return np.array([float(v) for v in text[1:-1].split(",") if v.strip()])
    return float(text)


def parse_model(spec):
    """Parse the model grammar, e.g. ``igt(theta=2,lambda=3,g=gauss)`` or
    ``migt(theta=[1,2,3],lambda=[1,1,1],g=student:5)``."""
    match = _MODEL_RE.match(spec)
    if not match:
        raise ModelError(f"cannot parse model spec {spec!r}")
    family = match.group(1).lower()
    kv = {}
    for item in _split_args(match.group(2)):
        if "=" not in item:
            raise ModelError(f"expected key=value in {spec!r}, got {item!r}")
        key, val = item.split("=", 1)
        kv[key.strip().lower()] = val.strip()

    def need(*keys):
        missing = [k for k in keys if k not in kv]
        if missing:
            raise ModelError(f"{family} spec missing {missing} in {spec!r}")

    try:
        if family == "igt":
            need("theta", "lambda", "g")
            return IgtModel(_parse_value(kv["theta"]), _parse_value(kv["lambda"]), parse_g(kv["g"]))
        if family == "gigt":
            need("theta", "lambda", "nu", "g")
            return GigtModel(
                _parse_value(kv["theta"]), _parse_value(kv["lambda"]),
                _parse_value(kv["nu"]), parse_g(kv["g"]),
            )
        if family == "gigt_mixture":
            need("theta", "lambda", "g")
            return GigtMixtureModel(
                _parse_value(kv["theta"]), _parse_value(kv["lambda"]), parse_g(kv["g"])
            )
        if family == "gig":
            need("alpha", "eta", "nu")
            return GigModel(_parse_value(kv["alpha"]), _parse_value(kv["eta"]), _parse_value(kv["nu"]))
        if family == "migt":
            need("theta", "lambda", "g")
            return MigtModel(_parse_value(kv["theta"]), _parse_value(kv["lambda"]), parse_g(kv["g"]))
        if family == "gaussian":
            need("theta", "sigma2")
            return GaussianModel(_parse_value(kv["theta"]), _parse_value(kv["sigma2"]))
        if family == "gamma":
            need("theta", "k")
            return GammaModel(_parse_value(kv["theta"]), _parse_value(kv["k"]))
    except (ValueError, TypeError) as exc:
        if isinstance(exc, ModelError):
            raise
        raise ModelError(f"bad parameters in {spec!r}: {exc}") from None
    raise ModelError(f"unknown model family {family!r}")
