"""Seeded sampling for the test-bed distributions.

All draws go through :class:`RngStream`, a ``(seed, stream_id)`` pair that maps
to an independent PCG64 stream via :class:`numpy.random.SeedSequence`.  The
same pair always yields the same sequence, no matter which thread asks for it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Union

import numpy as np
from scipy import stats

from .exceptions import ParameterError

KINDS = ("negbinomial", "gamma", "shifted_beta", "lognormal", "weibull", "normal")

_PARAM_NAMES = {
    "negbinomial": ("mean", "cv"),
    "gamma": ("mean", "cv"),
    "shifted_beta": ("mean", "sd", "shift"),
    "lognormal": ("mu_log", "sigma_log"),
    "weibull": ("scale", "shape"),
    "normal": ("mean", "sd"),
}


@dataclass(frozen=True)
class RngStream:
    """Reproducible random stream identified by ``(seed, stream_id)``."""

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if int(value) != value or not 0 <= value < 2**64:
                raise ParameterError(f"{name} must be an integer in [0, 2**64)", name)

    def generator(self, *sub):
        """Fresh generator for this stream, or for the child stream ``sub``."""
        ss = np.random.SeedSequence(int(self.seed), spawn_key=(int(self.stream_id), *map(int, sub)))
        return np.random.Generator(np.random.PCG64(ss))


RngLike = Union[RngStream, np.random.Generator]


def _as_generator(stream):
    if isinstance(stream, np.random.Generator):
        return stream
    if isinstance(stream, RngStream):
        return stream.generator()
    raise TypeError(f"expected RngStream or numpy Generator, got {type(stream).__name__}")


@dataclass(frozen=True)
class DistSpec:
    """A univariate law in the parameterisation used by the test-bed.

    Use the classmethod constructors; ``params`` follows ``_PARAM_NAMES[kind]``.
    ``shifted_beta`` takes the mean and sd of the *unshifted* Beta on [0, 1].
    """

    kind: str
    params: tuple

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ParameterError(f"unknown distribution kind {self.kind!r}", "kind")
        names = _PARAM_NAMES[self.kind]
        if len(self.params) != len(names):
            raise ParameterError(f"{self.kind} takes parameters {names}", "params")
        object.__setattr__(self, "params", tuple(float(v) for v in self.params))
        for name, value in zip(names, self.params):
            if not math.isfinite(value):
                raise ParameterError(f"{self.kind}: {name} must be finite", name)
        p = dict(zip(names, self.params))
        if self.kind in ("negbinomial", "gamma"):
            if p["mean"] <= 0:
                raise ParameterError(f"{self.kind}: mean must be positive", "mean")
            if p["cv"] <= 0:
                raise ParameterError(f"{self.kind}: cv must be positive", "cv")
            if self.kind == "negbinomial" and p["cv"] ** 2 * p["mean"] <= 1.0:
                raise ParameterError("negbinomial: variance must exceed the mean (cv**2 * mean > 1)", "cv")
        elif self.kind == "shifted_beta":
            m, sd = p["mean"], p["sd"]
            if not 0.0 < m < 1.0:
                raise ParameterError("shifted_beta: mean must lie in (0, 1)", "mean")
            if sd <= 0 or sd * sd >= m * (1.0 - m):
                raise ParameterError("shifted_beta: sd must satisfy 0 < sd**2 < mean*(1-mean)", "sd")
        elif self.kind == "lognormal":
            if p["sigma_log"] <= 0:
                raise ParameterError("lognormal: sigma_log must be positive", "sigma_log")
        elif self.kind == "weibull":
            if p["scale"] <= 0:
                raise ParameterError("weibull: scale must be positive", "scale")
            if p["shape"] <= 0:
                raise ParameterError("weibull: shape must be positive", "shape")
        elif self.kind == "normal":
            if p["sd"] <= 0:
                raise ParameterError("normal: sd must be positive", "sd")

    # constructors -----------------------------------------------------------
    @classmethod
    def negbinomial(cls, mean, cv):
        return cls("negbinomial", (mean, cv))

    @classmethod
    def gamma(cls, mean, cv):
        return cls("gamma", (mean, cv))

    @classmethod
    def shifted_beta(cls, mean, sd, shift=0.0):
        return cls("shifted_beta", (mean, sd, shift))

    @classmethod
    def lognormal(cls, mu_log, sigma_log):
        return cls("lognormal", (mu_log, sigma_log))

    @classmethod
    def weibull(cls, scale, shape):
        return cls("weibull", (scale, shape))

    @classmethod
    def normal(cls, mean, sd):
        return cls("normal", (mean, sd))

    # derived quantities ---------------------------------------------------------
    def as_dict(self):
        return {"kind": self.kind, **dict(zip(_PARAM_NAMES[self.kind], self.params))}

    @classmethod
    def from_dict(cls, d):
        kind = d["kind"]
        if kind not in KINDS:
            raise ParameterError(f"unknown distribution kind {kind!r}", "kind")
        try:
            return cls(kind, tuple(d[name] for name in _PARAM_NAMES[kind]))
        except KeyError as exc:
            raise ParameterError(f"{kind}: missing parameter {exc.args[0]}", exc.args[0]) from None

    @property
    def is_discrete(self):
        return self.kind == "negbinomial"

    def nb_size_prob(self):
        """``(r, p)`` of the negative binomial, with ``var = (cv * mean)**2``."""
        if self.kind != "negbinomial":
            raise ParameterError("nb_size_prob only applies to negbinomial", "kind")
        mean, cv = self.params
        var = (cv * mean) ** 2
        return mean * mean / (var - mean), mean / var

    def beta_ab(self):
        mean, sd = self.params[0], self.params[1]
        nu = mean * (1.0 - mean) / (sd * sd) - 1.0
        return mean * nu, (1.0 - mean) * nu

    def frozen(self):
        """Equivalent frozen :mod:`scipy.stats` distribution."""
        k = self.kind
        if k == "negbinomial":
            r, p = self.nb_size_prob()
            return stats.nbinom(r, p)
        if k == "gamma":
            mean, cv = self.params
            return stats.gamma(1.0 / cv**2, scale=mean * cv**2)
        if k == "shifted_beta":
            a, b = self.beta_ab()
            return stats.beta(a, b, loc=self.params[2])
        if k == "lognormal":
            mu, sigma = self.params
            return stats.lognorm(sigma, scale=math.exp(mu))
        if k == "weibull":
            scale, shape = self.params
            return stats.weibull_min(shape, scale=scale)
        mean, sd = self.params
        return stats.norm(mean, sd)

    def mean(self):
        k = self.kind
        if k in ("negbinomial", "gamma", "normal"):
            return self.params[0]
        if k == "shifted_beta":
            return self.params[0] + self.params[2]
        return float(self.frozen().mean())

    def var(self):
        k = self.kind
        if k in ("negbinomial", "gamma"):
            return (self.params[0] * self.params[1]) ** 2
        if k in ("shifted_beta", "normal"):
            return self.params[1] ** 2
        return float(self.frozen().var())

    def cdf(self, x):
        return self.frozen().cdf(x)


def sample(spec, stream, size=None):
    """Draw from ``spec``.

    Negative binomial draws are integers, generated as a Gamma-Poisson mixture.
    Passing an :class:`RngStream` restarts that stream on every call; pass a
    ``Generator`` to continue one.
    """
    rng = _as_generator(stream)
    k = spec.kind
    if k == "negbinomial":
        r, p = spec.nb_size_prob()
        lam = rng.gamma(r, (1.0 - p) / p, size=size)
        return rng.poisson(lam)
    if k == "gamma":
        mean, cv = spec.params
        return rng.gamma(1.0 / cv**2, mean * cv**2, size=size)
    if k == "shifted_beta":
        a, b = spec.beta_ab()
        return rng.beta(a, b, size=size) + spec.params[2]
    if k == "lognormal":
        return rng.lognormal(spec.params[0], spec.params[1], size=size)
    if k == "weibull":
        scale, shape = spec.params
        return scale * rng.weibull(shape, size=size)
    return rng.normal(spec.params[0], spec.params[1], size=size)


def _check_q(q):
    arr = np.asarray(q, dtype=float)
    if np.any(~(arr > 0.0)) or np.any(~(arr < 1.0)):
        raise ParameterError("q must lie strictly inside (0, 1)", "q")
    return arr


def quantile(spec, q):
    """Inverse CDF; for the negative binomial, the smallest n with CDF(n) >= q."""
    arr = _check_q(q)
    out = _ppf(spec, arr)
    return float(out) if np.ndim(out) == 0 else out


def _ppf(spec, u):
    # no range check: used on Phi(W) which may round to 0 or 1
    u = np.clip(u, np.finfo(float).tiny, np.nextafter(1.0, 0.0))
    if spec.kind == "negbinomial":
        r, p = spec.nb_size_prob()
        n = stats.nbinom.ppf(u, r, p)
        # scipy's ppf can land one step high near ties; walk down while CDF(n-1) >= u
        n = np.asarray(n, dtype=float)
        below = n - 1.0
        fix = (below >= 0) & (stats.nbinom.cdf(below, r, p) >= u)
        n = np.where(fix, below, n)
        return n.astype(np.int64) if n.ndim else np.int64(n)
    return spec.frozen().ppf(u)


def sample_correlated(spec_x, spec_y, rho, stream, size=None):
    """Pair of draws with marginals ``spec_x``, ``spec_y`` and a Gaussian copula.

    Two independent standard normals are mixed by the Cholesky factor
    ``[[1, 0], [rho, sqrt(1 - rho**2)]]`` and pushed through
    ``F^-1(Phi(.))`` of each marginal.
    """
    if not -1.0 < rho < 1.0:
        raise ParameterError("rho must lie strictly inside (-1, 1)", "rho")
    rng = _as_generator(stream)
    # pair i consumes normals 2i and 2i+1, so shorter runs are prefixes of longer ones
    shape = (2,) if size is None else (*np.atleast_1d(size), 2)
    z = rng.standard_normal(shape)
    w1 = z[..., 0]
    w2 = rho * z[..., 0] + math.sqrt(1.0 - rho * rho) * z[..., 1]
    x = _ppf(spec_x, stats.norm.cdf(w1))
    y = _ppf(spec_y, stats.norm.cdf(w2))
    if size is None:
        return x.item() if hasattr(x, "item") else x, y.item() if hasattr(y, "item") else y
    return x, y
