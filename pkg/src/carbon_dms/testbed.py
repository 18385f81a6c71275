"""Random assortments and emission targets.

Every product parameter comes from its own seeded stream, so changing one
knob (say ``sigma_c``) leaves all other parameters of the instance untouched,
and an instance with ``n_products=40`` is the first 40 products of the
``n_products=100`` instance with the same seed.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from .emissions import check_assortment_type, sample_emission_pair
from .exceptions import ParameterError
from .rand_dist import DistSpec, RngStream, sample, sample_correlated

SCHEMA_VERSION = 1

DEFAULT_OVERRIDES = {
    "n_products": 100,
    "cv_mu": 0.5,  # cv of the Gamma law of mean demands
    "shift_cv": 0.3,  # shift of the Beta law of demand cv's
    "rho": -0.5,  # copula correlation between mean demand and holding cost
    "psi_p": 9.0,  # penalty-to-holding cost ratio
    "sigma_c": 0.1,  # sd of the fast-mode cost premium factor
    "l_slow": 3,
    "delta_e": 1.0,  # scale on |e_s - e_f|, cleaner mode kept fixed
}

# stream ids, one per sampled quantity
_S_COPULA, _S_CV, _S_CHI_P, _S_CHI_C, _S_EMISSION, _S_REPAIR = 1, 2, 3, 4, 5, 6


@dataclass(frozen=True)
class ProductParams:
    """One product: demand law, costs per unit, lead times and emissions per unit."""

    id: int
    demand: DistSpec
    h: float
    p: float
    c_s: float
    c_f: float
    l_s: int
    l_f: int
    e_s: float
    e_f: float

    def __post_init__(self):
        if self.demand.kind != "negbinomial":
            raise ParameterError("demand must be negative binomial", "demand")
        for name in ("h", "p"):
            if not getattr(self, name) > 0:
                raise ParameterError(f"{name} must be positive", name)
        for name in ("c_s", "c_f", "e_s", "e_f"):
            value = getattr(self, name)
            if not (value >= 0 and math.isfinite(value)):
                raise ParameterError(f"{name} must be finite and nonnegative", name)
        for name in ("l_s", "l_f"):
            value = getattr(self, name)
            if int(value) != value or value < 0:
                raise ParameterError(f"{name} must be a nonnegative integer", name)
            object.__setattr__(self, name, int(value))
        if self.l_s < self.l_f:
            raise ParameterError("slow lead time must not be shorter than the fast one", "l_s")

    @property
    def mean_demand(self):
        return self.demand.params[0]

    @property
    def lead_diff(self):
        return self.l_s - self.l_f

    @property
    def critical_ratio(self):
        return self.p / (self.p + self.h)

    @property
    def least_polluting(self):
        """``'slow'`` or ``'fast'``; ties go to slow."""
        return "slow" if self.e_s <= self.e_f else "fast"

    @property
    def min_emission_rate(self):
        return min(self.e_s, self.e_f) * self.mean_demand

    def to_dict(self):
        d = asdict(self)
        d["demand"] = self.demand.as_dict()
        return d

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d["demand"] = DistSpec.from_dict(d["demand"])
        return cls(**d)


@dataclass(frozen=True)
class Instance:
    products: tuple
    assortment_type: int
    seed: int
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "products", tuple(self.products))
        if not self.products:
            raise ParameterError("an instance needs at least one product", "products")
        ids = [prod.id for prod in self.products]
        if len(set(ids)) != len(ids):
            raise ParameterError("product ids must be unique", "products")

    def __len__(self):
        return len(self.products)

    @property
    def min_emission(self):
        return float(sum(prod.min_emission_rate for prod in self.products))

    def to_dict(self):
        return {
            "version": SCHEMA_VERSION,
            "type": self.assortment_type,
            "seed": self.seed,
            "overrides": dict(sorted(self.overrides.items())),
            "products": [prod.to_dict() for prod in self.products],
        }

    def to_json(self, path=None):
        text = json.dumps(self.to_dict(), indent=1) + "\n"
        if path is not None:
            with open(path, "w") as fh:
                fh.write(text)
        return text

    @classmethod
    def from_dict(cls, d):
        if d.get("version") != SCHEMA_VERSION:
            raise ParameterError(f"unsupported instance schema version {d.get('version')!r}", "version")
        return cls(
            products=tuple(ProductParams.from_dict(p) for p in d["products"]),
            assortment_type=d["type"],
            seed=d["seed"],
            overrides=dict(d.get("overrides", {})),
        )

    @classmethod
    def from_json(cls, path):
        with open(path) as fh:
            return cls.from_dict(json.load(fh))


def validate_overrides(overrides):
    """Checked, normalised copy of ``overrides``; unknown keys are rejected."""
    out = {}
    for key, value in (overrides or {}).items():
        if key not in DEFAULT_OVERRIDES:
            raise ParameterError(f"unknown override {key!r}", key)
        try:
            value = float(value)
        except (TypeError, ValueError):
            raise ParameterError(f"override {key} must be numeric", key) from None
        if not math.isfinite(value):
            raise ParameterError(f"override {key} must be finite", key)
        if key in ("n_products", "l_slow"):
            if value != int(value):
                raise ParameterError(f"override {key} must be an integer", key)
            value = int(value)
            if value < 1:
                raise ParameterError(f"override {key} must be at least 1", key)
        elif key == "rho":
            if not -1.0 < value < 1.0:
                raise ParameterError("rho must lie strictly inside (-1, 1)", key)
        elif key == "delta_e":
            if value < 0:
                raise ParameterError("delta_e must be nonnegative", key)
        elif key == "sigma_c":
            if not 0 < value < math.sqrt(0.25 * 0.75):
                raise ParameterError("sigma_c must lie in (0, sqrt(0.1875))", key)
        elif key == "shift_cv":
            if value < 0:
                raise ParameterError("shift_cv must be nonnegative", key)
        elif value <= 0:
            raise ParameterError(f"override {key} must be positive", key)
        out[key] = value
    return out


def _nb_ok(mean, cv):
    return cv * cv * mean > 1.0


def generate_instance(assortment_type, seed, overrides=None):
    """Random assortment of the given type.

    Mean demand and holding cost are Gamma draws coupled by a Gaussian copula;
    demand cv, the penalty perturbation and the cost-premium factor are
    shifted Betas; emission units come from the type's fitted laws.
    """
    t = check_assortment_type(assortment_type)
    seed = int(seed)
    given = validate_overrides(overrides)
    cfg = {**DEFAULT_OVERRIDES, **given}
    n = cfg["n_products"]

    law_mu = DistSpec.gamma(100.0, cfg["cv_mu"])
    law_h = DistSpec.gamma(1.0, 0.5)
    law_cv = DistSpec.shifted_beta(0.9, 0.25, cfg["shift_cv"])
    law_chi_p = DistSpec.shifted_beta(0.98, 0.1, 0.02)
    law_chi_c = DistSpec.shifted_beta(0.25, cfg["sigma_c"], 0.0)

    mu, h = sample_correlated(law_mu, law_h, cfg["rho"], RngStream(seed, _S_COPULA), size=n)
    cv = sample(law_cv, RngStream(seed, _S_CV), size=n)
    chi_p = sample(law_chi_p, RngStream(seed, _S_CHI_P), size=n)
    chi_c = sample(law_chi_c, RngStream(seed, _S_CHI_C), size=n)
    e_s, e_f = sample_emission_pair(t, RngStream(seed, _S_EMISSION), size=n)

    delta_e = cfg["delta_e"]
    if delta_e != 1.0:
        dirty = np.minimum(e_s, e_f) + delta_e * np.abs(e_s - e_f)
        e_s, e_f = np.where(e_s > e_f, dirty, e_s), np.where(e_f > e_s, dirty, e_f)

    l_s, l_f = cfg["l_slow"], 0
    products = []
    for j in range(n):
        mu_j, h_j, cv_j = float(mu[j]), float(h[j]), float(cv[j])
        if not _nb_ok(mu_j, cv_j):
            mu_j, h_j, cv_j = _repair(seed, j, mu_j, h_j, law_mu, law_h, law_cv, cfg["rho"])
        p_j = cfg["psi_p"] * float(chi_p[j]) * h_j
        products.append(ProductParams(
            id=j,
            demand=DistSpec.negbinomial(mu_j, cv_j),
            h=h_j,
            p=p_j,
            c_s=0.0,
            c_f=float(chi_c[j]) * p_j * (l_s - l_f),
            l_s=l_s,
            l_f=l_f,
            e_s=float(e_s[j]),
            e_f=float(e_f[j]),
        ))
    return Instance(tuple(products), t, seed, given)


def _repair(seed, j, mu, h, law_mu, law_h, law_cv, rho):
    # a negative binomial needs var > mean; redraw the cv, then if hopeless the (mu, h) pair
    rng = RngStream(seed, _S_REPAIR).generator(j)
    while True:
        for _ in range(64):
            cv = float(sample(law_cv, rng))
            if _nb_ok(mu, cv):
                return mu, h, cv
        mu, h = sample_correlated(law_mu, law_h, rho, rng)
        mu, h = float(mu), float(h)


@dataclass(frozen=True)
class TargetSpec:
    """Emission cap built from a reduction fraction of the reducible emissions."""

    reduction: float
    e_max: float
    e_min: float
    e_unconstrained: float

    @property
    def reducible(self):
        return self.e_unconstrained - self.e_min


def check_fraction(r, name="r"):
    try:
        r = float(r)
    except (TypeError, ValueError):
        raise ParameterError(f"{name} must be a number in [0, 1]", name) from None
    if not 0.0 <= r <= 1.0:
        raise ParameterError(f"{name} must lie in [0, 1]", name)
    return r


def resolve_target(instance, r, solver):
    """Cap that removes fraction ``r`` of the instance's reducible emissions.

    ``solver`` must expose ``unconstrained_emissions()``, the per-product
    emission rates of the cost-optimal policies without a cap (see
    :class:`carbon_dms.subproblem.ColumnTables`).
    """
    r = check_fraction(r)
    e_unc = float(np.sum(solver.unconstrained_emissions()))
    e_min = instance.min_emission
    return make_target(r, e_unc, e_min)


def make_target(r, e_unconstrained, e_min):
    reducible = e_unconstrained - e_min
    if reducible <= 1e-9 * max(1.0, abs(e_min)):
        # unconstrained optimum already (numerically) at the emission floor
        return TargetSpec(r, e_min, e_min, max(e_unconstrained, e_min))
    if r == 0.0:
        e_max = e_unconstrained
    elif r == 1.0:
        e_max = e_min
    else:
        e_max = e_unconstrained - r * reducible
    return TargetSpec(r, e_max, e_min, e_unconstrained)


def with_products(instance, products):
    return replace(instance, products=tuple(products))
