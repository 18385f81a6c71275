"""Exact single-mode base-stock evaluation.

Under a single mode with lead time ``l`` the end-of-period net inventory is
``S - X`` with ``X`` the demand over ``l + 1`` periods.  For negative binomial
period demand, ``X`` is negative binomial with the same success probability
and ``l + 1`` times the size, so every quantity here is an exact finite sum.
"""

from dataclasses import dataclass

import numpy as np
from scipy import stats

from .exceptions import ParameterError
from .rand_dist import DistSpec, quantile


@dataclass(frozen=True)
class SingleModeEval:
    mode: str
    level: int
    cost_rate: float
    emission_rate: float


def lead_time_demand(product, mode):
    """Law of demand over ``l_m + 1`` periods."""
    lead = _lead(product, mode)
    mean, cv = product.demand.params
    return DistSpec.negbinomial((lead + 1) * mean, cv / np.sqrt(lead + 1))


def _lead(product, mode):
    if mode == "fast":
        return product.l_f
    if mode == "slow":
        return product.l_s
    raise ParameterError("mode must be 'slow' or 'fast'", "mode")


def expected_overage(law, level):
    """E[(level - X)^+] for a nonnegative integer law."""
    if level < 0:
        return 0.0
    r, p = law.nb_size_prob()
    x = np.arange(level + 1)
    return float(np.sum((level - x) * stats.nbinom.pmf(x, r, p)))


def single_mode_cost(product, mode, level):
    """Long-run cost rate of a base-stock level ``level`` on one mode."""
    law = lead_time_demand(product, mode)
    over = expected_overage(law, int(level))
    under = over - level + law.mean()
    c = product.c_f if mode == "fast" else product.c_s
    return product.h * over + product.p * under + c * product.mean_demand


def exact_single_mode(product, mode):
    """Optimal base-stock level and its exact cost and emission rates."""
    law = lead_time_demand(product, mode)
    level = int(quantile(law, product.critical_ratio))
    e = product.e_f if mode == "fast" else product.e_s
    return SingleModeEval(mode, level, single_mode_cost(product, mode, level), e * product.mean_demand)


def newsvendor_from_pmf(pmf, h, p, start=0):
    """Optimal level and expected holding+backlog cost for a pmf on ``start, start+1, ...``.

    Generic fallback used for laws other than the negative binomial.
    """
    pmf = np.asarray(pmf, dtype=float)
    support = start + np.arange(pmf.size)
    cdf = np.cumsum(pmf)
    level = int(support[np.searchsorted(cdf, p / (p + h) - 1e-12)])
    cost = h * np.sum(np.maximum(level - support, 0) * pmf) + p * np.sum(np.maximum(support - level, 0) * pmf)
    return level, float(cost)
