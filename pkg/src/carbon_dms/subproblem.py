"""Pricing sub-problem: the best single-product policy for given dual prices.

For a fixed ``delta`` the overshoot process, and hence E[Q_f], E[Q_s] and the
emission rate, do not depend on ``S_f``; the optimal ``S_f`` is a Newsvendor
fractile of ``lead-time demand - overshoot``.  Dual prices only reweight the
order flows, so one simulation sweep over ``delta`` per product yields a table
from which every pricing problem is answered by a scan.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import ParameterError
from .newsvendor import exact_single_mode
from .policy_sim import (
    ColumnStats,
    DualIndex,
    FastOnly,
    SimConfig,
    SlowOnly,
    Z95,
    demand_matrix,
)
from .rand_dist import DistSpec, quantile

THREADS_ENV = "CARBON_DMS_THREADS"


@dataclass(frozen=True)
class DualPrices:
    """Emission-constraint dual ``eta`` (<= 0) and convexity dual ``upsilon``."""

    eta: float = 0.0
    upsilon: float = 0.0

    def __post_init__(self):
        if self.eta > 0:
            raise ParameterError("eta is the dual of a <= constraint and must be nonpositive", "eta")


@dataclass(frozen=True)
class SearchConfig:
    """Delta grid control.

    The sweep stops at the first delta where the slow mode carries
    ``stop_fraction`` of mean demand, and never passes the ``cap_quantile``
    of demand over the lead-time difference.  ``delta_max`` fixes the grid to
    ``0..delta_max`` instead.
    """

    stop_fraction: float = 0.999
    cap_quantile: float = 0.9999
    delta_max: int | None = None


@dataclass(frozen=True)
class Column:
    product_id: int
    policy: object
    stats: ColumnStats
    row: int = -1  # row in the product's PolicyTable

    @property
    def cost(self):
        return self.stats.cost_rate

    @property
    def emission(self):
        return self.stats.emission_rate


def optimal_sf_given_delta(product, delta, overshoot_samples, demand_samples):
    """Smallest S_f with empirical P(lead demand - O <= S_f) >= p / (p + h).

    ``demand_samples`` holds demand over ``l_f + 1`` periods, either as totals
    (1-D) or per period (2-D, one row per sample); it is paired element-wise
    with ``overshoot_samples``.
    """
    if delta < 0:
        raise ParameterError("delta must be nonnegative", "delta")
    over = np.asarray(overshoot_samples)
    dem = np.asarray(demand_samples)
    if dem.ndim == 2:
        dem = dem.sum(axis=1)
    if over.size == 0 or dem.size == 0:
        raise ParameterError("need at least one overshoot and one demand sample", "samples")
    if over.shape != dem.shape:
        raise ParameterError("overshoot and demand samples must pair up", "samples")
    x = np.sort(dem - over)
    need = max(1, math.ceil(product.critical_ratio * x.size - 1e-9))
    return int(x[need - 1])


def overshoot_samples(product, delta, config):
    """Stationary overshoot and paired (l_f + 1)-period demand, pooled over replications."""
    lag = product.lead_diff
    if lag < 1:
        raise ParameterError("dual-index columns need l_s > l_f", "l_s")
    demand = demand_matrix(product, config)
    n = config.warmup + config.horizon
    overs, leads = [], []
    for row in demand:
        over, _, _ = _kernels.overshoot_path(row[:n], lag, int(delta))
        overs.append(over[config.warmup:])
        leads.append(_kernels._lead_demand(row, config.warmup, n, product.l_f + 1))
    return np.concatenate(overs), np.concatenate(leads)


def delta_cap(product, search):
    if search.delta_max is not None:
        return int(search.delta_max)
    mean, cv = product.demand.params
    lag = product.lead_diff
    return int(quantile(DistSpec.negbinomial(lag * mean, cv / math.sqrt(lag)), search.cap_quantile))


class PolicyTable:
    """Cost, emission and flow rates of every candidate policy of one product.

    Rows ``0..n_delta-1`` are delta = 0, 1, ... with their Newsvendor S_f
    (row 0 is the fast-only policy, evaluated exactly); the last row is the
    exact slow-only policy.  Rates are frozen: the master problem never
    re-simulates a column.
    """

    def __init__(self, product, config=None, search=None):
        self.product = product
        self.config = config or SimConfig()
        self.search = search or SearchConfig()
        self._build()

    def _build(self):
        prod, cfg = self.product, self.config
        mean_d = prod.mean_demand
        fast = exact_single_mode(prod, "fast")
        slow = exact_single_mode(prod, "slow")
        policies = [FastOnly(fast.level)]
        cost, emission, eq_f, eq_s, eo, hw = [fast.cost_rate], [fast.emission_rate], [mean_d], [0.0], [0.0], [0.0]
        lag = prod.lead_diff
        if lag >= 1:
            stop = math.inf if self.search.delta_max is not None else self.search.stop_fraction * mean_d
            s_star, inv_rep, eo_rep = _kernels.delta_table(
                demand_matrix(prod, cfg), prod.l_f, lag, delta_cap(prod, self.search),
                cfg.warmup, cfg.horizon, prod.critical_ratio, prod.h, prod.p, stop)
            # flow identities per replication; only the pooled mean is clipped to [0, E[D]]
            eqs_rep = (np.arange(len(s_star))[:, None] - eo_rep) / lag
            cost_rep = inv_rep + prod.c_f * (mean_d - eqs_rep) + prod.c_s * eqs_rep
            reps = cfg.reps
            for d in range(1, len(s_star)):
                qs = min(max(float(eqs_rep[d].mean()), 0.0), mean_d)
                qf = mean_d - qs
                policies.append(DualIndex(int(s_star[d]), d))
                cost.append(float(inv_rep[d].mean()) + prod.c_f * qf + prod.c_s * qs)
                emission.append(prod.e_f * qf + prod.e_s * qs)
                eq_f.append(qf)
                eq_s.append(qs)
                eo.append(float(eo_rep[d].mean()))
                hw.append(Z95 * float(cost_rep[d].std(ddof=1)) / math.sqrt(reps) if reps > 1 else math.inf)
        policies.append(SlowOnly(slow.level))
        cost.append(slow.cost_rate)
        emission.append(slow.emission_rate)
        eq_f.append(0.0)
        eq_s.append(mean_d)
        eo.append(float("nan"))
        hw.append(0.0)
        self.policies = policies
        self.cost = np.array(cost)
        self.emission = np.array(emission)
        self.eq_f = np.array(eq_f)
        self.eq_s = np.array(eq_s)
        self.eo = np.array(eo)
        self.halfwidth = np.array(hw)

    @classmethod
    def from_arrays(cls, product, policies, cost, emission, eq_f=None, eq_s=None, config=None):
        """Table over given policies and rates, e.g. a frozen toy pool."""
        self = cls.__new__(cls)
        self.product = product
        self.config = config or SimConfig()
        self.search = SearchConfig()
        n = len(policies)
        self.policies = list(policies)
        self.cost = np.asarray(cost, dtype=float)
        self.emission = np.asarray(emission, dtype=float)
        if self.cost.shape != (n,) or self.emission.shape != (n,):
            raise ParameterError("one cost and one emission rate per policy", "cost")
        mean_d = product.mean_demand
        self.eq_f = np.full(n, mean_d) if eq_f is None else np.asarray(eq_f, dtype=float)
        self.eq_s = mean_d - self.eq_f if eq_s is None else np.asarray(eq_s, dtype=float)
        self.eo = np.full(n, np.nan)
        self.halfwidth = np.zeros(n)
        self._least = int(np.lexsort((np.arange(n), self.cost, self.emission))[0])
        return self

    def __len__(self):
        return len(self.policies)

    @property
    def n_delta(self):
        return len(self.policies) - 1

    def reduced_costs(self, duals):
        return self.cost - duals.eta * self.emission - duals.upsilon

    def column(self, row):
        cost = float(self.cost[row])
        rel = float(self.halfwidth[row]) / abs(cost) if cost else math.inf
        stats = ColumnStats(cost, float(self.emission[row]), float(self.eq_f[row]), float(self.eq_s[row]),
                            float(self.eo[row]), rel, 0 if self.halfwidth[row] == 0 else self.config.reps)
        return Column(self.product.id, self.policies[row], stats, row)

    def best_row(self, duals, mask=None):
        rc = self.reduced_costs(duals)
        if mask is not None:
            rc = np.where(mask, rc, np.inf)
        return int(np.argmin(rc))

    @property
    def unconstrained_row(self):
        return int(np.argmin(self.cost))

    @property
    def least_polluting_row(self):
        if hasattr(self, "_least"):
            return self._least
        return len(self.policies) - 1 if self.product.least_polluting == "slow" else 0

    def improvement_tolerance(self, rel=1e-6):
        return max(1e-6, rel * float(self.cost[self.unconstrained_row]))


def solve_sp(table, duals):
    """Minimum reduced-cost column of a product and its reduced cost."""
    row = table.best_row(duals)
    return table.column(row), float(table.reduced_costs(duals)[row])


def solve_carbon_priced(table, carbon_price, rel_tie=1e-9):
    """Cost-minimal column when each kg CO2 costs ``carbon_price``.

    Rows within ``rel_tie`` of the minimum count as ties; the cleanest wins.
    """
    if not carbon_price >= 0:
        raise ParameterError("carbon price must be nonnegative", "carbon_price")
    total = table.cost + float(carbon_price) * table.emission
    best = float(total.min())
    tied = np.flatnonzero(total <= best + rel_tie * max(1.0, abs(best)))
    return table.column(int(tied[np.argmin(table.emission[tied])]))


def n_threads():
    try:
        return max(1, int(os.environ.get(THREADS_ENV, "1")))
    except ValueError:
        return 1


class ColumnTables:
    """Policy tables of every product of an instance, keyed by product id."""

    def __init__(self, instance, config=None, search=None, n_jobs=None):
        self.instance = instance
        self.config = config or SimConfig()
        self.search = search or SearchConfig()
        jobs = n_jobs or n_threads()
        build = lambda prod: PolicyTable(prod, self.config, self.search)  # noqa: E731
        if jobs > 1:
            with ThreadPoolExecutor(jobs) as pool:
                tables = list(pool.map(build, instance.products))
        else:
            tables = [build(prod) for prod in instance.products]
        self.tables = {t.product.id: t for t in tables}

    @classmethod
    def from_tables(cls, instance, tables):
        self = cls.__new__(cls)
        self.instance = instance
        first = tables[0]
        self.config, self.search = first.config, first.search
        self.tables = {t.product.id: t for t in tables}
        return self

    def __getitem__(self, product_id):
        return self.tables[product_id]

    def __iter__(self):
        return iter(self.tables.values())

    def __len__(self):
        return len(self.tables)

    def unconstrained_emissions(self):
        return np.array([t.emission[t.unconstrained_row] for t in self])

    def unconstrained_costs(self):
        return np.array([t.cost[t.unconstrained_row] for t in self])
