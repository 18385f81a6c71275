"""Reference approaches: static mode selection (SMS) and per-product caps (BMS).

SMS lets each product use one mode forever and picks the modes jointly under
the assortment cap.  BMS keeps dual-index policies but gives every product its
own cap, the same fraction of that product's reducible emissions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .exceptions import InfeasibleTargetError
from .master import _budget_tol, solve_mckp_integer
from .newsvendor import SingleModeEval, exact_single_mode, lead_time_demand, single_mode_cost
from .testbed import check_fraction, make_target

__all__ = [
    "ApproachResult",
    "SingleModeEval",
    "exact_single_mode",
    "lead_time_demand",
    "single_mode_cost",
    "solve_bms",
    "solve_sms",
]


@dataclass
class ApproachResult:
    """One column per product, with assortment totals."""

    approach: str
    columns: list
    cost: float
    emission: float
    e_max: float

    @property
    def slack_pct(self):
        return 100.0 * (self.e_max - self.emission) / self.e_max if self.e_max > 0 else 0.0

    @property
    def pct_fast(self):
        shares = [c.stats.eq_f / (c.stats.eq_f + c.stats.eq_s) for c in self.columns]
        return 100.0 * float(np.mean(shares))

    @property
    def cost_halfwidth(self):
        """95% half-width of the total cost, products taken as independent."""
        return math.sqrt(sum(c.stats.cost_halfwidth ** 2 for c in self.columns))


def _result(approach, tables, rows, e_max):
    columns = [tables[pid].column(row) for pid, row in rows]
    return ApproachResult(approach, columns, float(sum(c.cost for c in columns)),
                          float(sum(c.emission for c in columns)), float(e_max))


def solve_sms(tables, e_max):
    """Cheapest one-mode-per-product assignment with total emission <= ``e_max``.

    Uses the two exact single-mode rows of every product table and the
    exact knapsack search of the master problem.
    """
    ids = [t.product.id for t in tables]
    rows = [(0, len(t) - 1) for t in tables]
    emissions = [tables[pid].emission[list(r)] for pid, r in zip(ids, rows)]
    costs = [tables[pid].cost[list(r)] for pid, r in zip(ids, rows)]
    cleanest = [int(np.argmin(e)) for e in emissions]
    if sum(e[k] for e, k in zip(emissions, cleanest)) > e_max + _budget_tol(e_max):
        raise InfeasibleTargetError(f"no single-mode assignment meets the cap {e_max:.6g}")
    res = solve_mckp_integer(emissions, costs, e_max, incumbent=cleanest)
    choice = cleanest if res is None else res.choice
    return _result("SMS", tables, [(pid, r[k]) for pid, r, k in zip(ids, rows, choice)], e_max)


def product_caps(tables, r):
    """Per-product emission caps removing fraction ``r`` of each product's reducible emissions."""
    r = check_fraction(r)
    caps = {}
    for t in tables:
        spec = make_target(r, float(t.emission[t.unconstrained_row]), float(t.emission[t.least_polluting_row]))
        caps[t.product.id] = spec.e_max
    return caps


def solve_bms(tables, r):
    """Cheapest table row per product within that product's own cap."""
    caps = product_caps(tables, r)
    rows = []
    for t in tables:
        cap = caps[t.product.id]
        ok = t.emission <= cap + _budget_tol(cap)
        ok[t.least_polluting_row] = True
        rows.append((t.product.id, int(np.argmin(np.where(ok, t.cost, np.inf)))))
    return _result("BMS", tables, rows, sum(caps.values()))
