"""Experiment plumbing: target sweeps, emission-reduction shares, carbon pricing."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .benchmarks import solve_bms, solve_sms
from .exceptions import ParameterError
from .master import build_tables, run_column_generation
from .policy_sim import SimConfig, policy_to_dict
from .subproblem import solve_carbon_priced
from .testbed import check_fraction, resolve_target

APPROACHES = ("DMS", "SMS", "BMS")
DEFAULT_TARGETS = tuple(round(0.1 * k, 1) for k in range(11))

SWEEP_HEADER = ["r", "approach", "cost", "emission", "e_max", "slack_pct", "gap_pct",
                "pct_sms", "pct_bms", "pct_f", "cost_norm_r1", "cost_halfwidth", "converged"]
LORENZ_HEADER = ["rank", "realized_id", "realized_share", "ratio_id", "ratio_share"]
PRICE_HEADER = ["c_e", "cost", "emission", "carbon_cost", "pct_f"]


@dataclass
class ExperimentConfig:
    assortment_type: int = 1
    seed: int = 0
    overrides: dict = field(default_factory=dict)
    targets: tuple = DEFAULT_TARGETS
    sim: SimConfig = field(default_factory=SimConfig)
    max_iter: int = 50
    eps_rel: float = 1e-6


def parse_targets(text):
    """Comma-separated reduction fractions, e.g. ``0,0.5,1``."""
    try:
        values = [float(v) for v in str(text).split(",") if v.strip()]
    except ValueError:
        raise ParameterError(f"cannot parse targets {text!r}", "targets") from None
    if not values:
        raise ParameterError("need at least one target", "targets")
    return tuple(sorted({check_fraction(v, "targets") for v in values}))


def fmt(x):
    """Shortest round-trip text for a float; keeps reruns byte-identical."""
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    x = float(x)
    if math.isnan(x):
        return "nan"
    return repr(x)


@dataclass
class ReportRow:
    r: float
    approach: str
    cost: float
    emission: float
    e_max: float
    slack_pct: float
    gap_pct: float
    pct_sms: float
    pct_bms: float
    pct_f: float
    cost_norm_r1: float
    cost_halfwidth: float
    converged: bool = True

    def values(self):
        return [fmt(getattr(self, k)) if k != "approach" else self.approach for k in SWEEP_HEADER]


def cleanest_cost(tables):
    """Total cost when every product ships only by its least-polluting mode."""
    return float(sum(t.cost[t.least_polluting_row] for t in tables))


def solve_dms(tables, instance, r, max_iter=50, eps_rel=1e-6, log=None):
    target = resolve_target(instance, r, tables)
    return target, run_column_generation(tables, target.e_max, max_iter=max_iter, eps_rel=eps_rel, log=log)


def sweep(instance, targets=DEFAULT_TARGETS, sim=None, approaches=APPROACHES, tables=None,
          max_iter=50, eps_rel=1e-6):
    """One :class:`ReportRow` per (r, approach), ordered by r then approach.

    Percent increases are relative to the DMS integer cost at the same r;
    costs are also normalised by the all-least-polluting cost, which is the
    optimum of every approach at r = 1.
    """
    unknown = set(approaches) - set(APPROACHES)
    if unknown:
        raise ParameterError(f"unknown approaches {sorted(unknown)}", "approaches")
    tables = tables or build_tables(instance, sim or SimConfig())
    base = cleanest_cost(tables)
    rows = []
    for r in targets:
        target, cg = solve_dms(tables, instance, r, max_iter, eps_rel)
        dms = cg.solution
        sms = solve_sms(tables, target.e_max)
        bms = solve_bms(tables, r)
        pct = lambda c: 100.0 * (c - dms.cost) / dms.cost  # noqa: E731
        pct_sms, pct_bms = pct(sms.cost), pct(bms.cost)
        results = {
            "DMS": (dms, dms.gap_pct, cg.converged, dms.cost_halfwidth),
            "SMS": (sms, math.nan, True, sms.cost_halfwidth),
            "BMS": (bms, math.nan, True, bms.cost_halfwidth),
        }
        for name in APPROACHES:
            if name not in approaches:
                continue
            res, gap, conv, hw = results[name]
            rows.append(ReportRow(float(r), name, res.cost, res.emission, target.e_max,
                                  100.0 * (target.e_max - res.emission) / target.e_max if target.e_max > 0 else 0.0,
                                  gap, pct_sms, pct_bms, res.pct_fast, res.cost / base, hw, conv))
    return rows


def write_rows(fh, header, rows):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow(row)


def write_sweep(fh, rows):
    write_rows(fh, SWEEP_HEADER, [row.values() for row in rows])


# -- emission-reduction concentration ---------------------------------------------


@dataclass
class LorenzCurve:
    """Cumulative shares of the total emission reduction under two product orderings."""

    realized_order: list
    realized_share: np.ndarray
    ratio_order: list
    ratio_share: np.ndarray
    top_fraction: float
    top_realized: float
    top_ratio: float
    zero_total: bool

    def rows(self):
        return [[k + 1, a, fmt(sa), b, fmt(sb)] for k, (a, sa, b, sb) in enumerate(
            zip(self.realized_order, self.realized_share, self.ratio_order, self.ratio_share))]


def reduction_shares(products, reductions, top_fraction=0.2):
    """Lorenz-style shares of ``reductions`` (one per product).

    The realized ordering sorts products by their own reduction; the ratio
    ordering sorts by ``|e_f - e_s| / (c_f - c_s)``, emissions saved per unit
    of shipping premium.  Ties keep product order.
    """
    red = np.asarray(reductions, dtype=float)
    n = red.size
    if n == 0 or n != len(products):
        raise ParameterError("one reduction per product is required", "reductions")
    ids = [p.id for p in products]
    ratio = np.array([_ratio(p) for p in products])
    realized = np.argsort(-red, kind="stable")
    by_ratio = np.argsort(-ratio, kind="stable")
    total = float(red.sum())
    zero = not abs(total) > 1e-12
    if zero:
        cum_a = cum_b = np.zeros(n)
    else:
        cum_a = np.cumsum(red[realized]) / total
        cum_b = np.cumsum(red[by_ratio]) / total
    k = max(1, math.ceil(top_fraction * n - 1e-9))
    return LorenzCurve([ids[i] for i in realized], cum_a, [ids[i] for i in by_ratio], cum_b,
                       top_fraction, float(cum_a[k - 1]), float(cum_b[k - 1]), zero)


def _ratio(p):
    premium = p.c_f - p.c_s
    gap = abs(p.e_f - p.e_s)
    if premium > 0:
        return gap / premium
    return math.inf if gap > 0 else 0.0


def lorenz(tables, solution, top_fraction=0.2):
    """Shares of the reduction from the unconstrained optimum achieved by ``solution``."""
    reductions = [t.emission[t.unconstrained_row] - c.emission for t, c in zip(tables, solution.columns)]
    return reduction_shares([t.product for t in tables], reductions, top_fraction)


# -- carbon pricing -----------------------------------------------------------------


@dataclass
class PriceReport:
    c_e: float
    columns: list
    cost: float
    emission: float

    @property
    def carbon_cost(self):
        return self.c_e * self.emission

    @property
    def pct_fast(self):
        shares = [c.stats.eq_f / (c.stats.eq_f + c.stats.eq_s) for c in self.columns]
        return 100.0 * float(np.mean(shares))

    def values(self):
        return [fmt(self.c_e), fmt(self.cost), fmt(self.emission), fmt(self.carbon_cost), fmt(self.pct_fast)]


def carbon_price(tables, c_e):
    """Every product minimises cost plus ``c_e`` per kg CO2; totals exclude the carbon charge."""
    columns = [solve_carbon_priced(t, c_e) for t in tables]
    return PriceReport(float(c_e), columns, float(sum(c.cost for c in columns)),
                       float(sum(c.emission for c in columns)))


def _finite(d):
    # JSON has no NaN or infinity
    return {k: (None if isinstance(v, float) and not math.isfinite(v) else v) for k, v in d.items()}


def solution_dict(result, target=None):
    """JSON-ready description of a solved approach."""
    columns = result.columns
    out = {
        "cost": float(result.cost),
        "emission": float(result.emission),
        "e_max": float(result.e_max),
        "products": [
            {"id": c.product_id, "policy": policy_to_dict(c.policy), **_finite(c.stats.to_dict())}
            for c in columns
        ],
    }
    if target is not None:
        out["reduction"] = float(target.reduction)
    for key in ("lower_bound", "gap_pct", "proven_optimal"):
        if hasattr(result, key):
            value = getattr(result, key)
            out[key] = value if isinstance(value, bool) else float(value)
    return out


__all__ = [
    "APPROACHES",
    "ExperimentConfig",
    "LorenzCurve",
    "PriceReport",
    "ReportRow",
    "carbon_price",
    "lorenz",
    "parse_targets",
    "reduction_shares",
    "solution_dict",
    "solve_dms",
    "sweep",
    "write_sweep",
]
