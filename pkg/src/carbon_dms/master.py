"""Master problem: a multiple-choice knapsack over policy columns.

Each product picks a convex combination of its pooled columns, subject to one
assortment-wide emission budget.  The LP relaxation is solved exactly by the
classical greedy walk over per-product lower convex hulls in the
(emission, cost) plane; at most one product ends up split between two
adjacent hull points.  Integer solutions come from best-first branch and
bound on the split product's column choice.
"""

from __future__ import annotations

import csv
import heapq
import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import InfeasibleTargetError, ParameterError
from .subproblem import ColumnTables, DualPrices, SearchConfig

FEAS_TOL = 1e-9


def _budget_tol(e_max):
    return FEAS_TOL * max(1.0, abs(e_max))


# -- LP relaxation --------------------------------------------------------------


def lower_hull(emission, cost):
    """Cost-minimal point and the hull segments leading to lower emissions.

    Returns ``(start, segments)``; ``start`` indexes the cheapest point (ties:
    lowest emission, then lowest index) and ``segments`` is a list of
    ``(slope, d_emission, from_idx, to_idx)`` walking left along the lower
    convex hull, where ``slope`` is the cost increase per unit of emission
    removed; slopes strictly increase along the list.
    """
    emission = np.asarray(emission, dtype=float)
    cost = np.asarray(cost, dtype=float)
    order = np.lexsort((np.arange(len(cost)), cost, emission))
    # keep the cheapest point for each emission level
    pts = []
    for i in order:
        if pts and emission[i] == emission[pts[-1]]:
            continue
        pts.append(int(i))
    hull = []
    for i in pts:
        while len(hull) >= 2:
            a, b = hull[-2], hull[-1]
            cross = (emission[b] - emission[a]) * (cost[i] - cost[a]) - (cost[b] - cost[a]) * (emission[i] - emission[a])
            if cross <= 0:
                hull.pop()
            else:
                break
        hull.append(i)
    hcost = cost[hull]
    k = int(np.flatnonzero(hcost == hcost.min())[0])
    segments = []
    for m in range(k, 0, -1):
        right, left = hull[m], hull[m - 1]
        d_e = emission[right] - emission[left]
        segments.append(((cost[left] - cost[right]) / d_e, d_e, right, left))
    return hull[k], segments


@dataclass
class LPSolution:
    """Optimal LP weights per product (``{column index: weight}``) and duals."""

    weights: list
    eta: float
    upsilon: np.ndarray
    value: float
    emission: float
    fractional: int | None  # position of the split product, if any

    @property
    def is_integral(self):
        return self.fractional is None

    def choice(self):
        """Column index per product, taking the heavier side of a split."""
        return [max(w, key=w.get) for w in self.weights]


def solve_lmckp(emissions, costs, e_max, fixed=None, hulls=None):
    """Exact LP optimum of the multiple-choice knapsack relaxation.

    ``emissions[j]`` and ``costs[j]`` are the column coefficients of product j;
    ``fixed`` maps a product position to the only column it may use.  Returns
    ``None`` when even the least-emitting choice breaks the budget.
    Ties between equal slopes go to the lower product position.
    """
    n = len(costs)
    fixed = fixed or {}
    if hulls is None:
        hulls = [lower_hull(emissions[j], costs[j]) for j in range(n)]
    current = []
    total = 0.0
    segs = []
    for j in range(n):
        if j in fixed:
            idx, seglist = fixed[j], []
        else:
            idx, seglist = hulls[j]
        current.append(idx)
        total += emissions[j][idx]
        for order, (slope, d_e, frm, to) in enumerate(seglist):
            segs.append((slope, j, order, d_e, frm, to))
    tol = _budget_tol(e_max)
    weights = [{idx: 1.0} for idx in current]
    lam = 0.0
    fractional = None
    deficit = total - e_max
    if deficit > tol:
        segs.sort(key=lambda s: (s[0], s[1], s[2]))
        for slope, j, _, d_e, frm, to in segs:
            lam = slope
            if d_e >= deficit - tol:
                theta = deficit / d_e
                if theta >= 1.0 - 1e-12:
                    weights[j] = {to: 1.0}
                elif theta > 1e-12:
                    weights[j] = {to: theta, frm: 1.0 - theta}
                    fractional = j
                deficit = 0.0
                break
            weights[j] = {to: 1.0}
            deficit -= d_e
        if deficit > tol:
            return None
    upsilon = np.empty(n)
    value = 0.0
    emission = 0.0
    for j in range(n):
        e_j, c_j = np.asarray(emissions[j]), np.asarray(costs[j])
        if j in fixed:
            upsilon[j] = c_j[fixed[j]] + lam * e_j[fixed[j]]
        else:
            upsilon[j] = float(np.min(c_j + lam * e_j))
        for idx, w in weights[j].items():
            value += w * c_j[idx]
            emission += w * e_j[idx]
    weights = [{int(k): float(w) for k, w in wj.items()} for wj in weights]
    return LPSolution(weights, 0.0 - float(lam), upsilon, float(value), float(emission), fractional)


# -- integer finishing ----------------------------------------------------------


@dataclass
class BnBResult:
    choice: list
    value: float
    emission: float
    nodes: int
    proven_optimal: bool


def solve_mckp_integer(emissions, costs, e_max, node_limit=200_000, incumbent=None):
    """Exact integer multiple-choice knapsack by best-first branch and bound.

    Every node is an LP relaxation with some products fixed; branching fixes
    the split product to each of its columns in turn.  ``incumbent`` is an
    optional feasible ``choice`` list used as the starting upper bound.
    """
    n = len(costs)
    hulls = [lower_hull(emissions[j], costs[j]) for j in range(n)]
    root = solve_lmckp(emissions, costs, e_max, hulls=hulls)
    if root is None:
        return None
    tol = _budget_tol(e_max)

    def evaluate(choice):
        return (sum(costs[j][k] for j, k in enumerate(choice)),
                sum(emissions[j][k] for j, k in enumerate(choice)))

    best_choice, best_value = None, math.inf
    if incumbent is not None:
        v, e = evaluate(incumbent)
        if e <= e_max + tol:
            best_choice, best_value = list(incumbent), v
    if root.fractional is not None:
        # rounding the split product to its cleaner side keeps the budget
        w = root.weights[root.fractional]
        choice = root.choice()
        choice[root.fractional] = min(w, key=lambda k: emissions[root.fractional][k])
        v, e = evaluate(choice)
        if e <= e_max + tol and v < best_value:
            best_choice, best_value = choice, v

    counter = 0
    heap = [(root.value, counter, {}, root)]
    nodes = 0
    proven = True
    while heap:
        bound, _, fixed, lp = heapq.heappop(heap)
        if bound >= best_value - 1e-12 * max(1.0, abs(best_value)):
            continue
        nodes += 1
        if nodes > node_limit:
            proven = False
            break
        if lp.fractional is None:
            choice = lp.choice()
            v, _ = evaluate(choice)
            if v < best_value:
                best_choice, best_value = choice, v
            continue
        j = lp.fractional
        for k in range(len(costs[j])):
            child_fixed = {**fixed, j: k}
            child = solve_lmckp(emissions, costs, e_max, fixed=child_fixed, hulls=hulls)
            if child is None or child.value >= best_value:
                continue
            counter += 1
            heapq.heappush(heap, (child.value, counter, child_fixed, child))
    if best_choice is None:
        return None
    v, e = evaluate(best_choice)
    return BnBResult(best_choice, v, e, nodes, proven)


# -- column generation ----------------------------------------------------------


@dataclass
class MasterState:
    """Column pool (table rows per product), last LP solution and iteration log."""

    tables: ColumnTables
    e_max: float
    pool: dict
    lp: LPSolution | None = None
    iteration: int = 0
    history: list = field(default_factory=list)

    @property
    def product_ids(self):
        return [t.product.id for t in self.tables]

    def coefficients(self):
        emissions, costs = [], []
        for pid in self.product_ids:
            table, rows = self.tables[pid], self.pool[pid]
            emissions.append(table.emission[rows])
            costs.append(table.cost[rows])
        return emissions, costs

    @property
    def lower_bound(self):
        return None if self.lp is None else self.lp.value

    def lp_columns(self):
        """``[(column, weight), ...]`` per product for the current LP."""
        out = []
        for pid, w in zip(self.product_ids, self.lp.weights):
            table, rows = self.tables[pid], self.pool[pid]
            out.append([(table.column(rows[k]), wt) for k, wt in sorted(w.items())])
        return out


@dataclass
class IntegerSolution:
    columns: list
    cost: float
    emission: float
    e_max: float
    lower_bound: float
    proven_optimal: bool = True

    @property
    def gap_pct(self):
        if self.lower_bound is None or self.lower_bound <= 0:
            return float("nan")
        return float(100.0 * (self.cost - self.lower_bound) / self.lower_bound)

    @property
    def slack_pct(self):
        return float(100.0 * (self.e_max - self.emission) / self.e_max) if self.e_max > 0 else 0.0

    @property
    def pct_fast(self):
        """Average share of each product's flow shipped fast, in percent."""
        shares = [c.stats.eq_f / (c.stats.eq_f + c.stats.eq_s) for c in self.columns]
        return 100.0 * float(np.mean(shares))

    @property
    def cost_halfwidth(self):
        """95% half-width of the total cost, products taken as independent."""
        return math.sqrt(sum(c.stats.cost_halfwidth ** 2 for c in self.columns))


def check_feasible(tables, e_max):
    e_min = sum(t.emission[t.least_polluting_row] for t in tables)
    if e_min > e_max + _budget_tol(e_max):
        raise InfeasibleTargetError(
            f"emission cap {e_max:.6g} is below the least achievable emission {e_min:.6g}")


def init_pool(tables, e_max):
    """Seed every product with its cleanest single-mode column and its cost optimum."""
    check_feasible(tables, e_max)
    pool = {}
    for t in tables:
        rows = [t.least_polluting_row]
        if t.unconstrained_row not in rows:
            rows.append(t.unconstrained_row)
        pool[t.product.id] = rows
    return MasterState(tables, float(e_max), pool)


def solve_rmp_lp(state):
    """Solve the restricted master LP; stores and returns the solution."""
    if not state.pool or any(not rows for rows in state.pool.values()):
        raise ParameterError("every product needs at least one pooled column", "pool")
    emissions, costs = state.coefficients()
    lp = solve_lmckp(emissions, costs, state.e_max)
    if lp is None:
        raise InfeasibleTargetError("restricted master problem is infeasible")
    state.lp = lp
    return lp


def polish_pool(state, rows, max_passes=50):
    """Add 1-opt improvements of an integer assignment to the pool.

    ``rows`` maps product id to a table row.  Each product in turn moves to
    the cheapest row of its full table that fits the budget left by the
    others, until a pass changes nothing.  Returns the improved assignment.
    """
    rows = dict(rows)
    total = sum(state.tables[pid].emission[r] for pid, r in rows.items())
    tol = _budget_tol(state.e_max)
    for _ in range(max_passes):
        changed = False
        for pid in state.product_ids:
            t, cur = state.tables[pid], rows[pid]
            room = state.e_max - (total - t.emission[cur]) + tol
            ok = t.emission <= room
            cand = np.where(ok, t.cost, np.inf)
            best = int(np.argmin(cand))
            if cand[best] < t.cost[cur] - 1e-12 * max(1.0, abs(t.cost[cur])):
                total += t.emission[best] - t.emission[cur]
                rows[pid] = best
                if best not in state.pool[pid]:
                    state.pool[pid].append(best)
                changed = True
        if not changed:
            break
    return rows


def _lp_rounded_rows(state):
    # LP columns with the split product moved to its cleaner side
    emissions, _ = state.coefficients()
    rows = {}
    for j, (pid, w) in enumerate(zip(state.product_ids, state.lp.weights)):
        k = min(w, key=lambda k: emissions[j][k]) if len(w) > 1 else next(iter(w))
        rows[pid] = state.pool[pid][k]
    return rows


def _mckp_over_pool(state, node_limit, incumbent):
    emissions, costs = state.coefficients()
    res = solve_mckp_integer(emissions, costs, state.e_max, node_limit=node_limit, incumbent=incumbent)
    if res is None:
        return None, False
    return res.choice, res.proven_optimal


def solve_integer(state, node_limit=200_000, polish=True):
    """Best integer assignment over the pool; falls back to all-cleanest columns.

    With ``polish`` the pool is first enlarged by :func:`polish_pool`, started
    from the pool optimum and from the rounded LP, and the exact search is
    repeated on the larger pool.
    The LP bound is not affected.
    """
    if state.lp is None:
        solve_rmp_lp(state)
    cleanest = [state.pool[pid].index(state.tables[pid].least_polluting_row) for pid in state.product_ids]
    choice, proven = _mckp_over_pool(state, node_limit, cleanest)
    if choice is None:
        choice, proven = cleanest, False
    if polish:
        ids = state.product_ids
        starts = [{pid: state.pool[pid][k] for pid, k in zip(ids, choice)}, _lp_rounded_rows(state)]
        best = None
        for rows in starts:
            rows = polish_pool(state, rows)
            value = sum(state.tables[pid].cost[r] for pid, r in rows.items())
            if best is None or value < best[0]:
                best = (value, rows)
        start = [state.pool[pid].index(best[1][pid]) for pid in ids]
        better, proven2 = _mckp_over_pool(state, node_limit, start)
        if better is not None:
            choice, proven = better, proven2
    columns = [state.tables[pid].column(state.pool[pid][k]) for pid, k in zip(state.product_ids, choice)]
    return IntegerSolution(columns, float(sum(c.cost for c in columns)), float(sum(c.emission for c in columns)),
                           state.e_max, state.lp.value, proven)


@dataclass
class CGResult:
    state: MasterState
    solution: IntegerSolution
    converged: bool

    @property
    def lower_bound(self):
        return self.state.lp.value

    @property
    def eta(self):
        return self.state.lp.eta


def run_column_generation(tables, e_max, max_iter=50, eps_rel=1e-6, log=None, polish=True):
    """Alternate master LP solves and pricing until no column prices out.

    A column enters only if its reduced cost is below ``-max(1e-6, eps_rel *
    unconstrained cost of the product)``.  ``log`` collects one dict per
    iteration (iter, lb, pool_size, eta, improving).
    """
    state = init_pool(tables, e_max)
    converged = False
    for it in range(max_iter):
        lp = solve_rmp_lp(state)
        added = 0
        for j, pid in enumerate(state.product_ids):
            table = tables[pid]
            duals = DualPrices(lp.eta, float(lp.upsilon[j]))
            row = table.best_row(duals)
            rc = float(table.reduced_costs(duals)[row])
            if rc < -table.improvement_tolerance(eps_rel) and row not in state.pool[pid]:
                state.pool[pid].append(row)
                added += 1
        state.iteration = it + 1
        entry = {"iter": it, "lb": lp.value, "pool_size": sum(len(r) for r in state.pool.values()),
                 "eta": lp.eta, "improving": added}
        state.history.append(entry)
        if log is not None:
            log.append(entry)
        if added == 0:
            converged = True
            break
    if not converged:
        solve_rmp_lp(state)
    return CGResult(state, solve_integer(state, polish=polish), converged)


def lagrangian_bound(state):
    """Lower bound from the current duals priced over every table row."""
    lp = state.lp
    total = lp.eta * state.e_max
    for pid in state.product_ids:
        t = state.tables[pid]
        total += float(np.min(t.cost - lp.eta * t.emission))
    return total


def write_iteration_log(fh, history):
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["iter", "lb", "pool_size", "eta", "improving"])
    for e in history:
        writer.writerow([e["iter"], repr(float(e["lb"])), e["pool_size"], repr(float(e["eta"])), e["improving"]])


def build_tables(instance, config=None, search=None, n_jobs=None):
    return ColumnTables(instance, config, search or SearchConfig(), n_jobs)
