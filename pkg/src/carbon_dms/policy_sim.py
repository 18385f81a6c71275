"""Single-product simulation of dual-index and single-mode shipping policies.

Order of events in period t:

1. fast and slow orders due this period arrive;
2. a fast order raises the fast inventory position (on hand plus everything
   arriving within the fast lead time) to ``S_f``;
3. a slow order raises the slow inventory position (all outstanding orders,
   the fresh fast order included) to ``S_s = S_f + delta``;
4. demand is served or backlogged;
5. holding / backlog cost is charged on the end-of-period net inventory,
   shipping cost on the two orders.

Orders with a zero lead time arrive in time for the same period's demand.
The run starts with empty pipelines and net inventory at the (fast) target.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .exceptions import ParameterError
from .rand_dist import RngStream, sample

Z95 = 1.959963984540054
CI_FLAG_LEVEL = 0.03


# -- policies -------------------------------------------------------------------


@dataclass(frozen=True)
class DualIndex:
    s_f: int
    delta: int

    def __post_init__(self):
        _check_int(self.s_f, "s_f")
        _check_int(self.delta, "delta")
        if self.delta < 0:
            raise ParameterError("delta must be nonnegative", "delta")

    @property
    def s_s(self):
        return self.s_f + self.delta


@dataclass(frozen=True)
class FastOnly:
    s_f: int

    def __post_init__(self):
        _check_int(self.s_f, "s_f")


@dataclass(frozen=True)
class SlowOnly:
    """Slow-mode base-stock policy, the S_f -> -infinity limit of dual-index."""

    s_s: int

    def __post_init__(self):
        _check_int(self.s_s, "s_s")


def _check_int(value, name):
    if isinstance(value, bool) or int(value) != value:
        raise ParameterError(f"{name} must be an integer", name)


def policy_targets(policy):
    """``(use_fast, s_f, s_s)`` for the simulation kernel."""
    if isinstance(policy, DualIndex):
        return True, int(policy.s_f), int(policy.s_s)
    if isinstance(policy, FastOnly):
        return True, int(policy.s_f), int(policy.s_f)
    if isinstance(policy, SlowOnly):
        return False, 0, int(policy.s_s)
    raise TypeError(f"not a policy: {policy!r}")


def policy_to_dict(policy):
    if isinstance(policy, DualIndex):
        return {"kind": "dual_index", "s_f": int(policy.s_f), "delta": int(policy.delta)}
    if isinstance(policy, FastOnly):
        return {"kind": "fast_only", "s_f": int(policy.s_f)}
    return {"kind": "slow_only", "s_s": int(policy.s_s)}


def policy_from_dict(d):
    kind = d.get("kind")
    if kind == "dual_index":
        return DualIndex(d["s_f"], d["delta"])
    if kind == "fast_only":
        return FastOnly(d["s_f"])
    if kind == "slow_only":
        return SlowOnly(d["s_s"])
    raise ParameterError(f"unknown policy kind {kind!r}", "kind")


def parse_policy(text):
    """``dual:S_f,delta``, ``fast:S_f`` or ``slow:S_s``."""
    kind, _, args = text.partition(":")
    try:
        nums = [int(v) for v in args.split(",")] if args else []
        if kind == "dual" and len(nums) == 2:
            return DualIndex(*nums)
        if kind == "fast" and len(nums) == 1:
            return FastOnly(nums[0])
        if kind == "slow" and len(nums) == 1:
            return SlowOnly(nums[0])
    except ValueError:
        pass
    raise ParameterError(f"cannot parse policy {text!r}; use dual:S_f,delta | fast:S_f | slow:S_s", "policy")


# -- single steps ---------------------------------------------------------------


@dataclass(frozen=True)
class SimState:
    """State at the start of period ``t``, before arrivals.

    ``fast_pipe[i]`` and ``slow_pipe[i]`` arrive at the start of period
    ``t + i``; their lengths equal the lead times.  ``q_f``, ``q_s``,
    ``inv_avail`` and ``cost`` describe the period just simulated.
    """

    inv: int
    fast_pipe: tuple
    slow_pipe: tuple
    overshoot: int = 0
    t: int = 0
    q_f: int = 0
    q_s: int = 0
    inv_avail: int = 0
    cost: float = 0.0


def initial_state(policy, product):
    use_fast, s_f, s_s = policy_targets(policy)
    return SimState(s_f if use_fast else s_s, (0,) * product.l_f, (0,) * product.l_s)


def step(state, policy, demand, product):
    """Advance one period; returns the next state."""
    use_fast, s_f, s_s = policy_targets(policy)
    l_f = product.l_f
    inv = state.inv
    fp, sp = state.fast_pipe, state.slow_pipe
    if fp:
        inv += fp[0]
        fp = fp[1:]
    if sp:
        inv += sp[0]
        sp = sp[1:]

    ip_f = inv + sum(fp) + sum(sp[:l_f])
    if use_fast:
        q_f = max(s_f - ip_f, 0)
        overshoot = ip_f + q_f - s_f
    else:
        q_f, overshoot = 0, 0
    if product.l_f == 0:
        inv += q_f
    else:
        fp = fp + (q_f,)

    q_s = s_s - (inv + sum(fp) + sum(sp))
    if product.l_s == 0:
        inv += q_s
    else:
        sp = sp + (q_s,)

    avail = inv
    inv -= demand
    cost = (product.h * max(inv, 0) + product.p * max(-inv, 0)
            + product.c_f * q_f + product.c_s * q_s)
    return SimState(inv, fp, sp, overshoot, state.t + 1, q_f, q_s, avail, cost)


def overshoot_recursion_step(overshoot, slow_pipeline, demand_prev):
    """One step of the S_f-free overshoot recursion.

    ``slow_pipeline`` holds the last ``l`` slow orders, oldest first; the
    oldest is the one entering the fast horizon this period and
    ``demand_prev`` is last period's demand.  Returns
    ``(overshoot', q_f', q_s', slow_pipeline')``.
    """
    if len(slow_pipeline) < 1:
        raise ParameterError("the recursion needs a lead-time difference of at least 1", "l")
    x = overshoot - demand_prev + slow_pipeline[0]
    new_o, q_f = (x, 0) if x >= 0 else (0, -x)
    q_s = demand_prev - q_f
    return new_o, q_f, q_s, tuple(slow_pipeline[1:]) + (q_s,)


# -- replicated evaluation ------------------------------------------------------


@dataclass(frozen=True)
class SimConfig:
    reps: int = 10
    horizon: int = 9500
    warmup: int = 5000
    seed: int = 0

    def __post_init__(self):
        for name, low in (("reps", 1), ("horizon", 1), ("warmup", 0), ("seed", 0)):
            value = getattr(self, name)
            if isinstance(value, bool) or int(value) != value or value < low:
                raise ParameterError(f"{name} must be an integer >= {low}", name)
            object.__setattr__(self, name, int(value))


def demand_matrix(product, config, periods=None):
    """(reps, periods) int64 demand; row r is the product's r-th stream.

    Rows depend only on ``(config.seed, product.id, r)`` and the length, so
    every policy of a product sees the same demands.  The default length,
    ``warmup + horizon + l_f``, is shared by all evaluation paths.
    """
    periods = config.warmup + config.horizon + product.l_f if periods is None else periods
    stream = RngStream(config.seed, product.id)
    out = np.empty((config.reps, periods), np.int64)
    for r in range(config.reps):
        out[r] = sample(product.demand, stream.generator(r), size=periods)
    return out


@dataclass(frozen=True)
class ColumnStats:
    """Long-run rates of one policy for one product.

    ``ci_halfwidth_rel`` is the 95% half-width of the cost rate relative to
    the cost rate (0 for exact evaluations).
    """

    cost_rate: float
    emission_rate: float
    eq_f: float
    eq_s: float
    eo: float
    ci_halfwidth_rel: float
    replications: int

    @property
    def flagged(self):
        return self.ci_halfwidth_rel > CI_FLAG_LEVEL

    @property
    def cost_halfwidth(self):
        return self.ci_halfwidth_rel * abs(self.cost_rate)

    def to_dict(self):
        return {
            "cost_rate": self.cost_rate,
            "emission_rate": self.emission_rate,
            "eq_f": self.eq_f,
            "eq_s": self.eq_s,
            "eo": self.eo,
            "ci_halfwidth_rel": self.ci_halfwidth_rel,
            "replications": self.replications,
        }


def halfwidth(rep_values):
    rep_values = np.asarray(rep_values, dtype=float)
    if rep_values.size < 2:
        return math.inf
    return Z95 * rep_values.std(ddof=1) / math.sqrt(rep_values.size)


def simulate_path(policy, product, demand):
    """Full simulation on one demand row: ``(q_f, q_s, overshoot, inv_avail)``."""
    use_fast, s_f, s_s = policy_targets(policy)
    demand = np.ascontiguousarray(demand, dtype=np.int64)
    return _kernels.simulate_full(demand, product.l_f, product.l_s, use_fast, s_f, s_s,
                                  s_f if use_fast else s_s)


def replication_means(policy, product, config):
    """Per-replication window averages of cost, emission, Q_f, Q_s and O."""
    demand = demand_matrix(product, config)[:, : config.warmup + config.horizon]
    w = config.warmup
    keys = ("cost", "emission", "eq_f", "eq_s", "eo")
    out = {k: np.empty(config.reps) for k in keys}
    for r in range(config.reps):
        q_f, q_s, over, avail = simulate_path(policy, product, demand[r])
        end = avail[w:] - demand[r, w:]
        qf, qs = q_f[w:], q_s[w:]
        cost = (product.h * np.maximum(end, 0) + product.p * np.maximum(-end, 0)
                + product.c_f * qf + product.c_s * qs)
        out["cost"][r] = cost.mean()
        out["emission"][r] = (product.e_f * qf + product.e_s * qs).mean()
        out["eq_f"][r] = qf.mean()
        out["eq_s"][r] = qs.mean()
        out["eo"][r] = over[w:].mean()
    return out


def evaluate(policy, product, config=None, exact_single_mode=False):
    """Simulated :class:`ColumnStats` of ``policy`` for ``product``.

    With ``exact_single_mode`` a single-mode policy is evaluated by exact
    summation over the lead-time demand law instead (zero-width CI).
    """
    config = config or SimConfig()
    if exact_single_mode and isinstance(policy, (FastOnly, SlowOnly)):
        from .benchmarks import single_mode_cost

        mode = "fast" if isinstance(policy, FastOnly) else "slow"
        level = policy.s_f if mode == "fast" else policy.s_s
        cost = single_mode_cost(product, mode, level)
        mean_d = product.mean_demand
        e = product.e_f if mode == "fast" else product.e_s
        eo = 0.0 if mode == "fast" else float("nan")
        return ColumnStats(cost, e * mean_d, mean_d if mode == "fast" else 0.0,
                           mean_d if mode == "slow" else 0.0, eo, 0.0, 0)
    m = replication_means(policy, product, config)
    cost = float(m["cost"].mean())
    rel = float(halfwidth(m["cost"]) / abs(cost)) if cost else math.inf
    eo = float(m["eo"].mean()) if not isinstance(policy, SlowOnly) else float("nan")
    return ColumnStats(cost, float(m["emission"].mean()), float(m["eq_f"].mean()),
                       float(m["eq_s"].mean()), eo, rel, config.reps)


def write_trace(fh, demand, q_f, q_s, overshoot, inv_avail):
    """CSV trace with columns t, D, Q_f, Q_s, O, I (I = net inventory after arrivals)."""
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["t", "D", "Q_f", "Q_s", "O", "I"])
    for t in range(len(demand)):
        writer.writerow([t, int(demand[t]), int(q_f[t]), int(q_s[t]), int(overshoot[t]), int(inv_avail[t])])
