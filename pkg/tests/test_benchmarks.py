import itertools

import numpy as np
import pytest
from scipy import stats

from carbon_dms.benchmarks import exact_single_mode, lead_time_demand, product_caps, solve_bms, solve_sms
from carbon_dms.exceptions import InfeasibleTargetError
from carbon_dms.newsvendor import newsvendor_from_pmf, single_mode_cost
from carbon_dms.policy_sim import FastOnly, SimConfig, SlowOnly, evaluate
from carbon_dms.rand_dist import DistSpec, quantile
from carbon_dms.subproblem import ColumnTables, PolicyTable
from carbon_dms.testbed import Instance, ProductParams


def product(mean=100.0, cv=0.9, l_s=3, l_f=0, h=1.0, p=9.0, c_s=0.0, c_f=2.0, e_s=1.0, e_f=2.0, pid=0):
    return ProductParams(pid, DistSpec.negbinomial(mean, cv), h, p, c_s, c_f, l_s, l_f, e_s, e_f)


def test_zero_lead_level_is_demand_fractile():
    prod = product(c_f=0.0)
    ev = exact_single_mode(prod, "fast")
    assert ev.level == quantile(prod.demand, 0.9)
    assert ev.emission_rate == pytest.approx(2.0 * 100.0)


def test_lead_time_demand_is_convolution():
    prod = product(mean=8.0, cv=1.2)
    r, p = prod.demand.nb_size_prob()
    one = stats.nbinom.pmf(np.arange(400), r, p)
    conv = one
    for _ in range(3):
        conv = np.convolve(conv, one)[:400]
    law = lead_time_demand(prod, "slow")
    r4, p4 = law.nb_size_prob()
    assert p4 == pytest.approx(p)
    assert r4 == pytest.approx(4 * r)
    assert np.allclose(stats.nbinom.pmf(np.arange(400), r4, p4), conv, atol=1e-12)


def test_cost_is_convex_around_level():
    prod = product()
    ev = exact_single_mode(prod, "slow")
    c = [single_mode_cost(prod, "slow", ev.level + k) for k in (-1, 0, 1)]
    assert c[0] >= c[1] <= c[2]
    assert ev.cost_rate == pytest.approx(c[1])


def test_deterministic_demand():
    d, lead = 7, 2
    pmf = np.zeros(3 * d + 1)
    pmf[(lead + 1) * d] = 1.0
    level, cost = newsvendor_from_pmf(pmf, h=1.0, p=9.0)
    assert level == (lead + 1) * d
    assert cost == 0.0


@pytest.mark.slow
def test_exact_cost_matches_long_simulation():
    prod = product(mean=100.0, cv=0.9, l_s=3, h=1.0, p=9.0, c_s=0.0)
    ev = exact_single_mode(prod, "slow")
    sim = evaluate(SlowOnly(ev.level), prod, SimConfig(reps=10, horizon=1_000_000, warmup=1000, seed=5))
    assert abs(sim.cost_rate - ev.cost_rate) / ev.cost_rate < 0.002


def _toy_tables(n, rng, extra_rows=0):
    products, tables = [], []
    for j in range(n):
        prod = product(mean=float(rng.uniform(5, 50)), cv=1.0, e_s=float(rng.uniform(0.1, 2)),
                       e_f=float(rng.uniform(0.1, 2)), pid=j)
        mean = prod.mean_demand
        fast_c, slow_c = rng.uniform(10, 60), rng.uniform(5, 50)
        mid = [(rng.uniform(5, 60), rng.uniform(min(prod.e_s, prod.e_f), max(prod.e_s, prod.e_f)) * mean)
               for _ in range(extra_rows)]
        policies = [FastOnly(1)] + [FastOnly(1)] * extra_rows + [SlowOnly(1)]
        cost = [fast_c] + [c for c, _ in mid] + [slow_c]
        emis = [prod.e_f * mean] + [e for _, e in mid] + [prod.e_s * mean]
        products.append(prod)
        tables.append(PolicyTable.from_arrays(prod, policies, cost, emis))
    inst = Instance(tuple(products), 3, 0)
    return inst, ColumnTables.from_tables(inst, tables)


def test_sms_matches_enumeration():
    rng = np.random.default_rng(0)
    inst, tables = _toy_tables(12, rng)
    ts = list(tables)
    lo = sum(min(t.emission[0], t.emission[-1]) for t in ts)
    hi = sum(max(t.emission[0], t.emission[-1]) for t in ts)
    for e_max in np.linspace(lo, hi, 7):
        best = np.inf
        for pick in itertools.product((0, -1), repeat=len(ts)):
            e = sum(t.emission[k] for t, k in zip(ts, pick))
            if e <= e_max + 1e-9:
                best = min(best, sum(t.cost[k] for t, k in zip(ts, pick)))
        res = solve_sms(tables, e_max)
        assert res.cost == pytest.approx(best, abs=1e-9)
        assert res.emission <= e_max + 1e-6
        assert res.slack_pct >= -1e-9


def test_sms_extremes():
    rng = np.random.default_rng(1)
    inst, tables = _toy_tables(6, rng)
    ts = list(tables)
    free = solve_sms(tables, 1e12)
    assert free.cost == pytest.approx(sum(min(t.cost[0], t.cost[-1]) for t in ts))
    tight = solve_sms(tables, sum(min(t.emission[0], t.emission[-1]) for t in ts))
    assert tight.emission == pytest.approx(sum(min(t.emission[0], t.emission[-1]) for t in ts))
    with pytest.raises(InfeasibleTargetError):
        solve_sms(tables, 0.5 * tight.emission)


def test_bms_matches_per_product_enumeration():
    rng = np.random.default_rng(2)
    inst, tables = _toy_tables(5, rng, extra_rows=6)
    caps = product_caps(tables, 0.5)
    res = solve_bms(tables, 0.5)
    for t, col in zip(tables, res.columns):
        ok = [k for k in range(len(t)) if t.emission[k] <= caps[t.product.id] + 1e-9]
        assert col.cost == pytest.approx(min(t.cost[k] for k in ok))


def test_bms_extremes(small_tables):
    free = solve_bms(small_tables, 0.0)
    assert [c.row for c in free.columns] == [t.unconstrained_row for t in small_tables]
    full = solve_bms(small_tables, 1.0)
    assert [c.row for c in full.columns] == [t.least_polluting_row for t in small_tables]
