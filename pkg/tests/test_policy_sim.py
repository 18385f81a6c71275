import io

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from carbon_dms import _kernels
from carbon_dms.exceptions import ParameterError
from carbon_dms.newsvendor import exact_single_mode
from carbon_dms.policy_sim import (
    DualIndex,
    FastOnly,
    SimConfig,
    SlowOnly,
    demand_matrix,
    evaluate,
    initial_state,
    overshoot_recursion_step,
    parse_policy,
    policy_from_dict,
    policy_to_dict,
    replication_means,
    simulate_path,
    step,
    write_trace,
)
from carbon_dms.rand_dist import DistSpec, RngStream, sample
from carbon_dms.testbed import ProductParams


def make_product(l_s=3, l_f=0, mean=20.0, cv=0.8, h=1.0, p=9.0, c_s=0.0, c_f=1.0, e_s=1.0, e_f=3.0, pid=0):
    return ProductParams(pid, DistSpec.negbinomial(mean, cv), h, p, c_s, c_f, l_s, l_f, e_s, e_f)


def run_steps(policy, product, demand):
    state = initial_state(policy, product)
    out = []
    for d in demand:
        state = step(state, policy, int(d), product)
        out.append(state)
    return out


def test_golden_trace():
    # D = (2, 0, 5), S_f = 3, delta = 2, l_f = 0, l_s = 1, worked by hand:
    # t0: I=3, IP_f=3 -> Q_f=0, O=0; IP_s=3 -> Q_s=2; end 1
    # t1: slow 2 arrives I=3, IP_f=3 -> Q_f=0; IP_s=3 -> Q_s=2; end 3
    # t2: slow 2 arrives I=5, IP_f=5 -> Q_f=0, O=2; IP_s=5 -> Q_s=0; end 0
    prod = make_product(l_s=1, l_f=0)
    states = run_steps(DualIndex(3, 2), prod, [2, 0, 5])
    assert [(s.q_f, s.q_s, s.inv_avail) for s in states] == [(0, 2, 3), (0, 2, 3), (0, 0, 5)]
    assert [s.overshoot for s in states] == [0, 0, 2]
    assert [s.inv for s in states] == [1, 3, 0]
    q_f, q_s, over, avail = simulate_path(DualIndex(3, 2), prod, np.array([2, 0, 5]))
    assert q_f.tolist() == [0, 0, 0] and q_s.tolist() == [2, 2, 0]
    assert over.tolist() == [0, 0, 2] and avail.tolist() == [3, 3, 5]


def test_golden_trace_csv():
    prod = make_product(l_s=1, l_f=0)
    demand = np.array([2, 0, 5])
    buf = io.StringIO()
    write_trace(buf, demand, *simulate_path(DualIndex(3, 2), prod, demand))
    assert buf.getvalue() == "t,D,Q_f,Q_s,O,I\n0,2,0,2,0,3\n1,0,0,2,0,3\n2,5,0,0,2,5\n"


@pytest.mark.parametrize("l_f, l_s", [(0, 1), (0, 3), (1, 2), (1, 4), (2, 2), (0, 0)])
@pytest.mark.parametrize("policy", [DualIndex(40, 7), DualIndex(-5, 30), FastOnly(25), SlowOnly(60)])
def test_kernel_matches_step(l_f, l_s, policy):
    prod = make_product(l_s=l_s, l_f=l_f)
    demand = sample(prod.demand, RngStream(1, l_f * 10 + l_s), size=60)
    states = run_steps(policy, prod, demand)
    q_f, q_s, over, avail = simulate_path(policy, prod, demand)
    assert q_f.tolist() == [s.q_f for s in states]
    assert q_s.tolist() == [s.q_s for s in states]
    assert avail.tolist() == [s.inv_avail for s in states]
    if not isinstance(policy, SlowOnly):
        assert over.tolist() == [s.overshoot for s in states]


def test_fast_only_zero_lead_replaces_demand():
    prod = make_product(l_s=3, l_f=0)
    demand = sample(prod.demand, RngStream(2), size=50)
    states = run_steps(FastOnly(30), prod, demand)
    assert [s.q_f for s in states[1:]] == [int(d) for d in demand[:-1]]
    assert [s.inv for s in states] == [30 - int(d) for d in demand]


def test_zero_delta_is_fast_only():
    prod = make_product()
    demand = sample(prod.demand, RngStream(3), size=200)
    a = simulate_path(DualIndex(30, 0), prod, demand)
    b = simulate_path(FastOnly(30), prod, demand)
    assert np.all(a[1] == 0) and np.all(a[2] == 0)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@pytest.mark.parametrize("lag", [1, 2, 3])
def test_recursion_matches_full_simulation(lag):
    prod = make_product(l_s=lag, l_f=0)
    demand = sample(prod.demand, RngStream(4, lag), size=300)
    delta = 15
    over_r, qf_r, qs_r = [], [], []
    o, pipe = 0, (0,) * (lag - 1) + (delta,)
    over_r.append(0), qf_r.append(0), qs_r.append(delta)
    for t in range(1, len(demand)):
        o, qf, qs, pipe = overshoot_recursion_step(o, pipe, int(demand[t - 1]))
        over_r.append(o), qf_r.append(qf), qs_r.append(qs)
    for s_f in (-5, 0, 7):
        q_f, q_s, over, _ = simulate_path(DualIndex(s_f, delta), prod, demand)
        assert over.tolist() == over_r
        assert q_f[1:].tolist() == qf_r[1:]
        assert q_s.tolist() == qs_r


def test_recursion_edge_cases():
    # delta = 0 never builds overshoot
    assert overshoot_recursion_step(0, (0, 0), 5)[0] == 0
    # no demand: overshoot grows by the entering slow order and no fast order is placed
    o, qf, qs, pipe = overshoot_recursion_step(2, (4, 1), 0)
    assert (o, qf, qs, pipe) == (6, 0, 0, (1, 0))
    with pytest.raises(ParameterError):
        overshoot_recursion_step(0, (), 3)


@settings(max_examples=40, deadline=None)
@given(seed=st.integers(0, 10_000), delta=st.integers(0, 80), l_s=st.integers(1, 5), l_f=st.integers(0, 2))
def test_separability_in_fast_target(seed, delta, l_s, l_f):
    prod = make_product(l_s=l_s + l_f, l_f=l_f)
    demand = sample(prod.demand, RngStream(seed), size=200)
    ref = simulate_path(DualIndex(-10, delta), prod, demand)
    for s_f in (0, 10):
        got = simulate_path(DualIndex(s_f, delta), prod, demand)
        for a, b in zip(ref[:3], got[:3]):
            assert np.array_equal(a, b)


@pytest.mark.parametrize("l_f, l_s", [(0, 3), (1, 3), (2, 5)])
def test_inventory_and_position_identities(l_f, l_s):
    prod = make_product(l_s=l_s, l_f=l_f)
    s_f, delta = 45, 25
    demand = sample(prod.demand, RngStream(5), size=400)
    q_f, q_s, over, avail = simulate_path(DualIndex(s_f, delta), prod, demand)
    lag = l_s - l_f
    for t in range(50, len(demand)):
        # net inventory after arrivals, expressed through the overshoot
        assert avail[t] == s_f + over[t - l_f] - demand[t - l_f:t].sum()
        # slow position = fast target + overshoot + slow orders still beyond the fast horizon
        assert s_f + delta == s_f + over[t] + q_s[t - lag + 1:t + 1].sum()


def test_conservation_of_units():
    prod = make_product(l_s=3, l_f=1)
    policy = DualIndex(40, 20)
    demand = sample(prod.demand, RngStream(6), size=150)
    states = run_steps(policy, prod, demand)
    last = states[-1]
    placed = sum(s.q_f + s.q_s for s in states)
    in_transit = sum(last.fast_pipe) + sum(last.slow_pipe)
    assert last.inv == 40 + placed - in_transit - int(demand.sum())


def test_backlog_rate_nonincreasing_in_fast_target():
    prod = make_product()
    demand = sample(prod.demand, RngStream(7), size=5000)
    rates = []
    for s_f in range(20, 45, 3):
        _, _, _, avail = simulate_path(DualIndex(s_f, 20), prod, demand)
        rates.append(np.maximum(demand - avail, 0).mean())
    assert all(b <= a for a, b in zip(rates, rates[1:]))


def test_demand_matrix_common_streams():
    prod = make_product(pid=3)
    cfg = SimConfig(reps=3, horizon=100, warmup=50, seed=2)
    a = demand_matrix(prod, cfg)
    assert a.shape == (3, 150)
    assert np.array_equal(a, demand_matrix(prod, cfg))
    other = make_product(pid=4)
    assert not np.array_equal(a, demand_matrix(other, cfg))


@pytest.mark.slow
@pytest.mark.parametrize("policy_kind", ["fast", "slow"])
def test_single_mode_simulation_matches_exact(policy_kind):
    prod = make_product(mean=30.0, cv=1.1, c_f=2.0)
    exact = exact_single_mode(prod, policy_kind)
    policy = FastOnly(exact.level) if policy_kind == "fast" else SlowOnly(exact.level)
    stats = evaluate(policy, prod, SimConfig(reps=10, horizon=100_000, warmup=1000, seed=1))
    assert abs(stats.cost_rate - exact.cost_rate) <= stats.cost_halfwidth
    assert stats.ci_halfwidth_rel <= 0.01


def test_exact_single_mode_path():
    prod = make_product()
    exact = exact_single_mode(prod, "slow")
    stats = evaluate(SlowOnly(exact.level), prod, exact_single_mode=True)
    assert stats.cost_rate == pytest.approx(exact.cost_rate)
    assert stats.ci_halfwidth_rel == 0.0 and not stats.flagged


def test_flow_identities_within_ci():
    prod = make_product(l_s=3)
    cfg = SimConfig(reps=10, horizon=20_000, warmup=1000, seed=3)
    delta = 30
    m = replication_means(DualIndex(35, delta), prod, cfg)
    total = m["eq_f"] + m["eq_s"]
    se = total.std(ddof=1) / np.sqrt(cfg.reps)
    assert abs(total.mean() - prod.mean_demand) <= 3 * max(se, 0.5)
    gap = m["eq_s"] - (delta - m["eo"]) / prod.lead_diff
    assert abs(gap.mean()) <= 3 * max(gap.std(ddof=1) / np.sqrt(cfg.reps), 1e-3)


def test_flag_on_wide_interval():
    prod = make_product(mean=5.0, cv=2.0)
    stats = evaluate(DualIndex(10, 5), prod, SimConfig(reps=2, horizon=5, warmup=0, seed=0))
    assert stats.flagged


def test_single_replication_has_infinite_halfwidth():
    stats = evaluate(DualIndex(10, 5), make_product(), SimConfig(reps=1, horizon=50, warmup=0))
    assert stats.ci_halfwidth_rel == np.inf


@pytest.mark.parametrize("text, policy", [
    ("dual:3,2", DualIndex(3, 2)),
    ("fast:-4", FastOnly(-4)),
    ("slow:12", SlowOnly(12)),
])
def test_parse_policy(text, policy):
    assert parse_policy(text) == policy
    assert policy_from_dict(policy_to_dict(policy)) == policy


@pytest.mark.parametrize("text", ["dual:3", "fast:x", "bogus:1", "dual:3,-1"])
def test_parse_policy_rejects(text):
    with pytest.raises(ParameterError):
        parse_policy(text)


@pytest.mark.parametrize("bad", [dict(reps=0), dict(horizon=0), dict(warmup=-1), dict(reps=1.5)])
def test_sim_config_validation(bad):
    with pytest.raises(ParameterError):
        SimConfig(**bad)


def test_overshoot_kernel_zero_delta():
    d = np.array([3, 1, 4, 1, 5], dtype=np.int64)
    over, q_f, q_s = _kernels.overshoot_path(d, 2, 0)
    assert not over.any() and not q_s.any()
    assert q_f[1:].tolist() == d[:-1].tolist()
