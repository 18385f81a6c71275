import io
import math

import numpy as np
import pytest

from carbon_dms.exceptions import ParameterError
from carbon_dms.harness import (
    SWEEP_HEADER,
    carbon_price,
    cleanest_cost,
    fmt,
    lorenz,
    parse_targets,
    reduction_shares,
    solution_dict,
    solve_dms,
    sweep,
    write_sweep,
)
from carbon_dms.rand_dist import DistSpec
from carbon_dms.testbed import ProductParams


def _prod(pid, c_f, c_s, e_f, e_s):
    return ProductParams(pid, DistSpec.negbinomial(10.0, 1.0), h=1.0, p=9.0, c_s=c_s, c_f=c_f,
                         l_s=3, l_f=0, e_s=e_s, e_f=e_f)


def test_parse_targets():
    assert parse_targets("0.5, 0,1,0.5") == (0.0, 0.5, 1.0)
    for bad in ("", "a,b", "1.5", "-0.1"):
        with pytest.raises(ParameterError):
            parse_targets(bad)


def test_fmt_round_trips():
    assert fmt(0.1) == "0.1"
    assert fmt(True) == "1"
    assert fmt(np.int64(3)) == "3"
    assert fmt(math.nan) == "nan"
    x = 1 / 3
    assert float(fmt(x)) == x


def test_identical_products_give_diagonal():
    prods = [_prod(j, 2.0, 1.0, 3.0, 1.0) for j in range(10)]
    curve = reduction_shares(prods, [5.0] * 10)
    assert np.allclose(curve.realized_share, np.arange(1, 11) / 10)
    assert np.allclose(curve.ratio_share, curve.realized_share)
    assert curve.top_realized == pytest.approx(0.2)
    assert not curve.zero_total


def test_realized_order_dominates_ratio_order():
    rng = np.random.default_rng(0)
    prods = [_prod(j, rng.uniform(1, 2), rng.uniform(0, 1), rng.uniform(1, 5), rng.uniform(0, 1)) for j in range(30)]
    red = rng.uniform(0, 10, size=30)
    curve = reduction_shares(prods, red)
    assert np.all(curve.ratio_share <= curve.realized_share + 1e-12)
    assert curve.realized_share[-1] == pytest.approx(1.0)


def test_zero_total_is_flagged():
    prods = [_prod(j, 2.0, 1.0, 3.0, 1.0) for j in range(4)]
    curve = reduction_shares(prods, [0.0] * 4)
    assert curve.zero_total
    assert np.all(curve.realized_share == 0.0)


def test_free_premium_ranks_first():
    prods = [_prod(0, 2.0, 1.0, 3.0, 1.0), _prod(1, 1.0, 1.0, 3.0, 1.0)]
    curve = reduction_shares(prods, [1.0, 1.0])
    assert curve.ratio_order == [1, 0]


def test_shares_need_one_value_per_product():
    with pytest.raises(ParameterError):
        reduction_shares([_prod(0, 2.0, 1.0, 3.0, 1.0)], [1.0, 2.0])


def test_zero_price_matches_unconstrained(small_instance, small_tables):
    rep = carbon_price(small_tables, 0.0)
    _, cg = solve_dms(small_tables, small_instance, 0.0)
    assert rep.cost == pytest.approx(cg.solution.cost)
    assert rep.carbon_cost == 0.0


def test_emission_falls_with_price(small_tables):
    prices = [0.0, 0.01, 0.1, 1.0, 10.0, 1e4]
    reps = [carbon_price(small_tables, c) for c in prices]
    em = [r.emission for r in reps]
    cost = [r.cost for r in reps]
    assert all(b <= a + 1e-9 for a, b in zip(em, em[1:]))
    assert all(b >= a - 1e-9 for a, b in zip(cost, cost[1:]))
    assert em[-1] == pytest.approx(sum(t.emission[t.least_polluting_row] for t in small_tables))


def test_sweep_rows_and_determinism(small_instance, small_tables):
    rows = sweep(small_instance, (0.0, 0.5, 1.0), tables=small_tables)
    assert [(r.r, r.approach) for r in rows][:3] == [(0.0, "DMS"), (0.0, "SMS"), (0.0, "BMS")]
    for row in rows:
        assert row.emission <= row.e_max * (1 + 1e-9) + 1e-9
    dms = {r.r: r for r in rows if r.approach == "DMS"}
    assert dms[1.0].cost == pytest.approx(cleanest_cost(small_tables))
    assert dms[1.0].cost_norm_r1 == pytest.approx(1.0)
    for r in (0.0, 0.5, 1.0):
        assert dms[r].pct_sms >= -1e-9 or dms[r].gap_pct > 0
    out = []
    for _ in range(2):
        buf = io.StringIO()
        write_sweep(buf, sweep(small_instance, (0.0, 0.5, 1.0), tables=small_tables))
        out.append(buf.getvalue())
    assert out[0] == out[1]
    assert out[0].splitlines()[0] == ",".join(SWEEP_HEADER)


def test_sweep_rejects_unknown_approach(small_instance, small_tables):
    with pytest.raises(ParameterError):
        sweep(small_instance, (0.5,), approaches=("XYZ",), tables=small_tables)


def test_lorenz_on_solution(small_instance, small_tables):
    _, cg = solve_dms(small_tables, small_instance, 0.5)
    curve = lorenz(small_tables, cg.solution)
    assert len(curve.rows()) == len(small_tables)
    assert curve.realized_share[-1] == pytest.approx(1.0)


def test_solution_dict_is_json_safe(small_instance, small_tables):
    import json
    target, cg = solve_dms(small_tables, small_instance, 0.5)
    doc = solution_dict(cg.solution, target)
    text = json.dumps(doc, allow_nan=False)
    assert json.loads(text)["reduction"] == 0.5
    assert len(doc["products"]) == len(small_tables)
