import time

import numpy as np
import pytest

from carbon_dms.emissions import (
    DISTANCES,
    TripSpec,
    check_assortment_type,
    emission_coefficients,
    sample_emission_pair,
    unit_emission,
)
from carbon_dms.exceptions import ParameterError
from carbon_dms.rand_dist import RngStream


def sig4(x):
    return float(f"{x:.4g}")


@pytest.mark.parametrize("mode, route, published", [
    ("sea", "haiphong_rotterdam_sea", 0.3552),
    ("air", "tan_son_nhat_rotterdam_air", 5.127),
    ("road", "stuttgart_rotterdam_road", 3.093e-2),
    ("sea", "shanghai_rotterdam_sea", 0.3891),
])
def test_published_coefficients(mode, route, published):
    assert sig4(unit_emission(TripSpec(mode, DISTANCES[route]))) == published


def test_coefficient_table_is_fast():
    t = time.perf_counter()
    table = emission_coefficients()
    assert time.perf_counter() - t < 1.0
    assert sig4(table[("apparel", "fast")]) == 5.127


def test_linear_in_unit_weight():
    one = unit_emission(TripSpec("air", 1000.0, 1.0))
    two = unit_emission(TripSpec("air", 1000.0, 2.0))
    assert two == pytest.approx(2 * one)


@pytest.mark.parametrize("kwargs", [
    {"mode": "rail", "distance_km": 10.0},
    {"mode": "sea", "distance_km": 0.0},
    {"mode": "sea", "distance_km": 10.0, "unit_weight_kg": -1.0},
])
def test_trip_validation(kwargs):
    with pytest.raises(ParameterError):
        TripSpec(**kwargs)


def test_type1_fast_always_dirtier():
    e_s, e_f = sample_emission_pair(1, RngStream(1), size=100_000)
    assert np.all(e_f > e_s)


def test_type2_slow_always_dirtier():
    e_s, e_f = sample_emission_pair(2, RngStream(2), size=100_000)
    assert np.all(e_s > e_f)


def test_type3_slow_mean():
    e_s, e_f = sample_emission_pair(3, RngStream(3), size=1_000_000)
    assert abs(e_s.mean() - 3.31) < 0.02
    # independent draws: either mode can be the dirtier one
    assert np.any(e_s > e_f) and np.any(e_f > e_s)


def test_pair_is_reproducible():
    a = sample_emission_pair(3, RngStream(8), size=50)
    b = sample_emission_pair(3, RngStream(8), size=50)
    assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


@pytest.mark.parametrize("bad", [0, 4, "1", 1.5])
def test_unknown_assortment_type(bad):
    with pytest.raises(ParameterError):
        check_assortment_type(bad)
