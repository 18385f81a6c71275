import functools
import sys
import time

import pytest

from carbon_dms.master import build_tables
from carbon_dms.policy_sim import SimConfig
from carbon_dms.testbed import generate_instance

DESK_SIM = SimConfig(reps=5, horizon=2000, warmup=1000, seed=0)
DESK_SEED = 1
DESK_PRODUCTS = 20
DESK_BUILD_SECONDS = {}


@functools.lru_cache(maxsize=None)
def desk(assortment_type):
    """(instance, tables) of the 20-product desk instance of one type."""
    start = time.perf_counter()
    inst = generate_instance(assortment_type, DESK_SEED, {"n_products": DESK_PRODUCTS})
    tables = build_tables(inst, DESK_SIM)
    DESK_BUILD_SECONDS[assortment_type] = time.perf_counter() - start
    return inst, tables


@pytest.fixture(scope="session")
def desk_case():
    return desk


@pytest.fixture(scope="session")
def small_instance():
    return generate_instance(2, 7, {"n_products": 4})


@pytest.fixture(scope="session")
def small_tables(small_instance):
    return build_tables(small_instance, SimConfig(reps=3, horizon=1500, warmup=500, seed=0))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance") or sys.modules.get("tests.test_acceptance")
    lines = getattr(mod, "REPORT", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for n in sorted(lines):
            terminalreporter.write_line(lines[n])
