"""Estimator-style front ends (``fit`` / ``get_params``) for the four approaches.

``fit`` takes an :class:`~carbon_dms.testbed.Instance` in place of a data
matrix.  Policy tables are the expensive part, so they can be built once and
passed to several estimators through ``tables=``.
"""

from __future__ import annotations

import math
import numbers

from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .benchmarks import solve_bms, solve_sms
from .exceptions import ParameterError
from .harness import carbon_price
from .master import build_tables, run_column_generation
from .policy_sim import SimConfig
from .subproblem import ColumnTables
from .testbed import Instance, check_fraction, resolve_target


def check_instance(X):
    if not isinstance(X, Instance):
        raise ParameterError(f"expected an Instance, got {type(X).__name__}", "X")
    return X


def check_tables(tables, instance, config):
    """Reuse ``tables`` if they cover ``instance`` under ``config``, else fail."""
    if not isinstance(tables, ColumnTables):
        raise ParameterError("tables must be a ColumnTables object", "tables")
    if sorted(tables.tables) != sorted(p.id for p in instance.products):
        raise ParameterError("tables do not cover the instance's products", "tables")
    if tables.config != config:
        raise ParameterError("tables were built with a different simulation config", "tables")
    return tables


def _check_positive_int(value, name, low=1):
    if isinstance(value, bool) or not isinstance(value, numbers.Integral) or value < low:
        raise ParameterError(f"{name} must be an integer >= {low}", name)


class _TableEstimator(BaseEstimator):
    def __init__(self, reps=10, horizon=9500, warmup=5000, sim_seed=0, n_jobs=None):
        self.reps = reps
        self.horizon = horizon
        self.warmup = warmup
        self.sim_seed = sim_seed
        self.n_jobs = n_jobs

    def _sim_config(self):
        return SimConfig(self.reps, self.horizon, self.warmup, self.sim_seed)

    def _prepare(self, X, tables):
        instance = check_instance(X)
        config = self._sim_config()
        if self.n_jobs is not None:
            _check_positive_int(self.n_jobs, "n_jobs")
        if tables is None:
            tables = build_tables(instance, config, n_jobs=self.n_jobs)
        self.tables_ = check_tables(tables, instance, config)
        self.instance_ = instance
        return instance, self.tables_

    def _store(self, result):
        self.result_ = result
        self.policies_ = {c.product_id: c.policy for c in result.columns}
        self.cost_ = float(result.cost)
        self.emission_ = float(result.emission)
        self.pct_fast_ = float(result.pct_fast)

    def policy(self, product_id):
        check_is_fitted(self, "policies_")
        return self.policies_[product_id]


class DynamicModeSelection(_TableEstimator):
    """Dual-index policies for all products under one shared emission cap.

    ``reduction`` is the fraction of reducible emissions to remove.
    """

    def __init__(self, reduction=0.5, reps=10, horizon=9500, warmup=5000, sim_seed=0,
                 max_iter=50, eps_rel=1e-6, n_jobs=None):
        super().__init__(reps, horizon, warmup, sim_seed, n_jobs)
        self.reduction = reduction
        self.max_iter = max_iter
        self.eps_rel = eps_rel

    def fit(self, X, y=None, tables=None):
        check_fraction(self.reduction, "reduction")
        _check_positive_int(self.max_iter, "max_iter")
        if not (isinstance(self.eps_rel, numbers.Real) and self.eps_rel >= 0):
            raise ParameterError("eps_rel must be a nonnegative number", "eps_rel")
        instance, tables = self._prepare(X, tables)
        self.target_ = resolve_target(instance, self.reduction, tables)
        self.iterations_ = []
        cg = run_column_generation(tables, self.target_.e_max, self.max_iter, self.eps_rel, log=self.iterations_)
        self.cg_ = cg
        self._store(cg.solution)
        self.lower_bound_ = float(cg.lower_bound)
        self.gap_pct_ = float(cg.solution.gap_pct)
        self.eta_ = float(cg.eta)
        self.converged_ = bool(cg.converged)
        return self


class StaticModeSelection(_TableEstimator):
    """One mode per product, chosen jointly under the shared cap."""

    def __init__(self, reduction=0.5, reps=10, horizon=9500, warmup=5000, sim_seed=0, n_jobs=None):
        super().__init__(reps, horizon, warmup, sim_seed, n_jobs)
        self.reduction = reduction

    def fit(self, X, y=None, tables=None):
        check_fraction(self.reduction, "reduction")
        instance, tables = self._prepare(X, tables)
        self.target_ = resolve_target(instance, self.reduction, tables)
        self._store(solve_sms(tables, self.target_.e_max))
        self.modes_ = {c.product_id: ("fast" if c.stats.eq_s == 0 else "slow") for c in self.result_.columns}
        return self


class BlanketModeSelection(_TableEstimator):
    """Dual-index policies with a separate cap per product."""

    def __init__(self, reduction=0.5, reps=10, horizon=9500, warmup=5000, sim_seed=0, n_jobs=None):
        super().__init__(reps, horizon, warmup, sim_seed, n_jobs)
        self.reduction = reduction

    def fit(self, X, y=None, tables=None):
        check_fraction(self.reduction, "reduction")
        instance, tables = self._prepare(X, tables)
        self.target_ = resolve_target(instance, self.reduction, tables)
        self._store(solve_bms(tables, self.reduction))
        return self


class CarbonPricedPolicy(_TableEstimator):
    """Per-product cost minimisation with emissions charged at ``carbon_price`` per kg."""

    def __init__(self, carbon_price=0.0, reps=10, horizon=9500, warmup=5000, sim_seed=0, n_jobs=None):
        super().__init__(reps, horizon, warmup, sim_seed, n_jobs)
        self.carbon_price = carbon_price

    def fit(self, X, y=None, tables=None):
        c_e = self.carbon_price
        if not (isinstance(c_e, numbers.Real) and math.isfinite(c_e) and c_e >= 0):
            raise ParameterError("carbon_price must be a finite nonnegative number", "carbon_price")
        _, tables = self._prepare(X, tables)
        report = carbon_price(tables, c_e)
        self.report_ = report
        self._store(report)
        return self
