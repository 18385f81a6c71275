"""Compiled inner loops for the inventory simulation.

Demand arrays are int64; every flow is integral so all state arithmetic is exact.
"""

import numpy as np
from numba import njit


@njit(cache=True, nogil=True)
def simulate_full(demand, l_f, l_s, use_fast, s_f, s_s, i0):
    """Run the per-period order of events for ``len(demand)`` periods.

    Returns ``(q_f, q_s, overshoot, inv_avail)``; ``inv_avail[t]`` is the net
    inventory after all period-t arrivals (zero lead-time orders included),
    i.e. what demand ``t`` is served from.  With ``use_fast`` false the fast
    target is minus infinity and the overshoot is reported as 0.
    """
    n = demand.shape[0]
    q_f = np.zeros(n, np.int64)
    q_s = np.zeros(n, np.int64)
    over = np.zeros(n, np.int64)
    avail = np.zeros(n, np.int64)
    lag = l_s - l_f
    inv = i0
    for t in range(n):
        # 1. arrivals
        if l_f > 0 and t - l_f >= 0:
            inv += q_f[t - l_f]
        if l_s > 0 and t - l_s >= 0:
            inv += q_s[t - l_s]
        # 2. fast inventory position and fast order
        ip_f = inv
        for k in range(max(0, t - l_f + 1), t):
            ip_f += q_f[k]
        for k in range(max(0, t - l_s + 1), min(t - lag, t - 1) + 1):
            ip_f += q_s[k]
        if use_fast:
            qf = s_f - ip_f
            if qf < 0:
                qf = 0
            over[t] = ip_f + qf - s_f
        else:
            qf = 0
        q_f[t] = qf
        if l_f == 0:
            inv += qf
        # 3. slow inventory position (includes the fast order) and slow order
        ip_s = inv
        for k in range(max(0, t - l_f + 1), t + 1):
            ip_s += q_f[k]
        for k in range(max(0, t - l_s + 1), t):
            ip_s += q_s[k]
        qs = s_s - ip_s
        q_s[t] = qs
        if l_s == 0:
            inv += qs
        avail[t] = inv
        # 4. demand is met or backlogged
        inv -= demand[t]
    return q_f, q_s, over, avail


@njit(cache=True, nogil=True)
def overshoot_path(demand, lag, delta):
    """Overshoot and order paths of a dual-index policy without reference to S_f.

    ``O[t] = (O[t-1] - D[t-1] + q)^+`` where ``q = Q_s[t-lag]`` is the slow order
    entering the fast horizon; the fast order covers the shortfall and the slow
    order restores the slow position.
    """
    n = demand.shape[0]
    over = np.zeros(n, np.int64)
    q_f = np.zeros(n, np.int64)
    q_s = np.zeros(n, np.int64)
    if n == 0:
        return over, q_f, q_s
    q_s[0] = delta
    for t in range(1, n):
        q = q_s[t - lag] if t - lag >= 0 else 0
        x = over[t - 1] - demand[t - 1] + q
        if x >= 0:
            over[t] = x
            q_f[t] = 0
        else:
            over[t] = 0
            q_f[t] = -x
        q_s[t] = demand[t - 1] - q_f[t]
    return over, q_f, q_s


@njit(cache=True, nogil=True)
def _lead_demand(demand, start, stop, width):
    # x[t - start] = D[t] + ... + D[t + width - 1]
    out = np.empty(stop - start, np.int64)
    acc = 0
    for k in range(start, start + width):
        acc += demand[k]
    for t in range(start, stop):
        out[t - start] = acc
        acc += demand[t + width] - demand[t] if t + width < demand.shape[0] else -demand[t]
    return out


@njit(cache=True, nogil=True)
def newsvendor_level(x, ratio):
    """Smallest integer s with (#x <= s) / len(x) >= ratio, by counting sort."""
    lo = x.min()
    hi = x.max()
    counts = np.zeros(hi - lo + 1, np.int64)
    for v in x:
        counts[v - lo] += 1
    need = int(np.ceil(ratio * x.shape[0] - 1e-9))
    if need < 1:
        need = 1
    acc = 0
    for i in range(counts.shape[0]):
        acc += counts[i]
        if acc >= need:
            return lo + i
    return hi


@njit(cache=True, nogil=True)
def delta_table(demand, l_f, lag, delta_cap, warmup, horizon, ratio, h, p, stop_level):
    """Dual-index statistics for Delta = 0, 1, ..., up to the stopping point.

    ``demand`` is (R, warmup + horizon + l_f); replication r reuses row r for
    every Delta (common random numbers).  For each Delta the stationary
    overshoot is simulated, the Newsvendor base-stock level is the ``ratio``
    fractile of ``X = D[t..t+l_f] - O[t]`` pooled over replications, and the
    per-replication mean holding/backlog cost and mean overshoot are recorded.
    The sweep stops at the first Delta with ``(Delta - E[O]) / lag >= stop_level``
    or at ``delta_cap``.
    """
    reps = demand.shape[0]
    n = warmup + horizon
    size = delta_cap + 1
    s_star = np.zeros(size, np.int64)
    inv_rep = np.zeros((size, reps))
    eo_rep = np.zeros((size, reps))
    lead = np.empty((reps, horizon), np.int64)
    for r in range(reps):
        lead[r] = _lead_demand(demand[r], warmup, n, l_f + 1)
    xbuf = np.empty(reps * horizon, np.int64)
    last = 0
    for delta in range(size):
        eo_sum = 0.0
        for r in range(reps):
            over, _, _ = overshoot_path(demand[r, :n], lag, delta)
            s = 0
            for t in range(horizon):
                o = over[warmup + t]
                s += o
                xbuf[r * horizon + t] = lead[r, t] - o
            eo_rep[delta, r] = s / horizon
            eo_sum += eo_rep[delta, r]
        level = newsvendor_level(xbuf, ratio)
        s_star[delta] = level
        for r in range(reps):
            acc = 0.0
            for t in range(horizon):
                gap = level - xbuf[r * horizon + t]
                if gap >= 0:
                    acc += h * gap
                else:
                    acc -= p * gap
            inv_rep[delta, r] = acc / horizon
        last = delta
        if delta > 0 and (delta - eo_sum / reps) / lag >= stop_level:
            break
    return s_star[: last + 1], inv_rep[: last + 1], eo_rep[: last + 1]
