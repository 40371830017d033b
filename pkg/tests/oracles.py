"""Independent reference implementations used to check the library.

Everything here is deliberately written from first principles (finite
differences, exhaustive enumeration, dense scans) and shares no code with
the solvers it validates.
"""

import itertools

import numpy as np


def finite_diff_jacobian(fn, p, step=1e-5):
    """Central-difference Jacobian of a vector function of prices."""
    p = np.asarray(p, dtype=float)
    cols = []
    for k in range(p.size):
        hi = p.copy()
        lo = p.copy()
        hi[k] += step
        lo[k] = max(lo[k] - step, 0.0)
        cols.append((np.asarray(fn(hi)) - np.asarray(fn(lo))) / (hi[k] - lo[k]))
    return np.stack(cols, axis=1)


def mnl_demand_ref(a, b, p):
    """Textbook logit shares with an outside option of utility zero."""
    a = np.asarray(a, float)
    b = np.asarray(b, float)
    p = np.asarray(p, float)
    expo = np.exp(a - b * p)
    return expo / (1.0 + expo.sum())


def lcp_enumerate(B, q, tol=1e-9):
    """Solve the complementarity system by trying every support.

    Returns ``(y, w, support)`` for the lexicographically smallest feasible
    support (subsets ordered by their sorted index tuples) and asserts that
    every feasible support yields the same ``y``, which must hold when ``B``
    is positive definite.
    """
    B = np.asarray(B, float)
    q = np.asarray(q, float)
    n = q.size
    solutions = []
    supports = []
    for r in range(n + 1):
        for sup in itertools.combinations(range(n), r):
            idx = list(sup)
            y = np.zeros(n)
            if idx:
                try:
                    y[idx] = np.linalg.solve(B[np.ix_(idx, idx)], -q[idx])
                except np.linalg.LinAlgError:
                    continue
            w = q + B @ y
            if np.all(y >= -tol) and np.all(w >= -tol):
                solutions.append(np.maximum(y, 0.0))
                supports.append(sup)
    assert solutions, "no feasible support found"
    for other in solutions[1:]:
        assert np.allclose(other, solutions[0], atol=1e-7), "solution not unique"
    best = min(supports)  # lexicographic on sorted index tuples
    y = solutions[supports.index(best)]
    return y, q + B @ y, best


def linear_realized_profit_enum(a, B, p):
    """Realized profit at ``p`` via support enumeration."""
    q = np.asarray(a, float) - np.asarray(B, float) @ np.asarray(p, float)
    _, w, _ = lcp_enumerate(B, q)
    return float(np.asarray(p, float) @ np.maximum(w, 0.0))


def linear_ray_profits_enum(a, B, f, qs):
    """Realized profit along ``q f`` for every scalar in ``qs``.

    Enumerates supports once and, for each support, exploits that the
    candidate solution is affine in ``q``; each scalar takes the value of
    the first feasible support in lexicographic order.
    """
    a = np.asarray(a, float)
    B = np.asarray(B, float)
    f = np.asarray(f, float)
    qs = np.asarray(qs, float)
    n = a.size
    Bf = B @ f
    out = np.full(qs.size, np.nan)
    todo = np.ones(qs.size, dtype=bool)
    tol = 1e-9
    for r in range(n + 1):
        for sup in itertools.combinations(range(n), r):
            if not todo.any():
                return out
            idx = list(sup)
            rest = [i for i in range(n) if i not in sup]
            if idx:
                Baa = B[np.ix_(idx, idx)]
                try:
                    s = np.linalg.solve(Baa, Bf[idx])
                    t = np.linalg.solve(Baa, a[idx])
                except np.linalg.LinAlgError:
                    continue
                y = qs[:, None] * s[None, :] - t[None, :]  # (Q, |sup|)
                alpha = a[rest] - B[np.ix_(rest, idx)] @ t
                gamma = Bf[rest] - B[np.ix_(rest, idx)] @ s
            else:
                y = np.zeros((qs.size, 0))
                alpha = a
                gamma = Bf
            w = alpha[None, :] - qs[:, None] * gamma[None, :]  # (Q, |rest|)
            ok = np.all(y >= -tol, axis=1) & np.all(w >= -tol, axis=1) & todo
            if ok.any():
                profit = qs[ok] * (np.maximum(w[ok], 0.0) @ f[rest])
                out[ok] = profit
                todo[ok] = False
    assert not todo.any(), "some scalars had no feasible support"
    return out


def aggregate_profit_ref(market, p):
    """Market profit at ``p`` from the reference demand formulas."""
    from factorprice.market import LinearModel

    total = 0.0
    p = np.asarray(p, float)
    for seg in market.segments:
        mod = seg.model
        if isinstance(mod, LinearModel):
            total += seg.theta * linear_realized_profit_enum(mod.a, mod.B, p)
        else:
            total += seg.theta * float(p @ mnl_demand_ref(mod.a, mod.b, p))
    return total


def dense_factor_scan(market, f, lo, hi, points=100_000):
    """Best ray profit over a dense log grid, using reference demand math."""
    from factorprice.market import LinearModel

    f = np.asarray(f, float)
    qs = np.geomspace(lo, hi, points)
    total = np.zeros(points)
    for seg in market.segments:
        mod = seg.model
        if isinstance(mod, LinearModel):
            total += seg.theta * linear_ray_profits_enum(mod.a, mod.B, f, qs)
        else:
            u = mod.a[None, :] - (qs[:, None] * f[None, :]) * mod.b[None, :]
            shift = np.maximum(u.max(axis=1), 0.0)
            w = np.exp(u - shift[:, None])
            d = w / (np.exp(-shift) + w.sum(axis=1))[:, None]
            total += seg.theta * qs * (d @ f)
    k = int(np.argmax(total))
    return float(qs[k]), float(total[k])


def all_partitions(items, max_blocks):
    """Every partition of ``items`` into at most ``max_blocks`` blocks."""
    items = list(items)
    if not items:
        yield []
        return
    first, rest = items[0], items[1:]
    for sub in all_partitions(rest, max_blocks):
        for i in range(len(sub)):
            yield sub[:i] + [[first] + sub[i]] + sub[i + 1 :]
        if len(sub) < max_blocks:
            yield [[first]] + sub


def brute_force_minimax_diameter(dist, k):
    """Smallest possible worst-cluster diameter over all partitions."""
    m = dist.shape[0]
    best = np.inf
    for part in all_partitions(range(m), k):
        worst = 0.0
        for block in part:
            for i in block:
                for j in block:
                    worst = max(worst, dist[i, j])
        best = min(best, worst)
    return best
