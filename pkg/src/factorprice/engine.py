"""Per-segment optimal pricing, single-factor search, and factor builders.

Personalized pricing solves each segment separately: linear segments in
closed form, logit segments by a one dimensional search over the common
markup that optimal logit prices share.  Single-factor pricing restricts the
whole market to a ray ``q f`` for a positive direction ``f`` and optimizes
the scalar ``q``; because the aggregate profit along a ray may be multimodal
for mixtures, the search is a dense log-spaced grid scan followed by
golden-section refinement around the best cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import optimize

from .errors import NumericError, ValidationError
from .lcp import linear_ray_values
from .market import (
    PRICE_CAP,
    BundleMarket,
    LinearModel,
    MarketInstance,
    MnlSegmentModel,
    aggregate_profit,
)

#: Markup searches beyond this are treated as unbounded.
MARKUP_CAP = 1e6

DEFAULT_GRID_POINTS = 2000
DEFAULT_BRACKET = (1e-4, 1e4)

_INV_PHI = (math.sqrt(5.0) - 1.0) / 2.0
_INV_PHI2 = (3.0 - math.sqrt(5.0)) / 2.0


@dataclass(frozen=True)
class PersonalizedSolution:
    """Optimal per-segment prices and profits, plus the weighted total."""

    prices: np.ndarray  # (m, n), row j prices segment j
    profits: np.ndarray  # (m,)
    thetas: np.ndarray  # (m,)
    aggregate: float

    def __post_init__(self):
        prices = np.array(self.prices, dtype=float)
        profits = np.array(self.profits, dtype=float)
        thetas = np.array(self.thetas, dtype=float)
        if prices.ndim != 2 or profits.shape != (prices.shape[0],) or thetas.shape != profits.shape:
            raise ValidationError("prices must be (m, n) with matching profits and weights")
        if not np.all(np.isfinite(prices)) or np.any(prices <= 0):
            raise ValidationError("personalized prices must be strictly positive and finite")
        total = float(thetas @ profits)
        if abs(total - self.aggregate) > 1e-9 * max(1.0, abs(total)):
            raise ValidationError(
                f"aggregate {self.aggregate!r} disagrees with weighted profits {total!r}"
            )
        for name, arr in (("prices", prices), ("profits", profits), ("thetas", thetas)):
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        object.__setattr__(self, "aggregate", float(self.aggregate))

    @property
    def m(self) -> int:
        return self.prices.shape[0]

    @property
    def n(self) -> int:
        return self.prices.shape[1]


@dataclass(frozen=True)
class FactorResult:
    """Optimal scalar along a price direction and the profit it earns."""

    f: np.ndarray
    q_star: float
    profit: float
    q_range: tuple[float, float] | None = None
    on_bracket_edge: bool = False

    def __post_init__(self):
        f = np.array(self.f, dtype=float)
        if f.ndim != 1 or np.any(f <= 0) or not np.all(np.isfinite(f)):
            raise ValidationError("factor must be a strictly positive finite vector")
        f.flags.writeable = False
        object.__setattr__(self, "f", f)
        if not self.q_star > 0:
            raise ValidationError("optimal scalar must be positive")
        if self.q_range is not None:
            lo, hi = self.q_range
            if not lo - 1e-12 <= self.q_star <= hi + 1e-12:
                raise ValidationError("optimal scalar fell outside the supplied range")
            object.__setattr__(self, "q_range", (float(lo), float(hi)))


def _check_factor(f, n: int) -> np.ndarray:
    f = np.asarray(f, dtype=float)
    if f.shape != (n,):
        raise ValidationError(f"factor has shape {f.shape}, expected ({n},)")
    if not np.all(np.isfinite(f)) or np.any(f <= 0):
        raise ValidationError("factor must be strictly positive and finite")
    return f


def _golden_max(fn, lo: float, hi: float, tol: float = 1e-9) -> float:
    """Golden-section maximization of a scalar function on ``[lo, hi]``."""
    span = hi - lo
    if span <= tol:
        return 0.5 * (lo + hi)
    steps = int(math.ceil(math.log(tol / span) / math.log(_INV_PHI)))
    c = lo + _INV_PHI2 * span
    d = lo + _INV_PHI * span
    yc = fn(c)
    yd = fn(d)
    for _ in range(max(steps - 1, 0)):
        if yc > yd:
            hi, d, yd = d, c, yc
            span *= _INV_PHI
            c = lo + _INV_PHI2 * span
            yc = fn(c)
        else:
            lo, c, yc = c, d, yd
            span *= _INV_PHI
            d = lo + _INV_PHI * span
            yd = fn(d)
    return 0.5 * (lo + d) if yc > yd else 0.5 * (c + hi)


def _mnl_ray_values(model: MnlSegmentModel, f: np.ndarray, qs: np.ndarray):
    """Vectorized profit and f-weighted demand for logit demand along ``q f``."""
    u = model.a[None, :] - (qs[:, None] * f[None, :]) * model.b[None, :]
    shift = np.maximum(u.max(axis=1), 0.0)
    w = np.exp(u - shift[:, None])
    denom = np.exp(-shift) + w.sum(axis=1)
    fdem = (w / denom[:, None]) @ f
    return qs * fdem, fdem


def ray_values(market: MarketInstance, f, qs):
    """Aggregate profit and f-weighted demand curves along prices ``q f``.

    ``qs`` must be sorted ascending; linear segments use the
    complementarity-adjusted (realized) demand.
    """
    f = _check_factor(f, market.n)
    qs = np.asarray(qs, dtype=float)
    profit = np.zeros(qs.size)
    fdem = np.zeros(qs.size)
    for seg in market.segments:
        if isinstance(seg.model, LinearModel):
            pr, fd = linear_ray_values(seg.model, f, qs)
        else:
            pr, fd = _mnl_ray_values(seg.model, f, qs)
        profit += seg.theta * pr
        fdem += seg.theta * fd
    return profit, fdem


def _mnl_markup_profit(model: MnlSegmentModel, markup: float) -> float:
    p = 1.0 / model.b + markup
    return float(p @ model.demand(p))


def _mnl_personalized(model: MnlSegmentModel):
    """Optimal logit prices via the shared-markup family ``p_i = 1/b_i + m``."""
    def g(m: float) -> float:
        return _mnl_markup_profit(model, m)

    hi = 1.0
    prev = g(0.0)
    while True:
        val = g(hi)
        if val <= prev:
            break
        prev = val
        hi *= 2.0
        if hi > MARKUP_CAP:
            raise NumericError(f"markup search exceeded {MARKUP_CAP:g} without a peak")
    grid = np.linspace(0.0, hi, 129)
    vals = np.array([g(m) for m in grid])
    k = int(np.argmax(vals))
    m_star = _golden_max(g, grid[max(k - 1, 0)], grid[min(k + 1, grid.size - 1)], tol=1e-10)
    profit = g(m_star)
    if vals[k] > profit:
        m_star, profit = float(grid[k]), float(vals[k])
    return 1.0 / model.b + m_star, float(profit)


def personalized_optimize(market: MarketInstance) -> PersonalizedSolution:
    """Profit-maximizing price vector for each segment separately."""
    prices = []
    profits = []
    for j, seg in enumerate(market.segments):
        model = seg.model
        if isinstance(model, LinearModel):
            try:
                p = 0.5 * np.linalg.solve(model.B, model.a)
            except np.linalg.LinAlgError as exc:  # PD check makes this unreachable
                raise NumericError(f"segment {j}: singular demand matrix") from exc
            if np.any(p <= 0):
                raise ValidationError(
                    f"segment {j}: optimal prices are not strictly positive"
                )
            profit = float(p @ (model.a - model.B @ p))
        elif isinstance(model, MnlSegmentModel):
            p, profit = _mnl_personalized(model)
        else:
            raise ValidationError(f"segment {j}: unsupported model {type(model).__name__}")
        prices.append(p)
        profits.append(profit)
    prices = np.array(prices)
    profits = np.array(profits)
    thetas = market.thetas
    return PersonalizedSolution(prices, profits, thetas, float(thetas @ profits))


def factor_optimize(
    market: MarketInstance,
    f,
    q_range: tuple[float, float] | None = None,
    ps: PersonalizedSolution | None = None,
    grid_points: int = DEFAULT_GRID_POINTS,
) -> FactorResult:
    """Maximize aggregate profit over prices ``q f`` for a fixed direction.

    The scalar is located by a dense log-spaced grid scan over the search
    bracket followed by golden-section refinement (absolute tolerance 1e-9
    in ``q``) around the best grid cell.  The bracket is ``q_range`` when
    given, otherwise ``[0.5 min p_ij / f_i, 2 max p_ij / f_i]`` from a
    personalized solution, otherwise a wide default; ``on_bracket_edge``
    flags an optimum at the bracket boundary.
    """
    f = _check_factor(f, market.n)
    if grid_points < 2:
        raise ValidationError("grid_points must be at least 2")
    if q_range is not None:
        lo, hi = (float(q_range[0]), float(q_range[1]))
        if not (np.isfinite(lo) and np.isfinite(hi) and 0 < lo < hi):
            raise ValidationError(f"invalid scalar range {q_range!r}")
    elif ps is not None:
        ratios = ps.prices / f[None, :]
        lo = 0.5 * float(ratios.min())
        hi = 2.0 * float(ratios.max())
    else:
        lo, hi = DEFAULT_BRACKET
    qs = np.geomspace(lo, hi, grid_points)
    curve, _ = ray_values(market, f, qs)
    k = int(np.argmax(curve))

    def obj(q: float) -> float:
        return aggregate_profit(market, q * f)

    q_star = _golden_max(obj, float(qs[max(k - 1, 0)]), float(qs[min(k + 1, qs.size - 1)]))
    q_star = min(max(q_star, lo), hi)
    profit = obj(q_star)
    if curve[k] > profit:
        q_star, profit = float(qs[k]), float(curve[k])
    return FactorResult(
        f=f,
        q_star=float(q_star),
        profit=float(profit),
        q_range=(lo, hi) if q_range is not None else None,
        on_bracket_edge=bool(k in (0, qs.size - 1)),
    )


def economic_factor(market: MarketInstance, ps: PersonalizedSolution) -> np.ndarray:
    """Profit-share weighted blend of the personalized price vectors.

    Segment ``j`` contributes weight ``theta_j R*_j / R_bar``; the weights
    sum to one, so the factor is a convex combination of optimal prices.
    """
    if ps.m != market.m or ps.n != market.n:
        raise ValidationError("personalized solution does not match the market")
    if not ps.aggregate > 0:
        raise ValidationError("market has zero personalized profit; weights undefined")
    alpha = ps.thetas * ps.profits / ps.aggregate
    return alpha @ ps.prices


def robust_factor(ps: PersonalizedSolution):
    """Componentwise geometric mean of extreme personalized prices.

    Returns ``(f_star, rho_star)``: the factor minimizing the worst-case
    spread of personalized prices along any direction, and the spread it
    attains (the largest per-product max/min price ratio).
    """
    p_lo = ps.prices.min(axis=0)
    p_hi = ps.prices.max(axis=0)
    f_star = np.sqrt(p_lo * p_hi)
    ratios = ps.prices / f_star[None, :]
    rho_star = float(ratios.max() / ratios.min())
    return f_star, rho_star


def bundle_size_factor(bundle_market: BundleMarket, g) -> np.ndarray:
    """Factor pricing bundles by their size through a strictly increasing map.

    ``g`` is evaluated at every size ``1..base_n`` and must be strictly
    increasing there; the identity map yields a uniform per-unit (linear)
    schedule.
    """
    sizes = np.arange(1, bundle_market.base_n + 1)
    values = np.array([float(g(int(s))) for s in sizes])
    if bundle_market.base_n > 1 and not np.all(np.diff(values) > 0):
        raise ValidationError("size map must be strictly increasing on bundle sizes")
    f = np.array([float(g(int(s))) for s in bundle_market.sizes])
    if np.any(f <= 0) or not np.all(np.isfinite(f)):
        raise ValidationError("size map must be positive and finite on bundle sizes")
    return f


def component_price_factor(bundle_market: BundleMarket, component_prices) -> np.ndarray:
    """Factor pricing each bundle at the sum of its components' prices."""
    prices = np.asarray(component_prices, dtype=float)
    if prices.shape != (bundle_market.base_n,):
        raise ValidationError(
            f"component prices have shape {prices.shape}, expected ({bundle_market.base_n},)"
        )
    if np.any(prices <= 0) or not np.all(np.isfinite(prices)):
        raise ValidationError("component prices must be strictly positive and finite")
    return np.array([float(x @ prices) for x in bundle_market.bundles])


def nonpersonalized_heuristic(market: MarketInstance):
    """Best single price vector found for the whole market (a lower bound).

    Linear markets use the aggregate closed form with per-segment
    complementarity adjustment.  Logit markets run a derivative-free
    Nelder-Mead polish from a fixed set of starts: the personalized prices
    of up to four segments plus the uniform-factor and economic-factor
    solutions, so the result never falls below those baselines.  Returns
    ``(prices, profit)``.
    """
    models = [seg.model for seg in market.segments]
    if all(isinstance(mod, LinearModel) for mod in models):
        a_bar = sum(seg.theta * seg.model.a for seg in market.segments)
        b_bar = sum(seg.theta * seg.model.B for seg in market.segments)
        p = 0.5 * np.linalg.solve(b_bar, a_bar)
        p = np.maximum(p, 0.0)
        return p, aggregate_profit(market, p)
    if not all(isinstance(mod, MnlSegmentModel) for mod in models):
        raise ValidationError("segments must share a single model family")

    ps = personalized_optimize(market)
    starts = [ps.prices[j] for j in range(min(market.m, 4))]
    ones = np.ones(market.n)
    uniform = factor_optimize(market, ones, ps=ps)
    starts.append(uniform.q_star * ones)
    econ_f = economic_factor(market, ps)
    econ = factor_optimize(market, econ_f, ps=ps)
    starts.append(econ.q_star * econ_f)

    # One stacked objective for all segments keeps the simplex search cheap.
    util_a = np.array([mod.a for mod in models])
    util_b = np.array([mod.b for mod in models])
    thetas = market.thetas

    def profit(p: np.ndarray) -> float:
        p = np.clip(p, 0.0, PRICE_CAP)
        u = util_a - util_b * p[None, :]
        shift = np.maximum(u.max(axis=1), 0.0)
        w = np.exp(u - shift[:, None])
        denom = np.exp(-shift) + w.sum(axis=1)
        return float(thetas @ ((w / denom[:, None]) @ p))

    best_p = starts[0]
    best_profit = -math.inf
    for x0 in starts:
        val = profit(x0)
        if val > best_profit:
            best_p, best_profit = x0, val
        res = optimize.minimize(
            lambda p: -profit(p),
            x0,
            method="Nelder-Mead",
            bounds=[(0.0, PRICE_CAP)] * market.n,
            options={"xatol": 1e-7, "fatol": 1e-10},
        )
        cand = np.clip(res.x, 0.0, PRICE_CAP)
        val = profit(cand)
        if val > best_profit:
            best_p, best_profit = cand, val
    return np.asarray(best_p, dtype=float), float(best_profit)
