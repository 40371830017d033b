"""Worst-case performance certificates for single-factor pricing.

The central quantity is the spread ``rho = q_max / q_min`` of the
personalized prices measured along a factor ``f`` (``q_min`` and ``q_max``
are the extreme ratios ``p_ij / f_i``).  Whenever the demand system passes
the filtered-demand inequality checked by :func:`check_a1`, factor pricing
is guaranteed at least a ``1 / (1 + ln rho)`` share of the personalized
profit.  This module computes those certificates, the sufficient
substitutability conditions behind them, the sharpened bound for finite
price menus, and a one dimensional continuous-type construction showing the
multiplier cannot be improved.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .engine import PersonalizedSolution, ray_values
from .errors import NumericError, ValidationError
from .market import LinearModel, MarketInstance, MnlSegmentModel

A1_VERIFIED = "verified-on-grid"
A1_VIOLATED = "violated-at-q"
A1_NOT_CHECKED = "not-checked"

_GRID_NOTE = (
    "inequality checked on a finite grid plus all breakpoints; "
    "this is evidence on the grid, not a proof for every scalar"
)


@dataclass(frozen=True)
class BoundReport:
    """Guarantee multiplier for one factor against personalized pricing."""

    q_min: float
    q_max: float
    rho: float
    beta: float
    a1_verified: str = A1_NOT_CHECKED
    guarantee_ratio_observed: float | None = None

    def __post_init__(self):
        if not 0 < self.q_min <= self.q_max:
            raise ValidationError("price/factor ratios must satisfy 0 < q_min <= q_max")
        if self.rho < 1 or self.beta < 1:
            raise ValidationError("spread and multiplier must both be at least 1")
        if self.a1_verified not in (A1_VERIFIED, A1_VIOLATED, A1_NOT_CHECKED):
            raise ValidationError(f"unknown verification state {self.a1_verified!r}")


@dataclass(frozen=True)
class A1Profile:
    """Grid evaluation of the filtered-demand inequality.

    ``G_values`` holds the f-weighted demand at the personalized optima,
    filtered to price/factor ratios at least ``q``; ``H_values`` holds the
    f-weighted (realized) demand at prices ``q f``.  ``violation`` is the
    first grid scalar where the filtered curve exceeds the ray curve.
    """

    grid: np.ndarray
    G_values: np.ndarray
    H_values: np.ndarray
    violation: float | None
    note: str = _GRID_NOTE

    def __post_init__(self):
        for name in ("grid", "G_values", "H_values"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)

    @property
    def ok(self) -> bool:
        return self.violation is None

    def dump_csv(self, path) -> None:
        """Write rows ``q,G,H`` for plotting."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("q,G,H\n")
            for q, g, h in zip(self.grid, self.G_values, self.H_values):
                fh.write(f"{q!r},{g!r},{h!r}\n")


@dataclass(frozen=True)
class P1P2Report:
    """Result of the two sufficient substitutability checks.

    Slacks are the worst margin observed; a nonnegative slack (within the
    check tolerance) means the condition passed.
    """

    p1: bool
    p2: bool
    p1_slack: float
    p2_slack: float


@dataclass(frozen=True)
class TightnessResult:
    """Continuous-type construction where the multiplier binds."""

    personalized: float
    uniform: float
    ratio: float
    density_integral: float


def price_spread(prices, f):
    """Extreme ratios ``p_ij / f_i`` over all products and segments.

    ``prices`` may be a single price vector or a stacked ``(m, n)`` array.
    Returns ``(q_min, q_max)``.
    """
    prices = np.atleast_2d(np.asarray(prices, dtype=float))
    f = np.asarray(f, dtype=float)
    if prices.shape[1] != f.size:
        raise ValidationError("prices and factor disagree on the product count")
    if np.any(prices <= 0) or not np.all(np.isfinite(prices)):
        raise ValidationError("personalized prices must be strictly positive and finite")
    if np.any(f <= 0) or not np.all(np.isfinite(f)):
        raise ValidationError("factor must be strictly positive and finite")
    ratios = prices / f[None, :]
    return float(ratios.min()), float(ratios.max())


def compute_bound(ps, f, factor_res=None, a1: A1Profile | None = None) -> BoundReport:
    """Guarantee report for factor ``f`` given the personalized optimum.

    ``ps`` is a :class:`PersonalizedSolution` or a raw matrix of positive
    price vectors.  When a factor optimization result is supplied, the
    observed ratio of personalized to factor profit is recorded; when an
    :class:`A1Profile` is supplied, its verdict is recorded and — for an
    unconstrained factor search — the observed ratio is required to respect
    the certified multiplier.
    """
    if isinstance(ps, PersonalizedSolution):
        prices = ps.prices
        aggregate = ps.aggregate
    else:
        prices = np.atleast_2d(np.asarray(ps, dtype=float))
        aggregate = None
    q_min, q_max = price_spread(prices, f)
    rho = q_max / q_min
    beta = 1.0 + math.log(rho)
    observed = None
    if factor_res is not None and aggregate is not None:
        if factor_res.profit > 0:
            observed = float(aggregate / factor_res.profit)
    status = A1_NOT_CHECKED
    if a1 is not None:
        status = A1_VERIFIED if a1.ok else A1_VIOLATED
    if (
        status == A1_VERIFIED
        and observed is not None
        and (factor_res is None or factor_res.q_range is None)
        and observed > beta + 1e-6
    ):
        raise NumericError(
            f"observed ratio {observed:g} exceeds certified multiplier {beta:g}",
            residuals={"observed": observed, "beta": beta},
        )
    return BoundReport(
        q_min=q_min,
        q_max=q_max,
        rho=float(rho),
        beta=float(beta),
        a1_verified=status,
        guarantee_ratio_observed=observed,
    )


def constrained_beta(k: float) -> float:
    """Multiplier when prices are confined to ``[q f, e^k q f]`` boxes."""
    k = float(k)
    if not (np.isfinite(k) and k > 0):
        raise ValidationError("constraint exponent k must be positive and finite")
    return 1.0 + k


def finite_set_beta(q_grid) -> float:
    """Sharpened multiplier when only finitely many scalars are allowed.

    ``q_grid`` must be strictly decreasing and positive; the result never
    exceeds the number of allowed scalars.
    """
    q = np.asarray(list(q_grid), dtype=float)
    if q.ndim != 1 or q.size == 0:
        raise ValidationError("the allowed scalar set must be a non-empty sequence")
    if np.any(q <= 0) or not np.all(np.isfinite(q)):
        raise ValidationError("allowed scalars must be positive and finite")
    if q.size > 1 and not np.all(np.diff(q) < 0):
        raise ValidationError("allowed scalars must be strictly decreasing")
    nxt = np.append(q[1:], 0.0)
    return float(np.sum((q - nxt) / q))


def _filtered_demand_curve(market, ps, f, grid):
    """Filtered f-weighted personalized demand evaluated on ``grid``."""
    thresholds = (ps.prices / f[None, :]).ravel()
    weights = np.empty_like(thresholds)
    for j, seg in enumerate(market.segments):
        d = seg.model.demand(ps.prices[j])
        weights[j * market.n : (j + 1) * market.n] = seg.theta * f * d
    order = np.argsort(thresholds)
    thr = thresholds[order]
    suffix = np.cumsum(weights[order][::-1])[::-1]
    pos = np.searchsorted(thr, grid, side="left")  # keep ties: ratio == q counts
    out = np.zeros(grid.size)
    inside = pos < thr.size
    out[inside] = suffix[pos[inside]]
    return out


def check_a1(
    market: MarketInstance,
    ps: PersonalizedSolution,
    f,
    grid_size: int = 2000,
    tol: float = 1e-9,
) -> A1Profile:
    """Evaluate the filtered-demand inequality on a grid of scalars.

    The grid is the log-spaced range ``[q_min / 2, q_max]`` joined with
    every breakpoint ratio ``p_ij / f_i``, so the step structure of the
    filtered curve is fully resolved.  A violation is data, not an error.
    """
    if grid_size < 2:
        raise ValidationError("grid_size must be at least 2")
    f = np.asarray(f, dtype=float)
    q_min, q_max = price_spread(ps.prices, f)
    grid = np.unique(
        np.concatenate(
            [np.geomspace(q_min / 2, q_max, grid_size), (ps.prices / f[None, :]).ravel()]
        )
    )
    g_curve = _filtered_demand_curve(market, ps, f, grid)
    _, h_curve = ray_values(market, f, grid)
    bad = np.flatnonzero(g_curve > h_curve + tol)
    violation = float(grid[bad[0]]) if bad.size else None
    return A1Profile(grid=grid, G_values=g_curve, H_values=h_curve, violation=violation)


def check_p1_p2(model, f, probe_prices=()) -> P1P2Report:
    """Check the two sufficient conditions for the guarantee to apply.

    The first asks cross-price demand effects to be nonnegative (weak
    substitutes); the second asks the f-weighted demand of the segment to be
    nonincreasing in every price.  Linear models are checked structurally
    (off-diagonals of the slope matrix, sign of ``B f``); logit models
    satisfy the first automatically and the second is tested at each probe
    price vector via the share condition ``d(p) . f <= min_i f_i``.
    """
    tol = 1e-12
    n = model.n
    f = np.asarray(f, dtype=float)
    if f.shape != (n,) or np.any(f <= 0) or not np.all(np.isfinite(f)):
        raise ValidationError("factor must be strictly positive with matching length")
    if isinstance(model, LinearModel):
        off = model.B - np.diag(np.diag(model.B))
        worst_off = float(off.max(initial=0.0))
        p1_slack = -worst_off
        p2_slack = float((model.B @ f).min())
        return P1P2Report(
            p1=worst_off <= tol,
            p2=p2_slack >= -tol,
            p1_slack=p1_slack,
            p2_slack=p2_slack,
        )
    if isinstance(model, MnlSegmentModel):
        fmin = float(f.min())
        p2_slack = math.inf
        for p in probe_prices:
            share = float(model.demand(p) @ f)
            p2_slack = min(p2_slack, fmin - share)
        return P1P2Report(
            p1=True,
            p1_slack=math.inf,
            p2=p2_slack >= -tol,
            p2_slack=p2_slack,
        )
    raise ValidationError(f"unsupported model {type(model).__name__}")


def tightness_oracle(rho: float, integration_steps: int = 100_000) -> TightnessResult:
    """One dimensional continuous-type market where the multiplier binds.

    Types' willingness to pay follows the tail ``d(p) = k min(1, 1/p)`` on
    ``[0, rho]`` with ``k = 1 / (1 + ln rho)``, which integrates to one.
    Personalized pricing then earns exactly 1 while the best uniform price
    earns ``k``, so the profit ratio equals the certified multiplier.  The
    tail integral is recomputed by trapezoid quadrature (with the kink at
    ``p = 1`` on a grid node) as a numerical cross-check.
    """
    rho = float(rho)
    if not (np.isfinite(rho) and rho > 1):
        raise ValidationError("spread rho must be finite and greater than 1")
    if integration_steps < 2:
        raise ValidationError("integration_steps must be at least 2")
    beta = 1.0 + math.log(rho)
    k = 1.0 / beta

    def tail(p: np.ndarray) -> np.ndarray:
        with np.errstate(divide="ignore"):
            return k * np.minimum(1.0, 1.0 / p)

    low_panels = min(max(1, int(round(integration_steps / rho))), integration_steps - 1)
    high_panels = integration_steps - low_panels
    g_low = np.linspace(0.0, 1.0, low_panels + 1)
    g_high = np.linspace(1.0, rho, high_panels + 1)
    integral = float(
        np.trapezoid(tail(g_low), g_low) + np.trapezoid(tail(g_high), g_high)
    )
    grid = np.concatenate([g_low, g_high])
    uniform = float(np.max(grid * tail(grid)))
    return TightnessResult(
        personalized=1.0,
        uniform=uniform,
        ratio=1.0 / uniform,
        density_integral=integral,
    )


def nonlinear_pricing_beta(v, n: int | None = None) -> float:
    """Multiplier for a linear price schedule against per-size pricing.

    ``v`` lists the gross utility of each bundle size ``1..n``; it must be
    strictly increasing with strictly decreasing per-unit value.  The spread
    of the per-size optimal prices against the schedule ``price = size * q``
    is then ``n v_1 / v_n``.
    """
    v = np.asarray(v, dtype=float)
    if v.ndim != 1 or v.size == 0:
        raise ValidationError("utilities must form a non-empty vector")
    if n is None:
        n = v.size
    elif n != v.size:
        raise ValidationError(f"got {v.size} utilities for max bundle size {n}")
    if np.any(v <= 0) or not np.all(np.isfinite(v)):
        raise ValidationError("utilities must be strictly positive and finite")
    if v.size > 1:
        if not np.all(np.diff(v) > 0):
            raise ValidationError("utilities must be strictly increasing in size")
        per_unit = v / np.arange(1, v.size + 1)
        if not np.all(np.diff(per_unit) < 0):
            raise ValidationError("per-unit utilities must be strictly decreasing")
    return float(1.0 + math.log(n * v[0] / v[-1]))
