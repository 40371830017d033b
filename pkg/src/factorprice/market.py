"""Demand models and market instances for multi-segment, multi-product pricing.

A market couples customer segments (each a mixture weight plus a demand
model) over a common set of ``n`` products.  Two model families are
provided: linear demand ``d(p) = a - B p`` with a symmetric positive
definite ``B``, and a logit share model with an outside option.  A
:class:`BundleMarket` reinterprets the products of an inner market as
bundles over a set of underlying items.

All types are immutable after construction and every operation is a pure
function, so instances can be shared freely across worker threads.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from .errors import ValidationError

#: Price components above this are rejected before they can overflow the
#: logit exponential.
PRICE_CAP = 1e9

_SYM_TOL = 1e-12
_THETA_TOL = 1e-12


def _frozen_array(values, name: str) -> np.ndarray:
    arr = np.array(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValidationError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


def check_prices(p, n: int) -> np.ndarray:
    """Validate a price vector: shape ``(n,)``, finite, in ``[0, PRICE_CAP]``."""
    arr = np.asarray(p, dtype=float)
    if arr.shape != (n,):
        raise ValidationError(f"price vector has shape {arr.shape}, expected ({n},)")
    if not np.all(np.isfinite(arr)):
        raise ValidationError("price vector must be finite")
    if np.any(arr < 0):
        raise ValidationError("price vector must be nonnegative")
    if np.any(arr > PRICE_CAP):
        raise ValidationError(f"price components above {PRICE_CAP:g} are rejected")
    return arr


@dataclass(frozen=True)
class LinearModel:
    """Linear demand ``d(p) = a - B p``.

    ``a`` must be strictly positive and ``B`` symmetric positive definite
    (checked with a Cholesky factorization at construction).  Raw demand may
    go negative at high prices; callers that need realized nonnegative
    demand go through :func:`factorprice.lcp.lcp_adjust`.
    """

    a: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        a = _frozen_array(self.a, "a")
        B = _frozen_array(self.B, "B")
        if a.ndim != 1 or a.size == 0:
            raise ValidationError("a must be a non-empty vector")
        if np.any(a <= 0):
            raise ValidationError("all components of a must be strictly positive")
        if B.shape != (a.size, a.size):
            raise ValidationError(f"B has shape {B.shape}, expected ({a.size}, {a.size})")
        if np.max(np.abs(B - B.T)) > _SYM_TOL:
            raise ValidationError(f"B must be symmetric within {_SYM_TOL:g}")
        try:
            np.linalg.cholesky(B)
        except np.linalg.LinAlgError:
            raise ValidationError("B must be positive definite") from None
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "B", B)

    @property
    def n(self) -> int:
        return self.a.size

    def demand(self, p) -> np.ndarray:
        """Raw demand ``a - B p`` (may be negative)."""
        p = check_prices(p, self.n)
        return self.a - self.B @ p

    def jacobian(self, p) -> np.ndarray:
        """Price Jacobian of demand; constant ``-B`` for the linear model."""
        check_prices(p, self.n)
        return -self.B


@dataclass(frozen=True)
class MnlSegmentModel:
    """Logit demand with an outside option.

    Product ``i`` carries utility ``a_i - b_i p_i`` and the outside option
    has utility zero, so shares are strictly positive and sum to less than
    one at any finite price vector.  The exponentials are evaluated with a
    max-shift so large utilities cannot overflow.
    """

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = _frozen_array(self.a, "a")
        b = _frozen_array(self.b, "b")
        if a.ndim != 1 or a.size == 0:
            raise ValidationError("a must be a non-empty vector")
        if b.shape != a.shape:
            raise ValidationError("a and b must have the same length")
        if np.any(b <= 0):
            raise ValidationError("all price sensitivities b must be strictly positive")
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def n(self) -> int:
        return self.a.size

    def demand(self, p) -> np.ndarray:
        p = check_prices(p, self.n)
        u = self.a - self.b * p
        shift = max(0.0, float(u.max()))
        w = np.exp(u - shift)
        return w / (np.exp(-shift) + w.sum())

    def jacobian(self, p) -> np.ndarray:
        """Exact partials ``J[i, k] = d d_i / d p_k``."""
        d = self.demand(p)
        return (np.outer(d, d) - np.diag(d)) * self.b


DemandModel = Union[LinearModel, MnlSegmentModel]


@dataclass(frozen=True)
class Segment:
    """One customer type: a mixture weight and its demand model."""

    theta: float
    model: DemandModel

    def __post_init__(self):
        theta = float(self.theta)
        if not np.isfinite(theta) or not 0.0 < theta <= 1.0:
            raise ValidationError(f"segment weight {theta!r} must lie in (0, 1]")
        object.__setattr__(self, "theta", theta)


@dataclass(frozen=True)
class MarketInstance:
    """A population of weighted customer segments over ``n`` products."""

    n: int
    segments: tuple[Segment, ...]
    labels: tuple[str, ...] | None = None

    def __post_init__(self):
        segments = tuple(self.segments)
        if not segments:
            raise ValidationError("market needs at least one segment")
        n = int(self.n)
        if n < 1:
            raise ValidationError("product count must be at least 1")
        for j, seg in enumerate(segments):
            if seg.model.n != n:
                raise ValidationError(
                    f"segment {j} has dimension {seg.model.n}, expected {n}"
                )
        total = sum(seg.theta for seg in segments)
        if abs(total - 1.0) > _THETA_TOL:
            raise ValidationError(f"segment weights sum to {total!r}, expected 1")
        if self.labels is not None:
            labels = tuple(str(x) for x in self.labels)
            if len(labels) != n:
                raise ValidationError("labels must name every product")
            object.__setattr__(self, "labels", labels)
        object.__setattr__(self, "n", n)
        object.__setattr__(self, "segments", segments)

    @classmethod
    def single(cls, model: DemandModel) -> "MarketInstance":
        """Market with one segment of weight one."""
        return cls(n=model.n, segments=(Segment(1.0, model),))

    @property
    def m(self) -> int:
        return len(self.segments)

    @property
    def thetas(self) -> np.ndarray:
        return np.array([seg.theta for seg in self.segments])


@dataclass(frozen=True)
class BundleMarket:
    """Products of ``inner`` reinterpreted as bundles of underlying items.

    ``bundles[k]`` is the 0/1 incidence vector of the items contained in
    product ``k`` of the inner market.
    """

    base_n: int
    bundles: tuple[np.ndarray, ...]
    inner: MarketInstance

    def __post_init__(self):
        base_n = int(self.base_n)
        if base_n < 1:
            raise ValidationError("base item count must be at least 1")
        frozen = []
        seen = set()
        for k, x in enumerate(self.bundles):
            vec = np.asarray(x)
            if vec.shape != (base_n,) or not np.all(np.isin(vec, (0, 1))):
                raise ValidationError(f"bundle {k} must be a 0/1 vector of length {base_n}")
            if not vec.any():
                raise ValidationError(f"bundle {k} is empty")
            key = tuple(int(v) for v in vec)
            if key in seen:
                raise ValidationError(f"bundle {k} duplicates an earlier bundle")
            seen.add(key)
            frozen.append(_frozen_array(vec, f"bundle {k}"))
        if len(frozen) != self.inner.n:
            raise ValidationError(
                f"{len(frozen)} bundles for an inner market with {self.inner.n} products"
            )
        object.__setattr__(self, "base_n", base_n)
        object.__setattr__(self, "bundles", tuple(frozen))

    @classmethod
    def all_nontrivial_subsets(cls, base_n: int, inner: MarketInstance) -> "BundleMarket":
        """All ``2**base_n - 1`` non-empty item subsets, in bitmask order."""
        bundles = [
            np.array([(mask >> i) & 1 for i in range(base_n)], dtype=float)
            for mask in range(1, 2**base_n)
        ]
        return cls(base_n=base_n, bundles=tuple(bundles), inner=inner)

    @classmethod
    def size_indexed(cls, inner: MarketInstance) -> "BundleMarket":
        """Bundle ``k`` holds the first ``k + 1`` of ``n`` identical units."""
        n = inner.n
        bundles = [
            np.concatenate([np.ones(k + 1), np.zeros(n - k - 1)]) for k in range(n)
        ]
        return cls(base_n=n, bundles=tuple(bundles), inner=inner)

    @property
    def sizes(self) -> np.ndarray:
        """Number of items in each bundle."""
        return np.array([int(x.sum()) for x in self.bundles])


def eval_demand(model: DemandModel, p) -> np.ndarray:
    """Demand vector of ``model`` at price vector ``p``."""
    return model.demand(p)


def eval_jacobian(model: DemandModel, p) -> np.ndarray:
    """Analytic demand Jacobian ``J[i, k] = d d_i / d p_k`` at ``p``."""
    return model.jacobian(p)


def segment_profit(model: DemandModel, p) -> float:
    """Realized profit ``p . d`` for one segment.

    Linear demands are complementarity-adjusted first, so the result is the
    revenue the firm actually collects when some raw demands are negative;
    logit demand is always feasible and is used directly.
    """
    if isinstance(model, LinearModel):
        from .lcp import lcp_adjust

        return lcp_adjust(model, p).adjusted_profit
    p = check_prices(p, model.n)
    return float(p @ model.demand(p))


def aggregate_profit(market: MarketInstance, p) -> float:
    """Weight-averaged realized profit over all segments at prices ``p``."""
    return float(sum(seg.theta * segment_profit(seg.model, p) for seg in market.segments))
