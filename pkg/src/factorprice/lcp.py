"""Complementarity adjustment for negative linear demands.

At prices outside the feasible region the raw linear demand ``a - B p`` has
negative components.  The realized outcome discounts those products by a
vector ``y >= 0`` chosen so that ``d(p - y) >= 0`` and ``y . d(p - y) = 0``;
the firm then collects ``p . d(p - y)``, which is never less than the raw
``p . d(p)``.  With ``B`` symmetric positive definite the adjusted demand is
unique, so the solver below (least-index principal pivoting) is exact.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import NumericError
from .market import LinearModel, check_prices

# Adjusted demands within this of zero are clamped to exactly zero.
_CLAMP = 1e-9
_FEAS_TOL = 1e-11


@dataclass(frozen=True)
class LcpResult:
    """Outcome of the complementarity adjustment at one price vector."""

    y: np.ndarray
    adjusted_demand: np.ndarray
    adjusted_profit: float

    def __post_init__(self):
        y = np.asarray(self.y, dtype=float)
        x = np.asarray(self.adjusted_demand, dtype=float)
        if np.any(y < 0):
            raise NumericError("adjustment vector has negative components")
        if np.any(x < -_CLAMP):
            raise NumericError("adjusted demand is negative beyond tolerance")
        resid = float(np.max(np.abs(y * x), initial=0.0))
        if resid > 1e-9:
            raise NumericError(
                f"complementarity residual {resid:g} exceeds 1e-9", residuals=y * x
            )

    @property
    def support(self) -> tuple[int, ...]:
        """Indices with a strictly positive adjustment."""
        return tuple(int(i) for i in np.flatnonzero(self.y > 0))


def solve_lcp(B, q, start=None, max_pivots=None):
    """Solve ``w = q + B y``, ``y >= 0``, ``w >= 0``, ``y . w = 0``.

    ``B`` must be symmetric positive definite, which makes the solution
    unique.  Pivoting always flips the lowest violated index, so the walk is
    deterministic; ``start`` warm-starts the basis. Returns ``(y, w, basis)``
    where ``basis`` is the boolean mask of components solved as positive.
    """
    q = np.asarray(q, dtype=float)
    n = q.size
    if max_pivots is None:
        max_pivots = 200 + 40 * n
    attempts = [np.zeros(n, dtype=bool) if start is None else np.array(start, dtype=bool)]
    if start is not None and np.any(attempts[0]):
        attempts.append(np.zeros(n, dtype=bool))
    y = np.zeros(n)
    w = q.copy()
    for basis in attempts:
        for _ in range(max_pivots):
            y = np.zeros(n)
            act = np.flatnonzero(basis)
            if act.size:
                y[act] = np.linalg.solve(B[np.ix_(act, act)], -q[act])
            w = q + B @ y
            bad = (basis & (y < -_FEAS_TOL)) | (~basis & (w < -_FEAS_TOL))
            if not bad.any():
                return y, w, basis
            basis[np.flatnonzero(bad)[0]] ^= True
    raise NumericError(
        "complementarity pivoting did not converge",
        residuals={"y_min": float(y.min()), "w_min": float(w.min())},
    )


def lcp_adjust(model: LinearModel, p) -> LcpResult:
    """Complementarity-adjusted demand and realized profit at prices ``p``.

    If the raw demand is already nonnegative the adjustment is zero and the
    profit is plain ``p . d(p)``.
    """
    p = check_prices(p, model.n)
    d_raw = model.a - model.B @ p
    if np.all(d_raw >= 0):
        y = np.zeros(model.n)
        x = d_raw
    else:
        y, x, _ = solve_lcp(model.B, d_raw)
        y = np.where(y < 0, 0.0, y)  # scrub solver-tolerance negatives
    x = np.where((x < 0) & (x >= -_CLAMP), 0.0, x)
    profit = float(p @ x)
    raw_profit = float(p @ d_raw)
    if profit < raw_profit - 1e-9:
        raise NumericError(
            f"adjusted profit {profit:g} fell below raw profit {raw_profit:g}"
        )
    return LcpResult(y=y, adjusted_demand=x, adjusted_profit=profit)


def linear_ray_values(model: LinearModel, f, qs):
    """Realized profit and f-weighted demand along the ray ``p = q f``.

    ``qs`` must be sorted ascending.  On any interval of ``q`` where the
    adjustment's positive set is constant, ``y(q)`` and the realized demand
    are affine in ``q``, so the sweep re-solves the complementarity problem
    only at the interval breakpoints and evaluates closed forms in between.
    Returns ``(profit, f_demand)`` arrays aligned with ``qs``.
    """
    a, B = model.a, model.B
    f = np.asarray(f, dtype=float)
    qs = np.asarray(qs, dtype=float)
    Bf = B @ f
    profit = np.empty(qs.size)
    fdem = np.empty(qs.size)
    basis = np.zeros(model.n, dtype=bool)
    i = 0
    while i < qs.size:
        q0 = float(qs[i])
        _, _, basis = solve_lcp(B, a - q0 * Bf, start=basis)
        act = np.flatnonzero(basis)
        free = np.flatnonzero(~basis)
        if act.size:
            Baa = B[np.ix_(act, act)]
            s = np.linalg.solve(Baa, Bf[act])  # y(q) = q s - t on the basis
            t = np.linalg.solve(Baa, a[act])
            alpha = a[free] - B[np.ix_(free, act)] @ t
            gamma = Bf[free] - B[np.ix_(free, act)] @ s
        else:
            s = t = np.empty(0)
            alpha = a[free]
            gamma = Bf[free]
        # The basis stays valid while y(q) >= 0 and alpha - q gamma >= 0.
        hi = np.inf
        down = s < 0
        if down.any():
            hi = min(hi, float(np.min(t[down] / s[down])))
        up = gamma > 0
        if up.any():
            hi = min(hi, float(np.min(alpha[up] / gamma[up])))
        hi = max(hi, q0)
        j = int(np.searchsorted(qs, hi * (1 + 1e-12), side="right"))
        j = max(j, i + 1)
        block = qs[i:j]
        if free.size:
            fd = float(alpha @ f[free]) - block * float(gamma @ f[free])
        else:
            fd = np.zeros(block.size)
        fdem[i:j] = fd
        profit[i:j] = block * fd
        i = j
    return profit, fdem
