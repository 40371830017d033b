"""Segment clustering to tighten per-cluster price-spread guarantees.

Segments are compared by the largest per-product log price ratio between
their personalized optima.  Under that metric the diameter of a cluster is
exactly the log of its minimal price spread, so minimizing the worst cluster
diameter minimizes the worst per-cluster guarantee multiplier.  Two
partitioners are provided: greedy farthest-point-first seeding (a
2-approximation for the minimax diameter) and plain Lloyd k-means on the
personalized price vectors.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .engine import PersonalizedSolution, factor_optimize
from .errors import ValidationError
from .market import MarketInstance, Segment

FACTOR_KINDS = ("economic", "robust", "uniform")


@dataclass(frozen=True)
class ClusterInfo:
    """Membership and precomputed factors for one cluster."""

    members: tuple[int, ...]
    rho_star: float
    robust_f: np.ndarray
    economic_f: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(int(j) for j in self.members))
        for name in ("robust_f", "economic_f"):
            arr = np.array(getattr(self, name), dtype=float)
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)


@dataclass(frozen=True)
class ClusterPartition:
    """Assignment of segments to clusters with per-cluster summaries."""

    assignment: np.ndarray
    clusters: tuple[ClusterInfo, ...]
    worst_rho: float

    def __post_init__(self):
        assignment = np.array(self.assignment, dtype=int)
        assignment.flags.writeable = False
        object.__setattr__(self, "assignment", assignment)
        clusters = tuple(self.clusters)
        object.__setattr__(self, "clusters", clusters)
        seen: list[int] = []
        for k, info in enumerate(clusters):
            if not info.members:
                raise ValidationError(f"cluster {k} is empty")
            for j in info.members:
                if assignment[j] != k:
                    raise ValidationError(f"segment {j} not assigned to cluster {k}")
            seen.extend(info.members)
        if sorted(seen) != list(range(assignment.size)):
            raise ValidationError("clusters must partition the segments exactly")
        recomputed = max(info.rho_star for info in clusters)
        if abs(recomputed - self.worst_rho) > 1e-12:
            raise ValidationError("worst_rho disagrees with the per-cluster spreads")

    @property
    def k(self) -> int:
        return len(self.clusters)

    def to_csv(self, path) -> None:
        """Write the assignment rows followed by a per-cluster summary block."""
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("segment_id,cluster_id\n")
            for j, k in enumerate(self.assignment):
                fh.write(f"{j},{int(k)}\n")
            fh.write("\ncluster_id,size,rho_star,members\n")
            for k, info in enumerate(self.clusters):
                members = ";".join(str(j) for j in info.members)
                fh.write(f"{k},{len(info.members)},{info.rho_star!r},{members}\n")


def log_ratio_distance(ps: PersonalizedSolution, j: int, l: int) -> float:
    """Largest per-product log price ratio between two segments' optima.

    This is the Chebyshev distance between log price vectors and satisfies
    the metric axioms; the diameter of a set of segments under it equals the
    log of the minimal price spread achievable for that set.
    """
    m = ps.m
    if not (0 <= j < m and 0 <= l < m):
        raise ValidationError(f"segment indices ({j}, {l}) out of range for m={m}")
    return float(np.max(np.abs(np.log(ps.prices[j]) - np.log(ps.prices[l]))))


def _distance_matrix(ps: PersonalizedSolution) -> np.ndarray:
    logp = np.log(ps.prices)
    return np.max(np.abs(logp[:, None, :] - logp[None, :, :]), axis=2)


def _cluster_info(ps: PersonalizedSolution, members) -> ClusterInfo:
    members = tuple(sorted(int(j) for j in members))
    prices = ps.prices[list(members)]
    p_lo = prices.min(axis=0)
    p_hi = prices.max(axis=0)
    robust_f = np.sqrt(p_lo * p_hi)
    ratios = prices / robust_f[None, :]
    rho_star = float(ratios.max() / ratios.min())
    mass = ps.thetas[list(members)] * ps.profits[list(members)]
    total = float(mass.sum())
    if not total > 0:
        raise ValidationError("cluster has zero personalized profit; weights undefined")
    economic_f = (mass / total) @ prices
    return ClusterInfo(
        members=members, rho_star=rho_star, robust_f=robust_f, economic_f=economic_f
    )


def _build_partition(ps: PersonalizedSolution, assignment: np.ndarray) -> ClusterPartition:
    k = int(assignment.max()) + 1
    infos = tuple(
        _cluster_info(ps, np.flatnonzero(assignment == kk)) for kk in range(k)
    )
    return ClusterPartition(
        assignment=assignment,
        clusters=infos,
        worst_rho=max(info.rho_star for info in infos),
    )


def _check_k(ps: PersonalizedSolution, k: int) -> None:
    if not 1 <= k <= ps.m:
        raise ValidationError(f"cluster count {k} must lie in [1, {ps.m}]")


def fpf_cluster(ps: PersonalizedSolution, k: int) -> ClusterPartition:
    """Farthest-point-first partition (greedy 2-approximate minimax diameter).

    The first center is segment 0; each further center is the segment
    farthest from the existing centers, all ties broken by the smallest
    index.  Segments then join their nearest center (ties to the lowest
    cluster id), except that a center always anchors its own cluster so no
    cluster can come out empty when price vectors coincide.
    """
    _check_k(ps, k)
    dist = _distance_matrix(ps)
    centers = [0]
    nearest = dist[0].copy()
    while len(centers) < k:
        masked = nearest.copy()
        masked[centers] = -1.0
        nxt = int(np.argmax(masked))
        centers.append(nxt)
        nearest = np.minimum(nearest, dist[nxt])
    assignment = np.argmin(dist[:, centers], axis=1)
    for kk, c in enumerate(centers):
        assignment[c] = kk
    return _build_partition(ps, assignment)


def _lloyd(x: np.ndarray, k: int, seed, max_iters: int):
    """Plain Lloyd iterations; returns (assignment, inertia history, repairs)."""
    rng = np.random.default_rng(seed)
    m = x.shape[0]
    centroids = x[rng.choice(m, size=k, replace=False)].copy()
    assignment = None
    history: list[float] = []
    repairs = 0
    for _ in range(max_iters):
        d2 = ((x[:, None, :] - centroids[None, :, :]) ** 2).sum(axis=2)
        new = d2.argmin(axis=1)
        for kk in range(k):
            if not (new == kk).any():
                own = d2[np.arange(m), new]
                for cand in np.argsort(-own, kind="stable"):
                    if (new == new[cand]).sum() > 1:
                        new[cand] = kk
                        repairs += 1
                        break
        if assignment is not None and np.array_equal(new, assignment):
            break
        assignment = new
        centroids = np.array([x[assignment == kk].mean(axis=0) for kk in range(k)])
        history.append(float(((x - centroids[assignment]) ** 2).sum()))
    return assignment, history, repairs


def kmeans_cluster(
    ps: PersonalizedSolution,
    k: int,
    max_iters: int = 100,
    seed: int = 0,
    log_space: bool = False,
) -> ClusterPartition:
    """Lloyd k-means on the personalized price vectors.

    Initialization picks ``k`` distinct segments from the given seed; an
    empty cluster is repaired by stealing the point farthest from its
    current centroid.  Iteration stops when assignments stabilize or after
    ``max_iters`` rounds.  ``log_space`` clusters log prices instead.
    """
    _check_k(ps, k)
    x = np.log(ps.prices) if log_space else ps.prices
    assignment, _, _ = _lloyd(x, k, seed, max_iters)
    return _build_partition(ps, np.asarray(assignment))


def clustered_factor_profit(
    market: MarketInstance, partition: ClusterPartition, factor_kind: str
) -> float:
    """Total profit when every cluster prices along its own factor.

    Each cluster is optimized as a sub-market with renormalized weights and
    its contribution is scaled back by the cluster's total weight, so the
    result is in the same units as :func:`factorprice.market.aggregate_profit`.
    """
    if factor_kind not in FACTOR_KINDS:
        raise ValidationError(f"factor kind must be one of {FACTOR_KINDS}")
    if partition.assignment.size != market.m:
        raise ValidationError("partition does not match the market")
    from .engine import personalized_optimize

    ps = personalized_optimize(market)
    total = 0.0
    for info in partition.clusters:
        members = list(info.members)
        weight = float(ps.thetas[members].sum())
        sub_segments = tuple(
            Segment(market.segments[j].theta / weight, market.segments[j].model)
            for j in members
        )
        sub_market = MarketInstance(n=market.n, segments=sub_segments)
        sub_ps = PersonalizedSolution(
            prices=ps.prices[members],
            profits=ps.profits[members],
            thetas=ps.thetas[members] / weight,
            aggregate=float((ps.thetas[members] / weight) @ ps.profits[members]),
        )
        if factor_kind == "economic":
            f = info.economic_f
        elif factor_kind == "robust":
            f = info.robust_f
        else:
            f = np.ones(market.n)
        res = factor_optimize(sub_market, f, ps=sub_ps)
        total += weight * res.profit
    return float(total)
