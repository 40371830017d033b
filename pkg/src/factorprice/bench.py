"""Randomized market generators and the benchmark harness.

Instance generation is reproducible from a single 64-bit seed: the stream
for cell ``(ci)`` instance ``(ii)`` is ``SeedSequence(seed, spawn_key=(ci,
ii))`` fed to numpy's default generator, so any instance can be rebuilt in
isolation and results do not depend on scheduling.  The harness reports,
for every strategy, the average percentage of the personalized-pricing
profit achieved over a grid of (products, segments) cells.
"""

from __future__ import annotations

import concurrent.futures
import csv
import os
import time
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .clustering import clustered_factor_profit, fpf_cluster, kmeans_cluster
from .engine import (
    economic_factor,
    factor_optimize,
    nonpersonalized_heuristic,
    personalized_optimize,
    robust_factor,
)
from .errors import FactorPriceError, NumericError, ValidationError
from .market import LinearModel, MarketInstance, MnlSegmentModel, Segment

FAMILIES = ("linear", "linear-cluster", "lcmnl", "lcmnl-cluster", "nonlinear")
STRATEGIES = (
    "uniform",
    "linear",
    "economic",
    "robust",
    "nonpersonalized",
    "clustered-economic",
    "clustered-robust",
)

#: Ratio of consecutive per-size utility increments in the bundle-size
#: generator.  Keeps the utility curve concave enough that the induced
#: intercept vector ``B u`` stays positive (non-positive draws are redrawn
#: jointly with the slope matrix).
SIZE_UTILITY_DECAY = 0.75
_SIZE_UTILITY_JITTER = (0.75, 1.25)

_REDRAW_CAP = 1000


@dataclass(frozen=True)
class ExperimentConfig:
    """Declarative description of one experiment grid."""

    family: str
    n_values: tuple[int, ...]
    m_values: tuple[int, ...]
    instances_per_cell: int = 20
    seed: int = 0
    strategies: tuple[str, ...] = ("uniform", "economic", "robust")
    k: int = 2

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValidationError(f"unknown family {self.family!r}")
        n_values = tuple(int(v) for v in self.n_values)
        m_values = tuple(int(v) for v in self.m_values)
        if not n_values or min(n_values) < 1 or not m_values or min(m_values) < 1:
            raise ValidationError("n_values and m_values must be positive and non-empty")
        if self.instances_per_cell < 1:
            raise ValidationError("instances_per_cell must be at least 1")
        strategies = tuple(self.strategies)
        for s in strategies:
            if s not in STRATEGIES:
                raise ValidationError(f"unknown strategy {s!r}")
        if self.k < 1:
            raise ValidationError("cluster count k must be at least 1")
        object.__setattr__(self, "n_values", n_values)
        object.__setattr__(self, "m_values", m_values)
        object.__setattr__(self, "strategies", strategies)
        object.__setattr__(self, "seed", int(self.seed))
        object.__setattr__(self, "k", int(self.k))


@dataclass(frozen=True)
class CellResult:
    """Per-(cell, strategy) summary of profit percentages."""

    family: str
    n: int
    m: int
    strategy: str
    mean_pct: float
    std_pct: float
    instances: int
    errors: int
    runtime_ms: float | None = None

    def __post_init__(self):
        if not -1e-6 <= self.mean_pct <= 100.0 + 1e-6:
            raise ValidationError(
                f"mean percentage {self.mean_pct!r} outside [0, 100]"
            )


def _gen_thetas(m: int, rng) -> np.ndarray:
    x = rng.uniform(size=m)
    for _ in range(_REDRAW_CAP):
        if np.all(x > 0):
            break
        x = rng.uniform(size=m)
    return x / x.sum()


def _gen_m_matrix(n: int, rng) -> np.ndarray:
    """Symmetric diagonally dominant matrix with nonpositive off-diagonals."""
    upper = -np.triu(rng.uniform(0.0, 1.0 / n, size=(n, n)), 1)
    b = upper + upper.T
    np.fill_diagonal(b, -b.sum(axis=1) + rng.uniform(0.5, 1.5, size=n))
    return b


def _positive_uniform(rng, size) -> np.ndarray:
    for _ in range(_REDRAW_CAP):
        x = rng.uniform(size=size)
        if np.all(x > 0):
            return x
    raise NumericError("could not draw strictly positive uniforms")


def gen_linear_instance(n: int, m: int, rng) -> MarketInstance:
    """Random linear market whose slope matrices have nonnegative inverses.

    Weights are normalized uniforms; intercepts are uniform on ``(0, 1]``;
    each slope matrix gets off-diagonal entries ``-U[0, 1/n]`` (symmetrized)
    and a diagonal of the absolute row sum plus ``U[0.5, 1.5]``, which makes
    it positive definite with the substitutability structure the guarantee
    checks expect for every positive factor.
    """
    thetas = _gen_thetas(m, rng)
    segments = []
    for j in range(m):
        a = _positive_uniform(rng, n)
        b = _gen_m_matrix(n, rng)
        segments.append(Segment(float(thetas[j]), LinearModel(a=a, B=b)))
    return MarketInstance(n=n, segments=tuple(segments))


def gen_lcmnl_instance(n: int, m: int, rng) -> MarketInstance:
    """Random latent-class logit market.

    Per product ``i`` a spread ``sigma_i ~ U[0, 1]`` is drawn; the intrinsic
    utility of product ``i`` for segment ``j`` is ``ln((1 - sigma_i) v_ij /
    n)`` or ``ln((1 + sigma_i) v_ij / n)`` with equal probability, where
    ``v_ij ~ U[0, 10]`` (zeros redrawn to keep the log finite).  Price
    sensitivities are the sum of two ``U(0, 1)`` draws, i.e. symmetric
    triangular on ``(0, 2)``.
    """
    thetas = _gen_thetas(m, rng)
    sigma = rng.uniform(size=n)
    v = rng.uniform(0.0, 10.0, size=(m, n))
    for _ in range(_REDRAW_CAP):
        if np.all(v > 0):
            break
        v = np.where(v > 0, v, rng.uniform(0.0, 10.0, size=(m, n)))
    low_side = rng.random(size=(m, n)) < 0.5
    factor = np.where(low_side, 1.0 - sigma[None, :], 1.0 + sigma[None, :])
    a = np.log(factor * v / n)
    b = rng.random(size=(m, n)) + rng.random(size=(m, n))
    for _ in range(_REDRAW_CAP):
        if np.all(b > 0):
            break
        b = np.where(b > 0, b, rng.random(size=(m, n)) + rng.random(size=(m, n)))
    segments = [
        Segment(float(thetas[j]), MnlSegmentModel(a=a[j], b=b[j])) for j in range(m)
    ]
    return MarketInstance(n=n, segments=tuple(segments))


def gen_nonlinear_instance(n: int, m: int, rng) -> MarketInstance:
    """Random per-size bundle market in the linear-demand representation.

    Product ``i`` stands for a bundle of ``i + 1`` units.  Per segment the
    gross utilities over sizes come from strictly decreasing positive
    increments (geometric decay with multiplicative jitter), so the utility
    curve is strictly increasing with strictly decreasing per-unit value;
    slope matrices are generated as in :func:`gen_linear_instance` and the
    intercept is ``B u``, positive by the decay/dominance margins.
    """
    thetas = _gen_thetas(m, rng)
    lo, hi = _SIZE_UTILITY_JITTER
    segments = []
    for j in range(m):
        for _ in range(_REDRAW_CAP):
            b = _gen_m_matrix(n, rng)
            jitter = rng.uniform(lo, hi, size=n)
            inc = np.sort(jitter * SIZE_UTILITY_DECAY ** np.arange(n))[::-1]
            if n > 1 and not np.all(np.diff(inc) < 0):
                continue  # tied increments: redraw
            u = np.cumsum(inc)
            a = b @ u
            if np.all(a > 0):
                break
        else:
            raise NumericError("could not draw a positive intercept vector")
        segments.append(Segment(float(thetas[j]), LinearModel(a=a, B=b)))
    return MarketInstance(n=n, segments=tuple(segments))


_GENERATORS = {
    "linear": gen_linear_instance,
    "linear-cluster": gen_linear_instance,
    "lcmnl": gen_lcmnl_instance,
    "lcmnl-cluster": gen_lcmnl_instance,
    "nonlinear": gen_nonlinear_instance,
}


def instance_rng(seed: int, cell_index: int, instance_index: int):
    """Independent generator for one instance of one cell."""
    return np.random.default_rng(
        np.random.SeedSequence(seed, spawn_key=(cell_index, instance_index))
    )


def build_instance(config: ExperimentConfig, cell_index: int, n: int, m: int, instance_index: int):
    """Rebuild a single experiment instance (and its derived seed) offline."""
    rng = instance_rng(config.seed, cell_index, instance_index)
    market = _GENERATORS[config.family](n, m, rng)
    aux_seed = int(rng.integers(2**63))
    return market, aux_seed


def _strategy_columns(config: ExperimentConfig) -> list[str]:
    cols: list[str] = []
    for s in config.strategies:
        if s.startswith("clustered-"):
            cols.extend([f"{s}-fpf", f"{s}-kmeans"])
        else:
            cols.append(s)
    return cols


def _evaluate_instance(market: MarketInstance, config: ExperimentConfig, aux_seed: int):
    """Percent-of-personalized profit for each requested strategy."""
    ps = personalized_optimize(market)
    if not ps.aggregate > 0:
        raise NumericError("personalized profit is not positive")
    timings: dict[str, float] = {}
    pcts: dict[str, float] = {}

    def record(name: str, fn) -> None:
        t0 = time.perf_counter()
        profit = fn()
        timings[name] = (time.perf_counter() - t0) * 1e3
        pcts[name] = 100.0 * profit / ps.aggregate

    for strat in config.strategies:
        if strat == "uniform":
            record(strat, lambda: factor_optimize(market, np.ones(market.n), ps=ps).profit)
        elif strat == "linear":
            ramp = np.arange(1.0, market.n + 1.0)
            record(strat, lambda: factor_optimize(market, ramp, ps=ps).profit)
        elif strat == "economic":
            record(strat, lambda: factor_optimize(market, economic_factor(market, ps), ps=ps).profit)
        elif strat == "robust":
            record(strat, lambda: factor_optimize(market, robust_factor(ps)[0], ps=ps).profit)
        elif strat == "nonpersonalized":
            record(strat, lambda: nonpersonalized_heuristic(market)[1])
        else:
            kind = strat.split("-", 1)[1]
            k = min(config.k, market.m)
            record(
                f"{strat}-fpf",
                lambda: clustered_factor_profit(market, fpf_cluster(ps, k), kind),
            )
            record(
                f"{strat}-kmeans",
                lambda: clustered_factor_profit(
                    market, kmeans_cluster(ps, k, seed=aux_seed), kind
                ),
            )
    return pcts, timings


def _run_one(config: ExperimentConfig, cell_index: int, n: int, m: int, instance_index: int):
    market, aux_seed = build_instance(config, cell_index, n, m, instance_index)
    return _evaluate_instance(market, config, aux_seed)


def _resolve_workers(workers: int | None) -> int:
    if workers is None:
        env = os.environ.get("FACTOR_PRICE_THREADS", "")
        workers = int(env) if env.strip() else 1
    return max(1, int(workers))


def run_experiment(
    config: ExperimentConfig,
    csv_path=None,
    workers: int | None = None,
    timings: bool = False,
    dump_dir=None,
) -> list[CellResult]:
    """Run every cell of ``config`` and summarize percentages per strategy.

    Instances may be evaluated by a thread pool (``workers`` or the
    ``FACTOR_PRICE_THREADS`` environment variable); results are reduced in
    (cell, instance) order, so output is identical at any worker count.
    Per-instance failures are excluded with a warning, but a cell errors out
    if more than 10 percent of its instances fail.  ``timings`` adds wall
    clock means to the CSV at the cost of byte-reproducibility.
    """
    workers = _resolve_workers(workers)
    cells = [(n, m) for n in config.n_values for m in config.m_values]
    columns = _strategy_columns(config)
    results: list[CellResult] = []
    pool = (
        concurrent.futures.ThreadPoolExecutor(max_workers=workers)
        if workers > 1
        else None
    )
    try:
        for cell_index, (n, m) in enumerate(cells):
            jobs = list(range(config.instances_per_cell))
            if pool is not None:
                futures = [
                    pool.submit(_run_one, config, cell_index, n, m, ii) for ii in jobs
                ]
                raw = []
                for ii, fut in enumerate(futures):
                    try:
                        raw.append(fut.result())
                    except (FactorPriceError, np.linalg.LinAlgError) as exc:
                        raw.append(exc)
            else:
                raw = []
                for ii in jobs:
                    try:
                        raw.append(_run_one(config, cell_index, n, m, ii))
                    except (FactorPriceError, np.linalg.LinAlgError) as exc:
                        raw.append(exc)
            good: list[dict] = []
            times: list[dict] = []
            errors = 0
            for ii, item in enumerate(raw):
                if isinstance(item, Exception):
                    errors += 1
                    warnings.warn(
                        f"instance (n={n}, m={m}, i={ii}) failed: {item}", stacklevel=2
                    )
                else:
                    good.append(item[0])
                    times.append(item[1])
            if errors > 0.1 * config.instances_per_cell:
                raise NumericError(
                    f"cell (n={n}, m={m}) failed on {errors} of "
                    f"{config.instances_per_cell} instances"
                )
            if dump_dir is not None:
                _dump_cell(dump_dir, config, cell_index, n, m, good)
            for col in columns:
                vals = np.array([g[col] for g in good])
                elapsed = (
                    float(np.mean([t[col] for t in times])) if timings and times else None
                )
                results.append(
                    CellResult(
                        family=config.family,
                        n=n,
                        m=m,
                        strategy=col,
                        mean_pct=float(vals.mean()),
                        std_pct=float(vals.std()),
                        instances=len(good),
                        errors=errors,
                        runtime_ms=elapsed,
                    )
                )
    except KeyboardInterrupt:
        if csv_path is not None:
            write_results_csv(csv_path, results, incomplete=True)
        raise
    finally:
        if pool is not None:
            pool.shutdown(wait=False, cancel_futures=True)
    if csv_path is not None:
        write_results_csv(csv_path, results)
    return results


def _dump_cell(dump_dir, config, cell_index, n, m, good) -> None:
    os.makedirs(dump_dir, exist_ok=True)
    path = os.path.join(dump_dir, f"{config.family}_n{n}_m{m}.csv")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        cols = sorted(good[0]) if good else []
        writer.writerow(["instance", *cols])
        for ii, row in enumerate(good):
            writer.writerow([ii, *[repr(row[c]) for c in cols]])


def write_results_csv(path, results, incomplete: bool = False) -> None:
    """Emit the ``family,n,m,strategy,...`` summary table.

    The runtime column is left empty unless timings were collected, keeping
    default output byte-identical across runs and worker counts.
    """
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("family,n,m,strategy,mean_pct,std_pct,instances,errors,runtime_ms\n")
        for r in results:
            rt = "" if r.runtime_ms is None else f"{r.runtime_ms:.3f}"
            fh.write(
                f"{r.family},{r.n},{r.m},{r.strategy},{r.mean_pct:.6f},"
                f"{r.std_pct:.6f},{r.instances},{r.errors},{rt}\n"
            )
        if incomplete:
            fh.write("INCOMPLETE\n")


_PRESETS = {
    "linear": ExperimentConfig(
        family="linear",
        n_values=(5, 10, 20),
        m_values=(2, 4, 6),
        seed=1301,
        strategies=("uniform", "economic", "robust", "nonpersonalized"),
    ),
    "linear-cluster": ExperimentConfig(
        family="linear-cluster",
        n_values=(5, 10),
        m_values=(6,),
        seed=1302,
        strategies=("economic", "robust", "clustered-economic", "clustered-robust"),
        k=2,
    ),
    "lcmnl": ExperimentConfig(
        family="lcmnl",
        n_values=(5, 10, 20),
        m_values=(2, 4, 6),
        seed=1303,
        strategies=("uniform", "economic", "robust", "nonpersonalized"),
    ),
    "lcmnl-cluster": ExperimentConfig(
        family="lcmnl-cluster",
        n_values=(5, 10),
        m_values=(6,),
        seed=1304,
        strategies=("economic", "robust", "clustered-economic", "clustered-robust"),
        k=2,
    ),
    "nonlinear": ExperimentConfig(
        family="nonlinear",
        n_values=(10, 30, 50),
        m_values=(2, 4, 6),
        seed=1305,
        strategies=("linear", "economic", "robust", "nonpersonalized"),
    ),
}


def preset(name: str, **overrides) -> ExperimentConfig:
    """Builtin experiment grid by name; keyword overrides replace fields."""
    if name not in _PRESETS:
        raise ValidationError(f"unknown preset {name!r}; choose from {sorted(_PRESETS)}")
    cfg = _PRESETS[name]
    return replace(cfg, **overrides) if overrides else cfg
