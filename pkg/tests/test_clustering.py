import math

import numpy as np
import pytest

import factorprice as fp
from factorprice.clustering import _distance_matrix, _lloyd
from oracles import brute_force_minimax_diameter


def flat_solution(prices, thetas=None):
    prices = np.asarray(prices, dtype=float)
    m = prices.shape[0]
    thetas = np.full(m, 1.0 / m) if thetas is None else np.asarray(thetas, float)
    profits = np.ones(m)
    return fp.PersonalizedSolution(
        prices=prices, profits=profits, thetas=thetas, aggregate=float(thetas @ profits)
    )


class TestDistance:
    def test_identical_segments(self):
        ps = flat_solution([[1.0, 2.0], [1.0, 2.0]])
        assert fp.log_ratio_distance(ps, 0, 1) == 0.0

    def test_single_product_ratio(self):
        ps = flat_solution([[1.0], [4.0]])
        assert fp.log_ratio_distance(ps, 0, 1) == pytest.approx(math.log(4.0))

    def test_metric_axioms(self):
        rng = np.random.default_rng(23)
        prices = rng.uniform(0.2, 5.0, size=(6, 3))
        ps = flat_solution(prices)
        for _ in range(100):
            i, j, k = rng.integers(0, 6, size=3)
            dij = fp.log_ratio_distance(ps, int(i), int(j))
            dji = fp.log_ratio_distance(ps, int(j), int(i))
            dik = fp.log_ratio_distance(ps, int(i), int(k))
            dkj = fp.log_ratio_distance(ps, int(k), int(j))
            assert dij == dji
            assert dij <= dik + dkj + 1e-12
            assert dij >= 0

    def test_diameter_equals_log_spread(self):
        # the worst pairwise distance inside a set is the log of its spread
        rng = np.random.default_rng(24)
        prices = rng.uniform(0.2, 5.0, size=(5, 4))
        ps = flat_solution(prices)
        dist = _distance_matrix(ps)
        members = [0, 2, 3]
        diameter = max(dist[i, j] for i in members for j in members)
        f = np.sqrt(prices[members].min(axis=0) * prices[members].max(axis=0))
        lo, hi = fp.price_spread(prices[members], f)
        assert diameter == pytest.approx(math.log(hi / lo), rel=1e-12)


class TestFpf:
    def test_singletons_at_full_k(self):
        ps = flat_solution([[1.0], [2.0], [3.0]])
        part = fp.fpf_cluster(ps, 3)
        assert part.k == 3
        assert part.worst_rho == pytest.approx(1.0)
        assert sorted(len(c.members) for c in part.clusters) == [1, 1, 1]

    def test_single_cluster_is_whole_market(self):
        prices = [[1.0], [2.0], [5.0]]
        ps = flat_solution(prices)
        part = fp.fpf_cluster(ps, 1)
        assert part.k == 1
        assert part.worst_rho == pytest.approx(5.0)

    def test_two_groups_recovered(self):
        e = math.e
        ps = flat_solution([[1.0], [1.1], [e], [1.1 * e]])
        part = fp.fpf_cluster(ps, 2)
        groups = {frozenset(c.members) for c in part.clusters}
        assert groups == {frozenset({0, 1}), frozenset({2, 3})}
        assert part.worst_rho == pytest.approx(1.1)
        # brute force confirms no 2-partition does better
        dist = _distance_matrix(ps)
        best = brute_force_minimax_diameter(dist, 2)
        assert math.log(part.worst_rho) == pytest.approx(best, abs=1e-12)

    def test_two_approximation_bound(self):
        rng = np.random.default_rng(31)
        for _ in range(15):
            m = int(rng.integers(3, 9))
            k = int(rng.integers(2, 4))
            if k > m:
                continue
            prices = rng.uniform(0.2, 8.0, size=(m, int(rng.integers(1, 4))))
            ps = flat_solution(prices)
            part = fp.fpf_cluster(ps, k)
            dist = _distance_matrix(ps)
            achieved = max(
                max((dist[i, j] for i in c.members for j in c.members), default=0.0)
                for c in part.clusters
            )
            optimal = brute_force_minimax_diameter(dist, k)
            assert achieved <= 2.0 * optimal + 1e-12

    def test_duplicate_price_vectors_keep_clusters_nonempty(self):
        ps = flat_solution([[1.0], [1.0], [3.0]])
        part = fp.fpf_cluster(ps, 3)
        assert all(len(c.members) == 1 for c in part.clusters)

    def test_k_out_of_range(self):
        ps = flat_solution([[1.0], [2.0]])
        with pytest.raises(fp.ValidationError):
            fp.fpf_cluster(ps, 0)
        with pytest.raises(fp.ValidationError):
            fp.fpf_cluster(ps, 3)


class TestKmeans:
    def test_full_k_gives_singletons(self):
        ps = flat_solution([[1.0], [2.0], [3.0], [4.0]])
        part = fp.kmeans_cluster(ps, 4, seed=5)
        assert sorted(len(c.members) for c in part.clusters) == [1, 1, 1, 1]

    def test_separated_groups_recovered(self):
        pts = [[1.0, 1.0], [1.05, 1.0], [1.0, 1.08], [10.0, 10.0], [10.1, 10.0], [10.0, 10.2]]
        ps = flat_solution(pts)
        part = fp.kmeans_cluster(ps, 2, seed=1)
        groups = {frozenset(c.members) for c in part.clusters}
        assert groups == {frozenset({0, 1, 2}), frozenset({3, 4, 5})}

    def test_inertia_nonincreasing_without_repairs(self):
        rng = np.random.default_rng(37)
        checked = 0
        for seed in range(12):
            prices = rng.uniform(0.5, 5.0, size=(6, 3))
            _, history, repairs = _lloyd(prices, 2, seed, 100)
            if repairs:
                continue
            checked += 1
            assert all(b <= a + 1e-12 for a, b in zip(history, history[1:]))
        assert checked >= 8

    def test_log_space_flag(self):
        # ratio structure: log space separates {1, 1.2} from {50, 60}
        ps = flat_solution([[1.0], [1.2], [50.0], [60.0]])
        part = fp.kmeans_cluster(ps, 2, seed=0, log_space=True)
        groups = {frozenset(c.members) for c in part.clusters}
        assert groups == {frozenset({0, 1}), frozenset({2, 3})}

    def test_deterministic_given_seed(self):
        rng = np.random.default_rng(41)
        prices = rng.uniform(0.5, 5.0, size=(6, 2))
        ps = flat_solution(prices)
        a = fp.kmeans_cluster(ps, 2, seed=9)
        b = fp.kmeans_cluster(ps, 2, seed=9)
        np.testing.assert_array_equal(a.assignment, b.assignment)


class TestClusteredProfit:
    def test_one_cluster_matches_plain_factor(self):
        rng = np.random.default_rng(53)
        market = fp.gen_linear_instance(3, 4, rng)
        ps = fp.personalized_optimize(market)
        part = fp.fpf_cluster(ps, 1)
        for kind, f in (
            ("economic", fp.economic_factor(market, ps)),
            ("robust", fp.robust_factor(ps)[0]),
            ("uniform", np.ones(3)),
        ):
            plain = fp.factor_optimize(market, f, ps=ps).profit
            clustered = fp.clustered_factor_profit(market, part, kind)
            assert clustered == pytest.approx(plain, rel=1e-9)

    def test_full_k_recovers_personalized(self):
        rng = np.random.default_rng(54)
        for gen in (fp.gen_linear_instance, fp.gen_lcmnl_instance):
            market = gen(3, 4, rng)
            ps = fp.personalized_optimize(market)
            part = fp.fpf_cluster(ps, market.m)
            for kind in ("economic", "robust"):
                clustered = fp.clustered_factor_profit(market, part, kind)
                assert clustered == pytest.approx(ps.aggregate, abs=1e-7)

    def test_more_clusters_never_hurt_much(self):
        rng = np.random.default_rng(55)
        market = fp.gen_lcmnl_instance(3, 5, rng)
        ps = fp.personalized_optimize(market)
        whole = fp.fpf_cluster(ps, 1)
        split = fp.fpf_cluster(ps, market.m)
        for kind in ("economic", "robust", "uniform"):
            low = fp.clustered_factor_profit(market, whole, kind)
            high = fp.clustered_factor_profit(market, split, kind)
            assert high >= low - 1e-9

    def test_single_product_example_uniform_improves(self):
        e = math.e
        market = fp.MarketInstance(
            n=1,
            segments=tuple(
                fp.Segment(0.25, fp.LinearModel(a=[2.0 * v], B=[[1.0]]))
                for v in (1.0, 1.1, e, 1.1 * e)
            ),
        )
        ps = fp.personalized_optimize(market)
        np.testing.assert_allclose(ps.prices.ravel(), [1.0, 1.1, e, 1.1 * e])
        part = fp.fpf_cluster(ps, 2)
        clustered = fp.clustered_factor_profit(market, part, "uniform")
        plain = fp.factor_optimize(market, np.ones(1), ps=ps).profit
        assert clustered >= plain - 1e-12

    def test_per_cluster_guarantee(self):
        rng = np.random.default_rng(56)
        market = fp.gen_linear_instance(2, 5, rng)
        ps = fp.personalized_optimize(market)
        part = fp.fpf_cluster(ps, 2)
        for info in part.clusters:
            members = list(info.members)
            weight = float(ps.thetas[members].sum())
            sub = fp.MarketInstance(
                n=market.n,
                segments=tuple(
                    fp.Segment(market.segments[j].theta / weight, market.segments[j].model)
                    for j in members
                ),
            )
            sub_ps = fp.personalized_optimize(sub)
            profile = fp.check_a1(sub, sub_ps, info.robust_f, grid_size=200)
            res = fp.factor_optimize(sub, info.robust_f, ps=sub_ps)
            if profile.ok:
                beta = 1.0 + math.log(info.rho_star)
                assert sub_ps.aggregate <= beta * res.profit * (1 + 1e-6)

    def test_unknown_kind_rejected(self):
        ps = flat_solution([[1.0], [2.0]])
        market = fp.MarketInstance(
            n=1,
            segments=(
                fp.Segment(0.5, fp.LinearModel(a=[2.0], B=[[1.0]])),
                fp.Segment(0.5, fp.LinearModel(a=[4.0], B=[[1.0]])),
            ),
        )
        part = fp.fpf_cluster(ps, 1)
        with pytest.raises(fp.ValidationError):
            fp.clustered_factor_profit(market, part, "mystery")


class TestPartitionSerialization:
    def test_csv_round_structure(self, tmp_path):
        ps = flat_solution([[1.0], [1.1], [3.0], [3.3]])
        part = fp.fpf_cluster(ps, 2)
        out = tmp_path / "partition.csv"
        part.to_csv(out)
        text = out.read_text().splitlines()
        assert text[0] == "segment_id,cluster_id"
        assert len(text) == 4 + 1 + 1 + 1 + part.k  # rows + blank + 2 headers
        assert text[5] == ""
        assert text[6] == "cluster_id,size,rho_star,members"

    def test_partition_validation(self):
        info = fp.ClusterInfo(
            members=(0, 1), rho_star=1.0, robust_f=np.ones(1), economic_f=np.ones(1)
        )
        with pytest.raises(fp.ValidationError):
            fp.ClusterPartition(
                assignment=np.array([0, 1]), clusters=(info,), worst_rho=1.0
            )
