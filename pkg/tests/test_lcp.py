import numpy as np
import pytest

import factorprice as fp
from factorprice.lcp import linear_ray_values, solve_lcp
from oracles import lcp_enumerate, linear_realized_profit_enum


class TestAdjustment:
    def test_interior_point_needs_no_adjustment(self):
        model = fp.LinearModel(a=[1.0], B=[[1.0]])
        res = fp.lcp_adjust(model, [0.5])
        np.testing.assert_array_equal(res.y, [0.0])
        assert res.adjusted_profit == pytest.approx(0.25)

    def test_single_product_boundary(self):
        model = fp.LinearModel(a=[1.0], B=[[1.0]])
        res = fp.lcp_adjust(model, [2.0])
        np.testing.assert_allclose(res.y, [1.0])
        np.testing.assert_allclose(res.adjusted_demand, [0.0])
        assert res.adjusted_profit == pytest.approx(0.0)

    def test_two_product_partial_shutdown(self):
        model = fp.LinearModel(a=[1.0, 0.1], B=[[2.0, -1.0], [-1.0, 2.0]])
        p = np.array([0.6, 0.6])
        raw = model.demand(p)
        assert raw[1] < 0  # second product infeasible at these prices
        res = fp.lcp_adjust(model, p)
        y_ref, w_ref, _ = lcp_enumerate(model.B, raw)
        np.testing.assert_allclose(res.y, y_ref, atol=1e-9)
        np.testing.assert_allclose(res.adjusted_demand, w_ref, atol=1e-9)
        assert np.max(np.abs(res.y * res.adjusted_demand)) <= 1e-9
        assert res.adjusted_profit >= float(p @ raw)

    def test_profit_identity(self):
        # realized profit equals raw profit plus the slope-weighted correction
        model = fp.LinearModel(a=[1.0, 0.1], B=[[2.0, -1.0], [-1.0, 2.0]])
        p = np.array([0.6, 0.6])
        res = fp.lcp_adjust(model, p)
        raw_profit = float(p @ model.demand(p))
        correction = float(p @ (model.B @ res.y))
        assert res.adjusted_profit == pytest.approx(raw_profit + correction, abs=1e-12)
        assert correction >= -1e-9


class TestAgainstEnumeration:
    def test_random_instances(self):
        rng = np.random.default_rng(21)
        for _ in range(60):
            n = int(rng.integers(1, 9))
            market = fp.gen_linear_instance(n, 1, rng)
            model = market.segments[0].model
            p = rng.uniform(0.0, 3.0, size=n)
            res = fp.lcp_adjust(model, p)
            y_ref, w_ref, _ = lcp_enumerate(model.B, model.demand(p))
            np.testing.assert_allclose(res.y, y_ref, atol=1e-8)
            np.testing.assert_allclose(res.adjusted_demand, w_ref, atol=1e-8)
            assert np.max(np.abs(res.y * res.adjusted_demand), initial=0.0) <= 1e-9
            assert res.adjusted_profit >= float(p @ model.demand(p)) - 1e-9

    def test_general_spd_matrices(self):
        # positive off-diagonals exercise supports the generator never makes
        rng = np.random.default_rng(34)
        for _ in range(40):
            n = int(rng.integers(1, 7))
            g = rng.normal(size=(n, n))
            B = g @ g.T + n * np.eye(n)
            a = rng.uniform(0.1, 2.0, size=n)
            q = a - B @ rng.uniform(0.0, 2.0, size=n)
            y, w, _ = solve_lcp(B, q)
            y_ref, w_ref, _ = lcp_enumerate(B, q)
            np.testing.assert_allclose(y, y_ref, atol=1e-8)
            np.testing.assert_allclose(w, w_ref, atol=1e-8)


class TestRaySweep:
    def test_matches_pointwise_adjustment(self):
        rng = np.random.default_rng(8)
        for _ in range(25):
            n = int(rng.integers(1, 7))
            market = fp.gen_linear_instance(n, 1, rng)
            model = market.segments[0].model
            f = rng.uniform(0.3, 3.0, size=n)
            qs = np.geomspace(1e-2, 30.0, 64)
            profits, fdem = linear_ray_values(model, f, qs)
            for idx in (0, 13, 31, 47, 63):
                res = fp.lcp_adjust(model, qs[idx] * f)
                assert profits[idx] == pytest.approx(res.adjusted_profit, abs=1e-9)
                assert fdem[idx] == pytest.approx(
                    float(f @ res.adjusted_demand), abs=1e-9
                )

    def test_matches_enumeration_along_ray(self):
        from oracles import linear_ray_profits_enum

        rng = np.random.default_rng(9)
        for _ in range(10):
            n = int(rng.integers(1, 6))
            market = fp.gen_linear_instance(n, 1, rng)
            model = market.segments[0].model
            f = rng.uniform(0.3, 3.0, size=n)
            qs = np.geomspace(1e-2, 50.0, 200)
            profits, _ = linear_ray_values(model, f, qs)
            ref = linear_ray_profits_enum(model.a, model.B, f, qs)
            np.testing.assert_allclose(profits, ref, atol=1e-8)

    def test_profit_dies_beyond_choke_prices(self):
        model = fp.LinearModel(a=[1.0], B=[[1.0]])
        profits, fdem = linear_ray_values(model, np.ones(1), np.array([0.5, 1.0, 5.0]))
        np.testing.assert_allclose(profits, [0.25, 0.0, 0.0], atol=1e-12)
        np.testing.assert_allclose(fdem, [0.5, 0.0, 0.0], atol=1e-12)


class TestResultValidation:
    def test_negative_adjustment_rejected(self):
        with pytest.raises(fp.NumericError):
            fp.LcpResult(
                y=np.array([-0.1]), adjusted_demand=np.array([0.0]), adjusted_profit=0.0
            )

    def test_complementarity_violation_rejected(self):
        with pytest.raises(fp.NumericError):
            fp.LcpResult(
                y=np.array([1.0]), adjusted_demand=np.array([1.0]), adjusted_profit=1.0
            )

    def test_support_lists_positive_components(self):
        res = fp.LcpResult(
            y=np.array([0.0, 0.5]),
            adjusted_demand=np.array([1.0, 0.0]),
            adjusted_profit=1.0,
        )
        assert res.support == (1,)
