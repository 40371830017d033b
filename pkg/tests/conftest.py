import numpy as np
import pytest

import factorprice as fp


@pytest.fixture
def two_product_linear():
    return fp.LinearModel(a=[1.0, 1.0], B=[[2.0, -1.0], [-1.0, 2.0]])


@pytest.fixture
def two_segment_market():
    """One product, intercepts 1 and 2, equal weights."""
    return fp.MarketInstance(
        n=1,
        segments=(
            fp.Segment(0.5, fp.LinearModel(a=[1.0], B=[[1.0]])),
            fp.Segment(0.5, fp.LinearModel(a=[2.0], B=[[1.0]])),
        ),
    )


def random_market(rng, kind, n_max=6, m_max=5):
    n = int(rng.integers(1, n_max + 1))
    m = int(rng.integers(1, m_max + 1))
    gen = fp.gen_linear_instance if kind == "linear" else fp.gen_lcmnl_instance
    return gen(n, m, rng)
