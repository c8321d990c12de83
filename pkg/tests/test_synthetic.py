import numpy as np
import pytest

from satoris.subspace import stability_series
from satoris.synthetic import SyntheticGenerator, generate_synthetic_days


def test_zero_drift_days_identical():
    days = generate_synthetic_days(SyntheticGenerator(rows=30, cols=12, rank=4, theta=0.0, seed=1), 3)
    assert all(np.array_equal(days[0], d) for d in days[1:])
    assert all(m == pytest.approx(1.0, abs=1e-10) for m, _ in stability_series(days, 4))


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_drift_overlap_near_cos_theta(seed):
    gen = SyntheticGenerator(rows=60, cols=24, rank=5, theta=0.2, seed=seed)
    days = generate_synthetic_days(gen, 4)
    for mean, _ in stability_series(days, gen.rank):
        assert abs(mean - np.cos(0.2)) <= 0.05


@pytest.mark.parametrize(
    "gen",
    [
        SyntheticGenerator(),
        SyntheticGenerator(rows=20, cols=10, rank=3, noise=0.3, seed=4),
        SyntheticGenerator(rows=20, cols=10, rank=8, shared=False, seed=5),
    ],
)
def test_entries_nonnegative_finite(gen):
    for d in generate_synthetic_days(gen, 3):
        assert d.shape == (gen.rows, gen.cols)
        assert np.all(np.isfinite(d)) and d.min() >= 0.0


def test_deterministic_per_seed():
    gen = SyntheticGenerator(rows=20, cols=10, rank=3, noise=0.1, seed=9)
    a = generate_synthetic_days(gen, 3)
    b = generate_synthetic_days(gen, 3)
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    c = generate_synthetic_days(SyntheticGenerator(rows=20, cols=10, rank=3, noise=0.1, seed=10), 3)
    assert not np.array_equal(a[0], c[0])


def test_independent_days_lose_overlap():
    gen = SyntheticGenerator(rows=60, cols=24, rank=5, shared=False, seed=2)
    days = generate_synthetic_days(gen, 3)
    # the dominant positive profile keeps one cosine high; the rest are random
    for mean, _ in stability_series(days, 5):
        assert mean < 0.8


@pytest.mark.parametrize(
    "kwargs",
    [dict(rank=0), dict(rank=30), dict(theta=-0.1), dict(theta=2.0), dict(noise=-1.0),
     dict(rows=10, cols=8, rank=5, theta=0.1), dict(rows=0)],
)
def test_invalid_generator(kwargs):
    with pytest.raises(ValueError):
        SyntheticGenerator(**kwargs)


def test_invalid_day_count():
    with pytest.raises(ValueError):
        generate_synthetic_days(SyntheticGenerator(rows=10, cols=8, rank=2), 0)
