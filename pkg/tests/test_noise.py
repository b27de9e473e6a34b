import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from rosctl.errors import ConfigurationError, DomainError, ResourceLimitError
from rosctl.harness import summary_stats
from rosctl.noise import (
    covariance_rosenblatt,
    fgn_autocovariance,
    gen_brownian,
    gen_ensemble,
    gen_fgn,
    gen_rosenblatt,
    path_seed,
    self_similarity_stat,
)


def _lag1_products(h, n_paths, n, seed):
    ens = gen_ensemble(f"fbm({h})", n, float(n), n_paths, seed)
    inc = np.diff(ens.values, axis=1)
    return (inc[:, :-1] * inc[:, 1:]).mean(axis=1)


def test_brownian_fgn_lag1_uncorrelated():
    per_path = _lag1_products(0.5, 32, 1 << 12, seed=3)
    se = per_path.std(ddof=1) / math.sqrt(per_path.size)
    assert abs(per_path.mean()) < 3 * se


def test_fgn_lag1_autocovariance():
    target = (2 ** 1.75 - 2) / 2
    assert fgn_autocovariance(1, 0.875) == pytest.approx(target, rel=1e-14)
    # 64 independent paths of 2^14 increments, about 10^6 in total
    per_path = _lag1_products(0.875, 64, 1 << 14, seed=11)
    se = per_path.std(ddof=1) / math.sqrt(per_path.size)
    assert abs(per_path.mean() - 0.68179) < 3 * se


@given(st.floats(0.05, 0.95), st.integers(0, 2 ** 32))
def test_fgn_starts_at_zero_and_is_deterministic(h, seed):
    a = gen_fgn(h, 64, 0.1, seed)
    b = gen_fgn(h, 64, 0.1, seed)
    assert a.values[0] == 0.0
    assert np.array_equal(a.values, b.values)


def test_fgn_requires_power_of_two():
    with pytest.raises(ConfigurationError):
        gen_fgn(0.7, 100, 0.01, 0)


def test_brownian_increment_variance():
    path = gen_brownian(1 << 16, 0.01, seed=5)
    inc = path.increments
    assert path.values[0] == 0.0
    assert np.var(inc) == pytest.approx(0.01, rel=0.03)


@given(st.floats(0.51, 0.99), st.integers(0, 2 ** 32))
def test_rosenblatt_path_determinism(h, seed):
    a = gen_rosenblatt(h, 16, 1.0, seed, upsample=64)
    b = gen_rosenblatt(h, 16, 1.0, seed, upsample=64)
    assert a.values[0] == 0.0
    assert np.array_equal(a.values, b.values)


def test_ensemble_rows_match_single_path_generator():
    ens = gen_ensemble("rosenblatt(0.7)", 32, 2.0, 5, base_seed=9, upsample=64)
    for i in range(5):
        single = gen_rosenblatt(0.7, 32, 2.0, path_seed(9, i), upsample=64)
        assert np.array_equal(ens.values[i], single.values)


def test_ensemble_independent_of_worker_count():
    one = gen_ensemble("rosenblatt(0.8)", 64, 1.0, 300, 4, upsample=64, workers=1)
    many = gen_ensemble("rosenblatt(0.8)", 64, 1.0, 300, 4, upsample=64, workers=3)
    assert np.array_equal(one.values, many.values)


def test_double_integral_size_limit():
    with pytest.raises(ResourceLimitError):
        gen_rosenblatt(0.75, 128, 1.0, 0, method="double_integral")


def test_unknown_method():
    with pytest.raises(ConfigurationError):
        gen_rosenblatt(0.75, 8, 1.0, 0, method="spectral")


def test_rosenblatt_marginal_is_right_skewed():
    ens = gen_ensemble("rosenblatt(0.75)", 8, 1.0, 4000, 21, upsample=128)
    x = ens.at(1.0)
    assert summary_stats(x).skewness > 0
    assert np.var(x) == pytest.approx(1.0, abs=0.1)


def test_covariance_examples():
    assert covariance_rosenblatt(1, 1, 0.75) == pytest.approx(1.0, rel=1e-15)
    assert covariance_rosenblatt(0, 3.0, 0.75) == 0.0
    assert covariance_rosenblatt(1, 2, 0.75) == pytest.approx(math.sqrt(2), rel=1e-12)
    with pytest.raises(DomainError):
        covariance_rosenblatt(-1, 1, 0.75)


@given(st.floats(0.51, 0.99), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_covariance_symmetric_and_cauchy_schwarz(h, s, t):
    c = covariance_rosenblatt(s, t, h)
    assert c == covariance_rosenblatt(t, s, h)
    assert c * c <= covariance_rosenblatt(s, s, h) * covariance_rosenblatt(t, t, h) * (1 + 1e-12) + 1e-300


def test_self_similarity_identity_scale():
    ens = gen_ensemble("rosenblatt(0.75)", 8, 1.0, 50, 0, upsample=64)
    assert self_similarity_stat(ens, 1.0, 0.5) == 0.0
    with pytest.raises(DomainError):
        self_similarity_stat(ens, 4.0, 0.5)


@pytest.mark.slow
def test_self_similarity_small_index():
    ens = gen_ensemble("rosenblatt(0.6)", 8, 2.0, 10_000, 0, upsample=256)
    assert self_similarity_stat(ens, 4.0, 0.5) < 0.05
