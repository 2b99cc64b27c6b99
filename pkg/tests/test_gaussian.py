import numpy as np
import pytest
from hypothesis import given, strategies as st

from hermite_fields import gaussian
from hermite_fields.gaussian import (
    GridSpec,
    circulant_sqrt_eigenvalues,
    fgn_autocovariance,
    filter_white_noise,
    mix_seed,
    sample_fgn,
    sample_sheet_increments,
    splitmix64,
)


def test_fgn_autocovariance_values():
    assert fgn_autocovariance(0.7, 0) == 1.0
    assert fgn_autocovariance(0.5, 1) == pytest.approx(0.0, abs=1e-15)
    assert fgn_autocovariance(0.7, 1) == pytest.approx(0.5 * (2**1.4 - 2), rel=1e-14)
    assert fgn_autocovariance(0.7, 1) == pytest.approx(0.31951, abs=1e-5)
    assert fgn_autocovariance(0.7, -3) == fgn_autocovariance(0.7, 3)


def test_splitmix_reference_values():
    # first outputs of the reference splitmix64 stream seeded with 0
    assert splitmix64(0) == 0xE220A8397B1DCDAF
    assert mix_seed(1, 2) != mix_seed(2, 1)


def test_negative_embedding_rejected():
    with pytest.raises(ValueError, match="nonnegative"):
        circulant_sqrt_eigenvalues(np.array([1.0, 0.9, -0.9]))


def test_grid_spec_validation():
    with pytest.raises(ValueError):
        GridSpec((1, 4))
    with pytest.raises(MemoryError):
        GridSpec((1 << 14, 1 << 14))
    assert GridSpec((4, 8)).d == 2


def test_sample_fgn_determinism():
    a = sample_fgn(1000, 0.7, 42)
    b = sample_fgn(1000, 0.7, 42)
    assert np.array_equal(a, b)
    assert not np.array_equal(a, sample_fgn(1000, 0.7, 43))


def test_white_noise_case():
    n = 4096
    x = sample_fgn(n, 0.5, 7)
    assert abs(x.mean()) <= 4 / np.sqrt(n)
    assert abs(np.mean(x[1:] * x[:-1])) <= 4 / np.sqrt(n)


def test_fgn_lag_one_covariance():
    n = 1 << 14
    vals = np.array([np.mean(sample_fgn(n, 0.7, mix_seed(3, r))[:-1] * sample_fgn(n, 0.7, mix_seed(3, r))[1:])
                     for r in range(20)])
    se = vals.std(ddof=1) / np.sqrt(vals.size)
    assert abs(vals.mean() - fgn_autocovariance(0.7, 1)) <= 4 * se


def test_sheet_d1_is_fgn():
    x = sample_sheet_increments(GridSpec((256,)), 0.7, 9).values
    assert np.array_equal(x, sample_fgn(256, 0.7, 9))


def test_sheet_white_noise_case():
    x = sample_sheet_increments(GridSpec((64, 64)), (0.5, 0.5), 5).values
    white = gaussian.make_rng(5).standard_normal((128, 128))[:64, :64]
    np.testing.assert_allclose(x, white, atol=1e-12)


def test_sheet_covariance_matches_product():
    grid = GridSpec((8, 8))
    H = (0.7, 0.6)
    R = 100_000
    X = np.array([sample_sheet_increments(grid, H, mix_seed(11, r)).values.ravel() for r in range(R)])
    idx = np.arange(64)
    i1, i2 = np.divmod(idx, 8)
    target = fgn_autocovariance(H[0], i1[:, None] - i1[None, :]) * fgn_autocovariance(H[1], i2[:, None] - i2[None, :])
    emp = X.T @ X / R
    second = (X * X).T @ (X * X) / R
    se = np.sqrt((second - emp**2) / (R - 1))
    assert np.all(np.abs(emp - target) <= 4 * se)


def test_axis_filter_commutes(rng):
    shape = (16, 24)
    eigs = [circulant_sqrt_eigenvalues(fgn_autocovariance(h, np.arange(n + 1))) for h, n in zip((0.7, 0.6), shape)]
    white = rng.standard_normal((32, 48))
    a = filter_white_noise(white, eigs, shape)
    b = filter_white_noise(white.T, eigs[::-1], shape[::-1]).T
    np.testing.assert_allclose(a, b, atol=1e-10)


def test_batch_split_does_not_change_lines(rng):
    eigs = [circulant_sqrt_eigenvalues(fgn_autocovariance(0.8, np.arange(33)))]
    white = rng.standard_normal((5, 64))
    whole = filter_white_noise(white, eigs, (32,))
    parts = np.concatenate([filter_white_noise(white[:2], eigs, (32,)), filter_white_noise(white[2:], eigs, (32,))])
    assert np.array_equal(whole, parts)


@given(st.integers(0, 2**64 - 1), st.integers(0, 10**6))
def test_mix_seed_is_64_bit(root, r):
    s = mix_seed(root, r)
    assert 0 <= s < 2**64
    assert s == mix_seed(root, r)


def test_replica_map_independent_of_workers():
    seeds = [mix_seed(1, r) for r in range(6)]
    one = gaussian.replica_map(_first_value, seeds, workers=1)
    two = gaussian.replica_map(_first_value, seeds, workers=2)
    assert one == two


def _first_value(seed):
    return float(sample_fgn(64, 0.7, seed)[0])


@pytest.mark.parametrize("kind", ["fgn", "matched"])
def test_embeddings_nonnegative(kind):
    for q in (1, 2, 3, 5):
        for h in (0.51, 0.7, 0.9, 0.99):
            for n in (8, 257, 4096):
                circulant_sqrt_eigenvalues(gaussian.axis_autocovariance(kind, h, q, n + 1))
