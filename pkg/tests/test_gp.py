import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hetsense import DuplicateLocationWarning, KernelSpec, MeanSpec, Prior, eval_kernel, eval_mean, gram, sample_field
from hetsense.errors import FactorizationError
from hetsense.gp import chol_jitter, cross_cov

coord = st.floats(-100, 100, allow_nan=False)
point = st.tuples(coord, coord)


def test_eval_mean_zero_and_constant():
    assert eval_mean(MeanSpec(), (3.0, -1.0)) == 0.0
    assert eval_mean(MeanSpec("constant", 2.5), (7.0, 7.0)) == 2.5
    assert eval_mean(MeanSpec("constant", 0.0), (10.0, 50.0)) == 0.0
    np.testing.assert_array_equal(eval_mean(MeanSpec("constant", 2.5), np.zeros((3, 2))), [2.5] * 3)


def test_spec_validation():
    with pytest.raises(ValueError):
        KernelSpec(0.0, 1.0)
    with pytest.raises(ValueError):
        KernelSpec(1.0, -1.0)
    with pytest.raises(ValueError):
        KernelSpec(1.0, 1.0, family="matern")
    with pytest.raises(ValueError):
        MeanSpec("constant", math.inf)


def test_kernel_values():
    assert eval_kernel(KernelSpec(5.8, 1.0), (10, 50), (10, 50)) == 5.8
    k = KernelSpec(1.0, 1.0)
    assert eval_kernel(k, (0, 0), (math.sqrt(2), 0)) == pytest.approx(math.exp(-1), rel=1e-15)
    far = [eval_kernel(k, (0, 0), (d, 0)) for d in (1, 2, 4, 8, 40)]
    assert all(a > b for a, b in zip(far, far[1:]))
    assert far[-1] == 0.0


@given(point, point, st.floats(0.1, 10), st.floats(0.1, 50))
def test_kernel_symmetry_exact(a, b, var, ell):
    k = KernelSpec(var, ell)
    assert eval_kernel(k, a, b) == eval_kernel(k, b, a)


@settings(max_examples=50, deadline=None)
@given(st.lists(point, min_size=1, max_size=50), st.floats(0.5, 30))
def test_gram_psd_after_jitter(pts, ell):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", DuplicateLocationWarning)
        cov = gram(KernelSpec(1.3, ell), pts)
    A = cov.matrix + cov.jitter * np.eye(len(pts))
    assert np.array_equal(cov.matrix, cov.matrix.T)
    assert np.all(np.diag(cov.matrix) > 0)
    assert np.linalg.eigvalsh(A).min() >= -1e-10
    np.testing.assert_allclose(cov.chol @ cov.chol.T, A, atol=1e-10)


def test_gram_duplicate_warns_and_factorizes():
    with pytest.warns(DuplicateLocationWarning):
        cov = gram(KernelSpec(1.0, 1.0), [(0, 0), (0, 0), (1, 1)])
    assert cov.jitter > 0


def test_jitter_ladder_is_bounded():
    with pytest.raises(FactorizationError):
        chol_jitter(np.array([[1.0, 0.0], [0.0, -1.0]]))
    assert chol_jitter(np.eye(3)).jitter == 0.0


def test_sample_field_degenerate_and_deterministic():
    locs = np.array([[0.0, 0.0], [1.0, 2.0], [3.0, 1.0]])
    flat = Prior(MeanSpec("constant", 2.5), KernelSpec(1e-40, 1.0))
    np.testing.assert_array_equal(sample_field(flat, locs, seed=3), [2.5, 2.5, 2.5])
    p = Prior(MeanSpec(), KernelSpec(1.0, 2.0))
    np.testing.assert_array_equal(sample_field(p, locs, 11), sample_field(p, locs, 11))
    assert not np.array_equal(sample_field(p, locs, 11), sample_field(p, locs, 12))


def test_single_point_variance():
    p = Prior(MeanSpec(), KernelSpec(5.8, 1.0))
    draws = sample_field(p, [(10.0, 50.0)], seed=5, size=100_000)[:, 0]
    n = draws.size
    se = 5.8 * math.sqrt(2.0 / (n - 1))
    assert abs(draws.var(ddof=1) - 5.8) <= 3 * se


def test_sample_moments_three_points():
    p = Prior(MeanSpec("constant", 1.0), KernelSpec(2.0, 1.5))
    locs = np.array([[0.0, 0.0], [1.0, 0.5], [2.5, -1.0]])
    x = sample_field(p, locs, seed=21, size=100_000)
    n = x.shape[0]
    K = cross_cov(p.kernel, locs, locs)
    se_mean = np.sqrt(np.diag(K) / n)
    assert np.all(np.abs(x.mean(0) - 1.0) <= 4 * se_mean)
    c = x - x.mean(0)
    prods = c[:, :, None] * c[:, None, :]
    emp = prods.mean(0)
    se_cov = prods.std(0, ddof=1) / math.sqrt(n)
    assert np.all(np.abs(emp - K) <= 4 * se_cov)
