import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy import special, stats

from vicsek_mf import sphere_core as sc
from vicsek_mf.errors import DegenerateVectorError, StateCorruptionError
from vicsek_mf.rng import SystemTag

finite = st.floats(-10, 10, allow_nan=False)


def unit_vectors(d):
    return arrays(float, d, elements=finite).filter(
        lambda a: np.linalg.norm(a) > 1e-3).map(lambda a: a / np.linalg.norm(a))


def test_projection_example():
    v = np.array([1.0, 1.0]) / math.sqrt(2.0)
    y = np.array([1.0, 0.0])
    oracle = (np.eye(2) - np.outer(v, v)) @ y
    np.testing.assert_allclose(sc.tangent_project(v, y), [0.5, -0.5], atol=1e-15)
    np.testing.assert_allclose(sc.tangent_project(v, y), oracle, atol=1e-15)


def test_projection_batch_matches_matrix_oracle():
    g = np.random.default_rng(1)
    v = g.normal(size=(100, 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    y = g.normal(size=(100, 3))
    oracle = np.einsum("nij,nj->ni", np.eye(3)[None] - v[:, :, None] * v[:, None, :], y)
    np.testing.assert_allclose(sc.tangent_project(v, y), oracle, atol=1e-14)


@pytest.mark.parametrize("d", [2, 3])
def test_projection_invariants(d):
    @given(unit_vectors(d), arrays(float, d, elements=finite))
    def check(v, y):
        p = sc.tangent_project(v, y)
        scale = max(1.0, np.linalg.norm(y))
        assert abs(p @ v) <= 1e-12 * scale
        np.testing.assert_allclose(sc.tangent_project(v, p), p, atol=1e-12 * scale)
        assert np.linalg.norm(sc.tangent_project(v, v)) <= 1e-12

    check()


@pytest.mark.parametrize("d", [2, 3])
def test_projection_rotation_equivariant(d):
    @given(unit_vectors(d), arrays(float, d, elements=finite), st.integers(0, 2**32))
    def check(v, y, seed):
        R = sc.random_rotation(seed, d)
        lhs = sc.tangent_project(R @ v, R @ y)
        rhs = R @ sc.tangent_project(v, y)
        np.testing.assert_allclose(lhs, rhs, atol=1e-10)

    check()


def test_projection_rejects_non_unit():
    with pytest.raises(StateCorruptionError):
        sc.tangent_project(np.array([1.0 + 1e-5, 0.0]), np.array([0.0, 1.0]))
    sc.tangent_project(np.array([1.0 + 1e-7, 0.0]), np.array([0.0, 1.0]))


def test_normalize():
    np.testing.assert_allclose(sc.normalize_to_sphere([3.0, 4.0]), [0.6, 0.8], atol=1e-16)
    with pytest.raises(DegenerateVectorError):
        sc.normalize_to_sphere([1e-9, 0.0])
    with pytest.raises(DegenerateVectorError):
        sc.normalize_to_sphere([[1.0, 0.0], [np.nan, 0.0]])


def test_random_rotation_is_special_orthogonal():
    for d in (2, 3):
        for seed in range(5):
            R = sc.random_rotation(seed, d)
            np.testing.assert_allclose(R @ R.T, np.eye(d), atol=1e-14)
            assert np.linalg.det(R) == pytest.approx(1.0)


@pytest.mark.parametrize("d", [2, 3])
def test_uniform_sphere_moments(d):
    w = sc.sample_uniform_sphere(9, SystemTag.INTERACTING, np.arange(1_000_000), d)
    np.testing.assert_allclose(np.linalg.norm(w, axis=1), 1.0, atol=1e-12)
    assert np.abs(w.mean(axis=0)).max() < 0.01
    np.testing.assert_allclose(w.T @ w / len(w), np.eye(d) / d, atol=0.01)


def test_von_mises_zero_concentration_is_uniform_circle():
    w = sc.sample_von_mises_fisher([1.0, 0.0], 0.0, 4, SystemTag.INTERACTING, np.arange(20_000))
    theta = np.arctan2(w[:, 1], w[:, 0])
    assert stats.kstest(theta, stats.uniform(-np.pi, 2 * np.pi).cdf).pvalue > 0.01


def test_von_mises_fisher_zero_concentration_is_uniform_sphere():
    # Archimedes: a uniform point on S^2 has a uniform height on [-1, 1].
    w = sc.sample_von_mises_fisher([0.0, 0.0, 1.0], 0.0, 4, SystemTag.INTERACTING, np.arange(20_000))
    assert stats.kstest(w[:, 2], stats.uniform(-1, 2).cdf).pvalue > 0.01


def test_von_mises_mean_resultant():
    mu = np.array([np.cos(0.7), np.sin(0.7)])
    w = sc.sample_von_mises_fisher(mu, 4.0, 8, SystemTag.INTERACTING, np.arange(1_000_000))
    np.testing.assert_allclose(np.linalg.norm(w, axis=1), 1.0, atol=1e-12)
    expected = special.i1(4.0) / special.i0(4.0)
    assert abs(np.linalg.norm(w.mean(axis=0)) - expected) < 0.01
    assert abs(w.mean(axis=0) @ mu - expected) < 0.01


def test_von_mises_matches_scipy_distribution():
    w = sc.sample_von_mises_fisher([1.0, 0.0], 2.5, 1, SystemTag.INTERACTING, np.arange(20_000))
    theta = np.arctan2(w[:, 1], w[:, 0])
    assert stats.kstest(theta, stats.vonmises(2.5).cdf).pvalue > 0.01


def test_von_mises_fisher_sphere_mean():
    kappa = 3.0
    mu = np.array([1.0, 2.0, 2.0]) / 3.0
    w = sc.sample_von_mises_fisher(mu, kappa, 8, SystemTag.INTERACTING, np.arange(400_000))
    expected = 1.0 / np.tanh(kappa) - 1.0 / kappa
    assert abs(w.mean(axis=0) @ mu - expected) < 0.01
    perp = w - (w @ mu)[:, None] * mu
    assert np.abs(perp.mean(axis=0)).max() < 0.01


def test_von_mises_negative_concentration_rejected():
    with pytest.raises(ValueError):
        sc.sample_von_mises_fisher([1.0, 0.0], -1.0, 1, SystemTag.INTERACTING, [0])


def test_gaussian_increment_deterministic():
    a = sc.gaussian_increment(3, SystemTag.INTERACTING, 5, 11, 3)
    assert a.shape == (3,)
    assert np.array_equal(a, sc.gaussian_increment(3, SystemTag.INTERACTING, 5, 11, 3))
