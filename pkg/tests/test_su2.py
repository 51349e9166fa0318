"""Algebra/group core against an independent 2x2 complex-matrix oracle."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.linalg import expm

from ymball import su2
from ymball.errors import AntipodalPoint, DegenerateAverage

SIGMA = [
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
]


def alg_matrix(x):
    """X = sum_k x_k tau_k with tau_k = -(i/2) sigma_k."""
    return sum(-0.5j * x[k] * SIGMA[k] for k in range(3))


def grp_matrix(q):
    """U(q) = q0 + i (q1 s1 + q2 s2 + q3 s3)."""
    return q[0] * np.eye(2, dtype=complex) + 1j * sum(
        q[1 + k] * SIGMA[k] for k in range(3)
    )


def coeffs(m):
    """Invert alg_matrix: x_k = <tau_k, M> = -2 tr(tau_k M)."""
    return np.array(
        [(-2.0 * np.trace(alg_matrix(np.eye(3)[k]) @ m)).real for k in range(3)]
    )


finite3 = st.lists(
    st.floats(-3.0, 3.0, allow_nan=False), min_size=3, max_size=3
).map(np.array)


def random_group(rng, shape=()):
    q = rng.normal(size=tuple(shape) + (4,))
    return q / np.linalg.norm(q, axis=-1, keepdims=True)


def test_bracket_matches_commutator_and_spec_example():
    assert np.allclose(su2.bracket([1, 0, 0], [0, 1, 0]), [0, 0, 1])
    rng = np.random.default_rng(0)
    for _ in range(20):
        x, y = rng.normal(size=(2, 3))
        mx, my = alg_matrix(x), alg_matrix(y)
        assert np.allclose(su2.bracket(x, y), coeffs(mx @ my - my @ mx), atol=1e-12)


def test_inner_is_minus_two_trace():
    rng = np.random.default_rng(1)
    for _ in range(20):
        x, y = rng.normal(size=(2, 3))
        want = (-2.0 * np.trace(alg_matrix(x) @ alg_matrix(y))).real
        assert np.isclose(su2.inner(x, y), want, atol=1e-12)
    assert np.isclose(su2.inner([1, 0, 0], [1, 0, 0]), 1.0)


def test_exp_matches_matrix_exponential():
    rng = np.random.default_rng(2)
    for _ in range(25):
        x = rng.normal(size=3) * rng.uniform(0.01, 4.0)
        u = expm(alg_matrix(x))
        q = su2.exp_map(x)
        assert np.allclose(grp_matrix(q), u, atol=1e-12)


def test_exp_spec_value():
    q = su2.exp_map(np.array([np.pi, 0.0, 0.0]))
    assert np.allclose(q, [0.0, -1.0, 0.0, 0.0], atol=1e-14)


def test_gmul_matches_matrix_product():
    rng = np.random.default_rng(3)
    p, q = random_group(rng, (2,))
    assert np.allclose(
        grp_matrix(su2.gmul(p, q)), grp_matrix(p) @ grp_matrix(q), atol=1e-14
    )
    assert np.allclose(su2.gmul(p, su2.ginv(p)), [1, 0, 0, 0], atol=1e-14)


def test_adjoint_action_matches_conjugation_and_spec_example():
    g = su2.exp_map(np.array([np.pi / 2, 0.0, 0.0]))
    got = su2.adjoint_action(g, np.array([0.0, 1.0, 0.0]))
    assert np.allclose(got, [0.0, 0.0, -1.0], atol=1e-14)

    rng = np.random.default_rng(4)
    for _ in range(20):
        g = random_group(rng)
        x = rng.normal(size=3)
        u = grp_matrix(g)
        want = coeffs(np.linalg.inv(u) @ alg_matrix(x) @ u)
        assert np.allclose(su2.adjoint_action(g, x), want, atol=1e-11)


def test_log_map_spec_value_and_antipode():
    assert np.allclose(
        su2.log_map(np.array([0.0, -1.0, 0.0, 0.0])), [np.pi, 0, 0], atol=1e-14
    )
    with pytest.raises(AntipodalPoint):
        su2.log_map(np.array([-1.0, 0.0, 0.0, 0.0]))
    with pytest.raises(AntipodalPoint):
        su2.log_map(np.array([-1.0 + 1e-10, 0.0, 0.0, 0.0]))


def test_project_to_group_degenerate():
    with pytest.raises(DegenerateAverage):
        su2.project_to_group(np.array([1e-10, 0.0, 0.0, 0.0]))
    q = su2.project_to_group(np.array([3.0, 4.0, 0.0, 0.0]))
    assert np.isclose(np.linalg.norm(q), 1.0, atol=1e-15)


@settings(max_examples=60, deadline=None)
@given(finite3, finite3, finite3)
def test_jacobi_identity(x, y, z):
    total = (
        su2.bracket(x, su2.bracket(y, z))
        + su2.bracket(y, su2.bracket(z, x))
        + su2.bracket(z, su2.bracket(x, y))
    )
    assert np.allclose(total, 0.0, atol=1e-9)


@settings(max_examples=60, deadline=None)
@given(finite3, finite3, finite3)
def test_ad_invariance(x, y, z):
    assert np.isclose(
        su2.inner(su2.bracket(x, y), z),
        su2.inner(x, su2.bracket(y, z)),
        atol=1e-9,
    )


@settings(max_examples=60, deadline=None)
@given(finite3)
def test_exp_log_roundtrip(x):
    # keep |X| inside the principal branch
    n = np.linalg.norm(x)
    if n >= np.pi - 1e-3:
        x = x * (np.pi - 1e-3) / n
    q = su2.exp_map(x)
    assert np.isclose(np.linalg.norm(q), 1.0, atol=1e-12)
    assert np.allclose(su2.log_map(q), x, atol=1e-9)


@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), finite3)
def test_adjoint_preserves_inner(seed, x):
    g = random_group(np.random.default_rng(seed))
    y = su2.adjoint_action(g, x)
    assert np.isclose(su2.inner(y, y), su2.inner(x, x), atol=1e-9)


def test_vectorized_shapes():
    rng = np.random.default_rng(5)
    x = rng.normal(size=(4, 7, 3))
    g = random_group(rng, (4, 7))
    assert su2.exp_map(x).shape == (4, 7, 4)
    assert su2.adjoint_action(g, x).shape == (4, 7, 3)
    assert su2.log_map(su2.exp_map(0.1 * x)).shape == (4, 7, 3)
    assert np.allclose(su2.log_map(su2.exp_map(0.1 * x)), 0.1 * x, atol=1e-10)
