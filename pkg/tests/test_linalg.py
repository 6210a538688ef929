import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from banditlab import core, linalg
from banditlab.errors import NotPD, SingularDirection

S = 1 / np.sqrt(2)


def basis(d):
    return core.validate_action_set(np.eye(d))


def test_gram_standard_basis():
    g = linalg.gram([0.5, 0.5], basis(2))
    assert np.allclose(g.mat, np.diag([0.5, 0.5]))


def test_gram_rank_one():
    g = linalg.gram([1.0, 0.0], basis(2))
    assert np.allclose(g.mat, [[1.0, 0.0], [0.0, 0.0]])


def test_gram_hand_matrix():
    xs = core.validate_action_set([[1.0, 0.0], [S, S]])
    g = linalg.gram([0.5, 0.5], xs)
    assert np.allclose(g.mat, [[0.75, 0.25], [0.25, 0.25]], atol=1e-12)


def test_quad_norm_identity():
    assert linalg.quad_norm([1.0, 0.0], np.eye(2)) == pytest.approx(1.0)


def test_quad_norm_diagonal():
    assert linalg.quad_norm([1.0, 0.0], np.diag([0.5, 0.5])) == pytest.approx(2.0)


def test_quad_norm_hand_inverse():
    m = np.array([[0.75, 0.25], [0.25, 0.25]])
    # M^-1 = [[2, -2], [-2, 6]]
    assert linalg.quad_norm([1.0, 0.0], m) == pytest.approx(2.0, rel=1e-12)


def test_quad_norm_singular_direction():
    with pytest.raises(SingularDirection):
        linalg.quad_norm([0.0, 1.0], np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_quad_norm_in_range_of_singular():
    v = linalg.quad_norm([1.0, 0.0], np.array([[0.5, 0.0], [0.0, 0.0]]))
    assert v == pytest.approx(2.0)


def test_log_det_identity():
    assert linalg.log_det(np.eye(3)) == pytest.approx(0.0)


def test_log_det_diagonal_half():
    assert linalg.log_det(np.diag([0.5, 0.5])) == pytest.approx(2 * np.log(0.5))


def test_log_det_not_pd():
    with pytest.raises(NotPD):
        linalg.log_det(np.array([[1.0, 0.0], [0.0, 0.0]]))


def test_quad_norm_matches_dense_inverse_oracle():
    rng = np.random.default_rng(11)
    for _ in range(50):
        d = rng.integers(2, 7)
        a = rng.normal(size=(d + 3, d))
        m = a.T @ a + 0.1 * np.eye(d)
        x = rng.normal(size=d)
        oracle = x @ np.linalg.inv(m) @ x
        assert linalg.quad_norm(x, m) == pytest.approx(oracle, rel=1e-8)


def test_trace_identity_full_support():
    # sum_x p_x ||x||^2_{S(p)^-1} equals rank of S(p)
    rng = np.random.default_rng(3)
    for _ in range(20):
        d = int(rng.integers(2, 6))
        n = int(rng.integers(d, d + 5))
        vecs = rng.normal(size=(n, d))
        vecs /= np.maximum(1.0, np.linalg.norm(vecs, axis=1))[:, None]
        try:
            xs = core.validate_action_set(vecs)
        except Exception:
            continue
        p = rng.dirichlet(np.ones(n))
        g = linalg.gram(p, xs)
        total = sum(p[i] * linalg.quad_norm(xs[i], g) for i in range(n))
        assert total == pytest.approx(np.linalg.matrix_rank(g.mat), abs=1e-8)


def test_inv_quad_matrix_matches_quad_norm():
    xs = core.validate_action_set([[1.0, 0.0], [S, S], [0.0, 1.0]])
    g = linalg.gram([0.2, 0.5, 0.3], xs)
    w = linalg.inv_quad_matrix(g, xs.actions)
    for i in range(3):
        assert w[i, i] == pytest.approx(linalg.quad_norm(xs[i], g), rel=1e-10)


@settings(max_examples=50, deadline=None)
@given(
    a=st.floats(0.0, 5.0),
    b=st.floats(0.0, 5.0),
    w1=st.lists(st.floats(0.0, 3.0), min_size=2, max_size=2),
    w2=st.lists(st.floats(0.0, 3.0), min_size=2, max_size=2),
)
def test_gram_linearity(a, b, w1, w2):
    xs = core.validate_action_set([[1.0, 0.0], [S, S]])
    combo = linalg.gram(a * np.array(w1) + b * np.array(w2), xs)
    parts = a * linalg.gram(w1, xs).mat + b * linalg.gram(w2, xs).mat
    assert np.allclose(combo.mat, parts, atol=1e-12)


def test_gram_ridge_guard():
    g = linalg.gram([1.0, 0.0], basis(2), ridge=1e-12)
    assert g.mat[1, 1] == pytest.approx(1e-12)
