import numpy as np
import pytest
from scipy.optimize import brentq

from dithercs.model import StructureSpec
from dithercs.prox import (
    L1Norm,
    NuclearNorm,
    operator_norm,
    project_l1_ball,
    project_nuclear_ball,
    soft_threshold,
    svt,
)


def l1_projection_by_bisection(v, r):
    """Independent oracle: root-find the threshold directly."""
    a = np.abs(v)
    if a.sum() <= r:
        return v.copy()
    theta = brentq(lambda t: np.maximum(a - t, 0).sum() - r, 0.0, a.max(), xtol=1e-15, rtol=1e-15,
                   maxiter=500)
    return np.sign(v) * np.maximum(a - theta, 0)


def svt_kkt_residual(M, X, t):
    """Residual of M - X in t * subdiff ||X||_*, via the SVD structure of X."""
    G = (M - X) / t
    U, sig, Vt = np.linalg.svd(X)
    r = int(np.sum(sig > 1e-10 * max(1.0, sig.max(initial=0))))
    Ur, Vr = U[:, :r], Vt[:r].T
    W = G - Ur @ Vr.T
    res = [np.abs(Ur.T @ W).max(initial=0), np.abs(W @ Vr).max(initial=0),
           max(0.0, np.linalg.norm(W, 2) - 1.0)]
    return max(res)


def test_soft_threshold_examples():
    assert soft_threshold(np.array([1.2]), 0.5)[0] == pytest.approx(0.7)
    assert soft_threshold(np.array([-0.3]), 0.5)[0] == 0.0
    v = np.array([1.0, -2.0, 0.1])
    np.testing.assert_array_equal(soft_threshold(v, 0.0), v)
    with pytest.raises(ValueError):
        soft_threshold(v, -1.0)


def test_soft_threshold_prox_optimality(rng):
    v, t = rng.standard_normal(200), 0.7
    p = soft_threshold(v, t)
    on = p != 0
    assert np.abs(v[on] - p[on] - t * np.sign(p[on])).max() < 1e-12
    assert np.all(np.abs(v[~on]) <= t)


def test_svt_examples():
    np.testing.assert_allclose(svt(np.diag([3.0, 0.5]), 1.0), np.diag([2.0, 0.0]), atol=1e-14)
    M = np.arange(9.0).reshape(3, 3)
    np.testing.assert_array_equal(svt(M, 0.0), M)


def test_svt_kkt(rng):
    for _ in range(20):
        M = rng.standard_normal((4, 4))
        t = rng.uniform(0.1, 2.0)
        assert svt_kkt_residual(M, svt(M, t), t) < 1e-8


@pytest.mark.parametrize("v, r, expected", [
    ([3.0, 0.0], 1.0, [1.0, 0.0]),
    ([0.2, 0.1], 1.0, [0.2, 0.1]),
    ([1.0, 1.0, 1.0], 1.5, [0.5, 0.5, 0.5]),
])
def test_l1_projection_examples(v, r, expected):
    np.testing.assert_allclose(project_l1_ball(np.array(v), r), expected, atol=1e-15)


def test_l1_projection_matches_oracle_and_is_optimal(rng):
    for _ in range(100):
        n = int(rng.integers(1, 60))
        v = rng.standard_normal(n) * rng.uniform(0.1, 5)
        r = rng.uniform(0.05, 3.0)
        p = project_l1_ball(v, r)
        np.testing.assert_allclose(p, l1_projection_by_bisection(v, r), atol=1e-10, rtol=0)
        assert np.abs(p).sum() <= r * (1 + 1e-12)
        # no sampled feasible point is closer to v
        pts = rng.standard_normal((1000, n))
        pts *= (r * rng.uniform(0, 1, (1000, 1))) / np.abs(pts).sum(axis=1, keepdims=True)
        assert np.linalg.norm(v - p) <= np.linalg.norm(v - pts, axis=1).min() + 1e-12


def test_l1_projection_zero_radius():
    np.testing.assert_array_equal(project_l1_ball(np.array([1.0, -2.0]), 0.0), [0.0, 0.0])


def test_nuclear_projection_examples(rng):
    np.testing.assert_allclose(project_nuclear_ball(np.diag([3.0, 1.0]), 2.0), np.diag([2.0, 0.0]),
                               atol=1e-14)
    M = rng.standard_normal((4, 4))
    M *= 0.5 / np.linalg.svd(M, compute_uv=False).sum()
    np.testing.assert_array_equal(project_nuclear_ball(M, 1.0), M)
    for _ in range(10):
        M = rng.standard_normal((4, 4)) * 3
        P = project_nuclear_ball(M, 1.0)
        assert np.linalg.svd(P, compute_uv=False).sum() == pytest.approx(1.0, abs=1e-8)


@pytest.mark.parametrize("proj, shape", [
    (project_l1_ball, (30,)),
    (project_nuclear_ball, (5, 5)),
])
def test_projection_idempotent_and_nonexpansive(proj, shape, rng):
    for _ in range(50):
        u, v = rng.standard_normal(shape) * 2, rng.standard_normal(shape) * 2
        r = rng.uniform(0.5, 3)
        pu, pv = proj(u, r), proj(v, r)
        np.testing.assert_allclose(proj(pu, r), pu, atol=1e-12)
        assert np.linalg.norm(pu - pv) <= np.linalg.norm(u - v) + 1e-12


def test_operator_norm_examples(rng):
    assert operator_norm(np.eye(5)) == pytest.approx(1.0)
    assert operator_norm(np.diag([3.0, 1.0])) == pytest.approx(3.0)
    assert operator_norm(np.zeros((3, 4))) == 0.0
    A = rng.standard_normal((50, 80))
    sigma = np.linalg.svd(A, compute_uv=False)[0]
    assert operator_norm(A, tol=1e-10) == pytest.approx(sigma, rel=1e-8)


def test_operator_norm_warns_when_capped(rng):
    A = rng.standard_normal((60, 60))
    with pytest.warns(RuntimeWarning):
        operator_norm(A, tol=1e-16, max_iters=3)


@pytest.mark.parametrize("norm, dim", [(L1Norm(), 16), (NuclearNorm(4), 16)])
def test_norm_axioms_and_duality(norm, dim, rng):
    for _ in range(50):
        u, v, w = rng.standard_normal((3, dim))
        c = rng.uniform(-3, 3)
        assert norm.evaluate(u) >= 0
        assert norm.evaluate(c * u) == pytest.approx(abs(c) * norm.evaluate(u))
        assert norm.evaluate(u + w) <= norm.evaluate(u) + norm.evaluate(w) + 1e-12
        assert u @ v <= norm.evaluate(u) * norm.dual_evaluate(v) + 1e-12


def test_dual_norms():
    v = np.array([1.0, -4.0, 2.0, 0.0])
    assert L1Norm().dual_evaluate(v) == 4.0
    assert NuclearNorm(2).dual_evaluate(np.array([3.0, 0.0, 0.0, 1.0])) == pytest.approx(3.0)


def test_nuclear_prox_is_svt(rng):
    M = rng.standard_normal((5, 5))
    np.testing.assert_allclose(NuclearNorm(5).prox(M.ravel(), 0.4), svt(M, 0.4).ravel())


def test_compatibility_constants():
    assert L1Norm().compatibility_alpha(StructureSpec.sparse(100, 9)) == 3.0
    assert NuclearNorm(16).compatibility_alpha(StructureSpec.lowrank(16, 4)) == 2.0
