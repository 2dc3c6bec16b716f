"""Proximal maps, norm-ball projections and operator-norm estimation.

Both recovery programs only touch a norm through a handful of primitives
(value, dual value, prox, ball projection), so each supported norm is
wrapped in a small handle object exposing exactly those.
"""

import warnings

import numpy as np

__all__ = [
    "soft_threshold",
    "svt",
    "project_l1_ball",
    "project_nuclear_ball",
    "operator_norm",
    "L1Norm",
    "NuclearNorm",
    "norm_for",
]


def soft_threshold(v, t):
    """Entrywise soft thresholding ``sign(v) * max(|v| - t, 0)``.

    This is the proximal map of ``t * ||.||_1``.
    """
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    v = np.asarray(v, dtype=float)
    if t == 0:
        return v.copy()
    return np.sign(v) * np.maximum(np.abs(v) - t, 0.0)


def svt(M, t):
    """Singular value thresholding, the prox of ``t * ||.||_*``.

    Parameters
    ----------
    M : ndarray, shape (d1, d2)
    t : float
        Nonnegative threshold applied to the singular values.

    Returns
    -------
    ndarray
        ``U diag(max(sigma - t, 0)) V^T``.
    """
    if t < 0:
        raise ValueError(f"threshold must be nonnegative, got {t}")
    M = np.asarray(M, dtype=float)
    if t == 0:
        return M.copy()
    U, sig, Vt = np.linalg.svd(M, full_matrices=False)
    sig = np.maximum(sig - t, 0.0)
    keep = sig > 0
    return (U[:, keep] * sig[keep]) @ Vt[keep]


def _l1_threshold(a, r):
    # a >= 0 with sum(a) > r > 0; returns theta with sum(max(a - theta, 0)) = r
    u = np.sort(a)[::-1]
    css = np.cumsum(u) - r
    idx = np.arange(1, u.size + 1)
    rho = np.nonzero(u * idx > css)[0][-1]
    return css[rho] / (rho + 1.0)


def project_l1_ball(v, r):
    """Euclidean projection of `v` onto ``{u : ||u||_1 <= r}``.

    Uses the exact sort-based threshold search, O(n log n). A radius of zero
    projects onto the origin.
    """
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    v = np.asarray(v, dtype=float)
    if r == 0:
        return np.zeros_like(v)
    a = np.abs(v)
    if a.sum() <= r:
        return v.copy()
    theta = _l1_threshold(a.ravel(), r)
    return np.sign(v) * np.maximum(a - theta, 0.0)


def project_nuclear_ball(M, r):
    """Projection onto ``{X : ||X||_* <= r}`` via an l1 projection of the spectrum."""
    if r < 0:
        raise ValueError(f"radius must be nonnegative, got {r}")
    M = np.asarray(M, dtype=float)
    if r == 0:
        return np.zeros_like(M)
    U, sig, Vt = np.linalg.svd(M, full_matrices=False)
    if sig.sum() <= r:
        return M.copy()
    sig = project_l1_ball(sig, r)
    return (U * sig) @ Vt


def operator_norm(A, tol=1e-10, max_iters=10_000, seed=0):
    """Largest singular value of `A` by power iteration on ``A^T A``.

    Iteration stops once the relative change of the estimate drops below
    `tol`. If the cap is hit first a ``RuntimeWarning`` is emitted and the
    last estimate is returned.
    """
    A = np.asarray(A, dtype=float)
    if A.ndim != 2:
        raise ValueError("operator_norm expects a 2-D array")
    if not np.any(A):
        return 0.0
    rng = np.random.default_rng(seed)
    x = rng.standard_normal(A.shape[1])
    x /= np.linalg.norm(x)
    est = 0.0
    for _ in range(max_iters):
        w = A.T @ (A @ x)
        lam = np.linalg.norm(w)
        if lam == 0.0:
            # start vector landed in the null space; restart elsewhere
            x = rng.standard_normal(A.shape[1])
            x /= np.linalg.norm(x)
            continue
        x = w / lam
        if abs(lam - est) <= tol * lam:
            return float(np.sqrt(lam))
        est = lam
    warnings.warn(
        f"operator_norm: tolerance {tol:g} not reached in {max_iters} iterations",
        RuntimeWarning,
        stacklevel=2,
    )
    return float(np.sqrt(est))


class L1Norm:
    """The l1 norm on R^n; its dual is the max-abs entry."""

    name = "l1"

    def evaluate(self, v):
        return float(np.abs(v).sum())

    def dual_evaluate(self, v):
        return float(np.abs(v).max()) if np.size(v) else 0.0

    def prox(self, v, t):
        return soft_threshold(v, t)

    def project_ball(self, v, radius):
        return project_l1_ball(v, radius)

    def compatibility_alpha(self, spec):
        # sup ||u||_1 / ||u||_2 over the s-sparse tangent structure
        return float(np.sqrt(spec.s))

    def __repr__(self):
        return "L1Norm()"


class NuclearNorm:
    """Nuclear norm of a d x d matrix stored as a length d*d vector (row-major)."""

    name = "nuclear"

    def __init__(self, d):
        self.d = int(d)

    def _mat(self, v):
        v = np.asarray(v, dtype=float)
        if v.size != self.d * self.d:
            raise ValueError(f"expected a vector of length {self.d ** 2}, got {v.size}")
        return v.reshape(self.d, self.d)

    def evaluate(self, v):
        return float(np.linalg.svd(self._mat(v), compute_uv=False).sum())

    def dual_evaluate(self, v):
        return float(np.linalg.norm(self._mat(v), 2))

    def prox(self, v, t):
        return svt(self._mat(v), t).ravel()

    def project_ball(self, v, radius):
        return project_nuclear_ball(self._mat(v), radius).ravel()

    def compatibility_alpha(self, spec):
        return float(np.sqrt(spec.rank))

    def __repr__(self):
        return f"NuclearNorm(d={self.d})"


def norm_for(spec):
    """The structure-promoting norm for a :class:`~dithercs.model.StructureSpec`."""
    if spec.kind == "sparse":
        return L1Norm()
    if spec.kind == "lowrank":
        return NuclearNorm(spec.d)
    raise ValueError(f"unknown structure kind {spec.kind!r}")
