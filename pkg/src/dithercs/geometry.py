"""Gaussian widths, complexities and squared distances.

Closed-form upper bounds for the sparse and low-rank structures sit next to
Monte Carlo estimators that check them. Logarithms are natural throughout.
"""

from dataclasses import dataclass, asdict
import math

import numpy as np

from .model import ParameterError, rng_for
from .prox import norm_for

__all__ = [
    "MCEstimate",
    "GeometryReport",
    "width_bound_closed_form",
    "eta2_bound_closed_form",
    "eta2_threshold",
    "cone_gamma_bound",
    "c2_gamma_bound",
    "mc_gaussian_complexity_ball",
    "mc_sphere_width",
    "eta2_l1_distance",
    "mc_eta2_l1",
    "tangent_cone_distance_l1",
    "mc_tangent_width_l1",
    "theorem1_rhs",
    "theorem2_rhs",
    "sandwich_check",
    "geometry_report",
]


@dataclass(frozen=True)
class MCEstimate:
    mean: float
    stderr: float
    samples: int

    def __iter__(self):
        return iter((self.mean, self.stderr))


def _estimate(values):
    values = np.asarray(values, dtype=float)
    return MCEstimate(float(values.mean()), float(values.std(ddof=1) / math.sqrt(values.size)), values.size)


# ---------------------------------------------------------------- closed forms


def width_bound_closed_form(spec):
    """Upper bound on the squared width of the tangent cone intersected with the sphere.

    ``2 s ln(n/s) + 1.5 s`` for s-sparse vectors, ``3 r (2d - r)`` for rank-r
    d x d matrices.
    """
    if spec.kind == "sparse":
        return 2.0 * spec.s * math.log(spec.dim / spec.s) + 1.5 * spec.s
    return 3.0 * spec.rank * (2 * spec.d - spec.rank)


def eta2_threshold(spec):
    """Smallest scale for which :func:`eta2_bound_closed_form` is valid."""
    if spec.kind == "sparse":
        return math.sqrt(2.0 * math.log(spec.dim / spec.s))
    return 2.0 * math.sqrt(spec.d)


def eta2_bound_closed_form(spec, lam):
    """Bound on the expected squared distance from a Gaussian vector to ``lam * subdiff f(x*)``.

    Raises
    ------
    ParameterError
        If `lam` is below the validity threshold ``sqrt(2 ln(n/s))`` (sparse)
        or ``2 sqrt(d)`` (low-rank).
    """
    thr = eta2_threshold(spec)
    if lam < thr * (1 - 1e-12):
        cond = "lambda >= sqrt(2 ln(n/s))" if spec.kind == "sparse" else "lambda >= 2 sqrt(d)"
        raise ParameterError(f"eta^2 bound requires {cond} = {thr:.6g}, got lambda = {lam:.6g}")
    if spec.kind == "sparse":
        return (lam * lam + 3.0) * spec.s
    return lam * lam * spec.rank + 2.0 * spec.d * (spec.rank + 1)


def cone_gamma_bound(omega_f, omega_g):
    """Complexity bound ``2 (omega_f + omega_g + 1)`` for the product tangent cone."""
    if omega_f < 0 or omega_g < 0:
        raise ParameterError("widths must be nonnegative")
    return 2.0 * (omega_f + omega_g + 1.0)


def c2_gamma_bound(eta2_f, eta2_g, kl1, kl2, alpha_f, alpha_g):
    """Complexity bound for the penalized-Lasso error cone.

    ``2 [sqrt(eta2_f + eta2_g) + (kl1 alpha_f + kl2 alpha_g) / 2 + 1]`` with
    ``kl1 = kappa * lambda1`` and ``kl2 = kappa * lambda2``.
    """
    if min(eta2_f, eta2_g, kl1, kl2, alpha_f, alpha_g) < 0:
        raise ParameterError("all inputs must be nonnegative")
    return 2.0 * (math.sqrt(eta2_f + eta2_g) + 0.5 * (kl1 * alpha_f + kl2 * alpha_g) + 1.0)


def theorem1_rhs(K, delta, epsilon, m, gamma_cone):
    """Constrained-Lasso error bound shape ``K (delta + eps) gamma / sqrt(m)``, constant set to 1."""
    if m < 1:
        raise ParameterError("m must be positive")
    return K * (delta + epsilon) * gamma_cone / math.sqrt(m)


def theorem2_rhs(lambda1, lambda2, alpha_f, alpha_g, m):
    """Penalized-Lasso error bound shape ``(lambda1 alpha_f + lambda2 alpha_g) / m``."""
    if m < 1:
        raise ParameterError("m must be positive")
    return (lambda1 * alpha_f + lambda2 * alpha_g) / m


def sandwich_check(omega, gamma, witness_norm, stderr=0.0):
    """Whether ``(omega + w)/3 <= gamma <= 2 (omega + w)`` holds within ``3 * stderr``.

    `witness_norm` is the Euclidean norm of any point of the set.
    """
    slack = 3.0 * stderr
    lo = (omega + witness_norm) / 3.0
    hi = 2.0 * (omega + witness_norm)
    return bool(lo - slack <= gamma <= hi + slack)


# ---------------------------------------------------------------- Monte Carlo


def mc_gaussian_complexity_ball(norm, dim, samples=10_000, seed=0):
    """Gaussian complexity of the unit ball of `norm`, i.e. ``E norm.dual(g)``.

    For a symmetric ball the supremum of ``|<g, x>|`` is the dual norm of g,
    and it coincides with the Gaussian width.
    """
    if samples < 100:
        raise ParameterError("use at least 100 Monte Carlo samples")
    rng = rng_for(seed)
    vals = np.empty(samples)
    if norm.name == "l1":
        # batched: dual of l1 is the max-abs entry
        done = 0
        batch = max(1, 2_000_000 // max(dim, 1))
        while done < samples:
            b = min(batch, samples - done)
            vals[done:done + b] = np.abs(rng.standard_normal((b, dim))).max(axis=1)
            done += b
    else:
        for i in range(samples):
            vals[i] = norm.dual_evaluate(rng.standard_normal(dim))
    return _estimate(vals)


def mc_sphere_width(n, samples=10_000, seed=0):
    """Gaussian width of the unit sphere, ``E ||g||_2``."""
    g = rng_for(seed).standard_normal((samples, n))
    return _estimate(np.linalg.norm(g, axis=1))


def eta2_l1_distance(g, signs, lam):
    """Squared distance from each row of `g` to ``lam * subdiff ||x||_1``.

    `signs` is ``sign(x)``; support coordinates are pulled to ``lam * sign``,
    off-support coordinates to the interval ``[-lam, lam]``.
    """
    g = np.atleast_2d(np.asarray(g, dtype=float))
    signs = np.asarray(signs, dtype=float)
    on = signs != 0
    d_on = ((g[:, on] - lam * signs[on]) ** 2).sum(axis=1)
    d_off = (np.maximum(np.abs(g[:, ~on]) - lam, 0.0) ** 2).sum(axis=1)
    return d_on + d_off


def mc_eta2_l1(signs, lam, samples=10_000, seed=0):
    """Monte Carlo estimate of the Gaussian squared distance to ``lam * subdiff ||x||_1``."""
    if lam < 0:
        raise ParameterError("lambda must be nonnegative")
    signs = np.asarray(signs, dtype=float)
    g = rng_for(seed).standard_normal((samples, signs.size))
    return _estimate(eta2_l1_distance(g, signs, lam))


def tangent_cone_distance_l1(g, signs, iters=100):
    """Distance from each row of `g` to the cone generated by ``subdiff ||x||_1``.

    That cone is the polar of the l1 tangent cone at x, so the distance equals
    ``sup <g, u>`` over unit vectors u in the tangent cone. The minimizing
    scale solves a monotone piecewise-linear equation, found by bisection.
    """
    g = np.atleast_2d(np.asarray(g, dtype=float))
    signs = np.asarray(signs, dtype=float)
    on = signs != 0
    s = int(on.sum())
    proj_on = g[:, on] @ signs[on]
    a_off = np.abs(g[:, ~on])

    def slope(lam):
        # half-derivative of the squared distance in lam
        return s * lam - proj_on - np.maximum(a_off - lam[:, None], 0.0).sum(axis=1)

    lo = np.zeros(g.shape[0])
    hi = np.maximum(np.abs(g).max(axis=1), np.abs(proj_on) / max(s, 1)) + 1.0
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        pos = slope(mid) > 0
        hi = np.where(pos, mid, hi)
        lo = np.where(pos, lo, mid)
    lam = 0.5 * (lo + hi)
    d2 = ((g[:, on] - lam[:, None] * signs[on]) ** 2).sum(axis=1)
    d2 += (np.maximum(a_off - lam[:, None], 0.0) ** 2).sum(axis=1)
    return np.sqrt(d2)


def mc_tangent_width_l1(signs, samples=10_000, seed=0):
    """Monte Carlo Gaussian width of the l1 tangent cone at x intersected with the sphere."""
    signs = np.asarray(signs, dtype=float)
    g = rng_for(seed).standard_normal((samples, signs.size))
    return _estimate(tangent_cone_distance_l1(g, signs))


# ---------------------------------------------------------------- reports


@dataclass
class GeometryReport:
    omega_f: float
    omega_g: float
    gamma_cone_bound: float
    eta2_f: float
    eta2_g: float
    gamma_c2_bound: float
    gamma_unit_ball_f: float
    gamma_unit_ball_g: float
    theorem_error_bound: float

    def as_dict(self):
        return asdict(self)


def geometry_report(signal_spec, corruption_spec, m, delta, epsilon, K=1.0, plan=None,
                    samples=10_000, seed=0):
    """Collect the closed-form geometry of a problem into a :class:`GeometryReport`.

    Widths come from the closed-form bounds; the unit-ball complexities are
    Monte Carlo means. `plan` defaults to the fig2-mode regularization plan
    and fixes ``kappa``. ``theorem_error_bound`` is the constrained-Lasso
    bound shape.
    """
    from .solve import plan_lambdas

    if corruption_spec is None:
        raise ParameterError("geometry reports need a corruption structure")
    if corruption_spec.dim != m:
        raise ParameterError("corruption dimension must equal m")
    if plan is None:
        plan = plan_lambdas(signal_spec, m, delta, epsilon, K=K)
    omega_f = math.sqrt(width_bound_closed_form(signal_spec))
    omega_g = math.sqrt(width_bound_closed_form(corruption_spec))
    gcone = cone_gamma_bound(omega_f, omega_g)
    kl1, kl2 = plan.kappa * plan.lambda1, plan.kappa * plan.lambda2
    eta2_f = eta2_bound_closed_form(signal_spec, kl1)
    eta2_g = eta2_bound_closed_form(corruption_spec, kl2)
    f, g = norm_for(signal_spec), norm_for(corruption_spec)
    gc2 = c2_gamma_bound(eta2_f, eta2_g, kl1, kl2,
                         f.compatibility_alpha(signal_spec), g.compatibility_alpha(corruption_spec))
    gb_f = mc_gaussian_complexity_ball(f, signal_spec.dim, samples, seed).mean
    gb_g = mc_gaussian_complexity_ball(g, corruption_spec.dim, samples, seed + 1).mean
    return GeometryReport(
        omega_f=omega_f,
        omega_g=omega_g,
        gamma_cone_bound=gcone,
        eta2_f=eta2_f,
        eta2_g=eta2_g,
        gamma_c2_bound=gc2,
        gamma_unit_ball_f=gb_f,
        gamma_unit_ball_g=gb_g,
        theorem_error_bound=theorem1_rhs(K, delta, epsilon, m, gcone),
    )
