"""Constrained and penalized Lasso for corrupted sensing, and the PBP baseline.

Both Lassos work on the stacked operator ``[Phi, sqrt(m) I]`` acting on the
pair ``(x, v)``. Passing ``g=None`` drops the corruption block entirely
(``v`` is held at zero), which is how corruption-free problems are solved.
"""

from dataclasses import dataclass
import math

import numpy as np

from .model import ParameterError
from .prox import operator_norm

__all__ = [
    "SolverConfig",
    "RecoverySolution",
    "RegularizationPlan",
    "lipschitz_constant",
    "solve_constrained",
    "solve_unconstrained",
    "solve_pbp",
    "plan_lambdas",
]


@dataclass(frozen=True)
class SolverConfig:
    max_iters: int = 20_000
    rel_tol: float = 1e-9
    step_safety: float = 1.0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ParameterError("max_iters must be at least 1")
        if not self.rel_tol > 0:
            raise ParameterError("rel_tol must be positive")
        if not 0 < self.step_safety <= 1:
            raise ParameterError("step_safety must lie in (0, 1]")


@dataclass
class RecoverySolution:
    x_hat: np.ndarray
    v_hat: np.ndarray
    iters: int
    objective: float
    kkt_residual: float
    converged: bool


@dataclass(frozen=True)
class RegularizationPlan:
    lambda1: float
    lambda2: float
    kappa: float

    def __post_init__(self):
        if not (self.lambda1 > 0 and self.lambda2 > 0 and self.kappa > 0):
            raise ParameterError("lambda1, lambda2 and kappa must be positive")


def lipschitz_constant(Phi, tol=1e-10, corrupted=True):
    """Squared spectral norm of ``[Phi, sqrt(m) I]`` (of `Phi` alone if not `corrupted`).

    ``[Phi, sqrt(m) I] [Phi, sqrt(m) I]^T = Phi Phi^T + m I``, so this equals
    ``||Phi||^2 + m`` and only `Phi` needs the power iteration.
    """
    m = Phi.shape[0]
    sq = operator_norm(Phi, tol=tol) ** 2
    if not corrupted:
        # an all-zero Phi still needs a finite step
        return sq if sq > 0 else 1.0
    return sq + m


def _check_shapes(Phi, y):
    Phi = np.asarray(Phi, dtype=float)
    y = np.asarray(y, dtype=float)
    if Phi.ndim != 2 or y.shape != (Phi.shape[0],):
        raise ParameterError(f"y of shape {y.shape} does not match Phi of shape {Phi.shape}")
    return Phi, y


def _accelerated(Phi, y, step_x, step_v, penalty, cfg, L):
    """FISTA with function-value restart on ``0.5 ||y - Phi x - sqrt(m) v||^2 + penalty``.

    `step_x(u, s)` / `step_v(u, s)` map a gradient-step point to the next
    iterate given the step size `s` (a prox or a projection); `step_v` is
    None when the corruption block is absent.
    """
    m, n = Phi.shape
    sqm = math.sqrt(m)
    s = cfg.step_safety / L

    def fval(Az, x, v):
        r = Az - y
        return 0.5 * float(r @ r) + penalty(x, v)

    x = np.zeros(n)
    v = np.zeros(m)
    Az = np.zeros(m)
    x_old, v_old, Az_old = x, v, Az
    F = fval(Az, x, v)
    t = 1.0
    converged = False
    k = 0
    for k in range(1, cfg.max_iters + 1):
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        beta = (t - 1.0) / t_next
        if beta:
            yx = x + beta * (x - x_old)
            yv = v + beta * (v - v_old)
            Ay = Az + beta * (Az - Az_old)
        else:
            yx, yv, Ay = x, v, Az
        r = Ay - y
        x_new = step_x(yx - s * (Phi.T @ r), s)
        if step_v is None:
            v_new = v
            Az_new = Phi @ x_new
        else:
            v_new = step_v(yv - (s * sqm) * r, s)
            Az_new = Phi @ x_new + sqm * v_new
        F_new = fval(Az_new, x_new, v_new)
        if F_new > F and beta:
            # momentum overshoot: drop it and take a plain step from x next time
            x_old, v_old, Az_old = x, v, Az
            t = 1.0
            continue
        dz = math.sqrt(float(np.sum((x_new - x) ** 2) + np.sum((v_new - v) ** 2)))
        nz = math.sqrt(float(x_new @ x_new + v_new @ v_new))
        x_old, v_old, Az_old = x, v, Az
        x, v, Az, F = x_new, v_new, Az_new, F_new
        t = t_next
        if dz <= cfg.rel_tol * nz or (dz == 0.0 and nz == 0.0):
            converged = True
            break

    # gradient-mapping residual at the final iterate
    r = Az - y
    gx = Phi.T @ r
    res2 = float(np.sum((x - step_x(x - s * gx, s)) ** 2))
    if step_v is not None:
        res2 += float(np.sum((v - step_v(v - (s * sqm) * r, s)) ** 2))
    kkt = math.sqrt(res2) / s
    return RecoverySolution(x, v, k, F, kkt, converged)


def solve_constrained(Phi, y, f, R1, g, R2, cfg=None):
    """Least squares over the product ball ``{f(x) <= R1} x {g(v) <= R2}``.

    Minimizing the squared residual has the same minimizers as minimizing the
    residual norm itself. Starts from ``(0, 0)``, which is always feasible.

    Returns
    -------
    RecoverySolution
        ``objective`` is ``0.5 * ||y - Phi x - sqrt(m) v||^2`` and
        ``kkt_residual`` the norm of the projected-gradient mapping.
        ``converged`` is False if `max_iters` ran out first.
    """
    Phi, y = _check_shapes(Phi, y)
    cfg = cfg or SolverConfig()
    if R1 < 0 or (g is not None and R2 < 0):
        raise ParameterError("constraint radii must be nonnegative")
    L = lipschitz_constant(Phi, corrupted=g is not None)
    step_x = lambda u, s: f.project_ball(u, R1)  # noqa: E731
    step_v = None if g is None else (lambda u, s: g.project_ball(u, R2))
    return _accelerated(Phi, y, step_x, step_v, lambda x, v: 0.0, cfg, L)


def solve_unconstrained(Phi, y, f, g, plan, cfg=None):
    """Minimize ``0.5 ||y - Phi x - sqrt(m) v||^2 + lambda1 f(x) + lambda2 g(v)``.

    The prox of the separable penalty splits into one prox per block.
    ``kkt_residual`` is the norm of the composite gradient mapping, which is
    zero exactly at minimizers.
    """
    Phi, y = _check_shapes(Phi, y)
    cfg = cfg or SolverConfig()
    lam1, lam2 = plan.lambda1, plan.lambda2
    L = lipschitz_constant(Phi, corrupted=g is not None)
    step_x = lambda u, s: f.prox(u, s * lam1)  # noqa: E731
    if g is None:
        step_v = None
        penalty = lambda x, v: lam1 * f.evaluate(x)  # noqa: E731
    else:
        step_v = lambda u, s: g.prox(u, s * lam2)  # noqa: E731
        penalty = lambda x, v: lam1 * f.evaluate(x) + lam2 * g.evaluate(v)  # noqa: E731
    return _accelerated(Phi, y, step_x, step_v, penalty, cfg, L)


def solve_pbp(Phi, y, f, R1, g, R2):
    """Projected back projection: project ``((1/m) Phi^T y, y / sqrt(m))`` onto the product ball.

    The projection onto a product set is the pair of blockwise projections.
    Single shot, so ``iters`` is 0 and ``kkt_residual`` is NaN.
    """
    Phi, y = _check_shapes(Phi, y)
    m = Phi.shape[0]
    x = f.project_ball(Phi.T @ y / m, R1)
    if g is None:
        v = np.zeros(m)
    else:
        v = g.project_ball(y / math.sqrt(m), R2)
    r = y - Phi @ x - math.sqrt(m) * v
    return RecoverySolution(x, v, 0, 0.5 * float(r @ r), float("nan"), True)


def plan_lambdas(signal_spec, m, delta, epsilon, K=1.0, mode="fig2", constants=(1.0, 1.0)):
    """Regularization weights at their theoretical lower-bound scale.

    ``mode="fig2"`` uses the reference experiment weights with all constants
    equal to one::

        sparse:   lambda1 = (delta+eps) sqrt(m ln n),  lambda2 = (delta+eps) sqrt(m ln m)
        low-rank: lambda1 = 2 (delta+eps) sqrt(m d),   lambda2 = (delta+eps) sqrt(m ln m)

    ``mode="corollary"`` drops the fixed factors and multiplies by
    ``constants[i] * K`` instead. In both modes
    ``kappa = 2 / (c1 K' (delta+eps) sqrt(m))`` where ``c1 K'`` is the
    multiplier applied to lambda1 (one in fig2 mode), so that ``kappa *
    lambda1`` depends only on the signal dimension.
    """
    scale = delta + epsilon
    if not scale > 0:
        raise ParameterError("delta + epsilon must be positive to plan lambdas")
    if m < 2:
        raise ParameterError("m must be at least 2 (lambda2 scales with sqrt(m ln m))")
    if signal_spec.kind == "sparse":
        base1 = math.sqrt(m * math.log(signal_spec.dim))
    else:
        base1 = math.sqrt(m * signal_spec.d)
    base2 = math.sqrt(m * math.log(m))
    if mode == "fig2":
        c1 = 2.0 if signal_spec.kind == "lowrank" else 1.0
        lam1 = c1 * scale * base1
        lam2 = scale * base2
        kappa = 2.0 / (scale * math.sqrt(m))
    elif mode == "corollary":
        c1, c2 = constants
        lam1 = c1 * K * scale * base1
        lam2 = c2 * K * scale * base2
        kappa = 2.0 / (c1 * K * scale * math.sqrt(m))
    else:
        raise ParameterError(f"unknown plan mode {mode!r}; expected 'fig2' or 'corollary'")
    return RegularizationPlan(lam1, lam2, kappa)
