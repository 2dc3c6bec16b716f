"""Seeded trial sweeps, CSV persistence and log-log slope fits.

A sweep varies one of ``m``, ``delta`` or ``epsilon`` and runs independent
trials at each value. Every trial derives its randomness from
``(master_seed, trial_index)`` only, so the same trial index shares its
signal, matrix, noise and dither streams across sweep values (common random
numbers) and results do not depend on scheduling.
"""

from concurrent.futures import ProcessPoolExecutor
import csv
from dataclasses import dataclass, field, replace
import logging
import math
import os
import time

import numpy as np
from scipy import stats

from .model import (
    MeasurementEnsemble,
    NoiseSpec,
    ParameterError,
    StructureSpec,
    derive_seed,
    generate_ground_truth,
    linear_observe,
    sample_matrix,
    sample_noise,
)
from .prox import L1Norm, norm_for
from .quantize import QuantizationScheme, observe
from .solve import SolverConfig, plan_lambdas, solve_constrained, solve_pbp, solve_unconstrained

__all__ = [
    "FIELDS",
    "FIGURES",
    "ExperimentConfig",
    "TrialInstance",
    "build_instance",
    "run_trial",
    "run_sweep",
    "summarize",
    "write_csv",
    "read_csv",
    "fit_loglog_slope",
    "figure_configs",
    "reproduce",
]

log = logging.getLogger(__name__)

FIELDS = (
    "experiment_id", "m", "n", "s", "k", "d", "rho", "delta", "epsilon", "trial", "seed",
    "solver", "err_x", "err_v", "err_joint", "iters", "kkt_residual", "converged", "runtime_ms",
)
_INT_FIELDS = {"m", "n", "s", "k", "d", "rho", "trial", "seed", "iters"}
_FLOAT_FIELDS = {"delta", "epsilon", "err_x", "err_v", "err_joint", "kkt_residual", "runtime_ms"}

SOLVERS = ("constrained", "unconstrained", "pbp")
SWEEPS = ("m", "delta", "epsilon")


@dataclass(frozen=True)
class ExperimentConfig:
    """One curve of an experiment.

    `signal` fixes the signal structure. The corruption is a `k`-sparse
    vector of length m (``k=None`` means corruption-free). The swept
    quantity overrides the matching fixed field (`m`, ``scheme.delta`` or
    `epsilon`).
    """

    experiment_id: str
    signal: StructureSpec
    k: int | None = 5
    ensemble: MeasurementEnsemble = MeasurementEnsemble()
    scheme: QuantizationScheme = QuantizationScheme()
    epsilon: float = 0.0
    m: int = 500
    sweep: str = "m"
    values: tuple = (100, 200, 300, 400, 500)
    trials: int = 100
    solver: str = "constrained"
    plan_mode: str = "fig2"
    normalize: bool = False
    master_seed: int = 0
    solver_cfg: SolverConfig = field(default_factory=SolverConfig)

    def __post_init__(self):
        vals = tuple(self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ParameterError("sweep value list is empty")
        if any(b <= a for a, b in zip(vals, vals[1:])):
            raise ParameterError("sweep values must be strictly increasing")
        if self.trials < 1:
            raise ParameterError("trials must be at least 1")
        if self.sweep not in SWEEPS:
            raise ParameterError(f"unknown sweep variable {self.sweep!r}; expected one of {SWEEPS}")
        if self.solver not in SOLVERS:
            raise ParameterError(f"unknown solver {self.solver!r}; expected one of {SOLVERS}")

    def point(self, value):
        """(m, delta, epsilon) at one sweep value."""
        m, delta, eps = int(self.m), float(self.scheme.delta), float(self.epsilon)
        if self.sweep == "m":
            m = int(value)
        elif self.sweep == "delta":
            delta = float(value)
        else:
            eps = float(value)
        return m, delta, eps


def _error(a, b):
    return float(np.linalg.norm(a - b))


@dataclass
class TrialInstance:
    """Everything one trial solves: the data and the truth it came from."""

    Phi: np.ndarray
    y: np.ndarray
    truth: object
    seed: int
    m: int
    delta: float
    epsilon: float


def build_instance(config, value, trial):
    """Generate and observe the problem of one (sweep value, trial) pair.

    Truths are rescaled to unit norm when ``config.normalize`` is set.
    """
    m, delta, eps = config.point(value)
    sig = config.signal
    seed = derive_seed(config.master_seed, "trial", trial)
    corr_spec = None if config.k is None else StructureSpec.sparse(m, config.k)
    truth = generate_ground_truth(sig, corr_spec, seed)
    if corr_spec is None:
        truth.v_star = np.zeros(m)
    if config.normalize:
        truth.x_star = truth.x_star / np.linalg.norm(truth.x_star)
        if corr_spec is not None:
            truth.v_star = truth.v_star / np.linalg.norm(truth.v_star)

    Phi = sample_matrix(config.ensemble, m, sig.dim, derive_seed(seed, "matrix"))
    noise = sample_noise(NoiseSpec(eps), m, derive_seed(seed, "noise"))
    ybar = linear_observe(Phi, truth, noise)
    scheme = replace(config.scheme, delta=delta)
    y, _ = observe(ybar, scheme, derive_seed(seed, "dither"))
    return TrialInstance(Phi, y, truth, seed, m, delta, eps)


def run_trial(config, value, trial):
    """Generate, observe and solve one problem instance; return its CSV row.

    Constrained and PBP radii are the oracle values ``f(x*)`` and ``g(v*)``.
    Errors are Euclidean (Frobenius for matrix signals).
    """
    inst = build_instance(config, value, trial)
    Phi, y, truth, seed = inst.Phi, inst.y, inst.truth, inst.seed
    m, delta, eps = inst.m, inst.delta, inst.epsilon
    sig = config.signal
    corr_spec = truth.corruption_spec

    f = norm_for(sig)
    g = None if corr_spec is None else L1Norm()
    R1 = f.evaluate(truth.x_star)
    R2 = 0.0 if g is None else g.evaluate(truth.v_star)
    t0 = time.perf_counter()
    if config.solver == "constrained":
        sol = solve_constrained(Phi, y, f, R1, g, R2, config.solver_cfg)
    elif config.solver == "unconstrained":
        plan = plan_lambdas(sig, m, delta, eps, K=config.ensemble.nominal_K, mode=config.plan_mode)
        sol = solve_unconstrained(Phi, y, f, g, plan, config.solver_cfg)
    else:
        sol = solve_pbp(Phi, y, f, R1, g, R2)
    runtime_ms = 1e3 * (time.perf_counter() - t0)
    if not sol.converged:
        log.warning("%s: solver did not converge (value=%s, trial=%d, kkt=%.3g)",
                    config.experiment_id, value, trial, sol.kkt_residual)

    err_x = _error(sol.x_hat, truth.x_star)
    err_v = _error(sol.v_hat, truth.v_star)
    return {
        "experiment_id": config.experiment_id,
        "m": m,
        "n": sig.dim,
        "s": sig.s if sig.kind == "sparse" else 0,
        "k": 0 if config.k is None else config.k,
        "d": sig.d,
        "rho": sig.rank,
        "delta": delta,
        "epsilon": eps,
        "trial": trial,
        "seed": seed,
        "solver": config.solver,
        "err_x": err_x,
        "err_v": err_v,
        "err_joint": math.hypot(err_x, err_v),
        "iters": sol.iters,
        "kkt_residual": sol.kkt_residual,
        "converged": bool(sol.converged),
        "runtime_ms": runtime_ms,
    }


def _trial_task(args):
    return run_trial(*args)


def summarize(config, rows, metric="err_joint"):
    """Per sweep value: mean and sample std of `metric` and the trial count."""
    key = {"m": "m", "delta": "delta", "epsilon": "epsilon"}[config.sweep]
    out = []
    for value in config.values:
        vals = np.array([r[metric] for r in rows if r[key] == value], dtype=float)
        out.append({
            "value": value,
            "mean": float(vals.mean()),
            "std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0,
            "trials": int(vals.size),
        })
    return out


def run_sweep(config, threads=1, out=None):
    """Run every (value, trial) pair of `config`.

    Trials are spread over `threads` worker processes when ``threads > 1``.
    Rows come back sorted by sweep value then trial, whatever the completion
    order. When `out` is given the rows are also written there as CSV.

    Returns
    -------
    rows : list of dict
    summary : list of dict
        See :func:`summarize`.
    """
    tasks = [(config, v, t) for v in config.values for t in range(config.trials)]
    if threads > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(_trial_task, tasks, chunksize=max(1, len(tasks) // (4 * threads))))
    else:
        rows = [_trial_task(t) for t in tasks]
    order = {v: i for i, v in enumerate(config.values)}
    key = {"m": "m", "delta": "delta", "epsilon": "epsilon"}[config.sweep]
    rows.sort(key=lambda r: (order[r[key]], r["trial"]))
    if out is not None:
        write_csv(rows, out)
    return rows, summarize(config, rows)


def _fmt(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return format(value, ".17g")
    return str(value)


def write_csv(rows, path):
    """Write rows with the fixed header; floats keep 17 significant digits."""
    try:
        dirname = os.path.dirname(os.fspath(path))
        if dirname:
            os.makedirs(dirname, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(FIELDS)
            for r in rows:
                w.writerow([_fmt(r[k]) for k in FIELDS])
    except OSError as exc:
        raise OSError(f"could not write CSV to {path}: {exc}") from exc


def read_csv(path):
    """Inverse of :func:`write_csv`."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = list(csv.DictReader(fh))
    except OSError as exc:
        raise OSError(f"could not read CSV from {path}: {exc}") from exc
    for r in rows:
        for k in _INT_FIELDS:
            r[k] = int(r[k])
        for k in _FLOAT_FIELDS:
            r[k] = float(r[k])
        r["converged"] = r["converged"] == "true"
    return rows


def fit_loglog_slope(values, errors):
    """Least-squares line through ``(ln value, ln error)``.

    Returns a dict with ``slope``, ``intercept`` and ``r2``.
    """
    x = np.asarray(values, dtype=float)
    e = np.asarray(errors, dtype=float)
    if x.size < 3 or x.size != e.size:
        raise ParameterError("need at least 3 (value, error) pairs of equal length")
    if np.any(x <= 0) or np.any(e <= 0):
        raise ParameterError("log-log fit needs strictly positive values and errors")
    lx, le = np.log(x), np.log(e)
    if np.ptp(le) == 0:
        return {"slope": 0.0, "intercept": float(le[0]), "r2": 1.0}
    fit = stats.linregress(lx, le)
    return {"slope": float(fit.slope), "intercept": float(fit.intercept), "r2": float(fit.rvalue ** 2)}


# ---------------------------------------------------------------- figure presets

M_SPARSE = (100, 200, 300, 400, 500)
M_LOWRANK = (250, 500, 750, 1000, 1250)
DELTA_GRID = tuple(round(0.05 + 0.25 * i, 2) for i in range(13))
# extra small-resolution points where the PBP floor and the Lasso growth are compared
FIG3C_DELTAS = tuple(sorted(set(DELTA_GRID) | {0.15, 0.25}))
SPARSE_PAIRS = ((5, 5), (10, 5), (5, 10))
LOWRANK_PAIRS = ((1, 5), (2, 5), (1, 10))
NOISE_LEVELS = (0.05, 0.1, 0.15)

FIGURES = ("fig1a", "fig1b", "fig1c", "fig2a", "fig2b", "fig2c", "fig3a", "fig3b", "fig3c", "intro")


def figure_configs(figure, ensemble="gaussian", trials=100, master_seed=0):
    """The experiment curves behind one named figure preset."""
    if figure not in FIGURES:
        raise ParameterError(f"unknown figure {figure!r}; valid names: {', '.join(FIGURES)}")
    ens = MeasurementEnsemble(ensemble)
    common = dict(ensemble=ens, trials=trials, master_seed=master_seed)
    dq = QuantizationScheme("uniform", 0.1, True)
    panel, solver = figure[:4], "constrained"
    if panel == "fig2":
        solver = "unconstrained"
    kind = figure[4:]
    cfgs = []
    if panel in ("fig1", "fig2") and kind == "a":
        for s, k in SPARSE_PAIRS:
            cfgs.append(ExperimentConfig(f"{figure}_{ensemble}_s{s}_k{k}", StructureSpec.sparse(256, s), k,
                                         scheme=dq, values=M_SPARSE, solver=solver, **common))
    elif panel in ("fig1", "fig2") and kind == "b":
        for r, p in LOWRANK_PAIRS:
            cfgs.append(ExperimentConfig(f"{figure}_{ensemble}_rho{r}_p{p}", StructureSpec.lowrank(16, r), p,
                                         scheme=dq, values=M_LOWRANK, solver=solver, **common))
    elif panel in ("fig1", "fig2") and kind == "c":
        for eps in NOISE_LEVELS:
            cfgs.append(ExperimentConfig(f"{figure}_{ensemble}_eps{eps}", StructureSpec.sparse(256, 5), 5,
                                         scheme=dq, epsilon=eps, values=M_SPARSE, solver=solver, **common))
    elif figure == "fig3a":
        for sv in ("constrained", "pbp"):
            cfgs.append(ExperimentConfig(f"fig3a_{ensemble}_{sv}", StructureSpec.sparse(256, 5), 5,
                                         scheme=dq, values=M_SPARSE, solver=sv, **common))
    elif figure == "fig3b":
        for sv in ("constrained", "pbp"):
            cfgs.append(ExperimentConfig(f"fig3b_{ensemble}_{sv}", StructureSpec.lowrank(16, 1), 5,
                                         scheme=dq, values=M_LOWRANK, solver=sv, **common))
    elif figure == "fig3c":
        for sv in ("constrained", "pbp"):
            cfgs.append(ExperimentConfig(f"fig3c_{ensemble}_{sv}", StructureSpec.sparse(256, 5), 5,
                                         scheme=dq, m=500, sweep="delta", values=FIG3C_DELTAS, solver=sv,
                                         **common))
    else:  # intro
        schemes = {
            "uniform": QuantizationScheme("uniform", 0.3, False),
            "sign": QuantizationScheme("sign", 0.3, False),
            "tanh": QuantizationScheme("tanh", 0.3, False),
        }
        for name, sch in schemes.items():
            for k in (5, None):
                tag = "corrupted" if k else "clean"
                cfgs.append(ExperimentConfig(f"intro_{ensemble}_{name}_{tag}", StructureSpec.sparse(128, 5), k,
                                             scheme=sch, values=M_SPARSE, normalize=True, **common))
    return cfgs


def reproduce(figure, ensemble="gaussian", out_dir=".", trials=100, master_seed=0, threads=1):
    """Run every curve of `figure`, write one CSV per curve plus ``<figure>_summary.txt``.

    Returns a dict mapping experiment id to ``{"summary": ..., "fit": ...}``;
    the fit is the log-log slope of mean joint error against the sweep value.
    """
    cfgs = figure_configs(figure, ensemble, trials, master_seed)
    results = {}
    lines = []
    for cfg in cfgs:
        path = os.path.join(out_dir, f"{cfg.experiment_id}.csv")
        rows, summary = run_sweep(cfg, threads=threads, out=path)
        fit = fit_loglog_slope([p["value"] for p in summary], [p["mean"] for p in summary])
        results[cfg.experiment_id] = {"summary": summary, "fit": fit, "rows": rows}
        lines.append(f"{cfg.experiment_id}: slope={fit['slope']:.4f} r2={fit['r2']:.4f}")
        for p in summary:
            lines.append(f"  {cfg.sweep}={p['value']:<8g} mean={p['mean']:.6g} std={p['std']:.4g} "
                         f"trials={p['trials']}")
    summary_path = os.path.join(out_dir, f"{figure}_{ensemble}_summary.txt")
    try:
        with open(summary_path, "w", encoding="utf-8") as fh:
            fh.write("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"could not write summary to {summary_path}: {exc}") from exc
    return results
