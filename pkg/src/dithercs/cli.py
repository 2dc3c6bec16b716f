"""Command-line entry point: ``dithercs <command> [options]``.

Options can also come from a ``key = value`` text file passed with
``--config``; keys are the long option names with dashes or underscores.
Explicit flags win over the file.

Exit codes: 0 success, 2 parameter error, 3 non-convergence with
``--strict``, 4 I/O error.
"""

import argparse
import logging
import math
import sys

import numpy as np

from . import geometry, harness
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

EXIT_OK, EXIT_PARAM, EXIT_NONCONV, EXIT_IO = 0, 2, 3, 4

# hard defaults; the config file and then explicit flags override these
DEFAULTS = {
    "seed": 0, "trials": 100, "threads": 1, "out": None, "strict": False,
    "signal": "sparse", "n": 256, "s": 5, "d": 16, "rank": 1, "k": 5, "m": 500,
    "delta": 0.1, "epsilon": 0.0, "ensemble": "gaussian", "K": 1.0,
    "nonlinearity": "uniform", "no_dither": False, "normalize": False,
    "solver": "constrained", "mode": "fig2", "c1": 1.0, "c2": 1.0,
    "max_iters": 20_000, "rel_tol": 1e-9,
    "sweep": "m", "values": "100,200,300,400,500", "experiment_id": "sweep",
    "samples": 10_000, "csv": None, "instance": None,
}


class CLIError(Exception):
    def __init__(self, msg, code):
        super().__init__(msg)
        self.code = code


def _bool(text):
    t = str(text).strip().lower()
    if t in ("1", "true", "yes", "on"):
        return True
    if t in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def read_config(path):
    """Parse a ``key = value`` file (``#`` starts a comment)."""
    out = {}
    try:
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ParameterError(f"{path}:{lineno}: expected 'key = value'")
                key, val = (p.strip() for p in line.split("=", 1))
                out[key.replace("-", "_")] = val
    except OSError as exc:
        raise CLIError(f"cannot read config {path}: {exc}", EXIT_IO) from exc
    return out


def _global(p):
    p.add_argument("--config", help="key = value file with option defaults")
    p.add_argument("--seed", type=int, help="master seed (default 0)")
    p.add_argument("--trials", type=int, help="trials per sweep value (default 100)")
    p.add_argument("--out", help="output file or directory")
    p.add_argument("--threads", type=int, help="worker processes for sweeps (default 1)")
    p.add_argument("--strict", action="store_const", const=True,
                   help="exit with code 3 if any solve fails to converge")


def _problem(p):
    p.add_argument("--signal", choices=("sparse", "lowrank"))
    p.add_argument("--n", type=int, help="sparse signal dimension")
    p.add_argument("--s", type=int, help="signal sparsity")
    p.add_argument("--d", type=int, help="low-rank side length")
    p.add_argument("--rank", type=int, help="low-rank signal rank")
    p.add_argument("--k", type=int, help="corruption sparsity (0 = no corruption)")
    p.add_argument("--m", type=int, help="number of measurements")
    p.add_argument("--delta", type=float, help="quantizer resolution")
    p.add_argument("--epsilon", type=float, help="noise l-inf level")
    p.add_argument("--ensemble", choices=("gaussian", "rademacher"))
    p.add_argument("--K", type=float, help="nominal sub-Gaussian norm")
    p.add_argument("--nonlinearity", choices=("uniform", "sign", "tanh", "identity"))
    p.add_argument("--no-dither", action="store_const", const=True)
    p.add_argument("--normalize", action="store_const", const=True, help="unit-norm truths")


def _solver(p):
    p.add_argument("--solver", choices=harness.SOLVERS)
    p.add_argument("--mode", choices=("fig2", "corollary"), help="lambda plan mode")
    p.add_argument("--c1", type=float, help="lambda1 constant in corollary mode")
    p.add_argument("--c2", type=float, help="lambda2 constant in corollary mode")
    p.add_argument("--max-iters", type=int)
    p.add_argument("--rel-tol", type=float)


def build_parser():
    parser = argparse.ArgumentParser(prog="dithercs", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate one problem instance (.npz)")
    _global(p), _problem(p)

    p = sub.add_parser("solve", help="solve one instance and report errors")
    _global(p), _problem(p), _solver(p)
    p.add_argument("--instance", help=".npz written by 'gen' (otherwise generate from flags)")

    p = sub.add_parser("sweep", help="seeded trial sweep written as CSV")
    _global(p), _problem(p), _solver(p)
    p.add_argument("--sweep", choices=harness.SWEEPS)
    p.add_argument("--values", help="comma-separated increasing sweep values")
    p.add_argument("--experiment-id")

    p = sub.add_parser("geometry", help="closed-form and Monte Carlo geometry report")
    _global(p), _problem(p)
    p.add_argument("--mode", choices=("fig2", "corollary"))
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)
    p.add_argument("--samples", type=int)
    p.add_argument("--csv", help="also write the report as a one-row CSV")

    p = sub.add_parser("plan-lambda", help="print lambda1, lambda2 and kappa")
    _global(p), _problem(p)
    p.add_argument("--mode", choices=("fig2", "corollary"))
    p.add_argument("--c1", type=float)
    p.add_argument("--c2", type=float)

    p = sub.add_parser("reproduce", help="rerun the experiments behind one figure")
    _global(p)
    p.add_argument("figure", choices=harness.FIGURES)
    p.add_argument("--ensemble", choices=("gaussian", "rademacher"))
    return parser, sub


def resolve(args, subparser):
    """Merge hard defaults, config-file values and flags (flags win)."""
    opts = dict(DEFAULTS)
    types = {a.dest: a.type for a in subparser._actions if a.dest != "help"}
    if args.config:
        for key, raw in read_config(args.config).items():
            if key not in types:
                raise ParameterError(f"unknown config key {key!r}")
            conv = types[key]
            if conv is None:
                conv = _bool if isinstance(DEFAULTS.get(key), bool) else str
            try:
                opts[key] = conv(raw)
            except ValueError as exc:
                raise ParameterError(f"config key {key!r}: {exc}") from exc
    for key, val in vars(args).items():
        if val is not None:
            opts[key] = val
    return argparse.Namespace(**opts)


def _signal_spec(o):
    if o.signal == "sparse":
        return StructureSpec.sparse(o.n, o.s)
    return StructureSpec.lowrank(o.d, o.rank)


def _scheme(o):
    return QuantizationScheme(o.nonlinearity, o.delta, not o.no_dither)


def _generate(o):
    sig = _signal_spec(o)
    corr = StructureSpec.sparse(o.m, o.k) if o.k else None
    truth = generate_ground_truth(sig, corr, derive_seed(o.seed, "truth"))
    if corr is None:
        truth.v_star = np.zeros(o.m)
    if o.normalize:
        truth.x_star = truth.x_star / np.linalg.norm(truth.x_star)
        if corr is not None:
            truth.v_star = truth.v_star / np.linalg.norm(truth.v_star)
    Phi = sample_matrix(MeasurementEnsemble(o.ensemble, o.K), o.m, sig.dim, derive_seed(o.seed, "matrix"))
    noise = sample_noise(NoiseSpec(o.epsilon), o.m, derive_seed(o.seed, "noise"))
    ybar = linear_observe(Phi, truth, noise)
    y, tau = observe(ybar, _scheme(o), derive_seed(o.seed, "dither"))
    return {"Phi": Phi, "y": y, "tau": tau, "ybar": ybar, "noise": noise,
            "x_star": truth.x_star, "v_star": truth.v_star}


def _save_npz(path, data, meta):
    try:
        np.savez(path, **data, **{f"meta_{k}": v for k, v in meta.items()})
    except OSError as exc:
        raise CLIError(f"cannot write {path}: {exc}", EXIT_IO) from exc


def cmd_gen(o, out):
    data = _generate(o)
    path = o.out or "instance.npz"
    meta = {"signal": o.signal, "n": o.n, "s": o.s, "d": o.d, "rank": o.rank, "k": o.k, "m": o.m,
            "delta": o.delta, "epsilon": o.epsilon, "seed": o.seed}
    _save_npz(path, data, meta)
    out.write(f"wrote {path}  (m={o.m}, n={data['Phi'].shape[1]})\n")
    return EXIT_OK


def _load_instance(path):
    try:
        with np.load(path) as z:
            return {k: z[k] for k in z.files}
    except OSError as exc:
        raise CLIError(f"cannot read instance {path}: {exc}", EXIT_IO) from exc


def cmd_solve(o, out):
    if o.instance:
        data = _load_instance(o.instance)
        for key in ("signal", "n", "s", "d", "rank", "k", "m", "delta", "epsilon"):
            if f"meta_{key}" in data:
                val = data[f"meta_{key}"].item()
                setattr(o, key, val)
    else:
        data = _generate(o)
    sig = _signal_spec(o)
    Phi, y = data["Phi"], data["y"]
    x_star, v_star = data["x_star"], data["v_star"]
    f = norm_for(sig)
    g = L1Norm() if o.k else None
    cfg = SolverConfig(max_iters=o.max_iters, rel_tol=o.rel_tol)
    R1, R2 = f.evaluate(x_star), (g.evaluate(v_star) if g else 0.0)
    if o.solver == "constrained":
        sol = solve_constrained(Phi, y, f, R1, g, R2, cfg)
    elif o.solver == "unconstrained":
        plan = plan_lambdas(sig, Phi.shape[0], o.delta, o.epsilon, K=o.K, mode=o.mode,
                            constants=(o.c1, o.c2))
        sol = solve_unconstrained(Phi, y, f, g, plan, cfg)
    else:
        sol = solve_pbp(Phi, y, f, R1, g, R2)
    ex = float(np.linalg.norm(sol.x_hat - x_star))
    ev = float(np.linalg.norm(sol.v_hat - v_star))
    for key, val in (("solver", o.solver), ("err_x", ex), ("err_v", ev), ("err_joint", math.hypot(ex, ev)),
                     ("iters", sol.iters), ("objective", sol.objective),
                     ("kkt_residual", sol.kkt_residual), ("converged", sol.converged)):
        out.write(f"{key:<14}{val}\n")
    if o.out:
        _save_npz(o.out, {"x_hat": sol.x_hat, "v_hat": sol.v_hat}, {})
    if o.strict and not sol.converged:
        return EXIT_NONCONV
    return EXIT_OK


def _sweep_config(o):
    try:
        values = tuple(float(v) if o.sweep != "m" else int(v) for v in str(o.values).split(","))
    except ValueError as exc:
        raise ParameterError(f"bad --values: {exc}") from exc
    return harness.ExperimentConfig(
        experiment_id=o.experiment_id,
        signal=_signal_spec(o),
        k=o.k or None,
        ensemble=MeasurementEnsemble(o.ensemble, o.K),
        scheme=_scheme(o),
        epsilon=o.epsilon,
        m=o.m,
        sweep=o.sweep,
        values=values,
        trials=o.trials,
        solver=o.solver,
        plan_mode=o.mode,
        normalize=o.normalize,
        master_seed=o.seed,
        solver_cfg=SolverConfig(max_iters=o.max_iters, rel_tol=o.rel_tol),
    )


def cmd_sweep(o, out):
    cfg = _sweep_config(o)
    path = o.out or f"{cfg.experiment_id}.csv"
    rows, summary = harness.run_sweep(cfg, threads=o.threads, out=path)
    for p in summary:
        out.write(f"{cfg.sweep}={p['value']:<8g} mean={p['mean']:.6g} std={p['std']:.4g} trials={p['trials']}\n")
    if len(summary) >= 3:
        fit = harness.fit_loglog_slope([p["value"] for p in summary], [p["mean"] for p in summary])
        out.write(f"slope={fit['slope']:.4f} intercept={fit['intercept']:.4f} r2={fit['r2']:.4f}\n")
    out.write(f"wrote {path}\n")
    if o.strict and not all(r["converged"] for r in rows):
        return EXIT_NONCONV
    return EXIT_OK


def cmd_geometry(o, out):
    sig = _signal_spec(o)
    corr = StructureSpec.sparse(o.m, max(o.k, 1))
    plan = plan_lambdas(sig, o.m, o.delta, o.epsilon, K=o.K, mode=o.mode, constants=(o.c1, o.c2))
    rep = geometry.geometry_report(sig, corr, o.m, o.delta, o.epsilon, K=o.K, plan=plan,
                                   samples=o.samples, seed=o.seed)
    d = rep.as_dict()
    width = max(map(len, d))
    for key, val in d.items():
        out.write(f"{key:<{width}}  {val:.17g}\n")
    if o.csv:
        try:
            with open(o.csv, "w", encoding="utf-8") as fh:
                fh.write(",".join(d) + "\n")
                fh.write(",".join(format(v, ".17g") for v in d.values()) + "\n")
        except OSError as exc:
            raise CLIError(f"cannot write {o.csv}: {exc}", EXIT_IO) from exc
    return EXIT_OK


def cmd_plan_lambda(o, out):
    plan = plan_lambdas(_signal_spec(o), o.m, o.delta, o.epsilon, K=o.K, mode=o.mode,
                        constants=(o.c1, o.c2))
    out.write(f"lambda1  {plan.lambda1:.17g}\nlambda2  {plan.lambda2:.17g}\nkappa    {plan.kappa:.17g}\n")
    return EXIT_OK


def cmd_reproduce(o, out):
    out_dir = o.out or "."
    results = harness.reproduce(o.figure, ensemble=o.ensemble, out_dir=out_dir, trials=o.trials,
                                master_seed=o.seed, threads=o.threads)
    nonconv = False
    for exp_id, res in results.items():
        fit = res["fit"]
        out.write(f"{exp_id}: slope={fit['slope']:.4f} r2={fit['r2']:.4f}\n")
        nonconv |= not all(r["converged"] for r in res["rows"])
    out.write(f"wrote results to {out_dir}\n")
    if o.strict and nonconv:
        return EXIT_NONCONV
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "sweep": cmd_sweep,
    "geometry": cmd_geometry,
    "plan-lambda": cmd_plan_lambda,
    "reproduce": cmd_reproduce,
}


def main(argv=None, out=None):
    out = out or sys.stdout
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    parser, sub = build_parser()
    args = parser.parse_args(argv)
    try:
        opts = resolve(args, sub.choices[args.command])
        return COMMANDS[args.command](opts, out)
    except ParameterError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_PARAM
    except CLIError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return exc.code
    except OSError as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
