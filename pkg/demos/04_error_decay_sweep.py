"""
Error decay with the number of measurements
===========================================

A small seeded sweep over m. The log-log slope of the mean joint error should
sit near -1/2. Pass a trial count on the command line for a longer run.
"""

import sys

from dithercs import StructureSpec
from dithercs.harness import ExperimentConfig, fit_loglog_slope, run_sweep

trials = int(sys.argv[1]) if len(sys.argv) > 1 else 10
cfg = ExperimentConfig("demo_decay", StructureSpec.sparse(256, 5), k=5,
                       values=(100, 200, 300, 400, 500), trials=trials, master_seed=0)
rows, summary = run_sweep(cfg, out="demo_decay.csv")
for p in summary:
    print(f"m={p['value']:4d}  mean err={p['mean']:.4f}  std={p['std']:.4f}")
fit = fit_loglog_slope([p["value"] for p in summary], [p["mean"] for p in summary])
print(f"log-log slope {fit['slope']:.3f} (r2 {fit['r2']:.3f}); rows saved to demo_decay.csv")
