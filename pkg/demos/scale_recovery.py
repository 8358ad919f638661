"""Recovering filter scales from sampled labels.

Draws labels from a known multi-scale filter, refits the scales from scratch
at several training fractions, and prints how the filter and prediction
errors shrink as more nodes are observed. A trimmed-down version of the full
protocol (fewer repetitions) so it finishes in under a minute.

Run:  python demos/scale_recovery.py
"""

import numpy as np

from wavegp import ExperimentConfig, run_scale_recovery

config = ExperimentConfig(
    fractions=(0.1, 0.3, 0.7),
    repetitions=5,
    restarts=2,
    seed=0,
)
truth = config.truth_filter()
print(f"truth filter: alpha={truth.low_pass_scale}, betas={truth.band_scales}")
print(f"{config.repetitions} label draws, fractions {config.fractions}\n")

report = run_scale_recovery(config)

print(f"{'fraction':>9} {'filter MAE':>12} {'prediction MAE':>15}")
for agg in report.aggregates:
    print(f"{agg['fraction']:>9.0%} {agg['filter_mae_median']:>12.4f} "
          f"{agg['prediction_mae_median']:>15.4f}")

best = report.extra["representative_fit"]
fitted = best["filter"]
print(f"\nbest fit at {best['fraction']:.0%} training:")
print(f"  alpha = {fitted['alpha']:.2f}   (truth {truth.low_pass_scale})")
print(f"  betas = {[round(b, 2) for b in sorted(fitted['betas'])]}   "
      f"(truth {list(truth.band_scales)})")
print(f"\n{report.failures} failed fits, {report.wall_clock:.1f}s wall clock")

# The same report can be written to disk as report.json plus plot CSVs:
#   from wavegp import write_report
#   write_report(report, "results/")
