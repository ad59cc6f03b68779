"""Run a small Monte-Carlo study end to end and read back the report.

A scenario document fixes the data source, the shift, the methods, and
the seeding; the runner replays it deterministically and writes a
per-replication CSV plus JSON aggregates. Rerunning the same document
reproduces the statistical columns byte for byte.

Run with: python demos/05_benchmark_harness.py
"""

import json
import tempfile

from piagg import ScenarioConfig, emit_report, run_scenario

config = ScenarioConfig.from_dict({
    "data": {"kind": "synthetic", "generator": "hetero1d", "n": 1200},
    "shift": {"kind": "sigmoid", "beta": [2.0]},
    "methods": [
        {"name": "alg1", "mode": "exact"},
        {"name": "alg2"},
        {"name": "wvac"},
        {"name": "wqc"},
    ],
    "alpha_level": 0.05,
    "replications": 10,
    "base_seed": 20240817,
})

summary = run_scenario(config)
out_dir = tempfile.mkdtemp(prefix="piagg_demo_")
csv_path, json_path = emit_report(summary, out_dir)
print(f"wrote {csv_path}\n      {json_path}\n")

aggregates = json.load(open(json_path))["aggregates"]
print(f"{'method':<8} {'cov med':>8} {'cov iqr':>8} {'width med':>10} {'width iqr':>10}")
for method, entry in aggregates.items():
    print(f"{method:<8} {entry['coverage']['median']:8.3f} "
          f"{entry['coverage']['iqr']:8.3f} {entry['avg_width']['median']:10.3f} "
          f"{entry['avg_width']['iqr']:10.3f}")

if summary.failures:
    print("\nfailures:", summary.failures)
