"""Weighted conformal baselines next to the LP-aggregated band.

Both baselines split the source in half, fit their score models on the
first part, and calibrate weighted scores on the second. The
variance-adjusted score divides by a kernel scale estimate; shrinking its
bandwidth overfits the scale and widens the resulting intervals, while
the aggregated band stays put because misbehaving candidates simply get
down-weighted by the LP.

Run with: python demos/04_conformal_baselines.py
"""

import numpy as np

from piagg import (
    SplitSpec,
    coverage_and_width,
    fit_covariate_shift,
    fit_density_ratio,
    fit_wqc,
    fit_wvac,
    gen_hetero_sim,
    predict_interval,
    predict_wqc,
    predict_wvac,
    split,
    weighted_resample,
)
from piagg.numerics import sigmoid

table = gen_hetero_sim(3000, seed=31)
train, held = split(table, SplitSpec((0.75, 0.25), seed=32))
target = weighted_resample(held, sigmoid(held.x @ np.array([2.0])), held.n, seed=33)
alpha = 0.05

agg = fit_covariate_shift(train, target.x, alpha, seed=34)
rows = [("lp aggregation", *coverage_and_width(predict_interval(agg, target.x), target.y))]

train1, cal = split(train, SplitSpec((0.5, 0.5), seed=35))
ratio = fit_density_ratio(train1.x, target.x)
for bw in (None, 0.02, 0.005):
    wvac = fit_wvac(train1, cal, ratio, bandwidth=bw)
    cov, width = coverage_and_width(predict_wvac(wvac, target.x, alpha), target.y)
    label = "default" if bw is None else f"h={bw}"
    rows.append((f"wvac ({label})", cov, width))

wqc = fit_wqc(train1, cal, ratio, alpha)
rows.append(("wqc", *coverage_and_width(predict_wqc(wqc, target.x, alpha), target.y)))

print(f"{'method':<18} {'coverage':>9} {'width':>8}")
for name, cov, width in rows:
    print(f"{name:<18} {cov:9.3f} {width:8.3f}")
