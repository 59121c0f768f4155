"""
Walkthrough: distribution functions and the monotone rearrangement.

A small weighted graph carries a three-valued function; we read off its
distribution step function, generalized inverse, and rearrangement onto the
weighted interval, then verify equimeasurability and norm preservation on
random data.
"""

import numpy as np

from rgap import (
    DiscreteMMS,
    ModelSpace,
    SampledFunction,
    build_model_interval,
    distribution,
    generalized_inverse,
    lp_norm,
    lp_norm_df,
    rearrange,
)

print("=" * 72)
print("Three-point example")
print("=" * 72)

X = DiscreteMMS(masses=[0.5, 0.3, 0.2], edges_i=[0, 1], edges_j=[1, 2],
                edge_length=[1.0, 1.0], edge_cut=[1.0, 1.0])
u = SampledFunction(X, [2.0, 1.0, 0.0])
df = distribution(u)
print("thresholds      :", df.thresholds)
print("mass above each :", df.masses)
for t in (0.0, 0.5, 1.0, 1.5, 2.0):
    print(f"  mu({t}) = {df(t)}")
for s in (0.0, 0.4, 0.6, 0.9, 1.2):
    print(f"  inverse({s}) = {generalized_inverse(df, s)}")

ms = ModelSpace(1, 2)
w = rearrange(u, ms=ms, J=12)
print("\nrearranged onto [0, r] with r =", w.r)
for x, val in zip(w.grid, w.values):
    print(f"  u*({x:.4f}) = {val}")

print("\nNorm preservation (layer cake vs direct, exact on step data):")
for p in (1.0, 2.0, 3.5):
    print(f"  p={p}: |u|_p = {lp_norm(u, p=p):.15f}   "
          f"from distribution = {lp_norm_df(df, p):.15f}")

print("\nRandom data on the model-interval builder:")
rng = np.random.default_rng(0)
Xi = build_model_interval(1, 2, 48, ms=ms)
worst = 0.0
for _ in range(100):
    ui = SampledFunction(Xi, rng.uniform(0, 3, 48))
    dfi = distribution(ui)
    wi = rearrange(ui, ms=ms, J=96)
    # the rearranged function carries the exact same step structure
    dfw = wi.distribution()
    assert np.array_equal(dfi.thresholds, dfw.thresholds)
    for p in (1.0, 2.0, 3.5):
        worst = max(worst, abs(lp_norm(ui, p=p) - lp_norm_df(dfi, p)))
print(f"  equimeasurability exact; worst norm gap over 100 samples: {worst:.2e}")
