"""Hard thresholding against the best fixed-bandwidth kernel estimator.

One threshold configuration (kappa = 1) is applied to a smooth density and to
a density with corners.  The best kernel bandwidth is found by brute force
over a dyadic grid, which the threshold estimator never gets to see.
"""

import math

from spectral_kde import Circle, EstimatorRecipe, RandomStream, mc_risk
from spectral_kde.sim import density_sample, make_kinked_density, make_smooth_density

C = Circle()
n = 2**12
reps = 8
densities = {"smooth": make_smooth_density(C, 2.0), "kinked": make_kinked_density(C, 1.0)}
threshold = EstimatorRecipe("threshold", kappa=1.0)

for i, (name, f) in enumerate(densities.items()):
    root = RandomStream(3, i)
    thr = mc_risk(C, threshold, f, n, 2.0, reps, root.child(0))
    kernel = {}
    for k in range(1, 8):
        delta = 2.0**-k
        kernel[delta] = mc_risk(C, EstimatorRecipe("kernel", delta=delta), f, n, 2.0, reps, root.child(k)).mean
    best = min(kernel, key=kernel.get)
    est = threshold.fit(C, density_sample(f, n, root.child(99).generator))
    print(f"{name}: threshold risk {thr.mean:.4f}, best kernel risk {kernel[best]:.4f} at delta={best:g}")
    print(f"  ratio {thr.mean / kernel[best]:.2f} (allowed 3 log n = {3 * math.log(n):.1f}), survivors per level {est.survivors}")
