"""Kernel density estimation on the circle, bias and variance side by side.

A smooth heat-mixture density is sampled at increasing n.  For each n the
bandwidth follows delta = n^(-1/(2s+d)) and we report the exact bias
||Phi(delta sqrt L) f - f||_2 together with a Monte-Carlo L^2 risk.
"""

from spectral_kde import Circle, EstimatorRecipe, RandomStream, mc_risk
from spectral_kde.estimators import bandwidth_rule
from spectral_kde.risk import bias_term
from spectral_kde.sim import make_smooth_density

s = 2.0
C = Circle()
f = make_smooth_density(C, s)
recipe = EstimatorRecipe("kernel", s=s)

print(f"{'n':>6} {'delta':>8} {'bias':>10} {'risk':>10} {'stderr':>9}")
for i, k in enumerate(range(8, 15)):
    n = 2**k
    delta = bandwidth_rule(n, s, C.homogeneous_dim)
    risk = mc_risk(C, recipe, f, n, 2.0, 20, RandomStream(1, i))
    print(f"{n:>6} {delta:>8.4f} {bias_term(C, f, delta, 2.0):>10.5f} {risk.mean:>10.5f} {risk.stderr:>9.5f}")

print(f"\ntheory: risk ~ n^(-{s / (2 * s + 1):.2f}), i.e. a factor {2 ** (-s / (2 * s + 1)):.3f} per doubling")
# On the circle only harmonics with k pi delta < 1 pass, so at these n the
# estimator keeps one or two cosines and the bias moves in steps.
