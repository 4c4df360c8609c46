"""A tight frame on the 2-sphere: analysis, synthesis and level energies.

A random band-limited function is split into frame coefficients level by
level.  Because the frame is tight, the squared coefficients add up to the
squared L^2 norm and synthesis reproduces the function.
"""

import numpy as np

from spectral_kde import Sphere2, build_frame, synthesize
from spectral_kde.frames import analyze_expansion
from spectral_kde.spectral import random_bandlimited

S = Sphere2()
J = 4
frame = build_frame(S, b=2.0, J_max=J)
print("net sizes per level:", frame.sizes)

rng = np.random.default_rng(5)
g = random_bandlimited(S, 2.0**J, rng)
beta = analyze_expansion(frame, g)

grid = S.quadrature_grid(2.0 ** (J + 1))
norm2 = grid.integrate(g(grid.nodes) ** 2)
energies = [float(v @ v) for v in beta.levels]
for j, e in enumerate(energies):
    print(f"level {j}: {len(beta.levels[j]):5d} coefficients, energy {e:9.4f}")
print(f"sum of level energies {sum(energies):.10f} vs ||g||^2 {norm2:.10f}")

probes = S.uniform_sample(rng, 2000)
err = np.max(np.abs(synthesize(frame, beta)(probes) - g(probes)))
print(f"reconstruction sup error on 2000 probes: {err:.2e}")
