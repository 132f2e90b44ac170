"""Why min{xi1^2, xi2^2} is far from convex.

The greatest convex minorant vanishes on the inner square, yet the function
itself is positive off the axes. Shrinking the argument by any beta does not
help: the pair (e1, e2) mixed at 1/2 lands on (beta/2, beta/2), where the
value beta^2/4 exceeds the average 0 of the endpoint values.
"""

import numpy as np

from anisorlicz import GridFunction, MinOf, QuadraticForm, check_almost_convex, convex_minorant_grid

phi = MinOf((QuadraticForm((1.0, 0.0)), QuadraticForm((0.0, 1.0))))

g = GridFunction.sample(phi, 2.0, 33)
env = convex_minorant_grid(g)
inner = np.max(np.abs(g.points), axis=1) <= 1.0
print(f"max envelope on [-1,1]^2: {np.max(env.values[inner]):.3e}")
print(f"max value on [-1,1]^2:    {np.max(g.values[inner]):.3e}")

cert = check_almost_convex(phi)
print(f"almost convex: {cert.passed}")
for b in (1.0, 0.5, 2.0 ** -10):
    w = cert.per_beta_witness[b]
    print(f"  beta={b:<12g} xi={w.xi} xi'={w.xi2} alpha={w.alpha} lhs={w.lhs:.3e} rhs={w.rhs}")
