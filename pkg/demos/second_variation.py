"""
Second variation at the Clifford torus
======================================

With Q = 0 the second variation of area along w = v n is the Jacobi form.
On the Clifford torus its value on cos(m1 u + m2 w) is pi^2 (2 |m|^2 - 4),
and on v = 1 it is -8 pi^2.  The last lines show the constrained version at
the Hopf torus over a circle, where Q is not zero.
"""

import numpy as np

from conftori import clifford_torus, geometry, hopf_torus_circle
from conftori.constrained import ZERO_Q, fit_Q
from conftori.variation import compose, random_variation, second_variation, second_variation_unreduced

geo = geometry(clifford_torus(64))
zero = np.zeros(geo.grid.shape)
for m1, m2 in [(0, 0), (1, 0), (1, 1), (2, 0), (2, 1), (3, 2)]:
    v = np.cos(m1 * geo.grid.x1 + m2 * geo.grid.x2)
    val = second_variation(geo, ZERO_Q, compose(geo, zero, zero, v))
    exact = -8 * np.pi ** 2 if (m1, m2) == (0, 0) else np.pi ** 2 * (2 * (m1 ** 2 + m2 ** 2) - 4)
    print(f"m=({m1},{m2})  Q''={val:12.6f}  closed form {exact:12.6f}")

hopf = geometry(hopf_torus_circle(1.0, 64, 64))
Q = fit_Q(hopf).Q
rng = np.random.default_rng(0)
for _ in range(3):
    w = random_variation(hopf, rng)
    print(f"hopf: reduced {second_variation(hopf, Q, w):+.10f}  "
          f"unreduced {second_variation_unreduced(hopf, Q, w):+.10f}")
