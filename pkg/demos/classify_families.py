"""
Which tori are constrained minimal?
===================================

Build the explicit families, fit the quadratic differential Q and sort each
torus into a bucket.  A Moebius image of the Clifford torus is added as a
torus that fails the fit.
"""

import numpy as np

from conftori import (CurveOnS2, clifford_torus, flat_cmc_torus, geometry, hopf_torus_circle,
                      hopf_torus_curve)
from conftori.constrained import classify_theorem_I2, ellipticity
from conftori.moebius import push_immersion

tori = {
    "clifford": clifford_torus(64),
    "flat cmc a=0.3": flat_cmc_torus(0.3, 64, 64),
    "flat cmc a=0.8": flat_cmc_torus(0.8, 64, 64),
    "hopf circle k=1": hopf_torus_circle(1.0, 64, 64),
    # a wavy base curve gives a Hopf torus that is constrained but not flat
    "wavy hopf": hopf_torus_curve(CurveOnS2.wavy_circle(1.0, 0.05, 3), 128, 32),
    "moebius clifford": push_immersion(np.array([0.1, 0, 0, 0.05]), clifford_torus(64)),
}

print(f"{'torus':18s} {'bucket':16s} {'Q':>24s} {'fit res':>9s} {'2|Q| range':>18s}")
for name, phi in tori.items():
    geo = geometry(phi)
    c = classify_theorem_I2(geo)
    two_q = ellipticity(geo, c.fit.Q).two_Q_norm
    q = c.fit.Q.value
    print(f"{name:18s} {c.bucket:16s} {q.real:11.6f}{q.imag:+11.6f}i "
          f"{c.fit.rel_residual:9.1e} [{two_q.min():.4f}, {two_q.max():.4f}]")

# flat CMC tori: H is constant and matches the closed form
for a in (0.3, 0.6, 0.8):
    H = geometry(flat_cmc_torus(a, 32, 32)).H
    print(f"a={a}: H={H.mean():+.10f}  closed form {(1 - 2 * a * a) / (2 * a * np.sqrt(1 - a * a)):+.10f}")
