"""
Conformal volume by ascent over Moebius maps
============================================

The area of Psi_a o Phi is a smooth function of a in the open 4-ball.  For
the Clifford torus the maximum sits at a = 0; a Moebius image of it has
smaller area but the same conformal volume.  The Hopf torus over a circle
has conformal volume well above its area.
"""

import numpy as np

from conftori import clifford_torus, flat_cmc_torus, geometry, hopf_torus_circle
from conftori.moebius import AreaFunctional, conformal_volume, push_immersion

tori = {
    "clifford": clifford_torus(64),
    "moebius image of clifford": push_immersion(np.array([0.3, 0.0, -0.1, 0.2]), clifford_torus(96)),
    "flat cmc a=0.6": flat_cmc_torus(0.6, 64, 64),
    "hopf circle k=1": hopf_torus_circle(1.0, 64, 64),
}

for name, phi in tori.items():
    r = conformal_volume(phi)
    print(f"{name:28s} area={geometry(phi).area:9.5f}  vc={r.vc:9.5f}  |a*|={np.linalg.norm(r.argmax):.4f}")
print(f"2 pi^2 = {2 * np.pi ** 2:.5f}")

# a slice of the area landscape for the Hopf torus
area = AreaFunctional(hopf_torus_circle(1.0, 64, 64))
for r in np.linspace(0, 0.9, 10):
    print(f"  a = {r:.1f} e2   area = {area(np.array([0, r, 0, 0])):.5f}")
