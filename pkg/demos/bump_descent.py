"""
Area change of class-preserving bumps
=====================================

F_chi is the coefficient of t^2 eps^2 in the area change of a normal bump
corrected to keep the conformal class.  For the profile chi_tau it can be
negative only when k = |4 e^{-2 lam} Q1| exceeds 1.  The explicit tori here
all have k <= 1, so the bump raises area; the second half compares the
predicted and measured change on the flat CMC torus a = 0.6.
"""

import numpy as np

from conftori import flat_cmc_torus
from conftori.perturbation import (BumpSpec, chi_tau_closed_form, descent_expansion_check,
                                   descent_tau_threshold, radial_profile)

print("   k   threshold   F(tau=0.5)   F(tau=2)   F(tau=6)")
for k in (-2.0, -1.0, 0.0, 0.9, 1.5, 3.0):
    thr = descent_tau_threshold(k)
    vals = [chi_tau_closed_form(t, k) for t in (0.5, 2.0, 6.0)]
    print(f"{k:5.1f}   {thr if thr is not None else float('nan'):9.4f}  " +
          "  ".join(f"{v:10.5f}" for v in vals))

phi = flat_cmc_torus(0.6, 384, 512)
for eps in (0.2, 0.1):
    rep = descent_expansion_check(phi, BumpSpec(1 + 1j, radial_profile(), eps), delta=0.5)
    print(f"eps={eps}: measured {rep.lhs:.4e}  model {rep.model:.4e}  rel err {rep.rel_err:.3f}  "
          f"alpha={rep.alpha}")
