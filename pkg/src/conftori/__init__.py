"""Numerical toolkit for immersed tori in S^3 and conformally constrained minimal surfaces."""

from .grid import Lattice, PeriodicGrid, derivative, integrate
from .immersion import (CurveOnS2, Immersion, clifford_torus, flat_cmc_torus,
                        hopf_torus_circle, hopf_torus_curve, read_immersion,
                        validate_weak_immersion, write_immersion)
from .geometry import GeometryFields, gauss_map, geometry
from .constrained import (QuadraticDifferential, ccms_residual, classify_theorem_I2,
                          cmc_relations_check, ellipticity, fit_Q, isothermic_test,
                          strict_pde_residual)
from .moebius import check_lemma_V1, check_lemma_V2, conformal_volume, psi
from .variation import fd_harness, second_variation
from .perturbation import (BumpSpec, F_chi, chi_tau, descent_expansion_check,
                           mobius_uniform_descent_check, radial_profile)

__all__ = [
    "Lattice", "PeriodicGrid", "derivative", "integrate",
    "CurveOnS2", "Immersion", "clifford_torus", "flat_cmc_torus",
    "hopf_torus_circle", "hopf_torus_curve", "read_immersion",
    "validate_weak_immersion", "write_immersion",
    "GeometryFields", "gauss_map", "geometry",
    "QuadraticDifferential", "ccms_residual", "classify_theorem_I2",
    "cmc_relations_check", "ellipticity", "fit_Q", "isothermic_test",
    "strict_pde_residual",
    "check_lemma_V1", "check_lemma_V2", "conformal_volume", "psi",
    "fd_harness", "second_variation",
    "BumpSpec", "F_chi", "chi_tau", "descent_expansion_check",
    "mobius_uniform_descent_check", "radial_profile",
]
