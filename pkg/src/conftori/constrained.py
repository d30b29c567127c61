"""Holomorphic quadratic differentials and the constrained-minimal equation.

On a torus a holomorphic quadratic differential is a constant multiple
Q = (q1 + i q2) dz^2 of dz^2.  Its real form is

    qbar = a (dx1^2 - dx2^2) + b (dx1 dx2 + dx2 dx1),  a = 2 q1,  b = -2 q2,

and the constrained-minimal equation reads, in conformal coordinates,

    H = <qbar, II0>_g = 4 e^{-4 lam} (q1 II0_11 - q2 II0_12).
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass, field

import numpy as np

from . import grid as gc
from .errors import ContractError, DegeneracyError
from .geometry import geometry, principal_curvatures

FIT_TOL = 1e-6
BOUNDARY_BAND = 1e-6
MINIMAL_TOL = 1e-9


@dataclass(frozen=True)
class QuadraticDifferential:
    q1: float
    q2: float

    @property
    def a(self):
        return 2.0 * self.q1

    @property
    def b(self):
        return -2.0 * self.q2

    @property
    def value(self):
        return complex(self.q1, self.q2)

    @classmethod
    def from_complex(cls, q):
        q = complex(q)
        return cls(q.real, q.imag)

    def in_chart(self, c):
        """Coefficient in the chart w with z = c w (dz^2 = c^2 dw^2)."""
        return QuadraticDifferential.from_complex(self.value * complex(c) ** 2)

    def rotated(self, alpha):
        return self.in_chart(cmath.exp(1j * alpha))

    def two_norm(self, lam):
        """Pointwise 2|Q|_g = 4 e^{-2 lam} |Q|."""
        return 4.0 * np.exp(-2.0 * np.asarray(lam)) * abs(self.value)

    def contract(self, geo):
        """<qbar, II0>_g as a field."""
        return 4.0 * np.exp(-4.0 * geo.lam) * (self.q1 * geo.II0_11 - self.q2 * geo.II0_12)


ZERO_Q = QuadraticDifferential(0.0, 0.0)


@dataclass(frozen=True)
class QFit:
    Q: QuadraticDifferential
    residual: np.ndarray = field(repr=False)
    rel_residual: float
    minimal: bool
    rank: int
    degenerate: bool


def fit_Q(geo, tol=FIT_TOL):
    """Weighted least-squares fit of the constant Q in H = <qbar, II0>_g.

    Rank-deficient designs (isothermic tori) get the minimum-norm solution;
    ``degenerate`` is raised as a flag, not an exception, when that solution
    does not reach ``tol``.
    """
    geo.require_conformal()
    if np.max(np.abs(geo.H)) <= MINIMAL_TOL:
        return QFit(ZERO_Q, np.zeros_like(geo.H), 0.0, True, 0, False)
    w = np.sqrt(geo.dvol).ravel()
    e4 = 4.0 * np.exp(-4.0 * geo.lam)
    design = np.stack([(e4 * geo.II0_11).ravel(), (-e4 * geo.II0_12).ravel()], axis=1)
    sol, _, rank, _ = np.linalg.lstsq(design * w[:, None], geo.H.ravel() * w, rcond=1e-8)
    Q = QuadraticDifferential(float(sol[0]), float(sol[1]))
    res = geo.H - Q.contract(geo)
    rel = float(np.sqrt(geo.integrate(res ** 2) / geo.integrate(geo.H ** 2)))
    return QFit(Q, res, rel, False, int(rank), bool(rank < 2 and rel > tol))


def ccms_residual(geo, Q):
    """Sup norm of H - <qbar, II0>_g."""
    geo.require_conformal()
    return float(np.max(np.abs(geo.H - Q.contract(geo))))


@dataclass(frozen=True)
class EllipticityReport:
    two_Q_norm: np.ndarray = field(repr=False)
    strictly_elliptic: float
    elliptic_boundary: float
    hyperbolic: float
    classification: str


def classify_two_Q_norm(two_q, weight=None, band=BOUNDARY_BAND):
    two_q = np.asarray(two_q, dtype=float)
    weight = np.ones_like(two_q) if weight is None else np.asarray(weight, dtype=float)
    total = weight.sum()
    strict = two_q < 1.0 - band
    hyper = two_q > 1.0 + band
    bnd = ~(strict | hyper)
    f_strict = float(weight[strict].sum() / total)
    f_hyper = float(weight[hyper].sum() / total)
    f_bnd = 1.0 - f_strict - f_hyper
    if np.max(two_q) < 1.0:
        kind = "strictly_elliptic"
    elif not hyper.any():
        kind = "elliptic"
    else:
        kind = "mixed"
    if bnd.sum() == 0:
        f_bnd = 0.0
    return EllipticityReport(two_q, f_strict, f_bnd, f_hyper, kind)


def ellipticity(geo, Q):
    geo.require_conformal()
    return classify_two_Q_norm(Q.two_norm(geo.lam), geo.dvol)


@dataclass(frozen=True)
class IsothermicResult:
    is_isothermic: bool
    theta: float
    residual: float
    minimal: bool = False


def isothermic_test(geo, tol=FIT_TOL):
    """Best angle theta with cos(theta) H0_re - sin(theta) H0_im = 0 in L^2(dvol).

    theta is taken with sin(theta) >= 0.  The residual is relative to the
    L^2 size of H0.
    """
    geo.require_conformal()
    x, y = geo.H0_re, -geo.H0_im
    gram = np.array([[geo.integrate(x * x), geo.integrate(x * y)],
                     [geo.integrate(x * y), geo.integrate(y * y)]])
    trace = np.trace(gram)
    if trace <= 1e-24 * geo.area:
        raise DegeneracyError("H0 vanishes identically (totally umbilic surface)")
    vals, vecs = np.linalg.eigh(gram)
    c, s = vecs[:, 0]
    if s < 0 or (s == 0 and c < 0):
        c, s = -c, -s
    theta = float(np.arctan2(s, c))
    residual = float(np.sqrt(max(vals[0], 0.0) / trace))
    minimal = bool(np.max(np.abs(geo.H)) <= MINIMAL_TOL)
    return IsothermicResult(minimal or residual <= tol, theta, residual, minimal)


def gauss_curvature(geo):
    """Intrinsic curvature K = -e^{-2 lam} Lap(lam) of the conformal metric."""
    return -np.exp(-2 * geo.lam) * gc.laplacian(geo.lam, geo.grid, geo.scheme)


@dataclass(frozen=True)
class Classification:
    bucket: str
    fit: QFit
    ccms_residual: float
    isothermic: IsothermicResult
    flatness: float
    h_variation: float


def classify_theorem_I2(geo, tol=FIT_TOL, flat_tol=1e-7):
    """Sort a torus into minimal / flat_cmc / constrained_only / not_constrained."""
    fit = fit_Q(geo, tol)
    res = ccms_residual(geo, fit.Q)
    iso = isothermic_test(geo, tol)
    flat = float(np.max(np.abs(gauss_curvature(geo))))
    hvar = float(np.max(geo.H) - np.min(geo.H))
    if fit.minimal:
        bucket = "minimal"
    elif fit.rel_residual > tol:
        bucket = "not_constrained"
    elif iso.is_isothermic and flat <= flat_tol and hvar <= flat_tol * max(1.0, np.max(np.abs(geo.H))):
        bucket = "flat_cmc"
    else:
        bucket = "constrained_only"
    return Classification(bucket, fit, res, iso, flat, hvar)


def normalizing_factor(Q):
    """c with c^2 = 1/(4Q): in the chart z = c w the differential is dw^2 / 4."""
    if Q.value == 0:
        raise ContractError("Q = 0 cannot be normalized")
    return cmath.sqrt(1.0 / (4.0 * Q.value))


def normalized_geometry(geo, Q):
    c = normalizing_factor(Q)
    return geometry(geo.phi.in_chart(c), geo.scheme), c


def cmc_relations_check(geo):
    """Residuals of the principal-curvature relations of flat CMC tori.

    All quantities are evaluated in the chart where Q = dz^2/4, with theta the
    isothermic angle of that chart.
    """
    geo.require_conformal()
    if np.max(np.abs(geo.H)) <= MINIMAL_TOL:
        return {"skipped": True, "note": "minimal"}
    cls = classify_theorem_I2(geo)
    if cls.bucket != "flat_cmc":
        raise ContractError(f"cmc relations need a flat CMC torus, got {cls.bucket}")
    ngeo, c = normalized_geometry(geo, cls.fit.Q)
    iso = isothermic_test(ngeo)
    th = iso.theta
    sin_t, cos_t = np.sin(th), np.cos(th)
    if sin_t <= 0:
        raise ContractError("isothermic angle has sin(theta) = 0 in the normalized chart")
    e2 = np.exp(2 * ngeo.lam)
    h0_hat = sin_t * ngeo.H0_re + cos_t * ngeo.H0_im
    k1 = h0_hat + ngeo.H
    k2 = -h0_hat + ngeo.H
    ks, kl = principal_curvatures(ngeo)
    invariant = (e2 + sin_t) * k1
    sup = lambda f: float(np.max(np.abs(f)))  # noqa: E731
    return {
        "skipped": False,
        "theta": th,
        "chart_factor": c,
        "ccms_normalized": sup(ngeo.H - np.exp(-2 * ngeo.lam) * ngeo.H0_re),
        "principal_sum": sup(k1 + k2 - sin_t / e2 * (k1 - k2)),
        "principal_ratio": sup(k2 - (sin_t - e2) / (sin_t + e2) * k1),
        "invariant_spread": float(np.max(invariant) - np.min(invariant)),
        "weingarten_form": sup(k1 - (e2 + sin_t) * ngeo.H0_re / (e2 * sin_t)),
        "rotated_imaginary": sup(-cos_t * ngeo.H0_re + sin_t * ngeo.H0_im),
        "principal_match": sup(np.sort(np.stack([k1, k2]), axis=0) - np.stack([ks, kl])),
    }


def strict_pde_residual(geo, Q):
    """Residuals of the second-order system solved by constrained-minimal tori.

    With Q != 0 the torus is read in the chart where Q = dz^2/4 and the
    returned fields are

        res_I5   = d1((1 - e^{-2lam}) d1 Phi) + d2((1 + e^{-2lam}) d2 Phi) + 2 e^{2lam} Phi
        res_III3 = d1((1 - e^{-2lam}) d1 u) + d2((1 + e^{-2lam}) d2 u)
                   - 2 [d1(d1(e^{-2lam}) u) - d2(d2(e^{-2lam}) u)],   u = e^{4lam} H.

    With Q = 0 the minimal-surface residual Lap Phi + 2 e^{2lam} Phi is
    returned as res_I5 and ``minimal_branch`` is set.
    """
    grid_ = geo.grid
    if Q.value == 0:
        lap = gc.laplacian(geo.phi.points, grid_, geo.scheme)
        res = lap + 2 * np.exp(2 * geo.lam)[..., None] * geo.phi.points
        return {"res_I5": res, "res_III3": None, "minimal_branch": True,
                "sup_I5": float(np.max(np.linalg.norm(res, axis=-1))), "sup_III3": None}
    if ellipticity(geo, Q).classification != "strictly_elliptic":
        raise ContractError("strict PDE form needs a strictly elliptic torus")
    ngeo, c = normalized_geometry(geo, Q)
    if np.min(ngeo.lam) <= 0:
        raise ContractError("normalized chart has lambda <= 0 somewhere")
    g = ngeo.grid
    em = np.exp(-2 * ngeo.lam)
    pts = ngeo.phi.points
    p1, p2 = ngeo.d1, ngeo.d2
    t1 = gc.derivative((1 - em)[..., None] * p1, g, 1, ngeo.scheme)
    t2 = gc.derivative((1 + em)[..., None] * p2, g, 2, ngeo.scheme)
    res_i5 = t1 + t2 + 2 * np.exp(2 * ngeo.lam)[..., None] * pts
    u = np.exp(4 * ngeo.lam) * ngeo.H
    u1, u2 = gc.gradient(u, g, ngeo.scheme)
    em1, em2 = gc.gradient(em, g, ngeo.scheme)
    lhs = gc.derivative((1 - em) * u1, g, 1, ngeo.scheme) + gc.derivative((1 + em) * u2, g, 2, ngeo.scheme)
    rhs = 2 * (gc.derivative(em1 * u, g, 1, ngeo.scheme) - gc.derivative(em2 * u, g, 2, ngeo.scheme))
    res_iii3 = lhs - rhs
    return {"res_I5": res_i5, "res_III3": res_iii3, "minimal_branch": False, "chart_factor": c,
            "sup_I5": float(np.max(np.linalg.norm(res_i5, axis=-1))),
            "sup_III3": float(np.max(np.abs(res_iii3)))}
