"""First derivatives of geometric quantities along a variation, and the
constrained second variation of area.

A variation is a field w along Phi with w . Phi = 0, split as

    w = sigma1 d1 Phi + sigma2 d2 Phi + v n.

Paths are realized as Phi_t = (Phi + t w) / |Phi + t w|, which agrees with
Phi + t w to first order because w is tangent to S^3.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from . import grid as gc
from .constrained import ccms_residual
from .errors import ConfigurationError, ContractError
from .geometry import geometry

log = logging.getLogger(__name__)

TANGENT_TOL = 1e-6
CRITICAL_TOL = 1e-5
FD_STEPS = (1e-3, 5e-4)
REL_FLOOR = 1e-8


def _dot(u, v):
    return np.einsum("...k,...k->...", u, v)


@dataclass(frozen=True)
class VariationField:
    w: np.ndarray = field(repr=False)
    sigma1: np.ndarray = field(repr=False)
    sigma2: np.ndarray = field(repr=False)
    v: np.ndarray = field(repr=False)
    projected: bool = False

    @property
    def tangential(self):
        return self.sigma1, self.sigma2


def decompose(geo, w_raw):
    """Split w into tangential coefficients and normal component.

    A field with |w . Phi| above TANGENT_TOL is first projected onto TS^3
    and the result is flagged as ``projected``.
    """
    geo.require_conformal()
    pts = geo.phi.points
    w = geo.grid.check(np.asarray(w_raw, dtype=float))
    radial = _dot(w, pts)
    projected = bool(np.max(np.abs(radial)) > TANGENT_TOL)
    if projected:
        log.warning("variation field not tangent to S^3 (max |w.Phi| = %.2e); projecting",
                    np.max(np.abs(radial)))
    w = w - radial[..., None] * pts
    e = np.exp(-2 * geo.lam)
    return VariationField(w, e * _dot(w, geo.d1), e * _dot(w, geo.d2), _dot(w, geo.normal),
                          projected)


def compose(geo, sigma1, sigma2, v):
    """w = sigma1 d1 Phi + sigma2 d2 Phi + v n."""
    return sigma1[..., None] * geo.d1 + sigma2[..., None] * geo.d2 + v[..., None] * geo.normal


def smooth_random_field(grid, rng, modes=3, amplitude=1.0):
    """Random real trigonometric polynomial of degree <= modes in each lattice direction."""
    u1, u2 = grid.lattice_coords
    out = np.zeros(grid.shape)
    for k1 in range(-modes, modes + 1):
        for k2 in range(-modes, modes + 1):
            c = rng.normal(size=2) / (1.0 + k1 * k1 + k2 * k2)
            arg = 2 * np.pi * (k1 * u1 + k2 * u2)
            out += c[0] * np.cos(arg) + c[1] * np.sin(arg)
    return amplitude * out / max(np.max(np.abs(out)), 1e-300)


def random_variation(geo, rng, modes=3, amplitude=1.0):
    s1, s2, v = (smooth_random_field(geo.grid, rng, modes, amplitude) for _ in range(3))
    return decompose(geo, compose(geo, s1, s2, v))


def _as_field(geo, w):
    return w if isinstance(w, VariationField) else decompose(geo, w)


def dn_dt(geo, w):
    geo.require_conformal()
    vf = _as_field(geo, w)
    w1, w2 = gc.gradient(vf.w, geo.grid, geo.scheme)
    e = np.exp(-2 * geo.lam)[..., None]
    return (-e * (_dot(w1, geo.normal)[..., None] * geo.d1 + _dot(w2, geo.normal)[..., None] * geo.d2)
            - vf.v[..., None] * geo.phi.points)


def laplace_beltrami(geo, f):
    return np.exp(-2 * geo.lam) * gc.laplacian(f, geo.grid, geo.scheme)


def dH_dt(geo, w):
    geo.require_conformal()
    vf = _as_field(geo, w)
    h1, h2 = gc.gradient(geo.H, geo.grid, geo.scheme)
    return (0.5 * (laplace_beltrami(geo, vf.v) + (geo.II_norm2 + 2) * vf.v)
            + vf.sigma1 * h1 + vf.sigma2 * h2)


def _weighted_divergence(geo, vf):
    """d1(e^{2lam} sigma1) + d2(e^{2lam} sigma2)."""
    e2 = np.exp(2 * geo.lam)
    return (gc.derivative(e2 * vf.sigma1, geo.grid, 1, geo.scheme)
            + gc.derivative(e2 * vf.sigma2, geo.grid, 2, geo.scheme))


def dvol_dt(geo, w):
    """Density of d/dt dvol_{g_t} per unit dx1 dx2."""
    geo.require_conformal()
    vf = _as_field(geo, w)
    return -2 * geo.H * vf.v * np.exp(2 * geo.lam) + _weighted_divergence(geo, vf)


def first_variation_area(geo, w):
    vf = _as_field(geo, w)
    return -2.0 * geo.integrate(geo.H * vf.v)


def qbar_pairing(geo, Q):
    """<qbar, II0>_g for a general (not necessarily conformal) metric."""
    a, b = Q.a, Q.b
    det = geo.det_g
    i11, i12, i22 = geo.g22 / det, -geo.g12 / det, geo.g11 / det
    q = np.array([[a, b], [b, -a]])
    ginv = np.stack([np.stack([i11, i12], -1), np.stack([i12, i22], -1)], -2)
    ii0 = np.stack([np.stack([geo.II0_11, geo.II0_12], -1),
                    np.stack([geo.II0_12, geo.II0_22], -1)], -2)
    # g^{ki} g^{lj} q_kl II0_ij
    raised = np.einsum("...ki,kl,...lj->...ij", ginv, q, ginv)
    return np.einsum("...ij,...ij->...", raised, ii0)


def dII0_contraction_dt(geo, w, Q):
    """d/dt <qbar, II0_t>_{g_t} at t = 0 for constant qbar."""
    geo.require_conformal()
    vf = _as_field(geo, w)
    g, sch = geo.grid, geo.scheme
    d = lambda f, i: gc.derivative(f, g, i, sch)  # noqa: E731
    a, b = Q.a, Q.b
    lam, H, v = geo.lam, geo.H, vf.v
    s1, s2 = vf.sigma1, vf.sigma2
    A11, A12 = geo.II0_11, geo.II0_12
    e2, em2, em4 = np.exp(2 * lam), np.exp(-2 * lam), np.exp(-4 * lam)
    pair = Q.contract(geo)
    v1, v2 = gc.gradient(v, g, sch)
    div_w = d(e2 * s1, 1) + d(e2 * s2, 2)
    out = 4 * H * v * pair - 2 * em2 * div_w * pair
    out += em2 * (d(a * em2 * v1, 1) - d(a * em2 * v2, 2) + d(b * em2 * v2, 1) + d(b * em2 * v1, 2))
    out -= em4 * H * (a * (d(e2 * s1, 1) - d(e2 * s2, 2)) + b * (d(e2 * s2, 1) + d(e2 * s1, 2)))
    s11, s12 = gc.gradient(s1, g, sch)
    s21, s22 = gc.gradient(s2, g, sch)
    out += em4 * ((a * A11 + b * A12) * (s11 + s22) + (a * A12 - b * A11) * (s21 - s12))
    out += em4 * d(a * (A11 * s1 + A12 * s2) + b * (A12 * s1 - A11 * s2), 1)
    out -= em4 * d(a * (A12 * s1 - A11 * s2) - b * (A11 * s1 + A12 * s2), 2)
    out += em4 * (d(e2 * H * (a * s1 + b * s2), 1) + d(e2 * H * (b * s1 - a * s2), 2))
    return out


def imag_pairing(geo, Q):
    """Im <Q, h0>_wp = 4 e^{-4lam} (-Q1 II0_12 - Q2 II0_11)."""
    return 4 * np.exp(-4 * geo.lam) * (-Q.q1 * geo.II0_12 - Q.q2 * geo.II0_11)


def second_variation_terms(geo, Q, w):
    """The three lines of the constrained second variation, returned separately."""
    vf = _as_field(geo, w)
    g, sch = geo.grid, geo.scheme
    lam, H, v = geo.lam, geo.H, vf.v
    s1, s2 = vf.sigma1, vf.sigma2
    a, b = Q.a, Q.b
    e2, em2, em4 = np.exp(2 * lam), np.exp(-2 * lam), np.exp(-4 * lam)
    v1, v2 = gc.gradient(v, g, sch)
    h1, h2 = gc.gradient(H, g, sch)
    dv2 = em2 * (v1 ** 2 + v2 ** 2)
    q_dvdv = em4 * (a * (v1 ** 2 - v2 ** 2) + 2 * b * v1 * v2)
    normal = geo.integrate(dv2 - 2 * q_dvdv - (geo.II_norm2 + 2 - 8 * H ** 2) * v ** 2)
    im = imag_pairing(geo, Q)
    # 1-forms applied to w_T = sigma1 d1 + sigma2 d2
    dv_w = s1 * v1 + s2 * v2
    dh_w = s1 * h1 + s2 * h2
    q_dh_w = em2 * (a * (h1 * s1 - h2 * s2) + b * (h1 * s2 + h2 * s1))
    star_dv_w = -v2 * s1 + v1 * s2
    coupling = geo.integrate(2 * H * dv_w + v * dh_w + 2 * v * q_dh_w + im * star_dv_w)
    star_d_wt = em2 * (gc.derivative(e2 * s2, g, 1, sch) - gc.derivative(e2 * s1, g, 2, sch))
    curl = -geo.integrate(im * v * star_d_wt)
    return {"normal": normal, "coupling": coupling, "curl": curl}


def second_variation(geo, Q, w, critical_tol=CRITICAL_TOL):
    """Second derivative of area along a conformal-class-preserving path with velocity w.

    Only meaningful at critical points; the torus must satisfy the
    constrained-minimal equation for Q up to ``critical_tol``.
    """
    geo.require_conformal()
    res = ccms_residual(geo, Q)
    if res > critical_tol:
        raise ContractError(f"not a critical point for this Q (ccms residual {res:.2e})")
    return float(sum(second_variation_terms(geo, Q, w).values()))


def second_variation_unreduced(geo, Q, w):
    """Same quantity assembled before the integrations by parts.

    Uses dII0_contraction_dt directly:
    int |dv|^2 - (|II|^2 + 2) v^2 - 2 v sigma.dH + 2 v d/dt<qbar, II0>.
    """
    vf = _as_field(geo, w)
    v = vf.v
    v1, v2 = gc.gradient(v, geo.grid, geo.scheme)
    h1, h2 = gc.gradient(geo.H, geo.grid, geo.scheme)
    dv2 = np.exp(-2 * geo.lam) * (v1 ** 2 + v2 ** 2)
    return geo.integrate(dv2 - (geo.II_norm2 + 2) * v ** 2
                         - 2 * v * (vf.sigma1 * h1 + vf.sigma2 * h2)
                         + 2 * v * dII0_contraction_dt(geo, vf, Q))


def path_point(phi, w, t):
    p = phi.points + t * w
    return phi.replace_points(p / np.linalg.norm(p, axis=-1, keepdims=True), conformal=False)


FORMULAS = ("dn_dt", "dH_dt", "dvol_dt", "first_variation", "dII0_contraction")


def _observable(name, Q):
    if name == "dn_dt":
        return lambda geo: geo.normal
    if name == "dH_dt":
        return lambda geo: geo.H
    if name == "dvol_dt":
        return lambda geo: geo.dvol
    if name == "first_variation":
        return lambda geo: geo.area
    if name == "dII0_contraction":
        return lambda geo: qbar_pairing(geo, Q)
    raise ConfigurationError(f"unknown formula {name!r}; expected one of {FORMULAS}")


def _analytic(name, geo, vf, Q):
    if name == "dn_dt":
        return dn_dt(geo, vf)
    if name == "dH_dt":
        return dH_dt(geo, vf)
    if name == "dvol_dt":
        return dvol_dt(geo, vf)
    if name == "first_variation":
        return first_variation_area(geo, vf)
    return dII0_contraction_dt(geo, vf, Q)


@dataclass(frozen=True)
class FDReport:
    formula: str
    analytic: object = field(repr=False)
    fd: object = field(repr=False)
    rel_err: float


def fd_derivative(phi, w, observable, scheme="spectral", steps=FD_STEPS):
    """Richardson-extrapolated central difference of observable(geometry(Phi_t))."""
    def central(t):
        plus = observable(geometry(path_point(phi, w, t), scheme))
        minus = observable(geometry(path_point(phi, w, -t), scheme))
        return (np.asarray(plus) - np.asarray(minus)) / (2 * t)

    t_big, t_small = steps
    ratio = (t_big / t_small) ** 2
    return (ratio * central(t_small) - central(t_big)) / (ratio - 1)


def fd_harness(geo, w, formula, Q=None):
    """Compare one variation formula with its finite-difference oracle."""
    vf = _as_field(geo, w)
    if formula == "dII0_contraction" and Q is None:
        raise ConfigurationError("dII0_contraction needs a quadratic differential")
    fd = fd_derivative(geo.phi, vf.w, _observable(formula, Q), geo.scheme)
    analytic = _analytic(formula, geo, vf, Q)
    # floor keeps the ratio meaningful when the true derivative vanishes; for the
    # area the integrand mass measures the size of what cancels
    scale = max(float(np.max(np.abs(fd))), REL_FLOOR)
    if formula == "first_variation":
        scale = max(scale, gc.integrate(np.abs(dvol_dt(geo, vf)), geo.grid))
    rel = float(np.max(np.abs(np.asarray(analytic) - fd)) / scale)
    return FDReport(formula, analytic, fd, rel)
