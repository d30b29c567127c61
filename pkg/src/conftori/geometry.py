"""Induced metric, Gauss map, second fundamental form and curvature identities.

Conventions:

* the unit normal is n = *(Phi ^ d1 Phi ^ d2 Phi) / |d1 Phi ^ d2 Phi|, i.e.
  det[Phi, d1 Phi, d2 Phi, n] > 0;
* II_ij = n . d_ij Phi and H = (1/2) g^ij II_ij;
* in conformal coordinates g = e^{2 lam} (dx1^2 + dx2^2) and the trace-free
  part is encoded by H0 = H0_re + i H0_im with
  II0_11 = e^{2 lam} H0_re and II0_12 = -e^{2 lam} H0_im.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import grid as gc
from .errors import ConsistencyError, ContractError, DegeneracyError

CONFORMAL_TOL = 1e-8


def _dot(u, v):
    return np.einsum("...k,...k->...", u, v)


def hodge_normal(phi_pts, d1, d2):
    """Unnormalized *(Phi ^ d1 ^ d2): the vector with det[Phi, d1, d2, .] = |.|^2."""
    m = np.stack([phi_pts, d1, d2], axis=-2)
    out = np.empty_like(phi_pts)
    for i in range(4):
        cols = [c for c in range(4) if c != i]
        out[..., i] = (-1) ** (3 + i) * np.linalg.det(m[..., cols])
    return out


def gauss_map(phi, scheme="spectral"):
    d1, d2 = gc.gradient(phi.points, phi.grid, scheme)
    return _unit_normal(phi.points, d1, d2)


def _unit_normal(pts, d1, d2):
    raw = hodge_normal(pts, d1, d2)
    norm = np.linalg.norm(raw, axis=-1)
    if np.min(norm) < 1e-12:
        raise DegeneracyError("degenerate tangent plane (|d1 Phi ^ d2 Phi| < 1e-12)")
    return raw / norm[..., None]


@dataclass(frozen=True)
class GeometryFields:
    phi: object = field(repr=False)
    scheme: str
    g11: np.ndarray = field(repr=False)
    g12: np.ndarray = field(repr=False)
    g22: np.ndarray = field(repr=False)
    lam: np.ndarray = field(repr=False)
    normal: np.ndarray = field(repr=False)
    II11: np.ndarray = field(repr=False)
    II12: np.ndarray = field(repr=False)
    II22: np.ndarray = field(repr=False)
    H: np.ndarray = field(repr=False)
    II0_11: np.ndarray = field(repr=False)
    II0_12: np.ndarray = field(repr=False)
    II0_22: np.ndarray = field(repr=False)
    H0_re: np.ndarray = field(repr=False)
    H0_im: np.ndarray = field(repr=False)
    d1: np.ndarray = field(repr=False)
    d2: np.ndarray = field(repr=False)
    conformality_defect: float = 0.0

    @property
    def grid(self):
        return self.phi.grid

    @property
    def conformal(self):
        return self.phi.conformal

    @property
    def det_g(self):
        return self.g11 * self.g22 - self.g12 ** 2

    @property
    def dvol(self):
        """Area density sqrt(det g) per unit dx1 dx2."""
        return np.sqrt(self.det_g)

    @property
    def II_norm2(self):
        """|II|_g^2 = g^ik g^jl II_ij II_kl."""
        det = self.det_g
        i11, i12, i22 = self.g22 / det, -self.g12 / det, self.g11 / det
        # raise one index: S = g^-1 II
        s11 = i11 * self.II11 + i12 * self.II12
        s12 = i11 * self.II12 + i12 * self.II22
        s21 = i12 * self.II11 + i22 * self.II12
        s22 = i12 * self.II12 + i22 * self.II22
        return s11 ** 2 + 2 * s12 * s21 + s22 ** 2

    @property
    def area(self):
        return gc.integrate(self.dvol, self.grid)

    def integrate(self, f):
        """Integral of f against dvol_g."""
        return gc.integrate(f, self.grid, self.dvol)

    def require_conformal(self):
        if not self.conformal:
            raise ContractError("operation needs a conformal parametrization")

    def flip_normal(self):
        """Same fields with the opposite orientation of the normal."""
        return GeometryFields(
            self.phi, self.scheme, self.g11, self.g12, self.g22, self.lam, -self.normal,
            -self.II11, -self.II12, -self.II22, -self.H, -self.II0_11, -self.II0_12,
            -self.II0_22, -self.H0_re, -self.H0_im, self.d1, self.d2, self.conformality_defect)


def geometry(phi, scheme="spectral"):
    """All first and second order fields of an immersion."""
    f1, f2, f11, f12, f22 = gc.jet(phi.points, phi.grid, scheme)
    g11, g12, g22 = _dot(f1, f1), _dot(f1, f2), _dot(f2, f2)
    defect = float(np.max(np.abs(0.5 * np.log(g11) - 0.5 * np.log(g22))))
    if phi.conformal:
        # conformality belongs to the immersion, so judge it with spectral derivatives
        if scheme == "spectral":
            s11, s12, s22 = g11, g12, g22
        else:
            s1, s2 = gc.gradient(phi.points, phi.grid, "spectral")
            s11, s12, s22 = _dot(s1, s1), _dot(s1, s2), _dot(s2, s2)
        mismatch = np.max(np.abs(s11 - s22) + np.abs(s12))
        if mismatch > CONFORMAL_TOL * np.max(s11):
            raise ConsistencyError(
                f"immersion flagged conformal but |g11-g22|+|g12| reaches {mismatch:.3e}")
        lam = 0.5 * np.log(g11)
    else:
        lam = 0.25 * np.log(g11 * g22 - g12 ** 2)
    n = _unit_normal(phi.points, f1, f2)
    II11, II12, II22 = _dot(n, f11), _dot(n, f12), _dot(n, f22)
    det = g11 * g22 - g12 ** 2
    H = 0.5 * (g22 * II11 - 2 * g12 * II12 + g11 * II22) / det
    II0_11 = II11 - H * g11
    II0_12 = II12 - H * g12
    II0_22 = II22 - H * g22
    if phi.conformal:
        # store the exact trace-free pair so that II0_11 + II0_22 = 0 holds as stored
        II0_11 = 0.5 * (II11 - II22)
        II0_22 = -II0_11
    e = np.exp(-2 * lam)
    return GeometryFields(phi, scheme, g11, g12, g22, lam, n, II11, II12, II22, H,
                          II0_11, II0_12, II0_22, e * II0_11, -e * II0_12, f1, f2, defect)


def weingarten_from_dz(geo):
    """H0 computed independently as 2 d_z(e^{-2 lam} d_z Phi) . n (complex field)."""
    geo.require_conformal()
    e = np.exp(-2 * geo.lam)[..., None]
    dz_phi = 0.5 * (geo.d1 - 1j * geo.d2)
    inner = e * dz_phi
    re1, re2 = gc.gradient(inner.real, geo.grid, geo.scheme)
    im1, im2 = gc.gradient(inner.imag, geo.grid, geo.scheme)
    dz_inner = 0.5 * ((re1 + 1j * im1) - 1j * (re2 + 1j * im2))
    return 2 * np.einsum("...k,...k->...", dz_inner, geo.normal)


def codazzi_residual(geo, scheme=None):
    """Both components of the conformal Codazzi system and their sup norm."""
    geo.require_conformal()
    scheme = scheme or geo.scheme
    a1, a2 = gc.gradient(geo.II0_11, geo.grid, scheme)
    b1, b2 = gc.gradient(geo.II0_12, geo.grid, scheme)
    h1, h2 = gc.gradient(geo.H, geo.grid, scheme)
    e2 = np.exp(2 * geo.lam)
    field1 = a1 + b2 - e2 * h1
    field2 = a2 - b1 + e2 * h2
    return {"field1": field1, "field2": field2,
            "sup_norm": float(max(np.max(np.abs(field1)), np.max(np.abs(field2))))}


def liouville_residual(geo, scheme=None):
    """Residual of the Gauss equation -Lap lam = e^{2lam}(1 + H^2 - e^{-4lam}|II0|^2)."""
    geo.require_conformal()
    scheme = scheme or geo.scheme
    lap = gc.laplacian(geo.lam, geo.grid, scheme)
    e2 = np.exp(2 * geo.lam)
    rhs = e2 * (1 + geo.H ** 2 - (geo.II0_11 ** 2 + geo.II0_12 ** 2) / e2 ** 2)
    return -lap - rhs


def principal_curvatures(geo):
    """(kappa_small, kappa_large) eigenvalues of the shape operator."""
    s = np.sqrt(np.maximum(geo.II_norm2 / 2 - geo.H ** 2, 0.0))
    return geo.H - s, geo.H + s
