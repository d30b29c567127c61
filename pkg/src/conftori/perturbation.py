"""Localized normal bumps that keep the conformal class, and the area
expansion they produce at a constrained-minimal torus.

The family attached to a point x0, a profile chi and a scale eps is

    Phi(t) = beta [Phi + t chi_eps n(x0) + t (alpha_1 a_1 + alpha_2 a_2)],
    chi_eps(x) = eps chi(R (x - x0) / eps),

with beta the radial normalization onto S^3 and R a fixed rotation of the
chart.  The pair alpha(t, eps) is fixed by requiring that the Teichmueller
defect of Phi(t) vanishes.  On a torus the defect is measured by the mean
of the Beltrami coefficient

    mu = (g11 - g22 + 2i g12) / (g11 + g22 + 2 sqrt(det g))

of the pulled-back metric in the flat chart, whose derivative at t = 0 is
-(c1 - i c2)/4 with (c1, c2) the pairing of the velocity with dz^2 and
i dz^2.
"""

from __future__ import annotations

import cmath
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate as sp_integrate

from . import grid as gc
from .constrained import QuadraticDifferential, fit_Q, isothermic_test
from .errors import (ConfigurationError, ContractError, DegeneracyError, DomainError,
                     FamilyConstructionError, SingularSystemError)
from .geometry import geometry
from .immersion import metric

log = logging.getLogger(__name__)

BASIS = (QuadraticDifferential(1.0, 0.0), QuadraticDifferential(0.0, 1.0))
NEWTON_TOL = 1e-10
NEWTON_MAX_ITERS = 50
SINGULAR_RCOND = 1e-8


# profiles ------------------------------------------------------------------

def standard_bump(s):
    """exp(1 - 1/(1 - s^2)) on (-1, 1), zero outside; equals 1 at s = 0."""
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
    return out


def standard_bump_prime(s):
    s = np.asarray(s, dtype=float)
    out = np.zeros_like(s)
    inside = np.abs(s) < 1
    si = s[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - si ** 2)) * (-2.0 * si / (1.0 - si ** 2) ** 2)
    return out


@dataclass(frozen=True)
class Profile:
    """Smooth compactly supported chi with its gradient.

    ``half_width`` bounds the support: chi vanishes outside the square
    max(|y1|, |y2|) <= half_width.  ``min_width`` is the narrowest
    half-extent of the support, which sets the grid resolution needed.
    """
    value: object = field(repr=False)
    grad: object = field(repr=False)
    half_width: float
    min_width: float = 1.0
    name: str = "profile"


def radial_profile():
    def value(y1, y2):
        return standard_bump(np.hypot(y1, y2))

    def grad(y1, y2):
        r2 = y1 ** 2 + y2 ** 2
        inside = r2 < 1
        f = np.zeros_like(r2)
        f[inside] = (standard_bump(np.sqrt(r2[inside])) * -2.0 / (1.0 - r2[inside]) ** 2)
        return f * y1, f * y2

    return Profile(value, grad, 1.0, 1.0, "radial")


def chi_tau(tau, phi=standard_bump, phi_prime=standard_bump_prime, half_width=1.0):
    """chi_tau(y1, y2) = phi(tau y1) phi(y2) for a 1-d profile supported in [-1, 1]."""
    if not tau > 0:
        raise DomainError(f"tau must be positive, got {tau}")

    def value(y1, y2):
        return phi(tau * y1) * phi(y2)

    def grad(y1, y2):
        return tau * phi_prime(tau * y1) * phi(y2), phi(tau * y1) * phi_prime(y2)

    return Profile(value, grad, half_width * max(1.0, 1.0 / tau), half_width * min(1.0, 1.0 / tau),
                   f"chi_tau({tau:g})")


def _profile_integrals(chi, m=801):
    """(int |grad chi|^2, int (chi_1^2 - chi_2^2), int 2 chi_1 chi_2) by the trapezoid rule."""
    r = chi.half_width
    s = np.linspace(-r, r, m)
    y1, y2 = np.meshgrid(s, s, indexing="ij")
    c1, c2 = chi.grad(y1, y2)
    h2 = (s[1] - s[0]) ** 2
    return (float(np.sum(c1 ** 2 + c2 ** 2) * h2), float(np.sum(c1 ** 2 - c2 ** 2) * h2),
            float(np.sum(2 * c1 * c2) * h2))


def F_chi(lam0, Q, chi, m=801):
    """Second-order area coefficient of a class-preserving bump with profile chi.

    2F = int |grad chi|^2 - 4 e^{-2 lam0} [Q1 int(chi_1^2 - chi_2^2) - Q2 int 2 chi_1 chi_2],

    with Q the coefficient in the chart where chi is drawn.  When Q2 = 0 this
    is the usual formula; the Q2 term follows the real form qbar of Q.
    """
    dirichlet, aniso, cross = _profile_integrals(chi, m)
    k = 4.0 * np.exp(-2.0 * lam0)
    return 0.5 * (dirichlet - k * (Q.q1 * aniso - Q.q2 * cross))


def chi_tau_closed_form(tau, k, phi=standard_bump, phi_prime=standard_bump_prime):
    """F for chi_tau with k = 4 e^{-2 lam0} Q1 and Q2 = 0:
    I_phi' I_phi [tau (1 - k)/2 + (1 + k)/(2 tau)]."""
    i_phi = sp_integrate.quad(lambda s: phi(s) ** 2, -1, 1, epsabs=1e-14, epsrel=1e-13)[0]
    i_dphi = sp_integrate.quad(lambda s: phi_prime(s) ** 2, -1, 1, epsabs=1e-14, epsrel=1e-13)[0]
    return i_dphi * i_phi * (0.5 * tau * (1 - k) + 0.5 * (1 + k) / tau)


def descent_tau_threshold(k):
    """Infimum of tau > 0 with F(chi_tau) < 0 (k > 1), supremum (k < -1), None if |k| <= 1."""
    if abs(k) <= 1:
        return None
    return float(np.sqrt((1 + k) / (k - 1)))


def real_rotation(Q):
    """Angle alpha of the chart y = e^{-i alpha} x in which Q is real and >= 0."""
    if Q.value == 0:
        return 0.0
    return -0.5 * cmath.phase(Q.value)


# pairing -------------------------------------------------------------------

def teich_pairing(geo, w):
    """(int v <qbar^1, II0>_g dvol, int v <qbar^2, II0>_g dvol) for Q^1 = dz^2, Q^2 = i dz^2."""
    geo.require_conformal()
    w = np.asarray(w)
    v = w if w.ndim == 2 else np.einsum("...k,...k->...", w, geo.normal)
    return np.array([geo.integrate(v * q.contract(geo)) for q in BASIS])


def default_directions(geo):
    """a_j = <qbar^j, II0>_g n, tangent to S^3 and normal to the surface."""
    return [q.contract(geo)[..., None] * geo.normal for q in BASIS]


def pairing_matrix(geo, directions):
    return np.stack([teich_pairing(geo, a) for a in directions], axis=1)


def beltrami(phi, scheme="spectral"):
    g11, g12, g22, _, _ = metric(phi, scheme)
    det = g11 * g22 - g12 ** 2
    return (g11 - g22 + 2j * g12) / (g11 + g22 + 2 * np.sqrt(det))


def teich_defect(phi, scheme="spectral"):
    """Mean Beltrami coefficient over the torus as a real 2-vector."""
    m = gc.integrate(beltrami(phi, scheme), phi.grid)
    return np.array([m.real, m.imag])


# family --------------------------------------------------------------------

@dataclass(frozen=True)
class BumpSpec:
    x0: complex
    chi: Profile
    epsilon: float
    rotation: float = 0.0

    def __post_init__(self):
        if not self.epsilon > 0:
            raise ConfigurationError(f"epsilon must be positive, got {self.epsilon}")


def snap_to_grid(grid, z0):
    """Grid index closest to the chart point z0 and the snapped point."""
    d = np.abs(grid.minimal_image(z0))
    idx = np.unravel_index(np.argmin(d), d.shape)
    return idx, complex(grid.points[idx])


def bump_field(grid, spec):
    """chi_eps on the grid, using minimal-image displacements from x0."""
    dz = grid.minimal_image(spec.x0) * cmath.exp(-1j * spec.rotation) / spec.epsilon
    reach = spec.chi.half_width * np.sqrt(2) * spec.epsilon
    lat = grid.lattice
    if reach >= 0.5 * min(abs(lat.omega1), abs(lat.omega2), lat.area / max(abs(lat.omega1), abs(lat.omega2))):
        raise ConfigurationError("bump support does not fit in one fundamental cell")
    spacing = max(abs(lat.omega1) / grid.n1, abs(lat.omega2) / grid.n2)
    if 2 * spec.epsilon * spec.chi.min_width < 16 * spacing:
        log.warning("bump of scale %.3g spans fewer than 16 grid cells; refine the grid", spec.epsilon)
    return spec.epsilon * spec.chi.value(dz.real, dz.imag)


@dataclass
class BumpFamily:
    """Evaluates Phi(t) for a base torus, a bump and two correction directions."""

    geo: object = field(repr=False)
    spec: BumpSpec
    directions: list = field(default=None, repr=False)
    allow_degenerate: bool = False

    def __post_init__(self):
        geo = self.geo
        geo.require_conformal()
        grid = geo.grid
        self.index, _ = snap_to_grid(grid, self.spec.x0)
        self.n0 = geo.normal[self.index]
        self.chi = bump_field(grid, self.spec)
        if self.directions is None:
            self.directions = default_directions(geo)
        self.bump = self.chi[..., None] * self.n0
        self.M = pairing_matrix(geo, self.directions)
        self.rank = int(np.linalg.matrix_rank(self.M, tol=SINGULAR_RCOND * max(np.abs(self.M).max(), 1e-300)))
        if self.rank < 2 and not self.allow_degenerate:
            raise SingularSystemError(
                "Teichmueller pairing matrix is singular (isothermic base torus)")
        self.base_defect = teich_defect(geo.phi, geo.scheme)

    def point(self, t, alpha):
        phi = self.geo.phi
        p = phi.points + t * self.bump
        for aj, d in zip(alpha, self.directions):
            p = p + t * aj * d
        p = p / np.linalg.norm(p, axis=-1, keepdims=True)
        return phi.replace_points(p, conformal=(t == 0))

    def alpha_at_zero(self):
        """alpha(0, eps) from the linearized condition pairing(chi n0) + M alpha = 0."""
        rhs = -teich_pairing(self.geo, self.bump)
        return np.linalg.lstsq(self.M, rhs, rcond=SINGULAR_RCOND)[0]

    def residual(self, t, alpha):
        return (teich_defect(self.point(t, alpha), self.geo.scheme) - self.base_defect) / t

    def _jacobian(self, t, alpha, h=1e-6):
        cols = []
        for j in range(2):
            e = np.zeros(2)
            e[j] = h
            cols.append((self.residual(t, alpha + e) - self.residual(t, alpha - e)) / (2 * h))
        return np.stack(cols, axis=1)

    def solve_alpha(self, t, alpha0=None):
        """Chord-Newton for alpha(t, eps); returns (alpha, residual norm, iterations)."""
        alpha = self.alpha_at_zero() if alpha0 is None else np.asarray(alpha0, float)
        if t == 0:
            return alpha, 0.0, 0
        jac = self._jacobian(t, alpha)
        # in the degenerate case only the range of the Jacobian can be cancelled
        u, s, _ = np.linalg.svd(jac)
        active = u[:, s > SINGULAR_RCOND * max(s[0], 1e-300)]
        res = self.residual(t, alpha)
        for it in range(1, NEWTON_MAX_ITERS + 1):
            alpha = alpha - np.linalg.lstsq(jac, res, rcond=SINGULAR_RCOND)[0]
            res = self.residual(t, alpha)
            norm = float(np.linalg.norm(active.T @ res))
            if norm <= NEWTON_TOL:
                return alpha, norm, it
            if it % 10 == 0:
                jac = self._jacobian(t, alpha)
        raise FamilyConstructionError(
            f"Newton for alpha did not converge in {NEWTON_MAX_ITERS} iterations (t={t:g})")

    def __call__(self, t):
        alpha, _, _ = self.solve_alpha(t)
        return self.point(t, alpha)


def bump_family(phi, spec, directions=None, t=0.0, scheme="spectral", allow_degenerate=False):
    """The perturbed torus Phi(t) of the class-preserving bump family."""
    fam = BumpFamily(geometry(phi, scheme), spec, directions, allow_degenerate)
    return fam(t)


def alpha_at_zero(phi, spec, directions=None, scheme="spectral", allow_degenerate=False):
    return BumpFamily(geometry(phi, scheme), spec, directions, allow_degenerate).alpha_at_zero()


# expansions ----------------------------------------------------------------

def _base_Q(geo, Q):
    if Q is not None:
        return Q
    fit = fit_Q(geo)
    if fit.degenerate:
        raise ContractError("could not fit a quadratic differential to the base torus")
    return fit.Q


def _is_isothermic(geo):
    try:
        return isothermic_test(geo).is_isothermic
    except DegeneracyError:
        return True


@dataclass
class ExpansionReport:
    epsilon: float
    t: float
    lhs: float
    model: float
    rel_err: float
    F: float
    alpha: np.ndarray = field(repr=False)
    newton_residual: float = 0.0


def spec_F(geo, spec, Q):
    """F_chi at x0 with Q rewritten in the rotated chart of the spec."""
    fam_idx, _ = snap_to_grid(geo.grid, spec.x0)
    Q_rot = Q.in_chart(cmath.exp(1j * spec.rotation))
    return F_chi(float(geo.lam[fam_idx]), Q_rot, spec.chi)


def descent_expansion_check(phi, spec, delta=0.5, Q=None, directions=None, scheme="spectral"):
    """Compare A(Phi(t)) - A(Phi) with t^2 eps^2 F_chi(x0) at t = delta eps.

    Isothermic bases are accepted here; the correction step then uses the
    minimum-norm solution on the active part of the pairing matrix.
    """
    geo = geometry(phi, scheme)
    Q = _base_Q(geo, Q)
    eps = spec.epsilon
    t = delta * eps
    F = spec_F(geo, spec, Q)
    model = t * t * eps * eps * F
    if t == 0:
        return ExpansionReport(eps, 0.0, 0.0, 0.0, 0.0, F, np.zeros(2))
    fam = BumpFamily(geo, spec, directions, allow_degenerate=_is_isothermic(geo))
    alpha, res, _ = fam.solve_alpha(t)
    moved = geometry(fam.point(t, alpha), scheme)
    lhs = float(gc.integrate(moved.dvol - geo.dvol, geo.grid))
    return ExpansionReport(eps, t, lhs, model, abs(lhs - model) / abs(model), F, alpha, res)


def mobius_weight(a, y0):
    """(1 - |a|^2)^2 / (1 + |a|^2 - 2 a.y0)^2, the area weight of Psi_a at y0."""
    a = np.asarray(a, float)
    aa = float(np.dot(a, a))
    return (1.0 - aa) ** 2 / (1.0 + aa - 2.0 * float(np.dot(a, y0))) ** 2


def mobius_weighted_model(F, t, eps, a, y0):
    return t * t * eps * eps * F * mobius_weight(a, y0)


def _mobius_area(points, dvol, grid, a):
    a = np.asarray(a, float)
    aa = float(np.dot(a, a))
    den = 1.0 + aa - 2.0 * np.einsum("...k,k->...", points, a)
    return gc.integrate(((1.0 - aa) / den) ** 2 * dvol, grid)


@dataclass
class MobiusDescentReport:
    epsilon: float
    t: float
    F: float
    samples: list = field(repr=False)
    worst_margin: float = 0.0
    worst_rel_err: float = 0.0
    descent: bool = False
    note: str = ""


def mobius_uniform_descent_check(phi, spec, a_samples, delta=0.5, Q=None, directions=None,
                                 scheme="spectral"):
    """Area change of Moebius images of the bump family against the weighted model.

    ``worst_margin`` is the largest area change over the samples; it is
    negative exactly when every sampled Moebius image loses area.
    """
    geo = geometry(phi, scheme)
    Q = _base_Q(geo, Q)
    eps = spec.epsilon
    t = delta * eps
    F = spec_F(geo, spec, Q)
    fam = BumpFamily(geo, spec, directions, allow_degenerate=_is_isothermic(geo))
    alpha, _, _ = fam.solve_alpha(t)
    moved_phi = fam.point(t, alpha)
    moved = geometry(moved_phi, scheme)
    y0 = moved_phi.points[fam.index]
    samples = []
    for a in a_samples:
        a = np.asarray(a, float)
        if np.dot(a, a) >= 1:
            raise DomainError("Moebius samples must lie in the open unit ball")
        lhs = (_mobius_area(moved_phi.points, moved.dvol, geo.grid, a)
               - _mobius_area(phi.points, geo.dvol, geo.grid, a))
        model = mobius_weighted_model(F, t, eps, a, y0)
        samples.append({"a": a, "lhs": float(lhs), "model": float(model),
                        "rel_err": float(abs(lhs - model) / abs(model)) if model else float("inf")})
    worst = max(s["lhs"] for s in samples)
    note = "" if F < 0 else "F_chi >= 0 at x0: no descent expected"
    return MobiusDescentReport(eps, t, F, samples, worst, max(s["rel_err"] for s in samples),
                               worst < 0, note)
