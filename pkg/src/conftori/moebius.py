"""Moebius transformations of S^3 and the conformal volume of a torus.

The family used here is

    Psi_a(y) = (1 - |a|^2) (y - a) / |y - a|^2 - a,   |a| < 1,

which is minus the chord involution of S^3 through a (the map sending y to
the second intersection of the line ay with the sphere).  Consequences used
below: Psi_a maps S^3 to itself, its inverse is Psi_{-a}, and its
differential is a multiple of a reflection,

    dPsi_a(y) = e^{mu_a(y)} (I - 2 v v^T),  v = (y - a)/|y - a|,
    e^{mu_a(y)} = (1 - |a|^2) / (1 + |a|^2 - 2 a.y).

Isometries of S^3 do not change area, so the open ball of parameters a is
enough to compute the conformal volume.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError
from .geometry import geometry

log = logging.getLogger(__name__)

BALL_MARGIN = 1e-9


def as_param(a):
    a = np.asarray(a, dtype=float)
    if a.shape != (4,):
        raise DomainError(f"Moebius parameter must be a 4-vector, got shape {a.shape}")
    if not np.all(np.isfinite(a)) or np.dot(a, a) >= 1.0:
        raise DomainError("Moebius parameter must lie in the open unit ball")
    return a


def clamp_to_ball(a, margin=BALL_MARGIN):
    r = np.linalg.norm(a)
    limit = 1.0 - margin
    return a * (limit / r) if r > limit else a


def _denominator(a, y):
    den = 1.0 + np.dot(a, a) - 2.0 * np.einsum("...k,k->...", y, a)
    assert np.all(den > 0), "|y - a|^2 vanished for |a| < 1"
    return den


def psi(a, y):
    a = as_param(a)
    y = np.asarray(y, dtype=float)
    d = y - a
    return (1.0 - np.dot(a, a)) * d / _denominator(a, y)[..., None] - a


def inverse_param(a):
    return -as_param(a)


def jacobian(a, y):
    """Ambient differential of Psi_a at y, shape (..., 4, 4)."""
    a = as_param(a)
    y = np.asarray(y, dtype=float)
    d = y - a
    den = _denominator(a, y)
    scale = (1.0 - np.dot(a, a)) / den
    refl = np.eye(4) - 2.0 * np.einsum("...i,...j->...ij", d, d) / den[..., None, None]
    return scale[..., None, None] * refl


def conformal_factor(a, phi):
    """mu_a(Phi(x)) with e^{mu} the stretch factor of Psi_a."""
    a = as_param(a)
    return np.log1p(-np.dot(a, a)) - np.log(_denominator(a, phi.points))


def grad_mu(a, y):
    """Gradient of mu_a on S^3 at y: tangential part of 2a over |y - a|^2."""
    a = as_param(a)
    y = np.asarray(y, dtype=float)
    den = _denominator(a, y)
    tangential = a - np.einsum("...k,k->...", y, a)[..., None] * y
    return 2.0 * tangential / den[..., None]


def push_immersion(a, phi):
    return phi.replace_points(psi(a, phi.points))


def _pushed_geometry(a, phi, scheme):
    # general-metric route: the identity is geometric, and at coarse grids the
    # pushed samples are conformal only up to truncation error
    pushed = push_immersion(a, phi)
    return geometry(pushed.replace_points(pushed.points, conformal=False), scheme)


def _apply(jac, v):
    return np.einsum("...ij,...j->...i", jac, v)


def check_lemma_V1(a, phi, scheme="spectral"):
    """Sup of |h0 of the pushed torus - dPsi (h0 of the original)|.

    h0 is the vector coefficient (II0_11 - i II0_12) n of the trace-free second
    fundamental form along dz^2; both sides use the same source chart.
    """
    geo = geometry(phi, scheme)
    geo_p = _pushed_geometry(a, phi, scheme)
    h0 = (geo.II0_11 - 1j * geo.II0_12)[..., None] * geo.normal
    h0_p = (geo_p.II0_11 - 1j * geo_p.II0_12)[..., None] * geo_p.normal
    jac = jacobian(a, phi.points)
    pushed = _apply(jac, h0.real) + 1j * _apply(jac, h0.imag)
    return float(np.max(np.linalg.norm(h0_p - pushed, axis=-1)))


def check_lemma_V2(a, phi, scheme="spectral"):
    """Sup of |H n of the pushed torus - e^{-2mu} dPsi[(H - grad(mu).n) n]|."""
    geo = geometry(phi, scheme)
    geo_p = _pushed_geometry(a, phi, scheme)
    mu = conformal_factor(a, phi)
    dmu_n = np.einsum("...k,...k->...", grad_mu(a, phi.points), geo.normal)
    inner = (geo.H - dmu_n)[..., None] * geo.normal
    expected = np.exp(-2 * mu)[..., None] * _apply(jacobian(a, phi.points), inner)
    return float(np.max(np.linalg.norm(geo_p.H[..., None] * geo_p.normal - expected, axis=-1)))


class AreaFunctional:
    """a -> area of Psi_a o Phi, evaluated as the integral of e^{2mu_a} dvol_g.

    The geometry of Phi is computed once; each evaluation is a weighted sum.
    """

    def __init__(self, phi, scheme="spectral", geo=None):
        geo = geo if geo is not None else geometry(phi, scheme)
        self.points = phi.points.reshape(-1, 4)
        self.weights = (geo.dvol * phi.grid.cell_area).ravel()
        self.base_area = float(self.weights.sum())

    def __call__(self, a):
        a = np.asarray(a, dtype=float)
        aa = np.dot(a, a)
        den = 1.0 + aa - 2.0 * self.points @ a
        return float(np.dot(self.weights, ((1.0 - aa) / den) ** 2))

    def gradient(self, a, h=1e-5):
        a = np.asarray(a, dtype=float)
        g = np.empty(4)
        for k in range(4):
            e = np.zeros(4)
            e[k] = h
            g[k] = (self(a + e) - self(a - e)) / (2 * h)
        return g


def area_under_mobius(a, phi, scheme="spectral"):
    return AreaFunctional(phi, scheme)(as_param(a))


@dataclass
class VcOptions:
    starts_radius: float = 0.5
    max_iters: int = 500
    grad_tol: float = 1e-8
    fd_step: float = 1e-5
    initial_step: float = 0.05


@dataclass
class VcResult:
    vc: float
    argmax: np.ndarray
    converged: bool
    warning: str | None = None
    trace: list = field(default_factory=list, repr=False)


def _starts(radius):
    out = [np.zeros(4)]
    for k in range(4):
        for s in (1.0, -1.0):
            e = np.zeros(4)
            e[k] = s * radius
            out.append(e)
    return out


def _ascend(area, a, opts, trace, tag):
    value = area(a)
    step = opts.initial_step
    for it in range(opts.max_iters):
        g = area.gradient(a, opts.fd_step)
        gnorm = float(np.linalg.norm(g))
        trace.append((tag, it, value, gnorm, float(np.linalg.norm(a))))
        if gnorm <= opts.grad_tol * max(1.0, abs(value)):
            return a, value, True
        step = min(step * 2.0, 1.0)
        while step > 1e-16:
            cand = clamp_to_ball(a + step * g / gnorm)
            cv = area(cand)
            if cv > value + 1e-4 * step * gnorm:
                break
            step *= 0.5
        else:
            return a, value, True
        if cv - value <= 1e-15 * abs(value):
            a, value = cand, cv
            return a, value, True
        a, value = cand, cv
    return a, value, False


def conformal_volume(phi, opts=None, scheme="spectral"):
    """Supremum of the area over Moebius images of phi by multi-start ascent."""
    opts = opts or VcOptions()
    area = AreaFunctional(phi, scheme)
    trace = []
    best = None
    all_converged = True
    for i, a0 in enumerate(_starts(opts.starts_radius)):
        a, value, ok = _ascend(area, a0, opts, trace, i)
        all_converged &= ok
        if best is None or value > best[1]:
            best = (a, value)
    warning = None
    if not all_converged:
        warning = f"some starts hit max_iters={opts.max_iters}"
        log.warning("conformal_volume: %s", warning)
    if np.linalg.norm(best[0]) > 1.0 - 1e-6:
        warning = "maximizer approaches the boundary of the ball"
    return VcResult(best[1], best[0], all_converged, warning, trace)
