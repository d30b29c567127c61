"""Immersions of tori into S^3: explicit families, Hopf tori, validation and I/O.

S^3 is viewed inside C^2 = R^4 through (z1, z2) <-> (Re z1, Im z1, Re z2, Im z2).
The Hopf map is pi(z1, z2) = (2 z1 conj(z2), |z1|^2 - |z2|^2) onto the unit S^2.

Hopf tori are parametrized by (s, t) = (arclength of the horizontal lift,
fibre phase), Phi(s, t) = exp(-i t) * lift(s).  A lift of length L with
holonomy theta, lift(L) = exp(i theta) lift(0), closes up on the lattice
spanned by L + i theta and 2 pi i.  Measured on the unit S^2 the base curve
has length 2L and encloses area 2 theta (mod 4 pi) on its left.

The fibre phase runs clockwise so that, with the Hodge normal of
``geometry``, the second fundamental form in (s, t) is -[[2 kappa, 1], [1, 0]]
with kappa the geodesic curvature of the base curve; H = -kappa.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import grid as gc
from .errors import DomainError, ParseError
from .grid import Lattice, PeriodicGrid

UNIT_TOL = 1e-10
FILE_UNIT_TOL = 1e-8
MAGIC = b"CTL1"
_HEADER = struct.Struct("<4sII4dB")


@dataclass(frozen=True)
class Immersion:
    grid: PeriodicGrid
    points: np.ndarray = field(repr=False)
    conformal: bool = True

    def __post_init__(self):
        pts = np.ascontiguousarray(self.grid.check(self.points), dtype=float)
        if pts.shape != self.grid.shape + (4,):
            raise DomainError(f"points must have shape {self.grid.shape + (4,)}")
        err = np.max(np.abs(np.linalg.norm(pts, axis=-1) - 1.0))
        if not err <= UNIT_TOL:
            raise DomainError(f"points are not on S^3 (max ||Phi|-1| = {err:.3e})")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    @property
    def lattice(self):
        return self.grid.lattice

    def in_chart(self, c):
        """Same samples read in the chart w = z / c (periods divided by c)."""
        return Immersion(self.grid.with_lattice(self.lattice.scaled(c)), self.points, self.conformal)

    def replace_points(self, points, conformal=None):
        return Immersion(self.grid, points, self.conformal if conformal is None else conformal)


def to_c2(p):
    p = np.asarray(p)
    return p[..., 0] + 1j * p[..., 1], p[..., 2] + 1j * p[..., 3]


def from_c2(z1, z2):
    return np.stack([z1.real, z1.imag, z2.real, z2.imag], axis=-1)


def hopf_map(p):
    z1, z2 = to_c2(p)
    w = 2 * z1 * np.conj(z2)
    return np.stack([w.real, w.imag, np.abs(z1) ** 2 - np.abs(z2) ** 2], axis=-1)


def flat_cmc_torus(a, n1, n2):
    """Product torus a S^1 x sqrt(1-a^2) S^1 in its flat conformal chart.

    The second circle is traversed clockwise so that, with the normal
    convention of ``geometry``, H = (1 - 2a^2) / (2a sqrt(1 - a^2)).
    """
    a = float(a)
    if not 0.0 < a < 1.0:
        raise DomainError(f"flat CMC torus needs 0 < a < 1, got {a}")
    b = np.sqrt(1.0 - a * a)
    grid = PeriodicGrid(Lattice(2 * np.pi * a, 2j * np.pi * b), n1, n2)
    x1, x2 = grid.x1, grid.x2
    pts = np.stack([a * np.cos(x1 / a), a * np.sin(x1 / a),
                    b * np.cos(x2 / b), -b * np.sin(x2 / b)], axis=-1)
    return Immersion(grid, pts, True)


def clifford_torus(n1, n2=None):
    """Clifford torus (cos u, sin u, cos v, sin v)/sqrt 2 on the 2 pi x 2 pi square."""
    n2 = n1 if n2 is None else n2
    grid = PeriodicGrid(Lattice(2 * np.pi, 2j * np.pi), n1, n2)
    x1, x2 = grid.x1, grid.x2
    pts = np.stack([np.cos(x1), np.sin(x1), np.cos(x2), np.sin(x2)], axis=-1) / np.sqrt(2.0)
    return Immersion(grid, pts, True)


def circle_radius(kappa0):
    """Spherical radius of a circle on the unit S^2 with geodesic curvature kappa0."""
    return np.arctan2(1.0, kappa0)


def hopf_torus_circle(kappa0, n1, n2):
    """Hopf torus over the circle of geodesic curvature kappa0 around the north pole."""
    kappa0 = float(kappa0)
    if not kappa0 >= 0.0:
        raise DomainError(f"kappa0 must be >= 0, got {kappa0}")
    rho = circle_radius(kappa0)
    length = np.pi * np.sin(rho)
    holonomy = np.pi * (1.0 - np.cos(rho))
    grid = PeriodicGrid(Lattice(length + 1j * holonomy, 2j * np.pi), n1, n2)
    s, t = grid.x1, -grid.x2
    # the lift is (cos(rho/2) e^{i alpha}, sin(rho/2) e^{i beta}) with
    # alpha - beta = base angle and alpha cos^2 + beta sin^2 = 0 (horizontality)
    phi = 2.0 * s / np.sin(rho)
    z1 = np.cos(rho / 2) * np.exp(1j * (t + np.sin(rho / 2) ** 2 * phi))
    z2 = np.sin(rho / 2) * np.exp(1j * (t - np.cos(rho / 2) ** 2 * phi))
    return Immersion(grid, from_c2(z1, z2), True)


class CurveOnS2:
    """Closed curve on the unit S^2 sampled uniformly in some parameter.

    ``samples`` is the closed list: the last row repeats the first.
    """

    def __init__(self, samples):
        samples = np.asarray(samples, dtype=float)
        if samples.ndim != 2 or samples.shape[1] != 3 or len(samples) < 9:
            raise DomainError("curve samples must be an (M+1, 3) array with M >= 8")
        if np.max(np.abs(np.linalg.norm(samples, axis=1) - 1.0)) > UNIT_TOL:
            raise DomainError("curve samples must be unit vectors")
        if np.linalg.norm(samples[-1] - samples[0]) > 1e-6:
            raise DomainError("curve does not close (first and last samples differ)")
        self.samples = samples
        self._p = samples[:-1]
        self._ph = np.fft.fft(self._p, axis=0)
        m = len(self._p)
        k = np.fft.fftfreq(m, d=1.0 / m)
        k[m // 2] = 0.0
        self._k = k
        self.tangent = np.fft.ifft(2j * np.pi * k[:, None] * self._ph, axis=0).real
        self.accel = np.fft.ifft(-(2 * np.pi * k[:, None]) ** 2 * self._ph, axis=0).real

    @property
    def periodic_samples(self):
        return self._p

    @property
    def speed(self):
        return np.linalg.norm(self.tangent, axis=1)

    @property
    def length(self):
        return float(np.mean(self.speed))

    @property
    def geodesic_curvature(self):
        p, dp, ddp = self._p, self.tangent, self.accel
        return np.einsum("ij,ij->i", np.cross(p, dp), ddp) / self.speed ** 3

    @property
    def enclosed_area(self):
        """Area of the region on the left, by Gauss-Bonnet (simple curves)."""
        return float(2 * np.pi - np.mean(self.geodesic_curvature * self.speed))

    @property
    def curvature_energy(self):
        """Discrete int |kappa|^2 dl, always finite; reported as a diagnostic."""
        return float(np.mean(self.geodesic_curvature ** 2 * self.speed))

    @classmethod
    def from_function(cls, func, m=256):
        sig = np.arange(m + 1) / m
        pts = np.asarray(func(2 * np.pi * sig), dtype=float)
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        pts[-1] = pts[0]
        return cls(pts)

    @classmethod
    def circle(cls, kappa0, m=64):
        rho = circle_radius(kappa0)
        return cls.from_function(lambda th: np.stack(
            [np.sin(rho) * np.cos(th), np.sin(rho) * np.sin(th), np.full_like(th, np.cos(rho))], axis=1), m)

    @classmethod
    def wavy_circle(cls, kappa0, amplitude, mode=3, m=256):
        """Circle whose polar radius oscillates as rho + amplitude cos(mode theta)."""
        rho = circle_radius(kappa0)

        def func(th):
            r = rho + amplitude * np.cos(mode * th)
            return np.stack([np.sin(r) * np.cos(th), np.sin(r) * np.sin(th), np.cos(r)], axis=1)
        return cls.from_function(func, m)


def _fourier_eval(coeffs, m, sig):
    """Evaluate the trigonometric interpolant with FFT coefficients at points sig."""
    k = np.fft.fftfreq(m, d=1.0 / m)
    k[m // 2] = 0.0
    if m % 2 == 0:
        # split the Nyquist term as a cosine so real data stays real
        nyq = coeffs[m // 2]
        coeffs = coeffs.copy()
        coeffs[m // 2] = 0.0
    phase = np.exp(2j * np.pi * np.outer(sig, k))
    val = phase @ coeffs
    if m % 2 == 0:
        val = val + np.multiply.outer(np.cos(np.pi * m * sig), nyq)
    return val / m


def _section(p):
    """Some smooth local lift of p in S^2 to S^3, regular away from the south pole."""
    x, y, w = p[..., 0], p[..., 1], p[..., 2]
    c = np.sqrt(np.maximum((1 + w) / 2, 0.0))
    north = np.abs(c) > 0.5
    c_safe = np.where(north, c, 1.0)
    s = np.sqrt(np.maximum((1 - w) / 2, 0.0))
    s_safe = np.where(north, 1.0, s)
    z1 = np.where(north, c, (x + 1j * y) / (2 * s_safe))
    z2 = np.where(north, (x - 1j * y) / (2 * c_safe), s)
    return z1, z2


def _safe_direction(points):
    """A unit vector of S^2 far from every sample of the curve."""
    rng = np.random.default_rng(0)
    cand = rng.normal(size=(400, 3))
    cand = np.vstack([np.eye(3), -np.eye(3), cand])
    cand /= np.linalg.norm(cand, axis=1, keepdims=True)
    dist = np.min(np.linalg.norm(cand[:, None, :] - points[None, :, :], axis=2), axis=1)
    return cand[np.argmax(dist)]


def horizontal_lift(curve):
    """Horizontal lift of a closed curve.

    Returns ``(lift, length, holonomy, sigma_of_s)`` where ``lift(sigma)``
    evaluates the lift at curve parameters ``sigma`` in [0, 1), ``length``
    is the length of the lift in S^3 and ``holonomy`` the phase with
    lift(1) = exp(i holonomy) lift(0), reduced to [0, 2 pi).
    """
    p = curve.periodic_samples
    m = len(p)
    # gauge-fix an arbitrary section against a reference point zeta whose
    # orthogonal fibre sits over a point the curve never visits
    d = _safe_direction(p)
    zeta = np.array(_section(-d))

    def gauge_fixed(q):
        z1, z2 = _section(q)
        h = z1 * np.conj(zeta[0]) + z2 * np.conj(zeta[1])
        ph = np.conj(h) / np.abs(h)
        return z1 * ph, z2 * ph

    z1, z2 = gauge_fixed(p)
    k = 2j * np.pi * np.fft.fftfreq(m, d=1.0 / m)
    k[m // 2] = 0.0
    dz1 = np.fft.ifft(k * np.fft.fft(z1))
    dz2 = np.fft.ifft(k * np.fft.fft(z2))
    # horizontality: psi' = -<z', i z> = -Im(z' . conj z)
    f = -np.imag(dz1 * np.conj(z1) + dz2 * np.conj(z2))
    theta = float(np.mean(f))
    fh = np.fft.fft(f - theta)
    kk = k.copy()
    kk[0] = kk[m // 2] = 1.0
    ph_hat = fh / kk
    ph_hat[0] = ph_hat[m // 2] = 0.0

    speed = curve.speed / 2.0
    length = float(np.mean(speed))
    sh = np.fft.fft(speed - length)
    ell_hat = sh / kk
    ell_hat[0] = ell_hat[m // 2] = 0.0
    ell0 = _fourier_eval(ell_hat, m, np.zeros(1)).real[0]
    psi0 = _fourier_eval(ph_hat, m, np.zeros(1)).real[0]
    p_hat = np.fft.fft(p, axis=0)

    w1, w2 = _section(p[0])
    g1, g2 = gauge_fixed(p[0])
    # global phase so that the lift starts at the standard section value
    align = w1 * np.conj(g1) + w2 * np.conj(g2)
    align /= abs(align)

    def lift(sig):
        sig = np.asarray(sig, dtype=float)
        q = _fourier_eval(p_hat, m, sig).real
        q /= np.linalg.norm(q, axis=-1, keepdims=True)
        a1, a2 = gauge_fixed(q)
        psi = theta * sig + _fourier_eval(ph_hat, m, sig).real - psi0
        rot = np.exp(1j * psi) * align
        return a1 * rot, a2 * rot

    def sigma_of_s(s):
        s = np.asarray(s, dtype=float)
        sig = s / length
        for _ in range(50):
            ell = length * sig + _fourier_eval(ell_hat, m, sig).real - ell0
            dell = _fourier_eval(np.fft.fft(speed), m, sig).real
            step = (ell - s) / dell
            sig = sig - step
            if np.max(np.abs(step)) < 1e-15:
                break
        return sig

    return lift, length, theta % (2 * np.pi), sigma_of_s


def hopf_torus_curve(curve, n1, n2):
    """Hopf torus over a closed curve on S^2 in arclength/fibre coordinates."""
    lift, length, holonomy, sigma_of_s = horizontal_lift(curve)
    grid = PeriodicGrid(Lattice(length + 1j * holonomy, 2j * np.pi), n1, n2)
    s_line = np.arange(n1) / n1 * length
    sig = sigma_of_s(s_line)
    l1, l2 = lift(sig)
    rot = np.exp(-1j * grid.x2)
    pts = from_c2(rot * l1[:, None], rot * l2[:, None])
    pts /= np.linalg.norm(pts, axis=-1, keepdims=True)
    return Immersion(grid, pts, True)


def metric(phi, scheme="spectral"):
    """Induced metric coefficients (g11, g12, g22) and the first derivatives."""
    d1, d2 = gc.gradient(phi.points, phi.grid, scheme)
    g11 = np.einsum("...k,...k->...", d1, d1)
    g12 = np.einsum("...k,...k->...", d1, d2)
    g22 = np.einsum("...k,...k->...", d2, d2)
    return g11, g12, g22, d1, d2


def validate_weak_immersion(phi, scheme="spectral"):
    """Discrete diagnostics for the three weak-immersion conditions.

    The reference metric is the flat chart metric rescaled to the same area,
    so a conformal immersion with constant factor gets constant 1.
    """
    from .geometry import geometry  # local import: geometry depends on this module

    g11, g12, g22, d1, d2 = metric(phi, scheme)
    det = g11 * g22 - g12 ** 2
    tr = g11 + g22
    disc = np.hypot(0.5 * (g11 - g22), g12)
    lam_max = tr / 2 + disc
    lam_min = tr / 2 - disc
    lipschitz = float(np.sqrt(np.max(lam_max)))
    report = {
        "lipschitz_bound": lipschitz,
        "min_det_g": float(np.min(det)),
        "nondegeneracy_constant": np.inf,
        "gauss_map_energy": np.inf,
        "nondegenerate": bool(np.min(det) >= 1e-12),
    }
    if not report["nondegenerate"]:
        return report
    area = gc.integrate(np.sqrt(det), phi.grid)
    ref = area / phi.lattice.area
    report["nondegeneracy_constant"] = float(max(np.max(lam_max) / ref, ref / np.min(lam_min)))
    geo = geometry(phi.replace_points(phi.points, conformal=False), scheme)
    report["gauss_map_energy"] = float(gc.integrate(geo.II_norm2, phi.grid, geo.dvol))
    return report


def serialize(phi):
    lat = phi.lattice
    head = _HEADER.pack(MAGIC, phi.grid.n1, phi.grid.n2, lat.omega1.real, lat.omega1.imag,
                        lat.omega2.real, lat.omega2.imag, 1 if phi.conformal else 0)
    return head + np.asarray(phi.points, dtype="<f8").tobytes(order="C")


def deserialize(data):
    data = bytes(data)
    if len(data) < _HEADER.size:
        raise ParseError("truncated CTL header")
    magic, n1, n2, r1, i1, r2, i2, flag = _HEADER.unpack_from(data)
    if magic[:3] != b"CTL":
        raise ParseError(f"bad magic {magic!r}, not a CTL immersion file")
    if magic != MAGIC:
        raise ParseError(f"unsupported CTL format version {magic[3:]!r}, expected b'1'")
    if flag not in (0, 1):
        raise ParseError(f"bad conformal flag {flag}")
    expected = _HEADER.size + 8 * 4 * n1 * n2
    if len(data) != expected:
        raise ParseError(f"CTL payload has {len(data)} bytes, expected {expected}")
    try:
        grid = PeriodicGrid(Lattice(complex(r1, i1), complex(r2, i2)), n1, n2)
    except Exception as exc:
        raise ParseError(f"invalid grid in header: {exc}") from exc
    pts = np.frombuffer(data, dtype="<f8", offset=_HEADER.size).reshape(n1, n2, 4).astype(float)
    err = np.max(np.abs(np.linalg.norm(pts, axis=-1) - 1.0))
    if err > FILE_UNIT_TOL:
        raise ParseError(f"points are not unit vectors (max deviation {err:.3e})")
    if err > UNIT_TOL:
        pts = pts / np.linalg.norm(pts, axis=-1, keepdims=True)
    return Immersion(grid, pts, bool(flag))


def write_immersion(path, phi, metadata=None):
    path = Path(path)
    path.write_bytes(serialize(phi))
    if metadata:
        lines = [f"{k} = {v}" for k, v in metadata.items()]
        path.with_name(path.name + ".meta").write_text("\n".join(lines) + "\n")


def read_immersion(path):
    return deserialize(Path(path).read_bytes())
