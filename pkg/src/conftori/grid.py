"""Flat tori C/Lambda sampled on periodic grids, with derivatives and quadrature.

Fields are plain numpy arrays whose two leading axes index the grid,
``f[i, j, ...]`` being the value at ``(i/n1) omega1 + (j/n2) omega2``.
Trailing axes (for example the 4 components of a map into R^4) are carried
along untouched.

Derivatives are taken in lattice coordinates ``u`` on the unit square and
mapped to the chart coordinates ``x = (Re z, Im z)`` through the constant
Jacobian of ``u -> u1 omega1 + u2 omega2``.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.fft

from .errors import ConfigurationError, DimensionError

SCHEMES = ("spectral", "fd2")


def fft_workers():
    """Thread count for FFTs, capped by the CTL_THREADS environment variable."""
    value = os.environ.get("CTL_THREADS")
    if not value:
        return 1
    try:
        return max(1, int(value))
    except ValueError:
        raise ConfigurationError(f"CTL_THREADS must be an integer, got {value!r}")


@dataclass(frozen=True)
class Lattice:
    omega1: complex
    omega2: complex

    def __post_init__(self):
        w1, w2 = complex(self.omega1), complex(self.omega2)
        if w1 == 0 or w2 == 0:
            raise ConfigurationError("lattice periods must be non-zero")
        if (w2 / w1).imag <= 0:
            raise ConfigurationError("lattice must satisfy Im(omega2/omega1) > 0")
        object.__setattr__(self, "omega1", w1)
        object.__setattr__(self, "omega2", w2)

    @property
    def jacobian(self):
        """Matrix J with x = J u, columns are the periods as real 2-vectors."""
        return np.array([[self.omega1.real, self.omega2.real],
                         [self.omega1.imag, self.omega2.imag]])

    @property
    def area(self):
        return (self.omega1.conjugate() * self.omega2).imag

    def scaled(self, c):
        """Lattice of the chart w = z / c, i.e. the periods divided by c."""
        return Lattice(self.omega1 / c, self.omega2 / c)

    def is_rectangular(self):
        return abs(self.omega1.imag) == 0 and abs(self.omega2.real) == 0


@dataclass(frozen=True)
class PeriodicGrid:
    lattice: Lattice
    n1: int
    n2: int

    def __post_init__(self):
        for n in (self.n1, self.n2):
            if int(n) != n or n < 8 or n % 2:
                raise ConfigurationError(
                    f"grid sizes must be even integers >= 8, got ({self.n1}, {self.n2})")

    @property
    def shape(self):
        return (self.n1, self.n2)

    @property
    def cell_area(self):
        return self.lattice.area / (self.n1 * self.n2)

    @cached_property
    def lattice_coords(self):
        """Arrays (u1, u2) of lattice coordinates in [0, 1)."""
        u1 = np.arange(self.n1) / self.n1
        u2 = np.arange(self.n2) / self.n2
        return np.meshgrid(u1, u2, indexing="ij")

    @cached_property
    def points(self):
        """Complex sample positions z = u1 omega1 + u2 omega2."""
        u1, u2 = self.lattice_coords
        return u1 * self.lattice.omega1 + u2 * self.lattice.omega2

    @property
    def x1(self):
        return self.points.real

    @property
    def x2(self):
        return self.points.imag

    @cached_property
    def _inverse_jacobian(self):
        return np.linalg.inv(self.lattice.jacobian)

    @cached_property
    def wavenumbers(self):
        """Spectral symbols (D1, D2) of d/dx1 and d/dx2, Nyquist modes zeroed."""
        k1 = 2j * np.pi * np.fft.fftfreq(self.n1, d=1.0 / self.n1)
        k2 = 2j * np.pi * np.fft.fftfreq(self.n2, d=1.0 / self.n2)
        k1[self.n1 // 2] = 0.0
        k2[self.n2 // 2] = 0.0
        K1, K2 = np.meshgrid(k1, k2, indexing="ij")
        jinv = self._inverse_jacobian
        # d/dx_i = sum_k (J^-1)_{k i} d/du_k
        return (jinv[0, 0] * K1 + jinv[1, 0] * K2,
                jinv[0, 1] * K1 + jinv[1, 1] * K2)

    def with_lattice(self, lattice):
        return PeriodicGrid(lattice, self.n1, self.n2)

    def check(self, f):
        f = np.asarray(f)
        if f.shape[:2] != self.shape:
            raise DimensionError(f"field of shape {f.shape} does not live on a {self.shape} grid")
        return f

    def minimal_image(self, z0):
        """Displacements z - z0 reduced to the fundamental cell centred at z0."""
        jinv = self._inverse_jacobian
        dz = self.points - z0
        du = np.tensordot(jinv, np.stack([dz.real, dz.imag]), axes=1)
        du -= np.round(du)
        dx = np.tensordot(self.lattice.jacobian, du, axes=1)
        return dx[0] + 1j * dx[1]


def _broadcast(symbol, f):
    return symbol.reshape(symbol.shape + (1,) * (f.ndim - 2))


def _spectral(f, grid, orders):
    fh = scipy.fft.fft2(f, axes=(0, 1), workers=fft_workers())
    D1, D2 = grid.wavenumbers
    out = []
    for i, j in orders:
        symbol = D1 ** i * D2 ** j
        out.append(scipy.fft.ifft2(fh * _broadcast(symbol, f), axes=(0, 1),
                                   workers=fft_workers()).real)
    return out


def _fd2_first(f, grid, direction):
    du = (np.roll(f, -1, axis=0) - np.roll(f, 1, axis=0)) * (grid.n1 / 2.0)
    dv = (np.roll(f, -1, axis=1) - np.roll(f, 1, axis=1)) * (grid.n2 / 2.0)
    jinv = grid._inverse_jacobian
    k = direction - 1
    return jinv[0, k] * du + jinv[1, k] * dv


def _direction_index(direction):
    if direction in (1, "x1"):
        return 1
    if direction in (2, "x2"):
        return 2
    raise ConfigurationError(f"unknown direction {direction!r}")


def derivative(f, grid, direction, scheme="spectral"):
    """Partial derivative of a periodic field along chart coordinate x1 or x2."""
    f = grid.check(f)
    d = _direction_index(direction)
    if scheme == "spectral":
        return _spectral(f, grid, [(1, 0) if d == 1 else (0, 1)])[0]
    if scheme == "fd2":
        return _fd2_first(f, grid, d)
    raise ConfigurationError(f"unknown scheme {scheme!r}")


def jet(f, grid, scheme="spectral"):
    """First and second derivatives of f in one pass.

    Returns ``(f1, f2, f11, f12, f22)``.
    """
    f = grid.check(f)
    if scheme == "spectral":
        return tuple(_spectral(f, grid, [(1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]))
    if scheme == "fd2":
        f1 = _fd2_first(f, grid, 1)
        f2 = _fd2_first(f, grid, 2)
        return (f1, f2, _fd2_first(f1, grid, 1),
                0.5 * (_fd2_first(f1, grid, 2) + _fd2_first(f2, grid, 1)),
                _fd2_first(f2, grid, 2))
    raise ConfigurationError(f"unknown scheme {scheme!r}")


def gradient(f, grid, scheme="spectral"):
    """Both first derivatives ``(d1 f, d2 f)``."""
    f = grid.check(f)
    if scheme == "spectral":
        return tuple(_spectral(f, grid, [(1, 0), (0, 1)]))
    return derivative(f, grid, 1, scheme), derivative(f, grid, 2, scheme)


def laplacian(f, grid, scheme="spectral"):
    _, _, f11, _, f22 = jet(f, grid, scheme)
    return f11 + f22


def integrate(f, grid, weight=None):
    """Periodic trapezoid rule for the integral of f * weight over one cell."""
    f = grid.check(f)
    if weight is not None:
        weight = grid.check(weight)
        if weight.ndim != 2:
            raise DimensionError("weight must be a scalar field")
        f = f * _broadcast(weight, f)
    total = np.mean(f, axis=(0, 1)) * grid.lattice.area
    return total.item() if f.ndim == 2 else total


def resample(f, grid, n1, n2):
    """Fourier interpolation of f onto an (n1, n2) grid over the same lattice.

    Returns ``(values, new_grid)``.
    """
    f = grid.check(f)
    new = PeriodicGrid(grid.lattice, n1, n2)
    fh = scipy.fft.fft2(f, axes=(0, 1), workers=fft_workers())
    fh = _resample_axis(fh, grid.n1, n1, 0)
    fh = _resample_axis(fh, grid.n2, n2, 1)
    fh *= (n1 * n2) / (grid.n1 * grid.n2)
    return scipy.fft.ifft2(fh, axes=(0, 1), workers=fft_workers()).real, new


def _resample_axis(fh, m, n, axis):
    fh = np.moveaxis(fh, axis, 0)
    out = np.zeros((n,) + fh.shape[1:], dtype=complex)
    h = min(m, n) // 2
    out[:h] = fh[:h]
    out[n - h + 1:] = fh[m - h + 1:]
    if n > m:
        # split the source Nyquist mode evenly between +h and -h
        out[h] = 0.5 * fh[h]
        out[n - h] = 0.5 * fh[h]
    elif n < m:
        # the target Nyquist mode collects both aliases
        out[h] = fh[h] + fh[m - h]
    else:
        out[h] = fh[h]
    return np.moveaxis(out, 0, axis)
