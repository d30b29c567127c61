import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftori import (CurveOnS2, Immersion, clifford_torus, flat_cmc_torus, hopf_torus_circle,
                      hopf_torus_curve, read_immersion, validate_weak_immersion,
                      write_immersion)
from conftori.errors import DomainError, ParseError
from conftori.immersion import deserialize, hopf_map, metric, serialize

from oracles import hopf_circle_area


def test_points_must_be_unit(clifford):
    with pytest.raises(DomainError):
        Immersion(clifford.grid, clifford.points * 1.01)


@pytest.mark.parametrize("a", [0.0, 1.0, 1.5, -0.2])
def test_flat_cmc_domain(a):
    with pytest.raises(DomainError):
        flat_cmc_torus(a, 16, 16)


def test_hopf_domain():
    with pytest.raises(DomainError):
        hopf_torus_circle(-1.0, 16, 16)


@pytest.mark.parametrize("make", [lambda: clifford_torus(32), lambda: flat_cmc_torus(0.3, 32, 32),
                                  lambda: hopf_torus_circle(0.7, 32, 32)])
def test_explicit_families_are_conformal(make):
    g11, g12, g22, _, _ = metric(make())
    assert np.max(np.abs(g11 - g22)) < 1e-12
    assert np.max(np.abs(g12)) < 1e-12


@pytest.mark.parametrize("kappa", [0.0, 0.5, 1.0, 3.0])
def test_hopf_circle_projects_to_circle(kappa):
    phi = hopf_torus_circle(kappa, 32, 16)
    base = hopf_map(phi.points)
    # the fibre direction collapses
    assert np.allclose(base[:, 0], base[:, 5], atol=1e-12)
    assert np.allclose(base[..., 2], np.cos(np.arctan2(1.0, kappa)), atol=1e-12)
    _, _, _, d1, d2 = metric(phi)
    area = np.mean(np.linalg.norm(d1, axis=-1) * np.linalg.norm(d2, axis=-1)) * phi.lattice.area
    assert area == pytest.approx(hopf_circle_area(kappa), rel=1e-12)


def test_hopf_curve_matches_circle_construction():
    a = hopf_torus_circle(1.0, 32, 16)
    b = hopf_torus_curve(CurveOnS2.circle(1.0, 64), 32, 16)
    assert b.lattice.omega1 == pytest.approx(a.lattice.omega1, abs=1e-12)
    assert b.lattice.omega2 == pytest.approx(a.lattice.omega2)
    # same torus up to a fixed isometry: compare Hopf projections of the fibres
    assert np.allclose(np.sort(hopf_map(b.points)[:, 0, 2]), np.sort(hopf_map(a.points)[:, 0, 2]),
                       atol=1e-10)


def test_wavy_curve_geometry():
    c = CurveOnS2.wavy_circle(1.0, 0.05, 3, 256)
    phi = hopf_torus_curve(c, 128, 16)
    assert phi.lattice.omega1.real == pytest.approx(c.length / 2, rel=1e-12)
    assert phi.lattice.omega1.imag == pytest.approx(c.enclosed_area / 2 % (2 * math.pi), abs=1e-9)
    g11, g12, g22, _, _ = metric(phi)
    assert np.max(np.abs(g11 - 1)) < 1e-9
    assert np.max(np.abs(g12)) < 1e-9


def test_curve_validation():
    with pytest.raises(DomainError):
        CurveOnS2(np.zeros((5, 3)))
    th = np.linspace(0, 2 * np.pi, 17)
    open_arc = np.stack([np.cos(th / 2), np.sin(th / 2), 0 * th], axis=1)
    with pytest.raises(DomainError):
        CurveOnS2(open_arc)


def test_weak_immersion_diagnostics(hopf1):
    rep = validate_weak_immersion(hopf1)
    assert rep["nondegenerate"]
    assert rep["nondegeneracy_constant"] == pytest.approx(1.0, abs=1e-9)
    assert rep["lipschitz_bound"] == pytest.approx(1.0, abs=1e-9)
    # II = [[2, 1], [1, 0]] up to sign in an isometric chart, so |II|^2 = 6
    assert rep["gauss_map_energy"] == pytest.approx(6 * hopf_circle_area(1.0), rel=1e-9)


def test_roundtrip_file(tmp_path, cmc06):
    p = tmp_path / "t.ctl"
    write_immersion(p, cmc06, {"family": "flat-cmc", "a": 0.6})
    back = read_immersion(p)
    assert np.array_equal(back.points, cmc06.points)
    assert back.lattice == cmc06.lattice and back.conformal
    assert "a = 0.6" in (tmp_path / "t.ctl.meta").read_text()


def test_parse_errors(clifford):
    data = serialize(clifford)
    with pytest.raises(ParseError):
        deserialize(data[:10])
    with pytest.raises(ParseError):
        deserialize(b"XXXX" + data[4:])
    with pytest.raises(ParseError, match="version"):
        deserialize(b"CTL2" + data[4:])
    with pytest.raises(ParseError):
        deserialize(data[:-8])
    bad = bytearray(data)
    bad[-8:] = np.float64(3.0).tobytes()
    with pytest.raises(ParseError):
        deserialize(bytes(bad))


@settings(max_examples=15, deadline=None)
@given(st.floats(0.05, 0.95), st.sampled_from([8, 16, 24]))
def test_serialize_roundtrip_property(a, n):
    phi = flat_cmc_torus(a, n, n + 8)
    back = deserialize(serialize(phi))
    assert np.array_equal(back.points, phi.points)
    assert back.grid == phi.grid
