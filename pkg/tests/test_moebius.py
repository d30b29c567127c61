import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from conftori import clifford_torus, geometry
from conftori import moebius as mb
from conftori.errors import DomainError

from conftest import FAMILIES
from oracles import TWO_PI2, brute_force_vc


def random_ball(rng, rmax):
    v = rng.normal(size=4)
    return v / np.linalg.norm(v) * rmax * rng.uniform() ** 0.25


ball_vectors = st.lists(st.floats(-0.45, 0.45), min_size=4, max_size=4).map(np.array).filter(
    lambda a: a @ a < 0.8)


def test_param_domain():
    with pytest.raises(DomainError):
        mb.as_param([1.0, 0, 0, 0])
    with pytest.raises(DomainError):
        mb.as_param([0.1, 0.2])
    with pytest.raises(DomainError):
        mb.as_param([np.nan, 0, 0, 0])


@settings(max_examples=30, deadline=None)
@given(ball_vectors)
def test_psi_preserves_sphere_and_inverts(a):
    rng = np.random.default_rng(1)
    y = rng.normal(size=(50, 4))
    y /= np.linalg.norm(y, axis=1, keepdims=True)
    z = mb.psi(a, y)
    assert np.allclose(np.linalg.norm(z, axis=1), 1, atol=1e-12)
    assert np.allclose(mb.psi(mb.inverse_param(a), z), y, atol=1e-11)
    assert np.allclose(mb.psi(np.zeros(4), y), y)


@settings(max_examples=20, deadline=None)
@given(ball_vectors)
def test_jacobian_and_conformal_factor(a):
    rng = np.random.default_rng(2)
    y = rng.normal(size=4)
    y /= np.linalg.norm(y)
    jac = mb.jacobian(a, y)
    h = 1e-6
    t = rng.normal(size=4)
    t -= (t @ y) * y
    t /= np.linalg.norm(t)
    # psi only agrees with the ambient formula on S^3, so differentiate along a great circle
    arc = lambda s: np.cos(s) * y + np.sin(s) * t  # noqa: E731
    fd = (mb.psi(a, arc(h)) - mb.psi(a, arc(-h))) / (2 * h)
    assert np.allclose(jac @ t, fd, atol=1e-8)
    e_mu = (1 - a @ a) / (1 + a @ a - 2 * a @ y)
    assert np.linalg.norm(jac @ t) == pytest.approx(e_mu * np.linalg.norm(t), rel=1e-12)
    # gradient of mu along the tangent direction
    mu = lambda q: np.log(1 - a @ a) - np.log(1 + a @ a - 2 * a @ q)  # noqa: E731
    dmu = (mu(arc(h)) - mu(arc(-h))) / (2 * h)
    assert mb.grad_mu(a, y) @ t == pytest.approx(dmu, abs=1e-8)


@pytest.mark.parametrize("name,rmax", [("clifford", 0.5), ("flat_cmc_0.6", 0.5),
                                       ("hopf_circle_1", 0.5), ("wavy_hopf", 0.2)])
def test_transformation_laws(name, rmax):
    phi = FAMILIES[name]()
    rng = np.random.default_rng(3)
    for _ in range(3):
        a = random_ball(rng, rmax)
        assert mb.check_lemma_V1(a, phi) < 1e-8
        assert mb.check_lemma_V2(a, phi) < 1e-8


def test_conformal_factor_shifts_lambda(hopf1):
    a = np.array([0.2, -0.1, 0.3, 0.0])
    new = geometry(mb.push_immersion(a, hopf1))
    assert np.allclose(new.lam, geometry(hopf1).lam + mb.conformal_factor(a, hopf1), atol=1e-11)


def test_area_functional_matches_pushed_geometry(cmc06):
    a = np.array([0.3, 0.1, -0.2, 0.1])
    area = mb.AreaFunctional(cmc06)
    assert area(a) == pytest.approx(geometry(mb.push_immersion(a, cmc06)).area, rel=1e-12)
    g = area.gradient(a)
    h = 1e-4
    assert g[2] == pytest.approx((area(a + h * np.eye(4)[2]) - area(a - h * np.eye(4)[2])) / (2 * h),
                                 rel=1e-6)


def test_clifford_conformal_volume(clifford):
    r = mb.conformal_volume(clifford)
    assert r.vc == pytest.approx(TWO_PI2, abs=1e-8)
    assert np.linalg.norm(r.argmax) < 1e-6 and r.converged and r.warning is None


def test_conformal_volume_is_moebius_invariant():
    phi = mb.push_immersion(np.array([0.25, 0.0, -0.1, 0.15]), clifford_torus(96))
    assert geometry(phi).area < TWO_PI2 - 0.1
    assert mb.conformal_volume(phi).vc == pytest.approx(TWO_PI2, abs=1e-6)


def test_hopf_conformal_volume_exceeds_area(hopf1):
    r = mb.conformal_volume(hopf1)
    assert r.vc > geometry(hopf1).area + 1.0
    assert 0 < np.linalg.norm(r.argmax) < 1


def test_flat_cmc_volume_matches_grid_oracle(cmc06):
    lat = cmc06.lattice
    oracle, _ = brute_force_vc(cmc06.points, (abs(lat.omega1), abs(lat.omega2)))
    assert mb.conformal_volume(cmc06).vc == pytest.approx(oracle, abs=1e-6)


def test_max_iters_warning(hopf1):
    r = mb.conformal_volume(hopf1, mb.VcOptions(max_iters=2))
    assert not r.converged and "max_iters" in r.warning


def test_vc_is_deterministic(hopf1):
    a = mb.conformal_volume(hopf1)
    b = mb.conformal_volume(hopf1)
    assert a.vc == b.vc and np.array_equal(a.argmax, b.argmax)
