import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vortexsphere.dynamics import flow, vector_field
from vortexsphere.equilibria import find_fixed_points
from vortexsphere.hamiltonian import frame_displace
from vortexsphere.orbits import (
    OrbitError,
    PeriodicOrbit,
    choreography_defect,
    is_choreography,
    lyapunov_seeds,
    periodic_residual,
    perverse_test,
    poincare_return,
    polygon,
    polygon_relative_equilibrium,
    reduced_vorticity,
    refine_periodic,
)
from vortexsphere.sphere import Configuration


def rigid_period(z, gamma, ctx=None):
    """Period of a rigid rotation read off from one vortex velocity and its distance to the axis."""
    X = vector_field(z, gamma, ctx)
    axis = z.sum(axis=0)
    axis /= np.linalg.norm(axis)
    r = np.linalg.norm(z[0] - np.dot(z[0], axis) * axis)
    return 2 * math.pi * r / np.linalg.norm(X[0])


def orbit_of(z, T, dt=5e-3):
    return PeriodicOrbit(Configuration(z), T, 0.0, 0.0, dt=dt)


def round_dipole(theta=0.7):
    s, c = math.sin(theta), math.cos(theta)
    return np.array([[s, 0.0, c], [-s, 0.0, c]])


def test_round_dipole_return_time():
    z = round_dipole()
    q, T = poincare_return(z, [1, 1])
    assert T == pytest.approx(rigid_period(z, [1, 1]), rel=1e-8)
    assert np.allclose(q.points, z, atol=1e-8)


def test_relative_equilibrium_returns_to_itself():
    z = polygon(3, 1.1)
    q, T = poincare_return(z, [1, 1, 1])
    assert np.allclose(q.points, z, atol=1e-8)
    assert T == pytest.approx(rigid_period(z, [1, 1, 1]), rel=1e-8)


def test_fixed_point_has_no_section():
    z = np.array([[0.0, 0.0, 1.0], [0.0, 0.0, -1.0]])
    with pytest.raises(OrbitError) as e:
        poincare_return(z, [1, 1])
    assert e.value.status == "not_transverse"


def test_refine_polygon_seed(ctx_axisym):
    g = [1, 1, 1]
    re = polygon_relative_equilibrium(g, None, 1.0)
    orb = refine_periodic(re.z, re.T, g, tol=1e-9)
    assert orb.converged and orb.iterations <= 3
    # a perturbed seed and period guess on an axisymmetric metric
    re = polygon_relative_equilibrium(g, ctx_axisym, 1.0)
    z = frame_displace(re.z, 1e-4 * np.array([1.0, 0.0, 0.0, -1.0, 0.5, 0.3]))
    orb = refine_periodic(z, 1.0005 * re.T, g, ctx_axisym, tol=1e-9)
    assert orb.converged and orb.iterations <= 3
    # re-verify at half the step
    assert periodic_residual(orb.z0.points, orb.T, g, ctx_axisym, dt=2.5e-3) <= 2e-9
    with pytest.raises(ValueError):
        refine_periodic(re.z, -1.0, g)


def test_polygon_relative_equilibrium_axisymmetric(ctx_axisym, ctx_small):
    re = polygon_relative_equilibrium([1, 1, 1], ctx_axisym, 0.9)
    assert re.T == pytest.approx(rigid_period(re.z, [1, 1, 1], ctx_axisym), rel=1e-12)
    q = flow(re.z, [1, 1, 1], ctx_axisym, re.T, dt=5e-3)
    assert np.max(np.abs(q - re.z)) < 1e-8
    with pytest.raises(ValueError):
        polygon_relative_equilibrium([1, 1, 1], ctx_small, 0.9)
    with pytest.raises(ValueError):
        polygon_relative_equilibrium([1, 2], None, 0.9)


def test_choreography_examples():
    re = polygon_relative_equilibrium([1, 1, 1], None, 1.0)
    orb = orbit_of(re.z, re.T)
    assert is_choreography(orb, [1, 1, 1])
    assert not is_choreography(orbit_of(re.z[[1, 0, 2]], re.T), [1, 1, 1])
    z = round_dipole()
    assert is_choreography(orbit_of(z, rigid_period(z, [1, 1])), [1, 1])


def test_choreography_time_translation_invariant():
    re = polygon_relative_equilibrium([1, 1, 1, 1], None, 1.2)
    orb = orbit_of(re.z, re.T)
    a = choreography_defect(orb, [1, 1, 1, 1], samples=16)
    b = choreography_defect(orb, [1, 1, 1, 1], samples=16, t0=0.37 * re.T)
    assert a < 1e-8 and b < 1e-8


def test_lyapunov_seeds_close_to_periodic(ctx_small):
    g = [1, 2]
    fps = find_fixed_points(g, ctx_small, starts=8)
    amp = 1e-4
    seen = 0
    for fp in fps:
        for s in lyapunov_seeds(fp.z.points, g, ctx_small, amplitude=amp):
            assert s.T == pytest.approx(2 * math.pi / s.frequency)
            good = periodic_residual(s.z, s.T, g, ctx_small, dt=1e-2)
            bad = periodic_residual(s.z, 0.9 * s.T, g, ctx_small, dt=1e-2)
            assert good < 100 * amp**2 and bad > 0.1 * amp
            seen += 1
    assert seen >= 1


def test_perverse_examples():
    r = perverse_test(None, [1, 2])
    assert r.reduced_gammas == (-0.5, 0.5)
    assert r.quadratic_form == pytest.approx(-0.5, abs=1e-15)
    assert r.status == "no orbit"
    assert perverse_test(None, [2, 2, 2]).status == "identical vorticities"
    # the zero reduced vorticity drops out of the reduced gradient
    assert perverse_test(None, [1, 2, 3]).skipped == (1,)


def test_perverse_rejects_unequal_rigid_orbit():
    z = round_dipole(0.5)
    g = [1, 2]
    q, T = poincare_return(z, g)
    r = perverse_test(orbit_of(z, T), g, samples=16)
    assert r.status == "not a choreography" and r.min_grad_norm > 1e-3


@given(st.lists(st.floats(-10, 10).filter(lambda x: abs(x) > 1e-3), min_size=1, max_size=8))
def test_perverse_quadratic_form_identity(gam):
    r = perverse_test(None, gam)
    gt = reduced_vorticity(gam)
    assert abs(sum(gt)) < 1e-12 * max(1.0, max(map(abs, gam))) * len(gam)
    assert r.quadratic_form == pytest.approx(-float(np.sum(gt**2)), abs=1e-12 * (1 + np.sum(gt**2)))
    assert r.pair_sum == pytest.approx(0.5 * r.quadratic_form)
