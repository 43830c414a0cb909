import math

import numpy as np
import pytest

from vortexsphere.bands import c1_c2, inner_min, separation_check
from vortexsphere.hamiltonian import MetricContext, energy_value
from vortexsphere.sphere import fibonacci_lattice, random_points

DIPOLE_LEVEL = -math.log(2.0) / (2 * math.pi)


def test_inner_min_round_dipole_is_antipodal():
    eta = np.array([0.3, -0.4, 0.866])
    eta /= np.linalg.norm(eta)
    r = inner_min(eta, 0, [1, 1], None, starts=4)
    assert r.value == pytest.approx(DIPOLE_LEVEL, abs=1e-10)
    assert np.allclose(r.z[1], -eta, atol=1e-5)
    assert np.array_equal(r.z[0], eta)
    assert not r.near_collision


def test_inner_min_single_vortex(ctx_small):
    eta = np.array([0.0, 0.6, 0.8])
    r = inner_min(eta, 0, [2.0], ctx_small)
    assert r.value == energy_value(eta[None, :], np.array([2.0]), ctx_small)
    assert inner_min(eta, 0, [1.0], None).value == 0.0


def test_inner_min_round_triple_is_rotation_invariant():
    # equilateral triangle on a great circle, squared chords 3
    expected = -3 * math.log(3.0) / (4 * math.pi)
    for eta in fibonacci_lattice(4):
        r = inner_min(eta, 1, [1, 1, 1], None, starts=4, seed=2)
        assert r.value == pytest.approx(expected, abs=1e-8)


def test_inner_min_is_a_lower_bound(ctx_small, rng):
    g = np.array([1.0, 2.0, 1.5])
    eta = np.array([0.0, 0.0, 1.0])
    r = inner_min(eta, 2, g, ctx_small, starts=4)
    for _ in range(50):
        z = random_points(rng, 3)
        z[2] = eta
        assert energy_value(z, g, ctx_small) >= r.value - 1e-12


def test_inner_min_guards():
    with pytest.raises(ValueError):
        inner_min([0, 0, 1], 0, [1, -1])
    with pytest.raises(IndexError):
        inner_min([0, 0, 1], 2, [1, 1])


def test_round_dipole_band_is_degenerate():
    rep = c1_c2(0, [1, 1], None, grid_size=8, starts=2)
    assert rep.c1 == pytest.approx(DIPOLE_LEVEL, abs=1e-8)
    assert rep.c2 == pytest.approx(DIPOLE_LEVEL, abs=1e-8)
    assert rep.gap < 1e-8


def test_band_homothety_shift(rho_small):
    g = np.array([1.0, 2.0])
    c = 0.4
    a = c1_c2(1, g, MetricContext.from_factor(rho_small), grid_size=12, starts=3, polish=False)
    b = c1_c2(1, g, MetricContext.from_factor(rho_small.shifted(c)), grid_size=12, starts=3, polish=False)
    shift = float(np.sum(g**2)) * c / (2 * math.pi)
    assert np.allclose(b.node_values - a.node_values, shift, atol=1e-8)
    assert b.c1 - a.c1 == pytest.approx(shift, abs=1e-8)


def test_separation_check(ctx_small):
    g = [1.0, 2.0]
    rep = c1_c2(0, g, ctx_small, grid_size=12, starts=3)
    assert rep.c1 <= rep.c2
    below = separation_check(rep.c1 - 1.0, 0, g, ctx_small, rep)
    assert below is not None and below.vacuous
    assert separation_check(rep.c2 + 1.0, 0, g, ctx_small, rep) is None
    mid = 0.5 * (rep.c1 + rep.c2)
    s = separation_check(mid, 0, g, ctx_small, rep)
    assert s is not None and not s.vacuous and s.inner_value > mid


def test_band_report_serialization(tmp_path):
    rep = c1_c2(0, [1, 1], None, grid_size=5, starts=2, polish=False)
    rep.to_csv(tmp_path / "b.csv", header=["x"])
    lines = (tmp_path / "b.csv").read_text().splitlines()
    assert lines[0] == "# x" and lines[1] == "node,x,y,z,inner_min" and len(lines) == 7
    assert '"c1"' in rep.to_json()
