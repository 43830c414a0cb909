import itertools

import numpy as np
import pytest

from vortexsphere import spectral
from vortexsphere.dynamics import IntegratorSettings, Trajectory, integrate
from vortexsphere.equilibria import (
    _label_perms,
    classify,
    cluster_monitor,
    cluster_value,
    cluster_vorticity_sums,
    find_fixed_points,
    is_nondegenerate,
    newton,
    same_configuration,
)
from vortexsphere.hamiltonian import MetricContext, grad
from vortexsphere.sphere import random_rotation


@pytest.fixture(scope="module")
def round_dipole():
    return find_fixed_points([1, 1], None, starts=12, seed=1)


def test_round_dipole_fixed_points_are_antipodal(round_dipole):
    assert len(round_dipole) >= 1
    for r in round_dipole:
        assert np.linalg.norm(r.z.points[0] - r.z.points[1]) == pytest.approx(2.0, abs=1e-8)
        assert r.kernel_dim == 2
        assert r.kernel_dim + r.morse_index <= 4


def test_reports_reverify(round_dipole):
    for r in round_dipole:
        assert np.linalg.norm(grad(r.z.points, [1, 1], frames=True)) <= 1e-10


def test_round_fixed_points_rotation_closed(round_dipole, rng):
    z = round_dipole[0].z.points @ random_rotation(rng).T
    _, iters, ok = newton(z, [1, 1])
    assert ok and iters <= 2


def test_single_vortex_round_every_point_fixed():
    search = find_fixed_points([1.5], None, starts=4, seed=0)
    assert search.converged == 4
    for r in search:
        assert r.grad_norm == 0.0


def test_deformed_dipole_is_morse():
    ctx = MetricContext.from_factor(spectral.random_factor(3, 0.1, np.random.default_rng(11)))
    search = find_fixed_points([1, 1], ctx, starts=12, seed=2)
    assert len(search) >= 2
    for r in search:
        assert r.kernel_dim == 0


def test_dedup_is_permutation_aware():
    a = np.array([[0, 0, 1.0], [1.0, 0, 0], [0, 1.0, 0]])
    b = a[[1, 0, 2]]
    assert same_configuration(a, b, _label_perms(np.array([2.0, 2.0, 1.0])), 1e-12)
    assert not same_configuration(a, b, _label_perms(np.array([2.0, 3.0, 1.0])), 1e-12)


def test_results_sorted_and_counted(round_dipole):
    e = [r.energy for r in round_dipole]
    assert e == sorted(e)
    assert round_dipole.converged + round_dipole.dropped == round_dipole.starts
    assert sum(r.hits for r in round_dipole) == round_dipole.converged


def _brute_cluster(g, idx):
    return sum(g[i] * g[j] for i in idx for j in idx if i != j)


def test_cluster_sums_examples():
    assert [c.value for c in cluster_vorticity_sums([1, 1])] == [2.0]
    assert [c.value for c in cluster_vorticity_sums([1, -1])] == [-2.0]
    vals = {c.indices: c.value for c in cluster_vorticity_sums([1, 2, -2])}
    assert vals == {(1, 2): -8.0, (0, 1): 4.0, (0, 2): -4.0, (0, 1, 2): -8.0}
    assert is_nondegenerate([1, 2, -2])
    assert not is_nondegenerate([1, 1, -0.5])  # whole set: 1.5**2 - 2.25 = 0


def test_cluster_sums_match_brute_force(rng):
    g = rng.integers(-5, 6, 6).astype(float)
    g[g == 0] = 1.0
    for c in cluster_vorticity_sums(g):
        assert c.value == _brute_cluster(g, c.indices)
    assert len(cluster_vorticity_sums(g)) == 2**6 - 6 - 1
    with pytest.raises(ValueError):
        cluster_vorticity_sums(np.ones(21))


def test_cluster_monitor_examples():
    z = np.array([[0, 0, 1.0], [0, 0, -1.0]])
    tr = integrate(z, [1, 1], None, IntegratorSettings(dt=1e-2), 1.0)
    assert cluster_monitor(tr, [1, 1], 0.1) == []
    near = np.array([[0, 0, 1.0], [0.01, 0, 1.0], [1.0, 0, 0]])
    near /= np.linalg.norm(near, axis=1, keepdims=True)
    tr = Trajectory(np.array([0.0]), near[None], np.zeros(1), None)
    ev = cluster_monitor(tr, [1, 2, 3], 0.1)
    assert len(ev) == 1 and ev[0].time == 0.0 and ev[0].indices == (0, 1) and ev[0].value == 4.0


def test_cluster_events_not_stationary():
    ctx = MetricContext.from_factor(spectral.random_factor(2, 0.1, np.random.default_rng(5)))
    g = [1.0, 1.0, 1.0]
    z = np.array([[0, 0, 1.0], [np.sin(0.15), 0, np.cos(0.15)], [0, 1.0, 0]])
    tr = integrate(z, g, ctx, IntegratorSettings(dt=1e-2), 5.0)
    events = cluster_monitor(tr, g, 0.2)
    assert events
    for e in events:
        k = int(np.argmin(np.abs(tr.times - e.time)))
        assert np.linalg.norm(grad(tr.states[k], g, ctx)) > 1e-8
