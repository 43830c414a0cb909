import math

import numpy as np
import pytest

from vortexsphere import spectral
from vortexsphere.contact import (
    ALPHA_MIN,
    DIPOLE,
    MoserMap,
    antipodal_image_range,
    chart_components,
    deformed_contact_check,
    flow_horizon,
    level_colatitude,
    lie_derivative_check,
    liouville_field,
    liouville_field_batch,
    meridian_field,
    meridian_representative,
    random_level_states,
    rotation_to,
    transversality,
    volume_matched,
)
from vortexsphere.hamiltonian import MetricContext, energy_value, grad
from vortexsphere.sphere import random_rotation


def dipole_energy(z):
    """Round identical dipole energy straight from the squared chord."""
    return -math.log(float(np.sum((z[0] - z[1]) ** 2))) / (4 * math.pi)


def test_representative_at_zero():
    assert level_colatitude(0.0) == pytest.approx(math.pi / 6, abs=1e-15)
    rep = meridian_representative(0.0).points
    assert dipole_energy(rep) == pytest.approx(0.0, abs=1e-15)
    assert np.allclose(rep[0], [0.5, 0.0, math.sqrt(3) / 2])


def test_representative_sweep_round_trips():
    for alpha in np.linspace(ALPHA_MIN + 1e-3, 2.0, 100):
        rep = meridian_representative(alpha).points
        assert dipole_energy(rep) == pytest.approx(alpha, abs=1e-10 * max(1.0, abs(alpha)))
        assert np.allclose(rep[0] * [-1, 1, 1], rep[1])


def test_representative_near_minimum_and_domain():
    rep = meridian_representative(ALPHA_MIN + 1e-9).points
    assert np.linalg.norm(rep[0] - rep[1]) > 2 - 1e-6
    with pytest.raises(ValueError):
        level_colatitude(ALPHA_MIN)
    with pytest.raises(ValueError):
        level_colatitude(-1.0)


def test_rotation_to_and_guards(rng):
    rep = meridian_representative(0.4).points
    R = random_rotation(rng)
    z = rep @ R.T
    assert np.allclose(rotation_to(z), R, atol=1e-12)
    with pytest.raises(ValueError):
        rotation_to([[0, 0, 1], [0, 0, -1]])
    with pytest.raises(ValueError):
        rotation_to([[0, 0, 1], [0, 0, 1]])


def test_chart_components_at_representative():
    for alpha in (0.0, 0.3, 1.0):
        rep = meridian_representative(alpha).points
        c = math.cos(level_colatitude(alpha))
        comps = chart_components(rep, meridian_field(rep))
        assert np.allclose(comps, [c, 0.0, c, 0.0], atol=1e-14)
        assert np.allclose(liouville_field(rep), meridian_field(rep), atol=1e-14)


def test_liouville_field_equivariant(rng):
    W = random_level_states(0.2, 10, rng)
    V = liouville_field_batch(W)
    for w, v in zip(W, V):
        assert np.allclose(liouville_field(w), v, atol=1e-12)
        R = random_rotation(rng)
        assert np.allclose(liouville_field(w @ R.T), v @ R.T, atol=1e-10)
    with pytest.raises(ValueError):
        liouville_field(np.eye(3))


def test_margin_at_representative_closed_form():
    # both vortices move by p d/dp, so dH(v) = cot(theta)^2 / (2 pi)
    for alpha in (0.0, 0.2, 0.5):
        rep = meridian_representative(alpha).points
        t = level_colatitude(alpha)
        m = float(np.sum(grad(rep, DIPOLE) * meridian_field(rep)))
        assert m == pytest.approx(1 / (math.tan(t) ** 2 * 2 * math.pi), rel=1e-12)


@pytest.mark.parametrize("alpha", [0.0, 0.2, 0.5])
def test_round_transversality(alpha):
    r = transversality(alpha, samples=1000)
    assert r.passed and r.min_margin > 0
    t = level_colatitude(alpha)
    assert r.min_margin == pytest.approx(1 / (math.tan(t) ** 2 * 2 * math.pi), rel=1e-9)


def test_flow_horizon_values():
    assert flow_horizon(0.0) == pytest.approx(-math.log(math.cos(math.pi / 6)), rel=1e-14)
    assert flow_horizon(0.3) < 1e-2 < flow_horizon(0.0)


def test_lie_derivative_and_control():
    r = lie_derivative_check(0.0, samples=8)
    assert len(r.valid_rows()) == 3
    for row in r.rows:
        assert row.expected == pytest.approx(math.expm1(row.t) / row.t, rel=1e-15)
        assert row.rel_dev < 5e-6
    ctl = lie_derivative_check(0.0, samples=8, control=True)
    for row in ctl.rows:
        assert abs(row.lie_norm) < 1e-5


def test_lie_rotated_matches_meridian():
    a = lie_derivative_check(0.1, samples=4, rotate_states=True)
    b = lie_derivative_check(0.1, samples=4, rotate_states=False)
    for ra, rb in zip(a.rows, b.rows):
        assert ra.lie_norm == pytest.approx(rb.lie_norm, abs=5e-6)


def test_lie_rows_beyond_horizon():
    r = lie_derivative_check(0.3, samples=4)
    first = r.rows[0]
    assert first.t == 1e-2 and first.beyond_horizon and math.isnan(first.rel_dev)
    assert [row.t for row in r.valid_rows()] == [1e-3, 1e-4]
    assert "rows" in r.to_dict()


def test_moser_map_area_and_inverse(rng):
    rho = volume_matched(spectral.random_factor(3, 0.1, np.random.default_rng(5)))
    assert spectral.volume(rho) == pytest.approx(4 * math.pi, abs=1e-10)
    m = MoserMap.build(rho)
    p = rng.standard_normal((50, 3))
    p /= np.linalg.norm(p, axis=1, keepdims=True)
    assert m.area_residual(p) < 1e-6
    assert np.allclose(m.inverse(m(p)), p, atol=1e-8)
    with pytest.raises(ValueError):
        MoserMap.build(rho.shifted(0.1))


def test_deformed_check_reduces_to_round():
    zero = spectral.ConformalFactor.from_triples([(0, 0, 0.0)])
    d = deformed_contact_check(zero, 0.3, samples=50, range_points=200)
    assert d.status == "pass" and d.found == 50 and d.hypothesis_holds
    assert d.moser_residual < 1e-8
    assert d.antipodal_range[0] == pytest.approx(ALPHA_MIN, abs=1e-12)
    assert d.min_normalized > 0.999


def test_deformed_check_flags_antipodal_levels():
    rho = spectral.random_factor(3, 0.2, np.random.default_rng(3))
    ctx = MetricContext.from_factor(volume_matched(rho))
    lo, hi = antipodal_image_range(MoserMap.build(volume_matched(rho)), ctx, 300)
    assert lo < hi
    d = deformed_contact_check(rho, 0.5 * (lo + hi), samples=20, range_points=300)
    assert d.status == "hypothesis violated" and not d.hypothesis_holds


def test_deformed_samples_lie_on_level(ctx_small):
    from vortexsphere.contact import _level_samples

    W = _level_samples(ctx_small, 0.2, 30, np.random.default_rng(0))
    assert W.shape == (30, 2, 3)
    assert np.allclose(energy_value(W, DIPOLE, ctx_small), 0.2, atol=1e-12)
