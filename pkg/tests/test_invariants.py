import math
from fractions import Fraction
from functools import reduce

import numpy as np
import pytest
from hypothesis import given, strategies as st

from vortexsphere import spectral
from vortexsphere.hamiltonian import MetricContext
from vortexsphere.invariants import (
    beta_values,
    check_P3,
    commensurability,
    is_thin,
    kappa,
    minimal_action,
    reconstruct,
    thin_table,
)

SQRT2 = math.sqrt(2.0)


def fraction_gcd(values):
    """gcd of positive rationals: gcd(a/b, c/d) = gcd(a d, c b) / (b d)."""

    def g2(x, y):
        return Fraction(math.gcd(x.numerator * y.denominator, y.numerator * x.denominator), x.denominator * y.denominator)

    return reduce(g2, (Fraction(v) for v in values))


def direct_thin(k, values):
    rest = values[:k] + values[k + 1 :]
    return not rest or Fraction(values[k]) <= fraction_gcd(rest)


def test_commensurability_examples():
    r = commensurability([2, 4, 6])
    assert r.commensurable and r.beta == 2 and r.l == (1, 2, 3)
    assert not commensurability([1.0, SQRT2], tol=1e-12).commensurable
    r = commensurability([0.5, 0.75])
    assert r.commensurable and r.beta == pytest.approx(0.25, abs=1e-15) and r.l == (2, 3)
    for v in ([2.0, 4.0, 6.0], [0.5, 0.75]):
        r = commensurability(v)
        assert all(abs(x - r.beta * li) <= r.tol * x for x, li in zip(v, r.l))


def test_commensurability_guards():
    # a Dirichlet convergent of sqrt 2 is not accepted as a rational relation
    assert not commensurability([1.0, SQRT2], tol=1e-9).commensurable
    assert reconstruct(1.5, 1e-9) == Fraction(3, 2)
    with pytest.raises(ValueError):
        commensurability([1.0, 2.0], tol=0)
    assert commensurability([Fraction(1, 3), Fraction(1, 2)], tol=0).l == (2, 3)
    with pytest.raises(ValueError):
        commensurability([1.0, -2.0])


def test_kappa_examples():
    assert kappa([2, 4, 6]) == 2
    assert kappa([3, 6]) == 3
    assert kappa([1.0, SQRT2]) == 0


def test_minimal_action_examples():
    assert minimal_action([2, 4, 6], 4 * math.pi) == pytest.approx(8 * math.pi, abs=1e-12)
    assert minimal_action([1], 4 * math.pi) == pytest.approx(4 * math.pi, abs=1e-12)
    assert minimal_action([1.0, SQRT2], 3.0) == 0
    with pytest.raises(ValueError):
        minimal_action([1], 0.0)


def test_minimal_action_exact_against_gcd_oracle(rng):
    for _ in range(20):
        n = int(rng.integers(1, 5))
        vals = [Fraction(int(rng.integers(1, 40)), int(rng.integers(1, 12))) for _ in range(n)]
        assert minimal_action(vals, Fraction(4)) == fraction_gcd(vals) * 4


@given(st.lists(st.tuples(st.integers(1, 60), st.integers(1, 20)), min_size=1, max_size=5), st.integers(1, 50))
def test_kappa_scale_equivariant(pairs, c):
    vals = [Fraction(a, b) for a, b in pairs]
    assert kappa([c * v for v in vals]) == c * kappa(vals)
    assert thin_table([c * v for v in vals]) == thin_table(vals)


@given(st.lists(st.tuples(st.integers(1, 30), st.integers(1, 6)), min_size=2, max_size=5))
def test_thin_matches_definition(pairs):
    vals = [Fraction(a, b) for a, b in pairs]
    assert thin_table(vals) == [direct_thin(k, vals) for k in range(len(vals))]
    floats = [float(v) for v in vals]
    assert thin_table(floats) == [direct_thin(k, vals) for k in range(len(vals))]


def test_thin_examples():
    assert thin_table([1, 1, 1]) == [True, True, True]
    assert is_thin(0, [1, 2, 2]) and not is_thin(1, [1, 2, 2])
    # the single remaining value sqrt 2 is its own scale, and 1 <= sqrt 2
    assert thin_table([1.0, SQRT2]) == [True, False]
    with pytest.raises(ValueError):
        is_thin(0, [1, -1])


def test_beta_values_examples():
    b, gbar = beta_values([1, 1], 4 * math.pi)
    assert np.allclose(b, [-2, -2], atol=1e-15) and gbar == 1.0
    b, gbar = beta_values([1, -1], 4 * math.pi)
    assert np.all(b == 0) and gbar == 0
    b, _ = beta_values([1, 2, 3], 4 * math.pi)
    assert np.allclose(b, [-6, -3, -2], atol=1e-14)


def test_p3_examples():
    assert check_P3([1, 1], None, 9).status == "pass"
    r = check_P3([1, -1], None, 9)
    assert r.status == "pass" and r.intersection == (0.0,)
    # beta_1 = 2 lies on the round spectrum
    r = check_P3([1, -3], None, 9)
    assert r.status == "fail" and r.intersection == (pytest.approx(2.0),)
    assert check_P3([1, -100], None, 9).status == "inconclusive"


@pytest.mark.parametrize("gam", [[1, -3], [1, 1], [1, -1], [2, -1, 0.5]])
def test_p3_homothety_invariant(gam):
    rho = spectral.random_factor(2, 0.05, np.random.default_rng(1)).scaled(0.0)
    base = check_P3(gam, MetricContext.from_factor(rho), 9).status
    for c in (0.5, 2.0):
        ctx = MetricContext.from_factor(rho.shifted(0.5 * math.log(c)))
        assert check_P3(gam, ctx, 9).status == base
