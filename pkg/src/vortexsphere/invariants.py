"""Vorticity arithmetic: commensurability, minimal action, thinness and (P3).

Commensurability is undecidable in floating point. Each ratio to the first
value is expanded in continued fractions until a convergent reproduces it to
relative tolerance ``tol``. The convergent is accepted only if its denominator
``q`` stays below ``10**6`` and the match is far better than the ``1/q**2``
that any real number admits (``q**2 * tol <= 1e-3``); otherwise the values are
declared incommensurable. Passing :class:`fractions.Fraction` (or ints) uses
exact arithmetic throughout.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from numbers import Rational
from typing import Sequence

import numpy as np

from . import spectral
from .hamiltonian import MetricContext, _ctx
from .sphere import as_gammas

MAX_DENOMINATOR = 10**6
SIGNIFICANCE = 1e-3
DEFAULT_TOL = 1e-9

THIN_WARNING = "thinness is not an open condition: arbitrarily small perturbations of the vorticities can change it"


@dataclass(frozen=True)
class CommensurabilityResult:
    commensurable: bool
    beta: float | Fraction | None
    l: tuple[int, ...]
    tol: float


def _is_exact(values) -> bool:
    return all(isinstance(v, Rational) for v in values)


def reconstruct(x: float, tol: float) -> Fraction | None:
    """Smallest convergent of ``x`` within relative ``tol``, if it is significant."""
    h0, h1 = 0, 1
    k0, k1 = 1, 0
    y = x
    while True:
        a = math.floor(y)
        h0, h1 = h1, a * h1 + h0
        k0, k1 = k1, a * k1 + k0
        if k1 > MAX_DENOMINATOR:
            return None
        if abs(h1 / k1 - x) <= tol * abs(x):
            if k1 * k1 * tol > SIGNIFICANCE:
                return None
            return Fraction(h1, k1)
        frac = y - a
        if frac <= 0.0:
            return None
        y = 1.0 / frac


def commensurability(values: Sequence[float] | Sequence[Fraction], tol: float = DEFAULT_TOL) -> CommensurabilityResult:
    """Find ``beta`` and coprime positive integers ``l`` with ``values = beta * l``."""
    vals = list(values)
    if not vals:
        raise ValueError("need at least one value")
    if any(v <= 0 for v in vals):
        raise ValueError("values must be positive")
    exact = _is_exact(vals)
    if tol == 0 and not exact:
        raise ValueError("tol = 0 requires exact rational inputs")
    if exact:
        ratios = [Fraction(v) / Fraction(vals[0]) for v in vals]
    else:
        ratios = []
        for v in vals:
            r = reconstruct(float(v) / float(vals[0]), tol)
            if r is None:
                return CommensurabilityResult(False, None, (), tol)
            ratios.append(r)
    den = reduce(math.lcm, (r.denominator for r in ratios), 1)
    ints = [r.numerator * (den // r.denominator) for r in ratios]
    h = reduce(math.gcd, ints)
    l = tuple(i // h for i in ints)
    if exact:
        beta = Fraction(vals[0]) / l[0]
    else:
        # least-squares scale over all entries
        beta = float(np.dot(np.asarray(vals, float), l) / np.dot(l, l))
    return CommensurabilityResult(True, beta, l, tol)


def kappa(values, tol: float = DEFAULT_TOL):
    """``beta * gcd(l)`` for commensurable values, 0 otherwise.

    ``l`` is already in lowest terms, so this is ``beta``. The incommensurable
    case returns ``0`` (the Diophantine collapse of the minimal action).
    """
    r = commensurability(values, tol)
    if not r.commensurable:
        return 0
    return r.beta * math.gcd(*r.l)


def minimal_action(values, area, tol: float = DEFAULT_TOL):
    """Minimal positive action of a product of spheres weighted by ``values``."""
    if not area > 0:
        raise ValueError("area must be positive")
    return kappa(values, tol) * area


def _positive(gamma) -> list:
    vals = list(gamma) if not hasattr(gamma, "gammas") else list(gamma.gammas)
    if any(v <= 0 for v in vals):
        raise ValueError("thinness is only defined for positive vorticities")
    return vals


def is_thin(k: int, gamma, tol: float = DEFAULT_TOL) -> bool:
    """Whether vortex ``k`` (0-based) is thin: ``G_k <= kappa(remaining)``."""
    vals = _positive(gamma)
    if not 0 <= k < len(vals):
        raise IndexError(k)
    rest = vals[:k] + vals[k + 1 :]
    if not rest:
        # no other factor: the remaining minimal action is infinite
        return True
    kap = kappa(rest, tol)
    if kap == 0:
        return False
    if _is_exact(vals):
        return Fraction(vals[k]) <= kap
    return float(vals[k]) <= float(kap) * (1.0 + tol)


def thin_table(gamma, tol: float = DEFAULT_TOL) -> list[bool]:
    return [is_thin(k, gamma, tol) for k in range(len(_positive(gamma)))]


def beta_values(gamma, volume: float) -> tuple[np.ndarray, float]:
    """``beta_i = -4 n pi mean(G) / (G_i V)`` and the mean vorticity."""
    if not volume > 0:
        raise ValueError("volume must be positive")
    g = as_gammas(gamma)
    n = g.size
    gbar = float(g.mean())
    return -4.0 * n * math.pi * gbar / (g * volume), gbar


@dataclass(frozen=True)
class P3Report:
    status: str  # "pass", "fail" or "inconclusive"
    intersection: tuple[float, ...]
    beta: tuple[float, ...]
    gamma_bar: float
    eigenvalues: tuple[float, ...]
    covered_up_to: float

    @property
    def passed(self) -> bool:
        return self.status == "pass"


def check_P3(gamma, ctx: MetricContext | None = None, k_eigs: int = 25, L_solve: int | None = None, match_tol: float = 1e-6) -> P3Report:
    """Whether the beta values avoid the Laplace spectrum (apart from 0)."""
    ctx = _ctx(ctx)
    beta, gbar = beta_values(gamma, ctx.volume)
    if L_solve is None:
        L_solve = max(math.isqrt(k_eigs - 1) + 4, ctx.rho.L + 4)
    sp = spectral.laplace_spectrum(ctx.rho, k_eigs, L_solve)
    lam = np.asarray(sp.eigenvalues)
    hits = sorted({float(b) for b in beta if np.min(np.abs(lam - b)) <= match_tol * max(1.0, abs(b))})
    top = float(lam[-1])
    if hits and not (len(hits) == 1 and abs(hits[0]) <= match_tol):
        status = "fail"
    elif np.any(beta > top + match_tol):
        status = "inconclusive"
    else:
        status = "pass"
    return P3Report(status, tuple(hits), tuple(beta.tolist()), gbar, tuple(lam.tolist()), top)
