"""Energy, gradient and Hessian of the n-vortex Hamiltonian on a conformal sphere.

For ``g = exp(2 rho) g0`` the energy is assembled from the round-sphere
interaction and the conformal-change correction::

    H_g(z) = -1/(4 pi) sum_{i<j} G_i G_j log |z_i - z_j|^2
             + 1/(2 pi) sum_i G_i^2 rho(z_i)
             - (sum_i G_i) / V_g * sum_i G_i u(z_i),      u = Lap_0^{-1} exp(2 rho)

with ``u`` zero-mean and ``exp(2 rho)`` projected onto harmonics of degree
``<= 2 L + 8``. No additive constant is included in the interaction.

Gradients are returned as ambient 3-vectors tangent to each vortex position
(the Euclidean pairing with a tangent displacement is the directional
derivative). Hessians are in the tangent-frame coordinates of
:func:`vortexsphere.sphere.tangent_frames`, using the great-circle chart
``(a_i, b_i) -> exp_{z_i}(a_i e1_i + b_i e2_i)``; away from critical points the
result depends on this chart.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import ArrayLike

from . import spectral
from .sphere import (
    COLLISION_EPS,
    Configuration,
    FloatArray,
    VorticityVector,
    as_gammas,
    as_points,
    normalize,
    project_tangent,
    tangent_frames,
)
from .spectral import ConformalFactor

INV_2PI = 1.0 / (2.0 * math.pi)
INV_4PI = 1.0 / (4.0 * math.pi)


class CollisionError(ValueError):
    """Two vortices coincide (or are closer than the collision threshold)."""


@dataclass(frozen=True, eq=False)
class MetricContext:
    """Cached spectral data for one conformal factor.

    Build with :meth:`from_factor`; instances are immutable, so a changed
    ``rho`` always means a new context.
    """

    rho: ConformalFactor
    L_aux: int
    volume: float
    rho_aux: FloatArray = field(repr=False)
    u_coeffs: FloatArray = field(repr=False)

    @classmethod
    def from_factor(cls, rho: ConformalFactor | None = None, L_aux: int | None = None) -> MetricContext:
        rho = ConformalFactor.zero() if rho is None else rho
        L_aux = spectral.aux_band(rho) if L_aux is None else int(L_aux)
        if L_aux < rho.L:
            raise ValueError("auxiliary band must not be below the band of rho")
        rho_aux = spectral.pad(rho.coeffs, L_aux)
        if rho.is_constant:
            # exp(2c) is constant: its zero-mean part vanishes identically
            u = np.zeros_like(rho_aux)
            vol = spectral.volume(rho)
        else:
            e2 = spectral.exp2rho_coeffs(rho, L_aux)
            u = spectral.inv_laplacian_round(e2)
            vol = spectral.volume(rho, spectral.gauss_grid(2 * L_aux))
        rho_aux.setflags(write=False)
        u.setflags(write=False)
        return cls(rho, L_aux, float(vol), rho_aux, u)

    @property
    def is_round(self) -> bool:
        return self.rho.is_zero

    @property
    def is_homothetic(self) -> bool:
        return self.rho.is_constant

    def self_coeffs(self, gammas: ArrayLike) -> FloatArray:
        """Per-vortex coefficients of the one-body energy, shape ``(n, K)``."""
        g = np.asarray(gammas, dtype=float)
        a = g * g * INV_2PI
        b = -(g.sum() / self.volume) * g
        return a[:, None] * self.rho_aux[None, :] + b[:, None] * self.u_coeffs[None, :]

    def density(self, p: ArrayLike):
        """Area density ``exp(2 rho)`` relative to the round form."""
        return np.exp(2.0 * spectral.evaluate(self.rho, p))


_ROUND: MetricContext | None = None


def round_context() -> MetricContext:
    global _ROUND
    if _ROUND is None:
        _ROUND = MetricContext.from_factor(ConformalFactor.zero())
    return _ROUND


def _ctx(ctx: MetricContext | ConformalFactor | None) -> MetricContext:
    if ctx is None:
        return round_context()
    if isinstance(ctx, ConformalFactor):
        return MetricContext.from_factor(ctx)
    return ctx


@dataclass(frozen=True)
class EnergyReport:
    H: float
    interaction: float
    self: float


def _prepare(z, gamma) -> tuple[FloatArray, FloatArray]:
    p = as_points(z)
    g = as_gammas(gamma)
    if p.shape[-2] != g.size:
        raise ValueError(f"{p.shape[-2]} positions but {g.size} vorticities")
    return p, g


def _pair_data(p: FloatArray, check: bool = True):
    """Difference vectors and squared chords, with the diagonal masked to 1."""
    n = p.shape[-2]
    d = p[..., :, None, :] - p[..., None, :, :]
    l2 = np.einsum("...k,...k->...", d, d)
    eye = np.eye(n, dtype=bool)
    l2 = np.where(eye, 1.0, l2)
    if check and n > 1 and np.min(l2) < COLLISION_EPS**2:
        raise CollisionError("configuration has a collision")
    return d, l2, eye


def interaction_terms(z, gamma) -> FloatArray:
    """Round-sphere interaction energy for (batched) configurations."""
    p, g = _prepare(z, gamma)
    _, l2, eye = _pair_data(p)
    gg = np.where(eye, 0.0, g[:, None] * g[None, :])
    return -INV_4PI * 0.5 * np.sum(gg * np.log(l2), axis=(-2, -1))


def energy_round(z: Configuration | ArrayLike, gamma: VorticityVector | ArrayLike) -> float:
    """Round-sphere energy with chord lengths and no additive constant."""
    return float(interaction_terms(z, gamma))


def self_terms(z, gamma, ctx: MetricContext | None = None) -> FloatArray:
    """Conformal (one-body) part of the energy; zero on the round sphere."""
    p, g = _prepare(z, gamma)
    ctx = _ctx(ctx)
    if ctx.is_round:
        return np.zeros(p.shape[:-2])
    coeffs = ctx.self_coeffs(g)
    val, _, _ = spectral.field_derivatives(coeffs, normalize(p), order=0)
    # val[..., i, f]: field f at vortex i; keep the diagonal i == f
    return np.einsum("...ii->...", val)


def energy(z, gamma, ctx: MetricContext | ConformalFactor | None = None) -> EnergyReport:
    """Energy of a configuration under the metric described by ``ctx``."""
    ctx = _ctx(ctx)
    inter = energy_round(z, gamma)
    s = float(self_terms(z, gamma, ctx))
    return EnergyReport(inter + s, inter, s)


def energy_value(z, gamma, ctx: MetricContext | None = None):
    """Plain (batched) energy values; ``energy`` wraps this for one configuration."""
    return interaction_terms(z, gamma) + self_terms(z, gamma, ctx)


def _ambient_gradient(p: FloatArray, g: FloatArray, ctx: MetricContext, order: int = 1):
    """Ambient gradient of the extended energy, optionally with Hessian blocks."""
    d, l2, eye = _pair_data(p)
    gg = np.where(eye, 0.0, g[:, None] * g[None, :])
    # d/ds_i of -(1/4pi) G_i G_j log|s_i - s_j|^2
    w = -INV_4PI * 2.0 * gg / l2
    G = np.einsum("...ij,...ijk->...ik", w, d)
    H_self = None
    if not ctx.is_round:
        coeffs = ctx.self_coeffs(g)
        n = g.size
        _, fg, fh = spectral.field_derivatives(coeffs, normalize(p), order=order)
        idx = np.arange(n)
        G = G + fg[..., idx, idx, :]
        if order >= 2:
            H_self = fh[..., idx, idx, :, :]
    return G, H_self, (d, l2, gg)


def grad(z, gamma, ctx: MetricContext | ConformalFactor | None = None, frames: bool = False):
    """Gradient of the energy at each vortex.

    Returns tangent 3-vectors of shape ``(..., n, 3)``; with ``frames=True``
    returns the ``2n`` tangent-frame components ``(a_1, b_1, a_2, ...)``.
    """
    p, g = _prepare(z, gamma)
    ctx = _ctx(ctx)
    p = normalize(p)
    G, _, _ = _ambient_gradient(p, g, ctx)
    Gt = project_tangent(p, G)
    if not frames:
        return Gt
    E = tangent_frames(p)
    comps = np.einsum("...ik,...ika->...ia", Gt, E)
    return comps.reshape(*comps.shape[:-2], -1)


def hessian(z, gamma, ctx: MetricContext | ConformalFactor | None = None) -> FloatArray:
    """Second derivatives of the energy in tangent-frame coordinates, ``(2n, 2n)``."""
    p, g = _prepare(z, gamma)
    if p.ndim != 2:
        raise ValueError("hessian expects a single configuration")
    ctx = _ctx(ctx)
    p = normalize(p)
    n = g.size
    G, H_self, (d, l2, gg) = _ambient_gradient(p, g, ctx, order=2)
    # pair blocks: c (2 I / l^2 - 4 d d^T / l^4), c = -G_i G_j / (4 pi)
    c = -INV_4PI * gg
    outer = np.einsum("ijk,ijl->ijkl", d, d)
    A = c[:, :, None, None] * (
        2.0 * np.eye(3)[None, None] / l2[:, :, None, None]
        - 4.0 * outer / (l2 * l2)[:, :, None, None]
    )
    amb = np.zeros((n, n, 3, 3))
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            amb[i, i] += A[i, j]
            amb[i, j] -= A[i, j]
    if H_self is not None:
        for i in range(n):
            amb[i, i] += H_self[i]
    E = tangent_frames(p)  # (n, 3, 2)
    Hf = np.einsum("ika,ijkl,jlb->iajb", E, amb, E)
    radial = np.einsum("ik,ik->i", p, G)
    for i in range(n):
        Hf[i, :, i, :] -= radial[i] * np.eye(2)
    Hf = Hf.reshape(2 * n, 2 * n)
    return 0.5 * (Hf + Hf.T)


def frame_displace(z, delta: ArrayLike) -> FloatArray:
    """Move each vortex along its tangent frame: ``exp_{z_i}(a_i e1 + b_i e2)``."""
    p = normalize(as_points(z))
    E = tangent_frames(p)
    ab = np.asarray(delta, dtype=float).reshape(*p.shape[:-1], 2)
    v = np.einsum("...ika,...ia->...ik", E, ab)
    from .sphere import exp_map

    return exp_map(p, v)
