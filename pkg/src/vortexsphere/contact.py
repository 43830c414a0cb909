"""Liouville field for the identical dipole and contact-type checks.

For two unit vortices on the round sphere the energy depends only on the
chord ``l``: ``H = -log(l) / (2 pi)``. Each level ``alpha`` above the minimum
contains a representative symmetric about the z-axis in the xz-plane,

    z1 = (sin t, 0, cos t),   z2 = (-sin t, 0, cos t),   sin t = exp(-2 pi alpha) / 2,

and every other state on the level is a rotation of it (unique as long as the
pair is not antipodal). In the chart ``p = cos(theta)``, ``q = phi`` the
field at the representative is ``(p, 0, p, 0)``; elsewhere it is the rotated
copy. Its flow expands the product area form at unit exponential rate.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, asdict
from pathlib import Path

import numpy as np

from . import spectral
from .hamiltonian import MetricContext, energy_round, energy_value, grad
from .sphere import (
    Configuration,
    FloatArray,
    as_points,
    exp_map,
    normalize,
    project_tangent,
    random_points,
    random_rotation,
    tangent_frames,
)
from .spectral import ConformalFactor

DIPOLE = np.array([1.0, 1.0])
ALPHA_MIN = -math.log(2.0) / (2.0 * math.pi)


def level_colatitude(alpha: float) -> float:
    """Colatitude of the representative on level ``alpha``."""
    if not alpha > ALPHA_MIN:
        raise ValueError(f"level {alpha} is not above the dipole minimum {ALPHA_MIN}")
    return math.asin(0.5 * math.exp(-2.0 * math.pi * alpha))


def meridian_representative(alpha: float, check: bool = True) -> Configuration:
    """The level-``alpha`` state on the xz-plane, symmetric about the z-axis."""
    t = level_colatitude(alpha)
    z = np.array([[math.sin(t), 0.0, math.cos(t)], [-math.sin(t), 0.0, math.cos(t)]])
    if check and abs(energy_round(z, DIPOLE) - alpha) > 1e-10 * max(1.0, abs(alpha)):
        raise ArithmeticError("representative misses its level")
    return Configuration(z)


def rotation_to(z) -> FloatArray:
    """The rotation carrying the representative of ``z``'s level onto ``z``."""
    w = normalize(as_points(z))
    d = w[0] - w[1]
    s = w[0] + w[1]
    if np.linalg.norm(s) < 1e-12:
        raise ValueError("antipodal pair: the rotation is not unique")
    if np.linalg.norm(d) < 1e-12:
        raise ValueError("coincident pair")
    ex = d / np.linalg.norm(d)
    ez = s / np.linalg.norm(s)
    ey = np.cross(ez, ex)
    return np.column_stack([ex, ey, ez])


def meridian_field(rep) -> FloatArray:
    """The field ``p d/dp`` on each vortex, as ambient vectors."""
    p = as_points(rep)
    out = np.empty_like(p)
    for i, s in enumerate(p):
        st = math.hypot(s[0], s[1])
        pc = s[2]
        out[i] = pc * np.array([-pc * s[0] / st, -pc * s[1] / st, st]) / st
    return out


def liouville_field(z) -> FloatArray:
    """Liouville vector field at a non-antipodal identical-dipole state."""
    w = normalize(as_points(z))
    if w.shape != (2, 3):
        raise ValueError("the construction is for two vortices")
    alpha = energy_round(w, DIPOLE)
    R = rotation_to(w)
    rep = meridian_representative(alpha, check=False)
    return meridian_field(rep.points) @ R.T


def liouville_field_batch(W: FloatArray) -> FloatArray:
    """Vectorized :func:`liouville_field` for states of shape ``(N, 2, 3)``."""
    W = normalize(np.asarray(W, dtype=float))
    d = W[:, 0] - W[:, 1]
    s = W[:, 0] + W[:, 1]
    dn = np.linalg.norm(d, axis=-1)
    sn = np.linalg.norm(s, axis=-1)
    if np.any(sn < 1e-12) or np.any(dn < 1e-12):
        raise ValueError("antipodal or coincident pair")
    # half chord = sin(t), |s| / 2 = cos(t)
    st = dn / 2.0
    ct = sn / 2.0
    ex = d / dn[:, None]
    ez = s / sn[:, None]
    # at the representative: v1 = ct (-ct, 0, st)/st * ... expressed in (ex, ez)
    a = -ct * ct / st
    b = ct
    v1 = a[:, None] * ex + b[:, None] * ez
    v2 = -a[:, None] * ex + b[:, None] * ez
    return np.stack([v1, v2], axis=1)


def chart_components(z, v) -> FloatArray:
    """``(dp, dq)`` per vortex in the chart ``p = cos(theta)``, ``q = phi``."""
    p = as_points(z)
    v = np.asarray(v, dtype=float)
    rho2 = p[..., 0] ** 2 + p[..., 1] ** 2
    dp = v[..., 2]
    dq = (p[..., 0] * v[..., 1] - p[..., 1] * v[..., 0]) / rho2
    return np.stack([dp, dq], axis=-1).reshape(*p.shape[:-2], -1)


def omega(z, a, b, density=None) -> FloatArray:
    """Product area form ``sum_i c_i z_i . (a_i x b_i)``; ``c_i = 1`` by default."""
    z = np.asarray(z, dtype=float)
    terms = np.einsum("...ik,...ik->...i", z, np.cross(a, b))
    if density is not None:
        terms = terms * density
    return terms.sum(axis=-1)


def random_level_states(alpha: float, count: int, rng: np.random.Generator) -> FloatArray:
    rep = meridian_representative(alpha).points
    return np.array([rep @ random_rotation(rng).T for _ in range(count)])


@dataclass
class TransversalityReport:
    alpha: float
    samples: int
    min_margin: float
    max_margin: float
    min_normalized: float

    @property
    def passed(self) -> bool:
        return self.min_margin > 0.0


def transversality(alpha: float, samples: int = 1000, seed: int = 0) -> TransversalityReport:
    """``dH(v)`` over random states of the level (positive means transverse)."""
    rng = np.random.default_rng(seed)
    W = random_level_states(alpha, samples, rng)
    V = liouville_field_batch(W)
    G = grad(W, DIPOLE)
    m = np.einsum("nik,nik->n", G, V)
    norm = np.linalg.norm(G.reshape(samples, -1), axis=1) * np.linalg.norm(V.reshape(samples, -1), axis=1)
    return TransversalityReport(alpha, samples, float(m.min()), float(m.max()), float(np.min(m / norm)))


def _rk4_flow(field_fn, W: FloatArray, t: float, steps: int) -> FloatArray:
    h = t / steps
    for _ in range(steps):
        k1 = field_fn(W)
        # the fields normalize their input, so stages off the sphere are consistent
        k2 = field_fn(W + 0.5 * h * k1)
        k3 = field_fn(W + 0.5 * h * k2)
        k4 = field_fn(W + h * k3)
        W = normalize(W + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
    return W


def _rotation_field(W: FloatArray) -> FloatArray:
    W = normalize(W)
    # infinitesimal rotation about a fixed tilted axis: an isometry, so it preserves the area form
    axis = normalize(np.array([0.3, -0.5, 0.8]))
    return np.cross(axis, W)


def flow_horizon(alpha: float) -> float:
    """Existence time of the forward flow on level ``alpha``.

    The flow keeps the midpoint axis fixed and moves both vortices towards it
    with ``cos(theta)`` growing like ``exp(t)``; they meet at ``t = -log cos(theta)``.
    """
    return -math.log(math.cos(level_colatitude(alpha)))


@dataclass
class LieRow:
    t: float
    ratio_min: float  # (phi_t^* Omega - Omega)(a, b) / (t Omega(a, b)) over nondegenerate bivectors
    ratio_max: float
    expected: float  # (exp(t) - 1) / t for the Liouville field, 0 for the control
    rel_dev: float  # max |ratio / expected - 1|; nan for the control
    lie_norm: float  # max |(phi_t^* Omega - Omega)(a, b)| / t over basis bivectors
    beyond_horizon: bool = False


@dataclass
class LieReport:
    alpha: float
    samples: int
    control: bool
    horizon: float
    rows: list[LieRow] = field(default_factory=list)

    def valid_rows(self) -> list[LieRow]:
        return [r for r in self.rows if not r.beyond_horizon]

    def to_dict(self) -> dict:
        return {
            "alpha": self.alpha,
            "samples": self.samples,
            "control": self.control,
            "horizon": self.horizon,
            "rows": [asdict(r) for r in self.rows],
        }


def lie_derivative_check(
    alpha: float,
    samples: int = 20,
    t_steps=(1e-2, 1e-3, 1e-4),
    seed: int = 0,
    control: bool = False,
    rotate_states: bool = True,
    fd_eps: float = 1e-5,
    max_step: float = 2.5e-4,
) -> LieReport:
    """Finite-time estimate of the Lie derivative of the area form along the field.

    For each state and each pair of tangent-frame vectors, ``Dphi_t`` is
    obtained by central differences of an RK4 flow and
    ``(phi_t^* Omega - Omega) / t`` is compared with ``Omega``. With
    ``control=True`` a rotation field is used instead, whose Lie derivative
    vanishes. Times at or past :func:`flow_horizon` are reported with
    ``beyond_horizon=True`` and nan entries.
    """
    rng = np.random.default_rng(seed)
    if rotate_states:
        W = random_level_states(alpha, samples, rng)
    else:
        W = np.repeat(meridian_representative(alpha).points[None], samples, axis=0)
    fld = _rotation_field if control else liouville_field_batch
    horizon = math.inf if control else flow_horizon(alpha)
    E = tangent_frames(W)  # (N, 2, 3, 2)
    basis = []
    for i in range(2):
        for a in range(2):
            v = np.zeros_like(W)
            v[:, i] = E[:, i, :, a]
            basis.append(v)
    report = LieReport(alpha, samples, control, horizon)
    for t in t_steps:
        expected = 0.0 if control else math.expm1(t) / t
        # the central stencil moves off the level, so keep a margin below the horizon
        if t >= 0.9 * horizon:
            nan = math.nan
            report.rows.append(LieRow(t, nan, nan, expected, nan, nan, True))
            continue
        steps = max(4, int(math.ceil(t / min(max_step, horizon / 200.0) - 1e-9)))
        pushed = []
        for v in basis:
            plus = _rk4_flow(fld, exp_map(W, fd_eps * v), t, steps)
            minus = _rk4_flow(fld, exp_map(W, -fd_eps * v), t, steps)
            pushed.append((plus - minus) / (2 * fd_eps))
        Wt = _rk4_flow(fld, W, t, steps)
        ratios, lie = [], 0.0
        for a in range(4):
            for b in range(a + 1, 4):
                base = omega(W, basis[a], basis[b])
                moved = omega(Wt, pushed[a], pushed[b])
                d = (moved - base) / t
                lie = max(lie, float(np.max(np.abs(d))))
                big = np.abs(base) > 0.5
                if np.any(big):
                    ratios.extend((d[big] / base[big]).tolist())
        r = np.array(ratios)
        rel = math.nan if control else float(np.max(np.abs(r / expected - 1.0)))
        report.rows.append(LieRow(t, float(r.min()), float(r.max()), expected, rel, lie))
    return report


# ---------------------------------------------------------------- deformed metric


def volume_matched(rho: ConformalFactor) -> ConformalFactor:
    """Shift ``rho`` by a constant so that the deformed area is ``4 pi``."""
    V = spectral.volume(rho)
    return rho.shifted(-0.5 * math.log(V / (4.0 * math.pi)))


@dataclass(frozen=True, eq=False)
class MoserMap:
    """Area-preserving map from the round sphere onto ``(S^2, exp(2 rho) omega0)``.

    Time-1 flow of ``X_t = -grad psi / ((1 - t) + t exp(2 rho))`` with
    ``Lap0 psi = exp(2 rho) - 1``, integrated by RK4.
    """

    rho: ConformalFactor
    psi: FloatArray
    steps: int = 32

    @classmethod
    def build(cls, rho: ConformalFactor, steps: int = 32) -> MoserMap:
        if abs(spectral.volume(rho) - 4.0 * math.pi) > 1e-8:
            raise ValueError("rho must be volume matched (area 4 pi)")
        e2 = spectral.exp2rho_coeffs(rho)
        e2[0] -= spectral.SQRT_4PI
        return cls(rho, spectral.inv_laplacian_round(e2), steps)

    @property
    def is_identity(self) -> bool:
        return not np.any(self.psi)

    def _velocity(self, p: FloatArray, t: float) -> FloatArray:
        gpsi = spectral.surface_gradient(self.psi, p)
        e2 = np.exp(2.0 * spectral.evaluate(self.rho, p))
        return -gpsi / ((1.0 - t) + t * e2)[..., None]

    def _run(self, p: FloatArray, forward: bool) -> FloatArray:
        p = normalize(np.asarray(p, dtype=float))
        if self.is_identity:
            return p.copy()
        h = 1.0 / self.steps
        sgn = 1.0 if forward else -1.0
        t = 0.0 if forward else 1.0
        for _ in range(self.steps):
            k1 = self._velocity(p, t)
            k2 = self._velocity(normalize(p + 0.5 * sgn * h * k1), t + 0.5 * sgn * h)
            k3 = self._velocity(normalize(p + 0.5 * sgn * h * k2), t + 0.5 * sgn * h)
            k4 = self._velocity(normalize(p + sgn * h * k3), t + sgn * h)
            p = normalize(p + sgn * h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))
            t += sgn * h
        return p

    def __call__(self, p) -> FloatArray:
        return self._run(p, True)

    def inverse(self, p) -> FloatArray:
        return self._run(p, False)

    def pushforward(self, p: FloatArray, v: FloatArray, eps: float = 1e-6) -> FloatArray:
        """``Dphi(p) v`` by central differences along the geodesic through ``v``."""
        v = np.asarray(v, dtype=float)
        nv = np.linalg.norm(v, axis=-1, keepdims=True)
        u = np.where(nv > 0, v / np.where(nv > 0, nv, 1.0), 0.0)
        return (self(exp_map(p, eps * u)) - self(exp_map(p, -eps * u))) / (2 * eps) * nv

    def area_residual(self, points: FloatArray, eps: float = 1e-5) -> float:
        """``max |J exp(2 rho(phi)) - 1|`` where ``J`` is the round Jacobian of the map."""
        p = normalize(np.asarray(points, dtype=float))
        E = tangent_frames(p)
        a = self.pushforward(p, E[..., 0], eps)
        b = self.pushforward(p, E[..., 1], eps)
        q = self(p)
        J = np.einsum("...k,...k->...", q, np.cross(a, b))
        e2 = np.exp(2.0 * spectral.evaluate(self.rho, q))
        return float(np.max(np.abs(J * e2 - 1.0)))


@dataclass
class DeformedContactReport:
    status: str
    c: float
    samples: int
    min_margin: float
    min_normalized: float
    moser_residual: float
    antipodal_range: tuple[float, float]
    hypothesis_holds: bool
    found: int

    def to_dict(self) -> dict:
        return asdict(self)


def _level_samples(ctx: MetricContext, c: float, count: int, rng, max_rounds: int = 20) -> FloatArray:
    """States with ``H_g = c``: the partner moves out from the first vortex along a random geodesic."""
    out = []
    s_grid = np.linspace(1e-3, math.pi, 256)
    for _ in range(max_rounds):
        need = count - sum(len(o) for o in out)
        if need <= 0:
            break
        m = 2 * need
        w1 = random_points(rng, m)
        u = normalize(project_tangent(w1, rng.standard_normal((m, 3))))
        W2 = exp_map(w1[:, None, :], s_grid[None, :, None] * u[:, None, :])
        Z = np.stack([np.repeat(w1[:, None, :], s_grid.size, axis=1), W2], axis=2)
        H = energy_value(Z, DIPOLE, ctx)
        below = H < c
        has = below.any(axis=1)
        first = np.argmax(below, axis=1)
        ok = has & (first > 0)
        idx = np.flatnonzero(ok)
        lo = s_grid[first[idx] - 1]
        hi = s_grid[first[idx]]
        w1o, uo = w1[idx], u[idx]
        for _ in range(60):
            mid = 0.5 * (lo + hi)
            Zm = np.stack([w1o, exp_map(w1o, mid[:, None] * uo)], axis=1)
            above = energy_value(Zm, DIPOLE, ctx) > c
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        s = 0.5 * (lo + hi)
        out.append(np.stack([w1o, exp_map(w1o, s[:, None] * uo)], axis=1))
    W = np.concatenate(out, axis=0) if out else np.zeros((0, 2, 3))
    return W[:count]


def antipodal_image_range(mmap: MoserMap, ctx: MetricContext, n_points: int = 2000) -> tuple[float, float]:
    """Range of ``H_g(phi(z), phi(-z))`` over a Fibonacci lattice."""
    from .sphere import fibonacci_lattice

    z = fibonacci_lattice(n_points)
    W = np.stack([mmap(z), mmap(-z)], axis=1)
    H = energy_value(W, DIPOLE, ctx)
    return float(H.min()), float(H.max())


def deformed_contact_check(
    rho: ConformalFactor,
    c: float,
    samples: int = 1000,
    seed: int = 0,
    moser_steps: int = 32,
    moser_tol: float = 1e-6,
    range_points: int = 2000,
) -> DeformedContactReport:
    """Transversality of the transported Liouville field to ``H_g = c``.

    ``rho`` is volume matched first. The antipodal-image check reports whether
    ``c`` lies in the range of ``H_g(phi(z), phi(-z))``, where the transported
    field is undefined.
    """
    rho = volume_matched(rho)
    ctx = MetricContext.from_factor(rho)
    mmap = MoserMap.build(rho, moser_steps)
    rng = np.random.default_rng(seed)
    probe = random_points(rng, 500)
    residual = 0.0 if mmap.is_identity else mmap.area_residual(probe)
    lo, hi = antipodal_image_range(mmap, ctx, range_points)
    hyp = not (lo <= c <= hi)
    W = _level_samples(ctx, c, samples, rng)
    found = W.shape[0]
    if found == 0:
        return DeformedContactReport("inconclusive", c, samples, math.nan, math.nan, residual, (lo, hi), hyp, 0)
    Z = mmap.inverse(W)
    Vz = liouville_field_batch(Z)
    V = np.stack([mmap.pushforward(Z[:, i], Vz[:, i]) for i in range(2)], axis=1)
    G = grad(W, DIPOLE, ctx)
    m = np.einsum("nik,nik->n", G, V)
    norm = np.linalg.norm(G.reshape(found, -1), axis=1) * np.linalg.norm(V.reshape(found, -1), axis=1)
    if residual > moser_tol or found < samples:
        status = "inconclusive"
    elif not hyp:
        status = "hypothesis violated"
    elif m.min() > 0:
        status = "pass"
    else:
        status = "fail"
    return DeformedContactReport(status, c, samples, float(m.min()), float(np.min(m / norm)), residual, (lo, hi), hyp, found)


def write_report(path, payload: dict, header: dict | None = None) -> None:
    Path(path).write_text(json.dumps({"header": header or {}, **payload}, indent=2, default=float) + "\n")
