"""Periodic orbits: Poincare returns, shooting refinement, choreography tests.

Orbits are found by shooting from structured seeds (relative equilibria of
axisymmetric metrics, or small oscillations about an elliptic fixed point);
there is no global search. The default section is the plane through the
initial position of vortex 0, normal to its initial velocity, crossed in the
direction of that velocity.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import spectral
from .dynamics import Method, flow, vector_field, write_trajectory_csv, Trajectory, moment_map
from .hamiltonian import MetricContext, _ctx, energy_value, frame_displace, grad, hessian
from .sphere import Configuration, FloatArray, as_gammas, as_points, normalize, tangent_frames


class OrbitError(RuntimeError):
    def __init__(self, status: str, message: str):
        super().__init__(f"{status}: {message}")
        self.status = status


@dataclass(frozen=True)
class Section:
    """Affine condition ``normal . (z_vortex - point) = 0`` crossed with positive rate."""

    vortex: int
    point: FloatArray
    normal: FloatArray

    def value(self, z: FloatArray) -> float:
        return float(np.dot(self.normal, z[self.vortex] - self.point))

    def rate(self, z: FloatArray, gamma, ctx) -> float:
        return float(np.dot(self.normal, vector_field(z, gamma, ctx)[self.vortex]))

    @classmethod
    def default(cls, z, gamma, ctx=None, vortex: int = 0) -> Section:
        p = normalize(as_points(z))
        v = vector_field(p, gamma, _ctx(ctx))[vortex]
        nv = np.linalg.norm(v)
        if nv < 1e-12:
            raise OrbitError("not_transverse", "vortex velocity vanishes; no section through this state")
        return cls(vortex, p[vortex].copy(), v / nv)


def poincare_return(
    z,
    gamma,
    ctx: MetricContext | None = None,
    section: Section | None = None,
    dt: float = 5e-3,
    t_max: float = 1e3,
    min_time: float | None = None,
    method: Method | str = Method.MIDPOINT4,
    time_tol: float = 1e-10,
) -> tuple[Configuration, float]:
    """First positive recrossing of ``section``; the crossing time is bisected to ``time_tol``."""
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    p = normalize(as_points(z))
    section = section or Section.default(p, g, ctx)
    rate = section.rate(p, g, ctx)
    scale = np.max(np.abs(vector_field(p, g, ctx)))
    if not abs(rate) > 1e-8 * max(scale, 1e-300) or scale < 1e-12:
        raise OrbitError("not_transverse", "flow is tangent to the section at the start")
    min_time = 10 * dt if min_time is None else min_time
    t, q = 0.0, p
    s_prev = section.value(q)
    while t < t_max:
        q_next = flow(q, g, ctx, dt, dt=dt, method=method)
        s_next = section.value(q_next)
        t_next = t + dt
        if t_next > min_time and s_prev < 0.0 <= s_next:
            lo, hi = 0.0, dt
            while hi - lo > time_tol:
                mid = 0.5 * (lo + hi)
                if section.value(flow(q, g, ctx, mid, dt=dt, method=method)) < 0.0:
                    lo = mid
                else:
                    hi = mid
            tau = 0.5 * (lo + hi)
            return Configuration(flow(q, g, ctx, tau, dt=dt, method=method)), t + tau
        t, q, s_prev = t_next, q_next, s_next
    raise OrbitError("no_return", f"no return to the section within t = {t_max}")


@dataclass(frozen=True, eq=False)
class PeriodicOrbit:
    z0: Configuration
    T: float
    residual: float
    energy: float
    floquet_moduli: FloatArray | None = None
    iterations: int = 0
    converged: bool = True
    status: str = "ok"
    dt: float = 5e-3
    history: tuple[float, ...] = field(default=(), repr=False)

    def to_dict(self) -> dict:
        return {
            "z0": self.z0.points.tolist(),
            "T": self.T,
            "residual": self.residual,
            "energy": self.energy,
            "floquet_moduli": None if self.floquet_moduli is None else self.floquet_moduli.tolist(),
            "iterations": self.iterations,
            "converged": self.converged,
            "status": self.status,
            "dt": self.dt,
        }


def periodic_residual(z, T, gamma, ctx=None, dt: float = 5e-3, method=Method.MIDPOINT4) -> float:
    """Largest chord ``|phi_T(z_i) - z_i|`` over the vortices."""
    p = normalize(as_points(z))
    q = flow(p, gamma, ctx, T, dt=dt, method=method)
    return float(np.max(np.linalg.norm(q - p, axis=-1)))


def refine_periodic(
    z_guess,
    T_guess: float,
    gamma,
    ctx: MetricContext | None = None,
    tol: float = 1e-9,
    max_iter: int = 12,
    dt: float = 5e-3,
    section: Section | None = None,
    fd_step: float = 1e-6,
    method: Method | str = Method.MIDPOINT4,
) -> PeriodicOrbit:
    """Gauss-Newton on ``(z, T) -> (phi_T(z) - z, section(z))``.

    Displacements are taken in the tangent frames at the current iterate;
    the Jacobian comes from central differences of the flow map and steps are
    minimum-norm least-squares solutions (periodic orbits come in families).
    """
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    n = g.size
    z = normalize(as_points(z_guess)).copy()
    T = float(T_guess)
    if not T > 0:
        raise ValueError("period guess must be positive")
    section = section or Section.default(z, g, ctx)

    def resid(zz, TT):
        q = flow(zz, g, ctx, TT, dt=dt, method=method)
        return np.concatenate([(q - zz).ravel(), [section.value(zz)]]), q

    r, q = resid(z, T)
    history = [float(np.max(np.linalg.norm((q - z), axis=-1)))]
    it = 0
    status = "no_convergence"
    for it in range(1, max_iter + 1):
        J = np.empty((3 * n + 1, 2 * n + 1))
        for c in range(2 * n):
            d = np.zeros(2 * n)
            d[c] = fd_step
            zp, zm = frame_displace(z, d), frame_displace(z, -d)
            J[:, c] = (resid(zp, T)[0] - resid(zm, T)[0]) / (2 * fd_step)
        hT = fd_step * max(1.0, T)
        rp, _ = resid(z, T + hT)
        rm, _ = resid(z, T - hT)
        J[:, 2 * n] = (rp - rm) / (2 * hT)
        step = np.linalg.lstsq(J, -r, rcond=1e-6)[0]
        # backtrack on the residual norm
        t = 1.0
        base = np.linalg.norm(r)
        while True:
            z_new = frame_displace(z, t * step[: 2 * n])
            T_new = T + t * step[2 * n]
            r_new, q_new = resid(z_new, T_new)
            if np.linalg.norm(r_new) < base or t < 1e-3:
                break
            t *= 0.5
        if not T_new > 0:
            status = "bad_period"
            break
        z, T, r, q = z_new, T_new, r_new, q_new
        history.append(float(np.max(np.linalg.norm(q - z, axis=-1))))
        if history[-1] < tol:
            status = "ok"
            break
    moduli = floquet_moduli(z, T, g, ctx, dt=dt, fd_step=fd_step, method=method)
    return PeriodicOrbit(
        Configuration(z),
        T,
        history[-1],
        float(energy_value(z, g, ctx)),
        moduli,
        it,
        status == "ok",
        status,
        dt,
        tuple(history),
    )


def monodromy(z, T, gamma, ctx=None, dt: float = 5e-3, fd_step: float = 1e-6, method=Method.MIDPOINT4) -> FloatArray:
    """Derivative of the time-``T`` map in tangent-frame coordinates (central differences)."""
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    n = g.size
    p = normalize(as_points(z))
    qT = flow(p, g, ctx, T, dt=dt, method=method)
    E_out = tangent_frames(qT)
    M = np.empty((2 * n, 2 * n))
    for c in range(2 * n):
        d = np.zeros(2 * n)
        d[c] = fd_step
        qp = flow(frame_displace(p, d), g, ctx, T, dt=dt, method=method)
        qm = flow(frame_displace(p, -d), g, ctx, T, dt=dt, method=method)
        col = (qp - qm) / (2 * fd_step)
        M[:, c] = np.einsum("ika,ik->ia", E_out, col).ravel()
    return M


def floquet_moduli(z, T, gamma, ctx=None, **kw) -> FloatArray:
    return np.sort(np.abs(np.linalg.eigvals(monodromy(z, T, gamma, ctx, **kw))))


def sample_orbit(orbit: PeriodicOrbit, gamma, ctx=None, samples: int = 64, periods: float = 1.0, t0: float = 0.0) -> tuple[FloatArray, FloatArray]:
    """States at ``t0 + k T periods / samples`` for ``k = 0..samples``."""
    z = orbit.z0.points
    if t0:
        z = flow(z, gamma, ctx, t0, dt=orbit.dt)
    S = flow(z, gamma, ctx, periods * orbit.T, dt=orbit.dt, samples=samples)
    return t0 + np.linspace(0.0, periods * orbit.T, samples + 1), S


def choreography_defect(orbit: PeriodicOrbit, gamma, ctx=None, samples: int = 64, t0: float = 0.0) -> float:
    """Largest ``|z_{i-1}(t) - z_i(t + T/n)|`` over ``samples`` phases and all ``i``."""
    g = as_gammas(gamma)
    n = g.size
    # sample on a grid fine enough that both t_k and t_k + T/n are nodes
    per = samples * n
    _, S = sample_orbit(orbit, g, ctx, samples=per * 2, periods=2.0, t0=t0)
    shift = samples  # index offset of T/n on a grid with step T / (samples n)
    worst = 0.0
    for k in range(samples):
        a = S[k * n]
        b = S[k * n + shift]
        for i in range(n):
            worst = max(worst, float(np.linalg.norm(a[i - 1] - b[i])))
    return worst


def is_choreography(orbit: PeriodicOrbit, gamma, ctx=None, tol: float = 1e-6, samples: int = 64, t0: float = 0.0) -> bool:
    """Whether every vortex follows its predecessor along one curve, shifted by ``T/n``."""
    return choreography_defect(orbit, gamma, ctx, samples, t0) <= tol


@dataclass(frozen=True)
class PerverseReport:
    status: str
    reduced_gammas: tuple[float, ...]
    quadratic_form: float  # sum over ordered pairs i != j
    pair_sum: float  # sum over i < j
    expected: float  # -sum (G_i - mean)^2
    min_grad_norm: float
    max_grad_norm: float
    skipped: tuple[int, ...]


def reduced_vorticity(gamma) -> np.ndarray:
    g = np.asarray(as_gammas(gamma), dtype=float)
    return g - g.mean()


def perverse_test(orbit: PeriodicOrbit | None, gamma, ctx=None, tol: float = 1e-9, samples: int = 64) -> PerverseReport:
    """Check whether the orbit could be a perverse choreography.

    A choreography with unequal vorticities would make every configuration on
    it stationary for the reduced vorticities ``G - mean(G)``. A positive
    lower bound on the reduced gradient along the orbit refutes that.
    """
    gt = reduced_vorticity(gamma)
    expected = -float(np.sum(gt * gt))
    ordered = float(gt.sum() ** 2 - np.sum(gt * gt))
    pair = 0.5 * ordered
    keep = np.flatnonzero(np.abs(gt) > 1e-14 * max(1.0, np.max(np.abs(as_gammas(gamma)))))
    skipped = tuple(int(i) for i in np.setdiff1d(np.arange(gt.size), keep))
    if keep.size == 0:
        return PerverseReport("identical vorticities", tuple(gt), ordered, pair, expected, 0.0, 0.0, skipped)
    if orbit is None:
        return PerverseReport("no orbit", tuple(gt), ordered, pair, expected, math.nan, math.nan, skipped)
    ctx = _ctx(ctx)
    _, S = sample_orbit(orbit, gamma, ctx, samples=samples)
    norms = []
    for z in S[:-1]:
        # vortices with zero reduced vorticity do not enter the reduced energy
        gr = grad(z[keep], gt[keep], ctx)
        norms.append(float(np.linalg.norm(gr)))
    lo, hi = min(norms), max(norms)
    status = "not a choreography" if lo > 1e3 * tol else "inconclusive"
    return PerverseReport(status, tuple(gt), ordered, pair, expected, lo, hi, skipped)


# ---------------------------------------------------------------- seeds


def polygon(n: int, colatitude: float, phase: float = 0.0, clockwise: bool = False) -> FloatArray:
    """``n`` points equally spaced on a latitude circle."""
    sgn = -1.0 if clockwise else 1.0
    phi = phase + sgn * 2.0 * np.pi * np.arange(n) / n
    st = math.sin(colatitude)
    return np.column_stack([st * np.cos(phi), st * np.sin(phi), np.full(n, math.cos(colatitude))])


@dataclass(frozen=True)
class RelativeEquilibrium:
    z: FloatArray
    omega: float
    T: float
    energy: float


def check_axisymmetric(ctx: MetricContext, tol: float = 1e-14) -> None:
    c = ctx.rho.coeffs
    L = ctx.rho.L
    for l in range(L + 1):
        for m in range(-l, l + 1):
            if m != 0 and abs(c[spectral.index(l, m)]) > tol:
                raise ValueError("metric is not axisymmetric about the z-axis")


def polygon_relative_equilibrium(gamma, ctx: MetricContext | None, colatitude: float) -> RelativeEquilibrium:
    """Identical vortices on a latitude circle of an axisymmetric metric.

    The configuration rotates rigidly about the z-axis. Labels are arranged
    against the sense of rotation so that ``z_{i-1}(t) = z_i(t + T/n)``.
    """
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    if np.ptp(g) != 0.0:
        raise ValueError("polygon relative equilibria need identical vorticities")
    check_axisymmetric(ctx)
    n = g.size
    z = polygon(n, colatitude)
    X = vector_field(z, g, ctx)
    st = math.sin(colatitude)
    e_phi = np.array([-z[0, 1], z[0, 0], 0.0]) / st
    omega = float(np.dot(X[0], e_phi) / st)
    if omega == 0.0:
        raise ValueError("configuration is stationary, not a rotating relative equilibrium")
    z = polygon(n, colatitude, clockwise=omega > 0)
    return RelativeEquilibrium(z, omega, 2.0 * math.pi / abs(omega), float(energy_value(z, g, ctx)))


def frame_symplectic_matrix(z, gamma, ctx=None) -> FloatArray:
    """Matrix ``A`` with ``Omega(u, w) = u^T A w`` in tangent-frame coordinates."""
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    c = g * ctx.density(normalize(as_points(z)))
    A = np.zeros((2 * g.size, 2 * g.size))
    for i, ci in enumerate(np.atleast_1d(c)):
        A[2 * i, 2 * i + 1] = ci
        A[2 * i + 1, 2 * i] = -ci
    return A


@dataclass(frozen=True)
class LyapunovSeed:
    z: FloatArray
    T: float
    frequency: float


def lyapunov_seeds(z_fixed, gamma, ctx=None, amplitude: float = 1e-2) -> list[LyapunovSeed]:
    """Small-oscillation seeds about an elliptic fixed point, one per frequency."""
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    z = normalize(as_points(z_fixed))
    A = frame_symplectic_matrix(z, g, ctx)
    Lin = np.linalg.solve(A.T, hessian(z, g, ctx))
    lam, V = np.linalg.eig(Lin)
    seeds = []
    for k in np.argsort(-lam.imag):
        w = lam[k].imag
        if w <= 1e-9 or abs(lam[k].real) > 1e-8 * abs(w):
            continue
        v = V[:, k].real
        if np.linalg.norm(v) < 1e-12:
            v = V[:, k].imag
        v = v / np.linalg.norm(v)
        seeds.append(LyapunovSeed(frame_displace(z, amplitude * v), 2.0 * math.pi / w, w))
    return seeds


def write_orbit(orbit: PeriodicOrbit, gamma, ctx, csv_path, json_path, samples: int = 256, header: dict | None = None) -> None:
    """Orbit samples in the trajectory CSV schema plus a JSON summary."""
    g = as_gammas(gamma)
    ctx = _ctx(ctx)
    t, S = sample_orbit(orbit, g, ctx, samples=samples)
    H = np.asarray(energy_value(S, g, ctx), dtype=float)
    M = moment_map(S, g) if ctx.is_round else None
    lines = [f"{k}: {v}" for k, v in (header or {}).items()]
    lines.append(f"T: {orbit.T!r}; residual: {orbit.residual!r}; energy: {orbit.energy!r}")
    write_trajectory_csv(csv_path, Trajectory(t, S, H, M), lines)
    Path(json_path).write_text(json.dumps({"header": header or {}, **orbit.to_dict()}, indent=2) + "\n")
