"""Hamiltonian vector field and structure-preserving time stepping.

The symplectic form is ``Omega = sum_i G_i exp(2 rho(s_i)) omega0`` with the
outward orientation ``omega0_s(a, b) = s . (a x b)``. Solving
``Omega(X, w) = dH(w)`` for every tangent ``w`` gives

    X_i = (grad_i H x s_i) / (G_i exp(2 rho(s_i)))

Reversing the orientation of ``omega0`` reverses time.

Two integrators are offered. ``midpoint`` is the spherical implicit midpoint
rule ``s' = s + h f(normalize((s + s') / 2))``; it keeps every vortex on the
sphere exactly and conserves the (linear) moment map. ``midpoint4`` composes it
into a fourth-order symmetric scheme (triple jump). ``rk4`` is classical
Runge-Kutta with projection after every step.
"""

from __future__ import annotations

import csv
import enum
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from numpy.typing import ArrayLike

from .hamiltonian import (
    MetricContext,
    _ambient_gradient,
    _ctx,
    energy_value,
)
from .sphere import (
    Configuration,
    FloatArray,
    VorticityVector,
    as_gammas,
    as_points,
    normalize,
    pairwise_chords,
)
from . import _harmonics, spectral


class Method(str, enum.Enum):
    MIDPOINT = "midpoint"
    MIDPOINT4 = "midpoint4"
    RK4 = "rk4"


@dataclass(frozen=True)
class IntegratorSettings:
    dt: float = 1e-3
    method: Method = Method.MIDPOINT
    newton_tol: float = 1e-14
    max_newton_iters: int = 50
    collision_floor: float = 1e-8
    log_every: int = 1

    def __post_init__(self) -> None:
        object.__setattr__(self, "method", Method(self.method))
        if not self.dt > 0:
            raise ValueError("dt must be positive")
        if not self.collision_floor > 0:
            raise ValueError("collision_floor must be positive")
        if self.max_newton_iters < 1 or self.log_every < 1:
            raise ValueError("iteration counts must be positive")


class Status(str, enum.Enum):
    OK = "ok"
    COLLISION = "collision"
    NO_CONVERGENCE = "no_convergence"


@dataclass
class Trajectory:
    times: FloatArray
    states: FloatArray  # (m, n, 3)
    H_log: FloatArray
    M_log: FloatArray | None
    status: Status = Status.OK
    message: str = ""
    failed_step: int | None = None
    gammas: FloatArray = field(default_factory=lambda: np.zeros(0))

    def __len__(self) -> int:
        return self.times.size

    @property
    def final(self) -> Configuration:
        return Configuration(self.states[-1])

    def energy_drift(self) -> float:
        """Largest relative deviation of the logged energy from its start value."""
        h0 = self.H_log[0]
        return float(np.max(np.abs(self.H_log - h0)) / max(abs(h0), 1e-300))

    def moment_drift(self) -> float:
        if self.M_log is None:
            raise ValueError("moment map is only logged on the round sphere")
        return float(np.max(np.linalg.norm(self.M_log - self.M_log[0], axis=-1)))

    def to_csv(self, path: str | Path, header: list[str] | None = None) -> None:
        write_trajectory_csv(path, self, header)


def moment_map(z, gamma) -> FloatArray:
    """``sum_i G_i s_i``; conserved on the round sphere."""
    p = as_points(z)
    g = as_gammas(gamma)
    return np.einsum("i,...ik->...k", g, p)


def vector_field(z, gamma, ctx: MetricContext | None = None, collision_floor: float | None = None):
    """Velocities of the vortices, shape ``(..., n, 3)``."""
    p = normalize(as_points(z))
    g = as_gammas(gamma)
    ctx = _ctx(ctx)
    if collision_floor is not None and g.size > 1:
        c = pairwise_chords(p) + np.eye(g.size) * 4.0
        if np.min(c) < collision_floor:
            raise CollisionFloorError(float(np.min(c)))
    return _field(p, g, ctx)


class CollisionFloorError(RuntimeError):
    def __init__(self, chord: float):
        super().__init__(f"pair distance {chord:.3e} below collision floor")
        self.chord = chord


def _field(p: FloatArray, g: FloatArray, ctx: MetricContext) -> FloatArray:
    G, _, _ = _ambient_gradient(p, g, ctx)
    # the normal part of G drops out of the cross product
    X = np.cross(G, p)
    if ctx.is_round:
        return X / g[:, None]
    if ctx.is_homothetic:
        return X * (math.exp(-2.0 * ctx.rho.coeffs[0] / spectral.SQRT_4PI) / g[:, None])
    e2 = np.exp(2.0 * spectral.evaluate(ctx.rho, p))
    return X / (g[:, None] * e2[..., None])


def _midpoint_step(p, g, ctx, h, tol, maxit):
    # fixed-point iteration on the stage velocity; contraction factor ~ h * Lipschitz
    k = _field(p, g, ctx)
    for it in range(maxit):
        q = p + h * k
        m = normalize(p + q)
        k_new = _field(m, g, ctx)
        err = np.max(np.abs(k_new - k)) * abs(h)
        k = k_new
        if err <= tol:
            return normalize(p + h * k), it + 1
    return None, maxit


def _rk4_step(p, g, ctx, h):
    k1 = _field(p, g, ctx)
    k2 = _field(normalize(p + 0.5 * h * k1), g, ctx)
    k3 = _field(normalize(p + 0.5 * h * k2), g, ctx)
    k4 = _field(normalize(p + h * k3), g, ctx)
    return normalize(p + h / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4))


_CBRT2 = 2.0 ** (1.0 / 3.0)
_TRIPLE_JUMP = (1.0 / (2.0 - _CBRT2), -_CBRT2 / (2.0 - _CBRT2), 1.0 / (2.0 - _CBRT2))


def step(p: FloatArray, g: FloatArray, ctx: MetricContext, h: float, settings: IntegratorSettings):
    """Advance one step of size ``h`` (may be negative). Returns None on solver failure."""
    m = settings.method
    if m is Method.RK4:
        return _rk4_step(p, g, ctx, h)
    if m is Method.MIDPOINT:
        out, _ = _midpoint_step(p, g, ctx, h, settings.newton_tol, settings.max_newton_iters)
        return out
    for w in _TRIPLE_JUMP:
        p, _ = _midpoint_step(p, g, ctx, w * h, settings.newton_tol, settings.max_newton_iters)
        if p is None:
            return None
    return p


def _min_chord(p: FloatArray) -> float:
    n = p.shape[0]
    if n < 2:
        return math.inf
    c = pairwise_chords(p)
    return float(np.min(c[np.triu_indices(n, 1)]))


def integrate(
    z0: Configuration | ArrayLike,
    gamma: VorticityVector | ArrayLike,
    ctx: MetricContext | None = None,
    settings: IntegratorSettings | None = None,
    T: float = 1.0,
) -> Trajectory:
    """Integrate from ``z0`` over ``[0, T]`` (``T < 0`` integrates backwards).

    The step count is ``ceil(|T| / dt)`` with the step shrunk to land on ``T``.
    Collisions and solver failures truncate the trajectory and set ``status``.
    """
    settings = settings or IntegratorSettings()
    ctx = _ctx(ctx)
    p = normalize(as_points(z0)).copy()
    g = as_gammas(gamma)
    if p.shape[0] != g.size:
        raise ValueError("positions and vorticities differ in length")
    nsteps = max(1, int(math.ceil(abs(T) / settings.dt - 1e-9)))
    h = T / nsteps
    log_round = ctx.is_round

    if _min_chord(p) < settings.collision_floor:
        S, last, code = p[None].copy(), 0, 1
    elif settings.method is Method.RK4:
        S, last, code = _run_rk4(p, g, ctx, h, nsteps, settings)
    else:
        coeffs, L = kernel_data(ctx, g)
        weights = np.array(_TRIPLE_JUMP if settings.method is Method.MIDPOINT4 else (1.0,))
        S, last, code = _harmonics.run_midpoint(
            p, g, coeffs, L, h, nsteps, weights, settings.newton_tol,
            settings.max_newton_iters, settings.collision_floor, settings.log_every,
        )
    status, msg, failed = Status.OK, "", None
    if code == 1:
        status, msg, failed = Status.COLLISION, f"collision floor breached at step {last}", last
    elif code == 2:
        status, msg, failed = Status.NO_CONVERGENCE, f"stage solver failed at step {last}", last
    steps = np.arange(S.shape[0]) * settings.log_every
    if code == 0 and S.shape[0] > 1:
        steps[-1] = nsteps
    times = steps * h
    H = np.asarray(energy_value(S, g, ctx), dtype=float)
    M = moment_map(S, g) if log_round else None
    return Trajectory(times, S, H, M, status, msg, failed, g.copy())


def _run_rk4(p, g, ctx, h, nsteps, settings):
    states = [p.copy()]
    for k in range(1, nsteps + 1):
        p = _rk4_step(p, g, ctx, h)
        if _min_chord(p) < settings.collision_floor:
            return np.array(states), k, 1
        if k % settings.log_every == 0 or k == nsteps:
            states.append(p.copy())
    return np.array(states), nsteps, 0


def kernel_data(ctx: MetricContext, g: FloatArray) -> tuple[FloatArray, int]:
    """Stacked coefficient rows (one-body fields, then rho) for the compiled kernels."""
    if ctx.is_round:
        return np.zeros((g.size + 1, 1)), 0
    rows = np.vstack([ctx.self_coeffs(g), ctx.rho_aux[None, :]])
    return np.ascontiguousarray(rows), ctx.L_aux


def write_trajectory_csv(path: str | Path, traj: Trajectory, header: list[str] | None = None) -> None:
    """CSV with columns ``t, x1, y1, z1, ..., H, Mx, My, Mz``.

    Lines starting with ``#`` precede the column header; M columns are empty
    when the metric is not round.
    """
    n = traj.states.shape[1]
    cols = ["t"] + [f"{c}{i + 1}" for i in range(n) for c in "xyz"] + ["H", "Mx", "My", "Mz"]
    with open(path, "w", newline="") as fh:
        for line in header or []:
            fh.write(f"# {line}\n")
        w = csv.writer(fh)
        w.writerow(cols)
        for k in range(len(traj)):
            row = [repr(float(traj.times[k]))]
            row += [repr(float(v)) for v in traj.states[k].ravel()]
            row.append(repr(float(traj.H_log[k])))
            if traj.M_log is not None:
                row += [repr(float(v)) for v in traj.M_log[k]]
            else:
                row += ["", "", ""]
            w.writerow(row)


def read_trajectory_csv(path: str | Path) -> tuple[FloatArray, FloatArray]:
    """Times and states ``(m, n, 3)`` from a trajectory CSV."""
    with open(path) as fh:
        rows = [r for r in csv.reader(line for line in fh if not line.startswith("#"))]
    cols = rows[0]
    n = sum(1 for c in cols if c.startswith("x"))
    data = np.array([[float(v) for v in r[: 1 + 3 * n]] for r in rows[1:]])
    return data[:, 0], data[:, 1:].reshape(-1, n, 3)


def flow(
    z,
    gamma,
    ctx: MetricContext | None,
    T: float,
    dt: float = 5e-3,
    method: Method | str = Method.MIDPOINT4,
    samples: int | None = None,
    tol: float = 1e-14,
) -> FloatArray:
    """Time-``T`` map with steps of at most ``dt``; no logging or energy evaluation.

    With ``samples`` the step count is rounded up to a multiple of it and the
    ``samples + 1`` equally spaced states are returned instead of the endpoint.
    """
    ctx = _ctx(ctx)
    p = np.ascontiguousarray(normalize(as_points(z)), dtype=float)
    g = as_gammas(gamma)
    method = Method(method)
    nsteps = max(1, int(math.ceil(abs(T) / dt - 1e-9)))
    every = nsteps
    if samples is not None:
        per = max(1, int(math.ceil(nsteps / samples)))
        nsteps, every = per * samples, per
    if T == 0:
        return p[None].repeat(samples + 1, axis=0) if samples is not None else p.copy()
    h = T / nsteps
    if method is Method.RK4:
        out = [p]
        q = p
        for k in range(1, nsteps + 1):
            q = _rk4_step(q, g, ctx, h)
            if k % every == 0:
                out.append(q)
        S, code = np.array(out), 0
    else:
        coeffs, L = kernel_data(ctx, g)
        weights = np.array(_TRIPLE_JUMP if method is Method.MIDPOINT4 else (1.0,))
        S, last, code = _harmonics.run_midpoint(p, g, coeffs, L, h, nsteps, weights, tol, 100, 0.0, every)
    if code != 0:
        raise RuntimeError(f"flow failed with status {code}")
    return S if samples is not None else S[-1]
