"""Min-max energy levels c1 <= c2 over a pinned vortex.

For vortex ``k`` pinned at ``eta`` the inner value is the minimum of the energy
over the remaining vortices. ``c1`` and ``c2`` are the minimum and maximum of
that inner value over ``eta``. Both are computed on a Fibonacci grid followed
by a local polish, so ``c1`` is an upper bound of the true minimum and ``c2`` a
lower bound of the true maximum.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy.optimize

from .hamiltonian import CollisionError, MetricContext, _ctx, energy_value, frame_displace, grad, hessian
from .sphere import FloatArray, as_gammas, fibonacci_lattice, min_chord, normalize, random_points

NEAR_COLLISION = 1e-6
SAME_MINIMIZER = 1e-3


@dataclass(frozen=True, eq=False)
class InnerResult:
    value: float
    z: FloatArray
    values: FloatArray  # best value of every start
    dispersion: float
    near_collision: bool


def _assemble(eta: FloatArray, k: int, x: FloatArray) -> FloatArray:
    y = normalize(x.reshape(-1, 3))
    return np.insert(y, k, eta, axis=0)


def _local_inner(eta, k, g, ctx, x0, gtol=1e-10):
    n = g.size

    def fun(x):
        z = _assemble(eta, k, x)
        try:
            e = float(energy_value(z, g, ctx))
        except CollisionError:
            return 1e30, np.zeros_like(x)
        gr = np.delete(grad(z, g, ctx), k, axis=0)
        r = np.linalg.norm(x.reshape(-1, 3), axis=1, keepdims=True)
        return e, (gr / r).ravel()

    res = scipy.optimize.minimize(fun, x0.ravel(), jac=True, method="BFGS", options={"gtol": gtol, "maxiter": 500})
    return float(res.fun), _assemble(eta, k, res.x)


def _newton_polish(z, k, g, ctx, iters: int = 30, tol: float = 1e-13):
    """Modified Newton on the free vortices: Hessian eigenvalues replaced by their moduli."""
    free = np.ones(2 * g.size, dtype=bool)
    free[2 * k : 2 * k + 2] = False
    try:
        e = float(energy_value(z, g, ctx))
    except CollisionError:
        return z
    for _ in range(iters):
        gf = grad(z, g, ctx, frames=True)[free]
        if np.linalg.norm(gf) < tol:
            break
        Hf = hessian(z, g, ctx)[np.ix_(free, free)]
        lam, V = np.linalg.eigh(Hf)
        lam = np.maximum(np.abs(lam), 1e-8 * max(1.0, np.max(np.abs(lam))))
        d = np.zeros(2 * g.size)
        d[free] = -V @ ((V.T @ gf) / lam)
        t = 1.0
        while t > 1e-8:
            zt = frame_displace(z, t * d)
            try:
                et = float(energy_value(zt, g, ctx))
            except CollisionError:
                et = np.inf
            if et <= e:
                z, e = zt, et
                break
            t *= 0.5
        else:
            break
    return z


def inner_min(
    eta,
    k: int,
    gamma,
    ctx: MetricContext | None = None,
    starts: int = 16,
    seed: int = 0,
    warm: FloatArray | None = None,
) -> InnerResult:
    """Multistart minimum of the energy with vortex ``k`` fixed at ``eta``."""
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    if np.any(g <= 0):
        raise ValueError("the inner minimum is only bounded below for positive vorticities")
    eta = normalize(np.asarray(eta, dtype=float))
    n = g.size
    if not 0 <= k < n:
        raise IndexError(k)
    if n == 1:
        v = float(energy_value(eta[None, :], g, ctx))
        return InnerResult(v, eta[None, :].copy(), np.array([v]), 0.0, False)
    rng = np.random.default_rng(seed)
    inits = [random_points(rng, n - 1) for _ in range(starts)]
    if warm is not None:
        inits.insert(0, np.delete(np.asarray(warm, dtype=float), k, axis=0))
    vals, zs = [], []
    for x0 in inits:
        v, z = _local_inner(eta, k, g, ctx, x0)
        vals.append(v)
        zs.append(z)
    vals = np.array(vals)
    # quasi-Newton stalls on the flat radial direction; finish the promising starts
    for i in np.flatnonzero(vals <= vals.min() + 1e-4):
        zs[i] = _newton_polish(zs[i], k, g, ctx)
        vals[i] = float(energy_value(zs[i], g, ctx))
    b = int(np.argmin(vals))
    zb = zs[b]
    same = [v for v, z in zip(vals, zs) if np.max(np.linalg.norm(z - zb, axis=1)) < SAME_MINIMIZER]
    disp = float(np.max(same) - np.min(same))
    return InnerResult(float(vals[b]), zb, vals, disp, min_chord(zb) < NEAR_COLLISION)


@dataclass(frozen=True, eq=False)
class BandReport:
    k: int
    c1: float
    c2: float
    argmin_point: FloatArray
    argmax_point: FloatArray
    grid_size: int
    starts: int
    nodes: FloatArray = field(repr=False)
    node_values: FloatArray = field(repr=False)
    dispersion: float = 0.0
    near_collision: int = 0

    @property
    def gap(self) -> float:
        return self.c2 - self.c1

    def to_dict(self) -> dict:
        return {
            "k": self.k,
            "c1": self.c1,
            "c2": self.c2,
            "argmin_point": self.argmin_point.tolist(),
            "argmax_point": self.argmax_point.tolist(),
            "grid_size": self.grid_size,
            "starts": self.starts,
            "dispersion": self.dispersion,
            "near_collision": self.near_collision,
        }

    def to_json(self, path: str | Path | None = None, header: dict | None = None) -> str:
        text = json.dumps({"header": header or {}, **self.to_dict()}, indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text

    def to_csv(self, path: str | Path, header: list[str] | None = None) -> None:
        with open(path, "w", newline="") as fh:
            for line in header or []:
                fh.write(f"# {line}\n")
            w = csv.writer(fh)
            w.writerow(["node", "x", "y", "z", "inner_min"])
            for i, (p, v) in enumerate(zip(self.nodes, self.node_values)):
                w.writerow([i, *(repr(float(c)) for c in p), repr(float(v))])


def _polish(eta0, z0, k, g, ctx, sign: float, starts: int, seed: int, iters: int = 30):
    """Local extremum of the inner value by gradient steps with warm-started inner solves.

    The derivative of the inner value along ``eta`` is the gradient of the energy
    at vortex ``k`` evaluated at the inner minimizer.
    """
    eta, z = eta0.copy(), z0
    best = inner_min(eta, k, g, ctx, starts=0, warm=z)
    step = 0.05
    for _ in range(iters):
        d = sign * grad(best.z, g, ctx)[k]
        if np.linalg.norm(d) < 1e-12:
            break
        trial_eta = normalize(eta - step * d / np.linalg.norm(d))
        trial = inner_min(trial_eta, k, g, ctx, starts=max(2, starts // 4), seed=seed, warm=best.z)
        if sign * trial.value < sign * best.value:
            eta, best = trial_eta, trial
            step *= 1.5
        else:
            step *= 0.5
            if step < 1e-8:
                break
    return eta, best


def c1_c2(
    k: int,
    gamma,
    ctx: MetricContext | None = None,
    grid_size: int = 2000,
    starts: int = 16,
    seed: int = 0,
    polish: bool = True,
) -> BandReport:
    """Grid-plus-polish estimates of ``c1`` (min) and ``c2`` (max) of the inner minimum."""
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    nodes = fibonacci_lattice(grid_size)
    vals = np.empty(grid_size)
    mins = []
    disp = 0.0
    near = 0
    for i, eta in enumerate(nodes):
        r = inner_min(eta, k, g, ctx, starts=starts, seed=seed + i)
        vals[i] = r.value
        mins.append(r.z)
        disp = max(disp, r.dispersion)
        near += int(r.near_collision)
    i1, i2 = int(np.argmin(vals)), int(np.argmax(vals))
    c1, c2 = float(vals[i1]), float(vals[i2])
    p1, p2 = nodes[i1].copy(), nodes[i2].copy()
    if polish and g.size > 1:
        e, r = _polish(p1, mins[i1], k, g, ctx, +1.0, starts, seed)
        if r.value < c1:
            c1, p1 = r.value, e
        e, r = _polish(p2, mins[i2], k, g, ctx, -1.0, starts, seed)
        if r.value > c2:
            c2, p2 = r.value, e
    return BandReport(k, c1, c2, p1, p2, grid_size, starts, nodes, vals, disp, near)


@dataclass(frozen=True)
class Separation:
    point: FloatArray
    inner_value: float
    vacuous: bool


def separation_check(c: float, k: int, gamma, ctx: MetricContext | None, report: BandReport) -> Separation | None:
    """A grid point whose pinned slice misses the level set ``H = c``, if any.

    Below ``c1`` the level set is empty and the first node is returned with
    ``vacuous=True``. Otherwise the node with the largest inner value is
    re-evaluated and returned when that value exceeds ``c``.
    """
    if c < report.c1:
        return Separation(report.nodes[0].copy(), float(report.node_values[0]), True)
    candidates = [(report.c2, report.argmax_point)]
    order = np.argsort(report.node_values)[::-1]
    candidates += [(report.node_values[i], report.nodes[i]) for i in order[:3]]
    for v, p in candidates:
        if v <= c:
            continue
        r = inner_min(p, k, gamma, ctx, starts=report.starts)
        if r.value > c:
            return Separation(np.asarray(p, dtype=float).copy(), r.value, False)
    return None
