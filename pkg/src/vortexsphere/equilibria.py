"""Fixed points of the vortex Hamiltonian and collision-cluster diagnostics."""

from __future__ import annotations

import itertools
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .dynamics import Trajectory
from .hamiltonian import MetricContext, _ctx, energy_value, frame_displace, grad, hessian
from .sphere import Configuration, FloatArray, as_gammas, min_chord, pairwise_chords, random_configuration

MAX_CLUSTER_N = 20


@dataclass(frozen=True, eq=False)
class FixedPointReport:
    z: Configuration
    energy: float
    grad_norm: float
    hessian_eigenvalues: FloatArray
    kernel_dim: int
    morse_index: int
    hits: int = 1

    def to_dict(self) -> dict:
        return {
            "z": self.z.points.tolist(),
            "energy": self.energy,
            "grad_norm": self.grad_norm,
            "hessian_eigenvalues": self.hessian_eigenvalues.tolist(),
            "kernel_dim": self.kernel_dim,
            "morse_index": self.morse_index,
            "hits": self.hits,
        }


@dataclass
class FixedPointSearch:
    """Reports plus coverage statistics of a multistart run."""

    reports: list[FixedPointReport]
    starts: int
    converged: int
    dropped: int
    iterations: list[int] = field(default_factory=list)

    def __iter__(self):
        return iter(self.reports)

    def __len__(self) -> int:
        return len(self.reports)

    def __getitem__(self, i):
        return self.reports[i]

    def to_json(self, path: str | Path | None = None, header: dict | None = None) -> str:
        doc = {
            "header": header or {},
            "starts": self.starts,
            "converged": self.converged,
            "dropped": self.dropped,
            "fixed_points": [r.to_dict() for r in self.reports],
        }
        text = json.dumps(doc, indent=2)
        if path is not None:
            Path(path).write_text(text + "\n")
        return text


def _grad_norm(z, g, ctx) -> float:
    return float(np.linalg.norm(grad(z, g, ctx, frames=True)))


def newton(
    z0,
    gamma,
    ctx: MetricContext | None = None,
    tol: float = 1e-10,
    max_iter: int = 60,
    min_separation: float = 1e-6,
) -> tuple[FloatArray, int, bool]:
    """Damped Newton on ``dH = 0`` in tangent-frame coordinates.

    Steps are minimum-norm least-squares solutions (the Hessian is singular
    along symmetry directions), halved until ``|grad|`` decreases.
    """
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    z = np.array(z0, dtype=float)
    r = _grad_norm(z, g, ctx)
    for it in range(max_iter):
        if r <= tol:
            return z, it, True
        Hm = hessian(z, g, ctx)
        gf = grad(z, g, ctx, frames=True)
        delta = np.linalg.lstsq(Hm, -gf, rcond=1e-12)[0]
        t = 1.0
        accepted = False
        while t > 1e-6:
            zt = frame_displace(z, t * delta)
            if g.size < 2 or min_chord(zt) > min_separation:
                rt = _grad_norm(zt, g, ctx)
                if rt < r:
                    z, r, accepted = zt, rt, True
                    break
            t *= 0.5
        if not accepted:
            return z, it, False
    return z, max_iter, r <= tol


def classify(z, gamma, ctx: MetricContext | None = None, rel_tol: float = 1e-6) -> FixedPointReport:
    """Hessian spectrum, kernel dimension and Morse index at ``z``."""
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    lam = np.linalg.eigvalsh(hessian(z, g, ctx))
    tol = rel_tol * float(np.max(np.abs(lam)))
    kernel = int(np.sum(np.abs(lam) <= tol))
    index = int(np.sum(lam < -tol))
    return FixedPointReport(
        Configuration(z),
        float(energy_value(z, g, ctx)),
        _grad_norm(z, g, ctx),
        lam,
        kernel,
        index,
    )


def _label_perms(g: FloatArray) -> list[tuple[int, ...]]:
    """Permutations that only swap vortices with equal vorticity."""
    groups: dict[float, list[int]] = {}
    for i, v in enumerate(g):
        groups.setdefault(float(v), []).append(i)
    blocks = list(groups.values())
    perms = []
    for choice in itertools.product(*(itertools.permutations(b) for b in blocks)):
        perm = list(range(g.size))
        for block, image in zip(blocks, choice):
            for a, b in zip(block, image):
                perm[a] = b
        perms.append(tuple(perm))
    return perms


def same_configuration(a: FloatArray, b: FloatArray, perms, tol: float) -> bool:
    for perm in perms:
        if np.max(np.linalg.norm(a - b[list(perm)], axis=-1)) <= tol:
            return True
    return False


def find_fixed_points(
    gamma,
    ctx: MetricContext | None = None,
    starts: int = 32,
    seed: int = 0,
    newton_tol: float = 1e-10,
    max_iter: int = 60,
    dedup_tol: float = 1e-6,
    min_start_separation: float = 0.2,
) -> FixedPointSearch:
    """Multistart Newton search, deduplicated and sorted by energy."""
    ctx = _ctx(ctx)
    g = as_gammas(gamma)
    rng = np.random.default_rng(seed)
    perms = _label_perms(g)
    found: list[list] = []  # [z, hits]
    converged = 0
    iters = []
    for _ in range(starts):
        z0 = random_configuration(rng, g.size, min_start_separation).points
        z, it, ok = newton(z0, g, ctx, newton_tol, max_iter)
        if not ok:
            continue
        converged += 1
        iters.append(it)
        for entry in found:
            if same_configuration(entry[0], z, perms, dedup_tol):
                entry[1] += 1
                break
        else:
            found.append([z, 1])
    reports = []
    for z, hits in found:
        r = classify(z, g, ctx)
        reports.append(
            FixedPointReport(r.z, r.energy, r.grad_norm, r.hessian_eigenvalues, r.kernel_dim, r.morse_index, hits)
        )
    reports.sort(key=lambda r: (r.energy, tuple(r.z.points.ravel())))
    return FixedPointSearch(reports, starts, converged, starts - converged, iters)


@dataclass(frozen=True)
class ClusterSum:
    indices: tuple[int, ...]
    value: float
    degenerate: bool


def cluster_value(gamma, indices) -> float:
    """``sum_{i != j in indices} G_i G_j`` over ordered pairs."""
    v = as_gammas(gamma)[list(indices)]
    return float(v.sum() ** 2 - np.sum(v * v))


def cluster_vorticity_sums(gamma, tol: float = 1e-12) -> list[ClusterSum]:
    """Every index subset of size >= 2 with its pair sum; zeros violate (P1)."""
    g = as_gammas(gamma)
    n = g.size
    if n > MAX_CLUSTER_N:
        raise ValueError(f"subset enumeration limited to n <= {MAX_CLUSTER_N}")
    out = []
    for size in range(2, n + 1):
        for idx in itertools.combinations(range(n), size):
            v = cluster_value(g, idx)
            out.append(ClusterSum(idx, v, abs(v) <= tol))
    return out


def is_nondegenerate(gamma, tol: float = 1e-12) -> bool:
    return not any(c.degenerate for c in cluster_vorticity_sums(gamma, tol))


@dataclass(frozen=True)
class ClusterEvent:
    time: float
    indices: tuple[int, ...]
    value: float


def _maximal_cliques(adj: list[set[int]]) -> list[tuple[int, ...]]:
    out: list[tuple[int, ...]] = []

    def expand(r: set[int], p: set[int], x: set[int]) -> None:
        if not p and not x:
            if len(r) >= 2:
                out.append(tuple(sorted(r)))
            return
        for v in list(p):
            expand(r | {v}, p & adj[v], x & adj[v])
            p = p - {v}
            x = x | {v}

    expand(set(), set(range(len(adj))), set())
    return sorted(out)


def cluster_monitor(traj: Trajectory, gamma, eps: float) -> list[ClusterEvent]:
    """Maximal index sets whose pairwise chords are all below ``eps`` at a sample."""
    g = as_gammas(gamma)
    events = []
    for t, p in zip(traj.times, traj.states):
        c = pairwise_chords(p)
        close = (c < eps) & ~np.eye(g.size, dtype=bool)
        if not close.any():
            continue
        adj = [set(np.flatnonzero(row).tolist()) for row in close]
        for clique in _maximal_cliques(adj):
            events.append(ClusterEvent(float(t), clique, cluster_value(g, clique)))
    return events
