"""Geometry primitives on the unit sphere embedded in R^3.

Points are unit 3-vectors. Configurations are ``(n, 3)`` arrays wrapped in a
small immutable value type; every numerical routine in the package also accepts
a bare array of shape ``(n, 3)``.

Tangent frame rule
------------------
``tangent_basis(p)`` Gram-Schmidts the coordinate axis least aligned with ``p``
(ties broken towards the lower axis index) and completes the frame with
``e2 = p x e1`` so that ``(e1, e2, p)`` is right-handed. The frame is smooth
inside each region where the choice of axis is constant; the branch cut is the
set of points where two components of ``|p|`` are equal and minimal.
"""

from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

FloatArray = NDArray[np.float64]

COLLISION_EPS = 1e-14


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.array(a, dtype=np.float64, copy=True)
    a.setflags(write=False)
    return a


def normalize(v: ArrayLike) -> FloatArray:
    """Project vectors onto the unit sphere along the last axis."""
    v = np.asarray(v, dtype=np.float64)
    r = np.linalg.norm(v, axis=-1, keepdims=True)
    if np.any(r == 0.0):
        raise ValueError("cannot normalize the zero vector")
    return v / r


@dataclass(frozen=True, eq=False)
class SpherePoint:
    """A unit vector in R^3; renormalized on construction."""

    coords: FloatArray

    def __post_init__(self) -> None:
        c = np.asarray(self.coords, dtype=np.float64)
        if c.shape != (3,) or not np.all(np.isfinite(c)):
            raise ValueError("SpherePoint needs 3 finite coordinates")
        object.__setattr__(self, "coords", _readonly(normalize(c)))

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> SpherePoint:
        """Build from colatitude ``theta`` and longitude ``phi``."""
        st = np.sin(theta)
        return cls(np.array([st * np.cos(phi), st * np.sin(phi), np.cos(theta)]))

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.coords, dtype=dtype)

    def __repr__(self) -> str:
        x, y, z = self.coords
        return f"SpherePoint({x:.6g}, {y:.6g}, {z:.6g})"


@dataclass(frozen=True, eq=False)
class Configuration:
    """n pairwise-distinct points of the sphere, stored as an ``(n, 3)`` array."""

    points: FloatArray

    def __post_init__(self) -> None:
        p = np.asarray(self.points, dtype=np.float64)
        if p.ndim == 1:
            p = p.reshape(1, -1)
        if p.ndim != 2 or p.shape[1] != 3 or p.shape[0] < 1:
            raise ValueError(f"configuration must have shape (n, 3), got {p.shape}")
        if not np.all(np.isfinite(p)):
            raise ValueError("configuration contains non-finite coordinates")
        p = normalize(p)
        d = min_chord(p)
        if d <= COLLISION_EPS:
            raise ValueError(f"configuration has a collision (min chord {d:.3g})")
        object.__setattr__(self, "points", _readonly(p))

    @property
    def n(self) -> int:
        return self.points.shape[0]

    def __len__(self) -> int:
        return self.n

    def __getitem__(self, i: int) -> SpherePoint:
        return SpherePoint(self.points[i])

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.points, dtype=dtype)

    def __repr__(self) -> str:
        return f"Configuration(n={self.n}, points={self.points.tolist()!r})"


@dataclass(frozen=True, eq=False)
class VorticityVector:
    """Ordered nonzero circulations."""

    gammas: FloatArray

    def __post_init__(self) -> None:
        g = np.atleast_1d(np.asarray(self.gammas, dtype=np.float64))
        if g.ndim != 1 or g.size == 0:
            raise ValueError("vorticity vector must be a non-empty 1-d sequence")
        if not np.all(np.isfinite(g)):
            raise ValueError("vorticities must be finite")
        if np.any(g == 0.0):
            raise ValueError("vorticities must be nonzero")
        object.__setattr__(self, "gammas", _readonly(g))

    @property
    def n(self) -> int:
        return self.gammas.size

    @property
    def total(self) -> float:
        return float(self.gammas.sum())

    @property
    def mean(self) -> float:
        return float(self.gammas.mean())

    def __len__(self) -> int:
        return self.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.gammas, dtype=dtype)


@dataclass(frozen=True, eq=False)
class TangentBasis:
    """Right-handed orthonormal frame ``(e1, e2, base)`` at a sphere point."""

    base: FloatArray
    e1: FloatArray
    e2: FloatArray

    @property
    def matrix(self) -> FloatArray:
        """``(3, 2)`` matrix with columns ``e1, e2``."""
        return np.column_stack([self.e1, self.e2])


def as_points(z: Configuration | ArrayLike) -> FloatArray:
    """Return the ``(..., n, 3)`` float array behind a configuration."""
    if isinstance(z, Configuration):
        return z.points
    p = np.asarray(z, dtype=np.float64)
    if p.shape[-1] != 3:
        raise ValueError(f"expected trailing dimension 3, got shape {p.shape}")
    return p


def as_gammas(gamma: VorticityVector | Sequence[float] | ArrayLike) -> FloatArray:
    if isinstance(gamma, VorticityVector):
        return gamma.gammas
    return VorticityVector(gamma).gammas


def chord_distance(a: SpherePoint | ArrayLike, b: SpherePoint | ArrayLike) -> float:
    """Euclidean distance between two sphere points."""
    return float(np.linalg.norm(np.asarray(a, dtype=float) - np.asarray(b, dtype=float)))


def pairwise_chords(p: ArrayLike) -> FloatArray:
    """Matrix of chord lengths for points of shape ``(..., n, 3)``."""
    p = np.asarray(p, dtype=np.float64)
    d = p[..., :, None, :] - p[..., None, :, :]
    return np.sqrt(np.einsum("...k,...k->...", d, d))


def min_chord(p: ArrayLike) -> float:
    p = np.asarray(p, dtype=np.float64)
    n = p.shape[-2]
    if n < 2:
        return np.inf
    c = pairwise_chords(p)
    iu = np.triu_indices(n, 1)
    return float(c[..., iu[0], iu[1]].min())


def check_rotation(R: ArrayLike, tol: float = 1e-10) -> FloatArray:
    R = np.asarray(R, dtype=np.float64)
    if R.shape != (3, 3):
        raise ValueError("rotation must be 3x3")
    if np.max(np.abs(R.T @ R - np.eye(3))) > tol or abs(np.linalg.det(R) - 1.0) > tol:
        raise ValueError("matrix is not a proper rotation (R^T R = I, det R = 1)")
    return R


def rotate(R: ArrayLike, z: Configuration | ArrayLike) -> Configuration:
    """Apply a rotation to every point of a configuration (diagonal action)."""
    R = check_rotation(R)
    return Configuration(as_points(z) @ R.T)


def rotation_about(axis: ArrayLike, angle: float) -> FloatArray:
    """Rodrigues rotation matrix, counter-clockwise about ``axis``."""
    k = normalize(axis)
    K = np.array([[0.0, -k[2], k[1]], [k[2], 0.0, -k[0]], [-k[1], k[0], 0.0]])
    return np.eye(3) + np.sin(angle) * K + (1.0 - np.cos(angle)) * (K @ K)


def random_rotation(rng: np.random.Generator) -> FloatArray:
    """Haar-random rotation via a random unit quaternion."""
    q = normalize(rng.standard_normal(4))
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def random_points(rng: np.random.Generator, size: int | tuple[int, ...]) -> FloatArray:
    """Uniform samples on the sphere, shape ``(*size, 3)``."""
    if isinstance(size, int):
        size = (size,)
    return normalize(rng.standard_normal((*size, 3)))


def random_configuration(
    rng: np.random.Generator, n: int, min_separation: float = 0.2, max_tries: int = 10_000
) -> Configuration:
    """Uniform product-measure sample, rejecting pairs closer than ``min_separation``."""
    for _ in range(max_tries):
        p = random_points(rng, n)
        if min_chord(p) >= min_separation:
            return Configuration(p)
    raise RuntimeError("could not draw a configuration with the requested separation")


def tangent_frames(p: ArrayLike) -> FloatArray:
    """Frames for points of shape ``(..., 3)``; returns ``(..., 3, 2)`` columns e1, e2."""
    p = np.asarray(p, dtype=np.float64)
    axis = np.argmin(np.abs(p), axis=-1)
    a = np.zeros(p.shape)
    np.put_along_axis(a, axis[..., None], 1.0, axis=-1)
    e1 = a - np.sum(a * p, axis=-1, keepdims=True) * p
    e1 /= np.linalg.norm(e1, axis=-1, keepdims=True)
    e2 = np.cross(p, e1)
    return np.stack([e1, e2], axis=-1)


def tangent_basis(p: SpherePoint | ArrayLike) -> TangentBasis:
    """Deterministic right-handed orthonormal tangent frame at ``p``."""
    base = normalize(np.asarray(p, dtype=np.float64))
    E = tangent_frames(base)
    return TangentBasis(_readonly(base), _readonly(E[:, 0]), _readonly(E[:, 1]))


def exp_map(p: ArrayLike, v: ArrayLike) -> FloatArray:
    """Great-circle exponential map for tangent vectors ``v`` at ``p`` (batched)."""
    p = np.asarray(p, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    r = np.linalg.norm(v, axis=-1, keepdims=True)
    safe = np.where(r > 0, r, 1.0)
    out = np.cos(r) * p + np.where(r > 0, np.sin(r) / safe, 1.0) * v
    return normalize(out)


def project_tangent(p: ArrayLike, v: ArrayLike) -> FloatArray:
    """Remove the normal component of ``v`` at ``p``."""
    p = np.asarray(p, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    return v - np.sum(v * p, axis=-1, keepdims=True) * p


def to_angles(p: ArrayLike) -> tuple[FloatArray, FloatArray]:
    """Colatitude and longitude of points ``(..., 3)``."""
    p = np.asarray(p, dtype=np.float64)
    theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
    phi = np.arctan2(p[..., 1], p[..., 0])
    return theta, phi


def symplectic_coords(p: ArrayLike) -> tuple[FloatArray, FloatArray]:
    """Local chart ``p = cos(theta)``, ``q = phi`` in which the area form is dp ^ dq."""
    theta, phi = to_angles(p)
    return np.cos(theta), phi


def fibonacci_lattice(n_points: int) -> FloatArray:
    """Quasi-uniform spiral lattice of ``n_points`` unit vectors."""
    if n_points < 1:
        raise ValueError("n_points must be positive")
    i = np.arange(n_points) + 0.5
    z = 1.0 - 2.0 * i / n_points
    golden = np.pi * (3.0 - np.sqrt(5.0))
    phi = golden * np.arange(n_points)
    r = np.sqrt(1.0 - z * z)
    return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])
