"""Band-limited scalar fields on the sphere in a real spherical-harmonic basis.

The basis convention is documented in :mod:`vortexsphere._harmonics`; the
round Laplace-Beltrami operator acts as ``Lap Y_{l,m} = -l(l+1) Y_{l,m}``.

Conformal-factor text format
----------------------------
One ``l m c`` triple per line, whitespace separated; blank lines and lines
starting with ``#`` are ignored. Missing triples are zero, repeated triples
are an error. The band limit is the largest ``l`` present.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from pathlib import Path

import numpy as np
import scipy.linalg
from numpy.typing import ArrayLike

from . import _harmonics
from .sphere import FloatArray, _readonly, normalize, project_tangent

SQRT_4PI = math.sqrt(4.0 * math.pi)


def n_coeffs(L: int) -> int:
    return (L + 1) * (L + 1)


def index(l: int, m: int) -> int:
    if abs(m) > l:
        raise ValueError(f"|m| must not exceed l (got l={l}, m={m})")
    return l * l + l + m


def band_limit(n: int) -> int:
    L = math.isqrt(n) - 1
    if (L + 1) ** 2 != n:
        raise ValueError(f"{n} is not a square coefficient count")
    return L


def degrees(L: int) -> FloatArray:
    """Degree ``l`` of every coefficient slot up to band limit ``L``."""
    return np.repeat(np.arange(L + 1), 2 * np.arange(L + 1) + 1).astype(float)


def pad(coeffs: ArrayLike, L: int) -> FloatArray:
    """Zero-pad (or reject truncation of) a coefficient vector to band ``L``."""
    c = np.asarray(coeffs, dtype=float)
    K = n_coeffs(L)
    if c.size > K:
        if np.any(c[K:] != 0.0):
            raise ValueError("cannot truncate nonzero coefficients")
        return c[:K].copy()
    out = np.zeros(K)
    out[: c.size] = c
    return out


@dataclass(frozen=True, eq=False)
class ConformalFactor:
    """Band-limited conformal factor ``rho``; the metric is ``exp(2 rho) g0``."""

    coeffs: FloatArray

    def __post_init__(self) -> None:
        c = np.atleast_1d(np.asarray(self.coeffs, dtype=float))
        band_limit(c.size)
        if not np.all(np.isfinite(c)):
            raise ValueError("conformal factor coefficients must be finite")
        object.__setattr__(self, "coeffs", _readonly(c))

    @property
    def L(self) -> int:
        return band_limit(self.coeffs.size)

    @property
    def is_zero(self) -> bool:
        return not np.any(self.coeffs)

    @property
    def is_constant(self) -> bool:
        return not np.any(self.coeffs[1:])

    @classmethod
    def zero(cls, L: int = 0) -> ConformalFactor:
        return cls(np.zeros(n_coeffs(L)))

    @classmethod
    def constant(cls, c: float, L: int = 0) -> ConformalFactor:
        out = np.zeros(n_coeffs(L))
        out[0] = c * SQRT_4PI
        return cls(out)

    @classmethod
    def from_triples(cls, triples) -> ConformalFactor:
        triples = [(int(l), int(m), float(c)) for l, m, c in triples]
        L = max((l for l, _, _ in triples), default=0)
        out = np.zeros(n_coeffs(L))
        seen = set()
        for l, m, c in triples:
            if l < 0:
                raise ValueError(f"negative degree l={l}")
            if abs(m) > l:
                raise ValueError(f"|m| must not exceed l, got ({l}, {m})")
            if (l, m) in seen:
                raise ValueError(f"duplicate coefficient ({l}, {m})")
            seen.add((l, m))
            out[index(l, m)] = c
        return cls(out)

    @classmethod
    def from_text(cls, text: str) -> ConformalFactor:
        triples = []
        for lineno, raw in enumerate(text.splitlines(), 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.split()
            if len(parts) != 3:
                raise ValueError(f"line {lineno}: expected 'l m c', got {raw!r}")
            try:
                triples.append((int(parts[0]), int(parts[1]), float(parts[2])))
            except ValueError as exc:
                raise ValueError(f"line {lineno}: {exc}") from None
        return cls.from_triples(triples)

    @classmethod
    def load(cls, path: str | Path) -> ConformalFactor:
        return cls.from_text(Path(path).read_text())

    def to_text(self) -> str:
        lines = ["# l m coefficient (real orthonormal harmonics, no Condon-Shortley phase)"]
        for l in range(self.L + 1):
            for m in range(-l, l + 1):
                c = self.coeffs[index(l, m)]
                if c != 0.0:
                    lines.append(f"{l} {m} {float(c)!r}")
        return "\n".join(lines) + "\n"

    def triples(self) -> list[tuple[int, int, float]]:
        return [
            (l, m, float(self.coeffs[index(l, m)]))
            for l in range(self.L + 1)
            for m in range(-l, l + 1)
        ]

    def shifted(self, c: float) -> ConformalFactor:
        """The factor ``rho + c`` (a homothety of the metric)."""
        out = self.coeffs.copy()
        out[0] += c * SQRT_4PI
        return ConformalFactor(out)

    def scaled(self, s: float) -> ConformalFactor:
        return ConformalFactor(s * self.coeffs)

    def __call__(self, p: ArrayLike):
        return evaluate(self, p)


def random_factor(
    L: int, amplitude: float, rng: np.random.Generator, axisymmetric: bool = False
) -> ConformalFactor:
    """Random zero-mean factor of band ``L`` with sup-norm ``amplitude``.

    Coefficients decay like ``1/l`` before rescaling; the sup norm is measured
    on a dense Gauss grid.
    """
    if L < 1:
        raise ValueError("random factors need L >= 1")
    c = rng.standard_normal(n_coeffs(L)) / np.maximum(degrees(L), 1.0)
    c[0] = 0.0
    if axisymmetric:
        keep = np.zeros_like(c, dtype=bool)
        for l in range(L + 1):
            keep[index(l, 0)] = True
        c[~keep] = 0.0
    grid = gauss_grid(4 * L + 8)
    sup = np.max(np.abs(basis(grid.nodes, L) @ c))
    return ConformalFactor(c * (amplitude / sup))


# ---------------------------------------------------------------- evaluation


def basis(points: ArrayLike, L: int) -> FloatArray:
    """Real harmonic basis values, shape ``(N, (L+1)**2)``."""
    p = np.ascontiguousarray(np.asarray(points, dtype=float).reshape(-1, 3))
    return _harmonics.basis(p, L)


def _coeff_array(f) -> FloatArray:
    if isinstance(f, ConformalFactor):
        return f.coeffs
    return np.asarray(f, dtype=float)


def field_derivatives(coeffs: ArrayLike, points: ArrayLike, order: int = 1):
    """Ambient value/gradient/Hessian of one or more fields.

    ``coeffs`` is ``(K,)`` or ``(F, K)``; ``points`` is ``(..., 3)``. Returns
    arrays shaped ``(..., F)``, ``(..., F, 3)``, ``(..., F, 3, 3)`` (the ``F``
    axis is dropped for 1-d ``coeffs``).
    """
    c = np.asarray(coeffs, dtype=float)
    single = c.ndim == 1
    c2 = np.ascontiguousarray(np.atleast_2d(c))
    L = band_limit(c2.shape[1])
    p = np.asarray(points, dtype=float)
    lead = p.shape[:-1]
    flat = np.ascontiguousarray(p.reshape(-1, 3))
    val, grad, hess = _harmonics.fields(flat, c2, L, order)
    F = c2.shape[0]
    val = val.reshape(*lead, F)
    grad = grad.reshape(*lead, F, 3)
    hess = hess.reshape(*lead, F, 3, 3)
    if single:
        return val[..., 0], grad[..., 0, :], hess[..., 0, :, :]
    return val, grad, hess


def evaluate(rho, p: ArrayLike):
    """Value of a band-limited field at sphere point(s) ``p``."""
    p = np.asarray(p, dtype=float)
    val, _, _ = field_derivatives(_coeff_array(rho), p, order=0)
    return float(val) if p.ndim == 1 else val


def surface_gradient(rho, p: ArrayLike) -> FloatArray:
    """Round-metric surface gradient, tangent at ``p``."""
    p = normalize(np.asarray(p, dtype=float))
    _, grad, _ = field_derivatives(_coeff_array(rho), p, order=1)
    return project_tangent(p, grad)


def inv_laplacian_round(coeffs: ArrayLike) -> FloatArray:
    """Coefficients of the zero-mean inverse of the round Laplacian."""
    c = np.asarray(_coeff_array(coeffs), dtype=float)
    ll = degrees(band_limit(c.size))
    out = np.zeros_like(c)
    out[1:] = -c[1:] / (ll[1:] * (ll[1:] + 1.0))
    return out


def laplacian_round(coeffs: ArrayLike) -> FloatArray:
    c = np.asarray(_coeff_array(coeffs), dtype=float)
    ll = degrees(band_limit(c.size))
    return -ll * (ll + 1.0) * c


# ---------------------------------------------------------------- quadrature


@dataclass(frozen=True, eq=False)
class QuadratureGrid:
    """Gauss-Legendre (in cos theta) x uniform (in phi) product rule."""

    nodes: FloatArray
    weights: FloatArray
    degree: int

    @property
    def size(self) -> int:
        return self.weights.size

    def integrate(self, values: ArrayLike) -> float | FloatArray:
        return np.tensordot(self.weights, np.asarray(values, dtype=float), axes=(0, 0))


@lru_cache(maxsize=32)
def gauss_grid(degree: int) -> QuadratureGrid:
    """Product rule integrating polynomials of total degree ``<= degree`` exactly."""
    if degree < 0:
        raise ValueError("degree must be non-negative")
    n_theta = degree // 2 + 1
    n_phi = degree + 1
    z, wz = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * np.pi * np.arange(n_phi) / n_phi
    Z, PHI = np.meshgrid(z, phi, indexing="ij")
    R = np.sqrt(1.0 - Z * Z)
    nodes = np.stack([R * np.cos(PHI), R * np.sin(PHI), Z], axis=-1).reshape(-1, 3)
    weights = (wz[:, None] * np.full(n_phi, 2.0 * np.pi / n_phi)[None, :]).reshape(-1)
    return QuadratureGrid(_readonly(nodes), _readonly(weights), degree)


def project(values: ArrayLike, grid: QuadratureGrid, L: int) -> FloatArray:
    """Harmonic coefficients up to band ``L`` of samples taken on ``grid``."""
    if grid.degree < 2 * L:
        raise ValueError(f"grid degree {grid.degree} too low for band {L}")
    return basis(grid.nodes, L).T @ (grid.weights * np.asarray(values, dtype=float))


def aux_band(rho: ConformalFactor) -> int:
    """Band limit used for ``exp(2 rho)`` and derived fields."""
    return 2 * rho.L + 8


def exp2rho_coeffs(rho: ConformalFactor, L_aux: int | None = None) -> FloatArray:
    """Projection of ``exp(2 rho)`` onto harmonics up to ``L_aux``."""
    L_aux = aux_band(rho) if L_aux is None else L_aux
    grid = gauss_grid(2 * L_aux)
    vals = np.exp(2.0 * np.atleast_1d(evaluate(rho, grid.nodes)))
    return project(vals, grid, L_aux)


def volume(rho: ConformalFactor, grid: QuadratureGrid | None = None) -> float:
    """Area of the sphere under ``exp(2 rho) g0``."""
    if rho.is_constant:
        return 4.0 * np.pi * math.exp(2.0 * rho.coeffs[0] / SQRT_4PI)
    grid = gauss_grid(2 * aux_band(rho)) if grid is None else grid
    vals = np.exp(2.0 * np.atleast_1d(evaluate(rho, grid.nodes)))
    return float(grid.integrate(vals))


# ---------------------------------------------------------------- spectrum


@dataclass(frozen=True)
class SpectrumReport:
    eigenvalues: FloatArray
    count: int
    L_solve: int


def mass_matrix(rho: ConformalFactor, L_solve: int) -> FloatArray:
    """Galerkin matrix of multiplication by ``exp(2 rho)`` on band ``L_solve``."""
    if rho.is_constant:
        return math.exp(2.0 * rho.coeffs[0] / SQRT_4PI) * np.eye(n_coeffs(L_solve))
    grid = gauss_grid(2 * L_solve + 2 * aux_band(rho))
    Y = basis(grid.nodes, L_solve)
    w = grid.weights * np.exp(2.0 * np.atleast_1d(evaluate(rho, grid.nodes)))
    return (Y * w[:, None]).T @ Y


def laplace_spectrum(rho: ConformalFactor, k: int, L_solve: int) -> SpectrumReport:
    """Smallest ``k`` eigenvalues of ``-Lap_g`` via a Galerkin generalized problem."""
    K = n_coeffs(L_solve)
    if not 1 <= k <= K:
        raise ValueError(f"k must be in [1, {K}] for L_solve={L_solve}")
    M = mass_matrix(rho, L_solve)
    if np.max(np.abs(M - M.T)) > 1e-10 * np.max(np.abs(M)):
        raise ValueError("mass matrix is not symmetric; quadrature is insufficient")
    M = 0.5 * (M + M.T)
    try:
        scipy.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        raise ValueError("mass matrix is not positive definite; quadrature is insufficient") from None
    ll = degrees(L_solve)
    S = np.diag(ll * (ll + 1.0))
    lam = scipy.linalg.eigh(S, M, eigvals_only=True, subset_by_index=[0, k - 1])
    return SpectrumReport(_readonly(np.sort(lam)), k, L_solve)
