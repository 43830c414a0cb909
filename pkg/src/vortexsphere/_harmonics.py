"""Compiled kernels for real orthonormal spherical harmonics.

Convention (used everywhere in the package)::

    Y_{l,0}   = q_l^0(z)
    Y_{l,m}   = sqrt(2) q_l^m(z) Re (x + i y)^m      (m > 0)
    Y_{l,-m}  = sqrt(2) q_l^m(z) Im (x + i y)^m      (m > 0)

with ``q_l^m(z) = sqrt((2l+1)/(4 pi) (l-m)!/(l+m)!) d^m P_l / dz^m`` and no
Condon-Shortley phase. The right-hand sides are polynomials in (x, y, z), so
their Euclidean gradient and Hessian are smooth everywhere (no pole
singularities); projecting the gradient onto the tangent plane gives the
surface gradient. Coefficient index of ``(l, m)`` is ``l*l + l + m``.
"""

from __future__ import annotations

import math

import numba
import numpy as np

_INV_SQRT_4PI = 1.0 / math.sqrt(4.0 * math.pi)
_SQRT2 = math.sqrt(2.0)


@numba.njit(cache=True)
def _legendre_columns(z, L, m, q, dq, ddq):
    """Fill ``q[l], dq[l], ddq[l]`` for fixed order ``m`` and l = m..L."""
    qmm = _INV_SQRT_4PI
    for k in range(1, m + 1):
        qmm *= math.sqrt((2.0 * k + 1.0) / (2.0 * k))
    q[m] = qmm
    dq[m] = 0.0
    ddq[m] = 0.0
    if m + 1 <= L:
        c = math.sqrt(2.0 * m + 3.0)
        q[m + 1] = c * z * qmm
        dq[m + 1] = c * qmm
        ddq[m + 1] = 0.0
    for l in range(m + 2, L + 1):
        a = math.sqrt((4.0 * l * l - 1.0) / (l * l - m * m))
        b = math.sqrt(((l - 1.0) ** 2 - m * m) / (4.0 * (l - 1.0) ** 2 - 1.0))
        q[l] = a * (z * q[l - 1] - b * q[l - 2])
        dq[l] = a * (q[l - 1] + z * dq[l - 1] - b * dq[l - 2])
        ddq[l] = a * (2.0 * dq[l - 1] + z * ddq[l - 1] - b * ddq[l - 2])


@numba.njit(cache=True)
def basis(points, L):
    """Values ``Y[p, k]`` at points of shape ``(N, 3)``."""
    N = points.shape[0]
    K = (L + 1) * (L + 1)
    out = np.zeros((N, K))
    q = np.zeros(L + 2)
    dq = np.zeros(L + 2)
    ddq = np.zeros(L + 2)
    for p in range(N):
        x = points[p, 0]
        y = points[p, 1]
        z = points[p, 2]
        re = 1.0
        im = 0.0
        for m in range(L + 1):
            _legendre_columns(z, L, m, q, dq, ddq)
            for l in range(m, L + 1):
                if m == 0:
                    out[p, l * l + l] = q[l]
                else:
                    out[p, l * l + l + m] = _SQRT2 * q[l] * re
                    out[p, l * l + l - m] = _SQRT2 * q[l] * im
            re, im = re * x - im * y, re * y + im * x
    return out


@numba.njit(cache=True)
def fields(points, coeffs, L, order):
    """Evaluate F band-limited fields and their ambient derivatives.

    ``coeffs`` has shape ``(F, (L+1)**2)``. Returns ``(val, grad, hess)`` with
    shapes ``(N, F)``, ``(N, F, 3)``, ``(N, F, 3, 3)``; the derivative arrays
    are zero unless ``order`` >= 1 (resp. 2). Derivatives are those of the
    polynomial extension into R^3.
    """
    N = points.shape[0]
    F = coeffs.shape[0]
    val = np.zeros((N, F))
    grad = np.zeros((N, F, 3))
    hess = np.zeros((N, F, 3, 3))
    q = np.zeros(L + 2)
    dq = np.zeros(L + 2)
    ddq = np.zeros(L + 2)
    for p in range(N):
        x = points[p, 0]
        y = points[p, 1]
        z = points[p, 2]
        # (x + iy)^m, (x + iy)^(m-1), (x + iy)^(m-2)
        re0 = 1.0
        im0 = 0.0
        re1 = 0.0
        im1 = 0.0
        re2 = 0.0
        im2 = 0.0
        for m in range(L + 1):
            _legendre_columns(z, L, m, q, dq, ddq)
            for l in range(m, L + 1):
                if m == 0:
                    # C = 1
                    for f in range(F):
                        c = coeffs[f, l * l + l]
                        if c == 0.0:
                            continue
                        val[p, f] += c * q[l]
                        if order >= 1:
                            grad[p, f, 2] += c * dq[l]
                        if order >= 2:
                            hess[p, f, 2, 2] += c * ddq[l]
                    continue
                for sgn in range(2):
                    if sgn == 0:
                        idx = l * l + l + m
                        C = re0
                        Cx = m * re1
                        Cy = -m * im1
                        Cxx = m * (m - 1) * re2
                        Cxy = -m * (m - 1) * im2
                        Cyy = -m * (m - 1) * re2
                    else:
                        idx = l * l + l - m
                        C = im0
                        Cx = m * im1
                        Cy = m * re1
                        Cxx = m * (m - 1) * im2
                        Cxy = m * (m - 1) * re2
                        Cyy = -m * (m - 1) * im2
                    for f in range(F):
                        c = coeffs[f, idx]
                        if c == 0.0:
                            continue
                        c = c * _SQRT2
                        val[p, f] += c * q[l] * C
                        if order >= 1:
                            grad[p, f, 0] += c * q[l] * Cx
                            grad[p, f, 1] += c * q[l] * Cy
                            grad[p, f, 2] += c * dq[l] * C
                        if order >= 2:
                            hxx = c * q[l] * Cxx
                            hxy = c * q[l] * Cxy
                            hyy = c * q[l] * Cyy
                            hxz = c * dq[l] * Cx
                            hyz = c * dq[l] * Cy
                            hzz = c * ddq[l] * C
                            hess[p, f, 0, 0] += hxx
                            hess[p, f, 0, 1] += hxy
                            hess[p, f, 1, 0] += hxy
                            hess[p, f, 1, 1] += hyy
                            hess[p, f, 0, 2] += hxz
                            hess[p, f, 2, 0] += hxz
                            hess[p, f, 1, 2] += hyz
                            hess[p, f, 2, 1] += hyz
                            hess[p, f, 2, 2] += hzz
            # advance the complex powers by one order
            re2, im2 = re1, im1
            re1, im1 = re0, im0
            re0, im0 = re0 * x - im0 * y, re0 * y + im0 * x
    return val, grad, hess


@numba.njit(cache=True)
def vortex_velocity(p, g, coeffs, L, out):
    """Velocities ``(grad_i H x s_i) / (G_i exp(2 rho(s_i)))`` written into ``out``.

    ``coeffs`` stacks the n one-body coefficient rows followed by rho itself;
    ``L == 0`` with zero rows gives the round sphere.
    """
    n = p.shape[0]
    val, grad, _ = fields(p, coeffs, L, 1)
    for i in range(n):
        gx = grad[i, i, 0]
        gy = grad[i, i, 1]
        gz = grad[i, i, 2]
        for j in range(n):
            if j == i:
                continue
            dx = p[i, 0] - p[j, 0]
            dy = p[i, 1] - p[j, 1]
            dz = p[i, 2] - p[j, 2]
            w = -g[i] * g[j] / (2.0 * math.pi * (dx * dx + dy * dy + dz * dz))
            gx += w * dx
            gy += w * dy
            gz += w * dz
        s = 1.0 / (g[i] * math.exp(2.0 * val[i, n]))
        out[i, 0] = s * (gy * p[i, 2] - gz * p[i, 1])
        out[i, 1] = s * (gz * p[i, 0] - gx * p[i, 2])
        out[i, 2] = s * (gx * p[i, 1] - gy * p[i, 0])


@numba.njit(cache=True)
def _normalize_rows(a):
    for i in range(a.shape[0]):
        r = math.sqrt(a[i, 0] ** 2 + a[i, 1] ** 2 + a[i, 2] ** 2)
        a[i, 0] /= r
        a[i, 1] /= r
        a[i, 2] /= r


@numba.njit(cache=True)
def _min_chord(p):
    n = p.shape[0]
    best = np.inf
    for i in range(n):
        for j in range(i + 1, n):
            d = math.sqrt((p[i, 0] - p[j, 0]) ** 2 + (p[i, 1] - p[j, 1]) ** 2 + (p[i, 2] - p[j, 2]) ** 2)
            if d < best:
                best = d
    return best


@numba.njit(cache=True)
def midpoint_stage(p, g, coeffs, L, h, tol, maxit, out):
    """One spherical implicit midpoint step; returns the iteration count or -1."""
    n = p.shape[0]
    k = np.empty((n, 3))
    kn = np.empty((n, 3))
    m = np.empty((n, 3))
    vortex_velocity(p, g, coeffs, L, k)
    for it in range(maxit):
        for i in range(n):
            for c in range(3):
                m[i, c] = 2.0 * p[i, c] + h * k[i, c]
        _normalize_rows(m)
        vortex_velocity(m, g, coeffs, L, kn)
        err = 0.0
        for i in range(n):
            for c in range(3):
                e = abs(kn[i, c] - k[i, c])
                if e > err:
                    err = e
                k[i, c] = kn[i, c]
        if err * abs(h) <= tol:
            for i in range(n):
                for c in range(3):
                    out[i, c] = p[i, c] + h * k[i, c]
            _normalize_rows(out)
            return it + 1
    return -1


@numba.njit(cache=True)
def run_midpoint(p0, g, coeffs, L, h, nsteps, weights, tol, maxit, floor, log_every):
    """Composed midpoint integration. Returns (states, last_step, status).

    status 0 = ok, 1 = collision floor, 2 = stage solver failure.
    """
    n = p0.shape[0]
    nlog = nsteps // log_every + 2
    states = np.empty((nlog, n, 3))
    p = p0.copy()
    q = np.empty((n, 3))
    states[0] = p
    c = 1
    for s in range(1, nsteps + 1):
        for w in weights:
            if midpoint_stage(p, g, coeffs, L, w * h, tol, maxit, q) < 0:
                return states[:c], s, 2
            p[:, :] = q
        if n > 1 and _min_chord(p) < floor:
            return states[:c], s, 1
        if s % log_every == 0 or s == nsteps:
            states[c] = p
            c += 1
    return states[:c], nsteps, 0
