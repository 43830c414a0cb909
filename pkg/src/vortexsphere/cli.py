"""Command-line front end.

Every subcommand reads one YAML config (schema in ``docs/formats.md``) and
writes its artifacts to ``--out``. Exit codes: 0 success, 1 invalid config or
input, 2 a module reported an error status (collision, solver failure,
unconverged orbit, inconclusive contact check).
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np
import yaml

from . import __version__, bands, contact, dynamics, equilibria, invariants, orbits, spectral
from .hamiltonian import MetricContext
from .sphere import COLLISION_EPS, min_chord, normalize, random_configuration

COMMANDS = ("simulate", "fixed-points", "vorticity-report", "energy-band", "orbit", "contact", "spectrum", "plot")
TOP_KEYS = {"seed", "vorticities", "conformal_factor", *(c.replace("-", "_") for c in COMMANDS)}


class ConfigError(ValueError):
    """Invalid configuration; the message starts with the offending field path."""


class ModuleFailure(RuntimeError):
    pass


# ---------------------------------------------------------------- validation


def _fail(path: str, msg: str):
    raise ConfigError(f"{path}: {msg}")


def _mapping(value, path: str, allowed: set[str]) -> dict:
    if value is None:
        return {}
    if not isinstance(value, dict):
        _fail(path, "expected a mapping")
    for key in value:
        if key not in allowed:
            _fail(f"{path}.{key}" if path else str(key), f"unknown key (allowed: {', '.join(sorted(allowed))})")
    return value


def _number(sec: dict, key: str, path: str, default=None, positive=False, nonneg=False) -> float:
    v = sec.get(key, default)
    p = f"{path}.{key}" if path else key
    if v is None:
        _fail(p, "required")
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        _fail(p, f"expected a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        _fail(p, "must be finite")
    if positive and not v > 0:
        _fail(p, f"must be positive, got {v}")
    if nonneg and v < 0:
        _fail(p, f"must be non-negative, got {v}")
    return v


def _integer(sec: dict, key: str, path: str, default=None, minimum: int | None = None) -> int:
    v = sec.get(key, default)
    p = f"{path}.{key}" if path else key
    if v is None:
        _fail(p, "required")
    if isinstance(v, bool) or not isinstance(v, int):
        _fail(p, f"expected an integer, got {v!r}")
    if minimum is not None and v < minimum:
        _fail(p, f"must be >= {minimum}, got {v}")
    return v


def _bool(sec: dict, key: str, path: str, default: bool) -> bool:
    v = sec.get(key, default)
    if not isinstance(v, bool):
        _fail(f"{path}.{key}", f"expected true or false, got {v!r}")
    return v


def _number_list(v, path: str, positive=False) -> list[float]:
    if not isinstance(v, list) or not v:
        _fail(path, "expected a non-empty list of numbers")
    return [_number({"v": x}, "v", f"{path}[{i}]", positive=positive) for i, x in enumerate(v)]


def _points(v, path: str, n: int) -> np.ndarray:
    if not isinstance(v, list) or len(v) != n:
        _fail(path, f"expected a list of {n} points")
    rows = []
    for i, row in enumerate(v):
        if not isinstance(row, list) or len(row) != 3:
            _fail(f"{path}[{i}]", "expected [x, y, z]")
        rows.append([_number({"v": c}, "v", f"{path}[{i}]") for c in row])
    p = np.array(rows)
    if np.any(np.linalg.norm(p, axis=1) == 0):
        _fail(path, "points must be nonzero")
    p = normalize(p)
    if n > 1 and min_chord(p) <= COLLISION_EPS:
        _fail(path, "two points coincide")
    return p


def parse_vorticities(v) -> tuple[np.ndarray, list]:
    """Float array plus the exact values (``Fraction`` for ints and ``"p/q"`` strings)."""
    if not isinstance(v, list) or not v:
        _fail("vorticities", "expected a non-empty list")
    exact, floats = [], []
    for i, x in enumerate(v):
        p = f"vorticities[{i}]"
        if isinstance(x, bool):
            _fail(p, f"expected a number, got {x!r}")
        if isinstance(x, int):
            q = Fraction(x)
        elif isinstance(x, str):
            try:
                q = Fraction(x.strip())
            except ValueError:
                _fail(p, f"expected a number or 'p/q', got {x!r}")
        elif isinstance(x, float):
            if not math.isfinite(x):
                _fail(p, "must be finite")
            q = x
        else:
            _fail(p, f"expected a number, got {x!r}")
        if q == 0:
            _fail(p, "must be nonzero")
        exact.append(q)
        floats.append(float(q))
    return np.array(floats), exact


def parse_conformal_factor(v, seed: int, base: Path) -> spectral.ConformalFactor:
    path = "conformal_factor"
    sec = _mapping(v, path, {"file", "coefficients", "random", "shift"})
    sources = [k for k in ("file", "coefficients", "random") if k in sec]
    if len(sources) > 1:
        _fail(path, f"give exactly one of file, coefficients, random (got {', '.join(sources)})")
    if not sources:
        rho = spectral.ConformalFactor.zero()
    elif "file" in sec:
        f = sec["file"]
        if not isinstance(f, str):
            _fail(f"{path}.file", "expected a path")
        fp = (base / f) if not Path(f).is_absolute() else Path(f)
        if not fp.exists():
            _fail(f"{path}.file", f"no such file {str(fp)!r}")
        try:
            rho = spectral.ConformalFactor.load(fp)
        except ValueError as exc:
            _fail(f"{path}.file", str(exc))
    elif "coefficients" in sec:
        triples = sec["coefficients"]
        if not isinstance(triples, list):
            _fail(f"{path}.coefficients", "expected a list of [l, m, c]")
        for i, t in enumerate(triples):
            ok = isinstance(t, list) and len(t) == 3 and all(isinstance(a, int) and not isinstance(a, bool) for a in t[:2])
            if not ok or isinstance(t[2], bool) or not isinstance(t[2], (int, float)):
                _fail(f"{path}.coefficients[{i}]", f"expected [l, m, c], got {t!r}")
            if abs(t[1]) > t[0]:
                _fail(f"{path}.coefficients[{i}]", f"|m| must not exceed l, got {t!r}")
        try:
            rho = spectral.ConformalFactor.from_triples(triples)
        except ValueError as exc:
            _fail(f"{path}.coefficients", str(exc))
    else:
        p = f"{path}.random"
        r = _mapping(sec["random"], p, {"L", "amplitude", "axisymmetric", "seed"})
        L = _integer(r, "L", p, minimum=1)
        amp = _number(r, "amplitude", p, nonneg=True)
        rng = np.random.default_rng(_integer(r, "seed", p, default=seed))
        rho = spectral.random_factor(L, amp, rng, axisymmetric=_bool(r, "axisymmetric", p, False))
    if "shift" in sec:
        rho = rho.shifted(_number(sec, "shift", path))
    return rho


# ---------------------------------------------------------------- run context


class Run:
    """Parsed config plus output helpers shared by the subcommands."""

    def __init__(self, command: str, cfg: dict, out: Path, base: Path):
        self.command = command
        self.cfg = _mapping(cfg, "", TOP_KEYS)
        self.out = out
        self.base = base
        self.seed = _integer(self.cfg, "seed", "", default=0, minimum=0)
        self.section = _mapping(self.cfg.get(command.replace("-", "_")), command.replace("-", "_"), SECTION_KEYS[command])
        self.spath = command.replace("-", "_")
        self._rho = None
        self._ctx = None
        canon = json.dumps(self.cfg, sort_keys=True, separators=(",", ":"), default=str)
        self.config_hash = hashlib.sha256(canon.encode()).hexdigest()

    @property
    def header(self) -> dict:
        return {
            "tool": "vortexsphere",
            "version": __version__,
            "command": self.command,
            "config_sha256": self.config_hash,
            "seed": self.seed,
        }

    def header_lines(self) -> list[str]:
        return [f"{k}: {v}" for k, v in self.header.items()]

    def gammas(self) -> tuple[np.ndarray, list]:
        if "vorticities" not in self.cfg:
            _fail("vorticities", "required")
        return parse_vorticities(self.cfg["vorticities"])

    @property
    def rho(self) -> spectral.ConformalFactor:
        if self._rho is None:
            self._rho = parse_conformal_factor(self.cfg.get("conformal_factor"), self.seed, self.base)
        return self._rho

    @property
    def ctx(self) -> MetricContext:
        if self._ctx is None:
            self._ctx = MetricContext.from_factor(self.rho)
        return self._ctx

    def path(self, suffix: str) -> Path:
        self.out.mkdir(parents=True, exist_ok=True)
        name = self.section.get("output", self.spath)
        if not isinstance(name, str) or not name or "/" in name:
            _fail(f"{self.spath}.output", "expected a plain file stem")
        return self.out / f"{name}{suffix}"

    def write_json(self, payload: dict, suffix: str = ".json") -> Path:
        p = self.path(suffix)
        p.write_text(json.dumps({"header": self.header, **payload}, indent=2, default=_jsonable) + "\n")
        return p


def _exact(x):
    """Integers stay numbers, other fractions become ``"p/q"`` strings."""
    if isinstance(x, Fraction):
        return x.numerator if x.denominator == 1 else str(x)
    return x


def _jsonable(x):
    if isinstance(x, np.ndarray):
        return x.tolist()
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Fraction):
        return str(x)
    raise TypeError(f"not serializable: {type(x).__name__}")


SECTION_KEYS: dict[str, set[str]] = {
    "simulate": {"output", "initial", "min_separation", "T", "dt", "method", "newton_tol", "max_newton_iters",
                 "collision_floor", "log_every", "cluster_eps"},
    "fixed-points": {"output", "starts", "newton_tol", "max_iter", "dedup_tol", "min_start_separation"},
    "vorticity-report": {"output", "tol", "k_eigs", "L_solve", "match_tol"},
    "energy-band": {"output", "vortex", "grid_size", "starts", "polish", "level"},
    "orbit": {"output", "seed_type", "colatitude", "z", "T", "fixed_point", "mode", "amplitude", "tol",
              "max_iter", "dt", "samples", "choreography_tol"},
    "contact": {"output", "levels", "samples", "lie", "deformed"},
    "spectrum": {"output", "k", "L_solve"},
    "plot": {"output", "input", "view", "size"},
}


# ---------------------------------------------------------------- subcommands


def cmd_simulate(run: Run) -> int:
    s, p = run.section, run.spath
    g, _ = run.gammas()
    n = g.size
    if "initial" in s:
        z0 = _points(s["initial"], f"{p}.initial", n)
    else:
        sep = _number(s, "min_separation", p, default=0.2, positive=True)
        z0 = random_configuration(np.random.default_rng(run.seed), n, sep).points
    method = s.get("method", "midpoint")
    if method not in {m.value for m in dynamics.Method}:
        _fail(f"{p}.method", f"expected one of midpoint, midpoint4, rk4, got {method!r}")
    settings = dynamics.IntegratorSettings(
        dt=_number(s, "dt", p, default=1e-3, positive=True),
        method=method,
        newton_tol=_number(s, "newton_tol", p, default=1e-14, positive=True),
        max_newton_iters=_integer(s, "max_newton_iters", p, default=50, minimum=1),
        collision_floor=_number(s, "collision_floor", p, default=1e-8, positive=True),
        log_every=_integer(s, "log_every", p, default=1, minimum=1),
    )
    T = _number(s, "T", p, default=1.0)
    traj = dynamics.integrate(z0, g, run.ctx, settings, T)
    lines = run.header_lines() + [f"status: {traj.status.value}"]
    if traj.message:
        lines.append(f"message: {traj.message}")
    traj.to_csv(run.path(".csv"), lines)
    if "cluster_eps" in s:
        eps = _number(s, "cluster_eps", p, positive=True)
        events = equilibria.cluster_monitor(traj, g, eps)
        run.write_json({"eps": eps, "events": [{"time": e.time, "indices": list(e.indices), "value": e.value} for e in events]},
                       "_clusters.json")
    if traj.status is not dynamics.Status.OK:
        raise ModuleFailure(traj.message)
    return 0


def cmd_fixed_points(run: Run) -> int:
    s, p = run.section, run.spath
    g, _ = run.gammas()
    search = equilibria.find_fixed_points(
        g,
        run.ctx,
        starts=_integer(s, "starts", p, default=32, minimum=1),
        seed=run.seed,
        newton_tol=_number(s, "newton_tol", p, default=1e-10, positive=True),
        max_iter=_integer(s, "max_iter", p, default=60, minimum=1),
        dedup_tol=_number(s, "dedup_tol", p, default=1e-6, positive=True),
        min_start_separation=_number(s, "min_start_separation", p, default=0.2, positive=True),
    )
    search.to_json(run.path(".json"), run.header)
    return 0


def cmd_vorticity_report(run: Run) -> int:
    s, p = run.section, run.spath
    g, exact = run.gammas()
    tol = _number(s, "tol", p, default=invariants.DEFAULT_TOL, nonneg=True)
    positive = bool(np.all(g > 0))
    values = exact if all(isinstance(v, Fraction) for v in exact) else [float(v) for v in exact]
    out: dict[str, Any] = {"vorticities": [_exact(v) for v in exact], "tol": tol}
    if positive:
        com = invariants.commensurability(values, tol)
        out["commensurable"] = com.commensurable
        out["beta"] = _exact(com.beta)
        out["l"] = list(com.l)
        kap = invariants.kappa(values, tol)
        out["kappa"] = _exact(kap)
        out["thin"] = invariants.thin_table(values, tol)
        out["thin_warning"] = invariants.THIN_WARNING
    else:
        out["thin"] = None
        out["thin_note"] = "thinness and commensurability need positive vorticities"
    sums = equilibria.cluster_vorticity_sums(g)
    bad = [list(c.indices) for c in sums if c.degenerate]
    out["P1"] = {"status": "pass" if not bad else "fail", "degenerate_subsets": bad}
    k_eigs = _integer(s, "k_eigs", p, default=25, minimum=1)
    L_solve = s.get("L_solve")
    if L_solve is not None:
        L_solve = _integer(s, "L_solve", p, minimum=0)
    p3 = invariants.check_P3(g, run.ctx, k_eigs, L_solve, _number(s, "match_tol", p, default=1e-6, positive=True))
    out["P3"] = {
        "status": p3.status,
        "beta": list(p3.beta),
        "gamma_bar": p3.gamma_bar,
        "hits": list(p3.intersection),
        "covered_up_to": p3.covered_up_to,
    }
    out["volume"] = run.ctx.volume
    run.write_json(out)
    return 0


def cmd_energy_band(run: Run) -> int:
    s, p = run.section, run.spath
    g, _ = run.gammas()
    if np.any(g <= 0):
        _fail("vorticities", "the energy band needs positive vorticities")
    k = _integer(s, "vortex", p, default=0, minimum=0)
    if k >= g.size:
        _fail(f"{p}.vortex", f"index {k} out of range for {g.size} vortices")
    rep = bands.c1_c2(
        k,
        g,
        run.ctx,
        grid_size=_integer(s, "grid_size", p, default=2000, minimum=1),
        starts=_integer(s, "starts", p, default=16, minimum=1),
        seed=run.seed,
        polish=_bool(s, "polish", p, True),
    )
    rep.to_csv(run.path(".csv"), run.header_lines())
    extra = {}
    if "level" in s:
        c = _number(s, "level", p)
        sep = bands.separation_check(c, k, g, run.ctx, rep)
        extra["separation"] = None if sep is None else {
            "level": c, "point": sep.point.tolist(), "inner_value": sep.inner_value, "vacuous": sep.vacuous
        }
    run.write_json({**rep.to_dict(), "gap": rep.gap, **extra})
    return 0


def cmd_orbit(run: Run) -> int:
    s, p = run.section, run.spath
    g, _ = run.gammas()
    ctx = run.ctx
    kind = s.get("seed_type", "polygon")
    dt = _number(s, "dt", p, default=5e-3, positive=True)
    seed_info: dict[str, Any] = {"seed_type": kind}
    if kind == "polygon":
        col = _number(s, "colatitude", p, default=1.0, positive=True)
        if not col < math.pi:
            _fail(f"{p}.colatitude", "must be below pi")
        try:
            rel = orbits.polygon_relative_equilibrium(g, ctx, col)
        except ValueError as exc:
            _fail(p, str(exc))
        z, T = rel.z, rel.T
        seed_info.update(colatitude=col, omega=rel.omega)
    elif kind == "guess":
        z = _points(s.get("z"), f"{p}.z", g.size)
        T = _number(s, "T", p, positive=True)
    elif kind == "lyapunov":
        search = equilibria.find_fixed_points(g, ctx, starts=16, seed=run.seed)
        idx = _integer(s, "fixed_point", p, default=0, minimum=0)
        if idx >= len(search):
            raise ModuleFailure(f"only {len(search)} fixed points found, index {idx} requested")
        seeds = orbits.lyapunov_seeds(search[idx].z.points, g, ctx, _number(s, "amplitude", p, default=1e-2, positive=True))
        mode = _integer(s, "mode", p, default=0, minimum=0)
        if mode >= len(seeds):
            raise ModuleFailure(f"fixed point {idx} has {len(seeds)} elliptic modes, mode {mode} requested")
        z, T = seeds[mode].z, seeds[mode].T
        seed_info.update(fixed_point=idx, mode=mode, frequency=seeds[mode].frequency)
    else:
        _fail(f"{p}.seed_type", f"expected polygon, guess or lyapunov, got {kind!r}")
    orbit = orbits.refine_periodic(
        z, T, g, ctx,
        tol=_number(s, "tol", p, default=1e-9, positive=True),
        max_iter=_integer(s, "max_iter", p, default=12, minimum=1),
        dt=dt,
    )
    samples = _integer(s, "samples", p, default=64, minimum=4)
    summary: dict[str, Any] = {"seed": seed_info}
    if np.ptp(g) == 0:
        defect = orbits.choreography_defect(orbit, g, ctx, samples)
        summary["choreography"] = {
            "defect": defect,
            "passed": defect <= _number(s, "choreography_tol", p, default=1e-6, positive=True),
        }
    else:
        pr = orbits.perverse_test(orbit, g, ctx, samples=samples)
        summary["perverse"] = {
            "status": pr.status,
            "reduced_vorticities": list(pr.reduced_gammas),
            "quadratic_form": pr.quadratic_form,
            "pair_sum": pr.pair_sum,
            "expected": pr.expected,
            "min_grad_norm": pr.min_grad_norm,
        }
    orbits.write_orbit(orbit, g, ctx, run.path(".csv"), run.path(".json"), samples=4 * samples, header=run.header)
    doc = json.loads(run.path(".json").read_text())
    doc.update(summary)
    run.path(".json").write_text(json.dumps(doc, indent=2, default=_jsonable) + "\n")
    if not orbit.converged:
        raise ModuleFailure(f"orbit refinement did not converge ({orbit.status}, residual {orbit.residual:.3g})")
    return 0


def cmd_contact(run: Run) -> int:
    s, p = run.section, run.spath
    levels = _number_list(s.get("levels", [0.0, 0.2, 0.5]), f"{p}.levels")
    for i, a in enumerate(levels):
        if not a > contact.ALPHA_MIN:
            _fail(f"{p}.levels[{i}]", f"must exceed the dipole minimum {contact.ALPHA_MIN:.6f}")
    samples = _integer(s, "samples", p, default=1000, minimum=1)
    out: dict[str, Any] = {"levels": []}
    for a in levels:
        t = contact.transversality(a, samples, run.seed)
        out["levels"].append({"alpha": a, "min_margin": t.min_margin, "max_margin": t.max_margin,
                              "min_normalized": t.min_normalized, "passed": t.passed})
    lp = f"{p}.lie"
    lie = _mapping(s.get("lie", {}), lp, {"alpha", "samples", "t_steps"})
    alpha = _number(lie, "alpha", lp, default=0.0)
    if not alpha > contact.ALPHA_MIN:
        _fail(f"{lp}.alpha", "must exceed the dipole minimum")
    t_steps = _number_list(lie.get("t_steps", [1e-2, 1e-3, 1e-4]), f"{lp}.t_steps", positive=True)
    main = contact.lie_derivative_check(alpha, _integer(lie, "samples", lp, default=20, minimum=1), t_steps, run.seed)
    ctl = contact.lie_derivative_check(alpha, _integer(lie, "samples", lp, default=20, minimum=1), t_steps, run.seed, control=True)
    out["lie"] = main.to_dict()
    out["lie_control"] = ctl.to_dict()
    status = "pass" if all(l["passed"] for l in out["levels"]) else "fail"
    if "deformed" in s:
        dp = f"{p}.deformed"
        d = _mapping(s["deformed"], dp, {"c", "samples", "moser_steps"})
        rep = contact.deformed_contact_check(
            run.rho, _number(d, "c", dp), _integer(d, "samples", dp, default=1000, minimum=1), run.seed,
            _integer(d, "moser_steps", dp, default=32, minimum=1),
        )
        out["deformed"] = rep.to_dict()
        if rep.status == "inconclusive":
            status = "inconclusive"
    out["status"] = status
    run.write_json(out)
    if status == "inconclusive":
        raise ModuleFailure("deformed contact check inconclusive (Moser residual or level sampling)")
    return 0


def cmd_spectrum(run: Run) -> int:
    s, p = run.section, run.spath
    k = _integer(s, "k", p, default=25, minimum=1)
    rho = run.rho
    L_solve = s.get("L_solve")
    L_solve = max(math.isqrt(k - 1) + 4, rho.L + 4) if L_solve is None else _integer(s, "L_solve", p, minimum=0)
    if k > spectral.n_coeffs(L_solve):
        _fail(f"{p}.k", f"at most {spectral.n_coeffs(L_solve)} eigenvalues for L_solve={L_solve}")
    rep = spectral.laplace_spectrum(rho, k, L_solve)
    run.write_json({"k": k, "L_solve": L_solve, "eigenvalues": rep.eigenvalues.tolist(), "volume": spectral.volume(rho)})
    return 0


def orthographic_svg(states: np.ndarray, view=(1.0, 1.0, 1.0), size: int = 480) -> str:
    """SVG of vortex tracks seen from direction ``view``; far-side segments are dashed."""
    v = normalize(np.asarray(view, dtype=float))
    up = np.array([0.0, 0.0, 1.0]) if abs(v[2]) < 0.99 else np.array([0.0, 1.0, 0.0])
    ex = normalize(np.cross(up, v))
    ey = np.cross(v, ex)
    r = 0.45 * size
    c = size / 2.0
    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b", "#e377c2", "#17becf"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" viewBox="0 0 {size} {size}">',
        f'<circle cx="{c:.2f}" cy="{c:.2f}" r="{r:.2f}" fill="none" stroke="#444" stroke-width="1"/>',
    ]
    for i in range(states.shape[1]):
        P = states[:, i, :]
        X = c + r * (P @ ex)
        Y = c - r * (P @ ey)
        front = P @ v >= 0
        col = colors[i % len(colors)]
        for k in range(len(P) - 1):
            dash = "" if front[k] and front[k + 1] else ' stroke-dasharray="3,3" stroke-opacity="0.5"'
            parts.append(
                f'<line x1="{X[k]:.2f}" y1="{Y[k]:.2f}" x2="{X[k + 1]:.2f}" y2="{Y[k + 1]:.2f}" '
                f'stroke="{col}" stroke-width="1.2"{dash}/>'
            )
        parts.append(f'<circle cx="{X[-1]:.2f}" cy="{Y[-1]:.2f}" r="3.5" fill="{col}"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_plot(run: Run) -> int:
    s, p = run.section, run.spath
    src = s.get("input")
    if not isinstance(src, str):
        _fail(f"{p}.input", "required path to a trajectory CSV")
    fp = run.base / src if not Path(src).is_absolute() else Path(src)
    if not fp.exists():
        _fail(f"{p}.input", f"no such file {str(fp)!r}")
    _, states = dynamics.read_trajectory_csv(fp)
    view = _number_list(s.get("view", [1.0, 1.0, 1.0]), f"{p}.view")
    if len(view) != 3 or not any(view):
        _fail(f"{p}.view", "expected a nonzero [x, y, z]")
    svg = orthographic_svg(states, view, _integer(s, "size", p, default=480, minimum=16))
    meta = "".join(f"<!-- {line} -->\n" for line in run.header_lines())
    run.path(".svg").write_text(svg.replace("\n", "\n" + meta, 1))
    return 0


HANDLERS = {
    "simulate": cmd_simulate,
    "fixed-points": cmd_fixed_points,
    "vorticity-report": cmd_vorticity_report,
    "energy-band": cmd_energy_band,
    "orbit": cmd_orbit,
    "contact": cmd_contact,
    "spectrum": cmd_spectrum,
    "plot": cmd_plot,
}


def load_config(path: str | Path) -> dict:
    try:
        cfg = yaml.safe_load(Path(path).read_text())
    except OSError as exc:
        raise ConfigError(f"config: cannot read {str(path)!r} ({exc.strerror})") from None
    except yaml.YAMLError as exc:
        raise ConfigError(f"config: not valid YAML ({exc})") from None
    if cfg is None:
        return {}
    if not isinstance(cfg, dict):
        raise ConfigError("config: top level must be a mapping")
    return cfg


def run(command: str, config: dict, out: str | Path = ".", base: str | Path = ".") -> int:
    """Run one subcommand on an already loaded config; returns the exit status."""
    if command not in HANDLERS:
        raise ConfigError(f"command: unknown {command!r}")
    r = Run(command, config, Path(out), Path(base))
    return HANDLERS[command](r)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="vortexsphere", description="Point vortices on a conformally deformed sphere.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("config", help="YAML configuration file")
    parser.add_argument("-o", "--out", default=".", help="output directory (default: current)")
    args = parser.parse_args(argv)
    try:
        cfg = load_config(args.config)
        return run(args.command, cfg, args.out, Path(args.config).resolve().parent)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ModuleFailure as exc:
        print(f"failed: {exc}", file=sys.stderr)
        return 2
    except (ValueError, IndexError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
