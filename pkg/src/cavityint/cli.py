"""
Scenario runner.

    cavityint validate CONFIG
    cavityint run CONFIG [--output-dir D] [--threads T]

Configurations are YAML files (comments allowed). Every file needs a
``kind`` (direct_free_space, direct_layered, truncation_study,
mediator_sweep, traceout_validation) plus the kind-specific sections
described in the README; complete examples live in ``configs/``.

Exit codes: 0 success, 2 configuration error, 3 convergence failure
(partial outputs are kept and flagged in ``run_report.json``).
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import logging
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np
import yaml
from threadpoolctl import threadpool_limits

from . import __version__
from .core import CavityIntError, ConvergenceError, Emitter, channel_relative_error
from .direct import (
    DiscreteModeSet,
    SpectralCutoff,
    coupling_from_residue,
    coupling_from_spectrum,
    truncation_report,
)
from .greens import (
    Constant,
    Drude,
    FreeSpace,
    ImageMirror,
    Layer,
    Layered,
    LayerStack,
    MirrorSpec,
    PerfectConductor,
)
from .mediator import Mediator, planar_cavity_modes, resonance_sweep, scale_to_ratio
from .oracle import FockModel, traceout_error_sweep

log = logging.getLogger("cavityint")

EXIT_OK, EXIT_CONFIG, EXIT_CONVERGENCE = 0, 2, 3
KINDS = (
    "direct_free_space",
    "direct_layered",
    "truncation_study",
    "mediator_sweep",
    "traceout_validation",
)
COMPONENTS = ("xx", "xy", "xz", "yx", "yy", "yz", "zx", "zy", "zz")


class ConfigError(Exception):
    """Raised with a list of field-level messages."""

    def __init__(self, errors: list[str]):
        super().__init__("; ".join(errors))
        self.errors = errors


# ----------------------------------------------------------------------------
# validation and canonicalization


class _Checker:
    def __init__(self):
        self.errors: list[str] = []

    def fail(self, where: str, msg: str) -> None:
        self.errors.append(f"{where}: {msg}")

    def number(self, d: dict, key: str, where: str, *, default=None, positive=False, nonneg=False):
        val = d.get(key, default)
        if val is None:
            self.fail(f"{where}.{key}", "required")
            return None
        if isinstance(val, bool) or not isinstance(val, (int, float)) or not np.isfinite(val):
            self.fail(f"{where}.{key}", f"expected a finite number, got {val!r}")
            return None
        if positive and not val > 0:
            self.fail(f"{where}.{key}", "must be positive")
        if nonneg and val < 0:
            self.fail(f"{where}.{key}", "must be non-negative")
        return float(val)

    def vec(self, d: dict, key: str, where: str, *, default=None):
        val = d.get(key, default)
        if val is None:
            self.fail(f"{where}.{key}", "required")
            return None
        try:
            arr = np.asarray(val, dtype=float)
        except (TypeError, ValueError):
            self.fail(f"{where}.{key}", "expected three numbers")
            return None
        if arr.shape != (3,) or not np.all(np.isfinite(arr)):
            self.fail(f"{where}.{key}", "expected three finite numbers")
            return None
        return [float(x) for x in arr]

    def grid(self, d: dict, key: str, where: str, *, positive=True, nonneg=False, required=True):
        val = d.get(key)
        if val is None:
            if required:
                self.fail(f"{where}.{key}", "required")
            return None
        if isinstance(val, dict):
            lo = self.number(val, "start", f"{where}.{key}")
            hi = self.number(val, "stop", f"{where}.{key}")
            n = val.get("num")
            if not isinstance(n, int) or n < 1:
                self.fail(f"{where}.{key}.num", "expected a positive integer")
                return None
            if lo is None or hi is None:
                return None
            val = np.linspace(lo, hi, n).tolist()
        if not isinstance(val, list) or not val:
            self.fail(f"{where}.{key}", "expected a non-empty list or {start, stop, num}")
            return None
        out = []
        for k, x in enumerate(val):
            if isinstance(x, bool) or not isinstance(x, (int, float)) or not np.isfinite(x):
                self.fail(f"{where}.{key}[{k}]", f"expected a finite number, got {x!r}")
                continue
            if positive and not x > 0:
                self.fail(f"{where}.{key}[{k}]", "must be positive")
            if nonneg and x < 0:
                self.fail(f"{where}.{key}[{k}]", "must be non-negative")
            out.append(float(x))
        return out


def _emitters(c: _Checker, cfg: dict, key: str = "emitters", min_count: int = 1, extra=()):
    raw = cfg.get(key)
    if not isinstance(raw, list) or len(raw) < min_count:
        c.fail(key, f"expected a list of at least {min_count} entries")
        return []
    out = []
    for k, e in enumerate(raw):
        where = f"{key}[{k}]"
        if not isinstance(e, dict):
            c.fail(where, "expected a mapping with position and dipole")
            continue
        item = {
            "position": c.vec(e, "position", where),
            "dipole": c.vec(e, "dipole", where, default=[0.0, 0.0, 1.0]),
        }
        for name, kw in extra:
            item[name] = c.number(e, name, where, **kw)
        out.append(item)
    pos = [o["position"] for o in out]
    for i in range(len(pos)):
        for j in range(i + 1, len(pos)):
            if pos[i] is not None and pos[i] == pos[j]:
                c.fail(key, f"emitters {i} and {j} share the same position")
    return out


def _material(c: _Checker, m, where: str):
    if not isinstance(m, dict) or "kind" not in m:
        c.fail(where, "expected a mapping with a kind (pec, constant, drude)")
        return None
    kind = m["kind"]
    if kind == "pec":
        return {"kind": "pec"}
    if kind == "constant":
        return {"kind": "constant", "eps": c.number(m, "eps", where, positive=True)}
    if kind == "drude":
        return {
            "kind": "drude",
            "omega_p": c.number(m, "omega_p", where, positive=True),
            "gamma": c.number(m, "gamma", where, default=0.0, nonneg=True),
        }
    c.fail(f"{where}.kind", f"unknown material {kind!r}")
    return None


def _environment(c: _Checker, env):
    where = "environment"
    if env is None:
        return {"kind": "free_space"}
    if not isinstance(env, dict):
        c.fail(where, "expected a mapping")
        return None
    kind = env.get("kind")
    if kind == "free_space":
        return {"kind": "free_space"}
    if kind == "mirror":
        return {
            "kind": "mirror",
            "z0": c.number(env, "z0", where, default=0.0),
            "strength": c.number(env, "strength", where, default=1.0),
        }
    if kind == "half_space":
        return {
            "kind": "half_space",
            "material": _material(c, env.get("material"), f"{where}.material"),
            "z0": c.number(env, "z0", where, default=0.0),
        }
    if kind == "cavity":
        return {
            "kind": "cavity",
            "lower": _material(c, env.get("lower"), f"{where}.lower"),
            "upper": _material(c, env.get("upper"), f"{where}.upper"),
            "gap": c.number(env, "gap", where, positive=True),
            "z0": c.number(env, "z0", where, default=0.0),
        }
    if kind == "stack":
        layers = env.get("layers")
        if not isinstance(layers, list) or len(layers) < 2:
            c.fail(f"{where}.layers", "expected at least two layers")
            return None
        out = []
        for k, layer in enumerate(layers):
            lw = f"{where}.layers[{k}]"
            if not isinstance(layer, dict):
                c.fail(lw, "expected a mapping")
                continue
            item = {"material": _material(c, layer.get("material"), f"{lw}.material")}
            if 0 < k < len(layers) - 1:
                item["thickness"] = c.number(layer, "thickness", lw, positive=True)
            out.append(item)
        el = env.get("emitter_layer")
        if not isinstance(el, int) or not 0 <= el < len(layers):
            c.fail(f"{where}.emitter_layer", "expected a layer index")
        return {
            "kind": "stack",
            "layers": out,
            "emitter_layer": el,
            "z_bottom": c.number(env, "z_bottom", where, default=0.0),
        }
    c.fail(f"{where}.kind", f"unknown environment {kind!r}")
    return None


def _cutoff(c: _Checker, cfg: dict, rho_min: float | None):
    cut = cfg.get("cutoff")
    if not isinstance(cut, dict):
        c.fail("cutoff", "required mapping")
        return None
    kind = cut.get("kind", "gaussian")
    if kind not in ("gaussian", "hard"):
        c.fail("cutoff.kind", "expected gaussian or hard")
    out = {"kind": kind}
    if "omega_c" in cut:
        grid = c.grid(cut, "omega_c", "cutoff", positive=False)
        if grid is not None and any(not w > 0 for w in grid):
            c.fail("cutoff.omega_c", "cutoff frequency must be positive")
            return None
        if grid is not None and rho_min is not None:
            out["rho_over_lambda"] = [w * rho_min / (2 * np.pi) for w in grid]
    else:
        out["rho_over_lambda"] = c.grid(cut, "rho_over_lambda", "cutoff")
    return out


def _min_rho(emitters) -> float | None:
    pos = [e["position"] for e in emitters]
    if len(pos) < 2 or any(p is None for p in pos):
        return None
    p = np.array(pos)
    d = np.linalg.norm(p[:, None] - p[None], axis=-1)
    d = d[np.triu_indices(len(p), 1)]
    return float(d.min()) if np.all(d > 0) else None


def _modes(c: _Checker, cfg: dict, n_emitters: int):
    raw = cfg.get("modes")
    if not isinstance(raw, list) or not raw:
        c.fail("modes", "expected a non-empty list of modes")
        return None
    out = []
    for k, m in enumerate(raw):
        where = f"modes[{k}]"
        if not isinstance(m, dict):
            c.fail(where, "expected a mapping with frequency and fields")
            continue
        w = c.number(m, "frequency", where, positive=True)
        f = m.get("fields")
        try:
            arr = np.asarray(f, dtype=float)
        except (TypeError, ValueError):
            arr = None
        if arr is None or arr.shape != (n_emitters, 3):
            c.fail(f"{where}.fields", f"expected one 3-vector per emitter ({n_emitters} x 3)")
            continue
        out.append({"frequency": w, "fields": arr.tolist()})
    return out


def canonicalize(raw: Any) -> dict:
    """Validate a parsed configuration and return it with all defaults filled in."""
    c = _Checker()
    if not isinstance(raw, dict):
        raise ConfigError(["<root>: expected a mapping"])
    kind = raw.get("kind")
    if kind not in KINDS:
        raise ConfigError([f"kind: expected one of {', '.join(KINDS)}, got {kind!r}"])
    units = raw.get("units", "natural")
    if units != "natural":
        c.fail("units", "only natural units (hbar = c = eps0 = 1) are supported")
    out: dict[str, Any] = {"kind": kind, "units": "natural"}
    if "output_dir" in raw:
        out["output_dir"] = str(raw["output_dir"])

    if kind == "direct_free_space":
        em = _emitters(c, raw, min_count=2)
        out["emitters"] = em
        out["cutoff"] = _cutoff(c, raw, _min_rho(em))
    elif kind == "direct_layered":
        em = _emitters(c, raw, min_count=1)
        out["emitters"] = em
        out["environment"] = _environment(c, raw.get("environment"))
        method = raw.get("method", "residue")
        if method not in ("residue", "spectrum"):
            c.fail("method", "expected residue or spectrum")
        out["method"] = method
        if method == "spectrum":
            out["cutoff"] = _cutoff(c, raw, _min_rho(em))
    elif kind == "truncation_study":
        em = _emitters(c, raw, min_count=2)
        out["emitters"] = em
        out["environment"] = _environment(c, raw.get("environment"))
        cut = raw.get("cutoff", {})
        if not isinstance(cut, dict):
            c.fail("cutoff", "expected a mapping")
            cut = {}
        kind_c = cut.get("kind", "gaussian")
        if kind_c not in ("gaussian", "hard"):
            c.fail("cutoff.kind", "expected gaussian or hard")
        grid = c.grid(cut, "omega_grid", "cutoff", positive=False, nonneg=True, required=False)
        if grid is None and "rho_over_lambda" in cut:
            rho = _min_rho(em)
            rl = c.grid(cut, "rho_over_lambda", "cutoff")
            if rl is not None and rho is not None:
                grid = [2 * np.pi * x / rho for x in rl]
        if grid is None:
            c.fail("cutoff", "give omega_grid or rho_over_lambda")
        elif any(b < a for a, b in zip(grid, grid[1:])):
            c.fail("cutoff.omega_grid", "must be ascending")
        if kind_c == "gaussian" and grid is not None and any(not w > 0 for w in grid):
            c.fail("cutoff.omega_grid", "cutoff frequency must be positive")
        out["cutoff"] = {"kind": kind_c, "omega_grid": grid}
    elif kind == "mediator_sweep":
        meds = _emitters(
            c,
            raw,
            key="mediators",
            min_count=2,
            extra=(("coupling", {"default": 1.0}),),
        )
        out["mediators"] = meds
        cav = raw.get("cavity", {})
        if not isinstance(cav, dict):
            c.fail("cavity", "expected a mapping")
            cav = {}
        nm = cav.get("n_modes", 50)
        if not isinstance(nm, int) or nm < 1:
            c.fail("cavity.n_modes", "expected a positive integer")
        cav_out = {"n_modes": nm, "omega1": c.number(cav, "omega1", "cavity", default=1.0, positive=True)}
        if "coupling_ratio" in cav:
            cav_out["coupling_ratio"] = c.number(cav, "coupling_ratio", "cavity", positive=True)
        else:
            cav_out["amplitude"] = c.number(cav, "amplitude", "cavity", default=0.01, positive=True)
        out["cavity"] = cav_out
        sweep = raw.get("sweep", {})
        if not isinstance(sweep, dict):
            c.fail("sweep", "expected a mapping")
            sweep = {}
        grid = c.grid(sweep, "omega", "sweep")
        pair = sweep.get("pair", [0, 1])
        if (
            not isinstance(pair, list)
            or len(pair) != 2
            or not all(isinstance(p, int) and 0 <= p < len(meds) for p in pair)
            or pair[0] == pair[1]
        ):
            c.fail("sweep.pair", "expected two distinct mediator indices")
        out["sweep"] = {
            "omega": grid,
            "pair": pair,
            "max_ratio": c.number(sweep, "max_ratio", "sweep", default=0.05, positive=True),
        }
    elif kind == "traceout_validation":
        em = _emitters(c, raw, min_count=1)
        out["emitters"] = em
        out["modes"] = _modes(c, raw, len(em))
        nmax = raw.get("n_max", 30)
        if not isinstance(nmax, int) or nmax < 1:
            c.fail("n_max", "expected a positive integer")
        out["n_max"] = nmax
        out["self_energy"] = bool(raw.get("self_energy", False))
        out["eps_over_omega"] = c.grid(raw, "eps_over_omega", "<root>", positive=False, nonneg=True)
    if c.errors:
        raise ConfigError(c.errors)
    return out


def load_config(path) -> dict:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError([f"{path}: {exc.strerror}"]) from exc
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f"line {mark.line + 1}, column {mark.column + 1}" if mark else "unknown position"
        raise ConfigError([f"parse error at {loc}: {getattr(exc, 'problem', exc)}"]) from exc
    return canonicalize(raw)


def config_hash(cfg: dict) -> str:
    blob = json.dumps(cfg, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


# ----------------------------------------------------------------------------
# construction of library objects


def _build_material(m: dict):
    if m["kind"] == "pec":
        return PerfectConductor()
    if m["kind"] == "constant":
        return Constant(m["eps"])
    return Drude(m["omega_p"], m["gamma"])


def build_environment(env: dict):
    kind = env["kind"]
    if kind == "free_space":
        return FreeSpace()
    if kind == "mirror":
        return ImageMirror(MirrorSpec(z0=env["z0"], strength=env["strength"]))
    if kind == "half_space":
        return Layered(LayerStack.half_space(_build_material(env["material"]), env["z0"]))
    if kind == "cavity":
        stack = LayerStack.cavity(
            _build_material(env["lower"]), _build_material(env["upper"]), env["gap"], env["z0"]
        )
        return Layered(stack)
    layers = tuple(
        Layer(_build_material(layer["material"]), layer.get("thickness"))
        for layer in env["layers"]
    )
    return Layered(LayerStack(layers, env["emitter_layer"], env["z_bottom"]))


def _emitter_objs(items) -> list[Emitter]:
    return [Emitter(e["position"], e["dipole"]) for e in items]


# ----------------------------------------------------------------------------
# output


def _fmt(x) -> str:
    return format(float(x), ".16e")


@dataclass
class _Run:
    out_dir: Path
    files: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    warnings: list = field(default_factory=list)
    error_estimates: dict = field(default_factory=dict)
    timings: dict = field(default_factory=dict)

    def write_csv(self, name: str, header: list[str], rows, *, partial: bool = False) -> None:
        path = self.out_dir / name
        with path.open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(header)
            for row in rows:
                w.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
        digest = hashlib.sha256(path.read_bytes()).hexdigest()
        self.files.append({"file": name, "sha256": digest, "partial": partial})


def _coupling_rows(blocks: np.ndarray):
    n = blocks.shape[0]
    for i in range(n):
        for j in range(n):
            yield [str(i), str(j), *blocks[i, j].real.reshape(-1)]


def _run_direct_free_space(cfg: dict, run: _Run) -> None:
    em = _emitter_objs(cfg["emitters"])
    g = FreeSpace()
    res = coupling_from_residue(g, em)
    run.write_csv("coupling_matrix.csv", ["i", "j", *COMPONENTS], _coupling_rows(res.blocks))
    rho = float(np.linalg.norm(np.subtract(em[1].position, em[0].position)))
    pair = [em[0], em[1]]
    ref = coupling_from_residue(g, pair)[0, 1].real
    rows = []
    worst = 0.0
    try:
        for x in cfg["cutoff"]["rho_over_lambda"]:
            cut = SpectralCutoff.from_rho_over_lambda(x, rho, cfg["cutoff"]["kind"])
            lam = coupling_from_spectrum(g, pair, cut)
            worst = max(worst, lam.meta["max_error_estimate"])
            b = lam[0, 1].real
            rows.append([x, b[2, 2], b[0, 0], channel_relative_error(b, ref)])
    finally:
        run.error_estimates["quadrature"] = worst
        run.write_csv(
            "cutoff_convergence.csv",
            ["rho_over_lambda", "lambda_zz", "lambda_xx", "rel_error_vs_residue"],
            rows,
            partial=len(rows) < len(cfg["cutoff"]["rho_over_lambda"]),
        )


def _run_direct_layered(cfg: dict, run: _Run) -> None:
    em = _emitter_objs(cfg["emitters"])
    g = build_environment(cfg["environment"])
    for e in em:
        g.check_point(e.position)
    if cfg["method"] == "residue":
        lam = coupling_from_residue(g, em)
    else:
        rho = min(
            np.linalg.norm(np.subtract(a.position, b.position))
            for k, a in enumerate(em)
            for b in em[k + 1 :]
        )
        x = cfg["cutoff"]["rho_over_lambda"][0]
        lam = coupling_from_spectrum(g, em, SpectralCutoff.from_rho_over_lambda(x, rho, cfg["cutoff"]["kind"]))
        run.error_estimates["quadrature"] = lam.meta["max_error_estimate"]
    run.write_csv("coupling_matrix.csv", ["i", "j", *COMPONENTS], _coupling_rows(lam.blocks))


def _run_truncation(cfg: dict, run: _Run) -> None:
    em = _emitter_objs(cfg["emitters"])
    g = build_environment(cfg["environment"])
    rep = truncation_report(g, em, cfg["cutoff"]["omega_grid"], kind=cfg["cutoff"]["kind"])
    rho = float(np.linalg.norm(np.subtract(em[1].position, em[0].position)))
    rows = []
    for r in rep.rows:
        b = r.coupling[0, 1].real
        rows.append([r.omega_max, r.omega_max * rho / (2 * np.pi), b[2, 2], b[0, 0], r.rel_error, r.error_estimate])
    run.error_estimates["quadrature"] = max((r.error_estimate for r in rep.rows), default=0.0)
    run.write_csv(
        "truncation.csv",
        ["omega_max", "rho_over_lambda", "lambda_zz", "lambda_xx", "rel_error_vs_residue", "error_estimate"],
        rows,
    )


def _run_mediator(cfg: dict, run: _Run) -> None:
    meds = [Mediator(m["position"], m["dipole"], 1.0, m["coupling"]) for m in cfg["mediators"]]
    cav = cfg["cavity"]
    pos = [m.position for m in meds]
    if "coupling_ratio" in cav:
        modes = planar_cavity_modes(pos, cav["n_modes"], cav["omega1"])
        modes = scale_to_ratio(meds, modes, min(cfg["sweep"]["omega"]), cav["coupling_ratio"])
    else:
        modes = planar_cavity_modes(pos, cav["n_modes"], cav["omega1"], cav["amplitude"])
    sweep = cfg["sweep"]
    rows = resonance_sweep(meds, modes, sweep["omega"], pair=tuple(sweep["pair"]), max_ratio=sweep["max_ratio"])
    nf = len(rows[0].polariton_frequencies)
    header = [
        "Omega",
        "xi_offdiag_re",
        "xi_offdiag_normalized",
        "xi_truncated_normalized",
        *[f"polariton_freq_{k}" for k in range(nf)],
    ]
    out = []
    for r in rows:
        out.append([r.Omega, r.xi_offdiag.real, r.xi_normalized, r.xi_truncated_normalized, *r.polariton_frequencies])
        if r.warning:
            run.warnings.append(f"Omega={r.Omega:.16e}: {r.warning}")
    run.write_csv("resonance_sweep.csv", header, out)


def _run_traceout(cfg: dict, run: _Run) -> None:
    em = _emitter_objs(cfg["emitters"])
    modes = DiscreteModeSet(
        [m["frequency"] for m in cfg["modes"]],
        [m["fields"] for m in cfg["modes"]],
        [e.position for e in em],
    )
    model = FockModel(em, 0.0, modes, cfg["n_max"], cfg["self_energy"])
    rows = traceout_error_sweep(model, cfg["eps_over_omega"])
    run.write_csv(
        "traceout_error.csv",
        ["eps_over_omega", "energy_error"],
        [[r.eps_over_omega, r.energy_error] for r in rows],
    )


RUNNERS = {
    "direct_free_space": _run_direct_free_space,
    "direct_layered": _run_direct_layered,
    "truncation_study": _run_truncation,
    "mediator_sweep": _run_mediator,
    "traceout_validation": _run_traceout,
}


def run_scenario(cfg: dict, out_dir, *, threads: int | None = None) -> tuple[int, dict]:
    """Execute a canonical configuration; returns (exit code, report)."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    run = _Run(out_dir)
    status, code = "ok", EXIT_OK
    t0 = time.perf_counter()
    try:
        with threadpool_limits(limits=threads):
            RUNNERS[cfg["kind"]](cfg, run)
    except ConvergenceError as exc:
        status, code = "convergence_failure", EXIT_CONVERGENCE
        run.errors.append({"type": type(exc).__name__, "message": str(exc)})
        run.error_estimates["failed"] = exc.error_estimate
    except CavityIntError as exc:
        status, code = "config_error", EXIT_CONFIG
        run.errors.append({"type": type(exc).__name__, "message": str(exc)})
    run.timings["total_s"] = time.perf_counter() - t0
    report = {
        "version": __version__,
        "status": status,
        "config_sha256": config_hash(cfg),
        "config": cfg,
        "threads": threads,
        "outputs": run.files,
        "errors": run.errors,
        "warnings": run.warnings,
        "error_estimates": run.error_estimates,
        "timings": run.timings,
    }
    (out_dir / "run_report.json").write_text(json.dumps(report, indent=2, default=float) + "\n")
    return code, report


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="cavityint", description="Vacuum-field induced interactions: scenario runner")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)
    v = sub.add_parser("validate", help="check a configuration without computing")
    v.add_argument("config")
    r = sub.add_parser("run", help="run a scenario and write CSV tables plus run_report.json")
    r.add_argument("config")
    r.add_argument("--output-dir", default=None, help="defaults to output_dir in the config, else ./out")
    r.add_argument("--threads", type=int, default=None, help="cap on BLAS/worker threads")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format="%(levelname)s %(message)s")
    try:
        cfg = load_config(args.config)
    except ConfigError as exc:
        for e in exc.errors:
            print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "validate":
        print("OK")
        print(json.dumps(cfg, indent=2, sort_keys=True))
        return EXIT_OK
    if args.threads is not None and args.threads < 1:
        print("error: --threads must be positive", file=sys.stderr)
        return EXIT_CONFIG
    out_dir = args.output_dir or cfg.get("output_dir", "out")
    code, report = run_scenario(cfg, out_dir, threads=args.threads)
    for e in report["errors"]:
        print(f"error: {e['type']}: {e['message']}", file=sys.stderr)
    for f in report["outputs"]:
        print(f"wrote {Path(out_dir) / f['file']}")
    return code


if __name__ == "__main__":
    sys.exit(main())
