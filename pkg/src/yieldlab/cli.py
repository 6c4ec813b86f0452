"""Batch scenario runner.

Usage::

    yieldlab --config scenario.json --out results/ [--threads N] [--h H]

The config is a JSON object with ``scenario`` (one of ``envelope``,
``min1d``, ``yield-sweep``, ``gap-affine``, ``certify``, ``case3-flux``),
``laws`` (``{"bulk": {...}, "cohesive": {...}}``), and, depending on the
scenario, ``geometry``, ``field``, ``h`` and ``params``.  Outputs are written
atomically into ``--out``; the same config always yields byte-identical files.
On failure the process exits nonzero and writes
``{"error", "scenario", "field"}`` to stderr and to ``error.json``.
"""
from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional

import numpy as np

from .errors import YieldlabError
from .io import atomic_write, emit_sweep, json_text

SCENARIOS = ("envelope", "min1d", "yield-sweep", "gap-affine", "certify", "case3-flux")
SWEEP_COLUMNS = ["lambda", "alpha", "sigma", "gap", "bv_distance", "certified"]


class ConfigError(YieldlabError, ValueError):
    """Invalid scenario configuration; ``field`` is the dotted path of the culprit."""

    def __init__(self, message: str, field: Optional[str] = None):
        super().__init__(message)
        self.field = field


def _get(cfg: dict, key: str, path: str, kind=None, default=...):
    if key not in cfg:
        if default is ...:
            raise ConfigError(f"missing required field {path}", path)
        return default
    val = cfg[key]
    if kind is not None and not isinstance(val, kind) or isinstance(val, bool) and kind is not bool:
        raise ConfigError(f"{path} has the wrong type", path)
    return val


def _positive(x, path):
    if not isinstance(x, (int, float)) or isinstance(x, bool) or not x > 0:
        raise ConfigError(f"{path} must be a positive number", path)
    return float(x)


def _grid(cfg, key, path):
    vals = _get(cfg, key, path, list)
    if not vals:
        raise ConfigError(f"{path} must be a nonempty list", path)
    for i, v in enumerate(vals):
        if not isinstance(v, (int, float)) or isinstance(v, bool):
            raise ConfigError(f"{path}[{i}] must be a number", f"{path}[{i}]")
    return [float(v) for v in vals]


@dataclass
class ScenarioConfig:
    """Validated scenario description."""

    scenario: str
    laws: dict
    geometry: dict = field(default_factory=dict)
    field_spec: Optional[dict] = None
    h: Optional[float] = None
    params: dict = field(default_factory=dict)
    base_dir: Path = Path(".")

    @classmethod
    def from_dict(cls, cfg: dict, base_dir=".") -> "ScenarioConfig":
        if not isinstance(cfg, dict):
            raise ConfigError("config must be a JSON object", None)
        scenario = _get(cfg, "scenario", "scenario", str)
        if scenario not in SCENARIOS:
            raise ConfigError(f"unknown scenario {scenario!r}", "scenario")
        laws = _get(cfg, "laws", "laws", dict)
        from .laws import bulk_from_config, cohesive_from_config

        for part, build in (("bulk", bulk_from_config), ("cohesive", cohesive_from_config)):
            try:
                build(_get(laws, part, f"laws.{part}", dict))
            except (YieldlabError, TypeError, ValueError) as exc:
                raise ConfigError(f"laws.{part}: {exc}", f"laws.{part}") from None
        geometry = _get(cfg, "geometry", "geometry", dict, {})
        for key in ("r", "R", "eta"):
            if key in geometry:
                _positive(geometry[key], f"geometry.{key}")
        for key in ("sigma_grid", "alpha_grid"):
            if key in geometry:
                _grid(geometry, key, f"geometry.{key}")
        if "alpha_grid" in geometry and any(not 0 < a < 1 for a in geometry["alpha_grid"]):
            raise ConfigError("alpha values must lie in (0, 1)", "geometry.alpha_grid")
        if "case" in geometry and geometry["case"] not in ("Sublevel", "Profile2D", "RadialBump", "all"):
            raise ConfigError(f"unknown case {geometry['case']!r}", "geometry.case")
        h = cfg.get("h")
        if h is not None:
            h = _positive(h, "h")
        field_spec = cfg.get("field")
        base = Path(base_dir)
        if field_spec is not None:
            if not isinstance(field_spec, dict):
                raise ConfigError("field must be an object", "field")
            kind = _get(field_spec, "kind", "field.kind", str)
            if kind == "affine":
                _positive(_get(field_spec, "lambda", "field.lambda"), "field.lambda")
            elif kind == "grid":
                p = base / _get(field_spec, "path", "field.path", str)
                if not p.exists():
                    raise ConfigError(f"field file {p} does not exist", "field.path")
            else:
                raise ConfigError(f"unknown field kind {kind!r}", "field.kind")
        elif scenario in ("gap-affine", "certify", "case3-flux"):
            raise ConfigError("missing required field field", "field")
        params = _get(cfg, "params", "params", dict, {})
        if scenario == "gap-affine":
            _grid(geometry, "sigma_grid", "geometry.sigma_grid")
            _grid(geometry, "alpha_grid", "geometry.alpha_grid")
            if field_spec.get("kind") != "affine":
                raise ConfigError("gap-affine needs an affine field", "field.kind")
        if scenario == "yield-sweep":
            _grid(params, "lambdas", "params.lambdas")
        return cls(scenario, laws, geometry, field_spec, h, params, base)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        path = Path(path)
        try:
            cfg = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file {path} not found", None) from None
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}", None) from None
        return cls.from_dict(cfg, path.parent)


# ----------------------------------------------------------------------- scenarios


def _laws(cfg: ScenarioConfig):
    from .laws import build_envelope, laws_from_config

    F, G = laws_from_config(cfg.laws)
    return F, G, build_envelope(F, G)


def _field(cfg: ScenarioConfig, lam: Optional[float] = None):
    from .field2d import SampledField2D

    fcfg = cfg.field_spec or {}
    domain = tuple(fcfg.get("domain", (-2.5, 2.5, -2.5, 2.5)))
    if lam is not None or fcfg.get("kind") == "affine":
        return SampledField2D.affine(float(fcfg.get("lambda", 0.0) if lam is None else lam), domain)
    data = np.load(cfg.base_dir / fcfg["path"])
    u = SampledField2D.from_grid(data["x"], data["y"], data["u"])
    if "probe" in fcfg:
        u = u.normalized_at(fcfg["probe"])
    return u


def _families(cfg: ScenarioConfig):
    from .competitor import Family, default_families

    R = float(cfg.geometry.get("R", 2.0))
    r = float(cfg.geometry.get("r", 1.0))
    case = cfg.geometry.get("case", "all")
    fams = default_families(R, r)
    if case != "all":
        fams = tuple(f for f in fams if f.case_tag == case)
    return [Family(f.case_tag, f.R, f.r) for f in fams]


def run_envelope(cfg, out: Path, threads: int) -> List[Path]:
    F, G, env = _laws(cfg)
    n = int(cfg.params.get("n", 301))
    xi_max = float(cfg.params.get("xi_max", 3.0 * env.e_M))
    xi = np.linspace(0.0, xi_max, n)
    rows = [{"xi": x, "F": f, "Fbar": fb} for x, f, fb in zip(xi, F.value(xi), env.value(xi))]
    return [
        emit_sweep(rows, "csv", out / "envelope.csv", ["xi", "F", "Fbar"]),
        atomic_write(out / "summary.json", json_text({"scenario": "envelope", "e_M": env.e_M, "slope": env.slope})),
    ]


def run_min1d(cfg, out: Path, threads: int) -> List[Path]:
    from concurrent.futures import ThreadPoolExecutor

    from .bv1d import minimize_relaxed_1d

    F, G, env = _laws(cfg)
    l = float(cfg.params.get("l", 1.0))
    if "t" in cfg.params:
        ts = _grid(cfg.params, "t", "params.t")
    else:
        t0, t1 = float(cfg.params.get("t_min", 0.0)), float(cfg.params.get("t_max", 3.0))
        step = _positive(cfg.params.get("t_step", 0.1), "params.t_step")
        ts = [round(t0 + k * step, 12) for k in range(int(round((t1 - t0) / step)) + 1)]

    def one(t):
        m = minimize_relaxed_1d(F, G, l, t)
        return {"t": t, "e_star": m.e_star, "s_star": m.s_star, "c_star": m.c_star, "energy": m.energy, "e_M": m.e_M}

    with ThreadPoolExecutor(max_workers=_workers(threads)) as pool:
        rows = list(pool.map(one, ts))
    return [emit_sweep(rows, "csv", out / "min1d.csv", ["t", "e_star", "s_star", "c_star", "energy", "e_M"])]


def _workers(threads):
    return (os.cpu_count() or 1) if threads == 0 else max(1, threads)


def run_yield_sweep(cfg, out: Path, threads: int) -> List[Path]:
    from .competitor import search_certificate

    F, G, env = _laws(cfg)
    eta = float(cfg.geometry.get("eta", 1.0))
    mode = cfg.params.get("mode", "above")
    rows, certs = [], []
    for lam in _grid(cfg.params, "lambdas", "params.lambdas"):
        u = _field(cfg, lam)
        cert = search_certificate(u, env, G, _families(cfg), eta, mode, cfg.h, threads)
        if cert is None:
            rows.append({"lambda": lam, "alpha": float("nan"), "sigma": float("nan"), "gap": float("nan"), "bv_distance": float("nan"), "certified": 0})
        else:
            rows.append({"lambda": lam, "alpha": cert.alpha, "sigma": cert.sigma, "gap": cert.gap, "bv_distance": cert.bv_distance, "certified": 1})
            certs.append(cert.to_dict())
    return [
        emit_sweep(rows, "csv", out / "yield_sweep.csv", SWEEP_COLUMNS),
        atomic_write(out / "certificates.json", json_text(certs)),
    ]


def run_gap_affine(cfg, out: Path, threads: int) -> List[Path]:
    from .competitor import scan_family

    F, G, env = _laws(cfg)
    u = _field(cfg)
    eta = float(cfg.geometry.get("eta", 1.0))
    alphas = _grid(cfg.geometry, "alpha_grid", "geometry.alpha_grid")
    sigmas = _grid(cfg.geometry, "sigma_grid", "geometry.sigma_grid")
    rows = []
    for fam in _families(cfg):
        scanned, _ = scan_family(
            u, env, G, fam, eta, "audit", cfg.h, threads, stop_at_first=False, alpha_grid=alphas, sigmas=sigmas
        )
        rows.extend(r.as_csv_row() for r in scanned)
    return [emit_sweep(rows, "csv", out / "gap_table.csv", SWEEP_COLUMNS)]


def run_certify(cfg, out: Path, threads: int) -> List[Path]:
    from .competitor import search_certificate

    F, G, env = _laws(cfg)
    u = _field(cfg)
    eta = float(cfg.geometry.get("eta", 1.0))
    mode = cfg.params.get("mode", "above")
    cert = search_certificate(u, env, G, _families(cfg), eta, mode, cfg.h, threads)
    body = {"found": False, "lambda": u.lam, "eta": eta} if cert is None else dict(cert.to_dict(), found=True)
    return [atomic_write(out / "certificate.json", json_text(body))]


def run_case3_flux(cfg, out: Path, threads: int) -> List[Path]:
    from .competitor import case3_flux_check

    u = _field(cfg)
    R = float(cfg.geometry.get("R", 2.0))
    r = float(cfg.geometry.get("r", 1.0))
    sigmas = _grid(cfg.params, "sigmas", "params.sigmas") if "sigmas" in cfg.params else [0.02, 0.04, 0.08]
    eps = float(cfg.params.get("eps", 0.25))
    chk = case3_flux_check(u, R, r, sigmas, eps, cfg.h)
    cols = ["sigma", "n_vertices", "min_flux", "min_margin", "C_sigma"]
    rows = [dict(zip(cols, row)) for row in chk.rows]
    return [
        emit_sweep(rows, "csv", out / "case3_flux.csv", cols),
        atomic_write(out / "case3_flux.json", json_text({"C": chk.C, "holds": chk.holds(), "eps": eps, "r": r, "R": R})),
    ]


_RUNNERS = {
    "envelope": run_envelope,
    "min1d": run_min1d,
    "yield-sweep": run_yield_sweep,
    "gap-affine": run_gap_affine,
    "certify": run_certify,
    "case3-flux": run_case3_flux,
}


def run_scenario(cfg: ScenarioConfig, out, threads: int = 1) -> List[Path]:
    """Run one validated scenario and return the written files."""
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    return _RUNNERS[cfg.scenario](cfg, out, threads)


def _error(out: Optional[Path], message: str, scenario: Optional[str], fld: Optional[str]) -> None:
    body = {"error": message, "scenario": scenario, "field": fld}
    sys.stderr.write(json.dumps(body) + "\n")
    if out is not None:
        try:
            atomic_write(out / "error.json", json.dumps(body, indent=2) + "\n")
        except OSError:
            pass


def _peek_scenario(path) -> Optional[str]:
    try:
        name = json.loads(Path(path).read_text(encoding="utf-8")).get("scenario")
    except (OSError, ValueError, AttributeError):
        return None
    return name if isinstance(name, str) else None


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(prog="yieldlab", description=__doc__.split("\n")[0])
    parser.add_argument("--config", required=True, help="scenario JSON file")
    parser.add_argument("--out", required=True, help="output directory")
    parser.add_argument("--threads", type=int, default=1, help="worker threads (0 = all cores)")
    parser.add_argument("--h", type=float, default=None, help="override the quadrature resolution")
    args = parser.parse_args(argv)
    os.environ.get("YIELDLAB_SEED")  # reserved; every algorithm is deterministic
    out = Path(args.out)
    scenario = None
    try:
        if args.threads < 0:
            raise ConfigError("--threads must be >= 0", "threads")
        cfg = ScenarioConfig.load(args.config)
        scenario = cfg.scenario
        if args.h is not None:
            cfg.h = _positive(args.h, "h")
        run_scenario(cfg, out, args.threads)
    except ConfigError as exc:
        _error(out, str(exc), scenario or _peek_scenario(args.config), exc.field)
        return 2
    except (YieldlabError, ValueError, ArithmeticError, OSError) as exc:
        _error(out, f"{type(exc).__name__}: {exc}", scenario, None)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
