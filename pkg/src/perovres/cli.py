"""Command line front end: ``perovres {validate,forward,coupling,sweep,inverse}``.

Exit codes: 0 success, 1 solver failure, 2 configuration error.  Data go to
``--output`` (or ``output.path``, or stdout); diagnostics go to stderr.
"""

from __future__ import annotations

import argparse
import csv
import difflib
import io
import json
import logging
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Optional, Sequence

import jsonschema
import numpy as np

from .coupling import DEFAULT_GAMMA_HAT, DEFAULT_ORDER, DEFAULT_ORDER_3D, DEFAULT_RTOL, Configuration, Disk, QuadratureOptions, build_coupling_set
from .errors import ConfigError, PerovresError
from .inverse import DEFAULT_BRACKET, DesignTargets, design_family
from .material import Material, lossless_pole
from .spectrum import (
    DEFAULT_MAX_ITER,
    DEFAULT_TOL,
    MullerOptions,
    ResonanceMatrixSpec,
    det_resonances,
    single_particle_resonance,
    single_particle_root,
    three_particle_frequencies,
    two_particle_resonances,
)

log = logging.getLogger("perovres")

SAMPLE_CONFIG = "@sample"

SWEEP_LABELS = ("omega_s1", "omega_mon2", "omega_dip2", "omega_1_3", "omega_2_3", "omega_3_3")
SWEEP_COLUMNS = ("delta",) + tuple("re_" + s for s in SWEEP_LABELS) + tuple("im_" + s for s in SWEEP_LABELS)
INVERSE_COLUMNS = ("alpha3", "branch", "alpha1", "alpha2", "delta", "max_residual", "triangle_ok")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _schema(name: str) -> dict:
    return json.loads(resources.files("perovres").joinpath("schemas", name).read_text())


@dataclass
class SolverSettings:
    k: float
    gamma_hat: float = DEFAULT_GAMMA_HAT
    quadrature_order: int = DEFAULT_ORDER
    quadrature_order_3d: int = DEFAULT_ORDER_3D
    quadrature_rtol: Optional[float] = DEFAULT_RTOL
    muller_tol: float = DEFAULT_TOL
    muller_max_iter: int = DEFAULT_MAX_ITER
    k0_convention: str = "paper"
    coupling_model: str = "quadrature"
    omega_ref: object = "resonance"
    initial_guesses: Optional[list] = None

    def quad_opts(self, model: Optional[str] = None) -> QuadratureOptions:
        return QuadratureOptions(
            self.quadrature_order,
            self.quadrature_order_3d,
            self.quadrature_rtol,
            self.gamma_hat,
            self.k0_convention,
            model or self.coupling_model,
        )

    def muller_opts(self) -> MullerOptions:
        return MullerOptions(tol=self.muller_tol, max_iter=self.muller_max_iter)


@dataclass
class RunConfig:
    """Validated configuration."""

    material: Material
    solver: SolverSettings
    disks: Optional[tuple] = None
    delta: Optional[float] = None
    dim: int = 2
    output_format: Optional[str] = None
    output_path: Optional[str] = None
    source: str = field(default="<config>", repr=False)

    def configuration(self) -> Configuration:
        if self.disks is None:
            raise ConfigError(f"{self.source}: this command needs a 'geometry' block")
        return Configuration(self.disks, self.delta, self.dim)

    def normalized(self) -> dict:
        geometry = None
        if self.disks is not None:
            geometry = {
                "disks": [{"center": list(d.center), "radius": d.radius} for d in self.disks],
                "delta": self.delta,
                "dim": self.dim,
            }
        solver = asdict(self.solver)
        if isinstance(solver["omega_ref"], complex):
            solver["omega_ref"] = [solver["omega_ref"].real, solver["omega_ref"].imag]
        if solver["initial_guesses"] is None:
            del solver["initial_guesses"]
        else:
            solver["initial_guesses"] = [[g.real, g.imag] for g in solver["initial_guesses"]]
        out = {"material": self.material.to_dict()}
        if geometry is not None:
            out["geometry"] = geometry
        out["solver"] = solver
        out["output"] = {"path": self.output_path}
        if self.output_format is not None:
            out["output"]["format"] = self.output_format
        return out


def _unknown_keys(obj, schema: dict, path: str) -> list:
    """Keys of ``obj`` not declared by ``schema`` (``_``-prefixed keys are comments)."""
    errors = []
    if isinstance(obj, dict) and "properties" in schema:
        props = schema["properties"]
        for key, value in obj.items():
            where = f"{path}.{key}" if path else key
            if key.startswith("_"):
                continue
            if key not in props:
                close = difflib.get_close_matches(key, list(props), n=1, cutoff=0.5)
                hint = f" (did you mean '{close[0]}'?)" if close else ""
                errors.append(f"unknown key '{where}'{hint}")
            else:
                errors.extend(_unknown_keys(value, props[key], where))
    elif isinstance(obj, list) and isinstance(schema.get("items"), dict):
        for i, item in enumerate(obj):
            errors.extend(_unknown_keys(item, schema["items"], f"{path}[{i}]"))
    return errors


def _path(err) -> str:
    out = ""
    for p in err.absolute_path:
        out += f"[{p}]" if isinstance(p, int) else (f".{p}" if out else str(p))
    return out or "<root>"


def _as_complex(value) -> complex:
    if isinstance(value, (list, tuple)):
        return complex(value[0], value[1])
    return complex(value)


def _public(block: dict) -> dict:
    return {k: v for k, v in block.items() if not k.startswith("_")}


def parse_config(raw, source: str = "<config>") -> RunConfig:
    """Validate a decoded configuration; raise ConfigError listing every problem."""
    schema = _schema("config.schema.json")
    errors = _unknown_keys(raw, schema, "")
    if not errors:
        validator = jsonschema.Draft202012Validator(schema)
        for err in sorted(validator.iter_errors(raw), key=lambda e: list(map(str, e.absolute_path))):
            errors.append(f"{_path(err)}: {err.message}")
    if errors:
        raise ConfigError(f"{source}: " + "; ".join(errors))

    def build(where, make):
        try:
            return make()
        except PerovresError as exc:
            raise ConfigError(f"{source}: {where}: {exc}") from exc

    material = build("material", lambda: Material(**_public(raw["material"])))
    sv = _public(raw["solver"])
    if isinstance(sv.get("omega_ref"), (list, int, float)):
        sv["omega_ref"] = _as_complex(sv["omega_ref"])
    if sv.get("initial_guesses") is not None:
        sv["initial_guesses"] = [_as_complex(g) for g in sv["initial_guesses"]]
    solver = SolverSettings(**sv)
    build("solver", solver.quad_opts)
    cfg = RunConfig(material, solver, source=source)
    geo = raw.get("geometry")
    if geo is not None:
        cfg.dim = geo.get("dim", 2)
        cfg.disks = build("geometry.disks", lambda: tuple(Disk(tuple(d["center"]), d["radius"]) for d in geo["disks"]))
        cfg.delta = float(geo["delta"])
        build("geometry", cfg.configuration)
    out = raw.get("output", {})
    cfg.output_format = out.get("format")
    cfg.output_path = out.get("path")
    return cfg


def load_config(path: str) -> RunConfig:
    if path == SAMPLE_CONFIG:
        text = resources.files("perovres").joinpath("data", "sample_config.json").read_text()
    else:
        try:
            with open(path, encoding="utf-8") as fh:
                text = fh.read()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}:{exc.lineno}:{exc.colno}: {exc.msg}") from exc
    return parse_config(raw, path)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------


def _clean(obj):
    """JSON-safe copy: complex -> [re, im], non-finite -> null, numpy -> python."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (complex, np.complexfloating)):
        return [_clean(float(obj.real)), _clean(float(obj.imag))]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if math.isfinite(obj) else None
    return obj


def dump_json(obj) -> str:
    return json.dumps(_clean(obj), indent=2) + "\n"


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def dump_csv(header: Sequence[str], rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_cell(v) for v in row])
    return buf.getvalue()


def _emit(text: str, path: Optional[str]):
    if path is None or path == "-":
        sys.stdout.write(text)
        sys.stdout.flush()
        return
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------


def reference_frequency(cfg: RunConfig, disk: Disk, delta: float, dim: int = 2) -> complex:
    """Frequency at which the background wavenumber is frozen.

    ``"pole"``: the lossless material pole.  ``"resonance"``: the real part of
    the single-particle resonance of ``disk`` (itself computed at the pole).
    A number is used as is.
    """
    mode = cfg.solver.omega_ref
    mat, k = cfg.material, cfg.solver.k
    pole = lossless_pole(mat, k)
    if mode == "pole":
        return complex(pole)
    if mode == "resonance":
        w = single_particle_resonance(mat, disk, delta, k, omega_ref=pole, dim=dim, opts=cfg.solver.quad_opts(), muller_opts=cfg.solver.muller_opts())
        return complex(w.real)
    return complex(mode)


def forward(cfg: RunConfig, threads: int = 1) -> tuple:
    """Resonances of the configured geometry; returns ``(payload, ok)``."""
    conf = cfg.configuration()
    s = cfg.solver
    qopts = s.quad_opts()
    ref = reference_frequency(cfg, conf.disks[0], conf.delta, conf.dim)
    cs = build_coupling_set(conf, cfg.material, ref, qopts)
    spec = ResonanceMatrixSpec(cs, cfg.material, s.k)
    mopts = MullerOptions(s.muller_tol, s.muller_max_iter, threads=threads)
    res = det_resonances(spec, s.initial_guesses, mopts)
    payload = {"n": conf.n, "dim": conf.dim, "delta": conf.delta, "omega_ref": ref}
    payload.update(res.to_json())
    if conf.dim == 2 and conf.identical_radii() and conf.n in (2, 3):
        if conf.n == 3:
            closed = [r.omega for r in three_particle_frequencies(cs, cfg.material, conf.delta, s.k).roots]
        else:
            closed = [r.omega for r in two_particle_resonances(cs, cfg.material, conf.delta, s.k)]
        payload["closed_form"] = closed
    found = sum(r.multiplicity for r in res.roots)
    ok = found == conf.n
    if not ok:
        log.error("found %d of %d resonances", found, conf.n)
    for g, msg in res.failures:
        log.warning("guess %r: %s", g, msg)
    return payload, ok


def _forward_rows(payload: dict) -> list:
    return [
        (r["label"], r["omega"][0], r["omega"][1], r["residual"], r["multiplicity"], r["iterations"])
        for r in payload["roots"]
    ]


def sweep_row(cfg: RunConfig, delta: float, kappa: float, rho: float) -> tuple:
    """One sweep row on congruent collinear geometry with centre spacing ``kappa rho``."""
    mat, s = cfg.material, cfg.solver
    qopts = s.quad_opts()
    disks = [Disk((i * kappa * rho, 0.0), rho) for i in range(3)]
    values = [complex(math.nan, math.nan)] * 6
    ok = True
    try:
        ref = reference_frequency(cfg, disks[0], delta)
        c1 = build_coupling_set(Configuration(disks[:1], delta), mat, ref, qopts)
        values[0] = single_particle_root(mat, c1.n_pairs[0, 0], delta, s.k, opts=s.muller_opts()).omega
        c2 = build_coupling_set(Configuration(disks[:2], delta), mat, ref, qopts)
        mon, dip = two_particle_resonances(c2, mat, delta, s.k)
        values[1], values[2] = mon.omega, dip.omega
        c3 = build_coupling_set(Configuration(disks, delta), mat, ref, qopts)
        values[3:6] = list(three_particle_frequencies(c3, mat, delta, s.k).omegas)
    except PerovresError as exc:
        log.warning("delta = %r: %s", delta, exc)
        ok = False
    return (delta,) + tuple(v.real for v in values) + tuple(v.imag for v in values), ok


def sweep_deltas(delta_min: float, delta_max: float, steps: int) -> list:
    """Geometric grid from ``delta_max`` down to ``delta_min``."""
    if steps < 1 or not 0 < delta_min <= delta_max:
        raise ConfigError("sweep needs 0 < delta-min <= delta-max and steps >= 1")
    if steps == 1:
        return [float(delta_max)]
    return [float(d) for d in np.geomspace(delta_max, delta_min, steps)]


def sweep(cfg: RunConfig, deltas: Sequence[float], kappa: float, rho: float, threads: int = 1) -> tuple:
    if not kappa > 2.0:
        raise ConfigError("kappa must be > 2 so that the disks are disjoint")

    def job(d):
        return sweep_row(cfg, d, kappa, rho)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(job, deltas))
    else:
        results = [job(d) for d in deltas]
    return [r for r, _ in results], all(ok for _, ok in results)


def inverse(cfg: RunConfig, targets: Sequence[complex], rho: float, grid, bracket, threads: int = 1):
    s = cfg.solver
    ref = None if not isinstance(s.omega_ref, complex) else s.omega_ref
    dt = DesignTargets(tuple(targets), s.k, cfg.material, rho, ref, s.quad_opts())
    fam = design_family(dt, grid, bracket, threads=threads)
    for msg in fam.diagnostics:
        log.info("%s", msg)
    return fam


# ---------------------------------------------------------------------------
# argument handling
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", required=True, help=f"JSON config file ('{SAMPLE_CONFIG}' for the shipped sample)")
    common.add_argument("--output", help="output file (default: output.path or stdout)")
    common.add_argument("--format", choices=("csv", "json"), help="output format")
    common.add_argument("--threads", type=int, default=1, help="worker threads")
    common.add_argument("-v", "--verbose", action="store_true", help="print diagnostics")

    parser = argparse.ArgumentParser(prog="perovres", description="Subwavelength resonances of coupled dispersive resonators.")
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("validate", parents=[common], help="check a config and print it normalised")
    sub.add_parser("forward", parents=[common], help="resonant frequencies of the configured geometry")
    sub.add_parser("coupling", parents=[common], help="pairing matrix of the configured geometry")

    sp = sub.add_parser("sweep", parents=[common], help="N = 1, 2, 3 resonances over a delta grid")
    sp.add_argument("--delta-min", type=float, default=0.05 / 2**15, help="smallest delta of the grid")
    sp.add_argument("--delta-max", type=float, default=0.05, help="largest delta of the grid")
    sp.add_argument("--steps", type=int, default=16, help="number of geometrically spaced grid points")
    sp.add_argument("--kappa", type=float, default=4.0, help="centre spacing in units of the radius")
    sp.add_argument("--rho", type=float, default=1.0, help="disk radius")

    ip = sub.add_parser("inverse", parents=[common], help="place three identical disks for three target frequencies")
    for i in (1, 2, 3):
        ip.add_argument(f"--omega{i}", type=complex, required=True, help='target frequency, e.g. "1.05-0.02j"')
    ip.add_argument("--k", type=float, help="interior wavenumber (default: solver.k)")
    ip.add_argument("--rho", type=float, default=1.0, help="disk radius")
    ip.add_argument("--alpha3-min", type=float, help="smallest alpha3 (default: 4 rho)")
    ip.add_argument("--alpha3-max", type=float, help="largest alpha3 (default: 100 rho)")
    ip.add_argument("--alpha3-steps", type=int, default=64, help="log-spaced alpha3 grid points")
    ip.add_argument("--delta-bracket", type=float, nargs=2, default=list(DEFAULT_BRACKET), metavar=("LO", "HI"), help="search interval for delta")
    return parser


def _setup_logging(verbose: bool):
    for h in list(log.handlers):
        log.removeHandler(h)
    handler = logging.StreamHandler(sys.stderr)
    handler.setFormatter(logging.Formatter("perovres: %(message)s"))
    log.addHandler(handler)
    log.setLevel(logging.INFO if verbose else logging.WARNING)
    log.propagate = False


def run(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    _setup_logging(args.verbose)
    try:
        cfg = load_config(args.config)
        fmt = args.format or cfg.output_format
        out = args.output or cfg.output_path
        if args.command == "validate":
            _emit(dump_json(cfg.normalized()), out)
            return 0
        if args.command == "coupling":
            conf = cfg.configuration()
            ref = reference_frequency(cfg, conf.disks[0], conf.delta, conf.dim)
            cs = build_coupling_set(conf, cfg.material, ref, cfg.solver.quad_opts())
            if fmt == "csv":
                rows = [(i, j, z.real, z.imag) for (i, j), z in np.ndenumerate(cs.n_pairs)]
                _emit(dump_csv(("i", "j", "re", "im"), rows), out)
            else:
                _emit(dump_json(cs.to_json()), out)
            return 0
        if args.command == "forward":
            payload, ok = forward(cfg, args.threads)
            if fmt == "csv":
                header = ("label", "re_omega", "im_omega", "residual", "multiplicity", "iterations")
                _emit(dump_csv(header, _forward_rows(payload)), out)
            else:
                _emit(dump_json(payload), out)
            return 0 if ok else 1
        if args.command == "sweep":
            deltas = sweep_deltas(args.delta_min, args.delta_max, args.steps)
            rows, ok = sweep(cfg, deltas, args.kappa, args.rho, args.threads)
            if fmt == "json":
                _emit(dump_json([dict(zip(SWEEP_COLUMNS, r)) for r in rows]), out)
            else:
                _emit(dump_csv(SWEEP_COLUMNS, rows), out)
            return 0 if ok else 1
        if args.command == "inverse":
            if args.k is not None:
                cfg.solver.k = args.k
            lo = args.alpha3_min if args.alpha3_min is not None else 4.0 * args.rho
            hi = args.alpha3_max if args.alpha3_max is not None else 100.0 * args.rho
            if not 0 < lo <= hi or args.alpha3_steps < 1:
                raise ConfigError("alpha3 grid needs 0 < alpha3-min <= alpha3-max and steps >= 1")
            grid = list(np.geomspace(lo, hi, args.alpha3_steps))
            fam = inverse(cfg, (args.omega1, args.omega2, args.omega3), args.rho, grid, args.delta_bracket, args.threads)
            if fmt == "csv":
                rows = [
                    (s.alpha3, "".join("+" if t > 0 else "-" for t in s.branch), s.alpha1, s.alpha2, s.delta, s.max_residual, s.triangle_ok)
                    for s in fam
                ]
                _emit(dump_csv(INVERSE_COLUMNS, rows), out)
            else:
                _emit(dump_json([s.to_json() for s in fam]), out)
            return 0
    except ConfigError as exc:
        log.error("config error: %s", exc)
        return 2
    except PerovresError as exc:
        log.error("solver failure: %s: %s", type(exc).__name__, exc)
        return 1
    return 2


def main() -> None:
    sys.exit(run())


__all__ = [
    "RunConfig",
    "SolverSettings",
    "parse_config",
    "load_config",
    "forward",
    "sweep",
    "sweep_row",
    "sweep_deltas",
    "inverse",
    "reference_frequency",
    "build_parser",
    "run",
    "main",
    "SWEEP_COLUMNS",
]
