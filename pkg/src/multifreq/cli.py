"""Batch command-line front end.

Every subcommand reads a JSON run configuration, applies command-line
overrides, validates the result and writes its artifacts plus a copy of the
resolved configuration into the output directory. Errors are printed as JSON
on stderr and mapped to exit codes: 0 success, 2 invalid input,
3 numerical failure, 4 target not reached.
"""

from __future__ import annotations

import argparse
import copy
import json
import sys
from pathlib import Path

import jsonschema
import numpy as np

from . import io
from .constraints import ZETA_KINDS, ZetaMap
from .errors import (ConfigError, EmptyMask, MissingArtifact, MultifreqError, NearEigenvalue,
                     NoGap, NotReached, SingularA, SingularSystem)
from .fem import CoefficientSet, Illumination, solve_helmholtz, standard_illuminations
from .mesh import Mesh, generate_disk, generate_polygon, generate_rectangle, interior_region
from .spectrum import (AdmissibleRange, admissible_subinterval, estimate_spectrum,
                       estimate_spectrum_covering, spectrum_report)
from .sweep import Problem, empirical_momm, find_min_n, make_grid, sweep_report

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERIC, EXIT_NOT_REACHED = 0, 2, 3, 4

_coef = {"oneOf": [
    {"type": "number"},
    {"type": "array"},
    {"type": "object", "required": ["type"],
     "properties": {"type": {"enum": ["constant", "bump", "array"]}}},
]}

CONFIG_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["domain"],
    "properties": {
        "domain": {"oneOf": [
            {"type": "object", "additionalProperties": False, "required": ["type", "nx", "ny"],
             "properties": {"type": {"const": "rectangle"},
                            "nx": {"type": "integer", "minimum": 1},
                            "ny": {"type": "integer", "minimum": 1},
                            "width": {"type": "number", "exclusiveMinimum": 0},
                            "height": {"type": "number", "exclusiveMinimum": 0},
                            "origin": {"type": "array", "items": {"type": "number"},
                                       "minItems": 2, "maxItems": 2}}},
            {"type": "object", "additionalProperties": False, "required": ["type", "refinement"],
             "properties": {"type": {"const": "disk"},
                            "refinement": {"type": "integer", "minimum": 0, "maximum": 9},
                            "radius": {"type": "number", "exclusiveMinimum": 0},
                            "center": {"type": "array", "items": {"type": "number"},
                                       "minItems": 2, "maxItems": 2}}},
            {"type": "object", "additionalProperties": False, "required": ["type", "corners"],
             "properties": {"type": {"const": "polygon"},
                            "corners": {"type": "array", "minItems": 3,
                                        "items": {"type": "array", "minItems": 2, "maxItems": 2}},
                            "refinement": {"type": "integer", "minimum": 0}}},
            {"type": "object", "additionalProperties": False, "required": ["type", "path"],
             "properties": {"type": {"const": "file"}, "path": {"type": "string"}}},
        ]},
        "coefficients": {"type": "object", "additionalProperties": False,
                         "properties": {"a": _coef, "eps": _coef, "sigma": _coef,
                                        "lambda": {"type": "number", "minimum": 1}}},
        "regime": {"enum": ["lossless", "lossy"]},
        "range": {"type": "object", "additionalProperties": False,
                  "required": ["k_min", "k_max"],
                  "properties": {"k_min": {"type": "number", "exclusiveMinimum": 0},
                                 "k_max": {"type": "number", "exclusiveMinimum": 0},
                                 "M": {"type": "number", "exclusiveMinimum": 0},
                                 "select_gap": {"type": "boolean"}}},
        "frequencies": {"type": "array", "items": {"type": "number", "minimum": 0}, "minItems": 1},
        "zeta": {"enum": sorted(ZETA_KINDS)},
        "illuminations": {"oneOf": [
            {"const": "standard"},
            {"type": "array", "minItems": 1, "items": {"oneOf": [
                {"type": "object", "additionalProperties": False, "required": ["kind"],
                 "properties": {"kind": {"const": "constant_one"}}},
                {"type": "object", "additionalProperties": False, "required": ["kind", "axis"],
                 "properties": {"kind": {"const": "coordinate"}, "axis": {"enum": [0, 1]}}},
                {"type": "object", "additionalProperties": False,
                 "required": ["kind", "coefficients"],
                 "properties": {"kind": {"const": "linear_combo"},
                                "coefficients": {"type": "array", "items": {"type": "number"},
                                                 "minItems": 3, "maxItems": 3}}},
            ]}},
        ]},
        "n": {"type": "integer", "minimum": 2, "maximum": 64},
        "target": {"type": "object", "additionalProperties": False, "required": ["C"],
                   "properties": {"C": {"type": "number", "minimum": 0},
                                  "n_max": {"type": "integer", "minimum": 2, "maximum": 64}}},
        "margin": {"type": "number", "exclusiveMinimum": 0},
        "threshold_fraction": {"type": "number", "exclusiveMinimum": 0, "maximum": 1},
        "spectrum_count": {"type": "integer", "minimum": 1},
        "gap_tol": {"type": "number", "minimum": 0},
        "method": {"enum": ["average", "patch"]},
        "exponent_mode": {"enum": ["omega_squared", "omega_literal"]},
        "momm": {"type": "object", "additionalProperties": False,
                 "properties": {"theta": {"type": "number", "exclusiveMinimum": 0,
                                          "exclusiveMaximum": 1},
                                "D": {"type": "number", "minimum": 1},
                                "trials": {"type": "integer", "minimum": 1},
                                "degree": {"type": "integer", "minimum": 0}}},
        "seed": {"type": "integer", "minimum": 0},
        "jobs": {"type": "integer", "minimum": 1},
        "out": {"type": "string"},
    },
}

DEFAULTS = {
    "coefficients": {"a": 1.0, "eps": 1.0, "sigma": 0.0},
    "illuminations": "standard",
    "zeta": "zeta_det",
    "margin": 0.1,
    "threshold_fraction": 0.5,
    "spectrum_count": 10,
    "method": "average",
    "exponent_mode": "omega_squared",
    "momm": {"theta": 0.5, "D": 2.0, "trials": 200, "degree": 10},
    "seed": 0,
    "jobs": 1,
    "out": "run",
}


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


def _merge(base: dict, extra: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _set_path(cfg: dict, dotted: str, value):
    keys = dotted.split(".")
    node = cfg
    for k in keys[:-1]:
        node = node.setdefault(k, {})
        if not isinstance(node, dict):
            raise ConfigError(f"cannot set {dotted!r}: {k!r} is not an object")
    node[keys[-1]] = value


def _parse_value(text: str):
    try:
        return json.loads(text)
    except json.JSONDecodeError:
        return text


def resolve_config(raw: dict, overrides=(), seed=None, jobs=None, out=None) -> dict:
    """Defaults, then the file, then ``--set`` overrides, then the named flags."""
    cfg = _merge(DEFAULTS, raw)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"override {item!r} is not KEY=VALUE")
        key, val = item.split("=", 1)
        _set_path(cfg, key.strip(), _parse_value(val))
    for key, val in (("seed", seed), ("jobs", jobs), ("out", out)):
        if val is not None:
            cfg[key] = val
    try:
        jsonschema.validate(cfg, CONFIG_SCHEMA)
    except jsonschema.ValidationError as exc:
        where = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ConfigError(f"config invalid at {where}: {exc.message}") from None
    rng = cfg.get("range")
    if rng is not None and not rng["k_min"] < rng["k_max"]:
        raise ConfigError("range needs k_min < k_max")
    return cfg


def build_mesh(cfg: dict) -> Mesh:
    d = dict(cfg["domain"])
    kind = d.pop("type")
    if kind == "rectangle":
        return generate_rectangle(d["nx"], d["ny"], d.get("width", 1.0), d.get("height", 1.0),
                                  tuple(d.get("origin", (0.0, 0.0))))
    if kind == "disk":
        return generate_disk(d["refinement"], d.get("radius", 1.0),
                             tuple(d.get("center", (0.0, 0.0))))
    if kind == "polygon":
        return generate_polygon(d["corners"], d.get("refinement", 3))
    return Mesh.from_json(Path(d["path"]))


def build_coefficients(cfg: dict, mesh: Mesh) -> CoefficientSet:
    c = cfg["coefficients"]
    coeffs = CoefficientSet.build(mesh, c.get("a", 1.0), c.get("eps", 1.0), c.get("sigma", 0.0),
                                  c.get("lambda"))
    regime = cfg.get("regime")
    if regime == "lossy" and coeffs.lossless:
        raise ConfigError("regime 'lossy' requires sigma > 0 but sigma vanishes")
    if regime == "lossless" and not coeffs.lossless:
        raise ConfigError("regime 'lossless' requires sigma = 0")
    return coeffs


def build_illuminations(cfg: dict) -> list[Illumination]:
    spec = cfg["illuminations"]
    if spec == "standard":
        return standard_illuminations()
    out = []
    for item in spec:
        if item["kind"] == "constant_one":
            out.append(Illumination.one())
        elif item["kind"] == "coordinate":
            out.append(Illumination.coordinate(item["axis"]))
        else:
            out.append(Illumination.linear(*item["coefficients"]))
    return out


def _range(cfg: dict) -> AdmissibleRange:
    if "range" not in cfg:
        raise ConfigError("this command needs a 'range' entry")
    r = cfg["range"]
    return AdmissibleRange(r["k_min"], r["k_max"], r.get("M"))


def _frequencies(cfg: dict) -> list[float]:
    if "frequencies" in cfg:
        return [float(w) for w in cfg["frequencies"]]
    if "range" in cfg and "n" in cfg:
        return make_grid(_range(cfg), cfg["n"]).frequencies.tolist()
    raise ConfigError("give 'frequencies' or both 'range' and 'n'")


class Run:
    """Lazily built objects shared by the subcommands."""

    def __init__(self, cfg: dict):
        self.cfg = cfg
        self.out = Path(cfg["out"])
        self._mesh = self._coeffs = self._spec = None

    @property
    def mesh(self) -> Mesh:
        if self._mesh is None:
            self._mesh = build_mesh(self.cfg)
        return self._mesh

    @property
    def coeffs(self) -> CoefficientSet:
        if self._coeffs is None:
            self._coeffs = build_coefficients(self.cfg, self.mesh)
        return self._coeffs

    def spectrum(self, M=None):
        if self._spec is None:
            if M is None:
                self._spec = estimate_spectrum(self.mesh, self.coeffs,
                                               min(self.cfg["spectrum_count"], len(self.mesh.interior)))
            else:
                self._spec = estimate_spectrum_covering(self.mesh, self.coeffs, M,
                                                        self.cfg["spectrum_count"])
        return self._spec

    def guard_spectrum(self, omega_max):
        return self.spectrum(omega_max) if self.coeffs.lossless else None

    def region(self):
        return interior_region(self.mesh, self.cfg["margin"])

    def start(self):
        self.out.mkdir(parents=True, exist_ok=True)
        io.write_json(self.out / "config.json", self.cfg)


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_mesh(run: Run) -> dict:
    mesh = run.mesh
    mesh.to_json(run.out / "mesh.json")
    io.write_vtk(run.out / "mesh.vtk", mesh, {})
    return {"n_vertices": mesh.n_vertices, "n_triangles": mesh.n_triangles, "h": mesh.h,
            "domain_tag": mesh.domain_tag}


def cmd_spectrum(run: Run) -> dict:
    rep = spectrum_report(run.spectrum())
    io.write_json(run.out / "spectrum.json", rep)
    return rep


def cmd_solve(run: Run) -> dict:
    mesh, coeffs = run.mesh, run.coeffs
    freqs = _frequencies(run.cfg)
    phis = build_illuminations(run.cfg)
    spec = run.guard_spectrum(max(freqs)) if max(freqs) > 0 else None
    fields = []
    for k, w in enumerate(freqs):
        for j, phi in enumerate(phis):
            u = solve_helmholtz(mesh, coeffs, w, phi, spectrum=spec, gap_tol=run.cfg.get("gap_tol"))
            stem = f"field_w{k}_phi{j}"
            io.write_field_csv(run.out / f"{stem}.csv", mesh, u.nodal_values)
            io.write_vtk(run.out / f"{stem}.vtk", mesh, {"u": u.nodal_values})
            fields.append({"file": f"{stem}.csv", "omega": w, "illumination": phi.name,
                           "residual": u.residual})
    summary = {"fields": fields}
    if spec is not None:
        summary["spectrum"] = spectrum_report(spec)
        io.write_json(run.out / "spectrum.json", summary["spectrum"])
    io.write_json(run.out / "solve.json", summary)
    return summary


def _problem(run: Run, omega_max: float) -> Problem:
    phis = build_illuminations(run.cfg)
    return Problem(run.mesh, run.coeffs, phis, ZetaMap(run.cfg["zeta"]), run.region(),
                   spectrum=run.guard_spectrum(omega_max), gap_tol=run.cfg.get("gap_tol"),
                   threshold_fraction=run.cfg["threshold_fraction"], jobs=run.cfg["jobs"])


def _write_completeness(run: Run, report):
    io.write_json(run.out / "completeness.json", report.to_dict())
    (run.out / "scores.csv").write_text(report.to_csv(run.mesh))


def cmd_sweep(run: Run) -> dict:
    rng = _range(run.cfg)
    if run.cfg["range"].get("select_gap") and run.coeffs.lossless:
        rng = admissible_subinterval(rng, run.spectrum(rng.M))
    problem = _problem(run, rng.M)
    if "target" in run.cfg:
        t = run.cfg["target"]
        n, report = find_min_n(problem, rng, t["C"], t.get("n_max", 16))
    else:
        n = run.cfg.get("n", 2)
        report = problem.certify(make_grid(rng, n).frequencies)
        if report is None:
            raise NoGap("every grid frequency lies too close to the spectrum")
    _write_completeness(run, report)
    out = sweep_report(n, report)
    out["range"] = [rng.k_min, rng.k_max]
    io.write_json(run.out / "sweep.json", out)
    return out


def cmd_certify(run: Run) -> dict:
    freqs = _frequencies(run.cfg)
    problem = _problem(run, max(freqs))
    report = problem.certify(freqs)
    if report is None:
        raise NoGap("every frequency lies too close to the spectrum")
    _write_completeness(run, report)
    return {"achieved_C": report.achieved_C, "complete": report.complete,
            "frequencies_used": report.frequencies_used.tolist(),
            "dropped_frequencies": report.dropped_frequencies}


def cmd_recon_mw(run: Run) -> dict:
    from .imaging_mw import combine_contrast, reconstruct_contrast, reconstruct_epsilon, synthesize_mw

    mesh, coeffs = run.mesh, run.coeffs
    freqs = _frequencies(run.cfg)
    phis = standard_illuminations()
    spec = run.guard_spectrum(max(freqs)) if max(freqs) > 0 else None
    region = run.region()
    data = [synthesize_mw(mesh, [solve_helmholtz(mesh, coeffs, w, p, spectrum=spec) for p in phis],
                          coeffs) for w in freqs]
    contrast = combine_contrast([reconstruct_contrast(d, region, method=run.cfg["method"])
                                 for d in data])
    eps_true = coeffs.nodal("eps", mesh)
    a_true = coeffs.nodal("a", mesh)
    if a_true.ndim > 1:
        a_true = a_true[:, 0, 0]
    truth = Illumination.from_samples(mesh.vertices, np.log(eps_true), "log_eps")
    eps = reconstruct_epsilon(data, contrast, truth, run.cfg["exponent_mode"])
    m = contrast.mask
    c_true = a_true / eps_true
    io.write_table_csv(run.out / "contrast.csv", {
        "vertex_id": np.flatnonzero(m), "x": mesh.vertices[m, 0], "y": mesh.vertices[m, 1],
        "contrast": contrast.values[m], "contrast_true": c_true[m]})
    p = eps.parent_index
    io.write_table_csv(run.out / "epsilon.csv", {
        "vertex_id": p, "x": mesh.vertices[p, 0], "y": mesh.vertices[p, 1],
        "epsilon": eps.epsilon, "epsilon_true": eps_true[p]})
    io.write_vtk(run.out / "recon_mw.vtk", mesh, {"contrast": contrast.values,
                                                  "contrast_true": c_true, "eps_true": eps_true})
    out = {"frequencies": freqs, "exponent_mode": eps.exponent_mode,
           "contrast_rel_Linf_error": float(np.max(np.abs(contrast.values[m] - c_true[m]))
                                            / np.max(np.abs(c_true[m]))),
           "epsilon_rel_Linf_error": float(np.max(np.abs(eps.epsilon - eps_true[p]))
                                           / np.max(np.abs(eps_true[p]))),
           "mode_divergence": eps.mode_divergence, "mask_fraction": float(m.sum() / len(region))}
    io.write_json(run.out / "recon_mw.json", out)
    return out


def cmd_recon_qtat(run: Run) -> dict:
    from .imaging_qtat import reconstruct_sigma, relative_l2_error, synthesize_qtat

    mesh, coeffs = run.mesh, run.coeffs
    freqs = _frequencies(run.cfg)
    region = run.region()
    sig_true = coeffs.nodal("sigma", mesh)
    per_freq = []
    for k, w in enumerate(freqs):
        data = synthesize_qtat(mesh, [solve_helmholtz(mesh, coeffs, w, p)
                                      for p in standard_illuminations()], coeffs)
        res = reconstruct_sigma(data, region, method=run.cfg["method"])
        m = res.mask
        io.write_table_csv(run.out / f"sigma_w{k}.csv", {
            "vertex_id": np.flatnonzero(m), "x": mesh.vertices[m, 0], "y": mesh.vertices[m, 1],
            "sigma": res.values[m], "sigma_true": sig_true[m]})
        per_freq.append({"omega": w, "file": f"sigma_w{k}.csv",
                         "sigma_rel_L2_error": relative_l2_error(res, sig_true),
                         "imag_ratio": res.imag_ratio,
                         "mask_fraction": float(m.sum() / len(region))})
    out = {"frequencies": freqs, "reconstructions": per_freq}
    io.write_json(run.out / "recon_qtat.json", out)
    return out


def cmd_momm(run: Run) -> dict:
    p = run.cfg["momm"]
    res = empirical_momm(p["theta"], p["D"], p["trials"], p["degree"], run.cfg["seed"])
    out = {"theta": res.theta, "D": res.D, "trials": p["trials"], "degree": p["degree"],
           "worst_ratio": res.worst_ratio, "calibrated_C_tilde": res.calibrated_C_tilde}
    io.write_json(run.out / "momm.json", out)
    return out


ARTIFACTS = ("mesh.json", "spectrum.json", "solve.json", "sweep.json", "completeness.json",
             "recon_mw.json", "recon_qtat.json", "momm.json")


def _heatmap(scores_csv: Path, dest: Path):
    """Score matrix over the grid of distinct coordinates (rows: y, columns: x)."""
    data = np.loadtxt(scores_csv, delimiter=",", skiprows=1, ndmin=2)
    x, y, s = np.round(data[:, 1], 12), np.round(data[:, 2], 12), data[:, 3]
    xs, ix = np.unique(x, return_inverse=True)
    ys, iy = np.unique(y, return_inverse=True)
    if len(xs) * len(ys) > 4 * len(s):
        # scattered vertices (disk, polygon): keep plot-ready triplets
        io.write_table_csv(dest, {"x": x, "y": y, "score": s})
        return
    M = np.full((len(ys), len(xs)), np.nan)
    M[iy, ix] = s
    lines = ["y\\x," + ",".join(repr(float(v)) for v in xs)]
    for yv, row in zip(ys, M):
        lines.append(repr(float(yv)) + "," + ",".join("" if np.isnan(v) else repr(float(v))
                                                      for v in row))
    dest.write_text("\n".join(lines) + "\n")


def cmd_report(run_dir: Path) -> dict:
    run_dir = Path(run_dir)
    if not run_dir.is_dir():
        raise MissingArtifact(f"{run_dir} is not a directory")
    found = [a for a in ARTIFACTS if (run_dir / a).exists()]
    if not (run_dir / "config.json").exists() or not found:
        raise MissingArtifact(f"{run_dir} holds no completed run")
    report = {"config": io.read_json(run_dir / "config.json")}
    for name in found:
        report[name[:-5]] = io.read_json(run_dir / name)
    if "recon_qtat" in report:
        # recomputed from the ground truth stored next to each reconstruction
        errs = []
        for r in report["recon_qtat"]["reconstructions"]:
            t = np.loadtxt(run_dir / r["file"], delimiter=",", skiprows=1, ndmin=2)
            errs.append(float(np.linalg.norm(t[:, 3] - t[:, 4]) / np.linalg.norm(t[:, 4])))
        report["sigma_rel_L2_error"] = max(errs)
        report["sigma_rel_L2_error_per_frequency"] = errs
    if (run_dir / "scores.csv").exists():
        _heatmap(run_dir / "scores.csv", run_dir / "heatmap_scores.csv")
        report["heatmaps"] = ["heatmap_scores.csv"]
    io.write_json(run_dir / "report.json", report)
    return report


COMMANDS = {
    "mesh": cmd_mesh, "spectrum": cmd_spectrum, "solve": cmd_solve, "sweep": cmd_sweep,
    "certify": cmd_certify, "recon-mw": cmd_recon_mw, "recon-qtat": cmd_recon_qtat,
    "momm": cmd_momm,
}


def _exit_code(exc: BaseException) -> int:
    if isinstance(exc, NotReached):
        return EXIT_NOT_REACHED
    if isinstance(exc, (NearEigenvalue, SingularSystem, SingularA, NoGap, EmptyMask)):
        return EXIT_NUMERIC
    if isinstance(exc, (ConfigError, MissingArtifact, ValueError, FileNotFoundError)):
        return EXIT_VALIDATION
    return EXIT_NUMERIC


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="multifreq", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        p = sub.add_parser(name)
        p.add_argument("config", help="JSON run configuration")
        p.add_argument("--set", dest="overrides", action="append", default=[],
                       metavar="KEY=VALUE", help="override a config entry (dotted key, JSON value)")
        p.add_argument("--seed", type=int)
        p.add_argument("--jobs", type=int)
        p.add_argument("--out")
    p = sub.add_parser("report")
    p.add_argument("run_dir")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    out_dir = None
    try:
        if args.command == "report":
            result = cmd_report(Path(args.run_dir))
            print(json.dumps({"report": str(Path(args.run_dir) / "report.json"),
                              "keys": sorted(result)}, sort_keys=True))
            return EXIT_OK
        try:
            raw = json.loads(Path(args.config).read_text())
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from None
        if not isinstance(raw, dict):
            raise ConfigError("config must be a JSON object")
        cfg = resolve_config(raw, args.overrides, args.seed, args.jobs, args.out)
        run = Run(cfg)
        out_dir = run.out
        run.start()
        result = COMMANDS[args.command](run)
        print(io.dumps(result), end="")
        return EXIT_OK
    except (MultifreqError, ValueError, FileNotFoundError) as exc:
        code = _exit_code(exc)
        err = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
        if isinstance(exc, NotReached):
            err["best_n"] = exc.best_n
            err["best_C"] = exc.report.achieved_C if exc.report is not None else None
        if out_dir is not None and out_dir.is_dir():
            io.write_json(out_dir / "error.json", err)
        print(json.dumps(err, sort_keys=True), file=sys.stderr)
        return code


if __name__ == "__main__":
    sys.exit(main())
