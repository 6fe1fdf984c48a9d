"""Command-line surface: generators, estimators, experiments, verification.

Runs are declared in a JSON config file (schema in the README) and driven by
subcommand; every run writes its CSV/JSON artifacts plus a manifest recording
the config hash, seeds, tool version and wall time.  Reruns with identical
config and seed produce byte-identical CSV output.

Exit codes: 0 success, 1 computation failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import json
import os
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .errors import ConfigError
from .geometry import (
    IfsSystem,
    PointCloud,
    SimilarityMap,
    generate_carpet,
    generate_ifs_attractor,
    generate_sequence_set,
    interval_grid,
    load_points,
    product,
    square_grid,
)
from .profiles import MODES, ScaleSchedule, cover_fixed_point, profile_curve
from .projections import SubspaceFrame, projection_experiment
from .svg import Series, dimension_curve_svg
from .verify import run_canonical_checks

COMMANDS = ("generate", "estimate", "profile", "project", "verify")

DEFAULT_THETAS = tuple(round(0.1 * k, 1) for k in range(1, 11))


@dataclass
class RunConfig:
    command: str
    set_spec: dict | None
    parameters: dict
    output: Path
    plot: bool
    seed: int
    workers: int
    raw: dict

    def hash(self) -> str:
        canon = json.dumps(self.raw, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()


def _require(condition: bool, field: str, message: str) -> None:
    if not condition:
        raise ConfigError(field, message)


def load_config(path: str | None, command: str, out: str | None, seed: int | None,
                workers: int | None, plot: bool) -> RunConfig:
    raw: dict = {}
    if path is not None:
        try:
            with open(path) as fh:
                raw = json.load(fh)
        except FileNotFoundError:
            raise ConfigError("config", f"file not found: {path}")
        except json.JSONDecodeError as exc:
            raise ConfigError("config", f"invalid JSON: {exc}")
    if not isinstance(raw, dict):
        raise ConfigError("config", "top level must be an object")
    cfg_command = raw.get("command", command)
    _require(cfg_command == command, "command",
             f"config says {cfg_command!r} but the subcommand is {command!r}")
    parameters = raw.get("parameters", {})
    _require(isinstance(parameters, dict), "parameters", "must be an object")
    set_spec = raw.get("set")
    if command != "verify":
        _require(set_spec is not None, "set", "a point-set descriptor is required")
        _require(isinstance(set_spec, dict), "set", "must be an object")
    output = Path(out if out is not None else raw.get("output", "intdim-out"))
    run_seed = seed if seed is not None else int(parameters.get("seed", 0))
    run_workers = workers if workers is not None else int(parameters.get("workers", os.cpu_count() or 1))
    _require(run_workers >= 1, "workers", "must be at least 1")
    cfg = RunConfig(
        command=command,
        set_spec=set_spec,
        parameters=parameters,
        output=output,
        plot=bool(plot or raw.get("plot", False)),
        seed=run_seed,
        workers=run_workers,
        raw=raw,
    )
    _validate_parameters(cfg)
    return cfg


def _validate_parameters(cfg: RunConfig) -> None:
    p = cfg.parameters
    thetas = p.get("theta_grid", list(DEFAULT_THETAS))
    _require(isinstance(thetas, (list, tuple)) and len(thetas) > 0, "theta_grid",
             "must be a non-empty list")
    for t in thetas:
        _require(isinstance(t, (int, float)) and 0.0 < float(t) <= 1.0, "theta_grid",
                 f"theta={t} outside (0, 1]")
    mode = p.get("mode", "lower")
    _require(mode in MODES, "mode", f"must be one of {MODES}")
    k_min = int(p.get("k_min", 4))
    k_max = int(p.get("k_max", 40))
    _require(1 <= k_min <= k_max <= 48, "k_min/k_max", "need 1 <= k_min <= k_max <= 48")
    _require(int(p.get("tail_window", 4)) >= 1, "tail_window", "must be at least 1")
    _require(float(p.get("tol_s", 1e-3)) > 0, "tol_s", "must be positive")
    _require(float(p.get("solver_tol", 1e-8)) > 0, "solver_tol", "must be positive")
    if cfg.command == "project":
        _require(int(p.get("trials", 20)) >= 1, "trials", "must be at least 1")
        m = int(p.get("m", 1))
        _require(m >= 1, "m", "must be a positive integer")
    if cfg.command == "profile":
        _require(int(p.get("m", 1)) >= 1, "m", "must be a positive integer")


def build_cloud(spec: dict) -> PointCloud:
    if "path" in spec:
        return load_points(spec["path"], spec.get("format"))
    gen = spec.get("generator")
    _require(gen is not None, "set.generator", "generator name or path is required")
    try:
        if gen == "sequence_set":
            return generate_sequence_set(float(spec["p"]), int(spec["count"]))
        if gen == "product":
            return product(build_cloud(spec["left"]), build_cloud(spec["right"]))
        if gen == "interval_grid":
            return interval_grid(int(spec["count"]))
        if gen == "square_grid":
            return square_grid(int(spec["side"]))
        if gen == "cantor":
            return generate_ifs_attractor(IfsSystem.cantor_middle_thirds(), int(spec["depth"]))
        if gen == "ifs":
            maps = tuple(
                SimilarityMap(float(m["ratio"]), tuple(m["translation"]))
                for m in spec["maps"]
            )
            system = IfsSystem(maps, int(spec["ambient_dim"]))
            return generate_ifs_attractor(system, int(spec["depth"]))
        if gen == "carpet":
            return generate_carpet(
                int(spec["base_a"]),
                int(spec["base_b"]),
                [tuple(d) for d in spec["digits"]],
                int(spec["depth"]),
            )
    except KeyError as exc:
        raise ConfigError(f"set.{exc.args[0]}", f"missing field for generator {gen!r}")
    except (TypeError, ValueError) as exc:
        raise ConfigError("set", str(exc))
    raise ConfigError("set.generator", f"unknown generator {gen!r}")


def _fmt(x) -> str:
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(cell) for cell in row])


def _schedule(p: dict) -> ScaleSchedule:
    return ScaleSchedule.geometric(
        int(p.get("k_min", 4)),
        int(p.get("k_max", 40)),
        int(p.get("tail_window", 4)),
        p.get("mode", "lower"),
    )


def _diag_rows(diags):
    rows = []
    for diag in diags:
        for s, r, q in diag.quotients:
            rows.append((diag.theta, s, r, q))
    return rows


def cmd_generate(cfg: RunConfig) -> list[str]:
    cloud = build_cloud(cfg.set_spec)
    write_csv(cfg.output / "points.csv", [f"x{i}" for i in range(cloud.ambient_dim)],
              [tuple(pt) for pt in cloud.points])
    return ["points.csv"]


def cmd_estimate(cfg: RunConfig) -> list[str]:
    p = cfg.parameters
    cloud = build_cloud(cfg.set_spec)
    sched = _schedule(p)
    thetas = [float(t) for t in p.get("theta_grid", DEFAULT_THETAS)]
    tol_s = float(p.get("tol_s", 1e-3))
    results = [cover_fixed_point(cloud, t, sched, tol_s, full_output=True) for t in thetas]
    rows = [
        (t, cloud.ambient_dim, sched.mode, est, diag.residual)
        for t, (est, diag) in zip(thetas, results)
    ]
    write_csv(cfg.output / "estimates.csv", ("theta", "m", "mode", "estimate", "residual"), rows)
    write_csv(cfg.output / "diagnostics.csv", ("theta", "s", "r", "quotient"),
              _diag_rows([diag for _, diag in results]))
    outputs = ["estimates.csv", "diagnostics.csv"]
    if cfg.plot:
        svg = dimension_curve_svg(
            [Series(f"dim (mode={sched.mode})", thetas, [est for est, _ in results])],
            y_top=cloud.ambient_dim * 1.1,
        )
        (cfg.output / "curve.svg").write_text(svg)
        outputs.append("curve.svg")
    return outputs


def cmd_profile(cfg: RunConfig) -> list[str]:
    p = cfg.parameters
    cloud = build_cloud(cfg.set_spec)
    m = int(p.get("m", 1))
    if m > cloud.ambient_dim:
        raise ConfigError("m", f"m={m} exceeds the ambient dimension {cloud.ambient_dim}")
    profile = profile_curve(
        cloud,
        m,
        [float(t) for t in p.get("theta_grid", DEFAULT_THETAS)],
        _schedule(p),
        float(p.get("tol_s", 1e-3)),
        float(p.get("solver_tol", 1e-8)),
    )
    write_csv(cfg.output / "profile.csv", ("theta", "m", "mode", "estimate", "residual"),
              profile.as_rows())
    write_csv(cfg.output / "diagnostics.csv", ("theta", "s", "r", "quotient"),
              _diag_rows(profile.diagnostics))
    outputs = ["profile.csv", "diagnostics.csv"]
    if cfg.plot:
        svg = dimension_curve_svg(
            [Series(f"profile m={m}", list(profile.theta_grid), list(profile.estimates))],
            y_top=m * 1.1,
        )
        (cfg.output / "curve.svg").write_text(svg)
        outputs.append("curve.svg")
    return outputs


def cmd_project(cfg: RunConfig) -> list[str]:
    p = cfg.parameters
    cloud = build_cloud(cfg.set_spec)
    m = int(p.get("m", 1))
    if m >= cloud.ambient_dim:
        raise ConfigError("m", f"m={m} must be below the ambient dimension {cloud.ambient_dim}")
    named = {}
    for label in p.get("axis_frames", []):
        coords = [int(c) for c in label] if isinstance(label, (list, tuple)) else [int(label)]
        named[f"axis{'-'.join(str(c) for c in coords)}"] = SubspaceFrame.axis(
            cloud.ambient_dim, coords
        )
    report = projection_experiment(
        cloud,
        m,
        int(p.get("trials", 20)),
        [float(t) for t in p.get("theta_grid", DEFAULT_THETAS)],
        _schedule(p),
        seed=cfg.seed,
        slack=float(p.get("slack", 0.07)),
        named_frames=named,
        solver_tol=float(p.get("solver_tol", 1e-8)),
        workers=cfg.workers,
    )
    write_csv(cfg.output / "projections.csv",
              ("frame_seed", "theta", "estimate", "profile", "violation_flag"),
              report.as_rows())
    frames_payload = [
        {"seed": frame.seed, "basis": frame.basis.tolist()} for frame in report.frames
    ] + [
        {"label": label, "basis": frame.basis.tolist()}
        for label, (frame, _) in sorted(report.extra_frames.items())
    ]
    with open(cfg.output / "frames.json", "w") as fh:
        json.dump(frames_payload, fh, indent=1)
    outputs = ["projections.csv", "frames.json"]
    if cfg.plot:
        scatter = [
            (theta, est)
            for row in report.per_frame_estimates
            for theta, est in zip(report.theta_grid, row)
        ]
        svg = dimension_curve_svg(
            [Series(f"profile m={m}", list(report.theta_grid), list(report.profile.estimates))],
            scatter=scatter,
            y_top=cloud.ambient_dim * 1.1,
        )
        (cfg.output / "curve.svg").write_text(svg)
        outputs.append("curve.svg")
    return outputs


def cmd_verify(cfg: RunConfig) -> list[str]:
    p = cfg.parameters
    reports = run_canonical_checks(
        seed=cfg.seed,
        pairs_per_set=int(p.get("pairs_per_set", 10)),
        r_exponents=tuple(p.get("r_exponents", (4, 6, 8, 10))),
        thetas=tuple(p.get("thetas", (0.3, 0.7, 1.0))),
        mc_trials=int(p.get("mc_trials", 2_000_000)),
        slab_mc_trials=int(p.get("slab_mc_trials", 8_000_000)),
        solver_tol=float(p.get("solver_tol", 1e-8)),
    )
    bundle = {
        "all_pass": all(r.passed for r in reports),
        "reports": [r.to_json_dict() for r in reports],
    }
    with open(cfg.output / "verify.json", "w") as fh:
        json.dump(bundle, fh, indent=1, default=float)
    for r in reports:
        status = "pass" if r.passed else "FAIL"
        print(f"{status}  {r.name}  worst_margin={r.worst_margin:.3e}")
    if not bundle["all_pass"]:
        raise RuntimeError("verification checks failed; see verify.json")
    return ["verify.json"]


_RUNNERS = {
    "generate": cmd_generate,
    "estimate": cmd_estimate,
    "profile": cmd_profile,
    "project": cmd_project,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="intdim",
        description="Dimension interpolation toolkit: covering sums, kernel capacities, "
        "and subspace projection experiments on finite point sets.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        cmd = sub.add_parser(name)
        cmd.add_argument("--config", default=None, help="JSON run configuration")
        cmd.add_argument("--out", default=None, help="output directory")
        cmd.add_argument("--seed", type=int, default=None)
        cmd.add_argument("--workers", type=int, default=None)
        cmd.add_argument("--plot", action="store_true")
    args = parser.parse_args(argv)

    try:
        cfg = load_config(args.config, args.command, args.out, args.seed, args.workers, args.plot)
        cfg.output.mkdir(parents=True, exist_ok=True)
    except ConfigError as exc:
        print(f"configuration error -- {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"configuration error -- output: {exc}", file=sys.stderr)
        return 2

    started = time.perf_counter()
    manifest = {
        "command": cfg.command,
        "config_sha256": cfg.hash(),
        "seed": cfg.seed,
        "workers": cfg.workers,
        "version": __version__,
        "status": "running",
        "outputs": [],
    }
    status = 0
    try:
        manifest["outputs"] = _RUNNERS[cfg.command](cfg)
        manifest["status"] = "ok"
    except ConfigError as exc:
        print(f"configuration error -- {exc}", file=sys.stderr)
        manifest["status"] = "config-error"
        manifest["error"] = str(exc)
        status = 2
    except Exception as exc:  # noqa: BLE001 -- boundary: report and set exit code
        print(f"error -- {exc}", file=sys.stderr)
        manifest["status"] = "error"
        manifest["error"] = str(exc)
        status = 1
    finally:
        manifest["wall_time_s"] = round(time.perf_counter() - started, 3)
        with open(cfg.output / "manifest.json", "w") as fh:
            json.dump(manifest, fh, indent=1)
    return status


if __name__ == "__main__":
    sys.exit(main())
