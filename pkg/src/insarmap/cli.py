"""Command-line pipeline: simulate -> image -> elevate -> pointcloud.

Every stage materializes its artifact as a file, so the one-shot `pipeline`
command is exactly the four stages run back to back on those files.  Exit
codes: 0 success, 2 config/parse error, 3 data-format error, 4
numerical-domain error.
"""

from __future__ import annotations

import argparse
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import configio, formats, imaging, interferometry, pointcloud, simulate
from .errors import ConfigError, DataFormatError, DomainError
from .types import derive_chirp_params


@dataclass
class PipelineRun:
    """Record of one pipeline invocation: inputs, outputs, and stage timings."""

    scene_path: str
    trajectory_path: str
    config_path: str
    out_dir: Path
    seed: int
    artifacts: dict[str, Path] = field(default_factory=dict)
    stage_seconds: dict[str, float] = field(default_factory=dict)


def _load_config(path) -> dict:
    return configio.parse_kv_file(path) if path else {}


def _cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    if not cfg:
        raise ConfigError("simulate requires --config with the chirp parameters")
    chirp = configio.load_chirp_config(cfg, source=str(args.config))
    derived = derive_chirp_params(chirp)
    array = configio.load_virtual_array(cfg, derived.wavelength_m)
    scene = configio.load_scene_csv(args.scene)
    import warnings

    # surface the trajectory speed warning on stderr instead of the warning
    # machinery, so scripts see it regardless of -W settings
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        traj = configio.load_trajectory_csv(args.trajectory)
    for w in caught:
        print(f"warning: {w.message}", file=sys.stderr)

    window = None
    if "capture_start_s" in cfg or "capture_end_s" in cfg:
        window = (
            float(cfg.get("capture_start_s", traj.start_time_s)),
            float(cfg.get("capture_end_s", traj.end_time_s)),
        )
    pattern = cfg.get("element_pattern_cos_power")
    capture = simulate.synthesize_capture(
        scene, traj, chirp, array, window,
        pattern_cos_power=None if pattern is None else float(pattern),
    )
    snr_db = float(cfg.get("per_sample_snr_db", float("inf")))
    capture = simulate.add_noise(capture, snr_db, seed=args.seed)
    formats.write_capture(capture, args.output)
    print(f"[simulate] wrote {args.output}")
    print(
        f"[simulate] pulses: {capture.n_records} records over {capture.n_cycles} TDM cycles, "
        f"duration {capture.duration_s():.4f} s, {array.n_vx} VX"
    )
    return 0


def _cmd_image(args) -> int:
    cfg = _load_config(args.config)
    capture = formats.read_capture(args.capture)
    grid = configio.load_grid(cfg)
    aperture = configio.load_aperture(cfg)
    options = configio.load_imaging_options(cfg)
    stack = imaging.image_stack(capture, grid, aperture, threads=args.threads, **options)
    formats.write_image_stack(stack, args.output)
    peak = float(np.abs(stack.images).max())
    print(f"[image] wrote {args.output}")
    print(
        f"[image] {stack.array.n_vx} VX images of {grid.n_u}x{grid.n_v} px "
        f"({grid.extent_m[0]:.2f} m x {grid.extent_m[1]:.2f} m at {grid.pixel_size_m:.3f} m), "
        f"peak |I| = {peak:.4g}"
    )
    if args.pgm_dir:
        pgm_dir = Path(args.pgm_dir)
        pgm_dir.mkdir(parents=True, exist_ok=True)
        for k in range(stack.array.n_vx):
            formats.write_pgm(stack.images[k], pgm_dir / f"vx{k:02d}.pgm")
        print(f"[image] dumped {stack.array.n_vx} log-magnitude PGMs to {pgm_dir}")
    return 0


def _cmd_elevate(args) -> int:
    stack = formats.read_image_stack(args.stack)
    emap = interferometry.build_elevation_map(stack)
    formats.write_elevation_map(emap, args.output)
    valid = np.isfinite(emap.elevation)
    print(f"[elevate] wrote {args.output}")
    if valid.any():
        deg = np.degrees(emap.elevation[valid])
        print(
            f"[elevate] elevation recovered on {int(valid.sum())}/{valid.size} px, "
            f"range [{deg.min():.2f}, {deg.max():.2f}] deg, baseline {emap.baseline_m * 1e3:.4f} mm"
        )
    else:
        print("[elevate] no pixel has a recoverable elevation")
    return 0


def _filter_report(cloud: pointcloud.ElevationPointCloud, cfg: pointcloud.FilterConfig) -> list[str]:
    stats = cloud.stats
    total = max(stats.candidates, 1)
    labels = {
        "no_elevation": "no recoverable elevation",
        "snr": f"snr < {cfg.snr_threshold_db:g} dB",
        "circular_variance": f"circular variance > {cfg.max_circular_variance:g}",
        "elevation_angle": f"|elevation| > {cfg.max_elevation_angle_deg:g} deg",
        "front_cone": (
            f"front cone (r < {cfg.min_radius_m:g} m, "
            f"|az - {cfg.front_azimuth_deg:g}| <= {cfg.front_azimuth_halfwidth_deg:g} deg)"
        ),
        "underground": f"underground (z < {cloud.provenance.get('min_z_m', cfg.resolved_min_z_m):g} m)",
    }
    lines = [f"[filter] candidates: {stats.candidates}"]
    for key, count in stats.rejected.items():
        lines.append(f"[filter] rejected {labels[key]}: {count} ({100.0 * count / total:.1f}%)")
    lines.append(f"[filter] kept: {stats.kept}")
    if len(cloud):
        z = cloud.z
        phi = np.degrees(np.arcsin(np.clip(z / np.maximum(np.hypot(cloud.y, z), 1e-30), -1, 1)))
        lines.append(
            f"[filter] elevation deg: min={phi.min():.2f} max={phi.max():.2f} mean={phi.mean():.2f}"
        )
        lines.append(
            f"[filter] z range: [{z.min():.3f}, {z.max():.3f}] m relative to phase center"
        )
    return lines


def _cmd_pointcloud(args) -> int:
    cfg = _load_config(args.config)
    emap = formats.read_elevation_map(args.map)
    fcfg = configio.load_filter_config(cfg)
    cloud = pointcloud.filter_points(emap, fcfg)
    pointcloud.write_pcd(cloud, args.output)
    print(f"[pointcloud] wrote {args.output} ({len(cloud)} points)")
    if args.csv:
        pointcloud.write_csv(cloud, args.csv)
        print(f"[pointcloud] wrote {args.csv}")
    for line in _filter_report(cloud, fcfg):
        print(line)
    return 0


def _cmd_report(args) -> int:
    cfg = _load_config(args.config)
    emap = formats.read_elevation_map(args.map)
    fcfg = configio.load_filter_config(cfg)
    cloud = pointcloud.filter_points(emap, fcfg)
    for line in _filter_report(cloud, fcfg):
        print(line)
    return 0


def run_pipeline(scene, trajectory, config, out_dir, seed=0, threads=1) -> PipelineRun:
    """Run all four stages back to back, materializing every artifact.

    Raises the stage's error on failure; on success returns the run record
    with artifact paths and per-stage wall times.
    """
    run = PipelineRun(
        scene_path=str(scene),
        trajectory_path=str(trajectory),
        config_path=str(config),
        out_dir=Path(out_dir),
        seed=int(seed),
    )
    run.out_dir.mkdir(parents=True, exist_ok=True)
    run.artifacts = {
        "capture": run.out_dir / "capture.insarraw",
        "stack": run.out_dir / "stack.insarimg",
        "map": run.out_dir / "elevation.insarelv",
        "cloud": run.out_dir / "cloud.pcd",
        "cloud_csv": run.out_dir / "cloud.csv",
    }
    stages = (
        (
            "simulate",
            _cmd_simulate,
            argparse.Namespace(
                scene=scene,
                trajectory=trajectory,
                config=config,
                seed=run.seed,
                output=run.artifacts["capture"],
            ),
        ),
        (
            "image",
            _cmd_image,
            argparse.Namespace(
                capture=run.artifacts["capture"],
                config=config,
                threads=threads,
                output=run.artifacts["stack"],
                pgm_dir=None,
            ),
        ),
        (
            "elevate",
            _cmd_elevate,
            argparse.Namespace(stack=run.artifacts["stack"], output=run.artifacts["map"]),
        ),
        (
            "pointcloud",
            _cmd_pointcloud,
            argparse.Namespace(
                map=run.artifacts["map"],
                config=config,
                output=run.artifacts["cloud"],
                csv=run.artifacts["cloud_csv"],
            ),
        ),
    )
    for name, fn, stage_args in stages:
        t0 = time.monotonic()
        fn(stage_args)
        run.stage_seconds[name] = time.monotonic() - t0
        print(f"[pipeline] stage {name}: {run.stage_seconds[name]:.2f} s")
    return run


def _cmd_pipeline(args) -> int:
    run = run_pipeline(
        args.scene, args.trajectory, args.config, args.out_dir,
        seed=args.seed, threads=args.threads,
    )
    print(f"[pipeline] artifacts in {run.out_dir}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="insarmap",
        description="Interferometric SAR elevation mapping pipeline",
    )
    # global flags; --config and --out-dir may equally be given after the
    # subcommand (SUPPRESS keeps the subparser from clobbering the global)
    parser.add_argument("--config", default=None, help="key-value config file")
    parser.add_argument("--seed", type=int, default=0, help="RNG seed for noise synthesis")
    parser.add_argument("--threads", type=int, default=1, help="worker threads for imaging")
    parser.add_argument("--out-dir", default=".", help="directory for pipeline artifacts")
    sub = parser.add_subparsers(dest="command", required=True)

    def config_opt(p):
        p.add_argument("--config", default=argparse.SUPPRESS, help="key-value config file")

    p = sub.add_parser("simulate", help="synthesize a raw capture for a point-target scene")
    p.add_argument("scene", help="scene CSV (x,y,z,amplitude)")
    p.add_argument("trajectory", help="trajectory CSV (t,x,y,z,qw,qx,qy,qz)")
    config_opt(p)
    p.add_argument("-o", "--output", required=True, help="output .insarraw path")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("image", help="form per-VX SAR images by fast backprojection")
    p.add_argument("capture", help="input .insarraw capture")
    config_opt(p)
    p.add_argument("-o", "--output", required=True, help="output .insarimg path")
    p.add_argument("--pgm-dir", help="also dump per-VX log-magnitude PGMs here")
    p.set_defaults(func=_cmd_image)

    p = sub.add_parser("elevate", help="extract the interferometric elevation map")
    p.add_argument("stack", help="input .insarimg image stack")
    p.add_argument("-o", "--output", required=True, help="output .insarelv path")
    p.set_defaults(func=_cmd_elevate)

    p = sub.add_parser("pointcloud", help="filter and de-project to a 3D point cloud")
    p.add_argument("map", help="input .insarelv elevation map")
    config_opt(p)
    p.add_argument("-o", "--output", required=True, help="output .pcd path")
    p.add_argument("--csv", help="also write a CSV export with quality attributes")
    p.set_defaults(func=_cmd_pointcloud)

    p = sub.add_parser("pipeline", help="run all stages, materializing each artifact")
    p.add_argument("scene")
    p.add_argument("trajectory")
    config_opt(p)
    p.add_argument("--out-dir", default=argparse.SUPPRESS, help="directory for all artifacts")
    p.set_defaults(func=_cmd_pipeline)

    p = sub.add_parser("report", help="print the filter accounting for an elevation map")
    p.add_argument("map", help="input .insarelv elevation map")
    config_opt(p)
    p.set_defaults(func=_cmd_report)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except DataFormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except DomainError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def run() -> None:
    sys.exit(main())


if __name__ == "__main__":
    run()
