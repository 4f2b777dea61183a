"""
The srk command line

Subcommands

- cluster: group scene points into proposals
- reconstruct: turn proposals into placed meshes
- retrieve: nearest pool entry or projected code for a latent code
- metric: score one mesh against another mesh or a point set
- evaluate: JSON report (or AP tables) for prediction directories against ground truth
- icp: align a mesh to observed points
- synth: write a synthetic scene with its pool and fixture decoder
- interp: decode codes interpolated between two codes

Results go to stdout or to files, logs to stderr. The exit code is 0 on
success, 2 for invalid inputs or unreadable files and 3 when a
reconstruction finished with failed proposals.
"""
from loguru import logger
from typing import Any, Callable, Dict, List, Optional, Sequence
from pathlib import Path
import argparse
import json
import sys
import numpy as np
from pydantic import ValidationError

import scene_recon_kit
from scene_recon_kit.errors import InputError, FileReadError, NotFoundError
from scene_recon_kit.errors import AlignmentFailedError
from scene_recon_kit.config import Settings, load_settings, load_scene_spec
from scene_recon_kit.config import load_labels, with_overrides
from scene_recon_kit.clustering.proposals import multi_scale_cluster
from scene_recon_kit.bsp.decoder import decode_planes, interpolate_latent
from scene_recon_kit.bsp.decoder import load_decoder
from scene_recon_kit.bsp.extract import extract_mesh
from scene_recon_kit.latent.pool import load_pool
from scene_recon_kit.latent.ops import retrieve, project
from scene_recon_kit.metrics.distance import pcr
from scene_recon_kit.metrics.sampling import chamfer
from scene_recon_kit.metrics.voxel import voxel_iou
from scene_recon_kit.metrics.lightfield import lightfield_distance
from scene_recon_kit.icp import icp_align
from scene_recon_kit.evaluation.report import evaluate_scenes
from scene_recon_kit.io.scene import load_scene
from scene_recon_kit.io.proposals import load_proposals, save_proposals
from scene_recon_kit.io.mesh import load_mesh, save_mesh, load_points
from scene_recon_kit.io.records import load_scene_records
from scene_recon_kit.pipeline import reconstruct_scene, write_reconstruction
from scene_recon_kit.synth.generate import gen_scene, write_synth

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_PARTIAL = 3


def _float_list(text: str) -> List[float]:
    """Parse a comma separated list of numbers"""
    try:
        return [float(x) for x in text.split(",") if x.strip() != ""]
    except ValueError:
        raise argparse.ArgumentTypeError(f"'{text}' is not a list of numbers")


def _print_json(data: Dict[str, Any]) -> None:
    print(json.dumps(data, sort_keys=True, indent=2))


def run_cluster(args: argparse.Namespace, settings: Settings) -> int:
    cfg = with_overrides(
        settings.cluster,
        radii=args.radii,
        radius=args.radius,
        multi_scale=False if args.radius is not None else None,
        min_points=args.min_points,
        dual_set=args.dual_set,
        dedup_iou=args.dedup_iou,
        arithmetic_angle_mean=args.arithmetic_angle_mean,
    )
    scene = load_scene(args.scene)
    proposals = multi_scale_cluster(scene, cfg, load_labels(settings))
    save_proposals(proposals, args.out, scene.n_points)
    _print_json({"proposals": len(proposals), "out": str(args.out)})
    return EXIT_OK


def run_reconstruct(args: argparse.Namespace, settings: Settings) -> int:
    cfg = with_overrides(
        settings.reconstruct,
        mode=args.mode,
        conf_floor=args.conf_floor,
        min_points=args.min_points,
        stochastic=args.stochastic,
        seed=args.seed,
        k=args.k,
        affine_span=args.affine_span,
        category_filter=args.category_filter,
        use_residual=args.use_residual,
        icp=args.icp,
        arithmetic_angle_mean=args.arithmetic_angle_mean,
        record_timing=args.timing,
    )
    scene = load_scene(args.scene)
    proposals = load_proposals(args.proposals, scene.n_points)
    icp_cfg = with_overrides(
        settings.icp,
        max_iterations=args.icp_max_iterations,
        max_correspondence=args.icp_max_correspondence,
        with_scale=args.icp_with_scale,
        surface_samples=args.icp_surface_samples,
    )
    decoder = load_decoder(args.decoder) if args.decoder is not None else None
    pool = None
    if args.pool is not None:
        pool = load_pool(args.pool, load_meshes=cfg.mode == "retrieve")
    recon = reconstruct_scene(scene, proposals, decoder, pool, cfg, icp_cfg)
    write_reconstruction(recon, args.out_dir, args.suffix)
    report = recon.report
    _print_json(
        {
            "reconstructed": report.n_reconstructed,
            "skipped": report.n_skipped,
            "failed": report.n_failed,
        }
    )
    return EXIT_PARTIAL if report.has_failures() else EXIT_OK


def run_retrieve(args: argparse.Namespace, settings: Settings) -> int:
    pool = load_pool(args.pool, load_meshes=False)
    z = np.array(args.code)
    if args.project:
        k = args.k if args.k is not None else settings.reconstruct.k
        projected = project(pool, z, k, args.category, args.affine_span)
        _print_json({"code": projected.tolist(), "k": k})
        return EXIT_OK
    entry_id, distance = retrieve(pool, z, args.category)
    _print_json({"id": entry_id, "distance": distance})
    return EXIT_OK


def _load_point_set(path: Path) -> np.ndarray:
    """Points of a PLY file, or the vertices of an OBJ mesh"""
    if path.suffix.lower() == ".ply":
        return load_points(path)
    return load_mesh(path).vertices


def run_metric(args: argparse.Namespace, settings: Settings) -> int:
    metric_cfg = with_overrides(
        settings.metric,
        omega=args.omega,
        voxel=args.voxel,
        samples=args.samples,
        seed=args.seed,
    )
    mesh = load_mesh(args.a)
    if args.kind == "pcr":
        value = pcr(_load_point_set(args.b), mesh, metric_cfg.omega)
    elif args.kind == "iou":
        value = voxel_iou(mesh, load_mesh(args.b), metric_cfg.voxel)
    elif args.kind == "cd":
        value = chamfer(mesh, load_mesh(args.b), metric_cfg.samples, metric_cfg.seed)
    else:
        value = lightfield_distance(mesh, load_mesh(args.b), settings.lfd)
    print(repr(float(value)))
    return EXIT_OK


def run_evaluate(args: argparse.Namespace, settings: Settings) -> int:
    cfg = with_overrides(
        settings.evaluate,
        metric=args.metric,
        thresholds=args.threshold,
        conf_floor=args.conf_floor,
        recognition=args.recognition,
    )
    metric_cfg = with_overrides(settings.metric, omega=args.omega, voxel=args.voxel)
    scenes = load_scene_records(args.gt_dir, args.pred_dir)
    report = evaluate_scenes(scenes, cfg, metric_cfg, settings.lfd)
    if args.out is not None:
        args.out.write_text(report.to_json() + "\n")
        logger.info(f"Wrote evaluation report to {args.out}")
    if not args.table:
        print(report.to_json())
        return EXIT_OK
    print(report.to_dataframe().to_string(float_format=lambda x: f"{x:.4f}"))
    for threshold, value in sorted(report.recognition.items()):
        print(f"recognition@{threshold} {value:.4f}")
    return EXIT_OK


def run_icp(args: argparse.Namespace, settings: Settings) -> int:
    cfg = with_overrides(
        settings.icp,
        max_iterations=args.max_iterations,
        max_correspondence=args.max_correspondence,
        with_scale=args.with_scale,
    )
    result = icp_align(load_mesh(args.mesh), load_points(args.points), cfg)
    save_mesh(result.mesh, args.out)
    _print_json(
        {
            "rms": result.rms,
            "iterations": result.n_iterations,
            "rotation": [list(row) for row in result.transform.rotation],
            "translation": list(result.transform.translation),
            "scale": result.transform.scale,
        }
    )
    return EXIT_OK


def run_synth(args: argparse.Namespace, settings: Settings) -> int:
    spec = with_overrides(load_scene_spec(args.spec), seed=args.seed)
    generated = gen_scene(spec)
    write_synth(generated, args.out_dir)
    _print_json(
        {
            "points": generated.scene.n_points,
            "instances": len(generated.ground_truth),
            "proposals": len(generated.proposals),
        }
    )
    return EXIT_OK


def _code_argument(
    code: Optional[List[float]], entry_id: Optional[str], pool_path: Optional[Path]
) -> np.ndarray:
    if code is not None:
        return np.array(code)
    if entry_id is None or pool_path is None:
        raise InputError("Give a code or a pool and an entry id for both ends")
    return load_pool(pool_path, load_meshes=False).code(entry_id)


def run_interp(args: argparse.Namespace, settings: Settings) -> int:
    if args.steps < 2:
        raise InputError(f"Need at least 2 steps, got {args.steps}")
    decoder = load_decoder(args.decoder)
    z_a = _code_argument(args.code_a, args.id_a, args.pool)
    z_b = _code_argument(args.code_b, args.id_b, args.pool)
    args.out_dir.mkdir(parents=True, exist_ok=True)
    for step in range(args.steps):
        t = step / (args.steps - 1)
        z = interpolate_latent(z_a, z_b, t)
        mesh = extract_mesh(decode_planes(decoder, z, args.category), args.category)
        save_mesh(mesh, args.out_dir / f"interp_{step:03d}{args.suffix}")
    _print_json({"steps": args.steps, "out_dir": str(args.out_dir)})
    return EXIT_OK


def _add_cluster(sub: Any) -> None:
    p = sub.add_parser("cluster", help="Group scene points into proposals")
    p.add_argument("--scene", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True, help="Proposal file to write")
    p.add_argument("--radii", type=_float_list, help="Comma separated radii")
    p.add_argument("--radius", type=float, help="Cluster at a single radius")
    p.add_argument("--min-points", type=int)
    p.add_argument("--dual-set", action="store_true", default=None)
    p.add_argument("--dedup-iou", type=float)
    p.add_argument("--arithmetic-angle-mean", action="store_true", default=None)
    p.set_defaults(func=run_cluster)


def _add_reconstruct(sub: Any) -> None:
    p = sub.add_parser("reconstruct", help="Reconstruct placed instance meshes")
    p.add_argument("--scene", type=Path, required=True)
    p.add_argument("--proposals", type=Path, required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--mode", choices=["generate", "project", "retrieve"])
    p.add_argument("--decoder", type=Path)
    p.add_argument("--pool", type=Path)
    p.add_argument("--conf-floor", type=float)
    p.add_argument("--min-points", type=int)
    p.add_argument("--stochastic", action="store_true", default=None)
    p.add_argument("--seed", type=int)
    p.add_argument("--k", type=int)
    p.add_argument("--affine-span", action="store_true", default=None)
    p.add_argument(
        "--no-category-filter",
        dest="category_filter",
        action="store_false",
        default=None,
    )
    p.add_argument(
        "--no-residual", dest="use_residual", action="store_false", default=None
    )
    p.add_argument("--icp", action="store_true", default=None)
    p.add_argument("--icp-max-iterations", type=int)
    p.add_argument("--icp-max-correspondence", type=float)
    p.add_argument("--icp-with-scale", action="store_true", default=None)
    p.add_argument("--icp-surface-samples", type=int)
    p.add_argument("--arithmetic-angle-mean", action="store_true", default=None)
    p.add_argument("--timing", action="store_true", default=None)
    p.add_argument("--suffix", choices=[".ply", ".obj"], default=".ply")
    p.set_defaults(func=run_reconstruct)


def _add_retrieve(sub: Any) -> None:
    p = sub.add_parser("retrieve", help="Query a model pool with a code")
    p.add_argument("--pool", type=Path, required=True)
    p.add_argument("--code", type=_float_list, required=True)
    p.add_argument("--category", help="Only consider entries of this category")
    p.add_argument("--project", action="store_true")
    p.add_argument("--k", type=int)
    p.add_argument("--affine-span", action="store_true")
    p.set_defaults(func=run_retrieve)


def _add_metric(sub: Any) -> None:
    p = sub.add_parser("metric", help="Score a mesh")
    p.add_argument("--kind", choices=["iou", "cd", "lfd", "pcr"], required=True)
    p.add_argument("--a", type=Path, required=True, help="Mesh to score")
    p.add_argument(
        "--b", type=Path, required=True, help="Reference mesh, or points for pcr"
    )
    p.add_argument("--omega", type=float)
    p.add_argument("--voxel", type=float)
    p.add_argument("--samples", type=int, help="Surface samples for cd")
    p.add_argument("--seed", type=int, help="Sampling seed for cd")
    p.set_defaults(func=run_metric)


def _add_evaluate(sub: Any) -> None:
    p = sub.add_parser("evaluate", help="Per category AP of predictions")
    p.add_argument("--gt-dir", type=Path, required=True)
    p.add_argument("--pred-dir", type=Path, required=True)
    p.add_argument("--metric", choices=["iou", "cd", "lfd", "pcr"])
    p.add_argument("--threshold", type=_float_list, help="Comma separated")
    p.add_argument("--recognition", type=_float_list, help="IoU thresholds")
    p.add_argument("--conf-floor", type=float)
    p.add_argument("--omega", type=float)
    p.add_argument("--voxel", type=float)
    p.add_argument("--out", type=Path, help="JSON report to write")
    p.add_argument("--table", action="store_true", help="Print AP tables instead")
    p.set_defaults(func=run_evaluate)


def _add_icp(sub: Any) -> None:
    p = sub.add_parser("icp", help="Align a mesh to points")
    p.add_argument("--mesh", type=Path, required=True)
    p.add_argument("--points", type=Path, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--max-iterations", type=int)
    p.add_argument("--max-correspondence", type=float)
    p.add_argument("--with-scale", action="store_true", default=None)
    p.set_defaults(func=run_icp)


def _add_synth(sub: Any) -> None:
    p = sub.add_parser("synth", help="Write a synthetic scene")
    p.add_argument("--spec", type=Path, help="TOML scene description")
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--seed", type=int)
    p.set_defaults(func=run_synth)


def _add_interp(sub: Any) -> None:
    p = sub.add_parser("interp", help="Decode interpolated codes")
    p.add_argument("--decoder", type=Path, required=True)
    p.add_argument("--category", required=True)
    p.add_argument("--out-dir", type=Path, required=True)
    p.add_argument("--steps", type=int, default=5)
    p.add_argument("--code-a", type=_float_list)
    p.add_argument("--code-b", type=_float_list)
    p.add_argument("--pool", type=Path)
    p.add_argument("--id-a")
    p.add_argument("--id-b")
    p.add_argument("--suffix", choices=[".ply", ".obj"], default=".ply")
    p.set_defaults(func=run_interp)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="srk", description="Instance mesh reconstruction for point scenes"
    )
    parser.add_argument(
        "--version", action="version", version=scene_recon_kit.__version__
    )
    parser.add_argument("--config", type=Path, help="TOML settings file")
    parser.add_argument("--labels", type=Path, help="Label table file")
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=["TRACE", "DEBUG", "INFO", "SUCCESS", "WARNING", "ERROR"],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    adders: Sequence[Callable[[Any], None]] = (
        _add_cluster,
        _add_reconstruct,
        _add_retrieve,
        _add_metric,
        _add_evaluate,
        _add_icp,
        _add_synth,
        _add_interp,
    )
    for add in adders:
        add(sub)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    """Run the command line, returns the exit code"""
    args = build_parser().parse_args(argv)
    logger.remove()
    logger.add(sys.stderr, level=args.log_level)
    try:
        settings = load_settings(args.config)
        if args.labels is not None:
            settings = settings.copy(update={"labels": args.labels})
        return args.func(args, settings)
    except (InputError, FileReadError, NotFoundError, AlignmentFailedError) as e:
        logger.error(str(e))
        return EXIT_INPUT
    except ValidationError as e:
        logger.error(f"Invalid settings: {e}")
        return EXIT_INPUT
