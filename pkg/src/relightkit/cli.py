"""Batch command-line frontend.

PFM is the canonical inter-stage format (lossless floats); PNG outputs
are visualizations. Exit codes: 0 success, 2 usage/parameter errors,
3 data/domain errors. Every command's file outputs are byte-identical
across runs and --threads values.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import fileio, synth
from .borderweights import BorderParams, border_weights
from .errors import (
    DATA_ERRORS,
    USAGE_ERRORS,
    NoShadowPixelsError,
    ParameterError,
    StructuralError,
)
from .imagecore import gamma_encode, luminance
from .lighting import (
    estimate_ambient,
    inject_ambient,
    project_light_for_mesh,
    shade,
)
from .mesh import Pose, apply_pose, load_obj, rasterize_geometry
from .metrics import evaluate
from .relight import DEFAULT_EPSILON, relight
from .shadow import (
    DirectionalLight,
    ShadowMask,
    light_to_json,
    load_light,
    shadow_mask,
)

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = text.lower().split("x")
        width, height = int(w), int(h)
    except ValueError as exc:
        raise ParameterError(f"--size must look like 640x480, got {text!r}") from exc
    if width < 1 or height < 1:
        raise ParameterError(f"--size must be positive, got {text!r}")
    return width, height


def _require_inputs(*paths) -> None:
    for p in paths:
        if not Path(p).exists():
            raise FileNotFoundError(f"input file not found: {p}")


def _output(path: Path, force: bool) -> Path:
    if path.exists() and not force:
        raise ParameterError(f"refusing to overwrite {path} (use --force)")
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def _load_mask(mask_path, coverage_path=None) -> ShadowMask:
    mask_path = Path(mask_path)
    if mask_path.suffix.lower() == ".pfm":
        plane = fileio.read_pfm(mask_path)
    else:
        plane = fileio.read_png_plane(mask_path)
    coverage = (fileio.read_pfm(coverage_path) if coverage_path
                else np.ones_like(plane))
    return ShadowMask(plane, coverage)


def _load_luminance(path) -> np.ndarray:
    path = Path(path)
    if path.suffix.lower() == ".pfm":
        return fileio.read_pfm(path)
    return luminance(fileio.read_png(path))


_BORDER_FIELDS = ("window", "tau1", "tau2", "sigma_max", "r_max",
                  "contrast_source")


def _border_params(args) -> BorderParams:
    """Defaults, overlaid by a --params JSON file, overlaid by explicit flags."""
    values = {}
    if getattr(args, "params", None):
        _require_inputs(args.params)
        with open(args.params, "r", encoding="utf-8") as f:
            loaded = json.load(f)
        unknown = set(loaded) - set(_BORDER_FIELDS)
        if unknown:
            raise ParameterError(f"unknown border parameter(s) in JSON: {sorted(unknown)}")
        values.update(loaded)
    for field in _BORDER_FIELDS:
        flag = getattr(args, field)
        if flag is not None:
            values[field] = flag
    return BorderParams(**values)


def _add_border_flags(parser) -> None:
    parser.add_argument("--params", default=None,
                        help="JSON file with border parameters; explicit "
                             "flags override its values")
    parser.add_argument("--window", type=int, default=None,
                        help="odd mean-filter / contrast window size (default 21)")
    parser.add_argument("--tau1", type=float, default=None,
                        help="lower smoothed-mask threshold of the border band "
                             "(default 0.02)")
    parser.add_argument("--tau2", type=float, default=None,
                        help="upper smoothed-mask threshold of the border band "
                             "(default 0.98)")
    parser.add_argument("--sigma-max", type=float, default=None,
                        help="maximum Gaussian deviation in smoothed-mask units "
                             "(default 0.25)")
    parser.add_argument("--r-max", type=int, default=None,
                        help="maximum Chebyshev neighborhood radius in pixels "
                             "(default 10)")
    parser.add_argument("--contrast-source", choices=("luminance", "mask"),
                        default=None,
                        help="plane local contrast is measured on "
                             "(default luminance)")


def _posed_mesh(mesh_path, pose_path):
    mesh = load_obj(mesh_path)
    pose = Pose.load(pose_path)
    return apply_pose(mesh, pose)


def _write_gbuffer(outdir: Path, gbuffer, force: bool) -> list[str]:
    planes = {
        "coverage.pfm": gbuffer.hit_mask,
        "normal_x.pfm": gbuffer.normals[:, :, 0],
        "normal_y.pfm": gbuffer.normals[:, :, 1],
        "normal_z.pfm": gbuffer.normals[:, :, 2],
        "depth.pfm": gbuffer.depth,
        "position_x.pfm": gbuffer.position[:, :, 0],
        "position_y.pfm": gbuffer.position[:, :, 1],
        "position_z.pfm": gbuffer.position[:, :, 2],
    }
    for name, plane in planes.items():
        fileio.write_pfm(_output(outdir / name, force), plane)
    return sorted(planes)


def cmd_shadow_mask(args) -> int:
    _require_inputs(args.mesh, args.pose, args.light)
    width, height = _parse_size(args.size)
    mesh = _posed_mesh(args.mesh, args.pose)
    light = load_light(args.light)
    gbuffer = rasterize_geometry(mesh, width, height)
    mask = shadow_mask(gbuffer, mesh, light, args.feeler_eps)

    outdir = Path(args.out)
    fileio.write_pfm(_output(outdir / "mask.pfm", args.force), mask.plane)
    fileio.write_png(_output(outdir / "mask.png", args.force), mask.plane)
    _write_gbuffer(outdir, gbuffer, args.force)
    return EXIT_OK


def cmd_border_weights(args) -> int:
    _require_inputs(args.mask, args.luminance)
    params = _border_params(args)
    mask = _load_mask(args.mask, args.coverage)
    lum = _load_luminance(args.luminance)
    if args.gamma != 1.0:
        lum = gamma_encode(lum, args.gamma)
    weights = border_weights(mask, lum, params)

    outdir = Path(args.out)
    fileio.write_pfm(_output(outdir / "weights.pfm", args.force), weights)
    fileio.write_png(_output(outdir / "weights_vis.png", args.force),
                     weights / params.w_cap)
    return EXIT_OK


def cmd_ambient(args) -> int:
    _require_inputs(args.image, args.mask)
    mask = _load_mask(args.mask, args.coverage)
    lum = _load_luminance(args.image)
    try:
        ambient = estimate_ambient(lum, mask)
    except NoShadowPixelsError:
        if args.ambient_default is None:
            raise
        ambient = args.ambient_default
    print(json.dumps({"ambient": ambient}))
    return EXIT_OK


def cmd_relight(args) -> int:
    inputs = {
        "source": args.source,
        "mesh": args.mesh,
        "pose": args.pose,
        "source_light": args.source_light,
        "target_light": args.target_light,
    }
    _require_inputs(*inputs.values())
    source = fileio.read_png(args.source)
    mesh = _posed_mesh(args.mesh, args.pose)
    gbuffer = rasterize_geometry(mesh, source.width, source.height)
    params = _border_params(args)
    result = relight(
        source, gbuffer, mesh,
        load_light(args.source_light), load_light(args.target_light),
        params=params, epsilon=args.epsilon,
        ambient_default=args.ambient_default,
        target_ambient=args.target_ambient,
        feeler_eps=args.feeler_eps)

    outdir = Path(args.out)
    outputs = {
        "relit.png": lambda p: fileio.write_png(p, result.relit),
        "ratio.pfm": lambda p: fileio.write_pfm(p, result.ratio.plane),
        "source_mask.pfm": lambda p: fileio.write_pfm(p, result.source_mask.plane),
        "source_mask.png": lambda p: fileio.write_png(p, result.source_mask.plane),
        "target_mask.pfm": lambda p: fileio.write_pfm(p, result.target_mask.plane),
        "target_mask.png": lambda p: fileio.write_png(p, result.target_mask.plane),
        "source_weights.pfm": lambda p: fileio.write_pfm(p, result.source_weights),
        "target_weights.pfm": lambda p: fileio.write_pfm(p, result.target_weights),
        "coverage.pfm": lambda p: fileio.write_pfm(p, gbuffer.hit_mask),
    }
    for name, writer in outputs.items():
        writer(_output(outdir / name, args.force))

    manifest = {
        "command": "relight",
        "inputs": {k: {"path": str(v), "sha256": _sha256(v)} for k, v in inputs.items()},
        "parameters": {
            "epsilon": args.epsilon,
            "ambient_default": args.ambient_default,
            "target_ambient": args.target_ambient,
            "feeler_eps": args.feeler_eps,
            "window": params.window,
            "tau1": params.tau1,
            "tau2": params.tau2,
            "sigma_max": params.sigma_max,
            "r_max": params.r_max,
            "contrast_source": params.contrast_source,
            "source_lighting": result.source_lighting.to_json(),
            "target_lighting": result.target_lighting.to_json(),
        },
        "outputs": sorted(outputs),
    }
    with open(_output(outdir / "manifest.json", args.force), "w",
              encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True)
        f.write("\n")
    return EXIT_OK


def _eval_pair(relit_path: Path, target_path: Path, mode: str) -> dict:
    relit = fileio.read_png(relit_path)
    target = fileio.read_png(target_path)
    report = evaluate(relit, target, mode=mode).to_dict()
    report["path"] = relit_path.name
    return report


def cmd_eval(args) -> int:
    relit_dir = Path(args.relit_dir)
    target_dir = Path(args.target_dir)
    _require_inputs(relit_dir, target_dir)
    names = sorted(p.name for p in relit_dir.glob("*.png"))
    if not names:
        raise StructuralError(f"no .png files in {relit_dir}")
    missing = [n for n in names if not (target_dir / n).exists()]
    if missing:
        raise StructuralError(f"target dir missing {missing[0]} (and possibly more)")

    mode = "rgb" if args.rgb else "luminance"
    with ThreadPoolExecutor(max_workers=args.threads) as pool:
        per_image = list(pool.map(
            lambda n: _eval_pair(relit_dir / n, target_dir / n, mode), names))
    per_image.sort(key=lambda r: r["path"])

    numeric = sorted(k for k in per_image[0] if isinstance(per_image[0][k], (int, float)))
    report = {
        "per_image": per_image,
        "mean": {k: float(np.mean([r[k] for r in per_image])) for k in numeric},
        "stddev": {k: float(np.std([r[k] for r in per_image])) for k in numeric},
        "mode": mode,
    }
    text = json.dumps(report, indent=2, sort_keys=True) + "\n"
    if args.out:
        with open(_output(Path(args.out), args.force), "w", encoding="utf-8") as f:
            f.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def _write_light(path: Path, light, force: bool) -> None:
    with open(_output(path, force), "w", encoding="utf-8") as f:
        json.dump(light_to_json(light), f, indent=2, sort_keys=True)
        f.write("\n")


def _write_pose_identity(path: Path, force: bool) -> None:
    with open(_output(path, force), "w", encoding="utf-8") as f:
        json.dump(Pose.identity().to_json(), f, indent=2, sort_keys=True)
        f.write("\n")


def cmd_synth(args) -> int:
    width, height = _parse_size(args.size)
    outdir = Path(args.out)
    force = args.force
    if args.scene == "sphere":
        mesh = synth.make_centered_sphere(width, height, axis=(1.0, 0.0, 0.0))
        side = DirectionalLight((1.0, 0.0, 0.0))
        frontal = DirectionalLight((0.0, 0.0, 1.0))
        synth.save_obj(_output(outdir / "mesh.obj", force), mesh)
        _write_pose_identity(outdir / "pose.json", force)
        _write_light(outdir / "light_side.json", side, force)
        _write_light(outdir / "light_frontal.json", frontal, force)
        gbuffer = rasterize_geometry(mesh, width, height)
        # Ground-truth side mask straight from the rasterized normals; the
        # aligned pole axis makes n.l >= 0 exact for this scene.
        ndotl = np.sum(gbuffer.normals * side.direction, axis=-1)
        gt = np.where((ndotl >= 0) & (gbuffer.hit_mask == 1.0), 1.0, 0.0)
        fileio.write_pfm(_output(outdir / "mask_side_gt.pfm", force), gt)
        fileio.write_pfm(_output(outdir / "coverage.pfm", force), gbuffer.hit_mask)
        lighting = inject_ambient(project_light_for_mesh(side, mesh), args.ambient)
        shaded = shade(gbuffer, lighting, ShadowMask(gt, gbuffer.hit_mask))
        fileio.write_png(_output(outdir / "source.png", force), shaded)
        fileio.write_pfm(_output(outdir / "source.pfm", force), shaded)
    elif args.scene == "two_step":
        lum, mask = synth.make_two_step(width, height,
                                        borders=(width // 3, (2 * width) // 3),
                                        noise=args.noise, seed=args.seed)
        fileio.write_pfm(_output(outdir / "luminance.pfm", force), lum)
        fileio.write_png(_output(outdir / "luminance.png", force), lum)
        fileio.write_pfm(_output(outdir / "mask.pfm", force), mask.plane)
        fileio.write_png(_output(outdir / "mask.png", force), mask.plane)
    elif args.scene == "box_on_plane":
        square = (width * 0.25, height * 0.25, width * 0.5, height * 0.5)
        square = tuple(float(round(v)) for v in square)
        square_z = 10.0
        light = DirectionalLight((0.3, 0.2, 1.0))
        mesh = synth.make_plane_with_square(width, height, square, square_z)
        synth.save_obj(_output(outdir / "mesh.obj", force), mesh)
        _write_pose_identity(outdir / "pose.json", force)
        _write_light(outdir / "light.json", light, force)
        gt = synth.box_on_plane_gt_mask(width, height, square, square_z, light)
        fileio.write_pfm(_output(outdir / "mask_gt.pfm", force), gt.plane)
        fileio.write_png(_output(outdir / "mask_gt.png", force), gt.plane)
        gbuffer = rasterize_geometry(mesh, width, height)
        fileio.write_pfm(_output(outdir / "coverage.pfm", force), gbuffer.hit_mask)
        lighting = inject_ambient(project_light_for_mesh(light, mesh), args.ambient)
        shade_mask = ShadowMask(gt.plane * gbuffer.hit_mask, gbuffer.hit_mask)
        shaded = shade(gbuffer, lighting, shade_mask)
        fileio.write_png(_output(outdir / "source.png", force), shaded)
        fileio.write_pfm(_output(outdir / "source.pfm", force), shaded)
    else:  # pragma: no cover - argparse restricts choices
        raise ParameterError(f"unknown scene {args.scene!r}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relightkit",
        description="Shadow-aware ratio-image relighting toolkit")
    parser.add_argument("--json-errors", action="store_true",
                        help="report errors as JSON on stderr")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--force", action="store_true",
                       help="overwrite existing outputs")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads for batch steps; outputs are "
                            "byte-identical regardless")

    p = sub.add_parser("shadow-mask", help="rasterize a posed mesh and build its shadow mask")
    p.add_argument("mesh", help="Wavefront OBJ mesh")
    p.add_argument("pose", help="pose JSON (rotation/translation/scale or matrix)")
    p.add_argument("light", help="light JSON (directional or point)")
    p.add_argument("--size", required=True, help="raster size as WxH")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--feeler-eps", type=float, default=None,
                   help="feeler origin offset (default 1e-3 x bbox diagonal)")
    common(p)
    p.set_defaults(func=cmd_shadow_mask)

    p = sub.add_parser("border-weights", help="shadow-border weight map from a mask")
    p.add_argument("mask", help="shadow mask (.pfm exact or .png)")
    p.add_argument("luminance", help="image whose shadows are analyzed (.png or .pfm)")
    p.add_argument("--coverage", default=None, help="coverage plane PFM (default: all ones)")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--gamma", type=float, default=1.0 / 2.2,
                   help="gamma applied to the luminance before contrast "
                        "(1.0 to disable)")
    _add_border_flags(p)
    common(p)
    p.set_defaults(func=cmd_border_weights)

    p = sub.add_parser("ambient", help="estimate ambient intensity from shadow pixels")
    p.add_argument("image", help="image (.png) or luminance (.pfm)")
    p.add_argument("mask", help="shadow mask (.pfm or .png)")
    p.add_argument("--coverage", default=None, help="coverage plane PFM")
    p.add_argument("--ambient-default", type=float, default=None,
                   help="fallback when the mask has no shadow pixels")
    common(p)
    p.set_defaults(func=cmd_ambient)

    p = sub.add_parser("relight", help="full ratio-image relighting pipeline")
    p.add_argument("source", help="source image PNG")
    p.add_argument("mesh", help="Wavefront OBJ mesh")
    p.add_argument("pose", help="pose JSON")
    p.add_argument("source_light", help="source light JSON")
    p.add_argument("target_light", help="target light JSON")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--epsilon", type=float, default=DEFAULT_EPSILON,
                   help="ratio floor guarding division and log")
    p.add_argument("--ambient-default", type=float, default=None,
                   help="source ambient fallback for shadow-free masks")
    p.add_argument("--target-ambient", type=float, default=None,
                   help="target ambient (default: reuse the source estimate)")
    p.add_argument("--feeler-eps", type=float, default=None,
                   help="feeler origin offset (default 1e-3 x bbox diagonal)")
    _add_border_flags(p)
    common(p)
    p.set_defaults(func=cmd_relight)

    p = sub.add_parser("eval", help="metric report over directories of images")
    p.add_argument("relit_dir")
    p.add_argument("target_dir")
    p.add_argument("--out", default=None, help="report JSON path (default stdout)")
    p.add_argument("--rgb", action="store_true",
                   help="evaluate whole-RGB instead of luminance")
    common(p)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("synth", help="generate a synthetic fixture bundle")
    p.add_argument("scene", choices=("sphere", "two_step", "box_on_plane"))
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--size", default="128x128", help="raster size as WxH")
    p.add_argument("--seed", type=int, default=0, help="RNG seed for noisy fixtures")
    p.add_argument("--noise", type=float, default=0.0,
                   help="uniform luminance noise amplitude (two_step)")
    p.add_argument("--ambient", type=float, default=0.2,
                   help="ambient intensity for shaded fixtures "
                        "(sphere, box_on_plane)")
    common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def _report_error(json_errors: bool, exc: Exception) -> None:
    if json_errors:
        payload = {"error": type(exc).__name__, "message": str(exc)}
        print(json.dumps(payload), file=sys.stderr)
    else:
        print(f"relightkit: error: {exc}", file=sys.stderr)


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except USAGE_ERRORS as exc:
        _report_error(args.json_errors, exc)
        return EXIT_USAGE
    except FileNotFoundError as exc:
        _report_error(args.json_errors, exc)
        return EXIT_USAGE
    except DATA_ERRORS as exc:
        _report_error(args.json_errors, exc)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
