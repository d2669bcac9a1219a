"""Command-line entry point: fuse, generate, assemble, eval, fid, sweep.

Exit codes: 0 success, 1 runtime failure (structured error on stderr),
2 usage/config errors (argparse); nothing is written on exit 2.
"""

import argparse
import json
import os
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .benchmark import assemble
from .config import ConfigError, RunConfig, load_config
from .control import build_control_map, load_annotation, rasterize_annotation
from .evaluation import (
    EvalConfig,
    embedding_stats,
    evaluate_categories,
    frechet_distance,
    image_embedding,
    patch_embeddings,
    render_table,
)
from .imaging import read_image, write_mask
from .pipeline import (
    CATEGORIES,
    EvalContext,
    GenerationJob,
    SweepError,
    seed_sweep,
)
from . import control as control_mod


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lanegen",
        description="Adverse-weather lane-scene generation and evaluation toolkit",
    )
    parser.add_argument("--config", help="path to a JSON run configuration")
    parser.add_argument("--seed", type=int, help="override every stochastic seed")
    parser.add_argument("--jobs", type=int, default=os.cpu_count() or 1,
                        help="worker pool width")
    parser.add_argument("--backend", choices=("toy", "procedural", "remote"),
                        help="override the configured backend")
    parser.add_argument("--json", action="store_true", help="emit JSON reports")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("fuse", help="write the fused control map for one image")
    p.add_argument("--image", required=True)
    p.add_argument("--annotation", required=True)
    p.add_argument("--out")

    p = sub.add_parser("generate", help="generate one adverse-condition image")
    p.add_argument("--image", required=True)
    p.add_argument("--annotation", required=True)
    p.add_argument("--category", required=True, choices=CATEGORIES)
    p.add_argument("--out", required=True)

    p = sub.add_parser("assemble", help="assemble the benchmark tree")
    p.add_argument("--source", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int, help="systematic-sample this many sources")

    p = sub.add_parser("eval", help="score predictions against ground truth")
    p.add_argument("--pred", required=True)
    p.add_argument("--gt", required=True)
    p.add_argument("--report")

    p = sub.add_parser("fid", help="Frechet distance between two image directories")
    p.add_argument("--a", dest="dir_a", required=True)
    p.add_argument("--b", dest="dir_b", required=True)

    p = sub.add_parser("sweep", help="multi-seed generation with best-seed selection")
    p.add_argument("--image", required=True)
    p.add_argument("--annotation", required=True)
    p.add_argument("--category", required=True, choices=CATEGORIES)
    p.add_argument("--out", required=True)
    p.add_argument("--k", type=int)
    return parser


def _load_run_config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg.sampler = replace(cfg.sampler, seed=args.seed)
    if args.backend:
        cfg.backend = args.backend
    env_url = os.environ.get("LANEGEN_BACKEND_URL")
    if env_url:
        cfg.backend_url = env_url
    return cfg


def _job_from_config(cfg: RunConfig, image: str, annotation: str, category: str,
                     out: str | None = None) -> GenerationJob:
    return GenerationJob(
        image_path=image,
        annotation_path=annotation,
        recipe=cfg.recipes[category],
        sampler=cfg.sampler,
        backend=cfg.backend,
        output_path=out,
        thresholds=cfg.thresholds,
        stroke=cfg.stroke,
        patch=cfg.patch,
        control_strength=cfg.control_strength,
        backend_url=cfg.backend_url,
        timeout=cfg.timeout,
    )


def _emit(args, payload: dict, text: str) -> None:
    print(json.dumps(payload, sort_keys=True) if args.json else text)


def cmd_fuse(args, cfg: RunConfig) -> int:
    for path in (args.image, args.annotation):
        if not Path(path).exists():
            raise FileNotFoundError(f"input not found: {path}")
    img = read_image(args.image)
    ann = load_annotation(args.annotation)
    cmap = build_control_map(img, ann, cfg.thresholds, cfg.stroke)
    out = args.out or str(Path(args.image).with_suffix("")) + ".control.png"
    write_mask(out, cmap)
    pixels = int(cmap.sum())
    _emit(args, {"command": "fuse", "out": out, "set_pixels": pixels},
          f"fuse ok out={out} set_pixels={pixels}")
    return 0


def cmd_generate(args, cfg: RunConfig) -> int:
    from .pipeline import generate

    job = _job_from_config(cfg, args.image, args.annotation, args.category, args.out)
    img = generate(job)
    from .imaging import write_image

    write_image(args.out, img)
    _emit(args, {"command": "generate", "out": args.out, "category": args.category,
                 "seed": cfg.sampler.seed},
          f"generate ok out={args.out} category={args.category} seed={cfg.sampler.seed}")
    return 0


def cmd_assemble(args, cfg: RunConfig) -> int:
    template = _job_from_config(cfg, "", "", "normal")
    result = assemble(
        args.source,
        args.out,
        cfg.recipes,
        seed=cfg.sampler.seed,
        backend=cfg.backend,
        sampler=cfg.sampler,
        sample_k=args.k,
        jobs=args.jobs,
        backend_url=cfg.backend_url,
        job_template=template,
    )
    m = result.manifest
    payload = {
        "command": "assemble",
        "out": args.out,
        "complete": m.complete,
        "generated": result.generated,
        "skipped": result.skipped,
        "copied": result.copied,
        "categories": {c: e.total for c, e in m.categories.items()},
    }
    _emit(args, payload,
          f"assemble ok out={args.out} complete={m.complete} generated={result.generated} "
          f"skipped={result.skipped} copied={result.copied}")
    return 0 if m.complete else 1


def _collect_pairs(pred_root: Path, gt_root: Path) -> dict:
    datasets = {}
    categories = [d.name for d in sorted(gt_root.iterdir()) if d.is_dir()]
    layout = categories if categories else [""]
    for category in layout:
        gt_dir = gt_root / category if category else gt_root
        pred_dir = pred_root / category if category else pred_root
        pairs = []
        for gt_file in sorted(gt_dir.glob("*.lines.txt")):
            gts = load_annotation(gt_file)
            pred_file = pred_dir / gt_file.name
            preds = load_annotation(pred_file) if pred_file.exists() else control_mod.LaneAnnotation([])
            pairs.append((preds, gts))
        if pairs:
            datasets[category or "overall"] = pairs
    if not datasets:
        raise FileNotFoundError(f"no .lines.txt ground truth under {gt_root}")
    return datasets


def cmd_eval(args, cfg: RunConfig) -> int:
    datasets = _collect_pairs(Path(args.pred), Path(args.gt))
    report = evaluate_categories(datasets, cfg.eval)
    if args.report:
        with open(args.report, "w", encoding="utf-8") as fh:
            json.dump(report.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.json:
        print(json.dumps(report.to_dict(), sort_keys=True))
    else:
        print(render_table(report))
    return 0


def _directory_stats(path: Path):
    images = sorted(
        p for p in path.iterdir()
        if p.suffix.lower() in (".jpg", ".jpeg", ".png") and p.is_file()
    )
    if len(images) < 2:
        raise ValueError(f"need at least 2 images in {path} for embedding statistics")
    return embedding_stats([image_embedding(read_image(p)) for p in images])


def cmd_fid(args, cfg: RunConfig) -> int:
    fid = frechet_distance(_directory_stats(Path(args.dir_a)),
                           _directory_stats(Path(args.dir_b)))
    _emit(args, {"command": "fid", "fid": fid}, f"fid ok value={fid:.6f}")
    return 0


def _sweep_scorers(cfg: RunConfig, image_path: str, annotation_path: str) -> EvalContext:
    """Desk-scale scorers: annotation-coverage proxy for geometry, patch-level
    Frechet distance to the source image for realism."""
    source = read_image(image_path)
    ann = load_annotation(annotation_path)
    h, w = source.shape[:2]
    lane_mask = rasterize_annotation(ann, w, h, cfg.stroke).astype(bool)
    src_stats = embedding_stats(patch_embeddings(source))

    def f1_proxy(img: np.ndarray) -> float:
        if not lane_mask.any():
            return 0.0
        cmap = build_control_map(img, ann, cfg.thresholds, cfg.stroke).astype(bool)
        return float(np.count_nonzero(cmap & lane_mask) / np.count_nonzero(lane_mask))

    def fid_score(img: np.ndarray) -> float:
        return frechet_distance(src_stats, embedding_stats(patch_embeddings(img)))

    return EvalContext(f1=f1_proxy, fid=fid_score)


def cmd_sweep(args, cfg: RunConfig) -> int:
    from .imaging import write_image
    from .pipeline import generate

    sweep_cfg = cfg.sweep if args.k is None else replace(cfg.sweep, k=args.k)
    if args.seed is not None:
        sweep_cfg = replace(sweep_cfg, base_seed=args.seed)
    job = _job_from_config(cfg, args.image, args.annotation, args.category, args.out)
    ctx = _sweep_scorers(cfg, args.image, args.annotation)
    best_seed, report = seed_sweep(job, sweep_cfg, ctx)
    best = generate(replace(job, sampler=replace(job.sampler, seed=best_seed)))
    write_image(args.out, best)
    payload = {"command": "sweep", "best_seed": best_seed, "out": args.out,
               "report": report.to_dict()}
    _emit(args, payload, f"sweep ok best_seed={best_seed} out={args.out}")
    return 0


_COMMANDS = {
    "fuse": cmd_fuse,
    "generate": cmd_generate,
    "assemble": cmd_assemble,
    "eval": cmd_eval,
    "fid": cmd_fid,
    "sweep": cmd_sweep,
}


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = _load_run_config(args)
    except ConfigError as exc:
        parser.exit(2, f"lanegen: {exc}\n")
    try:
        return _COMMANDS[args.command](args, cfg)
    except SweepError as exc:
        _fail(args, exc, extra={"partial": exc.partial.to_dict()})
        return 1
    except Exception as exc:  # runtime failures map to exit 1
        _fail(args, exc)
        return 1


def _fail(args, exc: Exception, extra: dict | None = None) -> None:
    payload = {"error": {"type": type(exc).__name__, "message": str(exc)}}
    if extra:
        payload["error"].update(extra)
    if args.json:
        print(json.dumps(payload, sort_keys=True), file=sys.stderr)
    else:
        print(f"lanegen: error: {exc}", file=sys.stderr)


if __name__ == "__main__":
    sys.exit(main())
