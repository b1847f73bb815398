"""Command-line entry points for the pipeline stages.

Every stage is its own subcommand; ``run`` drives them all from a TOML
config. Exit code is 0 only when the requested work (and any requested
assertion) succeeds.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import analysis
from .features import extract_feature_matrix, feature_names
from .pipeline import PipelineError, RunConfig, ablation_report, run_pipeline
from .plays import extract_shot_plays, find_shot_events, load_plays, save_plays
from .raster import FadeSpec, TrajectoryImage, export_image, orient_play, rasterize_dataset
from .synth import GenConfig, generate_games, write_truth
from .tensorfile import load_tensor, save_tensor
from .tracking import parse_tracking, validate, write_tracking
from .nn import (
    Dataset,
    TrainConfig,
    build_cnn,
    build_combined,
    build_ffn,
    evaluate,
    load_checkpoint,
    save_checkpoint,
    split_indices,
    train,
)


def _parse_split(text: str) -> tuple[float, float, float]:
    parts = [float(p) for p in text.split("/")]
    if len(parts) != 3 or abs(sum(parts) - 1.0) > 1e-9:
        raise argparse.ArgumentTypeError(f"split must be three ratios summing to 1, got {text!r}")
    return tuple(parts)


def cmd_validate(args) -> int:
    frames = parse_tracking(Path(args.file).read_bytes())
    report = validate(frames)
    parse_report = frames.parse_report
    report.frame_count = parse_report.frame_count
    report.dropped_frames = parse_report.dropped_frames
    report.violations = parse_report.violations + report.violations
    if args.report:
        Path(args.report).write_text(report.to_json())
    print(
        f"{args.file}: {report.frame_count} frames, "
        f"{report.dropped_frames} dropped, {len(report.violations)} violations"
    )
    return 0 if report.ok else 1


def cmd_synth(args) -> int:
    cfg = GenConfig(n_plays=args.plays, seed=args.seed)
    frames, scenes = generate_games(cfg)
    Path(args.out).write_bytes(write_tracking(frames))
    if args.truth:
        Path(args.truth).write_bytes(write_truth(scenes))
    print(f"wrote {len(frames)} frames ({args.plays} plays) to {args.out}")
    return 0


def cmd_segment(args) -> int:
    frames = parse_tracking(Path(args.file).read_bytes())
    shots = find_shot_events(frames)
    plays = [orient_play(p) for p in extract_shot_plays(frames)]
    save_plays(Path(args.out), plays)
    if args.report:
        Path(args.report).write_text(
            json.dumps(
                {
                    "frames": len(frames),
                    "shot_events": len(shots),
                    "plays_kept": len(plays),
                    "plays_discarded": len(shots) - len(plays),
                },
                indent=2,
            )
        )
    print(f"{len(plays)} plays kept of {len(shots)} shot events")
    return 0


def cmd_rasterize(args) -> int:
    plays = load_plays(args.plays)
    fade = FadeSpec(floor=args.fade_floor)
    imgs = rasterize_dataset(plays, args.channels, fade, args.downscale)
    save_tensor(args.out, imgs)
    if args.preview_dir:
        pdir = Path(args.preview_dir)
        pdir.mkdir(parents=True, exist_ok=True)
        for i in range(min(len(plays), args.preview_count)):
            img = TrajectoryImage(data=imgs[i], downscale=args.downscale)
            suffix = {1: "pgm", 3: "ppm", 11: "tnsr"}[args.channels]
            export_image(img, pdir / f"play{i:05d}.{suffix}")
    print(f"rasterized {len(plays)} plays -> {args.out} {tuple(imgs.shape)}")
    return 0


def cmd_featurize(args) -> int:
    plays = load_plays(args.plays)
    feats = extract_feature_matrix(plays)
    save_tensor(args.out, feats)
    if args.layout:
        Path(args.layout).write_text(
            json.dumps({i: n for i, n in enumerate(feature_names())}, indent=2)
        )
    print(f"featurized {len(plays)} plays -> {args.out} {tuple(feats.shape)}")
    return 0


def cmd_labels(args) -> int:
    plays = load_plays(args.plays)
    save_tensor(args.out, np.array([p.label for p in plays], dtype=np.float64))
    print(f"wrote {len(plays)} labels -> {args.out}")
    return 0


def _load_dataset(args, need_images: bool, need_features: bool) -> Dataset:
    labels = load_tensor(args.labels).astype(np.int64)
    images = load_tensor(args.images) if need_images else None
    features = load_tensor(args.features) if need_features else None
    splits = split_indices(len(labels), args.split, args.split_seed)
    return Dataset(labels=labels, images=images, features=features, splits=splits)


def cmd_train(args) -> int:
    need_images = args.model in ("cnn", "combined")
    need_features = args.model in ("ffn", "combined")
    if need_images and not args.images:
        print("error: --images required for this model", file=sys.stderr)
        return 2
    if need_features and not args.features:
        print("error: --features required for this model", file=sys.stderr)
        return 2
    ds = _load_dataset(args, need_images, need_features)

    widths = tuple([256] * args.ffn_depth) if args.ffn_depth is not None else (256, 256)
    feature_dim = ds.features.shape[1] if need_features else 0
    if args.model == "ffn":
        spec = build_ffn(feature_dim, widths=widths)
    else:
        image_shape = tuple(ds.images.shape[1:])
        if args.model == "cnn":
            spec = build_cnn(image_shape=image_shape)
        else:
            spec = build_combined(build_cnn(image_shape=image_shape), build_ffn(feature_dim, widths=widths))

    tc = TrainConfig(
        lr=args.lr, batch_size=args.batch_size, epochs=args.epochs, seed=args.seed, patience=args.patience
    )
    params, history = train(spec, ds, tc)
    out = Path(args.out)
    if out.is_dir() or str(args.out).endswith(("/", "\\")):
        out.mkdir(parents=True, exist_ok=True)
        out = out / "model.ckpt"
    meta = {
        "model": args.model,
        "split": list(args.split),
        "split_seed": args.split_seed,
        "seed": args.seed,
        "channels": int(ds.images.shape[1]) if need_images else None,
        "downscale": (94 // ds.images.shape[2]) if need_images else None,
        "fade_floor": args.fade_floor,
        "history": history,
    }
    save_checkpoint(params, spec, out, meta)
    last = history[-1] if history else {}
    print(f"saved {out}; final epoch: {json.dumps(last)}")
    return 0


def cmd_eval(args) -> int:
    params, spec, meta = load_checkpoint(args.ckpt)
    args.split = args.split or _parse_split("/".join(str(x) for x in meta["split"]))
    args.split_seed = args.split_seed if args.split_seed is not None else meta["split_seed"]
    ds = _load_dataset(args, spec.uses_images(), spec.uses_features())
    metrics = evaluate(params, spec, ds, split=args.set)
    payload = {"split": args.set, **metrics}
    if args.json:
        Path(args.json).write_text(json.dumps(payload, sort_keys=True, indent=2))
    print(json.dumps(payload, sort_keys=True))
    return 0


def _model_inputs_from_meta(meta: dict, plays):
    fade = FadeSpec(floor=meta.get("fade_floor", 0.2))
    return {
        "channels": meta.get("channels") or 11,
        "fade": fade,
        "downscale": meta.get("downscale") or 1,
    }


def cmd_analyze(args) -> int:
    if args.what == "ssim":
        a = np.squeeze(load_tensor(args.a))
        b = np.squeeze(load_tensor(args.b))
        if args.half:
            a = analysis.half_court_crop(a)
            b = analysis.half_court_crop(b)
        print(f"{analysis.ssim(a, b):.6f}")
        return 0

    if args.what == "maxact":
        params, spec, meta = load_checkpoint(args.ckpt)
        res = analysis.maximize_activation(
            params, spec, args.layer, args.filter, steps=args.steps,
            step_size=args.step_size, seed=args.seed,
        )
        prefix = Path(args.out_prefix)
        prefix.parent.mkdir(parents=True, exist_ok=True)
        trace = "\n".join(f"{i},{v:.8f}" for i, v in enumerate(res.trace))
        Path(f"{prefix}_trace.csv").write_text("step,activation\n" + trace + "\n")
        suffix = {1: "pgm", 3: "ppm", 11: "tnsr"}[res.image.channels]
        export_image(res.image, f"{prefix}_image.{suffix}")
        status = "degenerate" if res.degenerate else f"{res.trace[0]:.5f} -> {res.trace[-1]:.5f}"
        print(f"layer {args.layer} filter {args.filter}: {status}")
        return 0

    plays = load_plays(args.plays)
    if args.what == "heatmap":
        role = None if args.role in (None, "all") else int(args.role)
        if args.ckpt:
            params, spec, meta = load_checkpoint(args.ckpt)
            grid = analysis.heatmap_model(
                params, spec, plays, role=role, **_model_inputs_from_meta(meta, plays)
            )
        else:
            grid = analysis.heatmap_raw(plays, role=role)
        if args.out_csv:
            Path(args.out_csv).write_text(grid.to_csv())
        if args.out_pgm:
            from .pipeline import _grid_to_pgm

            _grid_to_pgm(grid, Path(args.out_pgm))
        print(f"heatmap over {len(plays)} plays: {int(grid.populated().sum())} populated cells")
        return 0

    if args.what == "hist":
        params, spec, meta = load_checkpoint(args.ckpt)
        probs = analysis.model_probabilities(
            params, spec, plays, **_model_inputs_from_meta(meta, plays)
        )
        counts, edges = analysis.probability_histogram(
            params, spec, plays, role=args.role, probs=probs
        )
        lines = ["bin_lo,bin_hi,count"]
        for k in range(len(counts)):
            lines.append(f"{edges[k]:.2f},{edges[k + 1]:.2f},{counts[k]}")
        text = "\n".join(lines) + "\n"
        if args.out:
            Path(args.out).write_text(text)
        else:
            print(text, end="")
        return 0

    if args.what == "ssim-table":
        params, spec, meta = load_checkpoint(args.ckpt)
        filters = analysis.DEFAULT_FILTER_ROWS
        if args.filters:
            rows = []
            for item in args.filters.split(","):
                layer, filt, targets = item.split(":")
                rows.append((int(layer), int(filt), tuple(targets.split("+"))))
            filters = tuple(rows)
        table = analysis.compare_filters_to_history(params, spec, plays, filters, seed=args.seed)
        text = analysis.ssim_table_csv(table)
        if args.out:
            Path(args.out).write_text(text)
        print(text, end="")
        return 0

    raise AssertionError(args.what)


def cmd_run(args) -> int:
    cfg = RunConfig.from_toml(args.config) if args.config else RunConfig(out_dir=args.out_dir, scale=args.scale)
    records = run_pipeline(cfg)
    print(f"pipeline done: {len(records)} metric rows in {cfg.resolved().out_dir}/metrics.json")
    if args.assert_ablation:
        report = ablation_report(records)
        print(json.dumps(report["medians"], sort_keys=True))
        if not report["ordered_in_median"]:
            print("ablation ordering FAILED", file=sys.stderr)
            return 1
        print("ablation ordering ok")
    return 0


def cmd_ablation(args) -> int:
    report = ablation_report(args.metrics)
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0 if report["ordered_in_median"] else 1


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="courtraster", description=__doc__)
    sub = ap.add_subparsers(dest="cmd", required=True)

    p = sub.add_parser("validate", help="check a tracking CSV")
    p.add_argument("file")
    p.add_argument("--report", help="write a JSON validation report")
    p.set_defaults(fn=cmd_validate)

    p = sub.add_parser("synth", help="generate a synthetic tracking game")
    p.add_argument("--plays", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--truth", help="write per-play planted truth CSV")
    p.set_defaults(fn=cmd_synth)

    p = sub.add_parser("segment", help="extract 5-second shot plays")
    p.add_argument("file")
    p.add_argument("--out", required=True)
    p.add_argument("--report")
    p.set_defaults(fn=cmd_segment)

    p = sub.add_parser("rasterize", help="plays -> faded trajectory images")
    p.add_argument("plays")
    p.add_argument("--channels", type=int, choices=(1, 3, 11), default=11)
    p.add_argument("--fade-floor", type=float, default=0.2)
    p.add_argument("--downscale", type=int, choices=(1, 2), default=1)
    p.add_argument("--out", required=True)
    p.add_argument("--preview-dir")
    p.add_argument("--preview-count", type=int, default=8)
    p.set_defaults(fn=cmd_rasterize)

    p = sub.add_parser("featurize", help="plays -> hand-crafted feature matrix")
    p.add_argument("plays")
    p.add_argument("--out", required=True)
    p.add_argument("--layout", help="write index -> name JSON")
    p.set_defaults(fn=cmd_featurize)

    p = sub.add_parser("labels", help="plays -> ten-class label tensor")
    p.add_argument("plays")
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_labels)

    p = sub.add_parser("train", help="train one model")
    p.add_argument("--model", choices=("ffn", "cnn", "combined"), required=True)
    p.add_argument("--images")
    p.add_argument("--features")
    p.add_argument("--labels", required=True)
    p.add_argument("--split", type=_parse_split, default=(0.72, 0.14, 0.14))
    p.add_argument("--split-seed", type=int, default=7)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--epochs", type=int, default=30)
    p.add_argument("--lr", type=float, default=0.01)
    p.add_argument("--batch-size", type=int, default=64)
    p.add_argument("--patience", type=int, default=5)
    p.add_argument("--ffn-depth", type=int, help="dense blocks in the feature trunk; 0 = logistic regression")
    p.add_argument("--fade-floor", type=float, default=0.2)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint")
    p.add_argument("--ckpt", required=True)
    p.add_argument("--images")
    p.add_argument("--features")
    p.add_argument("--labels", required=True)
    p.add_argument("--split", type=_parse_split, default=None)
    p.add_argument("--split-seed", type=int, default=None)
    p.add_argument("--set", choices=("train", "val", "test"), default="test")
    p.add_argument("--json")
    p.set_defaults(fn=cmd_eval)

    p = sub.add_parser("analyze", help="heat maps, histograms, maxact, ssim")
    asub = p.add_subparsers(dest="what", required=True)

    q = asub.add_parser("heatmap")
    q.add_argument("--plays", required=True)
    q.add_argument("--ckpt", help="model heat map; omit for the raw-data map")
    q.add_argument("--role", default="all")
    q.add_argument("--out-csv")
    q.add_argument("--out-pgm")
    q.set_defaults(fn=cmd_analyze)

    q = asub.add_parser("hist")
    q.add_argument("--plays", required=True)
    q.add_argument("--ckpt", required=True)
    q.add_argument("--role", default="all")
    q.add_argument("--out")
    q.set_defaults(fn=cmd_analyze)

    q = asub.add_parser("maxact")
    q.add_argument("--ckpt", required=True)
    q.add_argument("--layer", type=int, default=1)
    q.add_argument("--filter", type=int, default=0)
    q.add_argument("--steps", type=int, default=200)
    q.add_argument("--step-size", type=float, default=0.05)
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out-prefix", required=True)
    q.set_defaults(fn=cmd_analyze)

    q = asub.add_parser("ssim")
    q.add_argument("--a", required=True)
    q.add_argument("--b", required=True)
    q.add_argument("--half", action="store_true")
    q.set_defaults(fn=cmd_analyze)

    q = asub.add_parser("ssim-table")
    q.add_argument("--ckpt", required=True)
    q.add_argument("--plays", required=True)
    q.add_argument("--filters", help="layer:filter:target[+target] rows, comma separated")
    q.add_argument("--seed", type=int, default=0)
    q.add_argument("--out")
    q.set_defaults(fn=cmd_analyze)

    p = sub.add_parser("run", help="run the whole pipeline from a TOML config")
    p.add_argument("--config")
    p.add_argument("--out-dir", default="runs/ci")
    p.add_argument("--scale", choices=("ci", "full"), default="ci")
    p.add_argument("--assert-ablation", action="store_true")
    p.set_defaults(fn=cmd_run)

    p = sub.add_parser("ablation", help="representation-ordering verdict from metrics.json")
    p.add_argument("--metrics", required=True)
    p.set_defaults(fn=cmd_ablation)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (PipelineError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
