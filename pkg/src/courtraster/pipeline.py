"""End-to-end pipeline: synth -> segment -> rasterize -> featurize -> train
-> evaluate -> analyze, with per-stage artifact caching.

Reruns with an identical config reuse cached artifacts and reproduce the
canonical ``metrics.json`` byte for byte; wall-clock timings and artifact
hashes go to ``run_log.json``, which carries everything volatile. A config
that does not match the one already recorded in the output directory is
refused rather than silently mixed.

Scale presets:
    ci    2,000 plays, 2x downscaled rasters, few epochs; minutes on a laptop
    full  8,000 plays (6k/1k/1k split), full-resolution rasters
"""

from __future__ import annotations

import hashlib
import json
import sys
import time
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np

from . import analysis
from .court import COURT_LENGTH_FT
from .features import extract_feature_matrix, feature_names
from .plays import Play, extract_shot_plays, load_plays, save_plays
from .raster import FadeSpec, TrajectoryImage, export_image, orient_play, rasterize_dataset
from .synth import GenConfig, generate_games, write_truth
from .tensorfile import load_tensor, save_tensor
from .nn import (
    Dataset,
    ModelSpec,
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

REP_LABELS = {1: "1ch", 3: "3ch", 11: "11ch"}


class PipelineError(RuntimeError):
    pass


@dataclass(frozen=True)
class RunConfig:
    out_dir: str
    scale: str = "ci"  # ci | full
    seed: int = 7
    n_plays: int = 0  # 0 = scale default
    train_seeds: tuple[int, ...] = (101, 202, 303)
    models: tuple[str, ...] = ("ffn", "cnn", "combined")
    representations: tuple[int, ...] = (1, 3, 11)
    split: tuple[float, float, float] = (0.0, 0.0, 0.0)  # zeros = scale default
    epochs: int = 0  # epoch budget for the per-representation CNNs
    epochs_combined: int = 0
    epochs_ffn: int = 0
    lr: float = 0.0
    lr_decay_every: int = -1  # -1 = scale default, 0 = constant
    batch_size: int = 64
    patience: int = 5
    downscale: int = 0
    fade_floor: float = 0.2
    ffn_widths: tuple[int, ...] = (256, 256)

    _CI = {
        "n_plays": 2000, "downscale": 2, "split": (0.72, 0.14, 0.14),
        "epochs": 10, "epochs_combined": 20, "epochs_ffn": 30,
        "lr": 0.05, "lr_decay_every": 6,
    }
    _FULL = {
        "n_plays": 8000, "downscale": 1, "split": (0.75, 0.125, 0.125),
        "epochs": 12, "epochs_combined": 14, "epochs_ffn": 40,
        "lr": 0.02, "lr_decay_every": 6,
    }

    def resolved(self) -> "RunConfig":
        if self.scale not in ("ci", "full"):
            raise PipelineError(f"scale must be ci or full, got {self.scale!r}")
        base = self._CI if self.scale == "ci" else self._FULL
        changes = {}
        for key in ("n_plays", "downscale", "epochs", "epochs_combined", "epochs_ffn"):
            if getattr(self, key) == 0:
                changes[key] = base[key]
        if self.lr == 0.0:
            changes["lr"] = base["lr"]
        if self.lr_decay_every == -1:
            changes["lr_decay_every"] = base["lr_decay_every"]
        if self.split == (0.0, 0.0, 0.0):
            changes["split"] = base["split"]
        if not changes:
            return self
        d = asdict(self)
        d.update(changes)
        return RunConfig(**_coerce_config(d))

    def canonical(self) -> dict:
        d = asdict(self.resolved())
        d["train_seeds"] = list(d["train_seeds"])
        d["models"] = list(d["models"])
        d["representations"] = list(d["representations"])
        d["split"] = list(d["split"])
        d["ffn_widths"] = list(d["ffn_widths"])
        return d

    @staticmethod
    def from_toml(path) -> "RunConfig":
        if sys.version_info >= (3, 11):
            import tomllib
        else:
            import tomli as tomllib
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
        return RunConfig(**_coerce_config(raw))


def _coerce_config(raw: dict) -> dict:
    known = set(RunConfig.__dataclass_fields__)
    unknown = set(raw) - known
    if unknown:
        raise PipelineError(f"unknown config keys: {sorted(unknown)}")
    out = dict(raw)
    for key in ("train_seeds", "models", "representations", "split", "ffn_widths"):
        if key in out:
            out[key] = tuple(out[key])
    return out


@dataclass
class MetricsRecord:
    model: str
    representation: str
    seed: int
    split: str
    log_loss: float
    error_rate: float
    wall_time_s: float = 0.0

    def canonical(self) -> dict:
        return {
            "model": self.model,
            "representation": self.representation,
            "seed": self.seed,
            "split": self.split,
            "log_loss": self.log_loss,
            "error_rate": self.error_rate,
        }


def _sha256(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _model_spec(cfg: RunConfig, model: str, channels: int, feature_dim: int) -> ModelSpec:
    h = int(COURT_LENGTH_FT) // cfg.downscale
    w = 50 // cfg.downscale
    if model == "ffn":
        return build_ffn(feature_dim, widths=cfg.ffn_widths)
    if model == "cnn":
        return build_cnn(image_shape=(channels, h, w))
    if model == "combined":
        return build_combined(
            build_cnn(image_shape=(channels, h, w)), build_ffn(feature_dim, widths=cfg.ffn_widths)
        )
    raise PipelineError(f"unknown model {model!r}")


class PipelineRun:
    """Stage driver bound to one output directory."""

    def __init__(self, cfg: RunConfig):
        self.cfg = cfg.resolved()
        self.out = Path(self.cfg.out_dir)
        self.out.mkdir(parents=True, exist_ok=True)
        self.log: dict = {"stages": {}, "hashes": {}, "trainings": []}
        self._check_config_marker()

    def _check_config_marker(self):
        marker = self.out / "config.json"
        canonical = json.dumps(self.cfg.canonical(), sort_keys=True, indent=2)
        if marker.exists():
            if marker.read_text() != canonical:
                raise PipelineError(
                    f"{marker} holds a different config; use a fresh output directory"
                )
        else:
            marker.write_text(canonical)

    # -- paths ---------------------------------------------------------------

    def path_plays(self) -> Path:
        return self.out / "plays.bin"

    def path_truth(self) -> Path:
        return self.out / "truth.csv"

    def path_labels(self) -> Path:
        return self.out / "labels.tnsr"

    def path_images(self, channels: int) -> Path:
        return self.out / f"images_{channels}ch.tnsr"

    def path_features(self) -> Path:
        return self.out / "features.tnsr"

    def path_ckpt(self, model: str, rep: str, seed: int) -> Path:
        return self.out / f"ckpt_{model}_{rep}_seed{seed}.ckpt"

    # -- stages ----------------------------------------------------------------

    def stage_data(self):
        t0 = time.perf_counter()
        if self.path_plays().exists() and self.path_truth().exists():
            plays = load_plays(self.path_plays())
        else:
            frames, scenes = generate_games(GenConfig(n_plays=self.cfg.n_plays, seed=self.cfg.seed))
            plays = [orient_play(p) for p in extract_shot_plays(frames)]
            if len(plays) != self.cfg.n_plays:
                raise PipelineError(
                    f"segmentation recovered {len(plays)} of {self.cfg.n_plays} generated plays"
                )
            save_plays(self.path_plays(), plays)
            self.path_truth().write_bytes(write_truth(scenes))
            save_tensor(self.path_labels(), np.array([p.label for p in plays], dtype=np.float64))
        self.log["stages"]["data"] = time.perf_counter() - t0
        return plays

    def stage_rasterize(self, plays):
        t0 = time.perf_counter()
        fade = FadeSpec(floor=self.cfg.fade_floor)
        needed = set(self.cfg.representations) if "cnn" in self.cfg.models else set()
        if "combined" in self.cfg.models:
            needed.add(11)
        for channels in sorted(needed):
            path = self.path_images(channels)
            if not path.exists():
                imgs = rasterize_dataset(plays, channels, fade, self.cfg.downscale)
                save_tensor(path, imgs)
        self.log["stages"]["rasterize"] = time.perf_counter() - t0

    def stage_featurize(self, plays):
        t0 = time.perf_counter()
        if not self.path_features().exists():
            save_tensor(self.path_features(), extract_feature_matrix(plays))
            (self.out / "feature_layout.json").write_text(
                json.dumps({i: n for i, n in enumerate(feature_names())}, indent=2)
            )
        self.log["stages"]["featurize"] = time.perf_counter() - t0

    def _dataset(self, channels: int | None) -> Dataset:
        labels = load_tensor(self.path_labels()).astype(np.int64)
        images = load_tensor(self.path_images(channels)) if channels else None
        features = load_tensor(self.path_features())
        splits = split_indices(len(labels), self.cfg.split, self.cfg.seed)
        return Dataset(labels=labels, images=images, features=features, splits=splits)

    def _train_one(self, model: str, channels: int | None, seed: int, dataset: Dataset):
        rep = (
            "features"
            if model == "ffn"
            else REP_LABELS[channels] + ("+features" if model == "combined" else "")
        )
        path = self.path_ckpt(model, rep, seed)
        spec = _model_spec(self.cfg, model, channels or 11, dataset.features.shape[1])
        t0 = time.perf_counter()
        if path.exists():
            params, spec, _ = load_checkpoint(path)
        else:
            epochs = {
                "ffn": self.cfg.epochs_ffn,
                "cnn": self.cfg.epochs,
                "combined": self.cfg.epochs_combined,
            }[model]
            tc = TrainConfig(
                lr=self.cfg.lr,
                batch_size=self.cfg.batch_size,
                epochs=epochs,
                seed=seed,
                patience=self.cfg.patience,
                lr_decay_every=self.cfg.lr_decay_every,
            )
            params, history = train(spec, dataset, tc)
            meta = {
                "model": model,
                "representation": rep,
                "seed": seed,
                "channels": channels,
                "downscale": self.cfg.downscale,
                "fade_floor": self.cfg.fade_floor,
                "split": list(self.cfg.split),
                "split_seed": self.cfg.seed,
                "history": history,
            }
            save_checkpoint(params, spec, path, meta)
        wall = time.perf_counter() - t0
        records = []
        for split in ("val", "test"):
            m = evaluate(params, spec, dataset, split=split)
            records.append(
                MetricsRecord(model, rep, seed, split, m["log_loss"], m["error_rate"], wall)
            )
        self.log["trainings"].append({"model": model, "rep": rep, "seed": seed, "wall_s": wall})
        return records

    def stage_train(self) -> list[MetricsRecord]:
        t0 = time.perf_counter()
        records: list[MetricsRecord] = []
        if "ffn" in self.cfg.models:
            ds = self._dataset(None)
            for seed in self.cfg.train_seeds:
                records += self._train_one("ffn", None, seed, ds)
        if "cnn" in self.cfg.models:
            for channels in self.cfg.representations:
                ds = self._dataset(channels)
                for seed in self.cfg.train_seeds:
                    records += self._train_one("cnn", channels, seed, ds)
        if "combined" in self.cfg.models:
            ds = self._dataset(11)
            for seed in self.cfg.train_seeds:
                records += self._train_one("combined", 11, seed, ds)
        self.log["stages"]["train"] = time.perf_counter() - t0
        return records

    def _median_seed(self, records: list[MetricsRecord], model: str, rep: str) -> int:
        rows = sorted(
            (r for r in records if r.model == model and r.representation == rep and r.split == "val"),
            key=lambda r: r.log_loss,
        )
        if not rows:
            raise PipelineError(f"no validation rows for {model}/{rep}")
        return rows[len(rows) // 2].seed

    def stage_analyze(self, plays: list[Play], records: list[MetricsRecord]):
        t0 = time.perf_counter()
        adir = self.out / "analysis"
        adir.mkdir(exist_ok=True)
        fade = FadeSpec(floor=self.cfg.fade_floor)

        raw = analysis.heatmap_raw(plays)
        (adir / "heatmap_raw.csv").write_text(raw.to_csv())
        _grid_to_pgm(raw, adir / "heatmap_raw.pgm")

        if "combined" in self.cfg.models:
            seed = self._median_seed(records, "combined", "11ch+features")
            params, spec, _ = load_checkpoint(self.path_ckpt("combined", "11ch+features", seed))
            images = load_tensor(self.path_images(11))
            features = load_tensor(self.path_features())
            from .nn.training import predict_probs

            probs = predict_probs(params, spec, images, features.astype(np.float32))
            model_grid = analysis.heatmap_model(params, spec, plays, probs=probs)
            (adir / "heatmap_model.csv").write_text(model_grid.to_csv())
            _grid_to_pgm(model_grid, adir / "heatmap_model.pgm")

            hist_lines = ["role,bin_lo,bin_hi,count"]
            for role in ("all", 1, 2, 3, 4, 5):
                counts, edges = analysis.probability_histogram(
                    params, spec, plays, role=role, probs=probs
                )
                for k in range(len(counts)):
                    hist_lines.append(f"{role},{edges[k]:.2f},{edges[k + 1]:.2f},{counts[k]}")
            (adir / "probability_histograms.csv").write_text("\n".join(hist_lines) + "\n")

        if "cnn" in self.cfg.models and 11 in self.cfg.representations:
            seed = self._median_seed(records, "cnn", "11ch")
            params, spec, _ = load_checkpoint(self.path_ckpt("cnn", "11ch", seed))
            traces = ["layer,filter,step,activation"]
            for filt in range(8):
                res = analysis.maximize_activation(params, spec, 1, filt, seed=self.cfg.seed)
                for step, val in enumerate(res.trace):
                    traces.append(f"1,{filt},{step},{val:.8f}")
                export_image(res.image, adir / f"maxact_l1_f{filt}.tnsr")
            (adir / "maxact_traces.csv").write_text("\n".join(traces) + "\n")

            rows = analysis.compare_filters_to_history(params, spec, plays, seed=self.cfg.seed)
            (adir / "ssim_table.csv").write_text(analysis.ssim_table_csv(rows))
        self.log["stages"]["analyze"] = time.perf_counter() - t0

    # -- orchestration -----------------------------------------------------------

    def run(self) -> list[MetricsRecord]:
        plays = self.stage_data()
        self.stage_rasterize(plays)
        self.stage_featurize(plays)
        records = self.stage_train()
        self.stage_analyze(plays, records)
        self.write_metrics(records)
        return records

    def write_metrics(self, records: list[MetricsRecord]):
        records = sorted(records, key=lambda r: (r.model, r.representation, r.seed, r.split))
        summary: dict[str, dict] = {}
        for model, rep in sorted({(r.model, r.representation) for r in records}):
            vals = [r.log_loss for r in records if r.model == model and r.representation == rep and r.split == "val"]
            summary[f"{model}/{rep}"] = {
                "val_log_loss_median": float(np.median(vals)),
                "val_log_loss": vals,
            }
        payload = {
            "config": self.cfg.canonical(),
            "records": [r.canonical() for r in records],
            "summary": summary,
        }
        (self.out / "metrics.json").write_text(json.dumps(payload, sort_keys=True, indent=2))

        for p in sorted(self.out.rglob("*")):
            if p.is_file() and p.name != "run_log.json":
                self.log["hashes"][str(p.relative_to(self.out))] = _sha256(p)
        (self.out / "run_log.json").write_text(json.dumps(self.log, indent=2))


def _grid_to_pgm(grid: analysis.CourtGrid, path: Path):
    vals = grid.values()
    img = np.nan_to_num(vals, nan=0.0)[None, ...].astype(np.float32)
    from .raster import write_pgm

    path.write_bytes(write_pgm(TrajectoryImage(data=img)))


def run_pipeline(cfg: RunConfig) -> list[MetricsRecord]:
    """Execute all stages; identical configs reuse cached artifacts and
    reproduce metrics.json byte for byte."""
    return PipelineRun(cfg).run()


def ablation_report(records_or_path) -> dict:
    """Check the representation ordering: validation log loss of the CNN
    must satisfy 11ch < 3ch < 1ch per seed, and in the seed medians."""
    if isinstance(records_or_path, (str, Path)):
        payload = json.loads(Path(records_or_path).read_text())
        rows = payload["records"]
    else:
        rows = [r.canonical() for r in records_or_path]

    by_rep: dict[str, dict[int, float]] = {"1ch": {}, "3ch": {}, "11ch": {}}
    for r in rows:
        if r["model"] == "cnn" and r["split"] == "val" and r["representation"] in by_rep:
            by_rep[r["representation"]][r["seed"]] = r["log_loss"]
    seeds = sorted(by_rep["11ch"])
    for rep, vals in by_rep.items():
        if sorted(vals) != seeds or not seeds:
            raise PipelineError(f"missing cnn validation rows for representation {rep}")

    per_seed = []
    for s in seeds:
        ordered = by_rep["11ch"][s] < by_rep["3ch"][s] < by_rep["1ch"][s]
        per_seed.append(
            {
                "seed": s,
                "11ch": by_rep["11ch"][s],
                "3ch": by_rep["3ch"][s],
                "1ch": by_rep["1ch"][s],
                "ordered": bool(ordered),
            }
        )
    med = {rep: float(np.median([by_rep[rep][s] for s in seeds])) for rep in by_rep}
    verdict = med["11ch"] < med["3ch"] < med["1ch"]
    return {
        "per_seed": per_seed,
        "medians": med,
        "margin_11ch_vs_1ch": med["1ch"] - med["11ch"],
        "ordered_in_median": bool(verdict),
    }
