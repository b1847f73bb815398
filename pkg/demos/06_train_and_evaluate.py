"""Train the three classifiers on a small synthetic set and compare them.

Takes a couple of minutes on a laptop.

Run: python demos/06_train_and_evaluate.py
"""

import time

import numpy as np

from courtraster import FadeSpec, GenConfig, generate_games
from courtraster.features import extract_feature_matrix
from courtraster.plays import extract_shot_plays
from courtraster.raster import orient_play, rasterize_dataset
from courtraster.nn import (
    Dataset,
    TrainConfig,
    build_cnn,
    build_combined,
    build_ffn,
    evaluate,
    split_indices,
    train,
)

frames, _ = generate_games(GenConfig(n_plays=800, seed=3))
plays = [orient_play(p) for p in extract_shot_plays(frames)]
labels = np.array([p.label for p in plays])
features = extract_feature_matrix(plays).astype(np.float32)
images = rasterize_dataset(plays, 11, FadeSpec(0.2), downscale=2)
splits = split_indices(len(labels), (0.72, 0.14, 0.14), seed=3)
print(f"{len(plays)} plays: {len(splits['train'])} train / {len(splits['val'])} val / {len(splits['test'])} test")

dataset = Dataset(labels=labels, images=images, features=features, splits=splits)
specs = {
    "ffn": build_ffn(features.shape[1]),
    "cnn": build_cnn(image_shape=images.shape[1:]),
    "combined": build_combined(build_cnn(image_shape=images.shape[1:]), build_ffn(features.shape[1])),
}
print(f"\n{'model':10s} {'params':>10s} {'val loss':>9s} {'val err':>8s} {'test err':>9s} {'time':>6s}")
for name, spec in specs.items():
    t0 = time.time()
    cfg = TrainConfig(lr=0.04, epochs=8 if name != "ffn" else 25, seed=1, patience=4)
    params, hist = train(spec, dataset, cfg)
    val = evaluate(params, spec, dataset, split="val")
    test = evaluate(params, spec, dataset, split="test")
    print(f"{name:10s} {spec.param_count():10,d} {val['log_loss']:9.3f} "
          f"{val['error_rate']:8.3f} {test['error_rate']:9.3f} {time.time()-t0:5.0f}s")

print(f"\n(chance level: log loss {np.log(10):.3f}, error 0.9)")
