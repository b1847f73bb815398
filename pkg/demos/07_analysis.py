"""Interpret a trained model: court heat maps, per-role probability
histograms, activation maximization, and the SSIM table.

Writes images into demos/out/.

Run: python demos/07_analysis.py
"""

import time
from pathlib import Path

import numpy as np

from courtraster import FadeSpec, GenConfig, generate_games
from courtraster.analysis import (
    compare_filters_to_history,
    heatmap_model,
    heatmap_raw,
    maximize_activation,
    pair_made_probability,
    predicted_role,
    probability_histogram,
    ssim_table_csv,
)
from courtraster.features import extract_feature_matrix
from courtraster.plays import extract_shot_plays
from courtraster.raster import export_image, orient_play, rasterize_dataset
from courtraster.nn import Dataset, TrainConfig, build_cnn, build_combined, build_ffn, split_indices, train
from courtraster.nn.training import predict_probs

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

print("generating and training (a few minutes)...")
t0 = time.time()
frames, scenes = generate_games(GenConfig(n_plays=1000, seed=17))
plays = [orient_play(p) for p in extract_shot_plays(frames)]
labels = np.array([p.label for p in plays])
features = extract_feature_matrix(plays).astype(np.float32)
images = rasterize_dataset(plays, 11, FadeSpec(0.2), downscale=2)
dataset = Dataset(labels=labels, images=images, features=features,
                  splits=split_indices(len(labels), (0.72, 0.14, 0.14), seed=17))
spec = build_combined(build_cnn(image_shape=images.shape[1:]), build_ffn(features.shape[1]))
params, _ = train(spec, dataset, TrainConfig(lr=0.04, epochs=8, seed=1, patience=4))
print(f"trained the combined model in {time.time()-t0:.0f}s")

probs = predict_probs(params, spec, images, features)

raw = heatmap_raw(plays)
model = heatmap_model(params, spec, plays, probs=probs)
near = raw.values()[84:94, 20:30]
print(f"\nraw heat map: {int(raw.populated().sum())} populated cells; "
      f"make rate within 10 ft of the hoop {np.nanmean(near):.2f}")
vals = model.values()
pop = model.populated()
rows = np.arange(94)[:, None] + 0.5
dists = np.hypot(rows - 88.75, np.arange(50)[None, :] + 0.5 - 25.0)
close = vals[pop & (dists < 8)].mean()
far = vals[pop & (dists > 20)].mean()
print(f"model heat map: mean p(make) {close:.2f} near the hoop vs {far:.2f} beyond 20 ft")

print("\npredicted make probability by predicted role:")
roles = predicted_role(probs)
made_p = pair_made_probability(probs)
for role in range(1, 6):
    sel = roles == role
    counts, _ = probability_histogram(None, None, plays, role=role, probs=probs)
    print(f"  role {role}: n={sel.sum():4d}  mean {made_p[sel].mean():.3f}  "
          f"histogram peak bin {int(np.argmax(counts))}")

print("\nactivation maximization on four first-layer filters:")
for filt in range(4):
    res = maximize_activation(params, spec, layer=1, filter_index=filt, steps=100, seed=7)
    tag = "degenerate" if res.degenerate else f"{res.trace[0]:.4f} -> {res.trace[-1]:.4f}"
    print(f"  filter {filt}: {tag}")
    export_image(res.image, out / f"maxact_f{filt}.tnsr")

table = compare_filters_to_history(params, spec, plays, steps=100, seed=7)
print("\nSSIM of filter images vs historical shot-frame occupancy:")
print(ssim_table_csv(table))
print(f"images written to {out}/")
