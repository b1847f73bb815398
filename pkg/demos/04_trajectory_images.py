"""Faded trajectory images: grayscale, RGB, and the 11-channel stack.

Writes viewable PGM/PPM files into demos/out/.

Run: python demos/04_trajectory_images.py
"""

from pathlib import Path

import numpy as np

from courtraster import FadeSpec, GenConfig, generate_games, rasterize, to_rgb_preview
from courtraster.plays import extract_shot_plays
from courtraster.raster import export_image, orient_play

out = Path(__file__).parent / "out"
out.mkdir(exist_ok=True)

frames, _ = generate_games(GenConfig(n_plays=8, seed=5))
play = orient_play(extract_shot_plays(frames)[0])

for channels in (1, 3, 11):
    img = rasterize(play, channels, FadeSpec(floor=0.2))
    painted = int(np.count_nonzero(img.data.max(axis=0)))
    print(f"{channels:2d}-channel image {img.data.shape}: {painted} painted pixels, "
          f"intensities [{img.data[img.data > 0].min():.2f}, {img.data.max():.2f}]")
    suffix = {1: "pgm", 3: "ppm", 11: "tnsr"}[channels]
    export_image(img, out / f"play_{channels}ch.{suffix}")

img11 = rasterize(play, 11)
preview = to_rgb_preview(img11)
direct = rasterize(play, 3)
print(f"\nRGB preview of the 11-channel image equals the direct 3-channel "
      f"raster: {np.array_equal(preview.data, direct.data)}")
print(f"files written to {out}/ (PGM/PPM open in any image viewer)")
