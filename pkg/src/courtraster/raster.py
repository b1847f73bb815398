"""Faded trajectory images from plays.

The court maps to a 94x50 pixel grid at 1 ft per pixel: rows follow the
court's long axis (x), columns the width (y). Plays are first oriented so
the attacked hoop sits at (88.75, 25), i.e. in the bottom half of the image.
Each entity paints its per-frame pixel with an intensity that fades linearly
from 1.0 at the shot frame down to a floor at the window's first frame;
overlapping paints keep the per-pixel maximum.

Channel layouts:
    1  everything in one channel
    3  offense -> 0 (red), ball -> 1 (green), defense -> 2 (blue)
    11 offense roles 1..5 -> 0..4, ball -> 5, defense roles 1..5 -> 6..10
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .court import COURT_LENGTH_FT, COURT_WIDTH_FT, HOOP_HIGH, HOOP_LOW, PLAY_FRAMES
from .plays import BALL_SLOT, Play
from .tensorfile import save_tensor

VALID_CHANNELS = (1, 3, 11)


@dataclass(frozen=True)
class FadeSpec:
    floor: float = 0.2
    mode: str = "linear"

    def __post_init__(self):
        if not 0.0 <= self.floor < 1.0:
            raise ValueError(f"fade floor must be in [0, 1), got {self.floor}")
        if self.mode != "linear":
            raise ValueError(f"unsupported fade mode {self.mode!r}")

    def intensities(self, n_frames: int = PLAY_FRAMES) -> np.ndarray:
        t = np.arange(n_frames, dtype=np.float64)
        vals = 1.0 - (1.0 - self.floor) * (n_frames - 1 - t) / (n_frames - 1)
        return np.maximum(self.floor, vals)


@dataclass(frozen=True)
class TrajectoryImage:
    data: np.ndarray  # (C, H, W) float32 in [0, 1]
    downscale: int = 1
    half_court: bool = False

    def __post_init__(self):
        data = np.asarray(self.data, dtype=np.float32)
        object.__setattr__(self, "data", data)
        if data.ndim != 3:
            raise ValueError(f"image must be (C, H, W), got shape {data.shape}")
        if data.shape[0] not in VALID_CHANNELS:
            raise ValueError(f"channel count must be one of {VALID_CHANNELS}")
        if np.isnan(data).any():
            raise ValueError("image contains NaN")
        if data.min() < 0.0 or data.max() > 1.0:
            raise ValueError("intensities must lie in [0, 1]")

    @property
    def channels(self) -> int:
        return self.data.shape[0]

    @property
    def height(self) -> int:
        return self.data.shape[1]

    @property
    def width(self) -> int:
        return self.data.shape[2]


def orient_play(play: Play) -> Play:
    """Rotate the play 180 degrees about the court center when needed so the
    attacked hoop (the one nearer the ball at the shot frame) is at
    (88.75, 25). Idempotent."""
    ball = play.positions[-1, BALL_SLOT, :2].astype(np.float64)
    d_high = np.hypot(*(ball - np.array(HOOP_HIGH)))
    d_low = np.hypot(*(ball - np.array(HOOP_LOW)))
    if d_high <= d_low:
        return play
    flipped = play.positions.copy()
    flipped[:, :, 0] = COURT_LENGTH_FT - flipped[:, :, 0]
    flipped[:, :, 1] = COURT_WIDTH_FT - flipped[:, :, 1]
    return replace(play, positions=flipped)


def _channel_of_slot(channels: int) -> np.ndarray:
    """Channel index for each of the 11 play slots."""
    if channels == 1:
        return np.zeros(11, dtype=np.int64)
    if channels == 3:
        return np.array([0] * 5 + [2] * 5 + [1], dtype=np.int64)
    if channels == 11:
        return np.array(list(range(5)) + list(range(6, 11)) + [5], dtype=np.int64)
    raise ValueError(f"channel count must be one of {VALID_CHANNELS}")


def rasterize(
    play: Play,
    channels: int,
    fade: FadeSpec = FadeSpec(),
    downscale: int = 1,
) -> TrajectoryImage:
    """Paint an oriented play into a faded multi-channel intensity grid."""
    if play.positions.shape[0] != PLAY_FRAMES:
        raise ValueError(f"play must have {PLAY_FRAMES} frames")
    if downscale not in (1, 2):
        raise ValueError("downscale must be 1 or 2")
    height = int(COURT_LENGTH_FT) // downscale
    width = int(COURT_WIDTH_FT) // downscale

    chan = _channel_of_slot(channels)
    vals = fade.intensities()  # (T,)
    xy = play.positions[:, :, :2].astype(np.float64)
    rows = np.clip(np.floor(xy[:, :, 0] / downscale).astype(np.int64), 0, height - 1)
    cols = np.clip(np.floor(xy[:, :, 1] / downscale).astype(np.int64), 0, width - 1)

    img = np.zeros((channels, height, width), dtype=np.float64)
    frame_vals = np.broadcast_to(vals[:, None], rows.shape)
    for c in range(channels):
        slots = np.flatnonzero(chan == c)
        np.maximum.at(
            img[c],
            (rows[:, slots].ravel(), cols[:, slots].ravel()),
            frame_vals[:, slots].ravel(),
        )
    return TrajectoryImage(data=img.astype(np.float32), downscale=downscale)


def to_rgb_preview(img: TrajectoryImage) -> TrajectoryImage:
    """Collapse an 11-channel image to RGB: red = offense max, green = ball,
    blue = defense max. Matches rasterize(play, 3) pixel for pixel."""
    if img.channels != 11:
        raise ValueError(f"preview needs an 11-channel image, got {img.channels}")
    rgb = np.stack(
        [
            img.data[0:5].max(axis=0),
            img.data[5],
            img.data[6:11].max(axis=0),
        ]
    )
    return TrajectoryImage(data=rgb, downscale=img.downscale, half_court=img.half_court)


def _to_bytes(data: np.ndarray) -> bytes:
    return (np.floor(data.astype(np.float64) * 255.0 + 0.5).clip(0, 255)).astype(np.uint8).tobytes()


def write_pgm(img: TrajectoryImage) -> bytes:
    if img.channels != 1:
        raise ValueError("PGM export needs a 1-channel image")
    header = f"P5\n{img.width} {img.height}\n255\n".encode()
    return header + _to_bytes(img.data[0])


def write_ppm(img: TrajectoryImage) -> bytes:
    if img.channels != 3:
        raise ValueError("PPM export needs a 3-channel image")
    header = f"P6\n{img.width} {img.height}\n255\n".encode()
    interleaved = np.moveaxis(img.data, 0, -1)  # (H, W, 3)
    return header + _to_bytes(interleaved)


def export_image(img: TrajectoryImage, path) -> None:
    """Write a viewable file: PGM for 1 channel, PPM for 3; 11-channel images
    go to the native tensor format with an RGB preview alongside
    (``<path>.preview.ppm``)."""
    path = str(path)
    if img.channels == 1:
        with open(path, "wb") as fh:
            fh.write(write_pgm(img))
    elif img.channels == 3:
        with open(path, "wb") as fh:
            fh.write(write_ppm(img))
    else:
        save_tensor(path, img.data)
        with open(path + ".preview.ppm", "wb") as fh:
            fh.write(write_ppm(to_rgb_preview(img)))


def rasterize_dataset(
    plays: list[Play],
    channels: int,
    fade: FadeSpec = FadeSpec(),
    downscale: int = 1,
) -> np.ndarray:
    """Stack rasterized plays into an (N, C, H, W) float32 array."""
    if not plays:
        h = int(COURT_LENGTH_FT) // downscale
        w = int(COURT_WIDTH_FT) // downscale
        return np.zeros((0, channels, h, w), dtype=np.float32)
    return np.stack([rasterize(p, channels, fade, downscale).data for p in plays])
