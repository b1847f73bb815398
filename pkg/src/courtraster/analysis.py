"""Interpretation of trained models: court heat maps, per-role probability
histograms, activation-maximization imagery, and SSIM comparisons against
historical occupancy.

Ten-class outputs are read as five (made, missed) role pairs. The predicted
shooter role is the pair with the largest total mass, and the reported
make-probability is the made share within that pair; the marginal
make-probability (the sum of the five made classes) is used where a
calibrated total is wanted.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from .court import COURT_LENGTH_FT, COURT_WIDTH_FT
from .features import extract_feature_matrix
from .plays import BALL_SLOT, Play
from .raster import FadeSpec, TrajectoryImage, rasterize_dataset
from .nn.network import ModelSpec, Network
from .nn.training import predict_probs

GRID_H = int(COURT_LENGTH_FT)
GRID_W = int(COURT_WIDTH_FT)


# -- reading ten-class outputs ----------------------------------------------

def made_mass(probs: np.ndarray) -> np.ndarray:
    """Marginal make-probability: total mass on the five made classes."""
    return probs[:, 0::2].sum(axis=1)


def role_pair_mass(probs: np.ndarray) -> np.ndarray:
    """(N, 5) total mass per role pair."""
    return probs[:, 0::2] + probs[:, 1::2]


def predicted_role(probs: np.ndarray) -> np.ndarray:
    """Predicted shooter role 1..5 (argmax pair mass)."""
    return np.argmax(role_pair_mass(probs), axis=1) + 1


def pair_made_probability(probs: np.ndarray) -> np.ndarray:
    """Make-probability conditioned on the predicted role pair."""
    pair = role_pair_mass(probs)
    role0 = np.argmax(pair, axis=1)
    rows = np.arange(len(probs))
    return probs[rows, 2 * role0] / pair[rows, role0]


def model_probabilities(
    params,
    spec: ModelSpec,
    plays: list[Play],
    channels: int = 11,
    fade: FadeSpec = FadeSpec(),
    downscale: int = 1,
) -> np.ndarray:
    """Run the model over plays, rasterizing/featurizing as the spec needs.
    Features are standardized by the checkpoint's own statistics."""
    images = rasterize_dataset(plays, channels, fade, downscale) if spec.uses_images() else None
    features = (
        extract_feature_matrix(plays).astype(np.float32) if spec.uses_features() else None
    )
    return predict_probs(params, spec, images, features)


# -- court grids -------------------------------------------------------------

@dataclass
class CourtGrid:
    """Per-square-foot accumulator: numerator over attempts. Cells without
    attempts are empty, not zero."""

    numerator: np.ndarray
    attempts: np.ndarray

    @staticmethod
    def empty() -> "CourtGrid":
        return CourtGrid(
            numerator=np.zeros((GRID_H, GRID_W)),
            attempts=np.zeros((GRID_H, GRID_W), dtype=np.int64),
        )

    def values(self) -> np.ndarray:
        """(H, W) float64 with NaN in empty cells."""
        out = np.full((GRID_H, GRID_W), np.nan)
        mask = self.attempts > 0
        out[mask] = self.numerator[mask] / self.attempts[mask]
        return out

    def populated(self) -> np.ndarray:
        return self.attempts > 0

    def to_csv(self) -> str:
        lines = ["row,col,attempts,value"]
        vals = self.values()
        for r, c in zip(*np.nonzero(self.populated())):
            lines.append(f"{r},{c},{self.attempts[r, c]},{vals[r, c]:.6f}")
        return "\n".join(lines) + "\n"


def shot_cells(plays: list[Play]) -> tuple[np.ndarray, np.ndarray]:
    """Shooter shot-frame pixel per play (full-resolution 1 ft cells)."""
    xy = np.stack([p.shot_xy for p in plays]).astype(np.float64)
    rows = np.clip(np.floor(xy[:, 0]).astype(np.int64), 0, GRID_H - 1)
    cols = np.clip(np.floor(xy[:, 1]).astype(np.int64), 0, GRID_W - 1)
    return rows, cols


def heatmap_raw(plays: list[Play], role: int | None = None) -> CourtGrid:
    """Made-over-attempts ratio by shot cell, optionally for one role."""
    grid = CourtGrid.empty()
    if role is not None:
        plays = [p for p in plays if p.shooter_role == role]
    if not plays:
        return grid
    rows, cols = shot_cells(plays)
    made = np.array([p.made for p in plays], dtype=np.float64)
    np.add.at(grid.numerator, (rows, cols), made)
    np.add.at(grid.attempts, (rows, cols), 1)
    return grid


def heatmap_model(
    params,
    spec: ModelSpec,
    plays: list[Play],
    probs: np.ndarray | None = None,
    role: int | None = None,
    **data_kwargs,
) -> CourtGrid:
    """Mean predicted make-probability (within the predicted role pair) by
    shot cell."""
    grid = CourtGrid.empty()
    if not plays:
        return grid
    if probs is None:
        probs = model_probabilities(params, spec, plays, **data_kwargs)
    vals = pair_made_probability(probs)
    keep = np.ones(len(plays), dtype=bool)
    if role is not None:
        keep = predicted_role(probs) == role
    rows, cols = shot_cells(plays)
    np.add.at(grid.numerator, (rows[keep], cols[keep]), vals[keep])
    np.add.at(grid.attempts, (rows[keep], cols[keep]), 1)
    return grid


def probability_histogram(
    params,
    spec: ModelSpec,
    plays: list[Play],
    role: int | str = "all",
    probs: np.ndarray | None = None,
    bins: int = 20,
    **data_kwargs,
):
    """Histogram of predicted make-probability over [0, 1] for plays whose
    predicted role matches ``role`` ("all" keeps everything).
    Returns (counts, bin_edges)."""
    if probs is None:
        probs = model_probabilities(params, spec, plays, **data_kwargs)
    vals = pair_made_probability(probs)
    if role != "all":
        vals = vals[predicted_role(probs) == int(role)]
    return np.histogram(vals, bins=bins, range=(0.0, 1.0))


# -- activation maximization --------------------------------------------------

@dataclass
class MaxActivationResult:
    image: TrajectoryImage
    trace: np.ndarray  # objective value per step, trace[0] at the start
    layer: int
    filter_index: int
    degenerate: bool


def maximize_activation(
    params,
    spec: ModelSpec,
    layer: int,
    filter_index: int,
    steps: int = 200,
    step_size: float = 0.05,
    seed: int = 0,
) -> MaxActivationResult:
    """Gradient ascent on the input image for one conv filter (1-based conv
    block ordinal), frozen weights. The objective is the spatial mean of the
    filter's post-ReLU map. Starts from uniform noise in [0, 0.1]; pixels are
    clamped to [0, 1] after every step. A zero starting gradient is retried
    with fresh noise up to 3 times before the filter is reported degenerate.
    """
    net = Network(spec)
    if not net.image_layers:
        raise ValueError("activation maximization needs a model with an image trunk")
    stop = net.conv_relu_index(layer)
    rng = np.random.default_rng(seed)
    shape = (1, *spec.image_shape)
    downscale = int(COURT_LENGTH_FT) // spec.image_shape[1]

    def objective(x):
        act = net.forward_image_to(x, params, stop)
        if filter_index >= act.shape[1]:
            raise ValueError(f"filter {filter_index} out of range for layer {layer}")
        val = float(act[0, filter_index].mean(dtype=np.float64))
        dout = np.zeros_like(act)
        dout[0, filter_index] = 1.0 / (act.shape[2] * act.shape[3])
        grad = net.backward_image_from(dout, params, stop)
        return val, grad

    x = None
    val = 0.0
    grad = None
    for _ in range(3):
        x = rng.uniform(0.0, 0.1, size=shape).astype(np.float32)
        val, grad = objective(x)
        if np.linalg.norm(grad) > 0:
            break
    else:
        img = TrajectoryImage(data=np.clip(x[0], 0.0, 1.0), downscale=downscale)
        return MaxActivationResult(img, np.array([val]), layer, filter_index, degenerate=True)

    trace = [val]
    for _ in range(steps):
        norm = np.linalg.norm(grad)
        if norm == 0:
            break
        x = np.clip(x + step_size * grad / norm, 0.0, 1.0).astype(np.float32)
        val, grad = objective(x)
        trace.append(val)
    img = TrajectoryImage(data=x[0], downscale=downscale)
    return MaxActivationResult(img, np.array(trace), layer, filter_index, degenerate=False)


# -- SSIM ---------------------------------------------------------------------

@dataclass(frozen=True)
class SsimSpec:
    window: int = 11
    sigma: float = 1.5
    k1: float = 0.01
    k2: float = 0.03
    dynamic_range: float = 1.0

    def __post_init__(self):
        if self.k1 <= 0 or self.k2 <= 0:
            raise ValueError("K1 and K2 must be positive")


def _gaussian_window(size: int, sigma: float) -> np.ndarray:
    coords = np.arange(size, dtype=np.float64) - (size - 1) / 2.0
    g = np.exp(-(coords**2) / (2.0 * sigma * sigma))
    kernel = np.outer(g, g)
    return kernel / kernel.sum()


def ssim(a, b, spec: SsimSpec = SsimSpec()) -> float:
    """Mean structural similarity over valid sliding Gaussian windows.
    Inputs are equal-shape single-channel images in [0, 1]."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.ndim != 2 or a.shape != b.shape:
        raise ValueError(f"ssim needs two equal 2-d images, got {a.shape} and {b.shape}")
    if min(a.shape) < spec.window:
        raise ValueError(f"images must be at least {spec.window} pixels per side")
    w = _gaussian_window(spec.window, spec.sigma)

    def win_mean(img):
        return np.einsum(
            "hwij,ij->hw", sliding_window_view(img, (spec.window, spec.window)), w
        )

    mu_a = win_mean(a)
    mu_b = win_mean(b)
    var_a = win_mean(a * a) - mu_a**2
    var_b = win_mean(b * b) - mu_b**2
    cov = win_mean(a * b) - mu_a * mu_b
    c1 = (spec.k1 * spec.dynamic_range) ** 2
    c2 = (spec.k2 * spec.dynamic_range) ** 2
    score = ((2 * mu_a * mu_b + c1) * (2 * cov + c2)) / (
        (mu_a**2 + mu_b**2 + c1) * (var_a + var_b + c2)
    )
    return float(score.mean())


def half_court_crop(img):
    """Keep the half of the court containing the attacked hoop: the bottom
    rows after orientation (rows 47..93 at full resolution). TrajectoryImage
    inputs carry a crop flag, so cropping them is idempotent; raw arrays are
    always cropped."""
    if isinstance(img, TrajectoryImage):
        if img.half_court:
            return img
        h = img.height
        return TrajectoryImage(
            data=img.data[:, h // 2 :, :], downscale=img.downscale, half_court=True
        )
    arr = np.asarray(img)
    h = arr.shape[-2]
    return arr[..., h // 2 :, :]


# -- filter-versus-history SSIM table ----------------------------------------

GROUP_SLOTS = {"offense": slice(0, 5), "defense": slice(5, 10)}


def historical_occupancy(plays: list[Play], group: str, downscale: int = 1) -> np.ndarray:
    """Shot-frame occupancy counts for offense, defense, or ball over plays,
    normalized to [0, 1] by the max cell."""
    h, w = GRID_H // downscale, GRID_W // downscale
    grid = np.zeros((h, w))
    if not plays:
        return grid
    if group == "ball":
        pts = np.stack([p.positions[-1, BALL_SLOT, :2] for p in plays]).astype(np.float64)
    elif group in GROUP_SLOTS:
        pts = np.concatenate(
            [p.positions[-1, GROUP_SLOTS[group], :2] for p in plays]
        ).astype(np.float64)
    else:
        raise ValueError(f"group must be offense|ball|defense, got {group!r}")
    rows = np.clip(np.floor(pts[:, 0] / downscale).astype(np.int64), 0, h - 1)
    cols = np.clip(np.floor(pts[:, 1] / downscale).astype(np.int64), 0, w - 1)
    np.add.at(grid, (rows, cols), 1.0)
    peak = grid.max()
    return grid / peak if peak > 0 else grid


def _group_projection(img: TrajectoryImage, group: str) -> np.ndarray:
    if img.channels != 11:
        raise ValueError("group projection needs an 11-channel image")
    if group == "offense":
        return img.data[0:5].max(axis=0).astype(np.float64)
    if group == "ball":
        return img.data[5].astype(np.float64)
    if group == "defense":
        return img.data[6:11].max(axis=0).astype(np.float64)
    raise ValueError(f"group must be offense|ball|defense, got {group!r}")


DEFAULT_FILTER_ROWS = (
    (1, 0, ("offense",)),
    (1, 1, ("ball",)),
    (1, 2, ("offense", "ball")),
    (1, 3, ("defense",)),
)


def compare_filters_to_history(
    params,
    spec: ModelSpec,
    plays: list[Play],
    filters=DEFAULT_FILTER_ROWS,
    steps: int = 200,
    step_size: float = 0.05,
    seed: int = 0,
    ssim_spec: SsimSpec = SsimSpec(),
) -> list[dict]:
    """SSIM of activation-maximization images against historical shot-frame
    occupancy, full court and hoop half. Rows with several targets average
    their per-target SSIM scores."""
    if spec.image_shape is None or spec.image_shape[0] != 11:
        raise ValueError("the SSIM table needs an 11-channel image model")
    downscale = int(COURT_LENGTH_FT) // spec.image_shape[1]
    history = {
        g: historical_occupancy(plays, g, downscale) for g in ("offense", "ball", "defense")
    }
    rows = []
    for layer, filt, targets in filters:
        res = maximize_activation(
            params, spec, layer, filt, steps=steps, step_size=step_size, seed=seed
        )
        full_scores = []
        half_scores = []
        for g in targets:
            proj = _group_projection(res.image, g)
            full_scores.append(ssim(proj, history[g], ssim_spec))
            half_scores.append(
                ssim(half_court_crop(proj), half_court_crop(history[g]), ssim_spec)
            )
        rows.append(
            {
                "layer": layer,
                "filter": filt,
                "targets": "+".join(targets),
                "ssim_half": float(np.mean(half_scores)),
                "ssim_full": float(np.mean(full_scores)),
                "degenerate": res.degenerate,
            }
        )
    return rows


def ssim_table_csv(rows: list[dict]) -> str:
    lines = ["layer,filter,targets,ssim_half,ssim_full,degenerate"]
    for r in rows:
        lines.append(
            f"{r['layer']},{r['filter']},{r['targets']},"
            f"{r['ssim_half']:.6f},{r['ssim_full']:.6f},{int(r['degenerate'])}"
        )
    return "\n".join(lines) + "\n"
