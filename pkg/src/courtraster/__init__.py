"""Shot-outcome prediction from basketball tracking data.

Pipeline: tracking CSV ingestion -> possession segmentation and 5-second
play extraction -> faded multi-channel trajectory images and hand-crafted
features -> FFN / CNN / combined classifiers -> heat maps, per-role
histograms, activation maximization, and SSIM analysis. A synthetic
generator with a planted logistic shot model provides exact ground truth
for testing the whole chain.
"""

from .court import COURT_LENGTH_FT, COURT_WIDTH_FT, FPS, HOOP_HIGH, HOOP_LOW, PLAY_FRAMES
from .tracking import (
    EntityRecord,
    Frame,
    FrameSequence,
    ParseError,
    ValidationReport,
    parse_tracking,
    validate,
    write_tracking,
)
from .synth import GenConfig, PlantedScene, generate_games, planted_shot_probability, read_truth, write_truth
from .plays import (
    Play,
    Possession,
    assign_roles,
    extract_shot_plays,
    label_play,
    load_plays,
    nearest_owner,
    save_plays,
    segment_possessions,
)
from .raster import FadeSpec, TrajectoryImage, export_image, orient_play, rasterize, to_rgb_preview
from .features import FeatureVector, Scene, defenders_in_cone, extract_features, possession_times, window_speeds
from .analysis import (
    CourtGrid,
    SsimSpec,
    compare_filters_to_history,
    half_court_crop,
    heatmap_model,
    heatmap_raw,
    maximize_activation,
    probability_histogram,
    ssim,
)
from .pipeline import MetricsRecord, RunConfig, ablation_report, run_pipeline
from . import nn

__version__ = "0.1.0"
