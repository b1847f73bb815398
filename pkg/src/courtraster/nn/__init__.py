from .network import LayerDef, ModelSpec, Network, build_cnn, build_ffn, build_combined, init_params
from .training import Dataset, TrainConfig, TrainingError, evaluate, split_indices, train
from .checkpoint import CheckpointError, load_checkpoint, save_checkpoint
from .layers import softmax_logloss

__all__ = [
    "LayerDef",
    "ModelSpec",
    "Network",
    "build_cnn",
    "build_ffn",
    "build_combined",
    "init_params",
    "Dataset",
    "TrainConfig",
    "TrainingError",
    "evaluate",
    "split_indices",
    "train",
    "CheckpointError",
    "load_checkpoint",
    "save_checkpoint",
    "softmax_logloss",
]
