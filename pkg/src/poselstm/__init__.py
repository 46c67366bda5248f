"""Real-time exercise classification from 33-point body landmarks.

A masked stacked-LSTM (132 -> 64 -> 64 -> softmax) trained from scratch on
landmark time series, with a deterministic synthetic-data generator, full
BPTT training, evaluation reports, and a WebSocket serving layer.
"""

from .landmarks import (
    CLASS_REGISTRY,
    DEFAULT_PAD_VALUE,
    FRAME_FEATURES,
    NUM_POINTS,
    POINT_FEATURES,
    ExerciseLabel,
    LandmarkDataset,
    LandmarkFileError,
    LandmarkFrame,
    LandmarkPoint,
    LandmarkRecord,
    MalformedInputError,
    PoseSequence,
    flatten_frame,
    label_from_index,
    label_from_name,
    load_landmark_file,
    pad_or_truncate,
    sanitize_frame,
    save_landmark_file,
)
from .model import (
    GATE_ORDER,
    ClassProbabilities,
    ContractViolation,
    LoadedModel,
    LstmLayerParams,
    ModelConfig,
    ModelFileError,
    ModelParams,
    forward,
    forward_batch,
    init_params,
    load_model,
    lstm_cell_step,
    param_count,
    save_model,
    softmax,
)
from .training import (
    ConfigurationError,
    EpochRecord,
    OptimizerState,
    TrainConfig,
    TrainHistory,
    compute_gradients,
    cross_entropy,
    finite_diff_grad,
    rmsprop_step,
    train,
)
from .evaluation import ConfusionMatrix, EvalReport, evaluate, render_report
from .synthgen import SynthSpec, generate
from .serving import (
    DEFAULT_WINDOW_SIZE,
    ClassificationEngine,
    ClassificationResult,
    StreamSession,
    create_app,
    serve,
)

__version__ = "0.1.0"

__all__ = [
    "CLASS_REGISTRY", "DEFAULT_PAD_VALUE", "FRAME_FEATURES", "NUM_POINTS",
    "POINT_FEATURES", "ExerciseLabel", "LandmarkDataset", "LandmarkFileError",
    "LandmarkFrame", "LandmarkPoint", "LandmarkRecord", "MalformedInputError",
    "PoseSequence", "flatten_frame", "label_from_index", "label_from_name",
    "load_landmark_file", "pad_or_truncate", "sanitize_frame", "save_landmark_file",
    "GATE_ORDER", "ClassProbabilities", "ContractViolation", "LoadedModel",
    "LstmLayerParams", "ModelConfig", "ModelFileError", "ModelParams", "forward",
    "forward_batch", "init_params", "load_model", "lstm_cell_step", "param_count",
    "save_model", "softmax",
    "ConfigurationError", "EpochRecord", "OptimizerState", "TrainConfig",
    "TrainHistory", "compute_gradients", "cross_entropy", "finite_diff_grad",
    "rmsprop_step", "train",
    "ConfusionMatrix", "EvalReport", "evaluate", "render_report",
    "SynthSpec", "generate",
    "DEFAULT_WINDOW_SIZE", "ClassificationEngine", "ClassificationResult",
    "StreamSession", "create_app", "serve",
    "__version__",
]
