"""Synthetic grasp dataset generation and simulated grasp trials."""

from ._graspsynth import (
    Dataset,
    Grasp,
    GripperConfig,
    IoError,
    NotFoundError,
    Scene,
    TrialOutcome,
    ValidationError,
    __version__,
    angle_diff,
    dataset_digest,
    generate,
    iou,
    normalize_angle,
    read_dataset,
    read_scene,
    rect_match,
    simulate_grasp,
    trial_all_jaw_sizes,
    write_fixtures,
)

__all__ = [
    "Dataset",
    "Grasp",
    "GripperConfig",
    "IoError",
    "NotFoundError",
    "Scene",
    "TrialOutcome",
    "ValidationError",
    "__version__",
    "angle_diff",
    "dataset_digest",
    "generate",
    "iou",
    "normalize_angle",
    "read_dataset",
    "read_scene",
    "rect_match",
    "simulate_grasp",
    "trial_all_jaw_sizes",
    "write_fixtures",
]
