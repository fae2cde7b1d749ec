"""EEG encoding micro-framework: datasets, models, training, metrics."""

from ._ueeg import (
    Dataset,
    Knn,
    MetricsReport,
    Model,
    RandomForest,
    Split,
    TrainHistory,
    UeegError,
    accuracy,
    auc_roc,
    confusion_matrix,
    evaluate,
    macro_f1,
    make_split,
    minmax_normalize,
    preset_names,
    standardize,
    synth,
    train,
    window_dataset,
    window_starts,
)

__all__ = [
    "Dataset",
    "Knn",
    "MetricsReport",
    "Model",
    "RandomForest",
    "Split",
    "TrainHistory",
    "UeegError",
    "accuracy",
    "auc_roc",
    "confusion_matrix",
    "evaluate",
    "macro_f1",
    "make_split",
    "minmax_normalize",
    "preset_names",
    "standardize",
    "synth",
    "train",
    "window_dataset",
    "window_starts",
]
