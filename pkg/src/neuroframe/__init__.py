"""EEG <-> video-frame translation toolkit built on plain numpy.

Filtering, windowed EEG features, polynomial kernel PCA, a small autodiff
library with the two sequence models, dataset formats and RMSE evaluation.
"""

from .errors import (NeuroframeError, UsageError, DesignError, ShapeError, FormatError,
                     NumericError, RankDeficiencyError, DegenerateWindowError)
from .signal import (EegRecording, FilterCascade, design_bandpass, design_notch, chain,
                     frequency_response, apply_filter, preprocess)
from .features import FEATURE_NAMES, WindowConfig, FeatureSequence, extract_features
from .kpca import KernelConfig, KpcaModel, cumulative_explained_variance
from .models import (TrainConfig, TrainingLog, build_eeg2video, build_video2eeg, train,
                     predict, save_checkpoint, load_checkpoint)
from .evaluate import rmse, mean_baseline, SubjectResult, write_report, read_report

__version__ = "0.1.0"

__all__ = [
    "NeuroframeError", "UsageError", "DesignError", "ShapeError", "FormatError", "NumericError",
    "RankDeficiencyError", "DegenerateWindowError",
    "EegRecording", "FilterCascade", "design_bandpass", "design_notch", "chain", "frequency_response",
    "apply_filter", "preprocess",
    "FEATURE_NAMES", "WindowConfig", "FeatureSequence", "extract_features",
    "KernelConfig", "KpcaModel", "cumulative_explained_variance",
    "TrainConfig", "TrainingLog", "build_eeg2video", "build_video2eeg", "train", "predict",
    "save_checkpoint", "load_checkpoint",
    "rmse", "mean_baseline", "SubjectResult", "write_report", "read_report",
]
