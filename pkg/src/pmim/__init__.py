"""Sliding-window fault detection from matrix-based Renyi entropy.

The pipeline estimates a mutual-information matrix per sliding window,
projects each window onto that matrix's eigenvectors, summarizes the
transformed components by their first four moments, and monitors the
standardized deviation of that summary against an empirical control
limit. Includes the synthetic benchmark process, per-sample PCA
baselines, hyperparameter sweeps, and a CLI.
"""

__version__ = "0.1.0"

from .detector import (
    DetectionTrace,
    DetectorConfig,
    DetectorModel,
    detect,
    load_model,
    root_cause,
    save_model,
    train,
)
from .entropy import SHANNON, KernelConfig, joint_entropy, matrix_mi, renyi_entropy
from .errors import (
    DataError,
    ModelFormatError,
    NumericalError,
    PmimError,
    UsageError,
)
from .evaluate import MetricsReport, pca_baseline, score, sweep
from .mi_matrix import MIMatrix, Normalizer, fit_normalizer, mi_matrix_renyi
from .projection import Calibration, eigenproject, transform, window_stats
from .synth import FaultSpec, SynthConfig, generate, inject, scenario

__all__ = [
    "__version__",
    "Calibration",
    "DataError",
    "DetectionTrace",
    "DetectorConfig",
    "DetectorModel",
    "FaultSpec",
    "KernelConfig",
    "MetricsReport",
    "MIMatrix",
    "ModelFormatError",
    "Normalizer",
    "NumericalError",
    "PmimError",
    "SHANNON",
    "SynthConfig",
    "UsageError",
    "detect",
    "eigenproject",
    "fit_normalizer",
    "generate",
    "inject",
    "joint_entropy",
    "load_model",
    "matrix_mi",
    "mi_matrix_renyi",
    "pca_baseline",
    "renyi_entropy",
    "root_cause",
    "save_model",
    "scenario",
    "score",
    "sweep",
    "train",
    "transform",
    "window_stats",
]
