"""Sliding windows, train-set normalization, and per-window dependence matrices.

A window of w consecutive normalized samples yields an m x m matrix whose
diagonal holds marginal entropies and whose off-diagonal entries hold
pairwise mutual information (or, for the linear baseline, the sample
covariance). Marginal Grams and entropies are computed once per variable
and reused across all pairs.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import entropy
from .errors import DataError, UsageError


def as_series(samples) -> np.ndarray:
    """Validate an n x m series matrix (rows = time, columns = variables)."""
    X = np.asarray(samples, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2 or X.shape[1] < 1:
        raise DataError(f"need an n x m series with n >= 2, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise DataError("series contains non-finite values")
    return X


@dataclass(frozen=True)
class Normalizer:
    """Frozen affine per-variable transform: (x - shift) / scale - offset.

    kind "zscore" stores the train mean/std (offset is zero); kind "minmax"
    stores the train min and range with the scaled-train mean as offset.
    Constant training variables keep scale 1 so they pass through unchanged
    (their Gram is all-ones and their entropy 0 downstream).
    """

    kind: str
    shift: np.ndarray
    scale: np.ndarray
    offset: np.ndarray
    constant: np.ndarray

    def apply(self, series) -> np.ndarray:
        X = as_series(series)
        if X.shape[1] != self.shift.size:
            raise DataError(f"series has {X.shape[1]} variables, normalizer has {self.shift.size}")
        return (X - self.shift) / self.scale - self.offset

    def invert(self, normalized) -> np.ndarray:
        X = np.asarray(normalized, dtype=float)
        return (X + self.offset) * self.scale + self.shift


NORMALIZER_KINDS = ("zscore", "minmax")


def fit_normalizer(train, kind: str = "minmax") -> Normalizer:
    """Learn per-variable normalization constants from training data.

    minmax scales each variable to [0, 1] by its training range, then
    subtracts the scaled training mean; zscore centers by the training
    mean and divides by the training standard deviation. Constant
    variables are flagged and passed through with unit scale."""
    X = as_series(train)
    if kind == "zscore":
        shift = X.mean(axis=0)
        scale = X.std(axis=0)
        constant = scale == 0
        scale = np.where(constant, 1.0, scale)
        offset = np.zeros(X.shape[1])
    elif kind == "minmax":
        lo = X.min(axis=0)
        hi = X.max(axis=0)
        constant = hi == lo
        shift = lo
        scale = np.where(constant, 1.0, hi - lo)
        offset = ((X - shift) / scale).mean(axis=0)
    else:
        raise UsageError(f"unknown normalizer kind {kind!r}, expected one of {NORMALIZER_KINDS}")
    return Normalizer(kind, shift, scale, offset, constant)


@dataclass(frozen=True)
class SampleWindow:
    """Rows k-w+1 ... k (1-based, inclusive) of a normalized series."""

    data: np.ndarray
    end_index: int


def window_at(series: np.ndarray, k: int, w: int) -> SampleWindow:
    """Window ending at 1-based sample index k."""
    n = series.shape[0]
    if w < 2:
        raise UsageError(f"window length must be at least 2, got {w}")
    if not w <= k <= n:
        raise DataError(f"window end {k} outside [{w}, {n}] for w={w}, n={n}")
    return SampleWindow(series[k - w : k], k)


def iter_windows(series: np.ndarray, w: int, stride: int = 1):
    """All stride-spaced windows, first one ending at index w."""
    for k in range(w, series.shape[0] + 1, stride):
        yield window_at(series, k, w)


@dataclass(frozen=True)
class MIMatrix:
    """Symmetric m x m dependence matrix with its construction tag."""

    entries: np.ndarray
    source: str  # "renyi" | "shannon_binned" | "covariance"


def _marginal_grams(data: np.ndarray, sigma: float) -> np.ndarray:
    """Trace-normalized RBF Grams of each variable's window, stacked (m, w, w)."""
    d = data[:, None, :] - data[None, :, :]
    K = np.exp(np.transpose(d * d, (2, 0, 1)) * (-0.5 / (sigma * sigma)))
    traces = np.trace(K, axis1=1, axis2=2)
    return K / traces[:, None, None]


def window_spectra(data: np.ndarray, sigma: float):
    """Eigenvalue spectra of all marginal and pairwise joint Grams of a window.

    Returns (marginal (m, w), joint (m(m-1)/2, w)) cleaned spectra; the joint
    rows follow the (i, j) order of pair_indices(m). Entropy evaluation is
    deferred so several orders alpha can reuse one set of spectra.
    """
    w, m = data.shape
    if w < 2:
        raise DataError(f"window too small for Gram spectra: w={w}")
    A = _marginal_grams(data, sigma)
    pairs = pair_indices(m)
    joints = np.empty((len(pairs), w, w))
    for q, (i, j) in enumerate(pairs):
        C = A[i] * A[j]
        joints[q] = C / np.trace(C)
    lam_marginal = entropy._batch_eigvalsh(A)
    lam_joint = entropy._batch_eigvalsh(joints) if len(pairs) else joints.reshape(0, w)
    return entropy._clean_spectra(lam_marginal), entropy._clean_spectra(lam_joint)


def pair_indices(m: int) -> list[tuple[int, int]]:
    """Unordered variable pairs (i, j), i < j, in row-major order."""
    return [(i, j) for i in range(m) for j in range(i + 1, m)]


def mi_from_spectra(lam_marginal: np.ndarray, lam_joint: np.ndarray, alpha) -> np.ndarray:
    """Assemble the MI matrix from precomputed spectra for one order alpha."""
    m = lam_marginal.shape[0]
    H = entropy._entropies(lam_marginal, alpha)
    HJ = entropy._entropies(lam_joint, alpha)
    M = np.diag(H)
    for q, (i, j) in enumerate(pair_indices(m)):
        M[i, j] = M[j, i] = H[i] + H[j] - HJ[q]
    return M


def mi_matrix_renyi(win: SampleWindow, cfg: entropy.KernelConfig) -> MIMatrix:
    """Per-window MI matrix: marginal entropies on the diagonal, pairwise MI off it."""
    lam_marginal, lam_joint = window_spectra(win.data, cfg.sigma)
    M = mi_from_spectra(lam_marginal, lam_joint, cfg.alpha)
    return MIMatrix((M + M.T) * 0.5, "renyi")


def covariance_matrix(win: SampleWindow) -> MIMatrix:
    """Linear-baseline window matrix C = X^T X / (w - 1).

    The series is assumed already centered by the training normalizer, so
    no per-window centering is applied."""
    X = win.data
    if X.shape[0] < 2:
        raise DataError("covariance needs at least 2 samples")
    C = X.T @ X / (X.shape[0] - 1)
    return MIMatrix((C + C.T) * 0.5, "covariance")
