"""Matrix-based Renyi entropy and mutual information on kernel Gram spectra.

A variable's window of w samples is lifted to a w x w RBF Gram matrix,
trace-normalized, and its eigenvalues are treated as a probability
distribution. Entropy of order ``alpha`` is

    H_a(A) = log2(sum_i lambda_i(A)**a) / (1 - a)

in bits. Joint entropy of two variables uses the Hadamard product of
their normalized Grams, renormalized to unit trace, and mutual
information is H(A) + H(B) - H(A, B).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError, UsageError

# Symbolic order selecting the Shannon limit -sum(lam * log2(lam)).
SHANNON = "shannon"

# Orders closer to 1 than this are evaluated in the Shannon limit.
_SHANNON_TOL = 1e-6


def _is_shannon(alpha) -> bool:
    if alpha == SHANNON:
        return True
    return abs(float(alpha) - 1.0) < _SHANNON_TOL


@dataclass(frozen=True)
class KernelConfig:
    """RBF bandwidth and entropy order used throughout one analysis."""

    sigma: float = 0.5
    alpha: float = 1.01

    def __post_init__(self):
        if not (self.sigma > 0):
            raise UsageError(f"sigma must be positive, got {self.sigma}")
        if self.alpha != SHANNON and not (float(self.alpha) > 0):
            raise UsageError(f"alpha must be positive, got {self.alpha}")


def rbf_gram(x: np.ndarray, sigma: float) -> np.ndarray:
    """Gram matrix K[i, j] = exp(-(x[i] - x[j])**2 / (2 sigma**2))."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise DataError(f"need a 1-d window of at least 2 samples, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise DataError("window contains non-finite values")
    if not (sigma > 0):
        raise UsageError(f"sigma must be positive, got {sigma}")
    d = x[:, None] - x[None, :]
    return np.exp(d * d * (-0.5 / (sigma * sigma)))


def normalize_gram(K: np.ndarray) -> np.ndarray:
    """Trace-normalize a symmetric kernel matrix to A = K / tr(K)."""
    K = np.asarray(K, dtype=float)
    tr = np.trace(K)
    if not (tr > 0):
        raise NumericalError(f"degenerate kernel: trace {tr} is not positive")
    return K / tr


def eigenspectrum(A: np.ndarray) -> np.ndarray:
    """Descending eigenvalues of a normalized Gram, clipped to be a distribution.

    Tiny negative eigenvalues are floating-point noise (A is SPD in exact
    arithmetic); they are clipped to 0 and the spectrum is renormalized when
    clipping moved the sum by more than 1e-12.
    """
    A = np.asarray(A, dtype=float)
    # purge accumulated asymmetry before the symmetric solver
    lams = _batch_eigvalsh((A + A.T)[None, :, :] * 0.5)[0]
    return _clean_spectra(lams[None, :])[0]


def _batch_eigvalsh(stack: np.ndarray) -> np.ndarray:
    """Eigenvalues of a stack of symmetric matrices (ascending per LAPACK)."""
    try:
        return np.linalg.eigvalsh(stack)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc


def _clean_spectra(lams: np.ndarray) -> np.ndarray:
    """Sort descending, clip negatives, renormalize drifted rows."""
    lams = np.sort(lams, axis=-1)[..., ::-1]
    clipped = np.clip(lams, 0.0, None)
    sums = clipped.sum(axis=-1, keepdims=True)
    drifted = np.abs(sums - lams.sum(axis=-1, keepdims=True)) > 1e-12
    return np.where(drifted, clipped / sums, clipped)


def entropy_from_spectrum(lams: np.ndarray, alpha) -> float:
    """Entropy in bits of one eigenvalue distribution (cleaned beforehand)."""
    return float(_entropies(np.asarray(lams, dtype=float)[None, :], alpha)[0])


def _entropies(lams: np.ndarray, alpha) -> np.ndarray:
    """Entropies in bits for a batch of eigenvalue rows."""
    if _is_shannon(alpha):
        safe = np.where(lams > 0, lams, 1.0)  # 0 log 0 := 0
        return -(lams * np.log2(safe)).sum(axis=-1)
    a = float(alpha)
    powered = np.where(lams > 0, lams, 0.0) ** a  # 0**a := 0 for a < 1
    return np.log2(powered.sum(axis=-1)) / (1.0 - a)


def renyi_entropy(A: np.ndarray, alpha) -> float:
    """Matrix-based Renyi entropy of a normalized Gram, in bits."""
    if alpha != SHANNON and not (float(alpha) > 0):
        raise UsageError(f"alpha must be positive, got {alpha}")
    return entropy_from_spectrum(eigenspectrum(A), alpha)


def hadamard_gram(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Joint Gram (A o B) / tr(A o B) for two same-size normalized Grams."""
    A = np.asarray(A, dtype=float)
    B = np.asarray(B, dtype=float)
    if A.shape != B.shape:
        raise DataError(f"gram shapes differ: {A.shape} vs {B.shape}")
    return normalize_gram(A * B)


def joint_entropy(A: np.ndarray, B: np.ndarray, alpha) -> float:
    """Joint entropy H_a(A, B) via the trace-normalized Hadamard product."""
    return renyi_entropy(hadamard_gram(A, B), alpha)


def matrix_mi(x: np.ndarray, y: np.ndarray, cfg: KernelConfig) -> float:
    """Mutual information I(x; y) = H(A) + H(B) - H(A, B), in bits."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape:
        raise DataError(f"window shapes differ: {x.shape} vs {y.shape}")
    A = normalize_gram(rbf_gram(x, cfg.sigma))
    B = normalize_gram(rbf_gram(y, cfg.sigma))
    return renyi_entropy(A, cfg.alpha) + renyi_entropy(B, cfg.alpha) - joint_entropy(A, B, cfg.alpha)


def shannon_mi_binned(x: np.ndarray, y: np.ndarray, n_bins: int = 5) -> float:
    """Plug-in Shannon MI from equal-width binning over each variable's range.

    A constant variable occupies a single bin and contributes zero
    information, so the result is 0 by convention rather than an error.
    """
    if n_bins < 2:
        raise UsageError(f"need at least 2 bins, got {n_bins}")
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise DataError(f"need equal-length 1-d samples, got {x.shape} and {y.shape}")
    if np.ptp(x) == 0 or np.ptp(y) == 0:
        return 0.0
    joint, _, _ = np.histogram2d(x, y, bins=n_bins)
    p = joint / joint.sum()
    px = p.sum(axis=1, keepdims=True)
    py = p.sum(axis=0, keepdims=True)
    mask = p > 0
    return float((p[mask] * np.log2(p[mask] / (px @ py)[mask])).sum())
