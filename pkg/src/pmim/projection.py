"""Eigenprojection of windows and moment statistics of the transformed components.

Each window's dependence matrix is eigendecomposed into a deterministic
orthonormal basis; the window data projected onto that basis gives the
transformed components (TCs). A window is summarized by the 4m-vector
Theta = [mean | variance | skewness | excess kurtosis] of its TCs, and
monitored through the standardized deviation D = ||diag(sigma)^-1 (Theta
- Theta_mu)||_p against an empirically calibrated control limit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DataError, NumericalError, UsageError
from .mi_matrix import MIMatrix, SampleWindow

# Variance floor below which skewness/kurtosis are 0 and standardization is clamped.
EPS_VAR = 1e-12

NORM_TAGS = ("l2", "linf")


@dataclass(frozen=True)
class ProjectionBasis:
    """Orthonormal eigenvectors (columns, descending eigenvalue order)."""

    vectors: np.ndarray
    values: np.ndarray


def eigenproject(M: MIMatrix) -> ProjectionBasis:
    """Deterministic symmetric eigendecomposition of a dependence matrix.

    Eigenvalues are sorted descending; within each eigenvector the entry of
    largest magnitude is made positive so the basis (and the sign-sensitive
    skewness downstream) is reproducible.
    """
    E = np.asarray(M.entries, dtype=float)
    try:
        lam, P = np.linalg.eigh((E + E.T) * 0.5)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigendecomposition failed: {exc}") from exc
    order = np.argsort(lam, kind="stable")[::-1]
    lam = lam[order]
    P = P[:, order]
    anchors = np.argmax(np.abs(P), axis=0)
    signs = np.sign(P[anchors, np.arange(P.shape[1])])
    P = P * np.where(signs == 0, 1.0, signs)
    return ProjectionBasis(P, lam)


@dataclass(frozen=True)
class TCWindow:
    """Window data expressed in a projection basis: T = X P."""

    data: np.ndarray
    basis: ProjectionBasis


def transform(win: SampleWindow, basis: ProjectionBasis) -> TCWindow:
    if win.data.shape[1] != basis.vectors.shape[0]:
        raise DataError(
            f"window has {win.data.shape[1]} variables, basis expects {basis.vectors.shape[0]}"
        )
    return TCWindow(win.data @ basis.vectors, basis)


@dataclass(frozen=True)
class DetectionIndex:
    """Per-component window moments and their concatenated 4m view Theta."""

    mean: np.ndarray
    variance: np.ndarray
    skewness: np.ndarray
    kurtosis: np.ndarray  # excess kurtosis

    @property
    def theta(self) -> np.ndarray:
        return np.concatenate([self.mean, self.variance, self.skewness, self.kurtosis])


def window_stats(tc: TCWindow, center: np.ndarray | None = None) -> DetectionIndex:
    """Four 1/w-weighted moments of each transformed component.

    Without ``center`` (training) the higher moments are taken around the
    window's own mean. With ``center`` (testing against a trained reference)
    variance, skewness, and kurtosis are taken around the given vector while
    the reported mean stays the raw window mean. Components whose standard
    deviation falls below the variance floor get skewness = kurtosis = 0.
    """
    T = tc.data
    if T.shape[0] < 4:
        raise DataError(f"moment statistics need w >= 4 samples, got {T.shape[0]}")
    mu = T.mean(axis=0)
    if center is None:
        c = mu
    else:
        c = np.asarray(center, dtype=float)
        if c.shape != mu.shape:
            raise DataError(f"center has shape {c.shape}, expected {mu.shape}")
    dev = T - c
    var = (dev * dev).mean(axis=0)
    sd = np.sqrt(var)
    live = sd > EPS_VAR
    safe = np.where(live, sd, 1.0)
    skew = np.where(live, (dev**3).mean(axis=0) / safe**3, 0.0)
    kurt = np.where(live, (dev**4).mean(axis=0) / safe**4 - 3.0, 0.0)
    return DetectionIndex(mu, var, skew, kurt)


@dataclass(frozen=True)
class Calibration:
    """Trained monitoring reference: standardization, limit, and TC center."""

    theta_mu: np.ndarray
    theta_sigma: np.ndarray
    d_cl: float
    eta: float
    norm_p: str  # "l2" | "linf"
    mu_star: np.ndarray


def similarity(theta: np.ndarray, cal: Calibration) -> float:
    """Similarity index D: p-norm of the standardized deviation from Theta_mu."""
    theta = np.asarray(theta, dtype=float)
    if theta.shape != cal.theta_mu.shape:
        raise DataError(f"theta has shape {theta.shape}, expected {cal.theta_mu.shape}")
    z = (theta - cal.theta_mu) / cal.theta_sigma
    return float(np.linalg.norm(z, np.inf if cal.norm_p == "linf" else 2))


def standardized_deviations(thetas: np.ndarray, cal: Calibration) -> np.ndarray:
    """Row-wise similarity indices for a stack of Theta vectors."""
    z = (np.asarray(thetas, dtype=float) - cal.theta_mu) / cal.theta_sigma
    if cal.norm_p == "linf":
        return np.abs(z).max(axis=1)
    return np.sqrt((z * z).sum(axis=1))


def control_limit(train_d: np.ndarray, eta: float) -> float:
    """Empirical (1 - eta) quantile with linear interpolation between order stats."""
    train_d = np.asarray(train_d, dtype=float)
    if train_d.size < 20:
        raise DataError(f"control limit needs at least 20 training values, got {train_d.size}")
    if not 0 < eta < 1:
        raise UsageError(f"eta must lie in (0, 1), got {eta}")
    return float(np.quantile(train_d, 1.0 - eta))


def calibrate(
    thetas: np.ndarray, eta: float, norm_p: str, mu_star: np.ndarray
) -> Calibration:
    """Fit the monitoring reference from the stack of training Theta vectors."""
    if norm_p not in NORM_TAGS:
        raise UsageError(f"norm_p must be one of {NORM_TAGS}, got {norm_p!r}")
    thetas = np.asarray(thetas, dtype=float)
    theta_mu = thetas.mean(axis=0)
    theta_sigma = np.maximum(thetas.std(axis=0), EPS_VAR)
    partial = Calibration(theta_mu, theta_sigma, np.inf, eta, norm_p, mu_star)
    d = standardized_deviations(thetas, partial)
    return Calibration(theta_mu, theta_sigma, control_limit(d, eta), eta, norm_p, mu_star)
