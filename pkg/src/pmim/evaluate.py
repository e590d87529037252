"""Window metrics, per-sample PCA baselines, and hyperparameter sweeps."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from . import mi_matrix, projection
from .detector import DetectionTrace, DetectorConfig, detect, train
from .entropy import KernelConfig, shannon_mi_binned
from .errors import DataError, PmimError, UsageError
from .mi_matrix import MIMatrix, SampleWindow

BASELINE_SOURCES = ("covariance", "mi_shannon_binned", "mi_renyi")
STATISTICS = ("T2", "SPE")


@dataclass(frozen=True)
class MetricsReport:
    """Detection quality over one trace, split by window class.

    Windows whose last sample is at or past onset + w - 1 are fully
    faulted (fdr denominator), windows entirely before onset are normal
    (far denominator), and windows straddling onset form the transition
    phase (tfdr denominator). detection_delay counts samples from onset
    to the first alarmed window end, 1-based inclusive.
    """

    fdr: float
    far: float
    tfdr: float
    detection_delay: Optional[int]
    alarms: int
    evaluated_windows: int

    def __post_init__(self):
        for name in ("fdr", "far", "tfdr"):
            val = getattr(self, name)
            if not 0.0 <= val <= 1.0:
                raise DataError(f"{name} must lie in [0, 1], got {val}")
        if self.detection_delay is not None and self.detection_delay < 0:
            raise DataError("detection_delay cannot be negative")


def score(trace: DetectionTrace, onset: Optional[int], w: int) -> MetricsReport:
    """Split trace windows into normal / transition / fully-faulted classes
    and report alarm fractions per class. onset None means a clean run:
    every window counts as normal."""
    ends = np.asarray(trace.end_indices)
    alarms = np.asarray(trace.alarms, dtype=bool)
    if ends.size == 0:
        raise DataError("cannot score an empty trace")
    if onset is None:
        return MetricsReport(
            fdr=0.0,
            far=float(alarms.mean()),
            tfdr=0.0,
            detection_delay=None,
            alarms=int(alarms.sum()),
            evaluated_windows=int(ends.size),
        )
    if not 1 <= onset <= ends[-1]:
        raise DataError(f"onset {onset} outside trace range [1, {ends[-1]}]")
    fully = ends >= onset + w - 1
    normal = ends <= onset - 1
    transition = ~fully & ~normal
    fdr = float(alarms[fully].mean()) if fully.any() else 0.0
    far = float(alarms[normal].mean()) if normal.any() else 0.0
    tfdr = float(alarms[transition].mean()) if transition.any() else 0.0
    post = alarms & (ends >= onset)
    delay = int(ends[post][0] - onset + 1) if post.any() else None
    return MetricsReport(
        fdr=fdr,
        far=far,
        tfdr=tfdr,
        detection_delay=delay,
        alarms=int(alarms.sum()),
        evaluated_windows=int(ends.size),
    )


def _global_matrix(
    Xn: np.ndarray,
    matrix_source: str,
    sigma: float,
    alpha,
    n_bins: int,
    subsample: int,
) -> np.ndarray:
    n, m = Xn.shape
    if matrix_source == "covariance":
        Xc = Xn - Xn.mean(axis=0)
        return Xc.T @ Xc / (n - 1)
    if matrix_source == "mi_renyi":
        # Gram eigensolves scale cubically with sample count; an
        # evenly-spaced subsample keeps the global matrix tractable
        if n > subsample:
            Xn = Xn[np.linspace(0, n - 1, subsample).astype(int)]
        lam_marginal, lam_joint = mi_matrix.window_spectra(Xn, sigma)
        return mi_matrix.mi_from_spectra(lam_marginal, lam_joint, alpha)
    M = np.empty((m, m))
    for i in range(m):
        for j in range(i, m):
            M[i, j] = M[j, i] = shannon_mi_binned(Xn[:, i], Xn[:, j], n_bins)
    return M


def pca_baseline(
    train_series,
    test_series,
    cpv: float = 0.9,
    matrix_source: str = "covariance",
    statistic: str = "T2",
    eta: float = 0.05,
    sigma: float = 0.5,
    alpha=1.01,
    n_bins: int = 5,
    subsample: int = 1000,
    normalizer: str = "zscore",
) -> DetectionTrace:
    """Classic per-sample PCA monitor on a single global matrix, with the
    covariance slot swappable for an MI matrix. Retains leading positive
    eigenvalues up to the cpv fraction of their sum; T2 uses retained
    eigenvalues as variance surrogates, SPE the residual projector."""
    if not 0 < cpv <= 1:
        raise UsageError(f"cpv must lie in (0, 1], got {cpv}")
    if matrix_source not in BASELINE_SOURCES:
        raise UsageError(
            f"matrix_source must be one of {BASELINE_SOURCES}, got {matrix_source!r}"
        )
    if statistic not in STATISTICS:
        raise UsageError(f"statistic must be one of {STATISTICS}, got {statistic!r}")
    X = mi_matrix.as_series(train_series)
    Xe = mi_matrix.as_series(test_series)
    if Xe.shape[1] != X.shape[1]:
        raise DataError(
            f"test has {Xe.shape[1]} variables, training has {X.shape[1]}"
        )
    KernelConfig(sigma=sigma, alpha=alpha)  # validate early
    norm = mi_matrix.fit_normalizer(X, normalizer)
    Xn, Xen = norm.apply(X), norm.apply(Xe)
    G = _global_matrix(Xn, matrix_source, sigma, alpha, n_bins, subsample)
    lam, V = np.linalg.eigh((G + G.T) * 0.5)
    order = np.argsort(lam)[::-1]
    lam, V = lam[order], V[:, order]
    pos = lam > 1e-12 * max(abs(lam[0]), 1.0)
    if not pos.any():
        raise DataError("global matrix has no positive eigenvalues")
    lam_pos, V_pos = lam[pos], V[:, pos]
    csum = np.cumsum(lam_pos)
    k = int(np.searchsorted(csum, cpv * csum[-1] - 1e-12)) + 1
    Vk, lamk = V_pos[:, :k], lam_pos[:k]

    def stat(data: np.ndarray) -> np.ndarray:
        t = data @ Vk
        if statistic == "T2":
            return ((t * t) / lamk).sum(axis=1)
        r = data - t @ Vk.T
        return (r * r).sum(axis=1)

    limit = projection.control_limit(stat(Xn), eta)
    d = stat(Xen)
    alarms = d >= limit
    ends = np.arange(1, Xe.shape[0] + 1)
    causes = tuple(None for _ in range(len(ends)))
    return DetectionTrace(ends, d, alarms, np.zeros((len(ends), 0)), causes)


@dataclass(frozen=True)
class SweepResult:
    """Complete grid of per-cell metrics, keyed (alpha, sigma, w)."""

    alphas: Tuple
    sigmas: Tuple[float, ...]
    ws: Tuple[int, ...]
    cells: Mapping[Tuple, Union[MetricsReport, str]]

    def __post_init__(self):
        for a in self.alphas:
            for s in self.sigmas:
                for w in self.ws:
                    if (a, s, w) not in self.cells:
                        raise DataError(f"sweep grid missing cell {(a, s, w)}")

    def rows(self):
        """Flat (alpha, sigma, w, report_or_error) rows in grid order."""
        for a in self.alphas:
            for s in self.sigmas:
                for w in self.ws:
                    yield a, s, w, self.cells[(a, s, w)]


def _thetas_for_alphas(Xn: np.ndarray, w: int, sigma: float, alphas):
    """One spectra pass per window, reused by every alpha in the grid."""
    n, m = Xn.shape
    nw = n - w + 1
    if nw < 1:
        raise DataError(f"series has {n} samples, needs at least w={w}")
    spectra = [mi_matrix.window_spectra(Xn[t : t + w], sigma) for t in range(nw)]
    out = {}
    for alpha in alphas:
        thetas = np.empty((nw, 4 * m))
        for t, (lam_marginal, lam_joint) in enumerate(spectra):
            M = MIMatrix(
                mi_matrix.mi_from_spectra(lam_marginal, lam_joint, alpha), "renyi"
            )
            win = SampleWindow(Xn[t : t + w], t + w)
            tc = projection.transform(win, projection.eigenproject(M))
            thetas[t] = projection.window_stats(tc).theta
        out[alpha] = thetas
    return out


def sweep(
    train_series,
    test_series,
    onset: Optional[int],
    base: DetectorConfig,
    alphas: Optional[Sequence] = None,
    sigmas: Optional[Sequence[float]] = None,
    ws: Optional[Sequence[int]] = None,
    threads: int = 1,
) -> SweepResult:
    """Train and score one detector per grid cell. Cells sharing sigma and
    w reuse one set of window spectra across alpha values; per-cell errors
    are recorded as strings instead of aborting the grid."""
    alphas = tuple(alphas) if alphas else (base.alpha,)
    sigmas = tuple(sigmas) if sigmas else (base.sigma,)
    ws = tuple(ws) if ws else (base.w,)
    X = mi_matrix.as_series(train_series)
    Xe = mi_matrix.as_series(test_series)
    m = X.shape[1]

    def cell_cfg(alpha, sigma, w) -> DetectorConfig:
        return DetectorConfig(
            alpha=alpha, sigma=sigma, w=w, eta=base.eta, norm_p=base.norm_p,
            matrix_source=base.matrix_source, normalizer=base.normalizer,
        )

    cells: Dict[Tuple, Union[MetricsReport, str]] = {}
    if base.matrix_source != "renyi":
        for alpha in alphas:
            for sigma in sigmas:
                for w in ws:
                    try:
                        model = train(X, cell_cfg(alpha, sigma, w), threads=threads)
                        trace = detect(model, Xe, threads=threads)
                        cells[(alpha, sigma, w)] = score(trace, onset, w)
                    except PmimError as exc:
                        cells[(alpha, sigma, w)] = str(exc)
        return SweepResult(alphas, sigmas, ws, cells)

    norm = mi_matrix.fit_normalizer(X, base.normalizer)
    Xn, Xen = norm.apply(X), norm.apply(Xe)
    for w in ws:
        for sigma in sigmas:
            valid = []
            for alpha in alphas:
                try:
                    cell_cfg(alpha, sigma, w)
                    valid.append(alpha)
                except PmimError as exc:
                    cells[(alpha, sigma, w)] = str(exc)
            if not valid:
                continue
            try:
                tr = _thetas_for_alphas(Xn, w, sigma, valid)
                te = _thetas_for_alphas(Xen, w, sigma, valid)
            except PmimError as exc:
                for alpha in valid:
                    cells[(alpha, sigma, w)] = str(exc)
                continue
            for alpha in valid:
                try:
                    thetas = tr[alpha]
                    mu_star = thetas[:, :m].mean(axis=0)
                    cal = projection.calibrate(thetas, base.eta, base.norm_p, mu_star)
                    d = projection.standardized_deviations(te[alpha], cal)
                    alarms = d >= cal.d_cl
                    ends = np.arange(w, Xe.shape[0] + 1)
                    causes = tuple(None for _ in range(len(ends)))
                    trace = DetectionTrace(
                        ends, d, alarms, np.zeros((len(ends), 0)), causes
                    )
                    cells[(alpha, sigma, w)] = score(trace, onset, w)
                except PmimError as exc:
                    cells[(alpha, sigma, w)] = str(exc)
    return SweepResult(alphas, sigmas, ws, cells)
