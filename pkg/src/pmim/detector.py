"""Training, online detection, root-cause ranking, and model persistence."""

from __future__ import annotations

import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from . import mi_matrix, projection
from .entropy import SHANNON, KernelConfig, _is_shannon
from .errors import DataError, ModelFormatError, UsageError
from .mi_matrix import MIMatrix, Normalizer, NORMALIZER_KINDS
from .projection import Calibration, EPS_VAR, NORM_TAGS

MODEL_SCHEMA_VERSION = 1
MATRIX_SOURCES = ("renyi", "covariance")


@dataclass(frozen=True)
class DetectorConfig:
    alpha: Union[float, str] = 1.01
    sigma: float = 0.5
    w: int = 100
    eta: float = 0.05
    norm_p: str = "l2"
    matrix_source: str = "renyi"
    normalizer: str = "zscore"

    def __post_init__(self):
        if self.w < 4:
            raise UsageError(f"window length must be >= 4, got {self.w}")
        if not 0 < self.eta < 1:
            raise UsageError(f"eta must lie in (0, 1), got {self.eta}")
        if self.norm_p not in NORM_TAGS:
            raise UsageError(f"norm_p must be one of {NORM_TAGS}, got {self.norm_p!r}")
        if self.matrix_source not in MATRIX_SOURCES:
            raise UsageError(
                f"matrix_source must be one of {MATRIX_SOURCES}, got {self.matrix_source!r}"
            )
        if self.normalizer not in NORMALIZER_KINDS:
            raise UsageError(
                f"normalizer must be one of {NORMALIZER_KINDS}, got {self.normalizer!r}"
            )
        self.kernel  # validates alpha and sigma

    @property
    def kernel(self) -> KernelConfig:
        return KernelConfig(sigma=self.sigma, alpha=self.alpha)


@dataclass(frozen=True)
class RootCauseBaseline:
    """Per-variable location/scale of training MI row means (median, IQR)."""

    median: np.ndarray
    iqr: np.ndarray


@dataclass(frozen=True)
class DetectorModel:
    config: DetectorConfig
    normalizer: Normalizer
    calibration: Calibration
    baseline: RootCauseBaseline

    @property
    def m(self) -> int:
        return self.calibration.mu_star.shape[0]


class RootCauseEntry(NamedTuple):
    variable: int  # 0-based column index
    score: float
    outlier: bool


@dataclass(frozen=True)
class DetectionTrace:
    """Per-window monitoring results; alarms hold exactly where d >= d_cl."""

    end_indices: np.ndarray  # 1-based window end positions, strictly increasing
    d_values: np.ndarray
    alarms: np.ndarray
    row_means: np.ndarray  # (n_windows, m) off-diagonal row means of each M
    root_causes: Tuple[Optional[Tuple[RootCauseEntry, ...]], ...]

    def __len__(self) -> int:
        return self.end_indices.shape[0]


def _off_diagonal_row_means(entries: np.ndarray) -> np.ndarray:
    m = entries.shape[0]
    off = entries.copy()
    np.fill_diagonal(off, 0.0)
    return off.sum(axis=1) / (m - 1)


def _window_pass(Xn: np.ndarray, cfg: DetectorConfig, threads: int = 1):
    """Per-window Theta vectors and MI row means over a normalized series."""
    n, m = Xn.shape
    w = cfg.w
    if n < w:
        raise DataError(f"series has {n} samples, needs at least w={w}")
    nw = n - w + 1
    thetas = np.empty((nw, 4 * m))
    row_means = np.empty((nw, m))
    kern = cfg.kernel

    def one(t: int) -> None:
        win = mi_matrix.SampleWindow(Xn[t : t + w], t + w)
        if cfg.matrix_source == "renyi":
            M = mi_matrix.mi_matrix_renyi(win, kern)
        else:
            M = mi_matrix.covariance_matrix(win)
        basis = projection.eigenproject(M)
        tc = projection.transform(win, basis)
        thetas[t] = projection.window_stats(tc).theta
        row_means[t] = _off_diagonal_row_means(M.entries)

    if threads > 1:
        # windows are independent and write disjoint rows
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(one, range(nw)))
    else:
        for t in range(nw):
            one(t)
    return thetas, row_means


def train_report(train_series, cfg: DetectorConfig, threads: int = 1):
    """Like train, but also returns the training D values for reporting."""
    X = mi_matrix.as_series(train_series)
    n, m = X.shape
    if m < 2:
        raise DataError(f"need at least 2 variables, got {m}")
    if n < cfg.w + 20:
        raise DataError(
            f"training needs at least w + 20 = {cfg.w + 20} samples, got {n}"
        )
    norm = mi_matrix.fit_normalizer(X, cfg.normalizer)
    if norm.constant.all():
        raise DataError("training data is constant in every variable")
    Xn = norm.apply(X)
    thetas, row_means = _window_pass(Xn, cfg, threads)
    mu_star = thetas[:, :m].mean(axis=0)
    cal = projection.calibrate(thetas, cfg.eta, cfg.norm_p, mu_star)
    median = np.median(row_means, axis=0)
    q1, q3 = np.quantile(row_means, [0.25, 0.75], axis=0)
    iqr = np.maximum(q3 - q1, EPS_VAR)
    model = DetectorModel(cfg, norm, cal, RootCauseBaseline(median, iqr))
    return model, projection.standardized_deviations(thetas, cal)


def train(train_series, cfg: DetectorConfig, threads: int = 1) -> DetectorModel:
    """Fit normalizer, per-window references, control limit, and the
    root-cause baseline from a clean training series."""
    model, _ = train_report(train_series, cfg, threads)
    return model


def _rank_row_means(
    rm: np.ndarray, baseline: RootCauseBaseline
) -> Tuple[RootCauseEntry, ...]:
    score = np.abs(rm - baseline.median) / baseline.iqr
    # boxplot outliers among this window's own row means
    q1, q3 = np.quantile(rm, [0.25, 0.75])
    spread = 1.5 * (q3 - q1)
    out = (rm < q1 - spread) | (rm > q3 + spread)
    order = np.argsort(-score, kind="stable")
    return tuple(RootCauseEntry(int(i), float(score[i]), bool(out[i])) for i in order)


def detect(model: DetectorModel, test_series, threads: int = 1) -> DetectionTrace:
    """Run the trained monitor over a test series, one window per instant."""
    X = mi_matrix.as_series(test_series)
    n, m = X.shape
    if m != model.m:
        raise DataError(f"test series has {m} variables, model expects {model.m}")
    Xn = model.normalizer.apply(X)
    thetas, row_means = _window_pass(Xn, model.config, threads)
    d = projection.standardized_deviations(thetas, model.calibration)
    alarms = d >= model.calibration.d_cl
    causes = tuple(
        _rank_row_means(row_means[t], model.baseline) if alarms[t] else None
        for t in range(len(d))
    )
    ends = np.arange(model.config.w, n + 1)
    return DetectionTrace(ends, d, alarms, row_means, causes)


def root_cause(
    model: DetectorModel, M_test: Union[MIMatrix, np.ndarray]
) -> Tuple[RootCauseEntry, ...]:
    """Rank variables by |MI row mean - training median| / training IQR,
    descending; flags boxplot outliers among the window's row means."""
    entries = M_test.entries if isinstance(M_test, MIMatrix) else np.asarray(M_test)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise DataError("M_test must be a square matrix")
    if entries.shape[0] != model.m:
        raise DataError(
            f"M_test is {entries.shape[0]}x{entries.shape[0]}, model expects {model.m}"
        )
    return _rank_row_means(_off_diagonal_row_means(entries), model.baseline)


def _alpha_to_json(alpha) -> Union[float, str]:
    return SHANNON if isinstance(alpha, str) and _is_shannon(alpha) else float(alpha)


def _vector(obj, key: str, size: Optional[int] = None) -> np.ndarray:
    try:
        arr = np.asarray(obj[key], dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model field {key!r} missing or malformed") from exc
    if arr.ndim != 1 or (size is not None and arr.shape[0] != size):
        raise ModelFormatError(f"model field {key!r} has wrong shape {arr.shape}")
    return arr


def save_model(model: DetectorModel, destination) -> None:
    """Write the model as versioned JSON (all vectors row-major decimal)."""
    cfg = model.config
    norm = model.normalizer
    if norm.kind == "minmax":
        norm_payload = {
            "kind": "minmax",
            "min": norm.shift.tolist(),
            "max": (norm.shift + np.where(norm.constant, 0.0, norm.scale)).tolist(),
            "scaled_mean": norm.offset.tolist(),
            "constant": norm.constant.tolist(),
        }
    else:
        norm_payload = {
            "kind": "zscore",
            "mean": norm.shift.tolist(),
            "std": norm.scale.tolist(),
            "constant": norm.constant.tolist(),
        }
    payload = {
        "version": MODEL_SCHEMA_VERSION,
        "config": {
            "alpha": _alpha_to_json(cfg.alpha),
            "sigma": cfg.sigma,
            "w": cfg.w,
            "eta": cfg.eta,
            "norm_p": cfg.norm_p,
            "matrix_source": cfg.matrix_source,
        },
        "normalizer": norm_payload,
        "calibration": {
            "mu_star": model.calibration.mu_star.tolist(),
            "theta_mu": model.calibration.theta_mu.tolist(),
            "theta_sigma": model.calibration.theta_sigma.tolist(),
            "d_cl": model.calibration.d_cl,
        },
        "root_cause_baseline": {
            "median": model.baseline.median.tolist(),
            "iqr": model.baseline.iqr.tolist(),
        },
    }
    with open(destination, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")


def load_model(source) -> DetectorModel:
    """Load a model written by save_model; rejects unknown versions and
    malformed files with a load error rather than a traceback."""
    try:
        with open(source, "r", encoding="utf-8") as fh:
            payload = json.load(fh)
    except FileNotFoundError as exc:
        raise DataError(f"model file not found: {source}") from exc
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ModelFormatError(f"model file is not valid JSON: {exc}") from exc
    if not isinstance(payload, dict):
        raise ModelFormatError("model file must hold a JSON object")
    version = payload.get("version")
    if version != MODEL_SCHEMA_VERSION:
        raise ModelFormatError(
            f"unsupported model schema version {version!r}, expected {MODEL_SCHEMA_VERSION}"
        )
    try:
        cfg_obj = payload["config"]
        norm_obj = payload["normalizer"]
        cal_obj = payload["calibration"]
        base_obj = payload["root_cause_baseline"]
        kind = norm_obj["kind"]
        cfg = DetectorConfig(
            alpha=cfg_obj["alpha"],
            sigma=cfg_obj["sigma"],
            w=int(cfg_obj["w"]),
            eta=cfg_obj["eta"],
            norm_p=cfg_obj["norm_p"],
            matrix_source=cfg_obj["matrix_source"],
            normalizer=kind,
        )
        d_cl = float(cal_obj["d_cl"])
    except (KeyError, TypeError, ValueError, UsageError) as exc:
        raise ModelFormatError(f"model file is malformed: {exc}") from exc
    mu_star = _vector(cal_obj, "mu_star")
    m = mu_star.shape[0]
    theta_mu = _vector(cal_obj, "theta_mu", 4 * m)
    theta_sigma = _vector(cal_obj, "theta_sigma", 4 * m)
    median = _vector(base_obj, "median", m)
    iqr = _vector(base_obj, "iqr", m)
    try:
        constant = np.asarray(norm_obj["constant"], dtype=bool)
        if kind == "minmax":
            lo = _vector(norm_obj, "min", m)
            hi = _vector(norm_obj, "max", m)
            scale = np.where(constant, 1.0, hi - lo)
            norm = Normalizer(
                "minmax", lo, scale, _vector(norm_obj, "scaled_mean", m), constant
            )
        elif kind == "zscore":
            norm = Normalizer(
                "zscore",
                _vector(norm_obj, "mean", m),
                _vector(norm_obj, "std", m),
                np.zeros(m),
                constant,
            )
        else:
            raise ModelFormatError(f"unknown normalizer kind {kind!r}")
    except (KeyError, TypeError, ValueError) as exc:
        raise ModelFormatError(f"model normalizer is malformed: {exc}") from exc
    if constant.shape != (m,):
        raise ModelFormatError("normalizer constant flags have wrong shape")
    cal = Calibration(theta_mu, theta_sigma, d_cl, cfg.eta, cfg.norm_p, mu_star)
    return DetectorModel(cfg, norm, cal, RootCauseBaseline(median, iqr))
