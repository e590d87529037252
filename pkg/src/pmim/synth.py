"""Synthetic nonlinear dynamic process with four seeded fault injectors."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import NamedTuple, Optional, Tuple

import numpy as np

from .errors import DataError, UsageError

A_MIX_DEFAULT = (
    (0.2183, -0.1693, 0.2063),
    (-0.1972, 0.2376, 0.1736),
    (0.9037, -0.1530, 0.6373),
    (0.1146, 0.9528, -0.2624),
    (0.4173, -0.2458, 0.8325),
)
BETA_DEFAULT = (
    (0.6699, 0.0812, 0.5308, 0.4527, 0.2931),
    (0.4071, 0.8758, 0.2158, -0.0902, 0.1122),
    (0.3035, 0.5675, 0.3064, 0.1316, 0.6889),
)
SOURCE_MEAN_DEFAULT = (0.3, 2.0, 3.1)
SOURCE_STD_DEFAULT = (1.0, 2.0, 0.8)
NOISE_STD_DEFAULT = (0.061, 0.063, 0.198, 0.176, 0.170)

# FIR lag order = number of beta columns; the first LAG-1 samples are
# warm-up (zero-padded filter history).
LAG = 5
WARMUP = LAG - 1

FAULT_KINDS = (
    "sensor_bias",
    "gain_degradation",
    "additive_process",
    "dynamic_change",
)

BIAS_BASE_DEFAULT = 5.6
BIAS_NOISE_DEFAULT = 1.0
GAIN_DEFAULT = 0.6
SOURCE_SHIFT_DEFAULT = 1.2
DELTA_BETA_DEFAULT = (-0.825, 0.061, 0.662, -0.820, 0.835)


@dataclass(frozen=True)
class SynthConfig:
    """Process constants. Defaults are the reference parameterization."""

    mixing: tuple = A_MIX_DEFAULT
    beta: tuple = BETA_DEFAULT
    source_mean: tuple = SOURCE_MEAN_DEFAULT
    source_std: tuple = SOURCE_STD_DEFAULT
    noise_std: tuple = NOISE_STD_DEFAULT
    seed: int = 0

    def __post_init__(self):
        mixing = np.asarray(self.mixing, dtype=float)
        beta = np.asarray(self.beta, dtype=float)
        if mixing.shape != (5, 3):
            raise UsageError("mixing must be a 5x3 matrix")
        if beta.ndim != 2 or beta.shape[0] != 3 or beta.shape[1] < 2:
            raise UsageError("beta must be 3 rows with at least 2 lags")
        for name, val, size in (
            ("source_mean", self.source_mean, 3),
            ("source_std", self.source_std, 3),
            ("noise_std", self.noise_std, 5),
        ):
            arr = np.asarray(val, dtype=float)
            if arr.shape != (size,):
                raise UsageError(f"{name} must have length {size}")

    @property
    def lag(self) -> int:
        return len(self.beta[0])


@dataclass(frozen=True)
class FaultSpec:
    """One of the four fault kinds, anchored at a 1-based onset sample."""

    kind: str
    onset: int
    bias_base: float = BIAS_BASE_DEFAULT
    bias_noise: float = BIAS_NOISE_DEFAULT
    gain: float = GAIN_DEFAULT
    source_shift: float = SOURCE_SHIFT_DEFAULT
    delta_beta: tuple = DELTA_BETA_DEFAULT

    def __post_init__(self):
        if self.kind not in FAULT_KINDS:
            raise UsageError(
                f"unknown fault kind {self.kind!r}; expected one of {FAULT_KINDS}"
            )
        if self.onset < 1:
            raise UsageError("fault onset must be >= 1")


@dataclass(frozen=True)
class ProcessRun:
    """A generated realization: observations plus everything needed to
    re-mix it under a fault (hidden sources, drives, noise, fault seed)."""

    series: np.ndarray        # (n, 5) observations
    sources: np.ndarray       # (n, 3) hidden filtered sources
    drives: np.ndarray        # (n, 3) i.i.d. Gaussian filter inputs
    noise: np.ndarray         # (n, 5) observation noise
    config: SynthConfig
    fault_seed: np.random.SeedSequence = field(repr=False, default=None)

    @property
    def warmup(self) -> int:
        return self.config.lag - 1


class Scenario(NamedTuple):
    train: np.ndarray
    test: np.ndarray
    onset: Optional[int]


def _fir(drives: np.ndarray, beta: np.ndarray) -> np.ndarray:
    n = drives.shape[0]
    cols = [np.convolve(drives[:, i], beta[i])[:n] for i in range(3)]
    return np.column_stack(cols)


def _mix(sources: np.ndarray, noise: np.ndarray, mixing: np.ndarray) -> np.ndarray:
    g = np.column_stack(
        [sources[:, 0] ** 2, sources[:, 1] * sources[:, 2], sources[:, 2] ** 3]
    )
    return g @ mixing.T + noise


def generate(cfg: SynthConfig, n: int) -> ProcessRun:
    """Draw one n-sample realization of the process.

    The series includes the first lag-1 warm-up samples (zero-padded
    filter history); callers that train on the output should drop them.
    """
    if n < cfg.lag:
        raise UsageError(f"need at least lag={cfg.lag} samples, got {n}")
    root = np.random.SeedSequence(cfg.seed)
    proc_seed, fault_seed = root.spawn(2)
    rng = np.random.default_rng(proc_seed)
    drives = rng.normal(cfg.source_mean, cfg.source_std, size=(n, 3))
    noise = rng.normal(0.0, cfg.noise_std, size=(n, 5))
    beta = np.asarray(cfg.beta, dtype=float)
    mixing = np.asarray(cfg.mixing, dtype=float)
    sources = _fir(drives, beta)
    series = _mix(sources, noise, mixing)
    return ProcessRun(
        series=series,
        sources=sources,
        drives=drives,
        noise=noise,
        config=cfg,
        fault_seed=fault_seed,
    )


def inject(run: ProcessRun, spec: FaultSpec) -> np.ndarray:
    """Return the run's series with the fault applied from spec.onset on.

    Sensor faults (bias, gain) act on observed column 1.  Process faults
    re-mix from the hidden sources with the run's own noise, so pre-onset
    samples stay bit-identical to the clean series.
    """
    n = run.series.shape[0]
    if spec.onset > n:
        raise DataError(f"fault onset {spec.onset} beyond series length {n}")
    start = spec.onset - 1
    mixing = np.asarray(run.config.mixing, dtype=float)
    if spec.kind == "sensor_bias":
        # fresh generator per call: injection draws do not depend on how
        # many faults were injected from this run before
        rng = np.random.default_rng(run.fault_seed)
        f = spec.bias_base + rng.uniform(0.0, spec.bias_noise, size=n - start)
        out = run.series.copy()
        out[start:, 0] += f
        return out
    if spec.kind == "gain_degradation":
        out = run.series.copy()
        out[start:, 0] *= spec.gain
        return out
    if spec.kind == "additive_process":
        sources = run.sources.copy()
        sources[start:, 0] += spec.source_shift
        return _mix(sources, run.noise, mixing)
    # dynamic_change: third source refiltered with shifted beta row,
    # spliced in from onset (full drive history, no state reset)
    beta = np.asarray(run.config.beta, dtype=float).copy()
    beta[2] += np.asarray(spec.delta_beta, dtype=float)
    refiltered = _fir(run.drives, beta)
    sources = run.sources.copy()
    sources[start:, 2] = refiltered[start:, 2]
    return _mix(sources, run.noise, mixing)


def scenario(
    cfg: SynthConfig,
    spec: Optional[FaultSpec] = None,
    n_train: int = 10000,
    n_test: int = 4000,
    onset: Optional[int] = None,
) -> Scenario:
    """One continuous realization split into a clean training segment and
    a test segment faulted from a test-local 1-based onset.

    Warm-up samples are generated and dropped, so the training segment
    starts with the filter fully primed.  When spec is None the test
    segment stays clean and onset is ignored.
    """
    if n_train < 1 or n_test < 1:
        raise UsageError("n_train and n_test must be positive")
    if spec is not None:
        onset = spec.onset if onset is None else onset
        if not 1 <= onset < n_test:
            raise UsageError(f"onset must lie in [1, n_test), got {onset}")
    pad = cfg.lag - 1
    run = generate(cfg, pad + n_train + n_test)
    cut = pad + n_train
    if spec is None:
        return Scenario(run.series[pad:cut], run.series[cut:], None)
    global_spec = replace(spec, onset=cut + onset)
    faulted = inject(run, global_spec)
    return Scenario(run.series[pad:cut], faulted[cut:], onset)
