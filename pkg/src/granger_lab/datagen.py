"""Synthetic trivariate series for driver and indirect topologies.

Backbone recurrences (AR coefficient 0.3 in all presets):

    x_t = U(-2, 2)                      [+ N(0, alpha) intrinsic]
    y_t = c*y_{t-1} + x_{t-1}           [+ N(0, beta)  intrinsic]
    z_t = c*z_{t-1} + x_{t-2}           [+ N(0, gamma) intrinsic]   driver
    z_t = c*z_{t-1} + y_{t-1}           [+ N(0, gamma) intrinsic]   indirect

With extrinsic noise the backbone is generated noise free and the three
noise terms are added afterwards, so they are visible to the observer but
not to the system's own dynamics.

All three modes consume random draws in the same order (uniforms, then one
standard-normal block per series), so samples with different noise settings
but the same seed share the same underlying realization.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from functools import lru_cache

import numpy as np
from scipy.signal import lfilter

from .core import TimeSeries, TopologyLabel, TopologyKind


class NoiseKind(str, Enum):
    FIXED_SIGMA = "fixed"
    INTRINSIC_SNR = "intrinsic"
    EXTRINSIC_SNR = "extrinsic"


class GenerationError(Exception):
    pass


#: Noise standard deviations of the criterion-comparison experiments.
BASELINE_SIGMAS = (0.0, 0.1, 0.5)

#: Post-burn-in length of the noise-free calibration run used to estimate
#: signal variances for SNR conversion.
CALIBRATION_LENGTH = 100_000
CALIBRATION_SEED = 744_003_917

MAGNITUDE_BOUND = 1e12
DEFAULT_BURN_IN = 100


@dataclass(frozen=True)
class NoiseConfig:
    """Noise standard deviations for X, Y and Z."""

    alpha: float
    beta: float
    gamma: float

    def __post_init__(self) -> None:
        for v in (self.alpha, self.beta, self.gamma):
            if not (math.isfinite(v) and v >= 0.0):
                raise ValueError("noise standard deviations must be finite and >= 0")


@dataclass(frozen=True)
class GeneratorConfig:
    topology: TopologyKind = TopologyKind.DRIVER
    length: int = 300
    ar_coefficient: float = 0.3
    noise_kind: NoiseKind = NoiseKind.FIXED_SIGMA
    sigmas_or_snrs: tuple[float, float, float] = BASELINE_SIGMAS
    burn_in: int = DEFAULT_BURN_IN
    seed: int = 0

    def __post_init__(self) -> None:
        if self.topology not in (TopologyKind.DRIVER, TopologyKind.INDIRECT):
            raise ValueError("topology must be driver or indirect")
        if self.length <= 2:
            raise ValueError("length must exceed the backbone's maximum lag (2)")
        if abs(self.ar_coefficient) >= 1.0:
            raise ValueError("|ar_coefficient| must be < 1 for stationarity")
        if self.burn_in < 0:
            raise ValueError("burn_in must be >= 0")
        object.__setattr__(self, "sigmas_or_snrs", tuple(float(v) for v in self.sigmas_or_snrs))


@dataclass(frozen=True)
class TrivariateSample:
    x: TimeSeries
    y: TimeSeries
    z: TimeSeries
    truth: TopologyLabel

    def __post_init__(self) -> None:
        if not (len(self.x) == len(self.y) == len(self.z)):
            raise ValueError("all three series must have equal length")

    def as_dict(self) -> dict[str, np.ndarray]:
        return {"x": self.x.values, "y": self.y.values, "z": self.z.values}


def snr_to_sigma(snr_db: float, signal_variance: float) -> float:
    """Noise std giving the requested SNR (dB) against ``signal_variance``."""
    if not signal_variance > 0.0:
        raise ValueError("signal variance must be positive")
    if not math.isfinite(snr_db):
        raise ValueError("snr_db must be finite")
    return math.sqrt(signal_variance * 10.0 ** (-snr_db / 10.0))


def _shift(values: np.ndarray, k: int) -> np.ndarray:
    """values_{t-k} with zeros for t < k."""
    out = np.zeros_like(values)
    out[k:] = values[:-k]
    return out


def _ar_filter(driving: np.ndarray, coeff: float) -> np.ndarray:
    """s_t = coeff * s_{t-1} + driving_t, started from zero."""
    return lfilter([1.0], [1.0, -coeff], driving)


def _raw_draws(config: GeneratorConfig):
    total = config.burn_in + config.length
    rng = np.random.default_rng(np.random.SeedSequence(config.seed))
    u = rng.uniform(-2.0, 2.0, total)
    nx = rng.standard_normal(total)
    ny = rng.standard_normal(total)
    nz = rng.standard_normal(total)
    return u, nx, ny, nz


def _backbone(u: np.ndarray, ex: np.ndarray, ey: np.ndarray, ez: np.ndarray,
              coeff: float, topology: TopologyKind):
    """Run the recurrences with the given additive innovation terms."""
    x = u + ex
    y = _ar_filter(_shift(x, 1) + ey, coeff)
    if topology is TopologyKind.DRIVER:
        z = _ar_filter(_shift(x, 2) + ez, coeff)
    else:
        z = _ar_filter(_shift(y, 1) + ez, coeff)
    return x, y, z


def _finalize(config: GeneratorConfig, x: np.ndarray, y: np.ndarray,
              z: np.ndarray) -> TrivariateSample:
    b = config.burn_in
    x, y, z = x[b:], y[b:], z[b:]
    for arr in (x, y, z):
        if not np.all(np.isfinite(arr)) or np.max(np.abs(arr)) > MAGNITUDE_BOUND:
            raise GenerationError("generated values exceeded the magnitude bound")
    truth = (TopologyLabel.driver() if config.topology is TopologyKind.DRIVER
             else TopologyLabel.indirect())
    return TrivariateSample(x=TimeSeries(x), y=TimeSeries(y), z=TimeSeries(z), truth=truth)


@lru_cache(maxsize=32)
def _calibration_variances(topology: TopologyKind, ar_coefficient: float,
                           burn_in: int = DEFAULT_BURN_IN) -> tuple[float, float, float]:
    """Empirical noise-free signal variances of (X, Y, Z) for one backbone."""
    cfg = GeneratorConfig(topology=topology, length=CALIBRATION_LENGTH,
                          ar_coefficient=ar_coefficient, burn_in=burn_in,
                          seed=CALIBRATION_SEED)
    u, nx, ny, nz = _raw_draws(cfg)
    zero = np.zeros_like(u)
    x, y, z = _backbone(u, zero, zero, zero, cfg.ar_coefficient, topology)
    b = cfg.burn_in
    return (float(np.var(x[b:])), float(np.var(y[b:])), float(np.var(z[b:])))


def estimate_signal_variance(config: GeneratorConfig, series_id: str) -> float:
    """Noise-free variance of one series, from a fixed-seed calibration run."""
    idx = {"x": 0, "y": 1, "z": 2}[series_id]
    return _calibration_variances(config.topology, config.ar_coefficient)[idx]


def resolve_sigmas(config: GeneratorConfig) -> NoiseConfig:
    """Turn the config's sigma-or-SNR triple into noise standard deviations."""
    if config.noise_kind is NoiseKind.FIXED_SIGMA:
        return NoiseConfig(*config.sigmas_or_snrs)
    variances = _calibration_variances(config.topology, config.ar_coefficient)
    sigmas = tuple(snr_to_sigma(snr, var)
                   for snr, var in zip(config.sigmas_or_snrs, variances))
    return NoiseConfig(*sigmas)


def generate(config: GeneratorConfig) -> TrivariateSample:
    """Generate one trivariate sample according to the config's noise mode."""
    noise = resolve_sigmas(config)
    u, nx, ny, nz = _raw_draws(config)
    if config.noise_kind is NoiseKind.EXTRINSIC_SNR:
        zero = np.zeros_like(u)
        x, y, z = _backbone(u, zero, zero, zero, config.ar_coefficient, config.topology)
        x = x + noise.alpha * nx
        y = y + noise.beta * ny
        z = z + noise.gamma * nz
    else:
        x, y, z = _backbone(u, noise.alpha * nx, noise.beta * ny, noise.gamma * nz,
                            config.ar_coefficient, config.topology)
    return _finalize(config, x, y, z)


def generate_fixed(config: GeneratorConfig) -> TrivariateSample:
    if config.noise_kind is not NoiseKind.FIXED_SIGMA:
        raise ValueError("generate_fixed requires noise_kind=FIXED_SIGMA")
    return generate(config)


def generate_intrinsic(config: GeneratorConfig) -> TrivariateSample:
    if config.noise_kind is not NoiseKind.INTRINSIC_SNR:
        raise ValueError("generate_intrinsic requires noise_kind=INTRINSIC_SNR")
    return generate(config)


def generate_extrinsic(config: GeneratorConfig) -> TrivariateSample:
    if config.noise_kind is not NoiseKind.EXTRINSIC_SNR:
        raise ValueError("generate_extrinsic requires noise_kind=EXTRINSIC_SNR")
    return generate(config)


def extrinsic_backbone(config: GeneratorConfig) -> TrivariateSample:
    """The noise-free series underlying an extrinsic-noise sample."""
    clean = replace(config, noise_kind=NoiseKind.FIXED_SIGMA,
                    sigmas_or_snrs=(0.0, 0.0, 0.0))
    return generate(clean)
