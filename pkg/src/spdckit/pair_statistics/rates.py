"""Closed-form detection-rate model and the scalar estimators built on it."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace
from typing import NamedTuple

from ..numerics import FWHM_PER_SIGMA

PAIR_RATE_PER_MW = 6.48e6
# eta^2 * 6.48e6 /s ~ 201 /s coincidences at 1 mW
DEFAULT_ETA = 5.57e-3
PEAK_FWHM_PS = 1140.0
DEFAULT_TAU_PS = 100
DEFAULT_WINDOW_PS = 10_000
DEFAULT_DURATION_S = 60.0
CAR_WINDOW_SIGMAS = 2.0


def jitter_sigma_for_fwhm(fwhm_ps: float) -> float:
    """Per-detector Gaussian sigma giving a combined peak FWHM (equal arms)."""
    return fwhm_ps / FWHM_PER_SIGMA / math.sqrt(2.0)


DEFAULT_JITTER_PS = jitter_sigma_for_fwhm(PEAK_FWHM_PS)


class EstimatorError(ValueError):
    """An estimator is undefined for the given inputs."""


@dataclass(frozen=True)
class DetectionConfig:
    """Source and detector parameters for one acquisition.

    Rates are counts/s, jitters and delays ps, ``duration`` s,
    ``pump_power`` mW. ``dead_time`` (ps) is a non-paralyzable hold-off;
    zero disables it.
    """

    pair_rate_per_mw: float = PAIR_RATE_PER_MW
    pump_power: float = 1.0
    eta_signal: float = DEFAULT_ETA
    eta_idler: float = DEFAULT_ETA
    dark_rate_signal: float = 0.0
    dark_rate_idler: float = 0.0
    jitter_sigma_signal: float = DEFAULT_JITTER_PS
    jitter_sigma_idler: float = DEFAULT_JITTER_PS
    duration: float = DEFAULT_DURATION_S
    rng_seed: int = 0
    dead_time: float = 0.0
    idler_delay: float = 0.0

    def __post_init__(self):
        for name in ("pair_rate_per_mw", "pump_power", "dark_rate_signal", "dark_rate_idler",
                     "jitter_sigma_signal", "jitter_sigma_idler", "dead_time"):
            v = getattr(self, name)
            if not (v >= 0.0 and math.isfinite(v)):
                raise ValueError(f"{name} must be a finite value >= 0, got {v}")
        for name in ("eta_signal", "eta_idler"):
            v = getattr(self, name)
            # zero is allowed so a blocked arm can be simulated
            if not 0.0 <= v <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if not (self.duration > 0 and math.isfinite(self.duration)):
            raise ValueError(f"duration must be > 0, got {self.duration}")
        if int(self.rng_seed) != self.rng_seed or self.rng_seed < 0:
            raise ValueError("rng_seed must be a non-negative integer")

    @property
    def pair_rate(self) -> float:
        return self.pair_rate_per_mw * self.pump_power

    def at_power(self, power_mw: float) -> "DetectionConfig":
        return replace(self, pump_power=power_mw)

    @property
    def combined_jitter_sigma(self) -> float:
        return math.hypot(self.jitter_sigma_signal, self.jitter_sigma_idler)


class ExpectedCounts(NamedTuple):
    n1: float
    n2: float
    n12: float


def expected_counts(config: DetectionConfig) -> ExpectedCounts:
    """Mean singles and true-coincidence rates of the loss model."""
    r = config.pair_rate
    return ExpectedCounts(
        n1=config.eta_signal * r + config.dark_rate_signal,
        n2=config.eta_idler * r + config.dark_rate_idler,
        n12=config.eta_signal * config.eta_idler * r,
    )


def klyshko_pair_rate(n1: float, n2: float, n12: float) -> float:
    """Generated pair rate ``N1 N2 / N12``."""
    if not n12 > 0:
        raise EstimatorError(f"pair-rate estimator undefined for N12 = {n12}")
    return n1 * n2 / n12


def accidental_rate(n1: float, n2: float, tau_ps: float) -> float:
    """Uncorrelated coincidence rate in one window of width ``tau_ps``."""
    if not tau_ps > 0:
        raise ValueError("tau must be positive")
    return n1 * n2 * tau_ps * 1e-12


def car(n12_true: float, accidentals: float) -> float:
    """Coincidence-to-accidental ratio; ``inf`` (with a warning) when no accidentals."""
    if accidentals <= 0:
        warnings.warn("zero accidentals: CAR is unbounded", RuntimeWarning, stacklevel=2)
        return math.inf
    return n12_true / accidentals


def expected_car(config: DetectionConfig, n_sigmas: float = CAR_WINDOW_SIGMAS) -> float:
    """CAR of the closed-form model in a window ``center +/- n_sigmas * sigma``."""
    n1, n2, n12 = expected_counts(config)
    sigma = config.combined_jitter_sigma
    width = 2.0 * n_sigmas * sigma
    inside = math.erf(n_sigmas / math.sqrt(2.0))
    return car(n12 * inside, accidental_rate(n1, n2, width))
