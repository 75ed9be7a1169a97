"""Monte Carlo photon arrival streams for a pair source with lossy, noisy detectors."""

from __future__ import annotations

import enum
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .. import kernels
from .rates import DetectionConfig

PS_PER_S = 1_000_000_000_000
MAX_EVENTS = 1e9
SEGMENT_S = 1.0


class Channel(enum.IntEnum):
    SIGNAL = 0
    IDLER = 1


class ResourceLimitError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TimestampStream:
    channel: Channel
    times: np.ndarray  # sorted int64 ps
    duration: float  # s

    def __post_init__(self):
        t = np.asarray(self.times, dtype=np.int64)
        object.__setattr__(self, "times", t)
        object.__setattr__(self, "channel", Channel(self.channel))
        if t.size and np.any(np.diff(t) < 0):
            raise ValueError("timestamps must be non-decreasing")

    def __len__(self) -> int:
        return int(self.times.size)

    @property
    def rate(self) -> float:
        return self.times.size / self.duration


def expected_simulated_events(config: DetectionConfig) -> float:
    """Mean number of detector events the simulation will draw."""
    per_s = (config.pair_rate * (config.eta_signal + config.eta_idler)
             + config.dark_rate_signal + config.dark_rate_idler)
    return per_s * config.duration


def _segment_rng(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=int(seed), spawn_key=(int(index),)))


def _simulate_segment(config: DetectionConfig, index: int, start_ps: int, length_ps: int):
    rng = _segment_rng(config.rng_seed, index)
    r = config.pair_rate
    e1, e2 = config.eta_signal, config.eta_idler
    length_s = length_ps / PS_PER_S

    # thinning splits the pair process into independent Poisson processes:
    # both photons detected, signal only, idler only
    n_both = rng.poisson(r * e1 * e2 * length_s)
    n_sig = rng.poisson(r * e1 * (1.0 - e2) * length_s)
    n_idl = rng.poisson(r * (1.0 - e1) * e2 * length_s)
    n_d1 = rng.poisson(config.dark_rate_signal * length_s)
    n_d2 = rng.poisson(config.dark_rate_idler * length_s)

    both = start_ps + rng.random(n_both) * length_ps
    sig_only = start_ps + rng.random(n_sig) * length_ps
    idl_only = start_ps + rng.random(n_idl) * length_ps
    dark1 = start_ps + rng.random(n_d1) * length_ps
    dark2 = start_ps + rng.random(n_d2) * length_ps

    s_photons = np.concatenate([both, sig_only])
    i_photons = np.concatenate([both, idl_only]) + config.idler_delay
    if config.jitter_sigma_signal > 0:
        s_photons = s_photons + rng.normal(0.0, config.jitter_sigma_signal, s_photons.size)
    if config.jitter_sigma_idler > 0:
        i_photons = i_photons + rng.normal(0.0, config.jitter_sigma_idler, i_photons.size)

    sig = np.rint(np.concatenate([s_photons, dark1])).astype(np.int64)
    idl = np.rint(np.concatenate([i_photons, dark2])).astype(np.int64)
    return sig, idl


def _finish(parts: list[np.ndarray], duration_ps: int, dead_time: float) -> np.ndarray:
    t = np.concatenate(parts) if parts else np.empty(0, dtype=np.int64)
    t = t[(t >= 0) & (t <= duration_ps)]
    t = np.sort(t, kind="stable")
    if dead_time > 0:
        t = kernels.nonparalyzable_dead_time(t, int(round(dead_time)))
    return t


def simulate_timestamp_streams(config: DetectionConfig, workers: int = 1,
                               segment_s: float = SEGMENT_S) -> tuple[TimestampStream, TimestampStream]:
    """Draw signal and idler arrival streams for ``config``.

    The acquisition is cut into fixed segments, each with its own sub-seed
    derived from ``(rng_seed, segment index)``; ``workers`` only changes how
    segments are scheduled, never the result.

    Raises:
        ResourceLimitError: more than 1e9 events expected.
    """
    expected = expected_simulated_events(config)
    if expected > MAX_EVENTS:
        raise ResourceLimitError(
            f"about {expected:.3g} events expected (limit {MAX_EVENTS:.0e}); use a shorter duration"
        )
    duration_ps = int(round(config.duration * PS_PER_S))
    seg_ps = int(round(segment_s * PS_PER_S))
    n_seg = max(1, math.ceil(duration_ps / seg_ps))
    bounds = [(k, k * seg_ps, min(seg_ps, duration_ps - k * seg_ps)) for k in range(n_seg)]

    def work(b):
        return _simulate_segment(config, *b)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(work, bounds))
    else:
        results = [work(b) for b in bounds]

    sig = _finish([r[0] for r in results], duration_ps, config.dead_time)
    idl = _finish([r[1] for r in results], duration_ps, config.dead_time)
    return (
        TimestampStream(Channel.SIGNAL, sig, config.duration),
        TimestampStream(Channel.IDLER, idl, config.duration),
    )
