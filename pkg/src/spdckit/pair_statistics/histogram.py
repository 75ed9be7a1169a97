"""Signal-idler delay histograms, accidental floors and coincidence-peak fits."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, replace

import numpy as np

from .. import kernels
from ..numerics import ConvergenceError, gaussian_fit, gaussian_moments
from .rates import DEFAULT_TAU_PS, DEFAULT_WINDOW_PS
from .simulation import TimestampStream

FLOOR_FWHM_MULTIPLE = 5.0
AREA_FWHM_MULTIPLE = 3.0
MIN_PEAK_AREA = 100.0


class PeakFitError(RuntimeError):
    """The coincidence peak could not be fitted; ``estimates`` holds moment values."""

    def __init__(self, message: str, estimates: dict | None = None):
        super().__init__(message)
        self.estimates = estimates or {}


@dataclass(frozen=True)
class PeakFit:
    center: float  # ps
    fwhm: float
    fwhm_error: float
    area: float  # counts under the fitted Gaussian
    sigma: float
    center_error: float = 0.0
    amplitude: float = 0.0


@dataclass(frozen=True, eq=False)
class CoincidenceHistogram:
    """Delay histogram, ``delay = t_idler - t_signal``.

    ``counts`` is always the raw histogram; ``corrected`` is filled in by
    :func:`subtract_accidentals`.
    """

    tau: int
    window: int
    counts: np.ndarray
    integration_time: float
    accidental_floor: float = 0.0
    floor_error: float = 0.0
    floor_bins: int = 0
    peak: PeakFit | None = None
    corrected: np.ndarray | None = None
    corrected_area: float | None = None
    corrected_area_error: float | None = None

    @property
    def delays(self) -> np.ndarray:
        m = self.window // self.tau
        return np.arange(-m, m + 1, dtype=np.int64) * self.tau

    @property
    def nbins(self) -> int:
        return int(self.counts.size)

    def total(self) -> int:
        return int(self.counts.sum())


def _fit_peak(delays, counts, floor) -> PeakFit:
    excess = float(np.sum(counts - floor))
    if excess < MIN_PEAK_AREA:
        est = {}
        try:
            est = gaussian_moments(delays, counts, floor)
        except ValueError:
            pass
        raise PeakFitError(f"peak area {excess:.1f} counts above floor is below {MIN_PEAK_AREA:g}", est)
    sigma = np.sqrt(np.maximum(counts, 1.0))
    try:
        fit = gaussian_fit(delays, counts, floor=floor, sigma=sigma)
    except (ConvergenceError, ValueError) as exc:
        raise PeakFitError(str(exc), getattr(exc, "best", None)) from exc
    return PeakFit(
        center=fit["center"],
        fwhm=fit.extra["fwhm"],
        fwhm_error=fit.extra["fwhm_err"],
        area=fit.extra["area"],
        sigma=fit["sigma"],
        center_error=fit.stderr["center"],
        amplitude=fit["amplitude"],
    )


def _significant(delays, y, floor, peak: PeakFit, window: int) -> bool:
    # a fit to pure background noise must not be mistaken for a peak
    if not (0 < peak.fwhm < window and abs(peak.center) < window):
        return False
    near = np.abs(delays - peak.center) <= AREA_FWHM_MULTIPLE * peak.fwhm
    excess = float(np.sum(y[near] - floor))
    return excess >= 5.0 * math.sqrt(max(float(y[near].sum()), 1.0))


def _estimate_floor(delays: np.ndarray, counts: np.ndarray, window: int, max_iter: int = 6):
    """Iterate fit -> sideband mean until the floor settles.

    Returns ``(floor, floor_error, n_floor_bins, peak)``; ``peak`` is None
    when no peak can be fitted, in which case the floor is the mean of all
    bins.
    """
    y = counts.astype(float)
    outer = np.abs(delays) > 0.6 * window
    floor = float(y[outer].mean()) if outer.any() else float(y.mean())
    peak = None
    side = None
    for _ in range(max_iter):
        try:
            peak = _fit_peak(delays, y, floor)
        except PeakFitError:
            peak = None
            break
        if not _significant(delays, y, floor, peak, window):
            peak = None
            break
        side = np.abs(delays - peak.center) > FLOOR_FWHM_MULTIPLE * peak.fwhm
        if not side.any():
            warnings.warn("window too narrow for a sideband accidental floor", RuntimeWarning, stacklevel=3)
            break
        new = float(y[side].mean())
        if abs(new - floor) <= 1e-9 * max(1.0, abs(floor)):
            floor = new
            break
        floor = new
    if peak is None:
        floor, n = float(y.mean()), int(y.size)
    elif side is not None and side.any():
        n = int(side.sum())
    else:
        n = int(outer.sum()) or int(y.size)
    return floor, math.sqrt(max(floor, 0.0) / n), n, peak


def histogram_delays(signal: TimestampStream, idler: TimestampStream,
                     tau: int = DEFAULT_TAU_PS, window: int = DEFAULT_WINDOW_PS) -> CoincidenceHistogram:
    """Bin all ``idler - signal`` delays within ``+/- window`` into ``tau``-wide bins.

    Bins are centered on multiples of ``tau``, so the outermost bins extend
    ``tau/2`` beyond ``window``. The accidental floor is the mean of bins
    further than 5 FWHM from the fitted peak.
    """
    tau = int(tau)
    window = int(window)
    if tau <= 0:
        raise ValueError("bin width tau must be positive")
    if window <= 0 or window % tau:
        raise ValueError(f"window ({window} ps) must be a positive multiple of tau ({tau} ps)")
    T = float(signal.duration)
    m = window // tau
    if len(signal) == 0 or len(idler) == 0:
        warnings.warn("empty timestamp stream: histogram is empty", RuntimeWarning, stacklevel=2)
        return CoincidenceHistogram(tau, window, np.zeros(2 * m + 1, dtype=np.int64), T)
    counts = kernels.delay_histogram(signal.times, idler.times, tau, m)
    hist = CoincidenceHistogram(tau, window, counts, T)
    floor, floor_err, nfloor, peak = _estimate_floor(hist.delays, counts, window)
    return replace(hist, accidental_floor=floor, floor_error=floor_err, floor_bins=nfloor, peak=peak)


def fit_coincidence_peak(hist: CoincidenceHistogram) -> PeakFit:
    """Gaussian fit of the floor-subtracted histogram.

    Raises:
        PeakFitError: less than 100 counts above the floor, or the fit
            failed; moment estimates are attached.
    """
    return _fit_peak(hist.delays, hist.counts.astype(float), hist.accidental_floor)


def peak_region(hist: CoincidenceHistogram) -> np.ndarray:
    if hist.peak is None:
        return np.ones(hist.nbins, dtype=bool)
    return np.abs(hist.delays - hist.peak.center) <= AREA_FWHM_MULTIPLE * hist.peak.fwhm


def subtract_accidentals(hist: CoincidenceHistogram) -> CoincidenceHistogram:
    """Remove the accidental floor bin by bin (negative bins are kept).

    The corrected peak area sums bins within 3 FWHM of the peak center.
    """
    corrected = hist.counts.astype(float) - hist.accidental_floor
    region = peak_region(hist)
    n = int(region.sum())
    area = float(corrected[region].sum())
    var = float(hist.counts[region].sum()) + (n * hist.floor_error) ** 2
    return replace(hist, corrected=corrected, corrected_area=area, corrected_area_error=math.sqrt(var))


@dataclass(frozen=True)
class WindowCounts:
    true_counts: float
    accidental_counts: float
    width: float  # ps, nbins * tau
    nbins: int


def window_counts(hist: CoincidenceHistogram, n_sigmas: float = 2.0) -> WindowCounts:
    """True and accidental counts in ``peak center +/- n_sigmas * sigma``."""
    if hist.peak is None:
        raise PeakFitError("no fitted peak to define the coincidence window")
    inside = np.abs(hist.delays - hist.peak.center) <= n_sigmas * hist.peak.sigma
    n = int(inside.sum())
    raw = float(hist.counts[inside].sum())
    acc = hist.accidental_floor * n
    return WindowCounts(raw - acc, acc, n * hist.tau, n)
