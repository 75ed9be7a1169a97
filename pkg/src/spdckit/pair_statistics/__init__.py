"""Photon-pair detection statistics: simulation, histograms, CAR and pair rates."""

from .analysis import AnalysisResult, analyze_streams, report_lines
from .histogram import (
    CoincidenceHistogram,
    PeakFit,
    PeakFitError,
    fit_coincidence_peak,
    histogram_delays,
    subtract_accidentals,
    window_counts,
)
from .rates import (
    DetectionConfig,
    EstimatorError,
    ExpectedCounts,
    accidental_rate,
    car,
    expected_car,
    expected_counts,
    jitter_sigma_for_fwhm,
    klyshko_pair_rate,
)
from .scan import PowerPoint, PowerScanResult, power_scan, summary_lines
from .simulation import (
    Channel,
    ResourceLimitError,
    TimestampStream,
    expected_simulated_events,
    simulate_timestamp_streams,
)

__all__ = [
    "AnalysisResult", "analyze_streams", "report_lines",
    "CoincidenceHistogram", "PeakFit", "PeakFitError", "fit_coincidence_peak",
    "histogram_delays", "subtract_accidentals", "window_counts",
    "DetectionConfig", "EstimatorError", "ExpectedCounts", "accidental_rate", "car",
    "expected_car", "expected_counts", "jitter_sigma_for_fwhm", "klyshko_pair_rate",
    "PowerPoint", "PowerScanResult", "power_scan", "summary_lines",
    "Channel", "ResourceLimitError", "TimestampStream", "expected_simulated_events",
    "simulate_timestamp_streams",
]
