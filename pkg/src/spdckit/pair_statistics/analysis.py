"""From two timestamp streams to singles, coincidence, CAR and pair-rate estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass

from .histogram import (
    CoincidenceHistogram,
    PeakFit,
    histogram_delays,
    peak_region,
    subtract_accidentals,
    window_counts,
)
from .rates import CAR_WINDOW_SIGMAS, DEFAULT_TAU_PS, DEFAULT_WINDOW_PS, car, klyshko_pair_rate
from .simulation import TimestampStream

NAN = float("nan")


@dataclass(frozen=True, eq=False)
class AnalysisResult:
    """Rates are counts/s over ``duration``.

    ``n12`` is the accidental-subtracted coincidence rate in the peak
    region; ``car`` uses the window ``center +/- 2 sigma``. Undefined
    quantities are NaN and named in ``flags``.
    """

    histogram: CoincidenceHistogram
    duration: float
    n1_raw: float
    n2_raw: float
    n1: float
    n2: float
    n12: float
    n12_error: float
    n12_raw: float
    car: float
    car_window: float
    accidentals_in_window: float
    raw_to_floor: float
    pair_rate: float
    pair_rate_error: float
    flags: tuple[str, ...] = ()

    @property
    def peak(self) -> PeakFit | None:
        return self.histogram.peak


def analyze_streams(signal: TimestampStream, idler: TimestampStream, tau: int = DEFAULT_TAU_PS,
                    window: int = DEFAULT_WINDOW_PS, dark_rate_signal: float = 0.0,
                    dark_rate_idler: float = 0.0, n_sigmas: float = CAR_WINDOW_SIGMAS) -> AnalysisResult:
    T = float(signal.duration)
    hist = subtract_accidentals(histogram_delays(signal, idler, tau, window))
    flags: list[str] = []
    n1_raw = len(signal) / T
    n2_raw = len(idler) / T
    n1 = n1_raw - dark_rate_signal
    n2 = n2_raw - dark_rate_idler

    floor_total = hist.accidental_floor * hist.nbins
    raw_to_floor = hist.total() / floor_total if floor_total > 0 else NAN

    if hist.peak is None:
        flags += ["no coincidence peak", "CAR undefined"]
        n12 = n12_err = n12_raw = 0.0
        car_value = acc_rate = car_w = NAN
        if hist.total() == 0:
            flags.append("empty histogram")
    else:
        n12 = hist.corrected_area / T
        n12_err = hist.corrected_area_error / T
        region_raw = hist.corrected_area + hist.accidental_floor * int(peak_region(hist).sum())
        n12_raw = region_raw / T
        win = window_counts(hist, n_sigmas)
        car_w = float(win.width)
        acc_rate = win.accidental_counts / T
        if win.accidental_counts > 0:
            car_value = car(win.true_counts, win.accidental_counts)
        else:
            car_value = math.inf
            flags.append("zero accidentals in window")

    if n12 > 0:
        k = klyshko_pair_rate(n1, n2, n12)
        rel = (n12_err / n12) ** 2
        rel += 1.0 / max(n1_raw * T, 1.0) + 1.0 / max(n2_raw * T, 1.0)
        k_err = abs(k) * math.sqrt(rel)
    else:
        k = k_err = NAN
        flags.append("pair rate undefined (N12 <= 0)")

    return AnalysisResult(
        histogram=hist, duration=T, n1_raw=n1_raw, n2_raw=n2_raw, n1=n1, n2=n2,
        n12=n12, n12_error=n12_err, n12_raw=n12_raw, car=car_value, car_window=car_w,
        accidentals_in_window=acc_rate, raw_to_floor=raw_to_floor, pair_rate=k,
        pair_rate_error=k_err, flags=tuple(flags),
    )


def report_lines(res: AnalysisResult) -> list[str]:
    h = res.histogram
    out = [
        f"integration_time_s    {res.duration:.6g}",
        f"bin_width_ps          {h.tau}",
        f"window_ps             +/-{h.window}",
        f"singles_signal_cps    {res.n1:.6g} (raw {res.n1_raw:.6g})",
        f"singles_idler_cps     {res.n2:.6g} (raw {res.n2_raw:.6g})",
        f"accidental_floor      {h.accidental_floor:.6g} counts/bin ({h.floor_bins} sideband bins)",
    ]
    if res.peak is not None:
        p = res.peak
        out += [
            f"peak_center_ps        {p.center:.2f} +/- {p.center_error:.2f}",
            f"peak_fwhm_ps          {p.fwhm:.2f} +/- {p.fwhm_error:.2f}",
            f"coincidences_cps      {res.n12:.6g} +/- {res.n12_error:.3g} (accidental-subtracted)",
            f"car                   {res.car:.6g} (window {res.car_window:.0f} ps)",
        ]
    out += [
        f"raw_to_floor_ratio    {res.raw_to_floor:.6g}",
        f"pair_rate_cps         {res.pair_rate:.6g} +/- {res.pair_rate_error:.3g}",
    ]
    out += [f"flag                  {f}" for f in res.flags]
    return out
