"""Pump-power scans: simulate and analyze each power, then fit the trends."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from ..numerics import FitResult, inverse_fit, linear_fit, power_law_fit
from .analysis import analyze_streams
from .rates import DEFAULT_TAU_PS, DetectionConfig
from .simulation import simulate_timestamp_streams

NAN = float("nan")
SCAN_WINDOW_PS = 50_000


@dataclass(frozen=True)
class PowerPoint:
    pump_power: float
    n1: float
    n2: float
    n12: float
    car: float
    n1_raw: float = NAN
    n2_raw: float = NAN
    n12_raw: float = NAN
    car_window: float = NAN
    pair_rate: float = NAN
    error: str | None = None
    flags: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return self.error is None


@dataclass
class PowerScanResult:
    points: list[PowerPoint]
    fits: dict[str, FitResult | None]
    car_power_law: FitResult | None
    car_inverse: FitResult | None
    notes: list[str] = field(default_factory=list)

    @property
    def succeeded(self) -> list[PowerPoint]:
        return [p for p in self.points if p.ok]


def point_seed(seed: int, index: int) -> int:
    return int(np.random.SeedSequence(entropy=int(seed), spawn_key=(1 << 20, int(index))).generate_state(1)[0])


def _run_point(config: DetectionConfig, tau: int, window: int, workers: int) -> PowerPoint:
    sig, idl = simulate_timestamp_streams(config, workers=workers)
    res = analyze_streams(sig, idl, tau, window, config.dark_rate_signal, config.dark_rate_idler)
    return PowerPoint(
        pump_power=config.pump_power, n1=res.n1, n2=res.n2, n12=res.n12, car=res.car,
        n1_raw=res.n1_raw, n2_raw=res.n2_raw, n12_raw=res.n12_raw, car_window=res.car_window,
        pair_rate=res.pair_rate, flags=res.flags,
    )


def power_scan(base: DetectionConfig, powers: Sequence[float], tau: int = DEFAULT_TAU_PS,
               window: int = SCAN_WINDOW_PS, workers: int = 1) -> PowerScanResult:
    """Simulate and analyze ``base`` at each pump power (mW).

    Each point gets its own seed derived from ``base.rng_seed`` and its
    index. Failed points are recorded with their error and left out of the
    fits.
    """
    powers = [float(p) for p in powers]
    if len(powers) < 3 or len(set(powers)) < 3:
        raise ValueError("a power scan needs at least 3 distinct powers")
    if any(b <= a for a, b in zip(powers, powers[1:])):
        raise ValueError("powers must be strictly increasing")

    points = []
    for i, p in enumerate(powers):
        cfg = DetectionConfig(**{**base.__dict__, "pump_power": p, "rng_seed": point_seed(base.rng_seed, i)})
        try:
            points.append(_run_point(cfg, tau, window, workers))
        except Exception as exc:  # noqa: BLE001 - one bad point must not sink the scan
            points.append(PowerPoint(p, NAN, NAN, NAN, NAN, error=f"{type(exc).__name__}: {exc}"))

    notes: list[str] = []
    ok = [pt for pt in points if pt.ok]
    fits: dict[str, FitResult | None] = {}
    for name in ("n1", "n2", "n12"):
        x = [pt.pump_power for pt in ok]
        y = [getattr(pt, name) for pt in ok]
        try:
            fits[name] = linear_fit(x, y) if len(ok) >= 2 else None
        except ValueError as exc:
            fits[name] = None
            notes.append(f"{name} fit failed: {exc}")

    car_ok = [pt for pt in ok if math.isfinite(pt.car) and pt.car > 0]
    undefined = [pt.pump_power for pt in ok if not (math.isfinite(pt.car) and pt.car > 0)]
    if undefined:
        notes.append("CAR undefined at P = " + ", ".join(f"{p:g}" for p in undefined) + " mW")
    car_pl = car_inv = None
    if len(car_ok) >= 3:
        x = [pt.pump_power for pt in car_ok]
        y = [pt.car for pt in car_ok]
        car_pl = power_law_fit(x, y)
        car_inv = inverse_fit(x, y)
    else:
        notes.append("too few points with a defined CAR for the power-law fits")
    return PowerScanResult(points, fits, car_pl, car_inv, notes)


def summary_lines(result: PowerScanResult) -> list[str]:
    out = ["# power-scan fit summary"]
    for name, label in (("n1", "N1"), ("n2", "N2"), ("n12", "N12")):
        f = result.fits.get(name)
        if f is None:
            out.append(f"{label:4s} linear fit: unavailable")
            continue
        out.append(
            f"{label:4s} = ({f['slope']:.6g} +/- {f.stderr['slope']:.3g}) cps/mW * P "
            f"+ ({f['intercept']:.6g} +/- {f.stderr['intercept']:.3g}) cps   R^2 = {f.r_squared:.6f}"
        )
    if result.car_power_law is not None:
        f = result.car_power_law
        out.append(f"CAR  = {f['a']:.6g} * P^({f['b']:.4f} +/- {f.stderr['b']:.4f})   R^2(log) = {f.r_squared:.6f}")
        g = result.car_inverse
        out.append(f"CAR  = {g['a']:.6g} / P   R^2(log) = {g.r_squared:.6f}")
    else:
        out.append("CAR  power-law fit: unavailable")
    failed = [p for p in result.points if not p.ok]
    for p in failed:
        out.append(f"failed point P = {p.pump_power:g} mW: {p.error}")
    out += [f"note: {n}" for n in result.notes]
    return out
