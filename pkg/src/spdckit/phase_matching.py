"""Collinear type-I (e -> o + o) phase matching and angle-tuning curves.

The pump is extraordinary, signal and idler are ordinary. The signal is
the longer-wavelength photon.
"""

from __future__ import annotations

import enum
import math
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .crystal_optics import (
    OrientationAngles,
    RotationOrder,
    UniaxialCrystal,
    effective_angle,
    extraordinary_index_at_angle,
    ordinary_index,
)
from .numerics import BracketError, bracketed_root

DEFAULT_PUMP_NM = 266.0
SIGNAL_SEARCH_MAX_NM = 1400.0
DEGENERATE_EPS_NM = 0.5
DELTA_K_TOL = 1e-6  # rad/mm
WAVELENGTH_TOL_NM = 1e-9  # tight enough that |delta_k| <= DELTA_K_TOL decides termination
ANGLE_TOL_DEG = 1e-5
THETA_EFF_SEARCH = (30.0, 60.0)


class NoPhaseMatchError(ValueError):
    """Phase matching is impossible at the requested orientation."""

    def __init__(self, message: str, delta_k_lo: float | None = None, delta_k_hi: float | None = None):
        super().__init__(message)
        self.delta_k_lo = delta_k_lo
        self.delta_k_hi = delta_k_hi


class UnreachableTargetError(ValueError):
    """No angle in the search bracket phase-matches the target wavelength."""

    def __init__(self, message: str, achievable: tuple[float, float] | None = None):
        super().__init__(message)
        self.achievable = achievable


class MultipleRootsWarning(RuntimeWarning):
    pass


@dataclass(frozen=True)
class PumpConfig:
    lambda_pump: float = DEFAULT_PUMP_NM
    power_mw: float = 200.0

    def check(self, crystal: UniaxialCrystal) -> None:
        crystal.check_wavelength(self.lambda_pump)
        crystal.check_wavelength(2.0 * self.lambda_pump)


@dataclass(frozen=True)
class PhaseMatchSolution:
    theta_eff: float
    lambda_signal: float
    lambda_idler: float
    delta_k: float
    degenerate: bool = False


def idler_wavelength(lambda_pump, lambda_signal):
    """Idler wavelength from energy conservation ``1/li = 1/lp - 1/ls``."""
    lp = np.asarray(lambda_pump, dtype=float)
    ls = np.asarray(lambda_signal, dtype=float)
    if np.any(ls <= lp):
        raise ValueError(f"signal wavelength must exceed the pump wavelength ({lambda_signal} <= {lambda_pump})")
    li = lp * ls / (ls - lp)
    return float(li) if li.ndim == 0 else li


def phase_mismatch(crystal: UniaxialCrystal, theta_eff, lambda_pump, lambda_signal):
    """Collinear wave-vector mismatch ``k_p - k_s - k_i`` in rad/mm.

    Vectorizes over ``theta_eff`` and ``lambda_signal``.
    """
    lp = float(lambda_pump)
    ls = np.asarray(lambda_signal, dtype=float)
    li = idler_wavelength(lp, ls)
    kp = extraordinary_index_at_angle(crystal, theta_eff, lp) / lp
    ks = ordinary_index(crystal, ls) / ls
    ki = ordinary_index(crystal, li) / li
    dk = 2.0e6 * math.pi * (kp - ks - ki)
    return float(dk) if np.ndim(dk) == 0 else dk


def solve_signal_wavelength(
    crystal: UniaxialCrystal,
    theta_eff: float,
    lambda_pump: float = DEFAULT_PUMP_NM,
    lambda_max: float = SIGNAL_SEARCH_MAX_NM,
    tol_f: float = DELTA_K_TOL,
    tol_x: float = WAVELENGTH_TOL_NM,
    scan_points: int = 64,
) -> PhaseMatchSolution:
    """Phase-matched signal wavelength at effective angle ``theta_eff``.

    The mismatch peaks at degeneracy, so the search runs from ``2 lp`` up
    to ``lambda_max``. A coarse scan locates sign changes; with more than one
    the root nearest degeneracy wins and :class:`MultipleRootsWarning` is
    emitted.

    Raises:
        NoPhaseMatchError: no root on the bracket; carries the mismatch at
            both bracket ends.
    """
    lp = float(lambda_pump)
    lo = 2.0 * lp
    grid = np.linspace(lo, lambda_max, scan_points)
    dk = phase_mismatch(crystal, theta_eff, lp, grid)
    dk_lo = phase_mismatch(crystal, theta_eff, lp, lo)

    def degenerate_solution() -> PhaseMatchSolution:
        return PhaseMatchSolution(float(theta_eff), lo, lo, dk_lo, True)

    if abs(dk_lo) <= tol_f:
        return degenerate_solution()

    sign = np.sign(dk)
    changes = np.nonzero(sign[:-1] * sign[1:] < 0)[0]
    if changes.size == 0:
        raise NoPhaseMatchError(
            f"no phase match at theta_eff={theta_eff:.4f} deg: delta_k={dk[0]:.4g} rad/mm at "
            f"{lo:.1f} nm and {dk[-1]:.4g} rad/mm at {lambda_max:.1f} nm",
            delta_k_lo=float(dk[0]),
            delta_k_hi=float(dk[-1]),
        )
    if changes.size > 1:
        warnings.warn(
            f"{changes.size} phase-match roots at theta_eff={theta_eff:.4f} deg; using the one nearest degeneracy",
            MultipleRootsWarning,
            stacklevel=2,
        )
    i = int(changes[0])
    ls = bracketed_root(
        lambda x: phase_mismatch(crystal, theta_eff, lp, x),
        grid[i], grid[i + 1], tol_x=tol_x, tol_f=tol_f,
    )
    li = idler_wavelength(lp, ls)
    return PhaseMatchSolution(
        theta_eff=float(theta_eff),
        lambda_signal=float(ls),
        lambda_idler=float(li),
        delta_k=phase_mismatch(crystal, theta_eff, lp, ls),
        degenerate=bool(ls - lo < DEGENERATE_EPS_NM),
    )


def solve_phase_match_angle(
    crystal: UniaxialCrystal,
    lambda_signal: float,
    lambda_pump: float = DEFAULT_PUMP_NM,
    bracket: tuple[float, float] = THETA_EFF_SEARCH,
    lambda_max: float = SIGNAL_SEARCH_MAX_NM,
    tol_f: float = DELTA_K_TOL,
    tol_x: float = ANGLE_TOL_DEG,
) -> float:
    """Effective angle that phase-matches ``lambda_signal``.

    The mismatch at fixed wavelengths falls monotonically with the angle
    (negative uniaxial pump), so a single bracketed search suffices.

    Raises:
        UnreachableTargetError: target outside the achievable signal range
            of the angle bracket.
    """
    lp = float(lambda_pump)
    lo_deg, hi_deg = bracket
    if not (2.0 * lp - DEGENERATE_EPS_NM < lambda_signal < lambda_max):
        achievable = _achievable_signal_range(crystal, lp, bracket, lambda_max)
        raise UnreachableTargetError(
            f"signal {lambda_signal:g} nm outside ({2 * lp - DEGENERATE_EPS_NM:g}, {lambda_max:g}) nm; "
            f"achievable {achievable[0]:.2f}-{achievable[1]:.2f} nm",
            achievable=achievable,
        )
    # the mismatch is symmetric under signal/idler exchange, so targets just
    # below 2 lp need no relabelling
    try:
        return bracketed_root(
            lambda t: phase_mismatch(crystal, t, lp, lambda_signal),
            lo_deg, hi_deg, tol_x=tol_x, tol_f=tol_f,
        )
    except BracketError as exc:
        achievable = _achievable_signal_range(crystal, lp, bracket, lambda_max)
        raise UnreachableTargetError(
            f"no effective angle in [{lo_deg:g}, {hi_deg:g}] deg phase-matches {lambda_signal:g} nm; "
            f"achievable {achievable[0]:.2f}-{achievable[1]:.2f} nm",
            achievable=achievable,
        ) from exc


def _achievable_signal_range(crystal, lp, bracket, lambda_max) -> tuple[float, float]:
    lo_deg, hi_deg = bracket
    longest = lambda_max
    try:
        longest = solve_signal_wavelength(crystal, lo_deg, lp, lambda_max).lambda_signal
    except NoPhaseMatchError:
        pass
    return (2.0 * lp, longest)


# -- stage angles -----------------------------------------------------------


class SweptAxis(str, enum.Enum):
    THETA = "theta"
    PHI = "phi"


def internal_tilt(crystal: UniaxialCrystal, external_deg: float, base: OrientationAngles,
                  swept: SweptAxis, lambda_pump: float, iterations: int = 50) -> float:
    """Refract an external stage tilt into the crystal (Snell, entrance face).

    The pump index depends on the internal direction, so the refracted
    angle is found by fixed-point iteration.
    """
    if external_deg == 0.0:
        return 0.0
    s_ext = math.sin(math.radians(external_deg))
    alpha = math.radians(external_deg)
    for _ in range(iterations):
        th_eff = _theta_eff_for_offset(base, swept, math.degrees(alpha))
        n = float(extraordinary_index_at_angle(crystal, th_eff, lambda_pump))
        new = math.asin(s_ext / n)
        if abs(new - alpha) < 1e-15:
            alpha = new
            break
        alpha = new
    return math.degrees(alpha)


def external_tilt(crystal: UniaxialCrystal, internal_deg: float, base: OrientationAngles,
                  swept: SweptAxis, lambda_pump: float) -> float:
    """Inverse of :func:`internal_tilt`."""
    th_eff = _theta_eff_for_offset(base, swept, internal_deg)
    n = float(extraordinary_index_at_angle(crystal, th_eff, lambda_pump))
    return math.degrees(math.asin(n * math.sin(math.radians(internal_deg))))


def _orientation_for_offset(base: OrientationAngles, swept: SweptAxis, offset: float) -> OrientationAngles:
    if SweptAxis(swept) is SweptAxis.THETA:
        return replace(base, theta=base.theta0 + offset, order=RotationOrder.XYZ)
    return replace(base, phi=base.phi0 + offset, order=RotationOrder.YXZ)


def _theta_eff_for_offset(base: OrientationAngles, swept: SweptAxis, offset: float) -> float:
    return effective_angle(_orientation_for_offset(base, swept, offset))


def stage_offset_for_theta_eff(theta_eff: float, base: OrientationAngles, swept: SweptAxis,
                               sign: int = 1) -> float:
    """Internal offset of the swept axis that yields ``theta_eff``.

    ``sign`` selects the sign of the total swept angle. Raises ValueError
    when the fixed axis alone already exceeds ``theta_eff``.
    """
    swept = SweptAxis(swept)
    c = math.cos(math.radians(theta_eff))
    if swept is SweptAxis.THETA:
        fixed, ref = base.phi, base.theta0
    else:
        fixed, ref = base.theta, base.phi0
    ratio = c / math.cos(math.radians(fixed))
    if ratio > 1.0:
        raise ValueError(f"effective angle {theta_eff:g} deg unreachable by sweeping {swept.value}")
    total = math.copysign(math.degrees(math.acos(ratio)), sign)
    return total - ref


def stage_angle_for_signal(crystal: UniaxialCrystal, lambda_signal: float, base: OrientationAngles,
                           swept: SweptAxis = SweptAxis.THETA, lambda_pump: float = DEFAULT_PUMP_NM,
                           refraction_correction: bool = False) -> float:
    """Stage offset (relative to the reference angle) phase-matching ``lambda_signal``."""
    th = solve_phase_match_angle(crystal, lambda_signal, lambda_pump, tol_f=1e-9, tol_x=1e-12)
    internal = stage_offset_for_theta_eff(th, base, swept)
    if refraction_correction:
        return external_tilt(crystal, internal, base, swept, lambda_pump)
    return internal


# -- tuning curves ----------------------------------------------------------


@dataclass(frozen=True)
class TuningPoint:
    stage_angle: float
    theta_eff: float
    lambda_signal: float  # nan for gaps
    lambda_idler: float
    delta_k: float
    degenerate: bool = False

    @property
    def matched(self) -> bool:
        return not math.isnan(self.lambda_signal)


@dataclass(frozen=True)
class TuningCurve:
    swept_parameter: SweptAxis
    points: tuple[TuningPoint, ...]
    refraction_corrected: bool
    lambda_pump: float = DEFAULT_PUMP_NM

    def arrays(self) -> dict[str, np.ndarray]:
        cols = ("stage_angle", "theta_eff", "lambda_signal", "lambda_idler", "delta_k")
        return {c: np.array([getattr(p, c) for p in self.points], dtype=float) for c in cols}

    @property
    def matched_points(self) -> list[TuningPoint]:
        return [p for p in self.points if p.matched]


def _tuning_point(crystal, pump, base, swept, stage, refraction_correction) -> TuningPoint:
    offset = internal_tilt(crystal, stage, base, swept, pump.lambda_pump) if refraction_correction else stage
    th = _theta_eff_for_offset(base, swept, offset)
    try:
        sol = solve_signal_wavelength(crystal, th, pump.lambda_pump)
    except NoPhaseMatchError:
        nan = float("nan")
        return TuningPoint(stage, th, nan, nan, nan, False)
    return TuningPoint(stage, th, sol.lambda_signal, sol.lambda_idler, sol.delta_k, sol.degenerate)


def sweep_tuning_curve(
    crystal: UniaxialCrystal,
    pump: PumpConfig = PumpConfig(),
    base: OrientationAngles = OrientationAngles(),
    swept: SweptAxis | str = SweptAxis.THETA,
    angle_range: tuple[float, float] = (-10.0, 2.0),
    steps: int = 121,
    refraction_correction: bool = False,
    workers: int = 1,
) -> TuningCurve:
    """Phase-matched wavelengths along a stage sweep.

    Stage angles are offsets of the swept axis from its reference value;
    the other axis keeps its offset from ``base``. Orientations without a
    phase match become gap points.
    """
    swept = SweptAxis(swept)
    start, stop = map(float, angle_range)
    if steps < 1 or (steps < 2 and start != stop):
        raise ValueError("a sweep needs at least 2 steps (1 when start == stop)")
    if math.isnan(start) or math.isnan(stop):
        raise ValueError("sweep range must be finite")
    pump.check(crystal)
    stages = [start] if start == stop else list(np.linspace(start, stop, steps))
    if len(set(stages)) != len(stages):
        raise ValueError("sweep range is empty")

    def work(stage):
        return _tuning_point(crystal, pump, base, swept, float(stage), refraction_correction)

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            points = tuple(pool.map(work, stages))
    else:
        points = tuple(work(s) for s in stages)
    return TuningCurve(swept, points, refraction_correction, pump.lambda_pump)


@dataclass(frozen=True)
class TuningRate:
    rate: float  # deg/nm
    angle_span: float
    wavelength_span: float
    pointwise: np.ndarray  # finite-difference |d angle / d lambda|


def tuning_rate(curve: TuningCurve, branch: str = "signal") -> TuningRate:
    """Stage-angle span divided by the wavelength span of one branch."""
    if branch not in ("signal", "idler"):
        raise ValueError("branch must be 'signal' or 'idler'")
    pts = curve.matched_points
    if len(pts) < 2:
        raise ValueError("tuning rate needs at least 2 phase-matched points")
    ang = np.array([p.stage_angle for p in pts])
    lam = np.array([p.lambda_signal if branch == "signal" else p.lambda_idler for p in pts])
    a_span = float(ang.max() - ang.min())
    l_span = float(lam.max() - lam.min())
    with np.errstate(divide="ignore", invalid="ignore"):
        pointwise = np.abs(np.diff(ang) / np.diff(lam))
    return TuningRate(a_span / l_span, a_span, l_span, pointwise)
