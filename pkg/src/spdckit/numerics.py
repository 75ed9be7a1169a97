"""Shared numerical kernels: bracketed root finding and least-squares fits."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import least_squares

FWHM_PER_SIGMA = 2.0 * math.sqrt(2.0 * math.log(2.0))


class BracketError(ValueError):
    """The function does not change sign on the supplied bracket."""

    def __init__(self, lo: float, hi: float, f_lo: float, f_hi: float):
        super().__init__(
            f"no sign change on [{lo:g}, {hi:g}]: f(lo)={f_lo:.6g}, f(hi)={f_hi:.6g}"
        )
        self.lo, self.hi, self.f_lo, self.f_hi = lo, hi, f_lo, f_hi


class ConvergenceError(RuntimeError):
    """An iterative method stopped before meeting its tolerance."""

    def __init__(self, message: str, best=None):
        super().__init__(message)
        self.best = best


class DegenerateDesignError(ValueError):
    pass


@dataclass
class FitResult:
    """Outcome of a least-squares fit.

    ``params`` and ``stderr`` are keyed by parameter name. ``extra`` holds
    derived quantities (e.g. ``fwhm`` for the Gaussian fit).
    """

    params: dict[str, float]
    stderr: dict[str, float]
    rss: float
    r_squared: float
    converged: bool = True
    iterations: int = 0
    extra: dict[str, float] = field(default_factory=dict)

    def __getitem__(self, name: str) -> float:
        return self.params[name]


def bracketed_root(
    f: Callable[[float], float],
    lo: float,
    hi: float,
    tol_x: float = 1e-10,
    tol_f: float = 0.0,
    max_iter: int = 200,
) -> float:
    """Find a root of ``f`` on ``[lo, hi]`` with Brent's method.

    Every evaluation point lies inside the initial bracket. Iteration stops
    as soon as ``|f(x)| <= tol_f`` or the bracket has shrunk to ``tol_x``.

    Raises:
        BracketError: ``f(lo)`` and ``f(hi)`` have the same sign.
        ConvergenceError: ``max_iter`` exhausted; ``best`` holds the
            current estimate.
    """
    a, b = float(lo), float(hi)
    fa, fb = float(f(a)), float(f(b))
    if math.isnan(fa) or math.isnan(fb):
        raise ValueError("function returned NaN at a bracket endpoint")
    if fa == 0.0 or abs(fa) <= tol_f:
        return a
    if fb == 0.0 or abs(fb) <= tol_f:
        return b
    if (fa > 0) == (fb > 0):
        raise BracketError(a, b, fa, fb)

    # b is the best estimate, a the previous one, c the contrapoint
    c, fc = a, fa
    d = e = b - a
    for _ in range(max_iter):
        if (fb > 0) == (fc > 0):
            c, fc = a, fa
            d = e = b - a
        if abs(fc) < abs(fb):
            a, b, c = b, c, b
            fa, fb, fc = fb, fc, fb
        half = 0.5 * (c - b)
        # |c - b| <= tol_x / 2 (plus rounding) on return
        tol1 = 2.0 * np.finfo(float).eps * abs(b) + 0.25 * tol_x
        if abs(half) <= tol1 or fb == 0.0 or abs(fb) <= tol_f:
            return b
        if abs(e) >= tol1 and abs(fa) > abs(fb):
            s = fb / fa
            if a == c:
                p = 2.0 * half * s
                q = 1.0 - s
            else:
                q = fa / fc
                r = fb / fc
                p = s * (2.0 * half * q * (q - r) - (b - a) * (r - 1.0))
                q = (q - 1.0) * (r - 1.0) * (s - 1.0)
            if p > 0:
                q = -q
            else:
                p = -p
            if 2.0 * p < min(3.0 * half * q - abs(tol1 * q), abs(e * q)):
                e, d = d, p / q
            else:
                d = e = half
        else:
            d = e = half
        a, fa = b, fb
        if abs(d) > tol1:
            b += d
        else:
            b += math.copysign(tol1, half)
        # guards against rounding pushing b past the contrapoint
        b = min(max(b, min(lo, hi)), max(lo, hi))
        fb = float(f(b))
    raise ConvergenceError(f"bracketed_root: no convergence in {max_iter} iterations", best=b)


def _r_squared(y: np.ndarray, resid: np.ndarray, w: np.ndarray) -> float:
    ybar = np.sum(w * y) / np.sum(w)
    ss_tot = float(np.sum(w * (y - ybar) ** 2))
    ss_res = float(np.sum(w * resid**2))
    if ss_tot == 0.0:
        return 1.0 if ss_res == 0.0 else float("nan")
    return 1.0 - ss_res / ss_tot


def linear_fit(x, y, weights=None) -> FitResult:
    """Least-squares line ``y = slope * x + intercept``.

    Args:
        x, y: Sample coordinates.
        weights: Optional inverse variances. Zero weight (infinite variance)
            drops the point.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    w = np.ones_like(x) if weights is None else np.asarray(weights, dtype=float)
    keep = w > 0
    x, y, w = x[keep], y[keep], w[keep]
    if x.size < 2 or np.ptp(x) == 0.0:
        raise DegenerateDesignError("linear fit needs at least two distinct x values")

    sw = w.sum()
    xm = np.sum(w * x) / sw
    ym = np.sum(w * y) / sw
    sxx = np.sum(w * (x - xm) ** 2)
    slope = float(np.sum(w * (x - xm) * (y - ym)) / sxx)
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    rss = float(np.sum(w * resid**2))
    dof = x.size - 2
    s2 = rss / dof if dof > 0 else 0.0
    # variances scaled by the residual variance (weights taken as relative)
    var_slope = s2 / sxx
    var_intercept = s2 * (1.0 / sw + xm**2 / sxx)
    return FitResult(
        params={"slope": slope, "intercept": intercept},
        stderr={"slope": math.sqrt(var_slope), "intercept": math.sqrt(var_intercept)},
        rss=rss,
        r_squared=_r_squared(y, resid, w),
    )


def power_law_fit(x, y) -> FitResult:
    """Fit ``y = a * x**b`` by a straight line in log-log space.

    R² is reported for the log-space line.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0) or not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        raise ValueError("power-law fit needs strictly positive, finite x and y")
    line = linear_fit(np.log(x), np.log(y))
    a = math.exp(line.params["intercept"])
    return FitResult(
        params={"a": a, "b": line.params["slope"]},
        stderr={"a": a * line.stderr["intercept"], "b": line.stderr["slope"]},
        rss=line.rss,
        r_squared=line.r_squared,
    )


def inverse_fit(x, y) -> FitResult:
    """Fit ``y = a / x``: the power law with the exponent pinned to -1."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if np.any(x <= 0) or np.any(y <= 0):
        raise ValueError("inverse fit needs strictly positive x and y")
    logs = np.log(y) + np.log(x)
    log_a = float(np.mean(logs))
    resid = np.log(y) - (log_a - np.log(x))
    n = x.size
    s2 = float(np.sum(resid**2)) / (n - 1) if n > 1 else 0.0
    a = math.exp(log_a)
    return FitResult(
        params={"a": a, "b": -1.0},
        stderr={"a": a * math.sqrt(s2 / n), "b": 0.0},
        rss=float(np.sum(resid**2)),
        r_squared=_r_squared(np.log(y), resid, np.ones(n)),
    )


def gaussian_moments(centers, counts, floor: float = 0.0, level: float = 0.2) -> dict[str, float]:
    """Amplitude, center and sigma from moments of the bins above ``level`` x peak.

    The cut keeps background noise far from the peak out of the moments.
    """
    x = np.asarray(centers, dtype=float)
    yc = np.asarray(counts, dtype=float) - floor
    top = float(yc.max()) if yc.size else 0.0
    if top <= 0:
        raise ValueError("no positive area above the floor")
    w = np.where(yc >= level * top, yc, 0.0)
    total = w.sum()
    mean = float(np.sum(w * x) / total)
    var = float(np.sum(w * (x - mean) ** 2) / total)
    if var > 0:
        sigma = math.sqrt(var)
    else:
        sigma = float(np.min(np.diff(np.sort(x)))) if x.size > 1 else 1.0
    return {"amplitude": top, "center": mean, "sigma": sigma}


def gaussian_fit(centers, counts, floor: float = 0.0, sigma=None, max_nfev: int = 2000) -> FitResult:
    """Nonlinear least-squares Gaussian ``A exp(-(x-c)^2 / 2s^2)`` above ``floor``.

    Args:
        centers: Bin centers.
        counts: Bin contents (the floor is subtracted here).
        floor: Constant background per bin.
        sigma: Optional per-bin standard deviations for weighting.

    Raises:
        ValueError: fewer than five bins or no positive area.
        ConvergenceError: the optimizer failed; ``best`` holds the moment
            estimates.
    """
    x = np.asarray(centers, dtype=float)
    y = np.asarray(counts, dtype=float) - floor
    if x.size < 5:
        raise ValueError("Gaussian fit needs at least 5 bins")
    moments = gaussian_moments(x, y)
    s = np.ones_like(y) if sigma is None else np.asarray(sigma, dtype=float)

    # fit in coordinates relative to the moment mean; keeps the problem
    # translation-equivariant and well scaled
    x0 = moments["center"]
    scale = moments["sigma"]
    u = (x - x0) / scale

    def resid(p):
        amp, c, w = p
        return (amp * np.exp(-0.5 * ((u - c) / w) ** 2) - y) / s

    def jac(p):
        amp, c, w = p
        z = (u - c) / w
        e = np.exp(-0.5 * z * z)
        return np.column_stack([e, amp * e * z / w, amp * e * z * z / w]) / s[:, None]

    p0 = np.array([moments["amplitude"], 0.0, 1.0])
    try:
        sol = least_squares(resid, p0, jac=jac, method="lm", xtol=1e-15, ftol=1e-15, gtol=1e-15,
                            max_nfev=max_nfev)
    except Exception as exc:  # noqa: BLE001 - surfaced with fallback estimates
        raise ConvergenceError(f"Gaussian fit failed: {exc}", best=moments) from exc
    if not sol.success or not np.all(np.isfinite(sol.x)) or sol.x[2] == 0:
        raise ConvergenceError(f"Gaussian fit did not converge: {sol.message}", best=moments)

    # the cost-based stop leaves parameters accurate to ~sqrt(eps); a few
    # Gauss-Newton steps take them to the stationary point
    p = sol.x.copy()
    for _ in range(4):
        J = jac(p)
        step, *_ = np.linalg.lstsq(J, -resid(p), rcond=None)
        if not np.all(np.isfinite(step)):
            break
        p = p + step
        if np.all(np.abs(step) <= 4 * np.finfo(float).eps * np.maximum(np.abs(p), 1.0)):
            break
    if np.sum(resid(p) ** 2) > np.sum(sol.fun**2) * (1 + 1e-12):
        p = sol.x
    amp, c, w = p
    w = abs(w)

    rss_w = float(np.sum(resid(p) ** 2))
    J = jac(p)
    dof = max(x.size - 3, 1)
    try:
        cov = np.linalg.inv(J.T @ J)
    except np.linalg.LinAlgError:
        cov = np.full((3, 3), np.nan)
    if sigma is None:
        cov = cov * rss_w / dof
    err = np.sqrt(np.abs(np.diag(cov)))

    center = x0 + c * scale
    sig = w * scale
    model = amp * np.exp(-0.5 * ((x - center) / sig) ** 2)
    raw_resid = y - model
    return FitResult(
        params={"amplitude": float(amp), "center": float(center), "sigma": float(sig)},
        stderr={
            "amplitude": float(err[0]),
            "center": float(err[1] * scale),
            "sigma": float(err[2] * scale),
        },
        rss=float(np.sum(raw_resid**2)),
        r_squared=_r_squared(y, raw_resid, np.ones_like(y)),
        converged=True,
        iterations=int(sol.nfev),
        extra={
            "fwhm": float(FWHM_PER_SIGMA * sig),
            "fwhm_err": float(FWHM_PER_SIGMA * err[2] * scale),
            "area": float(amp * sig * math.sqrt(2.0 * math.pi)),
        },
    )
