import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdckit.crystal_optics import OrientationAngles, WavelengthRangeError, effective_angle
from spdckit.phase_matching import (
    DELTA_K_TOL,
    NoPhaseMatchError,
    PumpConfig,
    SweptAxis,
    UnreachableTargetError,
    external_tilt,
    idler_wavelength,
    internal_tilt,
    phase_mismatch,
    solve_phase_match_angle,
    solve_signal_wavelength,
    stage_angle_for_signal,
    stage_offset_for_theta_eff,
    sweep_tuning_curve,
    tuning_rate,
)

# independent evaluation of the collinear mismatch, coefficients typed in
_O = (2.7359, 0.01878, 0.01822, 0.01354)
_E = (2.3753, 0.01224, 0.01667, 0.01516)


def _n(c, lam_nm):
    l2 = (np.asarray(lam_nm, dtype=float) / 1000) ** 2
    return np.sqrt(c[0] + c[1] / (l2 - c[2]) - c[3] * l2)


def oracle_delta_k(theta_deg, lp, ls):
    ls = np.asarray(ls, dtype=float)
    li = 1 / (1 / lp - 1 / ls)
    t = np.radians(theta_deg)
    ne = (np.sin(t) ** 2 / _n(_E, lp) ** 2 + np.cos(t) ** 2 / _n(_O, lp) ** 2) ** -0.5
    return 2e6 * np.pi * (ne / lp - _n(_O, ls) / ls - _n(_O, li) / li)


def grid_signal(theta_deg, lp=266.0):
    grid = np.arange(2 * lp, 1400.0 + 1e-9, 0.01)
    return grid[np.argmin(np.abs(oracle_delta_k(theta_deg, lp, grid)))]


def test_idler_examples():
    assert idler_wavelength(266, 532) == pytest.approx(532, rel=1e-15)
    assert idler_wavelength(266, 904) == pytest.approx(376.90, abs=0.01)
    assert idler_wavelength(266, 611.20) == pytest.approx(470.97, abs=0.01)


def test_idler_needs_longer_signal():
    with pytest.raises(ValueError):
        idler_wavelength(266, 266)


@settings(max_examples=200, deadline=None)
@given(ls=st.floats(266.5, 3000))
def test_energy_conservation(ls):
    li = idler_wavelength(266.0, ls)
    assert abs((1 / ls + 1 / li) * 266.0 - 1) <= 1e-12


def test_mismatch_matches_oracle(bbo):
    ls = np.linspace(533, 1400, 50)
    np.testing.assert_allclose(phase_mismatch(bbo, 42.7, 266, ls), oracle_delta_k(42.7, 266, ls), rtol=1e-11)


@settings(max_examples=100, deadline=None)
@given(ls=st.floats(535, 1000), theta=st.floats(35, 55))
def test_mismatch_swap_symmetric(bbo, ls, theta):
    li = idler_wavelength(266, ls)
    assert phase_mismatch(bbo, theta, 266, ls) == pytest.approx(phase_mismatch(bbo, theta, 266, li), rel=1e-12, abs=1e-9)


def test_mismatch_out_of_range(bbo):
    with pytest.raises(WavelengthRangeError):
        phase_mismatch(bbo, 42.7, 266, 5000)


@pytest.mark.parametrize("theta", [40.0, 42.7, 45.0, 48.0])
def test_mismatch_monotone_in_signal(bbo, theta):
    dk = phase_mismatch(bbo, theta, 266, np.linspace(532.5, 1400, 5000))
    assert np.all(np.diff(dk) < 0)


def test_degenerate_index_equality(bbo):
    # sin^2 th = (1/no(532)^2 - 1/no(266)^2) / (1/ne(266)^2 - 1/no(266)^2), 30-digit evaluation
    theta = 47.6338728553537
    assert abs(phase_mismatch(bbo, theta, 266, 532)) <= 1e-9


def test_operating_point(bbo):
    sol = solve_signal_wavelength(bbo, 42.7)
    assert 886 <= sol.lambda_signal <= 922
    assert 373 <= sol.lambda_idler <= 381
    assert abs(sol.delta_k) <= DELTA_K_TOL
    assert sol.lambda_signal >= sol.lambda_idler
    assert not sol.degenerate
    assert sol.lambda_signal == pytest.approx(grid_signal(42.7), abs=0.01)


def test_no_phase_match_far_from_degeneracy(bbo):
    with pytest.raises(NoPhaseMatchError) as info:
        solve_signal_wavelength(bbo, 30.0)
    assert info.value.delta_k_lo is not None and info.value.delta_k_hi is not None
    # oracle: no sign change on the grid
    dk = oracle_delta_k(30.0, 266, np.arange(532, 1400, 0.01))
    assert np.all(dk > 0) or np.all(dk < 0)


def test_above_degenerate_angle_has_no_phase_match(bbo):
    with pytest.raises(NoPhaseMatchError):
        solve_signal_wavelength(bbo, 47.7)


def test_degenerate_self_consistency(bbo):
    th = solve_phase_match_angle(bbo, 532)
    sol = solve_signal_wavelength(bbo, th)
    assert sol.degenerate
    assert sol.lambda_signal == pytest.approx(532, abs=0.5)
    assert sol.lambda_idler == pytest.approx(532, abs=0.5)


def test_degenerate_angle(bbo):
    th = solve_phase_match_angle(bbo, 532)
    assert th == pytest.approx(47.6338728553537, abs=1e-4)
    assert abs(effective_angle(OrientationAngles(theta=46.7, phi=10.7)) - th) <= 0.5


def test_operating_angle(bbo):
    assert 42.2 <= solve_phase_match_angle(bbo, 904) <= 43.2


def test_roundtrip_20_targets(bbo):
    for ls in np.random.default_rng(4).uniform(560, 1100, 20):
        th = solve_phase_match_angle(bbo, ls)
        assert solve_signal_wavelength(bbo, th).lambda_signal == pytest.approx(ls, abs=0.01)


@pytest.mark.parametrize("target", [300.0, 531.0, 1500.0])
def test_unreachable_target(bbo, target):
    with pytest.raises(UnreachableTargetError) as info:
        solve_phase_match_angle(bbo, target)
    lo, hi = info.value.achievable
    assert lo == pytest.approx(532) and hi > lo


def test_grid_oracle_random_angles(bbo):
    for th in np.random.default_rng(12).uniform(40, 47.5, 10):
        assert solve_signal_wavelength(bbo, th).lambda_signal == pytest.approx(grid_signal(th), abs=0.05)


def test_monotone_between_operating_point_and_degeneracy(bbo):
    th = np.linspace(42.7, 47.6, 60)
    ls = [solve_signal_wavelength(bbo, t).lambda_signal for t in th]
    assert np.all(np.diff(ls) < 0)


def test_pump_config_check(bbo):
    PumpConfig().check(bbo)
    with pytest.raises(WavelengthRangeError):
        PumpConfig(lambda_pump=200).check(bbo)


# -- stage geometry ----------------------------------------------------------


def test_refraction_roundtrip(bbo):
    base = OrientationAngles()
    for ext in (-8.0, -2.0, 0.0, 3.0, 7.5):
        inner = internal_tilt(bbo, ext, base, SweptAxis.THETA, 266)
        assert abs(inner) <= abs(ext)
        assert external_tilt(bbo, inner, base, SweptAxis.THETA, 266) == pytest.approx(ext, abs=1e-10)


def test_stage_offset_inverts_effective_angle():
    base = OrientationAngles.from_offsets(0.0, 10.7)
    d = stage_offset_for_theta_eff(47.63, base, SweptAxis.THETA)
    assert effective_angle(OrientationAngles(theta=42.7 + d, phi=10.7)) == pytest.approx(47.63, abs=1e-12)
    assert 42.7 + d == pytest.approx(46.7, abs=0.05)


def test_stage_offset_unreachable():
    with pytest.raises(ValueError):
        stage_offset_for_theta_eff(5.0, OrientationAngles.from_offsets(0.0, 10.0), SweptAxis.THETA)


# -- tuning curves -----------------------------------------------------------


def test_theta_sweep_shape(bbo):
    curve = sweep_tuning_curve(bbo, angle_range=(-10, 2), steps=121)
    a = curve.arrays()
    assert np.all(np.diff(a["stage_angle"]) > 0)
    m = np.isfinite(a["lambda_signal"])
    assert m.sum() > 80
    assert a["lambda_signal"][m].max() <= 1400
    # larger mismatch from degeneracy as theta decreases
    assert np.all(np.diff(a["lambda_signal"][m]) < 0)
    assert np.all(np.abs(266 * (1 / a["lambda_signal"][m] + 1 / a["lambda_idler"][m]) - 1) <= 1e-12)


def test_sweep_gaps_are_recorded(bbo):
    curve = sweep_tuning_curve(bbo, angle_range=(0, 8), steps=33)
    gaps = [p for p in curve.points if not p.matched]
    assert gaps and all(p.theta_eff > 47.6 for p in gaps)
    assert len(curve.points) == 33


def test_zero_width_sweep(bbo):
    base = OrientationAngles.from_offsets(1.0, 0.0)
    curve = sweep_tuning_curve(bbo, base=base, angle_range=(1.0, 1.0), steps=1)
    (p,) = curve.points
    assert p.lambda_signal == solve_signal_wavelength(bbo, effective_angle(base)).lambda_signal


def test_zero_steps_rejected(bbo):
    with pytest.raises(ValueError):
        sweep_tuning_curve(bbo, steps=0)
    with pytest.raises(ValueError):
        sweep_tuning_curve(bbo, steps=1, angle_range=(0, 1))


def test_phi_sweep_narrower_than_theta_sweep(bbo):
    base = OrientationAngles.from_offsets(-2.5, 0.0)
    phi = sweep_tuning_curve(bbo, base=base, swept="phi", angle_range=(-12, 12), steps=49)
    theta = sweep_tuning_curve(bbo, angle_range=(-12, 12), steps=49)

    def span(c):
        s = [p.lambda_signal for p in c.matched_points]
        return max(s) - min(s)

    assert span(phi) < span(theta)


def test_parallel_sweep_identical(bbo):
    a = sweep_tuning_curve(bbo, angle_range=(-6, 3), steps=31)
    b = sweep_tuning_curve(bbo, angle_range=(-6, 3), steps=31, workers=4)
    np.testing.assert_array_equal(a.arrays()["lambda_signal"], b.arrays()["lambda_signal"])


def test_tuning_rate_identity(bbo):
    base = OrientationAngles()
    lo = stage_angle_for_signal(bbo, 1108.1, base)
    hi = stage_angle_for_signal(bbo, 611.2, base)
    curve = sweep_tuning_curve(bbo, angle_range=(lo, hi), steps=50)
    rs, ri = tuning_rate(curve, "signal"), tuning_rate(curve, "idler")
    assert rs.wavelength_span == pytest.approx(1108.1 - 611.2, abs=1e-6)
    assert abs((ri.rate / rs.rate) / (rs.wavelength_span / ri.wavelength_span) - 1) <= 1e-12
    assert rs.pointwise.size == 49 and np.all(rs.pointwise > 0)


def test_tuning_rate_needs_two_points(bbo):
    curve = sweep_tuning_curve(bbo, angle_range=(0, 0), steps=1)
    with pytest.raises(ValueError):
        tuning_rate(curve)


def test_multiple_roots_warning_not_raised_on_signal_branch(bbo):
    with warnings.catch_warnings():
        warnings.simplefilter("error")
        for th in np.linspace(38, 47.6, 25):
            solve_signal_wavelength(bbo, th)
