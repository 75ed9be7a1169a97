import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from spdckit import kernels

needs_numba = pytest.mark.skipif(not kernels.HAVE_NUMBA, reason="numba not installed")


def brute_histogram(signal, idler, tau, half_bins):
    counts = np.zeros(2 * half_bins + 1, dtype=np.int64)
    for s in signal:
        for i in idler:
            k = int(np.floor((i - s) / tau + 0.5))
            if -half_bins <= k <= half_bins:
                counts[k + half_bins] += 1
    return counts


def brute_dead_time(times, dead):
    out = []
    for t in times:
        if not out or t - out[-1] >= dead:
            out.append(t)
    return np.array(out, dtype=np.int64)


streams = st.lists(st.integers(0, 20_000), max_size=60).map(lambda v: np.array(sorted(v), dtype=np.int64))


@settings(max_examples=150, deadline=None)
@given(signal=streams, idler=streams, tau=st.integers(1, 500), half_bins=st.integers(0, 20))
def test_numpy_histogram_matches_brute_force(signal, idler, tau, half_bins):
    np.testing.assert_array_equal(
        kernels.delay_histogram_numpy(signal, idler, tau, half_bins), brute_histogram(signal, idler, tau, half_bins)
    )


@needs_numba
@settings(max_examples=150, deadline=None)
@given(signal=streams, idler=streams, tau=st.integers(1, 500), half_bins=st.integers(0, 20))
def test_numba_histogram_matches_numpy(signal, idler, tau, half_bins):
    np.testing.assert_array_equal(
        kernels.delay_histogram_numba(signal, idler, tau, half_bins),
        kernels.delay_histogram_numpy(signal, idler, tau, half_bins),
    )


def test_bin_edges_half_open():
    # bin k covers [k tau - tau/2, k tau + tau/2)
    s = np.array([0], dtype=np.int64)
    i = np.array([-150, -51, -50, 49, 50, 149, 150], dtype=np.int64)
    for fn in [kernels.delay_histogram_numpy] + ([kernels.delay_histogram_numba] if kernels.HAVE_NUMBA else []):
        np.testing.assert_array_equal(fn(s, i, 100, 1), [2, 2, 2])


def test_large_random_streams_agree():
    rng = np.random.default_rng(0)
    s = np.sort(rng.integers(0, 10**10, 200_000))
    i = np.sort(np.concatenate([s[::3] + rng.integers(-800, 800, s[::3].size), rng.integers(0, 10**10, 100_000)]))
    ref = kernels.delay_histogram_numpy(s, i, 100, 100)
    if kernels.HAVE_NUMBA:
        np.testing.assert_array_equal(kernels.delay_histogram_numba(s, i, 100, 100), ref)
    np.testing.assert_array_equal(kernels.delay_histogram(s, i, 100, 100), ref)


@settings(max_examples=150, deadline=None)
@given(times=streams, dead=st.integers(0, 3000))
def test_dead_time_matches_brute_force(times, dead):
    expected = brute_dead_time(times, dead) if dead > 0 else times
    np.testing.assert_array_equal(kernels.nonparalyzable_dead_time_numpy(times, dead), expected)
    if kernels.HAVE_NUMBA:
        np.testing.assert_array_equal(kernels.nonparalyzable_dead_time_numba(times, dead), expected)


def test_backend_reports_choice():
    assert kernels.backend() in ("numba", "numpy")
    assert (kernels.backend() == "numba") == kernels.USE_NUMBA


def test_env_flag_disables_numba():
    import subprocess
    import sys

    code = "from spdckit import kernels; print(kernels.backend())"
    out = subprocess.run([sys.executable, "-c", code], env={"SPDCKIT_DISABLE_NUMBA": "1", "PATH": ""},
                         capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "numpy"
