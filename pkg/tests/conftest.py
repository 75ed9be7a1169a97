import pytest

from spdckit.crystal_optics import load_crystal
from spdckit.pair_statistics import DetectionConfig, analyze_streams, simulate_timestamp_streams


@pytest.fixture(scope="session")
def bbo():
    return load_crystal("bbo")


@pytest.fixture(scope="session")
def anchored_config():
    # 6.48e6 pairs/s/mW at 1 mW, eta = 5.57e-3 per arm, combined FWHM 1.14 ns, 60 s
    return DetectionConfig(rng_seed=1)


@pytest.fixture(scope="session")
def anchored_streams(anchored_config):
    return simulate_timestamp_streams(anchored_config, workers=2)


@pytest.fixture(scope="session")
def anchored_analysis(anchored_streams):
    return analyze_streams(*anchored_streams)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in RESULTS:
        terminalreporter.write_line(line)
