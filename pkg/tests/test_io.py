import numpy as np
import pytest

from spdckit import io
from spdckit.pair_statistics import DetectionConfig, analyze_streams, simulate_timestamp_streams
from spdckit.phase_matching import sweep_tuning_curve


def test_tuning_csv_roundtrip(tmp_path, bbo):
    curve = sweep_tuning_curve(bbo, angle_range=(-2, 8), steps=11)
    path = io.write_tuning_csv(curve, tmp_path / "t.csv")
    lines = path.read_text().splitlines()
    assert lines[0] == "stage_angle_deg,theta_eff_deg,signal_nm,idler_nm,delta_k_rad_per_mm,degenerate"
    assert lines[1].split(",")[0] == "-2.0000"
    assert len(lines[1].split(",")[2].split(".")[1]) == 2
    gap = [ln for ln in lines[1:] if ln.split(",")[2] == ""]
    assert gap, "sweep past degeneracy should produce gap rows"
    data = io.read_tuning_csv(path)
    a = curve.arrays()
    np.testing.assert_allclose(data["signal_nm"], a["lambda_signal"], atol=0.005, equal_nan=True)


@pytest.mark.parametrize("delim", [",", "\t"])
def test_timestamp_roundtrip(tmp_path, delim):
    t = np.array([0, 5, 5, 10**13], dtype=np.int64)
    p = io.write_timestamps(1, t, tmp_path / "x.csv", delim)
    out = io.read_timestamps(p)
    np.testing.assert_array_equal(out[1], t)
    assert out[0].size == 0


def test_header_only_file(tmp_path):
    p = io.write_timestamps(0, np.empty(0, np.int64), tmp_path / "e.csv")
    out = io.read_timestamps(p)
    assert out[0].size == 0 and out[1].size == 0


@pytest.mark.parametrize(
    "body, line",
    [("0,5\n0,x\n", 3), ("0,5\n0,3\n", 3), ("0,1\n1,2\n7,3\n", 4), ("0,1\n0,2,3\n", 3), ("0,4\n1,-2\n", 3)],
)
def test_malformed_lines_named(tmp_path, body, line):
    p = tmp_path / "bad.csv"
    p.write_text("channel,time_ps\n" + body)
    with pytest.raises(io.FileFormatError) as info:
        io.read_timestamps(p)
    assert info.value.line == line
    assert f":{line}:" in str(info.value)


def test_bad_header(tmp_path):
    p = tmp_path / "h.csv"
    p.write_text("time,channel\n1,0\n")
    with pytest.raises(io.FileFormatError):
        io.read_timestamps(p)


def test_histogram_csv_and_manifest(tmp_path):
    s, i = simulate_timestamp_streams(DetectionConfig(duration=2.0, rng_seed=2))
    res = analyze_streams(s, i)
    p = io.write_histogram_csv(res.histogram, tmp_path / "h.csv")
    assert p.read_text().splitlines()[0] == "delay_ps,counts,counts_corrected"
    data = io.read_histogram_csv(p)
    np.testing.assert_array_equal(data["counts"], res.histogram.counts)
    m = io.write_manifest(tmp_path / "m.json", "analyze", {"tau": 100}, ["analyze"], None, 2, [p])
    d = io.read_manifest(m)
    assert set(d) == {"command", "parameters", "argv", "crystal_sha256", "rng_seed", "tool_version", "outputs"}
    assert d["outputs"][0]["sha256"] == io.sha256_file(p)
