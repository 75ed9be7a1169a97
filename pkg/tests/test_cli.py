import json

import pytest

from spdckit import io
from spdckit.cli import main


def run(capsys, *argv):
    code = main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def test_index(capsys, tmp_path):
    code, out, _ = run(capsys, "index", "--crystal", "bbo", "--lambda", "532", "--output", str(tmp_path))
    assert code == 0
    assert "1.674213" in out and "1.554659" in out
    assert (tmp_path / "index.manifest.json").exists()


def test_index_ordinary_limit(capsys, tmp_path):
    code, out, _ = run(capsys, "index", "--lambda", "266", "--theta-eff", "0", "--output", str(tmp_path))
    assert code == 0 and "ordinary limit" in out


def test_index_out_of_range(capsys, tmp_path):
    code, _, err = run(capsys, "index", "--lambda", "50", "--output", str(tmp_path))
    assert code == 2 and "minimum" in err


def test_bad_flag_is_usage_error(capsys):
    assert main(["index", "--nope"]) == 2


def test_tune_writes_csv_and_plot(capsys, tmp_path):
    code, out, _ = run(capsys, "tune", "--sweep", "theta", "--from", "-6", "--to", "4", "--steps", "21",
                       "--plot", "--output", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "tuning.csv").read_text().splitlines()
    assert len(rows) == 22
    assert (tmp_path / "tuning.svg").read_text().lstrip().startswith("<?xml")
    m = io.read_manifest(tmp_path / "tune.manifest.json")
    assert m["crystal_sha256"] and m["outputs"][0]["file"] == "tuning.csv"


def test_tune_tsv(capsys, tmp_path):
    code, _, _ = run(capsys, "tune", "--steps", "5", "--format", "tsv", "--output", str(tmp_path))
    assert code == 0
    assert "\t" in (tmp_path / "tuning.tsv").read_text().splitlines()[0]


def test_tune_all_gaps_warns(capsys, tmp_path):
    code, _, err = run(capsys, "tune", "--from", "6", "--to", "8", "--steps", "5", "--output", str(tmp_path))
    assert code == 0 and "all gaps" in err
    rows = (tmp_path / "tuning.csv").read_text().splitlines()[1:]
    assert all(r.split(",")[2] == "" for r in rows)


def test_tune_zero_steps(capsys, tmp_path):
    code, _, _ = run(capsys, "tune", "--steps", "0", "--output", str(tmp_path))
    assert code == 2


def test_phi_tune(capsys, tmp_path):
    code, out, _ = run(capsys, "tune", "--sweep", "phi", "--theta-offset", "-2.5", "--from", "-12", "--to", "12",
                       "--steps", "25", "--output", str(tmp_path))
    assert code == 0 and "signal range_nm" in out


def test_solve_operating_point(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--signal", "904", "--output", str(tmp_path))
    assert code == 0
    th = float(out.split()[1])
    assert th == pytest.approx(42.7, abs=0.5)


def test_solve_degenerate_lists_measured_orientation(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--signal", "532", "--output", str(tmp_path))
    assert code == 0
    assert float(out.split()[1]) == pytest.approx(47.6, abs=0.1)
    row = next(ln for ln in out.splitlines() if ln.strip().startswith("10.70"))
    assert float(row.split()[1]) == pytest.approx(46.7, abs=0.05)


def test_solve_idler_target(capsys, tmp_path):
    code, out, _ = run(capsys, "solve", "--idler", "377", "--output", str(tmp_path))
    assert code == 0 and "signal_nm         903" in out


def test_solve_unreachable(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "--signal", "300", "--output", str(tmp_path))
    assert code == 3 and "achievable" in err


def test_simulate_analyze_rerun(capsys, tmp_path):
    out_dir = tmp_path / "a"
    code, _, _ = run(capsys, "simulate", "--seed", "1", "--duration", "4", "--output", str(out_dir))
    assert code == 0
    m = json.loads((out_dir / "simulate.manifest.json").read_text())
    assert m["rng_seed"] == 1 and m["parameters"]["duration"] == 4.0

    code, out, _ = run(capsys, "analyze", str(out_dir / "signal.csv"), str(out_dir / "idler.csv"),
                       "--output", str(out_dir))
    assert code == 0
    assert "integration_time_s    4" in out
    assert (out_dir / "histogram.csv").exists() and (out_dir / "analysis.txt").exists()

    code, _, _ = run(capsys, "rerun", str(out_dir / "simulate.manifest.json"), "--output", str(tmp_path / "b"))
    assert code == 0
    for name in ("signal.csv", "idler.csv"):
        assert (out_dir / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_dark_only_simulation(capsys, tmp_path):
    code, _, _ = run(capsys, "simulate", "--pair-rate", "0", "--dark-signal", "5000", "--dark-idler", "5000",
                     "--duration", "1", "--output", str(tmp_path))
    assert code == 0
    code, out, _ = run(capsys, "analyze", str(tmp_path / "signal.csv"), str(tmp_path / "idler.csv"),
                       "--output", str(tmp_path))
    assert code == 0 and "no coincidence peak" in out


def test_analyze_empty_idler(capsys, tmp_path):
    io.write_timestamps(0, [1, 2, 3], tmp_path / "s.csv")
    io.write_timestamps(1, [], tmp_path / "i.csv")
    code, out, err = run(capsys, "analyze", str(tmp_path / "s.csv"), str(tmp_path / "i.csv"),
                         "--duration", "1", "--output", str(tmp_path))
    assert code == 0 and "empty" in err and "empty histogram" in out


def test_analyze_unsorted_names_line(capsys, tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("channel,time_ps\n0,10\n0,20\n0,15\n")
    code, _, err = run(capsys, "analyze", str(p), "--output", str(tmp_path))
    assert code == 2 and "bad.csv:4" in err


def test_simulate_resource_guard(capsys, tmp_path):
    code, _, err = run(capsys, "simulate", "--eta-signal", "1", "--eta-idler", "1", "--duration", "1000",
                       "--output", str(tmp_path))
    assert code == 2 and "shorter duration" in err


def test_power_scan_single_power(capsys, tmp_path):
    code, _, _ = run(capsys, "power-scan", "--powers", "1", "--output", str(tmp_path))
    assert code == 2


def test_power_scan_zero_efficiency(capsys, tmp_path):
    code, out, _ = run(capsys, "power-scan", "--powers", "1,2,3", "--eta-idler", "0", "--duration", "0.2",
                       "--output", str(tmp_path))
    assert code == 0
    rows = (tmp_path / "power_scan.csv").read_text().splitlines()
    assert rows[0] == "power_mw,n1_cps,n2_cps,n12_cps,car"
    assert all(r.endswith(",") for r in rows[1:])
    assert "CAR undefined" in out
