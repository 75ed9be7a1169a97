"""Readers and writers for tuning curves, timestamps, histograms, scans and manifests."""

from __future__ import annotations

import hashlib
import json
import math
import warnings
from pathlib import Path
from typing import Iterable

import numpy as np

from . import __version__

TUNING_HEADER = ("stage_angle_deg", "theta_eff_deg", "signal_nm", "idler_nm", "delta_k_rad_per_mm", "degenerate")
TIMESTAMP_HEADER = ("channel", "time_ps")
HISTOGRAM_HEADER = ("delay_ps", "counts", "counts_corrected")
POWER_SCAN_HEADER = ("power_mw", "n1_cps", "n2_cps", "n12_cps", "car")


class FileFormatError(ValueError):
    """Malformed input file; ``line`` is 1-based when known."""

    def __init__(self, path, line: int | None, message: str):
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {message}")
        self.path, self.line = path, line


def _fmt(v: float, spec: str) -> str:
    if v is None or (isinstance(v, float) and not math.isfinite(v)):
        return "" if v is None or math.isnan(v) else ("inf" if v > 0 else "-inf")
    return format(v, spec)


def write_tuning_csv(curve, path, delimiter: str = ",") -> Path:
    path = Path(path)
    rows = [delimiter.join(TUNING_HEADER)]
    for p in curve.points:
        if p.matched:
            rows.append(delimiter.join([
                f"{p.stage_angle:.4f}", f"{p.theta_eff:.4f}", f"{p.lambda_signal:.2f}",
                f"{p.lambda_idler:.2f}", f"{p.delta_k:.3e}", "1" if p.degenerate else "0",
            ]))
        else:
            rows.append(delimiter.join([f"{p.stage_angle:.4f}", f"{p.theta_eff:.4f}", "", "", "", "0"]))
    path.write_text("\n".join(rows) + "\n")
    return path


def read_tuning_csv(path) -> dict[str, np.ndarray]:
    path = Path(path)
    lines = path.read_text().splitlines()
    delim = "\t" if "\t" in lines[0] else ","
    if tuple(lines[0].split(delim)) != TUNING_HEADER:
        raise FileFormatError(path, 1, f"expected header {','.join(TUNING_HEADER)}")
    cols: dict[str, list[float]] = {h: [] for h in TUNING_HEADER}
    for n, line in enumerate(lines[1:], start=2):
        fields = line.split(delim)
        if len(fields) != len(TUNING_HEADER):
            raise FileFormatError(path, n, f"expected {len(TUNING_HEADER)} fields")
        for h, f in zip(TUNING_HEADER, fields):
            cols[h].append(float(f) if f else float("nan"))
    return {h: np.array(v) for h, v in cols.items()}


# -- timestamps --------------------------------------------------------------


def write_timestamps(channel: int, times: np.ndarray, path, delimiter: str = ",") -> Path:
    path = Path(path)
    prefix = f"{int(channel)}{delimiter}"
    body = "\n".join(prefix + s for s in map(str, np.asarray(times, dtype=np.int64).tolist()))
    with open(path, "w", newline="\n") as fh:
        fh.write(delimiter.join(TIMESTAMP_HEADER) + "\n")
        if body:
            fh.write(body + "\n")
    return path


def _locate_bad_line(path: Path, delim: str) -> tuple[int, str]:
    with open(path) as fh:
        next(fh)
        for n, line in enumerate(fh, start=2):
            s = line.strip()
            if not s:
                continue
            parts = s.split(delim)
            if len(parts) != 2:
                return n, f"expected 2 fields, got {len(parts)}"
            try:
                ch, t = int(parts[0]), int(parts[1])
            except ValueError:
                return n, f"non-integer field in {s!r}"
            if ch not in (0, 1):
                return n, f"channel must be 0 or 1, got {ch}"
            if t < 0:
                return n, f"negative timestamp {t}"
    return 0, "unparseable content"


def read_timestamps(path) -> dict[int, np.ndarray]:
    """Load a ``channel,time_ps`` file into ``{channel: sorted int64 times}``.

    Raises:
        FileFormatError: bad header, malformed line, or times decreasing
            within a channel (the offending line is named).
    """
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().rstrip("\r\n")
    delim = "\t" if "\t" in header else ","
    if tuple(header.split(delim)) != TIMESTAMP_HEADER:
        raise FileFormatError(path, 1, f"expected header {','.join(TIMESTAMP_HEADER)}, got {header!r}")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UserWarning)  # header-only file
            data = np.loadtxt(path, delimiter=delim, skiprows=1, dtype=np.int64, ndmin=2)
    except ValueError:
        line, msg = _locate_bad_line(path, delim)
        raise FileFormatError(path, line or None, msg) from None
    if data.size == 0:
        return {0: np.empty(0, np.int64), 1: np.empty(0, np.int64)}
    if data.shape[1] != 2:
        raise FileFormatError(path, None, "expected 2 columns")
    bad = np.nonzero(~np.isin(data[:, 0], (0, 1)) | (data[:, 1] < 0))[0]
    if bad.size:
        line, msg = _locate_bad_line(path, delim)
        raise FileFormatError(path, line, msg)
    out = {}
    for ch in (0, 1):
        rows = np.nonzero(data[:, 0] == ch)[0]
        t = data[rows, 1]
        dec = np.nonzero(np.diff(t) < 0)[0]
        if dec.size:
            # +2: header line and 1-based numbering
            raise FileFormatError(path, int(rows[dec[0] + 1]) + 2, f"channel {ch} timestamps not sorted")
        out[ch] = t
    return out


# -- histogram / scan ----------------------------------------------------------


def write_histogram_csv(hist, path, delimiter: str = ",") -> Path:
    path = Path(path)
    corrected = hist.corrected if hist.corrected is not None else hist.counts - hist.accidental_floor
    rows = [delimiter.join(HISTOGRAM_HEADER)]
    rows += [f"{d}{delimiter}{c}{delimiter}{cc:.4f}" for d, c, cc in zip(hist.delays.tolist(), hist.counts.tolist(), corrected.tolist())]
    path.write_text("\n".join(rows) + "\n")
    return path


def read_histogram_csv(path) -> dict[str, np.ndarray]:
    path = Path(path)
    with open(path) as fh:
        header = fh.readline().strip()
    delim = "\t" if "\t" in header else ","
    data = np.loadtxt(path, delimiter=delim, skiprows=1, ndmin=2)
    return {h: data[:, i] for i, h in enumerate(HISTOGRAM_HEADER)}


def write_power_scan_csv(result, path, delimiter: str = ",") -> Path:
    path = Path(path)
    rows = [delimiter.join(POWER_SCAN_HEADER)]
    for p in result.points:
        rows.append(delimiter.join([
            f"{p.pump_power:g}", _fmt(p.n1, ".6g"), _fmt(p.n2, ".6g"), _fmt(p.n12, ".6g"), _fmt(p.car, ".6g"),
        ]))
    path.write_text("\n".join(rows) + "\n")
    return path


# -- manifest ------------------------------------------------------------------


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def write_manifest(path, command: str, params: dict, argv: list[str], crystal_sha256: str | None,
                   rng_seed: int | None, outputs: Iterable[Path]) -> Path:
    """Record what produced a set of output files (JSON)."""
    path = Path(path)
    outputs = [Path(o) for o in outputs]
    manifest = {
        "command": command,
        "parameters": params,
        "argv": argv,
        "crystal_sha256": crystal_sha256,
        "rng_seed": rng_seed,
        "tool_version": __version__,
        "outputs": [{"file": o.name, "sha256": sha256_file(o)} for o in outputs],
    }
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def read_manifest(path) -> dict:
    return json.loads(Path(path).read_text())
