"""Persistence: FBPM coefficient snapshots, trajectory CSVs, atomic JSON.

FBPM layout (little endian)::

    b"FBPM" | u32 version | u32 n | u32 N | f64 L | N^n x (f64 re, f64 im)

Coefficients are stored in ascending wavenumber order (k = -N/2 .. N/2-1 on
each axis), row-major.

The trajectory CSV is in long form, one row per (t, j) with the block norm
and the p it was computed with; FB norm columns repeat the per-time value.
``series.csv`` carries the per-time scalars once per row.
"""

from __future__ import annotations

import csv
import json
import math
import os
import re
import struct
import tempfile
from pathlib import Path

import numpy as np

from ..norms import TrajectoryRecord
from ..spectral import GridSpec, SpectralField

__all__ = [
    "FBPM_MAGIC",
    "FBPM_VERSION",
    "FormatError",
    "fmt",
    "write_fbpm",
    "read_fbpm",
    "write_trajectory_csv",
    "read_trajectory_csv",
    "write_series_csv",
    "write_json_atomic",
    "write_text_atomic",
    "parse_fb_label",
]

FBPM_MAGIC = b"FBPM"
FBPM_VERSION = 1
_HEADER = struct.Struct("<4sIIId")


class FormatError(ValueError):
    """Structured parse failure: file, line (if any) and reason."""

    def __init__(self, path, reason: str, line: int | None = None):
        self.path = str(path)
        self.line = line
        self.reason = reason
        where = f"{path}:{line}" if line is not None else str(path)
        super().__init__(f"{where}: {reason}")


def fmt(x) -> str:
    """17 significant digits, enough to round-trip a double."""
    x = float(x)
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return "%.17g" % x


# -- FBPM ---------------------------------------------------------------------

def write_fbpm(path, U: SpectralField) -> None:
    grid = U.grid
    axes = tuple(range(grid.n))
    ordered = np.fft.fftshift(U.coeffs, axes=axes)
    pairs = np.empty(ordered.shape + (2,), dtype="<f8")
    pairs[..., 0] = ordered.real
    pairs[..., 1] = ordered.imag
    data = _HEADER.pack(FBPM_MAGIC, FBPM_VERSION, grid.n, grid.N, float(grid.L)) + pairs.tobytes(order="C")
    _write_atomic(Path(path), data)


def read_fbpm(path) -> SpectralField:
    path = Path(path)
    raw = path.read_bytes()
    if len(raw) < _HEADER.size:
        raise FormatError(path, f"truncated header ({len(raw)} bytes)")
    magic, version, n, N, L = _HEADER.unpack_from(raw)
    if magic != FBPM_MAGIC:
        raise FormatError(path, f"bad magic {magic!r}")
    if version != FBPM_VERSION:
        raise FormatError(path, f"unsupported version {version}")
    try:
        grid = GridSpec(n, N, L)
    except ValueError as exc:
        raise FormatError(path, f"invalid grid in header: {exc}") from None
    expected = _HEADER.size + 16 * N**n
    if len(raw) != expected:
        raise FormatError(path, f"expected {expected} bytes, found {len(raw)}")
    pairs = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).reshape(grid.shape + (2,))
    ordered = pairs[..., 0] + 1j * pairs[..., 1]
    return SpectralField(grid, np.fft.ifftshift(ordered, axes=tuple(range(n))))


# -- CSV ----------------------------------------------------------------------

_FB_LABEL = re.compile(r"^fb_norm\[beta=([^;\]]+);p=([^;\]]+);q=([^;\]]+)\]$")


def parse_fb_label(label: str) -> tuple[float, float, float] | None:
    m = _FB_LABEL.match(label)
    if not m:
        return None
    return tuple(float(x) for x in m.groups())


def write_trajectory_csv(path, rec: TrajectoryRecord) -> None:
    labels = list(rec.fb_norms)
    lines = [",".join(["t", "j", "block_norm", "block_p", *labels])]
    p = fmt(rec.p)
    for i, t in enumerate(rec.times):
        fb = [fmt(rec.fb_norms[lab][i]) for lab in labels]
        for k, j in enumerate(rec.js):
            lines.append(",".join([fmt(t), str(j), fmt(rec.block_norms[i, k]), p, *fb]))
    _write_atomic(Path(path), ("\n".join(lines) + "\n").encode())


def write_series_csv(path, rec: TrajectoryRecord) -> None:
    labels = list(rec.fb_norms)
    header = ["t", *labels]
    if rec.blowup_integral is not None:
        header.append("blowup_integral")
    if rec.mean_mode is not None:
        header += ["mean_re", "mean_im"]
    lines = [",".join(header)]
    for i, t in enumerate(rec.times):
        row = [fmt(t), *(fmt(rec.fb_norms[lab][i]) for lab in labels)]
        if rec.blowup_integral is not None:
            row.append(fmt(rec.blowup_integral[i]))
        if rec.mean_mode is not None:
            row += [fmt(rec.mean_mode[i].real), fmt(rec.mean_mode[i].imag)]
        lines.append(",".join(row))
    _write_atomic(Path(path), ("\n".join(lines) + "\n").encode())


def read_trajectory_csv(path) -> TrajectoryRecord:
    """Inverse of write_trajectory_csv; raises FormatError on any defect."""
    path = Path(path)
    try:
        text = path.read_text()
    except FileNotFoundError:
        raise FormatError(path, "file not found") from None
    if text and not text.endswith("\n"):
        raise FormatError(path, "missing final newline (file truncated?)", text.count("\n") + 1)
    reader = csv.reader(text.splitlines())
    try:
        header = next(reader)
    except StopIteration:
        raise FormatError(path, "empty file", 1) from None
    if header[:4] != ["t", "j", "block_norm", "block_p"]:
        raise FormatError(path, f"unexpected header {header[:4]}", 1)
    labels = header[4:]
    for lab in labels:
        if parse_fb_label(lab) is None:
            raise FormatError(path, f"unrecognized column {lab!r}", 1)

    times: list[float] = []
    js: list[int] = []
    rows: dict[float, dict[int, float]] = {}
    fb: dict[float, list[float]] = {}
    p_value = None
    for lineno, row in enumerate(reader, start=2):
        if len(row) != len(header):
            raise FormatError(path, f"expected {len(header)} fields, found {len(row)}", lineno)
        try:
            t, j, b, p = float(row[0]), int(row[1]), float(row[2]), float(row[3])
            extra = [float(x) for x in row[4:]]
        except ValueError as exc:
            raise FormatError(path, f"bad value ({exc})", lineno) from None
        if p_value is None:
            p_value = p
        elif p != p_value:
            raise FormatError(path, f"mixed block_p values {p_value} and {p}", lineno)
        if t not in rows:
            if times and t <= times[-1]:
                raise FormatError(path, f"time {t} is not increasing", lineno)
            times.append(t)
            rows[t] = {}
            fb[t] = extra
        if j in rows[t]:
            raise FormatError(path, f"duplicate block {j} at t={t}", lineno)
        rows[t][j] = b
        if j not in js:
            js.append(j)
    if not times:
        raise FormatError(path, "no data rows")
    js_sorted = sorted(js)
    for t in times:
        if sorted(rows[t]) != js_sorted:
            raise FormatError(path, f"incomplete block set at t={t} (file truncated?)")
    blocks = np.array([[rows[t][j] for j in js_sorted] for t in times])
    fb_norms = {lab: np.array([fb[t][i] for t in times]) for i, lab in enumerate(labels)}
    return TrajectoryRecord(np.array(times), tuple(js_sorted), p_value, blocks, fb_norms)


# -- atomic writes ---------------------------------------------------------

def _write_atomic(path: Path, data: bytes) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(data)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_text_atomic(path, text: str) -> None:
    _write_atomic(Path(path), text.encode())


def write_json_atomic(path, obj) -> None:
    """Write JSON through a temp file and rename, so readers never see a partial file."""
    _write_atomic(Path(path), (json.dumps(obj, indent=2, sort_keys=True, default=_json_default) + "\n").encode())


def _json_default(o):
    if isinstance(o, Path):
        return str(o)
    if isinstance(o, (np.floating, np.integer)):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    raise TypeError(f"not JSON serializable: {type(o).__name__}")
