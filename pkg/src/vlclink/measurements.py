"""Readers for measurement CSV files.

Calibration: ``amplitude_mV,amp_err_mV,per,per_err``
Scan:        ``phi_deg,amplitude_mV,amp_err_mV``

Lines starting with ``#`` are comments.
"""

from __future__ import annotations

import csv
from pathlib import Path

from .errors import DomainError, ParseError
from .fitting import CalibrationSample, ScanSample

CALIBRATION_COLUMNS = ("amplitude_mV", "amp_err_mV", "per", "per_err")
SCAN_COLUMNS = ("phi_deg", "amplitude_mV", "amp_err_mV")


def _read(path, columns):
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.DictReader(line for line in fh if not line.lstrip().startswith("#"))
        header = [h.strip() for h in (reader.fieldnames or [])]
        for col in columns:
            if col not in header:
                raise ParseError(f"{path}: missing column {col!r}")
        reader.fieldnames = header
        rows = []
        for lineno, row in enumerate(reader, start=2):
            values = []
            for col in columns:
                raw = (row.get(col) or "").strip()
                try:
                    values.append(float(raw))
                except ValueError:
                    raise ParseError(f"{path}: row {lineno}, column {col!r}: "
                                     f"cannot parse {raw!r} as a number") from None
            rows.append((lineno, values))
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return rows


def read_calibration_csv(path) -> list[CalibrationSample]:
    out = []
    for lineno, (amp, amp_err, per, per_err) in _read(path, CALIBRATION_COLUMNS):
        try:
            out.append(CalibrationSample(amp, amp_err, per, per_err))
        except DomainError as exc:
            raise ParseError(f"{path}: row {lineno}: {exc}") from None
    return out


def read_scan_csv(path) -> list[ScanSample]:
    out = []
    for lineno, (phi, amp, err) in _read(path, SCAN_COLUMNS):
        try:
            out.append(ScanSample(phi, amp, err))
        except DomainError as exc:
            raise ParseError(f"{path}: row {lineno}: {exc}") from None
    return out


def write_rows(fh, header_comment, columns, rows):
    """Write a commented, headed CSV table; floats are written losslessly."""
    fh.write(header_comment + "\n")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(v) for v in row])


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, float):
        return repr(v)  # shortest string that round-trips exactly
    return str(v)
