"""Matrix CSV and report serialization.

Matrices travel as plain comma-separated values with '.' decimals, no row
names, and an optional single header row that is auto-detected on read.
Floats are written with 17 significant digits so a write/read round trip is
exact. Reports are JSON with sorted keys, which keeps byte-identical output
for identical inputs.
"""

from __future__ import annotations

import csv
import json

import numpy as np


def read_matrix_csv(path, transpose=False):
    """Read a numeric matrix; raises ValueError naming the offending cell."""
    rows = []
    header_skipped = False
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        for row_index, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            values = []
            bad_col = None
            for col_index, cell in enumerate(row, start=1):
                try:
                    values.append(float(cell))
                except ValueError:
                    bad_col = col_index
                    break
            if bad_col is not None:
                if row_index == 1 and not header_skipped:
                    header_skipped = True  # treat the first row as a header
                    continue
                raise ValueError(
                    f"{path}: non-numeric cell at row {row_index}, column {bad_col}: "
                    f"{row[bad_col - 1]!r}"
                )
            rows.append(values)
    if not rows:
        raise ValueError(f"{path}: no numeric data")
    width = len(rows[0])
    for values in rows:
        if len(values) != width:
            raise ValueError(
                f"{path}: ragged rows ({len(values)} columns where {width} expected)"
            )
    out = np.array(rows, dtype=np.float64)
    return out.T.copy() if transpose else out


def write_matrix_csv(path, matrix):
    """Write a matrix with full float64 precision (17 significant digits)."""
    a = np.asarray(matrix, dtype=np.float64)
    with open(path, "w", newline="") as fh:
        for row in a:
            fh.write(",".join(format(v, ".17g") for v in row))
            fh.write("\n")


def write_report_json(path, report):
    """Serialize a report object (anything with to_dict) deterministically."""
    payload = report.to_dict() if hasattr(report, "to_dict") else report
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_points_csv(path, report):
    """Flat per-grid-point table for plotting (one row per (p, n) point)."""
    points = [pt.to_dict() for pt in report.points]
    fields = [
        "p", "n",
        "max_norm_error_mean", "max_norm_error_sd",
        "operator_norm_error_mean", "operator_norm_error_sd",
        "frobenius_norm_error_mean", "frobenius_norm_error_sd",
        "residual_term_mean", "zero_fraction_mean", "seed",
    ]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(fields)
        for pt in points:
            writer.writerow([format(pt[f], ".17g") if isinstance(pt[f], float) else pt[f]
                             for f in fields])


def write_identification_csv(path, report):
    """Two-column table (p, max_norm_error) for the recovery sweep."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "max_norm_error"])
        for p, err in zip(report.grid, report.errors):
            writer.writerow([p, format(err, ".17g")])
