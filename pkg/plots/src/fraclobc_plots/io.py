"""Readers for the experiment artifacts published by the solver CLI.

The plots package communicates with the solver exclusively through these
files (CSV series, JSON reports, the manifest); schema violations and
absent inputs surface as typed errors.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path


class MissingInput(Exception):
    """Expected experiment output file is absent."""


class SchemaMismatch(Exception):
    """Input file does not match the published schema."""


MONITOR_COLUMNS = (
    "t", "z", "trace_left", "trace_right", "sup_norm", "lip_estimate", "dt",
)
EIGEN_COLUMNS = (
    "eta", "lambda1", "hopf_c3", "inv_power_integral",
    "holder_ratio", "residual",
)
SNAPSHOT_COLUMNS = ("x", "u")
F_BETA_COLUMNS = ("beta", "f_value")
SWEEP_COLUMNS = ("scale", "z0", "lobc_time", "collapse_time")


def read_csv_columns(path, expected_header, optional=()):
    """Parse a CSV with the exact expected header into column lists of
    floats; cells listed in ``optional`` may be empty (-> None)."""
    path = Path(path)
    if not path.is_file():
        raise MissingInput(str(path))
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise SchemaMismatch(f"{path}: empty file")
        if tuple(header) != tuple(expected_header):
            raise SchemaMismatch(
                f"{path}: header {header} != expected {list(expected_header)}"
            )
        cols = {name: [] for name in expected_header}
        for row in reader:
            if len(row) != len(expected_header):
                raise SchemaMismatch(f"{path}: ragged row {row}")
            for name, cell in zip(expected_header, row):
                if cell == "" and name in optional:
                    cols[name].append(None)
                    continue
                try:
                    cols[name].append(float(cell))
                except ValueError:
                    raise SchemaMismatch(
                        f"{path}: non-numeric cell {cell!r} in column {name}"
                    )
    return cols


def read_monitors(directory, name="monitors.csv"):
    return read_csv_columns(Path(directory) / name, MONITOR_COLUMNS)


def read_eigen_family(directory):
    return read_csv_columns(Path(directory) / "eigen_stability.csv",
                            EIGEN_COLUMNS)


def read_f_beta(directory):
    return read_csv_columns(Path(directory) / "f_beta.csv", F_BETA_COLUMNS)


def read_sweep(directory):
    return read_csv_columns(Path(directory) / "lobc_sweep.csv",
                            SWEEP_COLUMNS,
                            optional=("lobc_time", "collapse_time"))


def read_snapshots(directory):
    """All snapshot_*.csv files, sorted, as (name, columns) pairs."""
    directory = Path(directory)
    paths = sorted(directory.glob("snapshot_*.csv"))
    if not paths:
        raise MissingInput(f"no snapshot_*.csv under {directory}")
    return [(p.stem, read_csv_columns(p, SNAPSHOT_COLUMNS)) for p in paths]


def read_json(directory, name):
    path = Path(directory) / name
    if not path.is_file():
        raise MissingInput(str(path))
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise SchemaMismatch(f"{path}: invalid JSON ({exc})")


def read_manifest(directory):
    return read_json(directory, "manifest.json")


def read_barrier_report(directory):
    data = read_json(directory, "report.json")
    needed = {"s", "p", "alpha", "beta", "lambda", "mu", "delta",
              "c1", "c2", "min_slack", "samples"}
    missing = needed - set(data)
    if missing:
        raise SchemaMismatch(f"report.json lacks fields {sorted(missing)}")
    return data
