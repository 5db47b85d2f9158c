"""CSV readers and writers for datasets, dendrograms, cuts and classifications.

Floats are written with ``repr`` so every value round-trips exactly.
"""
from __future__ import annotations

import csv
import io
import math
from pathlib import Path

import numpy as np

from .datagen import Dataset
from .errors import DatasetFormatError

SUBJECT_COL = "subject_id"
GROUP_COL = "group"


def fmt(value):
    """Shortest round-trip text for a number."""
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    value = float(value)
    if math.isnan(value):
        return "nan"
    return repr(value)


def write_rows(path_or_file, header, rows, comment=None):
    """Write a CSV with an optional leading ``# comment`` line.

    ``path_or_file`` may be a path, an open text file, or None for a string
    return value.
    """
    buf = io.StringIO() if path_or_file is None else None
    own = isinstance(path_or_file, (str, Path))
    fh = open(path_or_file, "w", newline="", encoding="utf-8") if own else (buf or path_or_file)
    try:
        if comment is not None:
            fh.write(f"# {comment}\n")
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    finally:
        if own:
            fh.close()
    return buf.getvalue() if buf is not None else None


def dataset_rows(dataset):
    header = [SUBJECT_COL]
    if dataset.true_labels is not None:
        header.append(GROUP_COL)
    header += list(dataset.variable_names)
    rows = []
    for s in range(dataset.num_subjects):
        row = [s + 1]
        if dataset.true_labels is not None:
            row.append(int(dataset.true_labels[s]))
        row += [fmt(v) for v in dataset.observations[s]]
        rows.append(row)
    return header, rows


def write_dataset(dataset, path_or_file=None):
    header, rows = dataset_rows(dataset)
    return write_rows(path_or_file, header, rows)


def read_dataset(path_or_file):
    """Read a dataset CSV.

    ``subject_id`` must be the first column; a ``group`` column (values 1/2)
    is optional. Every other column is a numeric variable.
    """
    if isinstance(path_or_file, (str, Path)):
        with open(path_or_file, newline="", encoding="utf-8") as fh:
            return _parse_dataset(fh, str(path_or_file))
    return _parse_dataset(path_or_file, "<input>")


def _parse_dataset(fh, source):
    reader = csv.reader(line for line in fh if not line.startswith("#"))
    try:
        header = next(reader)
    except StopIteration:
        raise DatasetFormatError(f"{source}: empty file") from None
    header = [h.strip() for h in header]
    if not header or header[0] != SUBJECT_COL:
        raise DatasetFormatError(f"{source}: first column must be '{SUBJECT_COL}'")
    has_group = len(header) > 1 and header[1] == GROUP_COL
    first_var = 2 if has_group else 1
    names = header[first_var:]
    if not names:
        raise DatasetFormatError(f"{source}: no variable columns")
    if len(set(names)) != len(names):
        raise DatasetFormatError(f"{source}: duplicate variable column names")

    values, groups = [], []
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise DatasetFormatError(f"{source}: line {lineno} has {len(row)} fields, expected {len(header)}")
        try:
            values.append([float(c) for c in row[first_var:]])
        except ValueError as exc:
            raise DatasetFormatError(f"{source}: line {lineno}: non-numeric value ({exc})") from None
        if has_group:
            g = row[1].strip()
            if g not in ("1", "2"):
                raise DatasetFormatError(f"{source}: line {lineno}: group must be 1 or 2, got {g!r}")
            groups.append(int(g))
    if not values:
        raise DatasetFormatError(f"{source}: no data rows")
    x = np.array(values)
    if not np.all(np.isfinite(x)):
        raise DatasetFormatError(f"{source}: non-finite values present")
    return Dataset(x, np.array(groups) if has_group else None, names)


def write_dendrogram(tree, path_or_file=None):
    rows = [(t, m.left_id, m.right_id, m.height, m.size) for t, m in enumerate(tree.merges, start=1)]
    return write_rows(path_or_file, ["merge_index", "left_id", "right_id", "height", "size"], rows)


def write_cut(cut, variable_names, path_or_file=None):
    rows = [(name, int(c)) for name, c in zip(variable_names, cut.assignment)]
    return write_rows(path_or_file, ["variable_name", "cluster_index"], rows)


def write_classification(classification, true_labels=None, path_or_file=None):
    labels = classification.predicted_labels
    if true_labels is None:
        header = [SUBJECT_COL, "predicted_group"]
        rows = [(s + 1, int(p)) for s, p in enumerate(labels)]
        comment = None
    else:
        header = [SUBJECT_COL, "true_group", "predicted_group"]
        rows = [(s + 1, int(t), int(p)) for s, (t, p) in enumerate(zip(true_labels, labels))]
        comment = (
            f"congruence_count={classification.congruence_count} "
            f"congruence_fraction={fmt(classification.congruence_fraction)}"
        )
    return write_rows(path_or_file, header, rows, comment=comment)
