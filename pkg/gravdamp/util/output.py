"""
Reproducible result files: CSV tables with a checksummed header, and the artifact manifest.
"""

from __future__ import annotations

import os
import typing

import numpy

from gravdamp.util.basic import sha256_file, write_text_file_atomic

NumberFormat = "%.17g"


def format_number(x):
    """
    :param float|int|complex x:
    :rtype: str
    """
    if isinstance(x, (int, numpy.integer)) and not isinstance(x, bool):
        return "%i" % x
    return NumberFormat % float(x)


def csv_text(columns, rows, version, config_sha256, comments=()):
    """
    :param typing.Sequence[str] columns:
    :param typing.Iterable[typing.Sequence[float]]|numpy.ndarray rows:
    :param str version:
    :param str config_sha256:
    :param typing.Sequence[str] comments: extra header lines
    :rtype: str
    """
    lines = ["# gravdamp %s" % version, "# config-sha256 %s" % config_sha256]
    lines += ["# %s" % c for c in comments]
    lines.append("# columns %s" % " ".join(columns))
    lines.append(",".join(columns))
    for row in rows:
        assert len(row) == len(columns), "row has %i entries, expected %i" % (len(row), len(columns))
        lines.append(",".join(format_number(x) for x in row))
    return "\n".join(lines) + "\n"


def write_csv(filename, columns, rows, version, config_sha256, comments=()):
    """
    :param str filename:
    :param typing.Sequence[str] columns:
    :param rows: see :func:`csv_text`
    :param str version:
    :param str config_sha256:
    :param typing.Sequence[str] comments:
    :return: filename
    :rtype: str
    """
    write_text_file_atomic(filename, csv_text(columns, rows, version, config_sha256, comments))
    return filename


def read_csv(filename):
    """
    :param str filename: as written by :func:`write_csv`
    :return: header comments (key -> value), column names, data (n_rows, n_cols)
    :rtype: (dict[str,str], list[str], numpy.ndarray)
    """
    header = {}
    columns = None
    rows = []
    with open(filename) as f:
        for line in f:
            line = line.strip()
            if not line:
                continue
            if line.startswith("#"):
                key, _, value = line[1:].strip().partition(" ")
                header[key] = value
                continue
            if columns is None:
                columns = line.split(",")
                continue
            rows.append([float(x) for x in line.split(",")])
    assert columns is not None, "%r: no column line" % filename
    data = numpy.array(rows, dtype=float).reshape(len(rows), len(columns))
    return header, columns, data


def write_manifest(output_dir, filenames, name="manifest.txt"):
    """
    One line per artifact: sha256, size in bytes, path relative to the output dir.

    :param str output_dir:
    :param typing.Iterable[str] filenames:
    :param str name:
    :return: filename of the manifest
    :rtype: str
    """
    lines = []
    for filename in sorted(set(filenames)):
        rel = os.path.relpath(filename, output_dir)
        lines.append("%s %i %s" % (sha256_file(filename), os.path.getsize(filename), rel))
    manifest = os.path.join(output_dir, name)
    write_text_file_atomic(manifest, "\n".join(lines) + "\n")
    return manifest
