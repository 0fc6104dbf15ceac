#!/usr/bin/env python3

"""
Lists the arrays and attributes of a gravdamp HDF file
(action chart, mode field, or checkpoint of the linearized flow).
"""

from __future__ import annotations

import sys
import argparse

import numpy

import _setup_gravdamp_env  # noqa
from gravdamp.util.basic import better_repr
from gravdamp.util.hdf import load_arrays


def describe_array(value):
    """
    :param numpy.ndarray value:
    :rtype: str
    """
    if value.size == 0:
        return "shape %r, empty" % (value.shape,)
    if numpy.iscomplexobj(value):
        return "shape %r, complex, max abs %.6g" % (value.shape, float(numpy.max(numpy.abs(value))))
    finite = value[numpy.isfinite(value)] if value.dtype.kind == "f" else value
    if finite.size == 0:
        return "shape %r, %s, no finite entries" % (value.shape, value.dtype)
    return "shape %r, %s, min %.6g, max %.6g" % (value.shape, value.dtype, numpy.min(finite), numpy.max(finite))


def main(argv):
    """
    Main entry.
    """
    parser = argparse.ArgumentParser(description="Dump the content of a gravdamp HDF file")
    parser.add_argument("hdf_filename", type=str)
    parser.add_argument("--key", action="append", default=[], help="print the full array (can be repeated)")
    args = parser.parse_args(argv[1:])
    try:
        arrays, attrs = load_arrays(args.hdf_filename)
        print("%s (kind %s)" % (args.hdf_filename, attrs.get("kind", "unknown")))
        for key in sorted(attrs):
            print("  attr %s: %r" % (key, attrs[key]))
        for key in sorted(arrays):
            print("  %s: %s" % (key, describe_array(arrays[key])))
        for key in args.key:
            assert key in arrays, "no array %r, have %s" % (key, ", ".join(sorted(arrays)))
            print("%s = %s" % (key, better_repr(arrays[key])))
    except BrokenPipeError:
        print("BrokenPipeError", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    import better_exchook

    better_exchook.install()
    main(sys.argv)
