"""
Storing named arrays in HDF5 files.
Like the dataset writers, we write to a temp file first and move it over the destination at the end,
so a crashed run never leaves a half written file behind.
"""

from __future__ import annotations

import os
import typing

import h5py
import numpy

from gravdamp.util.basic import maybe_make_dirs


def save_arrays(filename, arrays, attrs=None):
    """
    :param str filename:
    :param dict[str,numpy.ndarray] arrays:
    :param dict[str]|None attrs: scalars or strings, stored as file attributes
    """
    if os.path.dirname(filename):
        maybe_make_dirs(os.path.dirname(filename))
    tmp_filename = filename + ".new_tmp"
    with h5py.File(tmp_filename, "w") as f:
        for key, value in arrays.items():
            f.create_dataset(key, data=numpy.asarray(value))
        for key, value in (attrs or {}).items():
            f.attrs[key] = value
    os.replace(tmp_filename, filename)


def load_arrays(filename):
    """
    :param str filename:
    :return: arrays, attrs
    :rtype: (dict[str,numpy.ndarray], dict[str])
    """
    assert os.path.exists(filename), "HDF file not found: %r" % filename
    with h5py.File(filename, "r") as f:
        arrays = {key: f[key][...] for key in f.keys()}  # type: typing.Dict[str, numpy.ndarray]
        attrs = {}
        for key, value in f.attrs.items():
            if isinstance(value, bytes):
                value = value.decode("utf8")
            elif isinstance(value, numpy.generic):
                value = value.item()
            attrs[key] = value
    return arrays, attrs
