import os
import sys
import tempfile
import tests.setup_test_env  # noqa
import unittest
import numpy
from nose.tools import assert_equal, assert_raises, assert_true, assert_false
from numpy.testing import assert_array_equal
from gravdamp.util.basic import sha256_file
from gravdamp.util.hdf import save_arrays, load_arrays
from gravdamp.util.output import *
import better_exchook

better_exchook.replace_traceback_format_tb()


def test_format_number():
    assert_equal(format_number(3), "3")
    assert_equal(format_number(numpy.int64(-5)), "-5")
    assert_equal(format_number(1.0), "1")
    assert_equal(format_number(0.1), "0.10000000000000001")
    assert_equal(format_number(numpy.float32(0.5)), "0.5")
    assert_equal(format_number(True), "1")


def test_csv_text():
    text = csv_text(["t", "F"], [[0, 1.5], [1.0, 2.0]], "1.0", "abc", comments=["scenario kepler"])
    assert_equal(
        text.splitlines(),
        ["# gravdamp 1.0", "# config-sha256 abc", "# scenario kepler", "# columns t F", "t,F", "0,1.5", "1,2"],
    )
    assert_true(text.endswith("\n"))
    assert_raises(AssertionError, lambda: csv_text(["t", "F"], [[0.0]], "1.0", "abc"))


def test_write_read_csv():
    data = numpy.array([[0.0, 1.0 / 3.0, -2.5e-17], [1.0, numpy.pi, 1e300]])
    with tempfile.TemporaryDirectory() as tmp_dir:
        filename = os.path.join(tmp_dir, "out", "series.csv")
        assert_equal(write_csv(filename, ["t", "a", "b"], data, "1.0", "abc", comments=["eta 0.01"]), filename)
        assert_false(os.path.exists(filename + ".new_tmp"))
        header, columns, back = read_csv(filename)
    assert_equal(header["gravdamp"], "1.0")
    assert_equal(header["config-sha256"], "abc")
    assert_equal(header["eta"], "0.01")
    assert_equal(columns, ["t", "a", "b"])
    assert_array_equal(back, data)


def test_read_csv_empty_table():
    with tempfile.TemporaryDirectory() as tmp_dir:
        filename = write_csv(os.path.join(tmp_dir, "empty.csv"), ["t", "F"], [], "1.0", "abc")
        header, columns, data = read_csv(filename)
    assert_equal(columns, ["t", "F"])
    assert_equal(data.shape, (0, 2))


def test_write_manifest():
    with tempfile.TemporaryDirectory() as tmp_dir:
        a = os.path.join(tmp_dir, "b.csv")
        b = os.path.join(tmp_dir, "sub", "a.hdf")
        os.makedirs(os.path.dirname(b))
        with open(a, "w") as f:
            f.write("hello\n")
        with open(b, "wb") as f:
            f.write(b"\x00\x01")
        manifest = write_manifest(tmp_dir, [b, a, a])
        assert_equal(manifest, os.path.join(tmp_dir, "manifest.txt"))
        lines = open(manifest).read().splitlines()
        assert_equal(len(lines), 2)
        assert_equal(lines[0], "%s 6 b.csv" % sha256_file(a))
        assert_equal(lines[1], "%s 2 %s" % (sha256_file(b), os.path.join("sub", "a.hdf")))


def test_hdf_save_load():
    arrays = {"radii": numpy.linspace(1.0, 2.0, 5), "force": numpy.arange(6.0).reshape(2, 3) * (1 + 1j)}
    with tempfile.TemporaryDirectory() as tmp_dir:
        filename = os.path.join(tmp_dir, "nested", "run.hdf")
        save_arrays(filename, arrays, attrs={"scenario": "kepler", "eta": 0.01, "n_r": 5})
        assert_false(os.path.exists(filename + ".new_tmp"))
        back, attrs = load_arrays(filename)
    assert_equal(sorted(back.keys()), ["force", "radii"])
    for key, value in arrays.items():
        assert_array_equal(back[key], value)
    assert_equal(attrs, {"scenario": "kepler", "eta": 0.01, "n_r": 5})
    assert_raises(AssertionError, lambda: load_arrays(filename))


if __name__ == "__main__":
    better_exchook.install()
    if len(sys.argv) <= 1:
        for k, v in sorted(globals().items()):
            if k.startswith("test_"):
                print("-" * 40)
                print("Executing: %s" % k)
                try:
                    v()
                except unittest.SkipTest as exc:
                    print("SkipTest:", exc)
                print("-" * 40)
        print("Finished all tests.")
    else:
        assert len(sys.argv) >= 2
        for arg in sys.argv[1:]:
            print("Executing: %s" % arg)
            if arg in globals():
                globals()[arg]()  # assume function and execute
            else:
                eval(arg)  # assume Python code and execute
