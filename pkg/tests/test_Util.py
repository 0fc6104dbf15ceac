# -*- coding: utf8 -*-
import math
import os
import sys
import tempfile

import tests.setup_test_env  # noqa
from nose.tools import assert_equal, assert_raises, assert_true, assert_false, assert_less
from numpy.testing import assert_allclose, assert_almost_equal
from gravdamp.util.basic import *
from gravdamp.util.numerics import *
import numpy
import unittest

import better_exchook

better_exchook.replace_traceback_format_tb()


def test_hms():
    assert_equal(hms(5), "0:00:05")
    assert_equal(hms(65), "0:01:05")
    assert_equal(hms(65 + 60 * 60), "1:01:05")


def test_hms_fraction():
    assert_equal(hms_fraction(0, decimals=3), "0:00:00.000")
    assert_equal(hms_fraction(5, decimals=3), "0:00:05.000")
    assert_equal(hms_fraction(5.345, decimals=3), "0:00:05.345")
    assert_equal(hms_fraction(65.345, decimals=3), "0:01:05.345")


def test_better_repr_deterministic():
    assert_equal(better_repr({"b": 1, "a": 2.5}), "{'a': 2.5, 'b': 1}")
    assert_equal(better_repr((1,)), "(1,)")
    assert_equal(better_repr(numpy.array([1.0, 2.0])), "[1.0, 2.0]")
    assert_equal(better_repr(float("inf")), "float('inf')")


def test_eval_repr_text():
    d = {"grid": [0.5, 1.5], "params": {"mu": 3.5, "nu": 2.0}, "nan": float("nan"), "name": "x"}
    d2 = eval_repr_text(better_repr(d))
    assert_equal(d2["grid"], [0.5, 1.5])
    assert_equal(d2["params"], {"mu": 3.5, "nu": 2.0})
    assert_true(math.isnan(d2["nan"]))
    assert_equal(d2["name"], "x")


def test_to_bool():
    assert_true(to_bool("1"))
    assert_true(to_bool("yes"))
    assert_false(to_bool("False"))
    assert_false(to_bool(0))
    assert_raises(ValueError, lambda: to_bool("maybe"))


def test_sha256_bytes():
    assert_equal(sha256_bytes(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855")
    assert_equal(sha256_bytes("abc"), sha256_bytes(b"abc"))


def test_write_text_file_atomic():
    with tempfile.TemporaryDirectory() as tmp_dir:
        filename = os.path.join(tmp_dir, "sub", "a.txt")
        write_text_file_atomic(filename, "hello")
        assert_equal(open(filename).read(), "hello\n")
        assert_false(os.path.exists(filename + ".new_tmp"))
        assert_equal(sha256_file(filename), sha256_bytes("hello\n"))


def test_parallel_map_ordered():
    items = list(range(50))
    assert_equal(parallel_map(lambda x: x * x, items, num_threads=4), [x * x for x in items])
    assert_equal(parallel_map(lambda x: x + 1, items, num_threads=1), [x + 1 for x in items])
    assert_equal(parallel_map(lambda x: x, [], num_threads=4), [])


def test_guess_requested_max_num_threads_env():
    old = os.environ.get("GRAVDAMP_NUM_THREADS")
    try:
        os.environ["GRAVDAMP_NUM_THREADS"] = "3"
        assert_equal(guess_requested_max_num_threads(), 3)
    finally:
        if old is None:
            del os.environ["GRAVDAMP_NUM_THREADS"]
        else:
            os.environ["GRAVDAMP_NUM_THREADS"] = old


def test_gauss_legendre_polynomial():
    x, w = gauss_legendre(5, 1.0, 3.0)
    # exact up to degree 9
    assert_almost_equal(numpy.sum(w * x**9), (3.0**10 - 1.0) / 10.0, decimal=8)
    assert_almost_equal(numpy.sum(w), 2.0)


def test_gauss_jacobi_weight():
    x, w = gauss_jacobi(8, 0.5, 0.0)
    # int (1-x)^(1/2) dx over [-1, 1]
    assert_almost_equal(numpy.sum(w), 2.0 ** 1.5 / 1.5, decimal=12)


def test_chebyshev_lobatto():
    x = chebyshev_lobatto(9, 2.0, 5.0)
    assert_equal(x[0], 2.0)
    assert_equal(x[-1], 5.0)
    assert_true(numpy.all(numpy.diff(x) > 0))
    # clustered at the ends
    assert_less(x[1] - x[0], x[5] - x[4])


def test_trapezoid_weights():
    x = numpy.array([0.0, 0.5, 2.0, 3.0])
    w = trapezoid_weights(x)
    assert_almost_equal(numpy.sum(w), 3.0)
    assert_almost_equal(numpy.sum(w * (2.0 * x + 1.0)), 12.0)


def test_tail_integration_matrix():
    x = numpy.linspace(0.0, 1.0, 11)
    c = tail_integration_matrix(x)
    f = 3.0 * x + 1.0
    # int_x^1 (3 s + 1) ds, exact for linear functions
    assert_allclose(c @ f, 1.5 * (1.0 - x**2) + (1.0 - x), atol=1e-14)
    assert_equal(c[-1].tolist(), [0.0] * 11)


def test_bisect_vectorized():
    a = numpy.array([2.0, 3.0, 10.0])
    roots = bisect_vectorized(lambda r: r**2 - a, numpy.zeros(3), numpy.full(3, 4.0))
    assert_allclose(roots, numpy.sqrt(a), rtol=1e-14)


def test_bisect_vectorized_not_bracketed():
    assert_raises(AssertionError, lambda: bisect_vectorized(lambda r: r + 1.0, numpy.zeros(1), numpy.ones(1)))


def test_fit_power_law():
    x = numpy.geomspace(1.0, 100.0, 20)
    fit = fit_power_law(x, 3.0 * x**-2.5)
    assert_almost_equal(fit.slope, -2.5)
    assert_almost_equal(fit.intercept, math.log(3.0))
    assert_less(fit.residual, 1e-12)
    assert_equal(fit.n_points, 20)


def test_fit_power_law_skips_nonpositive():
    x = numpy.array([1.0, 2.0, 4.0, 8.0])
    y = numpy.array([1.0, 0.0, 1.0 / 16, 1.0 / 64])
    fit = fit_power_law(x, y)
    assert_equal(fit.n_points, 3)
    assert_almost_equal(fit.slope, -2.0)


def test_hann_power_fraction():
    dt = 0.5
    t = numpy.arange(400) * dt
    fast = numpy.cos(2.0 * t)
    assert_less(hann_power_fraction(fast, dt, 1.0), 1e-4)
    slow = numpy.cos(0.3 * t)
    assert_true(hann_power_fraction(slow, dt, 1.0) > 0.99)
    assert_equal(hann_power_fraction(numpy.zeros(16), dt, 1.0), 0.0)


def test_init_numpy_errors():
    from gravdamp.util.debug import init_numpy_errors

    old = init_numpy_errors("raise")
    try:
        assert_raises(FloatingPointError, lambda: numpy.sqrt(numpy.array([-1.0])))
        assert_equal(numpy.geterr()["under"], "ignore")
        assert_raises(AssertionError, lambda: init_numpy_errors("loud"))
    finally:
        numpy.seterr(**old)
    assert_equal(numpy.geterr(), old)


def test_version():
    import gravdamp

    assert_true(gravdamp.__version__)
    assert_true(describe_gravdamp_version().startswith(gravdamp.__version__))


def test_logging():
    from gravdamp.log import log

    print("hello", file=log.v1)
    log.print_warning("test warning, printed only once")
    log.print_warning("test warning, printed only once")


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
