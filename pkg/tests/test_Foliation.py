import functools
import math
import sys
import tests.setup_test_env  # noqa
import unittest
import numpy
from nose.tools import assert_equal, assert_raises, assert_true, assert_almost_equal
from numpy.testing import assert_allclose
from gravdamp.steady_state import PolytropeParams, build_kepler, effective_potential
from gravdamp.action_angle import build_chart
from gravdamp.foliation import *
import better_exchook

better_exchook.replace_traceback_format_tb()


@functools.lru_cache()
def get_kepler_chart():
    """
    :rtype: gravdamp.action_angle.ActionChart
    """
    return build_chart(build_kepler(PolytropeParams()), energy_nodes=33, momentum_nodes=9)


def test_vacuum_weight():
    chart = get_kepler_chart()
    model = chart.model
    assert_equal(float(vacuum_weight(model, model.E0, 1.5)), 0.0)
    assert_equal(float(vacuum_weight(model, -0.3, model.params.L0)), 0.0)
    assert_equal(float(vacuum_weight(model, -0.2, 1.5)), 0.0)
    assert_almost_equal(float(vacuum_weight(model, -0.3, 1.5)), 3.5 * 0.05**2.5 * 0.5**2, places=14)


def test_yz_roundtrip():
    chart = get_kepler_chart()
    model = chart.model
    R = 2.0
    for E, L in [(-0.28, 1.5), (-0.26, 1.2), (-0.3, 1.1)]:
        y, z = to_yz(model, chart, R, E, L)
        assert_almost_equal(float(z), E - float(effective_potential(model, R, L)), places=15)
        E2, L2 = from_yz(model, chart, R, float(y), float(z))
        assert_almost_equal(E2, E, places=10)
        assert_almost_equal(L2, L, places=8)


def test_outside_foliation():
    chart = get_kepler_chart()
    model = chart.model
    assert_raises(OutsideFoliationError, lambda: to_yz(model, chart, 2.0, -0.33, 1.5))
    assert_raises(OutsideFoliationError, lambda: from_yz(model, chart, 2.0, 0.05, -1e-3))
    assert_raises(OutsideFoliationError, lambda: level_set_endpoints(model, chart, 2.0, 0.5))
    assert_raises(AssertionError, lambda: FoliationPoint(R=2.0, y=0.05, z=-1.0))


def test_jacobian_positive():
    chart = get_kepler_chart()
    model = chart.model
    R = 2.0
    E = numpy.array([-0.3, -0.28, -0.26, -0.251])
    L = numpy.array([1.1, 1.3, 1.5, 1.7])
    jac = jacobian(model, chart, R, E, L)
    assert_true(numpy.all(jac > 0))
    q = weight_q(model, chart, R, E, L)
    assert_allclose(q, vacuum_weight(model, E, L) / jac, rtol=1e-14)


def test_momentum_deviation_law():
    chart = get_kepler_chart()
    model = chart.model
    R = 1.5
    levels = numpy.array([1e-6, 4e-6, 1e-4])
    dev = momentum_deviation_law(model, R, levels)
    # Kepler: Psi_L(R) - E_min^L = (L - R)^2 / (2 R^2 L)
    exact = R**2 * levels + numpy.sqrt(R**4 * levels**2 + 2.0 * R**3 * levels)
    assert_allclose(dev, exact, rtol=1e-8)
    assert_almost_equal(dev[1] / dev[0], 2.0, places=2)


def test_level_set_endpoints():
    chart = get_kepler_chart()
    model = chart.model
    R, z = 2.0, 0.01
    (E_start, L_start), (E_end, L_end) = level_set_endpoints(model, chart, R, z)
    assert_equal(L_start, model.params.L0)
    assert_almost_equal(E_start, -0.365, places=14)
    assert_equal(E_end, model.E0)
    assert_almost_equal(L_end, 1.92, places=12)
    assert_almost_equal(float(effective_potential(model, R, L_end)) + z, model.E0, places=14)


def test_boundary_curves():
    chart = get_kepler_chart()
    model = chart.model
    curves = boundary_curves(model, chart, 2.0, n=17)
    assert_equal(sorted(curves.keys()), ["E0", "L0", "z0"])
    for y, z, E, L in curves.values():
        assert_equal(len(y), 17)
        assert_true(numpy.all(z >= 0))
    y, z, E, L = curves["E0"]
    assert_allclose(y, chart.lambda_min / (2.0 * math.pi), rtol=1e-6)
    y, z, E, L = curves["L0"]
    assert_equal(z[0], 0.0)
    assert_almost_equal(z[-1], model.E0 + 0.375, places=14)
    assert_true(numpy.all(numpy.diff(y) < 0))
    assert_true(numpy.all(curves["z0"][1] == 0.0))
    assert_raises(OutsideFoliationError, lambda: boundary_curves(model, chart, 0.3))


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
