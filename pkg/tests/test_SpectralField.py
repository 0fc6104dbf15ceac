import functools
import math
import os
import sys
import tempfile
import tests.setup_test_env  # noqa
import unittest
import numpy
from nose.tools import assert_equal, assert_raises, assert_true, assert_false, assert_less, assert_almost_equal
from numpy.testing import assert_allclose
from gravdamp.steady_state import PolytropeParams, build_kepler, RadialProfile
from gravdamp.action_angle import build_chart, OrbitCache
from gravdamp.initial_data import SmoothBump, PhaseBump, LowRegularity
from gravdamp.spectral_field import *
import better_exchook

better_exchook.replace_traceback_format_tb()


@functools.lru_cache()
def get_kepler_chart(energy_nodes=33, momentum_nodes=9):
    """
    :rtype: gravdamp.action_angle.ActionChart
    """
    return build_chart(build_kepler(PolytropeParams()), energy_nodes=energy_nodes, momentum_nodes=momentum_nodes)


def test_modes_from_samples_real():
    theta = numpy.arange(16) / 16.0
    samples = numpy.cos(2.0 * math.pi * 3.0 * theta) + 0.25
    coef, zero = modes_from_samples(samples[None, :], M_max=4)
    assert_equal(coef.shape, (8, 1))
    # ordered m = -4 .. -1, 1 .. 4
    expected = numpy.array([0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 0.5, 0.0])
    assert_allclose(coef[:, 0], expected, atol=1e-15)
    assert_almost_equal(float(zero[0]), 0.25, places=15)


def test_modes_from_samples_complex():
    theta = numpy.arange(16) / 16.0
    samples = numpy.exp(2j * math.pi * 2.0 * theta)
    coef, zero = modes_from_samples(samples, M_max=3)
    assert_allclose(coef, [0.0, 0.0, 0.0, 0.0, 1.0, 0.0], atol=1e-15)
    back = samples_from_modes(coef[:, None], 16)[0]
    assert_allclose(back, samples, atol=1e-14)


def test_modes_need_enough_angles():
    assert_raises(AssertionError, lambda: modes_from_samples(numpy.zeros(8), M_max=4))


def test_plancherel_defect():
    theta = numpy.arange(32) / 32.0
    samples = numpy.cos(2.0 * math.pi * theta) + 0.5 * numpy.sin(2.0 * math.pi * 5.0 * theta)
    assert_less(plancherel_defect(samples, M_max=8), 1e-14)
    assert_true(plancherel_defect(samples, M_max=2) > 0.1)
    assert_equal(plancherel_defect(numpy.zeros(32), M_max=2), 0.0)


def test_mode_field_layout():
    chart = get_kepler_chart()
    coef = numpy.zeros((6,) + chart.shape, dtype=complex)
    coef[0] = 3.0  # m = -3
    coef[3] = 1.0 + 2.0j  # m = 1
    coef[2] = 1.0 - 2.0j  # m = -1
    field = ModeField(coef, chart)
    assert_equal(field.M_max, 3)
    assert_equal(list(field.modes), [-3, -2, -1, 1, 2, 3])
    assert_equal(field.index(-3), 0)
    assert_equal(field.index(1), 3)
    assert_equal(field.get(1)[0, 0], 1.0 + 2.0j)
    assert_equal(field.negative()[0, 0, 0], 1.0 - 2.0j)
    assert_equal(field.negative()[2, 0, 0], 3.0)
    assert_allclose(field.pair_sums()[0], 2.0)
    assert_allclose(field.pair_sums()[2], 3.0)
    assert_equal(field.conjugate_defect(), 3.0)
    assert_raises(AssertionError, lambda: field.index(0))
    assert_raises(AssertionError, lambda: field.index(4))


def test_mode_field_arithmetic():
    chart = get_kepler_chart()
    coef = numpy.ones((4,) + chart.shape, dtype=complex)
    a = ModeField(coef, chart)
    b = 2.0 * a - a
    assert_true(b.real)
    assert_allclose(b.coefficients, coef)
    c = a * 1j
    assert_false(c.real)
    assert_false((a + c).real)
    weights = numpy.ones(chart.shape)
    assert_almost_equal(a.weighted_norm(weights), math.sqrt(4.0 * chart.num_nodes))


def test_mode_field_save_load():
    chart = get_kepler_chart()
    rng = numpy.random.RandomState(42)
    coef = rng.normal(size=(4,) + chart.shape) + 1j * rng.normal(size=(4,) + chart.shape)
    field = ModeField(coef, chart, real=False)
    with tempfile.TemporaryDirectory() as tmp_dir:
        filename = os.path.join(tmp_dir, "field.hdf")
        field.save(filename)
        field2 = ModeField.load(filename, chart)
    assert_false(field2.real)
    assert_allclose(field2.coefficients, field.coefficients, rtol=0, atol=0)


def test_analyze_smooth_bump():
    chart = get_kepler_chart()
    model = chart.model
    f0 = SmoothBump(model, m=1)
    field = analyze(model, chart, f0, M_max=4, n_theta=16, strict=True)
    assert_true(field.real)
    assert_less(field.zero_mode, 1e-14)
    E, L = chart.E, chart.L_grid
    gap = numpy.maximum(E - chart.e_min[None, :], 0.0)
    envelope = numpy.exp(-(((E - f0.E_center) / f0.E_width) ** 2) - ((L - f0.L_center) / f0.L_width) ** 2)
    assert_allclose(field.get(1), 0.5 * numpy.sqrt(gap) * envelope, atol=1e-14)
    assert_allclose(field.get(-1), numpy.conj(field.get(1)), atol=0)
    assert_less(float(numpy.max(numpy.abs(field.get(2)))), 1e-14)
    assert_equal(field.conjugate_defect(), 0.0)


def test_analyze_strict_orbit_average():
    chart = get_kepler_chart()
    model = chart.model
    f0 = PhaseBump(model)
    assert_raises(OrthogonalityError, lambda: analyze(model, chart, f0, M_max=4, n_theta=16, strict=True))
    field = analyze(model, chart, f0, M_max=4, n_theta=16)
    assert_true(field.zero_mode > 0)


def test_mode_scaling_exponent():
    chart = get_kepler_chart()
    model = chart.model
    for m in (1, 2, 3, 4):
        field = analyze(model, chart, SmoothBump(model, m=m), M_max=4, n_theta=16)
        fit = mode_scaling_exponent(field, 4, m)
        assert_true(fit.n_points >= 8)
        assert_almost_equal(fit.slope, m / 2.0, delta=0.05)
    # f0 = w is odd in the angle and vanishes like the square root of the gap
    field = analyze(model, chart, lambda r, w, L: w, M_max=4, n_theta=16)
    fit = mode_scaling_exponent(field, 4, 1)
    assert_true(fit.n_points >= 8)
    assert_almost_equal(fit.slope, 0.5, delta=0.05)


def test_greens_mode_matches_orbit_indicator():
    model = build_kepler(PolytropeParams())
    E, L, R = -0.3, 1.5, 2.0
    coef, (theta_out, theta_in) = orbit_indicator_modes(model, R, E, L, m_max=8)
    assert_almost_equal(theta_out + theta_in, 1.0, places=8)
    for m in range(1, 9):
        g = float(greens_mode(model, None, R, m, E, L))
        assert_almost_equal(g, coef[m - 1].real, places=8)
        assert_almost_equal(coef[m - 1].imag, 0.0, places=8)
        assert_almost_equal(float(greens_mode(model, None, R, -m, E, L)), g, places=14)
    # orbit does not reach R
    assert_equal(float(greens_mode(model, None, 3.0, 1, E, L)), 0.0)


def test_force_of_odd_data_vanishes():
    chart = get_kepler_chart()
    model = chart.model
    radii = force_radii(model, 9)
    cache = OrbitCache(chart, n_theta=16)
    greens = GreensCache(model, chart, cache, radii)
    even = analyze(model, chart, SmoothBump(model, m=1), M_max=4, n_theta=16, cache=cache)
    odd = analyze(model, chart, SmoothBump(model, m=1, phase=0.5 * math.pi), M_max=4, n_theta=16, cache=cache)
    force_even = greens.force(even)
    force_odd = greens.force(odd)
    scale = float(numpy.max(numpy.abs(force_even)))
    assert_true(scale > 0)
    assert_less(float(numpy.max(numpy.abs(force_odd))), 1e-12 * scale)
    # linear in the data
    assert_allclose(greens.force(2.0 * even - odd), 2.0 * force_even - force_odd, rtol=1e-12, atol=1e-14 * scale)
    # nothing at the edges of the support
    assert_equal(force_even[0], 0.0)


def test_force_of_low_regularity_data():
    chart = get_kepler_chart()
    model = chart.model
    radii = force_radii(model, 9)
    cache = OrbitCache(chart, n_theta=16)
    greens = GreensCache(model, chart, cache, radii)
    f0 = LowRegularity(model)
    field = analyze(model, chart, f0, M_max=4, n_theta=16, strict=True, cache=cache)
    gap = numpy.maximum(chart.E - chart.e_min[None, :], 0.0)
    kink = numpy.maximum(chart.E - f0.E_center, 0.0) ** 2
    assert_allclose(field.get(1).real, 0.5 * numpy.sqrt(gap) * kink, atol=1e-14)
    assert_less(float(numpy.max(numpy.abs(field.get(1).imag))), 1e-14)
    force = greens.force(field)
    smooth = greens.force(analyze(model, chart, SmoothBump(model, m=1), M_max=4, n_theta=16, cache=cache))
    # even in w, so the force does not cancel
    assert_true(float(numpy.max(numpy.abs(force))) > 1e-6 * float(numpy.max(numpy.abs(smooth))))


def test_force_from_modes_matches_direct():
    chart = get_kepler_chart(energy_nodes=65, momentum_nodes=33)
    model = chart.model
    f0 = SmoothBump(model, m=1)
    field = analyze(model, chart, f0, M_max=4, n_theta=16)
    R = 2.0
    direct = direct_force(model, f0, R, n_r=32, n_L=16, n_w=16)
    assert_allclose(force_from_modes(model, chart, field, R), direct, rtol=0.1)


def test_force_radii():
    model = build_kepler(PolytropeParams())
    radii = force_radii(model, 16)
    assert_almost_equal(radii[0], model.Rmin, places=14)
    assert_almost_equal(radii[-1], model.Rmax, places=14)


def test_potential_from_force():
    model = build_kepler(PolytropeParams())
    grid = force_radii(model, 17)
    profile = potential_from_force(model, RadialProfile(grid, numpy.ones_like(grid)), c=-0.5)
    assert_allclose(profile.values, -(model.Rmax - grid) - 0.5 / model.Rmax, atol=1e-13)
    assert_allclose(profile.derivatives, 1.0)


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
