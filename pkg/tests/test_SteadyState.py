import functools
import math
import os
import sys
import tempfile
import tests.setup_test_env  # noqa
import unittest
import numpy
from nose.tools import assert_equal, assert_raises, assert_true, assert_less, assert_greater, assert_almost_equal
from numpy.testing import assert_allclose
from gravdamp.steady_state import *
import better_exchook

better_exchook.replace_traceback_format_tb()


@functools.lru_cache()
def get_selfconsistent_model():
    """
    :rtype: PolytropeModel
    """
    return build_selfconsistent(PolytropeParams(eta=0.01), radial_nodes=512, tol=1e-12)


def test_kepler_constants():
    model = build_kepler(PolytropeParams())
    assert_equal(model.E0, -0.25)
    assert_almost_equal(model.Lmax, 2.0, places=14)
    assert_almost_equal(model.Rmin, 2.0 - math.sqrt(2.0), places=14)
    assert_almost_equal(model.Rmax, 2.0 + math.sqrt(2.0), places=14)
    assert_true(model.is_kepler)
    assert_equal(float(model.U(1.7)), 0.0)
    assert_equal(float(model.dU(5.0)), 0.0)


def test_kepler_support_boundary():
    model = build_model(PolytropeParams())
    assert_true(model.is_kepler)
    for R in (model.Rmin, model.Rmax):
        assert_almost_equal(float(effective_potential(model, R, 1.0)), model.E0, places=13)


def test_params_validate():
    assert_raises(ParameterError, lambda: PolytropeParams(kappa=-0.4).validate())
    assert_raises(ParameterError, lambda: PolytropeParams(kappa=0.1).validate())
    assert_raises(ParameterError, lambda: PolytropeParams(mu=2.0).validate())
    assert_raises(ParameterError, lambda: PolytropeParams(nu=1.0).validate())
    assert_raises(ParameterError, lambda: PolytropeParams(eta=0.1).validate(eta_max=0.05))
    PolytropeParams(eta=0.1).validate(eta_max=0.2)
    lo, hi = PolytropeParams().kappa_window()
    assert_almost_equal(lo, -(2.0 ** (-2.0 / 3.0)) / 2.0)
    assert_equal(hi, 0.0)


def test_build_kepler_needs_eta_zero():
    assert_raises(ParameterError, lambda: build_kepler(PolytropeParams(eta=0.01)))


def test_density_constant_brute_force():
    for mu, nu in [(3.5, 2.0), (4.5, 3.0), (2.5, 1.5)]:
        params = PolytropeParams(mu=mu, nu=nu)
        c = density_constant(mu, nu)
        c2 = brute_force_density_constant(params)
        print("mu=%r nu=%r: c=%r, brute force %r" % (mu, nu, c, c2))
        assert_allclose(c2, c, rtol=1e-6)


def test_effective_potential_domain():
    model = build_kepler(PolytropeParams())
    assert_raises(DomainError, lambda: effective_potential(model, 0.0, 1.0))
    assert_raises(DomainError, lambda: effective_potential_derivative(model, numpy.array([1.0, -1.0]), 1.0))


def test_minimum_point_kepler():
    model = build_kepler(PolytropeParams())
    for L in (1.0, 1.3, 1.9):
        r_L, e_min, alpha = minimum_point(model, L)
        assert_almost_equal(r_L, L, places=14)
        assert_almost_equal(e_min, -1.0 / (2.0 * L), places=14)
        assert_almost_equal(alpha, 1.0 / L**3, places=12)
        assert_almost_equal(float(effective_potential_derivative(model, r_L, L)), 0.0, places=14)


def test_selfconsistent_converged():
    model = get_selfconsistent_model()
    print(model)
    assert_true(not model.is_kepler)
    assert_greater(model.iterations, 1)
    assert_less(model.contraction, 0.5)
    assert_greater(model.total_mass, 0.0)
    assert_less(self_consistency_residual(model), 1e-10)
    # the shell pulls inwards, U < 0 and increasing
    r = numpy.linspace(model.Rmin, model.Rmax, 9)[1:-1]
    assert_true(numpy.all(model.U(r) < 0))
    assert_true(numpy.all(model.dU(r) > 0))


def test_selfconsistent_near_kepler():
    model = get_selfconsistent_model()
    kepler = build_kepler(PolytropeParams())
    for attr in ("Rmin", "Rmax", "Lmax"):
        a, b = getattr(model, attr), getattr(kepler, attr)
        assert_less(abs(a - b) / b, 0.1, "%s: %r vs Kepler %r" % (attr, a, b))
    assert_less(abs(model.E0 - model.params.kappa - float(model.U(model.radial_grid[0]))), 1e-14)
    for R in (model.Rmin, model.Rmax):
        assert_almost_equal(float(effective_potential(model, R, model.params.L0)), model.E0, places=12)


def test_exterior_potential():
    model = get_selfconsistent_model()
    r_end = model.radial_grid[-1]
    for r in (r_end, 1.5 * r_end, 10.0 * r_end):
        assert_allclose(float(model.U(r)), -model.total_mass / r, rtol=0, atol=1e-11)
    assert_allclose(float(model.dU(2.0 * r_end)), model.total_mass / (2.0 * r_end) ** 2, rtol=1e-12)


def test_minimum_points_vectorized():
    model = get_selfconsistent_model()
    L = numpy.array([1.0, 1.2, 1.6])
    r_L, e_min, alpha = minimum_points(model, L)
    for i in range(len(L)):
        r, e, a = minimum_point(model, L[i])
        assert_allclose(r_L[i], r, rtol=1e-12)
        assert_allclose(e_min[i], e, rtol=1e-12)
        assert_allclose(alpha[i], a, rtol=1e-8)
    assert_true(numpy.all(numpy.diff(r_L) > 0))


def test_momentum_at_minimum_inverse():
    model = get_selfconsistent_model()
    for R in (1.0, 1.5, 2.5):
        L_R = float(momentum_at_minimum(model, R))
        r_L, _, _ = minimum_point(model, L_R)
        assert_allclose(r_L, R, rtol=1e-12)


def test_save_load():
    model = get_selfconsistent_model()
    with tempfile.TemporaryDirectory() as tmp_dir:
        filename = os.path.join(tmp_dir, "model.txt")
        model.save(filename)
        model2 = PolytropeModel.load(filename)
    assert_equal(model2.params, model.params)
    assert_equal(model2.E0, model.E0)
    assert_equal(model2.Rmax, model.Rmax)
    r = numpy.linspace(model.Rmin, model.Rmax, 11)
    assert_allclose(model2.U(r), model.U(r), rtol=0, atol=1e-15)


def test_model_summary():
    model = build_kepler(PolytropeParams())
    summary = model_summary(model)
    assert_equal(summary["N"], 6)
    assert_equal(summary["Kdefault"], 2)
    assert_equal(summary["residual"], 0.0)
    assert_equal(model.decay_index(), 2.0)
    assert_equal(model.decay_index(1.0), 1.0)
    assert_equal(build_kepler(PolytropeParams(mu=4.5, nu=3.0)).decay_index(), 3.0)


def test_density_profile():
    model = get_selfconsistent_model()
    rho = density_profile(model)
    assert_true(numpy.all(rho.values >= 0))
    assert_equal(float(model.density(0.5 * model.Rmin)), 0.0)
    assert_greater(float(model.density(0.5 * (model.Rmin + model.Rmax))), 0.0)


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
