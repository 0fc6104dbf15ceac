import functools
import math
import os
import sys
import tempfile
import tests.setup_test_env  # noqa
import unittest
import numpy
from nose.tools import assert_equal, assert_raises, assert_true, assert_less, assert_almost_equal
from numpy.testing import assert_allclose
from gravdamp.steady_state import PolytropeParams, build_kepler, build_selfconsistent
from gravdamp.action_angle import build_chart, OrbitCache
from gravdamp.initial_data import PhaseBump
from gravdamp.spectral_field import analyze
from gravdamp.transport import evolve_pure_transport, transport_force_series, weighted_norm
from gravdamp.linearized import *
import better_exchook

better_exchook.replace_traceback_format_tb()


@functools.lru_cache()
def get_setup(coupled):
    """
    :param bool coupled: self-consistent model with eta = 0.01, else the Kepler problem
    :return: chart, cache, modes of a generic datum
    """
    if coupled:
        model = build_selfconsistent(PolytropeParams(eta=0.01), radial_nodes=256, tol=1e-10)
    else:
        model = build_kepler(PolytropeParams())
    chart = build_chart(model, energy_nodes=17, momentum_nodes=9)
    cache = OrbitCache(chart, n_theta=16)
    field0 = analyze(model, chart, PhaseBump(model), M_max=4, n_theta=16, cache=cache)
    return chart, cache, field0


def get_system(coupled, **kwargs):
    """
    :rtype: LinearizedSystem
    """
    chart, cache, _ = get_setup(coupled)
    return LinearizedSystem(chart.model, chart, cache, 4, **kwargs)


def test_system_options():
    chart, cache, _ = get_setup(False)
    assert_raises(AssertionError, lambda: LinearizedSystem(chart.model, chart, cache, 4, synthesis="fft"))
    assert_raises(AssertionError, lambda: LinearizedSystem(chart.model, chart, cache, 8))
    system = get_system(False, dt_fraction=0.1)
    assert_almost_equal(system.dt_max, 0.1 / (4 * chart.omega_max), places=14)


def test_uncoupled_run_is_transport():
    chart, _, field0 = get_setup(False)
    system = get_system(False, dt_fraction=0.01)
    out = run(system, field0, 2.0, output_interval=0.5, snapshot_times=(2.0,))
    assert_allclose(out.times, [0.0, 0.5, 1.0, 1.5, 2.0])
    assert_equal(out.forces.shape, (5, 64))
    exact = evolve_pure_transport(field0, chart, 2.0)
    scale = float(numpy.max(numpy.abs(exact.coefficients)))
    assert_allclose(out.snapshots[2.0].field.coefficients, exact.coefficients, rtol=1e-5, atol=1e-5 * scale)
    assert_less(out.dt, system.dt_max * (1.0 + 1e-12))


def test_step_stability_limit():
    _, _, field0 = get_setup(False)
    system = get_system(False)
    state = SimState(system, field0)
    assert_raises(StabilityError, lambda: step(state, 2.0 * system.dt_max))
    step(state, system.dt_max)
    assert_almost_equal(state.time, system.dt_max, places=15)


def test_coupled_conservation():
    _, _, field0 = get_setup(True)
    system = get_system(True, dt_fraction=0.02)
    out = run(system, field0, 2.0, output_interval=0.5)
    d0, d1 = out.diagnostics[0], out.diagnostics[-1]
    assert_true(d0.antonov > 0)
    assert_less(abs(d1.antonov - d0.antonov) / d0.antonov, 1e-4)
    scale = float(numpy.max(numpy.abs(field0.coefficients)))
    for d in out.diagnostics:
        assert_less(d.zero_mode, 1e-13 * scale)
        assert_less(abs(d.mass), 1e-10 * abs(d0.antonov) ** 0.5)


def test_coupling_changes_dynamics():
    _, _, field0 = get_setup(True)
    system = get_system(True)
    U = system.potential_modes(field0)
    assert_equal(U.shape, field0.coefficients.shape)
    assert_true(numpy.max(numpy.abs(U)) > 0)
    k = system.rhs(field0).coefficients
    rotation = -2j * math.pi * field0.mode_numbers() * system.omega[None]
    assert_equal(system.eta, 0.01)
    assert_allclose(k, rotation * field0.coefficients + rotation * system.eta * U, rtol=1e-12, atol=1e-300)


def test_coupled_force_follows_transport():
    chart, cache, field0 = get_setup(True)
    system = get_system(True, dt_fraction=0.02)
    out = run(system, field0, 40.0, output_interval=0.5)
    transport = transport_force_series(chart.model, chart, field0, out.times, out.radii, cache=cache)
    scale = float(numpy.max(numpy.abs(transport)))
    assert_allclose(out.forces[0], transport[0], rtol=0, atol=1e-8 * scale)
    early, late = out.times <= 5.0, out.times >= 30.0
    decay_coupled = numpy.max(numpy.abs(out.forces[late])) / numpy.max(numpy.abs(out.forces[early]))
    decay_transport = numpy.max(numpy.abs(transport[late])) / numpy.max(numpy.abs(transport[early]))
    # eta = 0.01 perturbs the force, but the coupled force decays like the transported one
    assert_true(numpy.max(numpy.abs(out.forces - transport)) > 0)
    assert_less(float(numpy.max(numpy.abs(out.forces - transport))), 0.5 * scale)
    assert_true(0.5 < decay_coupled / decay_transport < 2.0)


def test_potential_symmetric():
    chart, _, field0 = get_setup(True)
    system = get_system(True)
    rng = numpy.random.RandomState(42)
    shape = field0.coefficients.shape
    other = field0.like(rng.normal(size=shape) + 1j * rng.normal(size=shape), real=False)
    w = system.node_weights[None]
    a = numpy.sum(w * system.potential_modes(field0) * numpy.conj(other.coefficients))
    b = numpy.sum(w * field0.coefficients * numpy.conj(system.potential_modes(other)))
    assert_allclose(a, b, rtol=1e-10)


def test_module_level_helpers():
    chart, cache, field0 = get_setup(True)
    system = get_system(True)
    state = SimState(system, field0)
    assert_allclose(rhs(state).coefficients, system.rhs(field0).coefficients, rtol=0, atol=0)
    assert_equal(antonov_norm(state), system.antonov_norm(field0))
    assert_equal(total_mass(state), system.total_mass(field0))
    assert_equal(zero_mode_residual(state), system.zero_mode_residual(field0))
    U = potential_modes(chart.model, chart, field0, system=system)
    assert_allclose(U, system.potential_modes(field0), rtol=0, atol=0)
    d = state.record()
    assert_equal(d.time, 0.0)
    snap = state.snapshot()
    assert_equal(snap.diagnostics, (d,))
    state.field = state.field * 2.0
    assert_true(numpy.all(snap.field.coefficients == field0.coefficients))


def test_checkpoint_resume():
    _, _, field0 = get_setup(True)
    system = get_system(True)
    with tempfile.TemporaryDirectory() as tmp_dir:
        filename = os.path.join(tmp_dir, "state.hdf")
        run(system, field0, 1.0, output_interval=0.5, checkpoint_interval=1.0, checkpoint_file=filename)
        state = load_checkpoint(filename, system)
    assert_equal(state.time, 1.0)
    resumed = run(system, field0, 2.0, output_interval=0.5, snapshot_times=(2.0,), state=state)
    full = run(system, field0, 2.0, output_interval=0.5, snapshot_times=(2.0,))
    assert_allclose(resumed.times, [1.0, 1.5, 2.0])
    assert_allclose(
        resumed.snapshots[2.0].field.coefficients, full.snapshots[2.0].field.coefficients, rtol=1e-14, atol=1e-300
    )


def test_observers():
    _, _, field0 = get_setup(False)
    system = get_system(False)
    seen = []
    run(system, field0, 1.5, output_interval=0.5, observers=[lambda snap: seen.append(snap.time)])
    assert_allclose(seen, [0.0, 0.5, 1.0, 1.5])


def test_back_rotate_and_scattering():
    chart, _, field0 = get_setup(False)
    model = chart.model
    snapshots = {
        t: Snapshot(t, evolve_pure_transport(field0, chart, t), ()) for t in (1.0, 2.0, 4.0)
    }
    assert_allclose(back_rotate(snapshots[4.0].field, 4.0).coefficients, field0.coefficients, rtol=1e-12, atol=1e-15)
    out = RunOutput(numpy.array(sorted(snapshots)), numpy.zeros(0), numpy.zeros((3, 0)), [], snapshots, 0.1)
    profile = scattering_profile(model, out, [1.0, 2.0, 3.0])
    assert_equal([t for t, _ in profile], [1.0, 2.0])
    norm0 = weighted_norm(model, field0)
    for _, increment in profile:
        assert_less(increment, 1e-12 * norm0)


def test_spectral_gap_check():
    dt = 0.1
    t = numpy.arange(2000) * dt
    fast = numpy.cos(3.0 * t)
    assert_less(spectral_gap_check(fast, dt, 1.0), 1e-3)
    slow = numpy.cos(0.2 * t)
    assert_true(spectral_gap_check(slow, dt, 1.0) > 0.9)
    assert_true(spectral_gap_check(fast, dt, 1.0, gap_fraction=4.0) > 0.9)


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
