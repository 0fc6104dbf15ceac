import math
import os
import sys
import tempfile
import tests.setup_test_env  # noqa
import unittest
import numpy
from nose.tools import assert_equal, assert_raises, assert_true, assert_false, assert_in, assert_is, assert_almost_equal
from gravdamp.config import RunConfig
from gravdamp.engine.scenarios import Engine, fit_report, run_scenario
from gravdamp.util.basic import GravDampError
from gravdamp.util.output import read_csv, write_csv
import better_exchook

better_exchook.replace_traceback_format_tb()


def test_nop_and_unknown_task():
    with tempfile.TemporaryDirectory() as tmp_dir:
        assert_equal(run_scenario(RunConfig(task="nop", output_dir=tmp_dir)), 0)
        assert_false(os.path.exists(os.path.join(tmp_dir, "manifest.txt")))
        assert_raises(GravDampError, lambda: run_scenario(RunConfig(task="bogus", output_dir=tmp_dir)))


def test_with_overrides():
    engine = Engine(RunConfig(output_dir="out", chart_file="chart.h5"))
    other = engine.with_overrides(polytrope={"eta": 0.01}, M_max=8)
    assert_equal(other.run.polytrope["eta"], 0.01)
    assert_equal(other.run.polytrope["mu"], 3.5)
    assert_equal(other.run.M_max, 8)
    assert_is(other.run.chart_file, None)
    assert_is(other.artifacts, engine.artifacts)
    assert_equal(other.config_sha256, engine.config_sha256)
    assert_equal(engine.run.polytrope["eta"], 0.0)
    assert_equal(engine.output_filename("a.csv"), os.path.join("out", "a.csv"))


def test_steady_state_task():
    with tempfile.TemporaryDirectory() as tmp_dir:
        run = RunConfig(task="steady-state", output_dir=tmp_dir, radial_nodes=64)
        assert_equal(run_scenario(run), 0)
        for name in ("steady_state_summary.csv", "steady_state_profile.csv", "model.txt", "manifest.txt"):
            assert_true(os.path.exists(os.path.join(tmp_dir, name)), name)
        header, columns, data = read_csv(os.path.join(tmp_dir, "steady_state_summary.csv"))
        assert_equal(header["config-sha256"], run.sha256())
        assert_almost_equal(data[0, columns.index("Rmin")], 2.0 - math.sqrt(2.0), places=12)
        assert_almost_equal(data[0, columns.index("Rmax")], 2.0 + math.sqrt(2.0), places=12)
        manifest = open(os.path.join(tmp_dir, "manifest.txt")).read()
        assert_in("steady_state_profile.csv", manifest)
        assert_in("model.txt", manifest)


def test_action_angle_task():
    with tempfile.TemporaryDirectory() as tmp_dir:
        run = RunConfig(task="action-angle", output_dir=tmp_dir, chart_energy_nodes=17, chart_momentum_nodes=9)
        assert_equal(run_scenario(run), 0)
        _, columns, data = read_csv(os.path.join(tmp_dir, "frequency_bounds.csv"))
        assert_almost_equal(data[0, columns.index("lambda_min")], math.sqrt(2.0) / 4.0, places=8)
        assert_equal(data[0, columns.index("decreasing")], 1.0)
        _, columns, data = read_csv(os.path.join(tmp_dir, "action_chart.csv"))
        assert_equal(data.shape, (17 * 9, 8))
        assert_true(os.path.exists(os.path.join(tmp_dir, "chart.h5")))


def test_fit_report():
    times = numpy.linspace(0.0, 300.0, 601)
    sup = 3.0 * (1.0 + times) ** -2.0
    with tempfile.TemporaryDirectory() as tmp_dir:
        filename = write_csv(
            os.path.join(tmp_dir, "force.csv"),
            ["t", "sup_abs_force"],
            numpy.stack([times, sup], axis=1),
            "1.0",
            "abc",
            comments=["K 2.0"],
        )
        text, passed = fit_report([filename])
        assert_true(passed)
        assert_in("PASS (K=2", text)
        text, passed = fit_report([filename], K=1.0)
        assert_false(passed)
        assert_in("FAIL", text)
        text, passed = fit_report([filename], K=float("inf"))
        assert_true(passed)
        assert_in("no prediction", text)


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
