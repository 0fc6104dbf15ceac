import sys
import tempfile
import tests.setup_test_env  # noqa
import unittest
from nose.tools import assert_equal, assert_true, assert_in
from gravdamp.config import RunConfig
from gravdamp.engine.scenarios import Engine
from gravdamp.verify import *
import better_exchook

better_exchook.replace_traceback_format_tb()


def test_criteria_registered():
    criteria = get_criteria()
    assert_equal(sorted(criteria.keys()), list(range(1, 14)))
    assert_equal(criteria[1], "kepler-analytics")
    assert_equal(len(set(criteria.values())), 13)


def test_criterion_result_str():
    result = CriterionResult(8, "plemelj-limit", True, "error 1e-4", 0.5)
    s = str(result)
    assert_in("criterion  8", s)
    assert_in("PASS", s)
    assert_in("error 1e-4", s)
    assert_in("FAIL", str(result._replace(passed=False)))


def test_run_acceptance_cheap_criteria():
    with tempfile.TemporaryDirectory() as tmp_dir:
        engine = Engine(RunConfig(output_dir=tmp_dir, radial_nodes=64, seed=7))
        results = run_acceptance(engine, [1, 2, 8])
    assert_equal([r.number for r in results], [1, 2, 8])
    for r in results:
        assert_true(r.passed, str(r))


def test_run_acceptance_chart_criteria():
    with tempfile.TemporaryDirectory() as tmp_dir:
        config = RunConfig(
            output_dir=tmp_dir,
            radial_nodes=64,
            chart_energy_nodes=33,
            chart_momentum_nodes=9,
            M_max=4,
            n_theta=16,
            seed=7,
        )
        results = run_acceptance(Engine(config), [3, 4, 13])
    assert_equal([r.number for r in results], [3, 4, 13])
    for r in results:
        assert_true(r.passed, str(r))


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
