import os
import sys
import tempfile
import tests.setup_test_env  # noqa
import unittest
from nose.tools import assert_equal, assert_is_instance, assert_in, assert_not_equal, assert_true, assert_false
from pprint import pprint
from gravdamp.config import Config, ConfigError, RunConfig, parse_config
import better_exchook

better_exchook.replace_traceback_format_tb()
from io import StringIO


def test_py_config():
    config = Config()
    config.load_file(
        StringIO(
            """#!gravdamp
# comment
M_max = 16
polytrope = {"mu": 4.5, "nu": 3.0}
stone_times = [5.0, 20.0]
  """
        )
    )

    assert_true(config.has("M_max"))
    assert_true(config.has("polytrope"))
    assert_equal(config.typed_value("M_max"), 16)
    assert_true(config.is_typed("polytrope"))
    assert_is_instance(config.typed_value("polytrope"), dict)
    assert_equal(config.typed_value("stone_times"), [5.0, 20.0])


def test_init_config_subcommand_and_overrides():
    import gravdamp.__main__ as damp

    with tempfile.NamedTemporaryFile(mode="w", suffix=".py", prefix="test_gravdamp_init_config") as cfgfile:
        cfgfile.write(
            """#!gravdamp
M_max = 16
times = {"t_start": 1.0, "t_end": 50.0}

def get_M_max():
  return M_max

    """
        )
        cfgfile.flush()
        damp.init_config(
            command_line_options=["transport", "--config", cfgfile.name, "--threads", "2", "--strict", "++M_max", "8"]
        )

    assert isinstance(damp.config, Config)
    damp.config.typed_dict.pop("__builtins__", None)  # not needed, too verbose for pprint
    pprint(damp.config.dict)
    assert_equal(damp.config.typed_value("task"), "transport")
    assert_equal(damp.config.typed_value("M_max"), 8)
    # functions in the config see the overrides
    assert_equal(damp.config.typed_dict["get_M_max"](), 8)
    run = RunConfig.from_config(damp.config)
    assert_equal(run.task, "transport")
    assert_equal(run.M_max, 8)
    assert_equal(run.num_threads, 2)
    assert_true(run.strict)
    assert_equal(run.times["t_end"], 50.0)
    assert_equal(run.times["rho"], 1.15)  # default filled in


def test_run_config_defaults():
    run = RunConfig.from_config(Config())
    assert_equal(run.task, "steady-state")
    assert_equal(run.polytrope["kappa"], -0.25)
    assert_equal(run.fit_window, (20.0, 200.0))
    assert_equal(run.epsilon_schedule, (1e-2, 5e-3, 2.5e-3))
    assert_equal(run.params.mu, 3.5)


def test_run_config_problems_collected():
    config = Config()
    config.update({"polytrope": {"mu": 1.5, "kappa": -0.5}, "foo": 1, "M_max": 4, "n_theta": 8})
    try:
        RunConfig.from_config(config)
    except ConfigError as exc:
        print(exc)
        keys = [key for key, _ in exc.problems]
        assert_in("polytrope.mu", keys)
        assert_in("polytrope.kappa", keys)
        assert_in("foo", keys)
        assert_in("n_theta", keys)
        assert_false("polytrope.nu" in keys)
    else:
        assert False, "ConfigError expected"


def test_run_config_unknown_child_key():
    config = Config()
    config.update({"times": {"t_start": 1.0, "t_stop": 5.0}})
    try:
        RunConfig.from_config(config)
    except ConfigError as exc:
        assert_equal([key for key, _ in exc.problems], ["times.t_stop"])
    else:
        assert False, "ConfigError expected"


def test_scenario_required_keys():
    config = Config()
    config.set("task", "resolvent")
    try:
        RunConfig.from_config(config)
    except ConfigError as exc:
        assert_in("lambda_grid", [key for key, _ in exc.problems])
    else:
        assert False, "ConfigError expected"


def test_sha256_ignores_orchestration():
    a = RunConfig(output_dir="a", num_threads=1)
    b = RunConfig(output_dir="b", num_threads=8, log_verbosity=(5,))
    c = RunConfig(output_dir="a", num_threads=1, M_max=16)
    assert_equal(a.sha256(), b.sha256())
    assert_not_equal(a.sha256(), c.sha256())


def test_parse_config_echo():
    with tempfile.TemporaryDirectory() as tmp_dir:
        filename = os.path.join(tmp_dir, "setup.py")
        with open(filename, "w") as f:
            f.write('#!gravdamp\nM_max = 16\nn_theta = 64\nstone_times = (5.0,)\npolytrope = {"eta": 0.01}\n')
        out_dir = os.path.join(tmp_dir, "out")
        run = parse_config(filename, output_dir=out_dir, cmd_args=["++n_theta", "96"])
        assert_equal(run.n_theta, 96)
        assert_equal(run.output_dir, out_dir)
        echo = os.path.join(out_dir, "config.echo.py")
        assert_true(os.path.exists(echo))
        config = Config()
        config.load_file(echo)
        run2 = RunConfig.from_config(config)
        assert_equal(run2.polytrope, run.polytrope)
        assert_equal(run2.stone_times, (5.0,))
        assert_equal(run2.sha256(), run.sha256())


def test_parse_config_missing_file():
    try:
        parse_config("/nonexistent/gravdamp/setup.py")
    except ConfigError as exc:
        assert_equal([key for key, _ in exc.problems], ["config"])
    else:
        assert False, "ConfigError expected"


def test_config_py_ext():
    with tempfile.NamedTemporaryFile(mode="w", suffix=".py", prefix="test_gravdamp_init_config") as cfgfile:
        cfgfile.write(
            """
def test_func():
  return config.value("task", "steady-state")
    """
        )
        cfgfile.flush()
        config = Config()
        config.load_file(cfgfile.name)  # should determine format by suffix ".py"

    config.typed_dict.pop("__builtins__", None)  # not needed, too verbose for pprint
    pprint(config.typed_dict)
    assert config.has("test_func")
    assert config.is_typed("test_func")
    test_func = config.typed_dict["test_func"]
    assert callable(test_func)
    assert_equal(test_func(), "steady-state")
    config.set("task", "evolve")
    assert_equal(test_func(), "evolve")


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
