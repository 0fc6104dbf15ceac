"""
test logging
"""

from __future__ import annotations

import tests.setup_test_env  # noqa
from subprocess import Popen, PIPE, STDOUT, CalledProcessError
import os
import sys
import unittest
from nose.tools import assert_in, assert_equal
import better_exchook


__my_dir__ = os.path.dirname(os.path.abspath(__file__))
__base_dir__ = os.path.dirname(__my_dir__)
__main_entry__ = __base_dir__ + "/damp.py"
py = sys.executable


def build_env():
    """build env"""
    env_update = os.environ.copy()
    env_update["PYTHONPATH"] = __base_dir__ + os.pathsep + env_update.get("PYTHONPATH", "")
    return env_update


def run(args, input=None, expected_returncode=0):
    """run subproc"""
    args = list(args)
    print("run:", args)
    # GravDamp logs to stdout, warnings of Python go to stderr, just merge both together
    p = Popen(args, stdout=PIPE, stderr=STDOUT, stdin=PIPE, env=build_env(), cwd=__base_dir__)
    out, _ = p.communicate(input=input)
    print("Return code is %i" % p.returncode)
    print("std out/err:\n---\n%s\n---\n" % out.decode("utf8"))
    if p.returncode != expected_returncode:
        raise CalledProcessError(cmd=args, returncode=p.returncode, output=out)
    return out.decode("utf8")


def count_start_with(ls, s):
    """
    :param list[str] ls:
    :param str s:
    :rtype: int
    """
    c = 0
    for l in ls:
        if l.startswith(s):
            c += 1
    return c


def test_gravdamp_startup():
    out = run([py, __main_entry__, "nop"])
    ls = out.splitlines()
    assert_equal(count_start_with(ls, "GravDamp starting up, version "), 1)
    assert_in("Task: No-operation", ls)
    assert_equal(count_start_with(ls, "elapsed: "), 1)


def test_gravdamp_startup_verbose():
    out = run([py, __main_entry__, "nop", "++log_verbosity", "5"])
    ls = out.splitlines()
    assert_equal(count_start_with(ls, "GravDamp starting up, version "), 1)
    assert_equal(count_start_with(ls, "GravDamp command line options: "), 1)
    assert_in("Task: No-operation", ls)
    assert_in("Quitting", ls)


def test_gravdamp_config_error():
    out = run([py, __main_entry__, "transport", "++M_max", "0"], expected_returncode=1)
    assert_in("invalid config", out)
    assert_in("times: required by scenario 'transport'", out)
    assert_in("M_max: must be >= 1", out)


def test_simple_log():
    code = """
from __future__ import annotations
print("hello stdout 1")
from gravdamp.log import log
log.initialize(verbosity=[], logs=[], formatter=[])
print("hello stdout 2")
print("hello log 1", file=log.v3)
print("hello log 2", file=log.v3)
print("hidden", file=log.v4)
  """
    out = run([py], input=code.encode("utf8"))
    assert_equal(out.splitlines(), ["hello stdout 1", "hello stdout 2", "hello log 1", "hello log 2"])


def test_print_warning_once():
    code = """
from gravdamp.log import log
log.initialize(verbosity=[2])
log.print_warning("refinement cap hit")
log.print_warning("refinement cap hit")
log.print_warning("other")
print("progress", file=log.v3)
  """
    out = run([py], input=code.encode("utf8"))
    assert_equal(out.splitlines(), ["WARNING: refinement cap hit", "WARNING: other"])


def test_stage_and_log_file():
    code = """
import os, tempfile
from gravdamp.log import log
tmp_dir = tempfile.mkdtemp()
log.initialize(logs=["run-$task.log"], verbosity=[3], output_dir=tmp_dir, task="evolve")
with log.stage("Chart") as stage:
    stage["result"] = 42
with log.stage("Nothing", stream=log.v4):
    pass
log.flush()
assert log.filenames == [os.path.join(tmp_dir, "run-evolve.log")], log.filenames
print(open(log.filenames[0]).read().strip())
  """
    out = run([py], input=code.encode("utf8"))
    ls = out.splitlines()
    assert_equal(count_start_with(ls, "Chart 42, took 0:00:00"), 2)
    assert_equal(count_start_with(ls, "Nothing"), 0)


def test_log_target_filename():
    from gravdamp.log import log_target_filename

    assert_equal(log_target_filename("gravdamp.log"), "gravdamp.log")
    assert_equal(log_target_filename("gravdamp.log", output_dir="out"), os.path.join("out", "gravdamp.log"))
    assert_equal(log_target_filename("/tmp/a-$task.log", output_dir="out", task="verify"), "/tmp/a-verify.log")
    assert_equal(log_target_filename("a-$task.log"), "a-run.log")
    assert_in("$", log_target_filename("a-$other.log"))


def test_StreamIO():
    import io

    buf = io.StringIO()
    assert_equal(buf.getvalue(), "")
    print("buf: %r" % buf.getvalue())

    buf.write("hello")
    print("buf: %r" % buf.getvalue())
    assert_equal(buf.getvalue(), "hello")
    buf.truncate(0)  # should not change the position, thus the buffer is empty but position is len("hello")
    print("buf: %r" % buf.getvalue())
    assert_equal(buf.getvalue(), "")

    buf.write("hello")
    print("buf: %r" % buf.getvalue())
    assert_equal(buf.getvalue(), "\x00\x00\x00\x00\x00hello")  # zero-filled
    buf.truncate(0)
    buf.seek(0)
    print("buf: %r" % buf.getvalue())
    assert_equal(buf.getvalue(), "")


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
