"""
Main entry point of GravDamp, providing :func:`main`.

Usage::

  damp.py <subcommand> [--config PATH] [--out DIR] [--threads N] [--strict] [++key value ...]

where the subcommand is one of :data:`gravdamp.config.Tasks`.
Without ``--threads``, the thread count comes from ``GRAVDAMP_NUM_THREADS`` (or ``OMP_NUM_THREADS``).
"""

from __future__ import annotations

import os
import sys
import time
import typing

from gravdamp.config import Config, ConfigError, RunConfig, Tasks, write_config_echo
from gravdamp.log import log
from gravdamp.util import debug as debug_util
from gravdamp.util import basic as util
from gravdamp.util.basic import GravDampError

config = None  # type: typing.Optional[Config]
run = None  # type: typing.Optional[RunConfig]
quit_gravdamp = False


def init_config(command_line_options=(), extra_updates=None):
    """
    Initializes the global config.

    :param list[str]|tuple[str] command_line_options: e.g. ``sys.argv[1:]``.
      The first one is the subcommand, unless it starts with "-" or "+".
    :param dict[str]|None extra_updates: applied last, overwriting everything else
    """
    global config
    config = Config()
    command_line_options = list(command_line_options)
    task = None
    if command_line_options and command_line_options[0][:1] not in "-+":
        task = command_line_options.pop(0)
    if command_line_options:
        config.parse_cmd_args(command_line_options)
    if task:
        config.set("task", task)
    if extra_updates:
        config.update(extra_updates)


def init_log():
    """
    Initializes the global :class:`gravdamp.log.Log`.
    """
    log.init_by_config(config)


def init_run():
    """
    Validates the config into the global :class:`RunConfig`, and echoes it into the output dir.
    """
    global run
    run = RunConfig.from_config(config)
    if run.task != "nop":
        filename = write_config_echo(run, run.output_dir)
        print("Resolved config written to %s" % filename, file=log.v4)


def gravdamp_greeting(command_line_options=None):
    """
    Prints some GravDamp greeting to the log.

    :param list[str]|None command_line_options:
    """
    print(
        "GravDamp starting up, version %s, date/time %s, pid %i, cwd %s, Python %s"
        % (
            util.describe_gravdamp_version(),
            time.strftime("%Y-%m-%d-%H-%M-%S (UTC%z)"),
            os.getpid(),
            os.getcwd(),
            sys.executable,
        ),
        file=log.v3,
    )
    for filename in config.files:
        print("GravDamp config: %s" % filename, file=log.v4)
    if command_line_options is not None:
        print("GravDamp command line options: %s" % (command_line_options,), file=log.v4)


def init(command_line_options=(), config_updates=None, extra_greeting=None):
    """
    :param tuple[str]|list[str] command_line_options: e.g. sys.argv[1:]
    :param dict[str]|None config_updates: see :func:`init_config`
    :param str|None extra_greeting:
    """
    debug_util.init_better_exchook()
    init_config(command_line_options=command_line_options, extra_updates=config_updates)
    init_log()
    if extra_greeting:
        print(extra_greeting, file=log.v1)
    gravdamp_greeting(command_line_options=command_line_options)
    debug_util.init_faulthandler()
    debug_util.init_numpy_errors()
    init_run()


def finalize():
    """
    Cleanup at the end, currently doing nothing
    """
    print("Quitting", file=getattr(log, "v4", sys.stderr))
    global quit_gravdamp
    quit_gravdamp = True


def execute_main_task():
    """
    Executes the main task (the subcommand, or config ``task`` option).

    :return: exit status of the scenario
    :rtype: int
    """
    from gravdamp.engine.scenarios import run_scenario
    from gravdamp.util.basic import hms_fraction

    start_time = time.time()
    print("Output dir: %s, %i threads" % (run.output_dir, run.num_threads), file=log.v3)
    status = run_scenario(run)
    print(("elapsed: %s" % hms_fraction(time.time() - start_time)), file=log.v3)
    return status


def main(argv=None):
    """
    Main entry point of GravDamp.

    :param list[str]|None argv: ``sys.argv`` by default
    """
    if argv is None:
        argv = sys.argv
    return_code = 0
    try:
        assert len(argv) >= 2, "usage: %s <%s> --config PATH [++key value ...]" % (argv[0], "|".join(Tasks))
        init(command_line_options=argv[1:])
        return_code = execute_main_task()
    except ConfigError as exc:
        return_code = 1
        print("%s" % exc, file=log.v1)
    except GravDampError as exc:
        return_code = 1
        print("%s: %s" % (exc.__class__.__name__, exc), file=log.v1)
    except KeyboardInterrupt:
        return_code = 1
        print("KeyboardInterrupt", file=getattr(log, "v3", sys.stderr))
        if getattr(log, "verbose", [False] * 6)[5]:
            sys.excepthook(*sys.exc_info())
    finalize()
    if return_code:
        sys.exit(return_code)


if __name__ == "__main__":
    main(sys.argv)
