"""
Provides the main class for logging, :class:`Log`, and some helpers.

Verbosity levels, as used via ``print(..., file=log.vN)``:

  v1: results and summaries
  v2: warnings and scenario milestones
  v3: progress, iteration counts, timings
  v4: per-iteration details
  v5: debugging
"""

from __future__ import annotations

import contextlib
import io
import logging
import os
import string
import sys
import time
import typing
from threading import RLock

_VerbosityToLogLevel = {
    0: logging.ERROR,
    1: logging.INFO + 1,
    2: logging.INFO,
    3: logging.DEBUG + 2,
    4: logging.DEBUG + 1,
    5: logging.DEBUG,
}

_Formats = {
    "default": ("%(message)s", None),
    "raw": ("%(message)s", None),
    "timed": ("%(asctime)s %(message)s", "%Y-%m-%d,%H:%M:%S"),
    "verbose": ("%(levelname)s - %(asctime)s %(message)s", "%Y-%m-%d,%H:%M:%S"),
}


class Stream:
    """
    Simple stream wrapper, which provides :func:`write` and :func:`flush`.
    One line of text becomes one log record.
    """

    # noinspection PyShadowingNames
    def __init__(self, log, lvl):
        """
        :type log: logging.Logger
        :type lvl: int
        """
        self.buf = io.StringIO()
        self.log = log
        self.lvl = lvl
        self.lock = RLock()

    def write(self, msg):
        """
        :param str msg:
        """
        with self.lock:
            if msg == "\n":
                self.flush()
            else:
                self.buf.write(msg)

    def flush(self):
        """
        Flush, i.e. writes to the log.
        """
        with self.lock:
            self.buf.flush()
            self.log.log(self.lvl, self.buf.getvalue())
            self.buf.truncate(0)
            # truncate does not change the current position
            self.buf.seek(0)


def log_target_filename(target, output_dir=None, task=None):
    """
    :param str target: file name, may contain ``$date`` and ``$task``
    :param str|None output_dir: relative file names are placed here
    :param str|None task:
    :rtype: str
    """
    if "$" in target:
        from gravdamp.util.basic import get_utc_start_time_filename_part

        target = string.Template(target).safe_substitute(date=get_utc_start_time_filename_part(), task=task or "run")
    if output_dir and not os.path.isabs(target):
        target = os.path.join(output_dir, target)
    return target


class Log:
    """
    The main logging class. There is a single instance, :data:`log`.
    """

    def __init__(self):
        self.initialized = False
        self.filenames = []  # type: typing.List[str]
        self.verbose = [False] * 6
        self.v1 = None  # type: typing.Optional[Stream]
        self.v2 = None  # type: typing.Optional[Stream]
        self.v3 = None  # type: typing.Optional[Stream]
        self.v4 = None  # type: typing.Optional[Stream]
        self.v5 = None  # type: typing.Optional[Stream]
        self._printed_warning_history = set()  # type: typing.Set[str]

    def initialize(self, logs=None, verbosity=None, formatter=None, propagate=False, output_dir=None, task=None):
        """
        This resets and configures the "gravdamp" logger.

        :param list[str|logging.Handler] logs: "stdout" or a file name (see :func:`log_target_filename`).
          "stdout" is always added when propagate=False.
        :param list[int] verbosity: levels 0-5 for the log handlers
        :param list[str] formatter: 'default', 'timed', 'raw' or 'verbose', for the log handlers
        :param bool propagate:
        :param str|None output_dir: directory for relative log file names
        :param str|None task: substituted for ``$task`` in log file names
        """
        logs = list(logs or [])
        verbosity = list(verbosity or [])
        formatter = list(formatter or [])
        self.initialized = True
        self.filenames = []
        logger = logging.getLogger("gravdamp")
        # A root logger set up by some embedding code would otherwise print everything twice.
        logger.propagate = propagate
        logger.handlers = []
        if "stdout" not in logs and not propagate:
            logs.append("stdout")
        if len(formatter) == 1:
            formatter = formatter * len(logs)
        # In reverse order, such that the name by default still has the default behavior.
        for lvl in (logging.DEBUG + 2, logging.DEBUG + 1, logging.DEBUG):
            logging.addLevelName(lvl, "DEBUG")
        logging.addLevelName(logging.INFO + 1, "INFO")
        logging.addLevelName(logging.INFO, "INFO")
        self.verbose = [False] * 6
        for i, target in enumerate(logs):
            if i < len(verbosity):
                v = verbosity[i]
            elif len(verbosity) == 1:
                v = verbosity[0]
            else:
                v = 3
            assert 0 <= v <= 5, "invalid verbosity: %r" % v
            for j in range(v + 1):
                self.verbose[j] = True
            fmt, datefmt = _Formats.get(formatter[i] if i < len(formatter) else "default", _Formats["default"])
            if isinstance(target, logging.Handler):
                handler = target
            elif target == "stdout":
                handler = StdoutHandler()
            else:
                filename = log_target_filename(target, output_dir=output_dir, task=task)
                dirname = os.path.dirname(filename)
                if dirname:
                    os.makedirs(dirname, exist_ok=True)
                self.filenames.append(filename)
                handler = logging.FileHandler(filename)
            handler.setLevel(_VerbosityToLogLevel[v])
            handler.setFormatter(logging.Formatter(fmt, datefmt=datefmt))
            logger.addHandler(handler)
        logger.setLevel(logging.DEBUG)
        if not logger.handlers:
            logger.addHandler(logging.NullHandler())
        self.v1, self.v2, self.v3, self.v4, self.v5 = [Stream(logger, _VerbosityToLogLevel[i]) for i in range(1, 6)]

    def init_by_config(self, config):
        """
        :param gravdamp.config.Config config:
        """
        self.initialize(
            logs=config.list("log", []),
            verbosity=config.int_list("log_verbosity", []),
            formatter=config.list("log_format", []),
            output_dir=config.value("output_dir", "output"),
            task=config.value("task", None),
        )

    def print_warning(self, text, prefix_text="WARNING:", extra_text=None):
        """
        Write a warning to log.v2. Does not write repeated warnings.

        :param str text:
        :param str prefix_text:
        :param str|None extra_text:
        """
        if text in self._printed_warning_history:
            return
        self._printed_warning_history.add(text)
        if not self.initialized:
            self.initialize(verbosity=[2])
        print(prefix_text, text, file=self.v2)
        if extra_text:
            print(extra_text, file=self.v2)

    @contextlib.contextmanager
    def stage(self, name, stream=None):
        """
        Logs the wall time of a pipeline stage, like ``Steady state <model>, took 0:00:01.2345``.

        :param str name:
        :param Stream|None stream: defaults to v3
        :return: a dict, the body can set ``"result"`` to have its repr logged after the name
        """
        from gravdamp.util.basic import hms_fraction

        start_time = time.time()
        info = {}
        yield info
        what = "%s %r" % (name, info["result"]) if "result" in info else name
        print("%s, took %s" % (what, hms_fraction(time.time() - start_time)), file=stream or self.v3)

    def flush(self):
        """
        Flush all streams.
        """
        for stream in [self.v1, self.v2, self.v3, self.v4, self.v5]:
            if stream:
                stream.flush()


log = Log()


class StdoutHandler(logging.StreamHandler):
    """
    This class is like a StreamHandler using sys.stdout, but always uses
    whatever sys.stdout is currently set to rather than the value of
    sys.stdout at handler construction time.
    """

    @property
    def stream(self):
        """
        stream
        """
        return sys.stdout

    @stream.setter
    def stream(self, stream):
        pass  # ignore
