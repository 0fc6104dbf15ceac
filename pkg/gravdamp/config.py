"""
Provides :class:`Config` and some related helpers,
and :class:`RunConfig`, the validated and immutable view of a config which the scenarios consume.
"""

from __future__ import annotations

import ast
import math
import types
import typing
import os
from dataclasses import dataclass, field, fields

from gravdamp.util.basic import GravDampError


class Config:
    """
    Reads in a python-based config file, and provides access to the key/value items.
    """

    def __init__(self, items=None):
        """
        :param dict[str]|None items: optional initial typed_dict
        """
        self.dict = {}  # type: typing.Dict[str, typing.List[str]]
        self.typed_dict = {}  # type: typing.Dict[str, typing.Any]
        self.files = []
        if items is not None:
            self.typed_dict.update(items)

    def load_file(self, f):
        """
        Reads the configuration parameters from a file and adds them to the inner set of parameters.

        :param string|io.TextIOBase|io.StringIO f:
        """
        if isinstance(f, str):
            assert os.path.isfile(f), "config file not found: %r" % f
            self.files.append(f)
            filename = f
            content = open(filename).read()
        else:
            # assume stream-like
            filename = "<config string>"
            content = f.read()
        content = content.strip()
        if content.startswith("#!") or filename.endswith(".py") or filename == "<config string>":
            from gravdamp.util.basic import custom_exec

            # Operate inplace on ourselves, such that functions defined in the config see the other settings.
            user_ns = self.typed_dict
            user_ns.update({"config": self, "__file__": filename, "__name__": "__gravdamp_config__"})
            custom_exec(content, filename, user_ns, user_ns)
            return
        raise ValueError("Invalid config type, maybe you forgot '#!' in the beginning of your config file?")

    def parse_cmd_args(self, args):
        """
        :param list[str]|tuple[str] args:
        """
        from optparse import OptionParser

        parser = OptionParser()
        parser.add_option("--config", dest="load_config", help="[STRING] load config")
        parser.add_option("--out", dest="output_dir", help="[STRING] output directory")
        parser.add_option("--threads", dest="num_threads", help="[INT] number of worker threads")
        parser.add_option("--strict", dest="strict", action="store_true", help="enforce m=0 orthogonality")
        (options, args) = parser.parse_args(list(args))
        options = vars(options)
        for opt in options.keys():
            if options[opt] is not None:
                if opt == "load_config":
                    self.load_file(options[opt])
                elif opt == "strict":
                    self.set("strict", True)
                else:
                    self.add_line(opt, options[opt])
        assert len(args) % 2 == 0, "expect (++key, value) config tuples in remaining args: %r" % args
        for i in range(0, len(args), 2):
            key, value = args[i : i + 2]
            assert key[0:2] == "++", "expect key prefixed with '++' in (%r, %r)" % (key, value)
            if value[:2] == "+-":
                value = value[1:]  # otherwise we never could specify things like "++kappa -0.2"
            self.add_line(key=key[2:], value=value)

    def add_line(self, key, value):
        """
        Adds one specific configuration (key,value) pair to the inner set of parameters

        :type key: str
        :type value: str
        """
        if key in self.typed_dict:
            # Overwrite a value which was typed before, e.g. by the Python config file.
            value_type = type(self.typed_dict[key])
            if value_type == str:
                pass  # keep as-is
            else:
                try:
                    value = eval(value)
                except SyntaxError:
                    from gravdamp.log import log

                    log.print_warning(
                        "can't evaluate config param %r to previous type: %s. Keeping as string." % (value, value_type)
                    )
            self.typed_dict[key] = value
            return
        if value.find(",") > 0 and not value.lstrip().startswith(("{", "[", "(")):
            value = value.split(",")
        else:
            value = [value]
        if key == "include":
            for f in value:
                self.load_file(f)
        else:
            self.dict[key] = value

    def has(self, key):
        """
        :type key: str
        :rtype: bool
        :returns True if and only if the given key is in the inner set of parameters
        """
        if key in self.typed_dict:
            return True
        return key in self.dict

    def is_typed(self, key):
        """
        :type key: str
        :rtype: bool
        :returns True if and only if the value of the given key has a specified data type
        """
        return key in self.typed_dict

    def set(self, key, value):
        """
        :type key: str
        :type value: list[str] | str | int | float | bool | dict | None
        """
        self.typed_dict[key] = value

    def update(self, dikt):
        """
        :type dikt: dict
        """
        for key, value in dikt.items():
            self.set(key, value)

    def value(self, key, default, index=None, list_join_str=","):
        """
        :type key: str
        :type default: T
        :type index: int | None
        :param str list_join_str:
        :rtype: str | T
        """
        if key in self.typed_dict:
            ls = self.typed_dict[key]
            if index is None:
                if isinstance(ls, (list, tuple)):
                    return list_join_str.join([str(v) for v in ls])
                elif ls is None:
                    return default
                else:
                    return str(ls)
            else:
                return str(ls[index])
        if key in self.dict:
            ls = self.dict[key]
            if index is None:
                return list_join_str.join(ls)
            else:
                return ls[index]
        return default

    def typed_value(self, key, default=None, index=None):
        """
        :type key: str
        :type default: T
        :type index: int | None
        :rtype: T | typing.Any
        """
        value = self.typed_dict.get(key, default)
        if index is not None:
            assert isinstance(index, int)
            if isinstance(value, (list, tuple)):
                value = value[index]
            else:
                assert index == 0
        return value

    def opt_typed_value(self, key, default=None):
        """
        Like :func:`typed_value`, but values given on the command line (untyped strings)
        are parsed as Python literals where possible, e.g. ``++polytrope "{'eta': 0.01}"``.

        :param str key:
        :param T|None default:
        :rtype: T|object|str|None
        """
        if key in self.typed_dict:
            return self.typed_dict[key]
        if key in self.dict:
            s = self.value(key, default)
            try:
                return ast.literal_eval(s)
            except (ValueError, SyntaxError):
                return s
        return default

    def list(self, key, default=None):
        """
        :type key: str
        :type default: T
        :rtype: list[str] | T
        """
        if default is None:
            default = []
        if key in self.typed_dict:
            value = self.typed_value(key, default=default)
            if value is None:
                return default
            if not isinstance(value, (tuple, list)):
                value = [value]
            return list(value)
        if key not in self.dict:
            return default
        return self.dict[key]

    def int_list(self, key, default=None):
        """
        :type key: str
        :type default: T
        :rtype: list[int] | T
        """
        if default is None:
            default = []
        if key in self.typed_dict:
            value = self.typed_value(key, default=default)
            if value is None:
                return default
            if not isinstance(value, (tuple, list)):
                value = [value]
            for x in value:
                assert isinstance(x, int)
            return list(value)
        return [int(x) for x in self.list(key, default)]


class ConfigError(GravDampError):
    """
    Invalid configuration. Carries all problems found, as a list of ``(key_path, message)``.
    """

    def __init__(self, problems):
        """
        :param list[(str,str)] problems:
        """
        self.problems = list(problems)
        super().__init__(
            "invalid config (%i problem%s):\n%s"
            % (
                len(self.problems),
                "" if len(self.problems) == 1 else "s",
                "\n".join("  %s: %s" % (key, msg) for key, msg in self.problems),
            )
        )

    def keys(self):
        """
        :return: key paths of all problems
        :rtype: list[str]
        """
        return [key for key, _ in self.problems]


Tasks = ("steady-state", "action-angle", "transport", "evolve", "resolvent", "fit-decay", "verify", "nop")

_DictOptions = {
    "polytrope": {"mu": 3.5, "nu": 2.0, "eta": 0.0, "kappa": -0.25, "M": 1.0, "L0": 1.0},
    "times": {"t_start": 1.0, "t_end": 200.0, "rho": 1.15, "oversample": 8},
    "lambda_grid": {"num": 40, "cut": None, "refine": 4, "oversample": 8},
    "verify": {"criteria": list(range(1, 14))},
}

# Keys which do not influence any numerical result. They are left out of the config checksum.
_OrchestrationKeys = ("output_dir", "num_threads", "log", "log_verbosity", "log_format", "verify")

# Which keys a scenario needs to find explicitly in the config file.
_ScenarioRequired = {
    "transport": ("times",),
    "resolvent": ("lambda_grid",),
    "evolve": ("t_end",),
    "fit-decay": ("fit_inputs",),
}


@dataclass(frozen=True)
class RunConfig:
    """
    Validated settings of one run. Build it via :func:`parse_config` or :func:`RunConfig.from_config`.
    """

    task: str = "steady-state"
    polytrope: typing.Dict[str, float] = field(default_factory=lambda: dict(_DictOptions["polytrope"]))
    eta_max: float = 0.05
    radial_nodes: int = 2048
    steady_state_tol: float = 1e-12
    steady_state_max_iter: int = 200
    relaxation: float = 1.0
    chart_energy_nodes: int = 257
    chart_momentum_nodes: int = 129
    M_max: int = 32
    n_theta: int = 128
    force_radii: int = 64
    initial_data: typing.Any = field(default_factory=lambda: {"class": "smooth_bump"})
    strict: bool = False
    times: typing.Dict[str, float] = field(default_factory=lambda: dict(_DictOptions["times"]))
    fit_window: typing.Tuple[float, float] = (20.0, 200.0)
    dt_fraction: float = 0.2
    t_end: float = 200.0
    output_interval: float = 0.5
    checkpoint_interval: float = 0.0
    snapshot_times: typing.Tuple[float, ...] = ()
    conserved_synthesis: str = "orbit"
    lambda_grid: typing.Dict[str, typing.Any] = field(default_factory=lambda: dict(_DictOptions["lambda_grid"]))
    epsilon_schedule: typing.Tuple[float, ...] = (1e-2, 5e-3, 2.5e-3)
    resonance_width: typing.Optional[float] = None
    resolvent_tol: float = 1e-12
    neumann_max_iter: int = 200
    stone_times: typing.Tuple[float, ...] = (5.0, 20.0)
    fit_inputs: typing.Tuple[str, ...] = ()
    output_dir: str = "output"
    seed: int = 42
    num_threads: int = 1
    model_file: typing.Optional[str] = None
    chart_file: typing.Optional[str] = None
    log: typing.Tuple[str, ...] = ()
    log_verbosity: typing.Tuple[int, ...] = (3,)
    log_format: typing.Tuple[str, ...] = ()
    verify: typing.Dict[str, typing.Any] = field(default_factory=lambda: dict(_DictOptions["verify"]))

    @classmethod
    def from_config(cls, config):
        """
        Validates the config. All problems are collected and raised together.

        :param Config config:
        :rtype: RunConfig
        :raises ConfigError:
        """
        problems = []  # type: typing.List[typing.Tuple[str, str]]
        known = {f.name for f in fields(cls)}
        for key in sorted(set(config.typed_dict.keys()) | set(config.dict.keys())):
            if key in known or key.startswith("_") or key in ("config", "include"):
                continue
            value = config.typed_dict.get(key)
            if isinstance(value, (types.ModuleType, types.FunctionType, type)):
                continue
            problems.append((key, "unknown config key"))

        kwargs = {}
        for f in fields(cls):
            if not config.has(f.name):
                continue
            value = config.opt_typed_value(f.name)
            kwargs[f.name] = value
        if "num_threads" not in kwargs:
            from gravdamp.util.basic import guess_requested_max_num_threads

            kwargs["num_threads"] = guess_requested_max_num_threads() or 1

        defaults = cls()
        for key, child_defaults in _DictOptions.items():
            if key not in kwargs:
                continue
            value = kwargs[key]
            if not isinstance(value, dict):
                problems.append((key, "expected a dict, got %r" % (value,)))
                del kwargs[key]
                continue
            for child in sorted(value.keys()):
                if child not in child_defaults:
                    problems.append(("%s.%s" % (key, child), "unknown config key"))
            merged = dict(child_defaults)
            merged.update({k: v for k, v in value.items() if k in child_defaults})
            kwargs[key] = merged

        for key, value in list(kwargs.items()):
            default = getattr(defaults, key)
            converted = _convert(key, value, default, problems)
            if converted is _Invalid:
                del kwargs[key]
            else:
                kwargs[key] = converted

        run = cls(**kwargs)
        run._validate(config, problems)
        if problems:
            raise ConfigError(problems)
        return run

    def _validate(self, config, problems):
        """
        :param Config config:
        :param list[(str,str)] problems: appended to
        """
        if self.task not in Tasks:
            problems.append(("task", "unknown task %r, expected one of %s" % (self.task, ", ".join(Tasks))))
        for key in _ScenarioRequired.get(self.task, ()):
            if not config.has(key):
                problems.append((key, "required by scenario %r" % self.task))
        if self.task == "fit-decay" and config.has("fit_inputs") and not self.fit_inputs:
            problems.append(("fit_inputs", "required by scenario 'fit-decay' (no CSV inputs given)"))

        p = self.polytrope
        if not p["mu"] > 2:
            problems.append(("polytrope.mu", "must be > 2, got %r" % p["mu"]))
        if not p["nu"] > 1:
            problems.append(("polytrope.nu", "must be > 1, got %r" % p["nu"]))
        if not p["M"] > 0:
            problems.append(("polytrope.M", "must be > 0, got %r" % p["M"]))
        if not p["L0"] > 0:
            problems.append(("polytrope.L0", "must be > 0, got %r" % p["L0"]))
        if not 0 <= p["eta"] <= self.eta_max:
            problems.append(("polytrope.eta", "must be in [0, eta_max=%r], got %r" % (self.eta_max, p["eta"])))
        if p["M"] > 0 and p["L0"] > 0:
            kappa_lo = -(2.0 ** (-2.0 / 3.0)) * p["M"] ** 2 / (2.0 * p["L0"])
            if not kappa_lo < p["kappa"] < 0:
                problems.append(
                    (
                        "polytrope.kappa",
                        "outside the single-gap window (%r, 0), got %r" % (kappa_lo, p["kappa"]),
                    )
                )

        for key in ("steady_state_tol", "resolvent_tol", "eta_max", "relaxation", "output_interval"):
            if not getattr(self, key) > 0:
                problems.append((key, "must be > 0, got %r" % getattr(self, key)))
        for i, eps in enumerate(self.epsilon_schedule):
            if not eps > 0:
                problems.append(("epsilon_schedule[%i]" % i, "must be > 0, got %r" % eps))
        if not self.epsilon_schedule:
            problems.append(("epsilon_schedule", "must not be empty"))
        if self.M_max < 1:
            problems.append(("M_max", "must be >= 1, got %r" % self.M_max))
        if self.n_theta < 4 * self.M_max:
            problems.append(("n_theta", "must be >= 4*M_max = %i, got %r" % (4 * self.M_max, self.n_theta)))
        for key in ("radial_nodes", "chart_energy_nodes", "chart_momentum_nodes", "force_radii"):
            if getattr(self, key) < 8:
                problems.append((key, "must be >= 8, got %r" % getattr(self, key)))
        for key in ("steady_state_max_iter", "neumann_max_iter", "num_threads"):
            if getattr(self, key) < 1:
                problems.append((key, "must be >= 1, got %r" % getattr(self, key)))
        if not 0 < self.dt_fraction <= 0.2:
            problems.append(("dt_fraction", "must be in (0, 0.2], got %r" % self.dt_fraction))
        if self.checkpoint_interval < 0:
            problems.append(("checkpoint_interval", "must be >= 0, got %r" % self.checkpoint_interval))
        if not self.t_end > 0:
            problems.append(("t_end", "must be > 0, got %r" % self.t_end))
        if self.conserved_synthesis not in ("orbit", "greens"):
            problems.append(("conserved_synthesis", "expected 'orbit' or 'greens', got %r" % self.conserved_synthesis))
        if self.resonance_width is not None and not self.resonance_width > 0:
            problems.append(("resonance_width", "must be > 0, got %r" % self.resonance_width))

        t = self.times
        if not t["t_start"] > 0:
            problems.append(("times.t_start", "must be > 0, got %r" % t["t_start"]))
        if not t["t_end"] > t["t_start"]:
            problems.append(("times.t_end", "must be > t_start, got %r" % t["t_end"]))
        if not t["rho"] > 1:
            problems.append(("times.rho", "must be > 1, got %r" % t["rho"]))
        if not (isinstance(t["oversample"], int) and t["oversample"] >= 1):
            problems.append(("times.oversample", "must be an int >= 1, got %r" % t["oversample"]))
        lo, hi = self.fit_window
        if not 0 <= lo < hi:
            problems.append(("fit_window", "expected 0 <= t_lo < t_hi, got %r" % (self.fit_window,)))

        g = self.lambda_grid
        if not (isinstance(g["num"], int) and g["num"] >= 2):
            problems.append(("lambda_grid.num", "must be an int >= 2, got %r" % g["num"]))
        if g["cut"] is not None and not g["cut"] > 0:
            problems.append(("lambda_grid.cut", "must be None or > 0, got %r" % g["cut"]))
        if not (isinstance(g["refine"], int) and g["refine"] >= 0):
            problems.append(("lambda_grid.refine", "must be an int >= 0, got %r" % g["refine"]))
        if not (isinstance(g["oversample"], int) and g["oversample"] >= 1):
            problems.append(("lambda_grid.oversample", "must be an int >= 1, got %r" % g["oversample"]))

        for key in ("snapshot_times", "stone_times"):
            for i, t_ in enumerate(getattr(self, key)):
                if not t_ >= 0:
                    problems.append(("%s[%i]" % (key, i), "must be >= 0, got %r" % t_))
        for i, c in enumerate(self.verify["criteria"]):
            if c not in range(1, 14):
                problems.append(("verify.criteria[%i]" % i, "no acceptance criterion %r" % (c,)))

        from gravdamp.initial_data import check_initial_data_opts

        for key, msg in check_initial_data_opts(self.initial_data):
            problems.append((key, msg))

    @property
    def params(self):
        """
        :rtype: gravdamp.steady_state.PolytropeParams
        """
        from gravdamp.steady_state import PolytropeParams

        return PolytropeParams(**self.polytrope)

    def as_dict(self):
        """
        :return: all settings, sorted by key. callables are replaced by their qualified name
        :rtype: dict[str]
        """
        d = {}
        for f in fields(self):
            value = getattr(self, f.name)
            if callable(value):
                value = "<callable %s>" % getattr(value, "__qualname__", repr(value))
            d[f.name] = value
        return d

    def echo_text(self):
        """
        :return: Python text which reproduces the resolved settings
        :rtype: str
        """
        from gravdamp.util.basic import better_repr

        lines = ["#!gravdamp", "# resolved settings (defaults filled in)"]
        for key, value in sorted(self.as_dict().items()):
            lines.append("%s = %s" % (key, better_repr(value)))
        return "\n".join(lines) + "\n"

    def sha256(self):
        """
        :return: checksum over all settings which influence numerical results
        :rtype: str
        """
        from gravdamp.util.basic import better_repr, sha256_bytes

        d = {k: v for (k, v) in self.as_dict().items() if k not in _OrchestrationKeys}
        return sha256_bytes(better_repr(d))

    def replace(self, **kwargs):
        """
        :return: copy with the given fields replaced (not validated again)
        :rtype: RunConfig
        """
        import dataclasses

        return dataclasses.replace(self, **kwargs)


_Invalid = object()


def _convert(key, value, default, problems):
    """
    Converts a raw config value to the type of the default.

    :param str key:
    :param value:
    :param default:
    :param list[(str,str)] problems:
    :return: converted value or _Invalid
    """
    if key == "initial_data":
        if isinstance(value, dict) or callable(value):
            return value
        problems.append((key, "expected a dict with 'class' or a callable, got %r" % (value,)))
        return _Invalid
    if key in ("resonance_width", "model_file", "chart_file") and value is None:
        return None
    if isinstance(default, dict):
        return value
    if isinstance(default, bool):
        if isinstance(value, str):
            from gravdamp.util.basic import to_bool

            try:
                return to_bool(value)
            except ValueError:
                pass
        elif isinstance(value, (bool, int)):
            return bool(value)
    elif isinstance(default, int):
        if isinstance(value, str):
            try:
                return int(value)
            except ValueError:
                pass
        elif isinstance(value, int) and not isinstance(value, bool):
            return value
        elif isinstance(value, float) and value == int(value):
            return int(value)
    elif isinstance(default, float) or key == "resonance_width":
        if isinstance(value, str):
            try:
                value = float(value)
            except ValueError:
                pass
        if isinstance(value, (int, float)) and not isinstance(value, bool) and not math.isnan(value):
            return float(value)
    elif isinstance(default, str) or key in ("model_file", "chart_file"):
        if isinstance(value, str):
            return value
    elif isinstance(default, tuple):
        if isinstance(value, (str, int, float)):
            value = [value]
        if isinstance(value, (list, tuple)):
            if key in ("fit_inputs", "log", "log_format"):
                return tuple(str(v) for v in value)
            if key == "fit_window" and len(value) != 2:
                problems.append((key, "expected (t_lo, t_hi), got %r" % (value,)))
                return _Invalid
            try:
                if key == "log_verbosity":
                    return tuple(int(v) for v in value)
                return tuple(float(v) for v in value)
            except (TypeError, ValueError):
                pass
    problems.append((key, "cannot interpret %r as %s" % (value, type(default).__name__)))
    return _Invalid


def parse_config(path, output_dir=None, cmd_args=None):
    """
    Loads and validates a config file.

    :param str path: Python config file
    :param str|None output_dir: if given, overrides ``output_dir``, and ``config.echo.py`` is written there
    :param list[str]|None cmd_args: extra command line style args, e.g. ``["++M_max", "8"]``
    :rtype: RunConfig
    :raises ConfigError:
    """
    if not os.path.isfile(path):
        raise ConfigError([("config", "file not found: %r" % path)])
    config = Config()
    config.load_file(path)
    if cmd_args:
        config.parse_cmd_args(cmd_args)
    if output_dir is not None:
        config.set("output_dir", output_dir)
    run = RunConfig.from_config(config)
    if output_dir is not None:
        write_config_echo(run, output_dir)
    return run


def write_config_echo(run, output_dir):
    """
    :param RunConfig run:
    :param str output_dir:
    :return: filename
    :rtype: str
    """
    from gravdamp.util.basic import write_text_file_atomic

    filename = os.path.join(output_dir, "config.echo.py")
    write_text_file_atomic(filename, run.echo_text())
    return filename

