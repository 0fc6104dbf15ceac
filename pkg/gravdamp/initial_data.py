"""
Initial perturbations f0 for the transport and linearized flows.

Initial data is given in the config as a dict ``{"class": name, **kwargs}``, see :func:`init_initial_data`,
or directly as a callable of (r, w, L).
Data in phase space coordinates are callables of (r, w, L),
data with ``coordinates = "angle"`` are callables of (theta, E, L).
The attribute ``regularity`` is the k entering the predicted decay index K = min{mu-1, nu, k}.
"""

from __future__ import annotations

import inspect
import math
import typing

import numpy

from gravdamp.log import log
from gravdamp.steady_state import effective_potential, minimum_points


class InitialData:
    """
    Base class. Subclasses define :func:`__call__`.
    """

    name = None  # type: typing.Optional[str]
    coordinates = "phase"
    regularity = float("inf")

    def __init__(self, model, amplitude=1.0):
        """
        :param gravdamp.steady_state.PolytropeModel model:
        :param float amplitude:
        """
        self.model = model
        self.amplitude = amplitude

    def __repr__(self):
        return "<%s %s>" % (self.__class__.__name__, self.name)

    def energy(self, r, w, L):
        """
        :param numpy.ndarray r:
        :param numpy.ndarray w:
        :param numpy.ndarray L:
        :return: E = w^2/2 + Psi_L(r)
        :rtype: numpy.ndarray
        """
        return 0.5 * numpy.asarray(w) ** 2 + effective_potential(self.model, r, L)

    def _center_radius(self, r_center):
        if r_center is None:
            return 0.5 * (self.model.Rmin + self.model.Rmax)
        return r_center

    def _center_momentum(self, L_center):
        if L_center is None:
            return 0.5 * (self.model.params.L0 + self.model.Lmax)
        return L_center


class SmoothBump(InitialData):
    """
    A cos(2 pi m theta) calE^(|m|/2) exp(-((E - E_c)/sigma_E)^2 - ((L - L_c)/sigma_L)^2),
    with calE = E - E_min^L. The calE factor keeps the datum smooth in (r, w) at the trapping point.
    The mean over theta vanishes.
    """

    name = "smooth_bump"
    coordinates = "angle"

    def __init__(self, model, amplitude=1.0, m=1, phase=0.0, E_center=None, E_width=None, L_center=None, L_width=None):
        """
        :param gravdamp.steady_state.PolytropeModel model:
        :param float amplitude:
        :param int m: angle mode, nonzero
        :param float phase:
        :param float|None E_center: default halfway between the lowest trapping energy and E0
        :param float|None E_width: default half the energy range
        :param float|None L_center:
        :param float|None L_width: default half the momentum range
        """
        super().__init__(model, amplitude)
        assert m != 0, "smooth_bump: m must be nonzero"
        self.m = m
        self.phase = phase
        _, e_low, _ = minimum_points(model, numpy.array([model.params.L0]))
        e_low = float(e_low[0])
        self.E_center = 0.5 * (e_low + model.E0) if E_center is None else E_center
        self.E_width = 0.5 * (model.E0 - e_low) if E_width is None else E_width
        self.L_center = self._center_momentum(L_center)
        self.L_width = 0.5 * (model.Lmax - model.params.L0) if L_width is None else L_width

    def __call__(self, theta, E, L):
        E, L = numpy.broadcast_arrays(numpy.asarray(E, dtype=float), numpy.asarray(L, dtype=float))
        _, e_min, _ = minimum_points(self.model, L)
        gap = numpy.maximum(E - e_min, 0.0)
        envelope = numpy.exp(-(((E - self.E_center) / self.E_width) ** 2) - ((L - self.L_center) / self.L_width) ** 2)
        wave = numpy.cos(2.0 * math.pi * self.m * numpy.asarray(theta) + self.phase)
        return self.amplitude * wave * gap ** (abs(self.m) / 2.0) * envelope


class PhaseBump(InitialData):
    """
    Gaussian in (r, w, L). Generic: all angle modes are present, including m = 0.
    """

    name = "phase_bump"

    def __init__(
        self, model, amplitude=1.0, r_center=None, w_center=0.1, r_width=None, w_width=0.3, L_center=None, L_width=None
    ):
        """
        :param gravdamp.steady_state.PolytropeModel model:
        :param float amplitude:
        :param float|None r_center: default the middle of [Rmin, Rmax]
        :param float w_center:
        :param float|None r_width: default a quarter of Rmax - Rmin
        :param float w_width:
        :param float|None L_center:
        :param float|None L_width: default half the momentum range
        """
        super().__init__(model, amplitude)
        self.r_center = self._center_radius(r_center)
        self.w_center = w_center
        self.r_width = 0.25 * (model.Rmax - model.Rmin) if r_width is None else r_width
        self.w_width = w_width
        self.L_center = self._center_momentum(L_center)
        self.L_width = 0.5 * (model.Lmax - model.params.L0) if L_width is None else L_width

    def __call__(self, r, w, L):
        arg = ((numpy.asarray(r) - self.r_center) / self.r_width) ** 2
        arg = arg + ((numpy.asarray(w) - self.w_center) / self.w_width) ** 2
        arg = arg + ((numpy.asarray(L) - self.L_center) / self.L_width) ** 2
        return self.amplitude * numpy.exp(-0.5 * arg)


class OddPolynomial(InitialData):
    """
    A w P(r - r_c) Q(L - L0) (E0 - E)_+^p. Odd in w, hence orthogonal to the m = 0 channel and of zero mass.
    """

    name = "odd_polynomial"

    def __init__(self, model, amplitude=1.0, r_coefs=(1.0, 1.0), L_coefs=(1.0,), r_center=None, cutoff_power=0):
        """
        :param gravdamp.steady_state.PolytropeModel model:
        :param float amplitude:
        :param typing.Sequence[float] r_coefs: P, lowest order first
        :param typing.Sequence[float] L_coefs: Q, lowest order first
        :param float|None r_center:
        :param int cutoff_power: p, 0 for no vacuum cutoff
        """
        super().__init__(model, amplitude)
        self.r_coefs = tuple(float(c) for c in r_coefs)
        self.L_coefs = tuple(float(c) for c in L_coefs)
        self.r_center = self._center_radius(r_center)
        self.cutoff_power = cutoff_power

    def __call__(self, r, w, L):
        from numpy.polynomial import polynomial

        r, w, L = numpy.broadcast_arrays(*(numpy.asarray(x, dtype=float) for x in (r, w, L)))
        value = w * polynomial.polyval(r - self.r_center, self.r_coefs)
        value = value * polynomial.polyval(L - self.model.params.L0, self.L_coefs)
        if self.cutoff_power:
            value = value * numpy.maximum(self.model.E0 - self.energy(r, w, L), 0.0) ** self.cutoff_power
        return self.amplitude * value


class LowRegularity(InitialData):
    """
    A cos(2 pi theta) calE^(1/2) (E - E_c)_+^2 Q(L - L0), with calE = E - E_min^L:
    continuously differentiable, with a jump of the second derivative on the energy level E = E_c.
    Even in w, so the m = 1 force does not vanish.
    """

    name = "low_regularity"
    coordinates = "angle"
    regularity = 1.0

    def __init__(self, model, amplitude=1.0, E_center=None, L_coefs=(1.0,)):
        """
        :param gravdamp.steady_state.PolytropeModel model:
        :param float amplitude:
        :param float|None E_center: default halfway between the lowest trapping energy and E0
        :param typing.Sequence[float] L_coefs:
        """
        super().__init__(model, amplitude)
        if E_center is None:
            _, e_low, _ = minimum_points(model, numpy.array([model.params.L0]))
            E_center = 0.5 * (float(e_low[0]) + model.E0)
        self.E_center = E_center
        self.L_coefs = tuple(float(c) for c in L_coefs)

    def __call__(self, theta, E, L):
        from numpy.polynomial import polynomial

        E, L = numpy.broadcast_arrays(numpy.asarray(E, dtype=float), numpy.asarray(L, dtype=float))
        _, e_min, _ = minimum_points(self.model, L)
        gap = numpy.maximum(E - e_min, 0.0)
        kink = numpy.maximum(E - self.E_center, 0.0) ** 2
        wave = numpy.cos(2.0 * math.pi * numpy.asarray(theta))
        momentum = polynomial.polyval(L - self.model.params.L0, self.L_coefs)
        return self.amplitude * wave * numpy.sqrt(gap) * kink * momentum


_initial_data_classes = {
    clazz.name: clazz for clazz in (SmoothBump, PhaseBump, OddPolynomial, LowRegularity)
}  # type: typing.Dict[str, typing.Type[InitialData]]


def get_initial_data_class(name):
    """
    :param str|type name:
    :rtype: type[InitialData]|None
    """
    if isinstance(name, type):
        assert issubclass(name, InitialData)
        return name
    return _initial_data_classes.get(name, None)


def _option_names(clazz):
    params = inspect.signature(clazz.__init__).parameters
    return [key for key in params if key not in ("self", "model")]


def check_initial_data_opts(opts):
    """
    :param dict[str]|callable opts:
    :return: problems as (key path, message)
    :rtype: list[(str,str)]
    """
    if callable(opts) and not isinstance(opts, dict):
        return []
    problems = []
    if "class" not in opts:
        return [("initial_data.class", "missing, expected one of %s" % ", ".join(sorted(_initial_data_classes)))]
    clazz = get_initial_data_class(opts["class"])
    if not clazz:
        return [
            (
                "initial_data.class",
                "unknown %r, expected one of %s" % (opts["class"], ", ".join(sorted(_initial_data_classes))),
            )
        ]
    names = _option_names(clazz)
    for key in opts:
        if key != "class" and key not in names:
            problems.append(("initial_data.%s" % key, "unknown option for %s" % clazz.name))
    if clazz is SmoothBump and opts.get("m", 1) == 0:
        problems.append(("initial_data.m", "must be nonzero"))
    return problems


def init_initial_data(opts, model):
    """
    :param dict[str]|callable|InitialData opts:
    :param gravdamp.steady_state.PolytropeModel model:
    :return: callable initial datum
    :rtype: InitialData|callable
    """
    if isinstance(opts, InitialData) or (callable(opts) and not isinstance(opts, dict)):
        return opts
    assert isinstance(opts, dict) and "class" in opts, "initial_data: expected a dict with 'class', got %r" % (opts,)
    kwargs = dict(opts)
    clazz = get_initial_data_class(kwargs.pop("class"))
    assert clazz, "initial_data class %r not found" % opts["class"]
    obj = clazz(model, **kwargs)
    print("Initial data: %r, coordinates %s, regularity k=%s" % (obj, obj.coordinates, obj.regularity), file=log.v2)
    return obj


def data_regularity(f0):
    """
    :param callable f0:
    :return: k, infinite unless the datum declares otherwise
    :rtype: float
    """
    return float(getattr(f0, "regularity", float("inf")))
