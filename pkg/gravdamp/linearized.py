"""
The linearized Vlasov-Poisson system around the steady state, in mode space:

    d/dt f^(m, I) = -2 pi i m omega(I) (f^(m, I) + eta U^(m, I)),

where U is the potential of the |phi'| f weighted density and U^(m, I) its angle modes along the orbit I.
Integrated with the classical fourth order Runge-Kutta method.
"""

from __future__ import annotations

import collections
import math
import typing
from dataclasses import dataclass

import numpy

from gravdamp.action_angle import OrbitCache
from gravdamp.foliation import vacuum_weight
from gravdamp.log import log
from gravdamp.spectral_field import (
    GreensCache,
    ModeField,
    force_radii,
    modes_from_samples,
    potential_from_force,
    samples_from_modes,
)
from gravdamp.steady_state import RadialProfile
from gravdamp.transport import weighted_norm
from gravdamp.util.basic import GravDampError
from gravdamp.util.numerics import hann_power_fraction

SynthesisMethods = ("orbit", "greens")


class StabilityError(GravDampError):
    """
    Time step above the stability limit of the explicit integrator.
    """


class Diagnostics(typing.NamedTuple):
    """
    Conservation diagnostics at one time.
    """

    time: float
    antonov: float
    mass: float
    zero_mode: float


class LinearizedSystem:
    """
    Everything which stays fixed during a run: model, chart, orbit samples, coupling and
    the data structures of the potential synthesis.
    """

    def __init__(self, model, chart, cache, M_max, synthesis="orbit", n_force_radii=64, dt_fraction=0.2):
        """
        :param gravdamp.steady_state.PolytropeModel model:
        :param gravdamp.action_angle.ActionChart chart:
        :param OrbitCache cache:
        :param int M_max:
        :param str synthesis: "orbit" or "greens"
        :param int n_force_radii: radial grid of the "greens" synthesis
        :param float dt_fraction: largest allowed dt is dt_fraction / (M_max omega_max)
        """
        assert synthesis in SynthesisMethods, "synthesis %r not in %r" % (synthesis, SynthesisMethods)
        assert cache.n_theta >= 2 * M_max + 1
        self.model = model
        self.chart = chart
        self.cache = cache
        self.M_max = M_max
        self.eta = model.params.eta
        self.synthesis = synthesis
        self.dt_fraction = dt_fraction
        self.n_theta = cache.n_theta
        phi = vacuum_weight(model, chart.E, chart.L_grid)
        # T-weighted phase space measure of every node, T dI = d(r, w) dL / dtheta
        self.node_weights = chart.weights * chart.T * phi
        self.omega = chart.omega
        m = numpy.concatenate([numpy.arange(-M_max, 0), numpy.arange(1, M_max + 1)]).astype(float)
        self._rotation = -2j * math.pi * m[:, None, None] * self.omega[None]
        r_flat = cache.r.reshape(-1)
        self._order = numpy.argsort(r_flat, kind="stable")
        self._r_sorted = r_flat[self._order]
        self._sample_weights = numpy.broadcast_to(
            (self.node_weights / self.n_theta)[..., None], cache.r.shape
        ).reshape(-1)[self._order]
        self.greens = None
        if synthesis == "greens":
            self.greens = GreensCache(model, chart, cache, force_radii(model, n_force_radii))

    def __repr__(self):
        return "<LinearizedSystem eta=%r M_max=%i n_theta=%i synthesis=%s>" % (
            self.eta,
            self.M_max,
            self.n_theta,
            self.synthesis,
        )

    @property
    def dt_max(self):
        """
        :rtype: float
        """
        return self.dt_fraction / (self.M_max * self.chart.omega_max)

    def field_samples(self, field):
        """
        :param ModeField field:
        :return: f at the orbit samples, (n_s, n_L, n_theta), real for real fields
        :rtype: numpy.ndarray
        """
        samples = samples_from_modes(field.coefficients, self.n_theta)
        return numpy.real(samples) if field.real else samples

    def potential_samples(self, field):
        """
        U_{|phi'| f} at the orbit samples.

        :param ModeField field:
        :rtype: numpy.ndarray
        """
        if self.synthesis == "greens":
            force = self.greens.force(field, check_real=False)
            profile = potential_from_force(self.model, RadialProfile(self.greens.radii, force), c=0.0)
            return profile(self.cache.r)
        f = self.field_samples(field).reshape(-1)[self._order]
        mass = self._sample_weights * f
        inner = numpy.cumsum(mass)
        shells = numpy.cumsum((mass / self._r_sorted)[::-1])[::-1]
        outer = numpy.concatenate([shells[1:], numpy.zeros(1, dtype=shells.dtype)])
        U_sorted = -4.0 * math.pi**2 * (inner / self._r_sorted + outer)
        U = numpy.empty_like(U_sorted)
        U[self._order] = U_sorted
        return U.reshape(self.cache.r.shape)

    def potential_modes(self, field):
        """
        :param ModeField field:
        :return: U^(m, I), same layout as the field coefficients
        :rtype: numpy.ndarray
        """
        coefficients, _ = modes_from_samples(self.potential_samples(field), self.M_max, real=field.real)
        return coefficients

    def rhs(self, field):
        """
        :param ModeField field:
        :rtype: ModeField
        """
        if self.eta == 0:
            return field.like(self._rotation * field.coefficients)
        U = self.potential_modes(field)
        return field.like(self._rotation * (field.coefficients + self.eta * U))

    def antonov_norm(self, field):
        """
        sum_m int |phi'| T (|f^|^2 + eta Re(U^ conj f^)) dI, conserved by the exact flow.

        :param ModeField field:
        :rtype: float
        """
        f = field.coefficients
        value = numpy.abs(f) ** 2
        if self.eta != 0:
            value = value + self.eta * numpy.real(self.potential_modes(field) * numpy.conj(f))
        return float(numpy.sum(self.node_weights[None] * value))

    def total_mass(self, field):
        """
        4 pi^2 int |phi'| f d(r, w, L) of the synthesized samples.

        :param ModeField field:
        :rtype: float
        """
        f = self.field_samples(field)
        return float(numpy.real(4.0 * math.pi**2 * numpy.sum(self.node_weights * numpy.mean(f, axis=-1))))

    def zero_mode_residual(self, field):
        """
        :param ModeField field:
        :return: max over the nodes of the orbit average of the synthesized samples
        :rtype: float
        """
        return float(numpy.max(numpy.abs(numpy.mean(self.field_samples(field), axis=-1))))

    def diagnostics(self, state):
        """
        :param SimState state:
        :rtype: Diagnostics
        """
        return Diagnostics(
            state.time,
            self.antonov_norm(state.field),
            self.total_mass(state.field),
            self.zero_mode_residual(state.field),
        )


@dataclass(frozen=True)
class Snapshot:
    """
    Immutable copy of a :class:`SimState`, as given to the observers.
    """

    time: float
    field: ModeField
    diagnostics: typing.Tuple[Diagnostics, ...]


class SimState:
    """
    Mutable state of the stepping loop.
    """

    def __init__(self, system, field, time=0.0, max_diagnostics=1000):
        """
        :param LinearizedSystem system:
        :param ModeField field:
        :param float time:
        :param int max_diagnostics: length of the diagnostics ring
        """
        self.system = system
        self.field = field
        self.time = time
        self.potential = None  # type: typing.Optional[RadialProfile]
        self.diagnostics = collections.deque(maxlen=max_diagnostics)

    def __repr__(self):
        return "<SimState t=%r %r>" % (self.time, self.field)

    def snapshot(self):
        """
        :rtype: Snapshot
        """
        return Snapshot(self.time, self.field.like(self.field.coefficients.copy()), tuple(self.diagnostics))

    def record(self):
        """
        Appends the current diagnostics to the ring.

        :rtype: Diagnostics
        """
        d = self.system.diagnostics(self)
        self.diagnostics.append(d)
        return d


def potential_modes(model, chart, modefield, synthesis="orbit", cache=None, system=None):
    """
    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param ModeField modefield:
    :param str synthesis: "orbit" or "greens"
    :param OrbitCache|None cache:
    :param LinearizedSystem|None system:
    :return: U^(m, I), same layout as the field coefficients
    :rtype: numpy.ndarray
    """
    if system is None:
        cache = cache or OrbitCache(chart, n_theta=4 * modefield.M_max)
        system = LinearizedSystem(model, chart, cache, modefield.M_max, synthesis=synthesis)
    return system.potential_modes(modefield)


def rhs(state):
    """
    :param SimState state:
    :rtype: ModeField
    """
    return state.system.rhs(state.field)


def step(state, dt):
    """
    One classical Runge-Kutta step, in place.

    :param SimState state:
    :param float dt:
    :return: state
    :rtype: SimState
    """
    system = state.system
    if dt > system.dt_max * (1.0 + 1e-12):
        raise StabilityError(
            "dt=%r above the stability limit %r = %r / (M_max omega_max)" % (dt, system.dt_max, system.dt_fraction)
        )
    f = state.field
    k1 = system.rhs(f)
    k2 = system.rhs(f + (0.5 * dt) * k1)
    k3 = system.rhs(f + (0.5 * dt) * k2)
    k4 = system.rhs(f + dt * k3)
    state.field = f + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    state.time += dt
    state.potential = None
    return state


def antonov_norm(state):
    """
    :param SimState state:
    :rtype: float
    """
    return state.system.antonov_norm(state.field)


def total_mass(state):
    """
    :param SimState state:
    :rtype: float
    """
    return state.system.total_mass(state.field)


def zero_mode_residual(state):
    """
    :param SimState state:
    :rtype: float
    """
    return state.system.zero_mode_residual(state.field)


class RunOutput(typing.NamedTuple):
    """
    Result of :func:`run`.
    """

    times: numpy.ndarray  # (n_out,)
    radii: numpy.ndarray  # (n_R,)
    forces: numpy.ndarray  # (n_out, n_R)
    diagnostics: typing.List[Diagnostics]
    snapshots: typing.Dict[float, Snapshot]
    dt: float


def save_checkpoint(state, filename):
    """
    :param SimState state:
    :param str filename: HDF5
    """
    from gravdamp.util.hdf import save_arrays

    save_arrays(
        filename,
        {"coefficients": state.field.coefficients},
        attrs={"kind": "sim_state", "time": state.time, "real": state.field.real},
    )


def load_checkpoint(filename, system):
    """
    :param str filename:
    :param LinearizedSystem system:
    :rtype: SimState
    """
    from gravdamp.util.hdf import load_arrays

    arrays, attrs = load_arrays(filename)
    assert attrs.get("kind") == "sim_state", "%r is not a checkpoint" % filename
    field = ModeField(arrays["coefficients"], system.chart, real=bool(attrs["real"]))
    return SimState(system, field, time=float(attrs["time"]))


def run(
    system,
    field0,
    t_end,
    output_interval=0.5,
    radii=None,
    snapshot_times=(),
    observers=(),
    checkpoint_interval=0.0,
    checkpoint_file=None,
    state=None,
):
    """
    Integrates up to t_end with a fixed step, which divides output_interval.

    :param LinearizedSystem system:
    :param ModeField field0:
    :param float t_end:
    :param float output_interval: forces and diagnostics are recorded at its multiples
    :param numpy.ndarray|None radii: force radii, default 64 Chebyshev points
    :param typing.Sequence[float] snapshot_times: must be multiples of output_interval
    :param typing.Sequence[(Snapshot)->None] observers: called at every output time
    :param float checkpoint_interval: 0 disables
    :param str|None checkpoint_file:
    :param SimState|None state: resume from here instead of field0 at t=0
    :rtype: RunOutput
    """
    if radii is None:
        radii = force_radii(system.model, 64)
    radii = numpy.asarray(radii, dtype=float)
    greens = GreensCache(system.model, system.chart, system.cache, radii)
    on_rim = abs(radii[-1] - system.model.Rmax) <= 1e-12 * system.model.Rmax
    n_sub = int(math.ceil(output_interval / system.dt_max * (1.0 - 1e-12)))
    dt = output_interval / n_sub
    if state is None:
        state = SimState(system, field0)
    k0 = int(round(state.time / output_interval))
    n_out = int(round(t_end / output_interval))
    snapshot_steps = {int(round(t / output_interval)): t for t in snapshot_times}
    for k, t in snapshot_steps.items():
        if abs(k * output_interval - t) > 1e-9 * max(1.0, t):
            log.print_warning(
                "snapshot time %r is not a multiple of %r, using %r" % (t, output_interval, k * output_interval)
            )
    ckpt_every = int(round(checkpoint_interval / output_interval)) if checkpoint_interval else 0
    print("run %r: dt=%r (%i steps per output), t_end=%r" % (system, dt, n_sub, t_end), file=log.v2)
    times, forces, snapshots = [], [], {}

    def output(k):
        times.append(state.time)
        force = greens.force(state.field, check_real=False).real
        forces.append(force)
        if on_rim:
            state.potential = potential_from_force(system.model, RadialProfile(radii, force), c=0.0)
        d = state.record()
        print("t=%.4f antonov=%.15e mass=%.3e zero=%.3e" % (d.time, d.antonov, d.mass, d.zero_mode), file=log.v4)
        if k in snapshot_steps or observers:
            snap = state.snapshot()
            if k in snapshot_steps:
                snapshots[snapshot_steps[k]] = snap
            for observer in observers:
                observer(snap)
        if ckpt_every and checkpoint_file and k % ckpt_every == 0 and k > k0:
            save_checkpoint(state, checkpoint_file)

    output(k0)
    for k in range(k0 + 1, n_out + 1):
        for _ in range(n_sub):
            step(state, dt)
        # no drift from summing dt
        state.time = k * output_interval
        output(k)
    d0, d1 = state.diagnostics[0], state.diagnostics[-1]
    print(
        "run done: t=%r, Antonov drift %.3e relative" % (state.time, abs(d1.antonov - d0.antonov) / abs(d0.antonov)),
        file=log.v2,
    )
    return RunOutput(numpy.array(times), radii, numpy.array(forces), list(state.diagnostics), snapshots, dt)


def spectral_gap_check(signal, dt, lambda_min, gap_fraction=1.0):
    """
    :param numpy.ndarray signal: force at fixed R, uniformly sampled
    :param float dt: sampling interval
    :param float lambda_min: 2 pi omega_min
    :param float gap_fraction:
    :return: fraction of the Hann windowed power with |lambda| < gap_fraction lambda_min
    :rtype: float
    """
    return hann_power_fraction(signal, dt, gap_fraction * lambda_min)


def back_rotate(field, t):
    """
    g(t) = exp(+2 pi i m omega t) f^(t), the field seen along the unperturbed flow.

    :param ModeField field:
    :param float t:
    :rtype: ModeField
    """
    m = field.mode_numbers()
    return field.like(field.coefficients * numpy.exp(2j * math.pi * m * t * field.chart.omega[None]))


def scattering_profile(model, run_output, times):
    """
    ||g(2t) - g(t)|| in the |phi'| weighted norm, for each t where both snapshots exist.

    :param gravdamp.steady_state.PolytropeModel model:
    :param RunOutput run_output:
    :param typing.Sequence[float] times:
    :return: list of (t, increment)
    :rtype: list[(float,float)]
    """
    out = []
    for t in times:
        a, b = run_output.snapshots.get(t), run_output.snapshots.get(2 * t)
        if a is None or b is None:
            log.print_warning("scattering_profile: no snapshots at t=%r and 2t" % t)
            continue
        diff = back_rotate(b.field, b.time) - back_rotate(a.field, a.time)
        out.append((t, weighted_norm(model, diff)))
    return out
