"""
The pure transport flow d_t f + omega d_theta f = 0, solved exactly in mode space,
and the measurement of the algebraic decay of its gravitational force.
"""

from __future__ import annotations

import math
import typing

import numpy

from gravdamp.action_angle import OrbitCache
from gravdamp.foliation import vacuum_weight
from gravdamp.log import log
from gravdamp.spectral_field import GreensCache, ModeField, analyze
from gravdamp.util.basic import parallel_map
from gravdamp.util.numerics import fit_power_law


def _phases(chart, M_max, t):
    """
    :return: exp(-2 pi i m t omega) for m = 1 .. M_max, shape (M_max, n_s, n_L)
    """
    m = numpy.arange(1, M_max + 1, dtype=float)[:, None, None]
    return numpy.exp(-2j * math.pi * m * t * chart.omega[None])


def evolve_pure_transport(modefield0, chart, t):
    """
    f^(t, m, I) = exp(-2 pi i m t omega(I)) f^0(m, I).

    :param ModeField modefield0:
    :param gravdamp.action_angle.ActionChart chart:
    :param float t: >= 0
    :rtype: ModeField
    """
    assert t >= 0, "t=%r < 0" % t
    M = modefield0.M_max
    phase = _phases(chart, M, t)
    # negative modes get the conjugate phase, so real data stays exactly real
    coefficients = numpy.concatenate(
        [modefield0.negative()[::-1] * numpy.conj(phase[::-1]), modefield0.positive() * phase], axis=0
    )
    return modefield0.like(coefficients)


def weighted_norm(model, modefield):
    """
    sqrt(sum_m int |phi'| |f^(m)|^2 dI). Conserved exactly by the transport flow.

    :param gravdamp.steady_state.PolytropeModel model:
    :param ModeField modefield:
    :rtype: float
    """
    chart = modefield.chart
    return modefield.weighted_norm(vacuum_weight(model, chart.E, chart.L_grid) * chart.weights)


def transport_force_series(
    model, chart, f0, times, R_grid, num_threads=1, M_max=32, n_theta=128, cache=None, greens=None, chunk=8
):
    """
    d_R U of the transported data at the given times and radii.

    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param ModeField|callable f0: initial data, or its modes
    :param numpy.ndarray times:
    :param numpy.ndarray R_grid:
    :param int num_threads:
    :param int M_max:
    :param int n_theta:
    :param OrbitCache|None cache:
    :param GreensCache|None greens:
    :param int chunk: times per work item
    :return: (n_t, n_R)
    :rtype: numpy.ndarray
    """
    if isinstance(f0, ModeField):
        field0 = f0
    else:
        if cache is None:
            cache = OrbitCache(chart, n_theta=n_theta)
        field0 = analyze(model, chart, f0, M_max=M_max, n_theta=n_theta, cache=cache)
    if greens is None:
        greens = GreensCache(model, chart, cache or OrbitCache(chart, n_theta=4 * field0.M_max), R_grid)
    times = numpy.asarray(times, dtype=float)
    pos = field0.positive()
    neg = field0.negative()
    m = numpy.arange(1, field0.M_max + 1, dtype=float)[:, None, None, None]

    def work(ts):
        phase = numpy.exp(-2j * math.pi * m * chart.omega[None, ..., None] * ts[None, None, None, :])
        pair = pos[..., None] * phase + neg[..., None] * numpy.conj(phase)
        total, _ = greens.mass_moments(pair)  # (n_R, n_ts)
        force = 4.0 * math.pi * total / greens.radii[:, None] ** 2
        return numpy.real(force).T if field0.real else force.T

    blocks = [times[i : i + chunk] for i in range(0, len(times), chunk)]
    results = parallel_map(work, blocks, num_threads=num_threads)
    series = numpy.concatenate(results, axis=0) if results else numpy.zeros((0, len(greens.radii)))
    print("transport force series: %i times x %i radii" % series.shape, file=log.v3)
    return series


def decay_time_grid(t_start, t_end, rho=1.15, oversample=8):
    """
    Geometric base times t_j = t_start rho^j up to t_end, each interval subdivided uniformly.

    :param float t_start: > 0
    :param float t_end:
    :param float rho: > 1
    :param int oversample: subintervals per base interval
    :rtype: numpy.ndarray
    """
    assert t_start > 0 and t_end > t_start and rho > 1
    n = int(math.ceil(math.log(t_end / t_start) / math.log(rho)))
    base = t_start * rho ** numpy.arange(n + 1)
    base[-1] = t_end
    pieces = [numpy.linspace(a, b, oversample, endpoint=False) for a, b in zip(base[:-1], base[1:])]
    return numpy.concatenate(pieces + [base[-1:]])


class DecayFit(typing.NamedTuple):
    """
    Fitted sup_R |d_R U| ~ C (1+t)^(-exponent).
    """

    exponent: float
    residual: float
    method: str  # "direct" or "envelope"
    intercept: float
    n_points: int


def block_maxima(times, values, t_lo, t_hi, ratio=2.0, min_block=0.0):
    """
    :param numpy.ndarray times:
    :param numpy.ndarray values:
    :param float t_lo:
    :param float t_hi:
    :param float ratio: block [a, ratio a)
    :param float min_block: blocks are at least this long, e.g. one period of the slowest oscillation
    :return: times and values of the maximum in each block
    :rtype: (numpy.ndarray, numpy.ndarray)
    """
    out_t, out_v = [], []
    a = t_lo
    while a < t_hi:
        b = min(max(a * ratio, a + min_block), t_hi)
        sel = (times >= a) & ((times < b) if b < t_hi else (times <= b))
        if numpy.any(sel):
            i = numpy.argmax(numpy.where(sel, values, -numpy.inf))
            out_t.append(times[i])
            out_v.append(values[i])
        a = b
    return numpy.array(out_t), numpy.array(out_v)


def fit_decay_rate(
    series, times, t_window=(20.0, 200.0), residual_threshold=0.1, block_ratio=math.sqrt(2.0), min_block=0.0
):
    """
    Least squares of log sup_R |d_R U| against log(1+t) in the window.
    If the residual is above threshold (oscillation dominated), fit the block maxima instead.
    The blocks grow geometrically by block_ratio, but are never shorter than min_block.

    :param numpy.ndarray series: (n_t, n_R), or (n_t,) already reduced over R
    :param numpy.ndarray times:
    :param (float,float) t_window:
    :param float residual_threshold: RMS in log space
    :param float block_ratio:
    :param float min_block:
    :rtype: DecayFit
    """
    series = numpy.asarray(series)
    times = numpy.asarray(times, dtype=float)
    sup = numpy.abs(series) if series.ndim == 1 else numpy.max(numpy.abs(series), axis=1)
    t_lo, t_hi = t_window
    sel = (times >= t_lo) & (times <= t_hi)
    assert numpy.count_nonzero(sel) >= 2, "fit window %r has less than two samples" % (t_window,)
    fit = fit_power_law(1.0 + times[sel], sup[sel])
    result = DecayFit(-fit.slope, fit.residual, "direct", fit.intercept, fit.n_points)
    if fit.residual > residual_threshold:
        bt, bv = block_maxima(times, sup, t_lo, t_hi, ratio=block_ratio, min_block=min_block)
        if len(bt) >= 2:
            env = fit_power_law(1.0 + bt, bv)
            result = DecayFit(-env.slope, env.residual, "envelope", env.intercept, env.n_points)
            if len(bt) < 5:
                log.print_warning("fit_decay_rate: envelope fit through only %i block maxima" % len(bt))
        else:
            log.print_warning("fit_decay_rate: oscillating series, but too few blocks for an envelope fit")
    print(
        "decay fit (%s): exponent %.4f, residual %.3e, %i points"
        % (result.method, result.exponent, result.residual, result.n_points),
        file=log.v3,
    )
    return result
