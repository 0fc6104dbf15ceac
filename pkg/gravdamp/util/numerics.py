"""
Quadrature rules, vectorized root bracketing and log-log fits,
shared by the physics modules.
"""

from __future__ import annotations

import functools
import typing

import numpy
from numpy.polynomial import legendre
from scipy import special


@functools.lru_cache(maxsize=64)
def _leggauss(n):
    x, w = legendre.leggauss(n)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def gauss_legendre(n, a=-1.0, b=1.0):
    """
    :param int n: number of nodes
    :param float a:
    :param float b:
    :return: nodes, weights on [a,b]
    :rtype: (numpy.ndarray, numpy.ndarray)
    """
    x, w = _leggauss(n)
    half = 0.5 * (b - a)
    return a + half * (x + 1.0), half * w


@functools.lru_cache(maxsize=64)
def gauss_jacobi(n, alpha, beta):
    """
    Nodes and weights for weight function (1-x)^alpha (1+x)^beta on [-1,1].

    :param int n:
    :param float alpha:
    :param float beta:
    :rtype: (numpy.ndarray, numpy.ndarray)
    """
    x, w = special.roots_jacobi(n, alpha, beta)
    x.setflags(write=False)
    w.setflags(write=False)
    return x, w


def chebyshev_lobatto(n, a, b):
    """
    :param int n: number of points, >= 2
    :param float a:
    :param float b:
    :return: increasing points on [a,b], clustered at both ends, including the end points exactly
    :rtype: numpy.ndarray
    """
    assert n >= 2
    x = 0.5 * (a + b) - 0.5 * (b - a) * numpy.cos(numpy.pi * numpy.arange(n) / (n - 1))
    x[0], x[-1] = a, b
    return x


def trapezoid_weights(x):
    """
    :param numpy.ndarray x: increasing nodes
    :return: weights w such that sum(w*f) is the trapezoidal rule
    :rtype: numpy.ndarray
    """
    x = numpy.asarray(x, dtype=float)
    w = numpy.zeros_like(x)
    if len(x) < 2:
        return w
    dx = numpy.diff(x)
    w[:-1] += 0.5 * dx
    w[1:] += 0.5 * dx
    return w


def tail_integration_matrix(x):
    """
    :param numpy.ndarray x: increasing nodes x_0 < ... < x_{n-1}
    :return: matrix C with (C f)_k = trapezoid of f over [x_k, x_{n-1}]
    :rtype: numpy.ndarray
    """
    x = numpy.asarray(x, dtype=float)
    n = len(x)
    dx = numpy.diff(x)
    c = numpy.zeros((n, n))
    for k in range(n - 1):
        c[k, k:-1] += 0.5 * dx[k:]
        c[k, k + 1 :] += 0.5 * dx[k:]
    return c


def bisect_vectorized(func, lo, hi, rtol=4e-16, max_iter=200):
    """
    Bisection for many independent scalar roots at once.
    func(lo) and func(hi) must have opposite signs elementwise.

    :param (numpy.ndarray)->numpy.ndarray func: elementwise function
    :param numpy.ndarray lo:
    :param numpy.ndarray hi:
    :param float rtol: relative bracket width at which we stop
    :param int max_iter:
    :return: roots, same shape as lo
    :rtype: numpy.ndarray
    """
    lo = numpy.array(lo, dtype=float, copy=True)
    hi = numpy.array(hi, dtype=float, copy=True)
    f_lo = func(lo)
    f_hi = func(hi)
    bad = numpy.sign(f_lo) * numpy.sign(f_hi) > 0
    assert not numpy.any(bad), "bisect_vectorized: root not bracketed at %r" % (numpy.flatnonzero(bad)[:5],)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        f_mid = func(mid)
        same = numpy.sign(f_mid) == numpy.sign(f_lo)
        lo = numpy.where(same, mid, lo)
        f_lo = numpy.where(same, f_mid, f_lo)
        hi = numpy.where(same, hi, mid)
        if numpy.all(numpy.abs(hi - lo) <= rtol * numpy.maximum(numpy.abs(lo), numpy.abs(hi))):
            break
    return 0.5 * (lo + hi)


class PowerLawFit(typing.NamedTuple):
    """
    Result of :func:`fit_power_law`: y ~ exp(intercept) * x^slope.
    """

    slope: float
    intercept: float
    residual: float  # RMS of the log-space residuals
    n_points: int


def fit_power_law(x, y):
    """
    Least squares line through (log x, log y).

    :param numpy.ndarray x: positive
    :param numpy.ndarray y: positive
    :rtype: PowerLawFit
    """
    x = numpy.asarray(x, dtype=float)
    y = numpy.asarray(y, dtype=float)
    mask = (x > 0) & (y > 0) & numpy.isfinite(x) & numpy.isfinite(y)
    assert numpy.count_nonzero(mask) >= 2, "fit_power_law: need at least two positive points"
    lx, ly = numpy.log(x[mask]), numpy.log(y[mask])
    slope, intercept = numpy.polyfit(lx, ly, 1)
    residual = float(numpy.sqrt(numpy.mean((ly - (slope * lx + intercept)) ** 2)))
    return PowerLawFit(float(slope), float(intercept), residual, int(numpy.count_nonzero(mask)))


def hann_power_fraction(signal, dt, cutoff):
    """
    :param numpy.ndarray signal: real, uniformly sampled
    :param float dt: sample spacing
    :param float cutoff: angular frequency
    :return: fraction of the Hann-windowed power with angular frequency below cutoff
    :rtype: float
    """
    signal = numpy.asarray(signal, dtype=float)
    n = len(signal)
    window = numpy.hanning(n)
    spectrum = numpy.abs(numpy.fft.rfft(window * signal)) ** 2
    lam = 2.0 * numpy.pi * numpy.fft.rfftfreq(n, d=dt)
    total = float(numpy.sum(spectrum))
    if total == 0.0:
        return 0.0
    return float(numpy.sum(spectrum[lam < cutoff]) / total)
