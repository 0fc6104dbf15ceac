"""
Fourier analysis in the angle variable.

A perturbation f(theta, I) is represented by its modes f^(m, I), m = +-1 .. +-M_max, on the nodes of an
:class:`gravdamp.action_angle.ActionChart`. The m = 0 mode (the orbit average) is not part of the
dynamics and is projected out.

The gravitational force of the |phi'| f weighted density is synthesized from the modes by

    d_R U(R) = (4 pi / R^2) sum_{m != 0} (1/m) int_{E >= Psi_L(R)} |phi'| f^(m, I) sin(2 pi m theta(R, I)) T dI,

where theta(R, I) in [0, 1/2] is the angle at which the orbit I passes through R.
"""

from __future__ import annotations

import math

import numpy
from scipy import integrate, interpolate

from gravdamp.action_angle import OrbitCache, angle, period, turning_points
from gravdamp.foliation import vacuum_weight
from gravdamp.log import log
from gravdamp.steady_state import RadialProfile, effective_potential, effective_potential_derivative
from gravdamp.util.basic import GravDampError
from gravdamp.util.numerics import (
    chebyshev_lobatto,
    fit_power_law,
    gauss_jacobi,
    gauss_legendre,
)


class OrthogonalityError(GravDampError):
    """
    The data has an orbit average (m = 0 content) above the tolerance, in strict mode.
    """


class ModeField:
    """
    Complex coefficients of shape (2 M_max, n_s, n_L), ordered m = -M_max .. -1, 1 .. M_max.
    Treat as immutable. The arithmetic returns new instances.
    """

    def __init__(self, coefficients, chart, real=True):
        """
        :param numpy.ndarray coefficients:
        :param gravdamp.action_angle.ActionChart chart:
        :param bool real: whether this represents real data, i.e. f^(-m) = conj f^(m)
        """
        self.coefficients = numpy.asarray(coefficients, dtype=complex)
        assert self.coefficients.ndim == 3 and self.coefficients.shape[0] % 2 == 0
        assert self.coefficients.shape[1:] == chart.shape, "coefficients %r do not match %r" % (
            self.coefficients.shape,
            chart,
        )
        self.chart = chart
        self.real = real
        self.M_max = self.coefficients.shape[0] // 2
        self.modes = numpy.concatenate([numpy.arange(-self.M_max, 0), numpy.arange(1, self.M_max + 1)])
        self.zero_mode = 0.0  # max |f^(0)| of the data this was analyzed from

    def __repr__(self):
        kind = "" if self.real else " complex"
        return "<ModeField M_max=%i on %ix%i%s>" % ((self.M_max,) + self.chart.shape + (kind,))

    def index(self, m):
        """
        :param int m: nonzero, |m| <= M_max
        :rtype: int
        """
        assert m != 0 and abs(m) <= self.M_max, "mode %r out of range" % m
        return m + self.M_max if m < 0 else m + self.M_max - 1

    def get(self, m):
        """
        :param int m:
        :return: f^(m, .), shape (n_s, n_L)
        :rtype: numpy.ndarray
        """
        return self.coefficients[self.index(m)]

    def positive(self):
        """
        :return: modes m = 1 .. M_max, shape (M_max, n_s, n_L)
        :rtype: numpy.ndarray
        """
        return self.coefficients[self.M_max :]

    def negative(self):
        """
        :return: modes m = -1 .. -M_max (in that order), shape (M_max, n_s, n_L)
        :rtype: numpy.ndarray
        """
        return self.coefficients[self.M_max - 1 :: -1]

    def pair_sums(self):
        """
        :return: f^(m) + f^(-m) for m = 1 .. M_max. This is what the force sees.
        :rtype: numpy.ndarray
        """
        return self.positive() + self.negative()

    def mode_numbers(self):
        """
        :return: m as shape (2 M_max, 1, 1), for broadcasting against the coefficients
        :rtype: numpy.ndarray
        """
        return self.modes[:, None, None].astype(float)

    def weighted_norm(self, weights):
        """
        :param numpy.ndarray weights: (n_s, n_L), e.g. |phi'| times the chart quadrature weights
        :rtype: float
        """
        return float(numpy.sqrt(numpy.sum(weights[None] * numpy.abs(self.coefficients) ** 2)))

    def conjugate_defect(self):
        """
        :return: max |f^(-m) - conj f^(m)|
        :rtype: float
        """
        return float(numpy.max(numpy.abs(self.negative() - numpy.conj(self.positive())), initial=0.0))

    def like(self, coefficients, real=None):
        """
        :param numpy.ndarray coefficients:
        :param bool|None real:
        :rtype: ModeField
        """
        return ModeField(coefficients, self.chart, real=self.real if real is None else real)

    def __add__(self, other):
        assert isinstance(other, ModeField) and other.M_max == self.M_max
        return self.like(self.coefficients + other.coefficients, real=self.real and other.real)

    def __sub__(self, other):
        assert isinstance(other, ModeField) and other.M_max == self.M_max
        return self.like(self.coefficients - other.coefficients, real=self.real and other.real)

    def __mul__(self, scalar):
        real = self.real and numpy.isrealobj(scalar)
        return self.like(self.coefficients * scalar, real=real)

    __rmul__ = __mul__

    def save(self, filename):
        """
        :param str filename: HDF5
        """
        from gravdamp.util.hdf import save_arrays

        save_arrays(filename, {"coefficients": self.coefficients}, attrs={"kind": "mode_field", "real": self.real})

    @classmethod
    def load(cls, filename, chart):
        """
        :param str filename:
        :param gravdamp.action_angle.ActionChart chart:
        :rtype: ModeField
        """
        from gravdamp.util.hdf import load_arrays

        arrays, attrs = load_arrays(filename)
        assert attrs.get("kind") == "mode_field", "%r is not a mode field file" % filename
        return cls(arrays["coefficients"], chart, real=bool(attrs["real"]))


def sample_orbits(chart, cache, f0):
    """
    :param gravdamp.action_angle.ActionChart chart:
    :param OrbitCache cache:
    :param f0: callable of (r, w, L), or of (theta, E, L) if ``f0.coordinates == "angle"``
    :return: f0 at the cached orbit samples, shape (n_s, n_L, n_theta)
    :rtype: numpy.ndarray
    """
    if getattr(f0, "coordinates", "phase") == "angle":
        values = f0(cache.theta[None, None, :], chart.E[..., None], chart.L_grid[..., None])
    else:
        values = f0(cache.r, cache.w, chart.L_grid[..., None])
    return numpy.broadcast_to(values, cache.r.shape)


def modes_from_samples(samples, M_max, real=None):
    """
    :param numpy.ndarray samples: (..., n_theta) at theta = k / n_theta
    :param int M_max:
    :param bool|None real: if None, decided from the dtype
    :return: coefficients (2 M_max, ...) ordered like :class:`ModeField`, and the m = 0 coefficient
    :rtype: (numpy.ndarray, numpy.ndarray)
    """
    n_theta = samples.shape[-1]
    assert n_theta >= 2 * M_max + 1, "n_theta=%i too small for M_max=%i" % (n_theta, M_max)
    if real is None:
        real = numpy.isrealobj(samples)
    if real:
        spec = numpy.fft.rfft(numpy.real(samples), axis=-1) / n_theta
        pos = numpy.moveaxis(spec[..., 1 : M_max + 1], -1, 0)
        neg = numpy.conj(pos[::-1])
        zero = numpy.real(spec[..., 0])
    else:
        spec = numpy.fft.fft(samples, axis=-1) / n_theta
        pos = numpy.moveaxis(spec[..., 1 : M_max + 1], -1, 0)
        neg = numpy.moveaxis(spec[..., n_theta - M_max :], -1, 0)
        zero = spec[..., 0]
    return numpy.concatenate([neg, pos], axis=0), zero


def samples_from_modes(coefficients, n_theta):
    """
    Inverse of :func:`modes_from_samples` (without the m = 0 mode).

    :param numpy.ndarray coefficients: (2 M_max, ...)
    :param int n_theta:
    :return: (..., n_theta), complex
    :rtype: numpy.ndarray
    """
    M_max = coefficients.shape[0] // 2
    spec = numpy.zeros(coefficients.shape[1:] + (n_theta,), dtype=complex)
    spec[..., 1 : M_max + 1] = numpy.moveaxis(coefficients[M_max:], 0, -1)
    spec[..., n_theta - M_max :] = numpy.moveaxis(coefficients[:M_max], 0, -1)
    return numpy.fft.ifft(spec, axis=-1) * n_theta


def analyze(model, chart, f0, M_max=32, n_theta=128, strict=False, tol=1e-10, cache=None):
    """
    Samples f0 along the cached orbits and takes the discrete Fourier transform in theta.
    Conjugate symmetry is enforced for real data. The m = 0 content is reported and dropped.

    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param f0: see :func:`sample_orbits`
    :param int M_max:
    :param int n_theta: >= 4 M_max
    :param bool strict: raise OrthogonalityError if the m = 0 content is above tol
    :param float tol: relative to max |f0|
    :param OrbitCache|None cache:
    :rtype: ModeField
    """
    assert n_theta >= 4 * M_max, "n_theta=%i < 4 M_max=%i" % (n_theta, 4 * M_max)
    if cache is None or cache.n_theta != n_theta:
        cache = OrbitCache(chart, n_theta=n_theta)
    samples = sample_orbits(chart, cache, f0)
    coefficients, zero = modes_from_samples(samples, M_max)
    scale = float(numpy.max(numpy.abs(samples), initial=0.0))
    zero_mode = float(numpy.max(numpy.abs(zero), initial=0.0))
    field = ModeField(coefficients, chart, real=numpy.isrealobj(samples))
    field.zero_mode = zero_mode
    print("analyze: %r, m=0 content %.3e (max |f0| %.3e)" % (field, zero_mode, scale), file=log.v3)
    if zero_mode > tol * max(scale, 1e-300):
        if strict:
            raise OrthogonalityError(
                "initial data has orbit average %.6e (relative %.3e) above tol=%r" % (zero_mode, zero_mode / scale, tol)
            )
        log.print_warning("initial data has orbit average %.3e, projected out" % zero_mode)
    return field


def greens_mode(model, chart, R, m, E, L):
    """
    (1/(pi m)) sin(2 pi m theta(R, I)) if E >= Psi_L(R), else 0.

    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart|None chart: unused, the angle is computed directly
    :param float R:
    :param int m: nonzero
    :param numpy.ndarray|float E:
    :param numpy.ndarray|float L:
    :rtype: numpy.ndarray|float
    """
    assert m != 0
    E, L = numpy.broadcast_arrays(numpy.asarray(E, dtype=float), numpy.asarray(L, dtype=float))
    z = E - effective_potential(model, R, L)
    inside = z >= 0
    out = numpy.zeros(E.shape)
    if numpy.any(inside):
        w = numpy.sqrt(2.0 * z[inside])
        theta = numpy.asarray(angle(model, numpy.full(w.shape, float(R)), w, L[inside]))
        out[inside] = numpy.sin(2.0 * math.pi * m * theta) / (math.pi * m)
    return out[()]


def orbit_indicator_modes(model, R, E, L, m_max):
    """
    Fourier coefficients of theta -> [r(theta, I) <= R] along one orbit, computed exactly from the
    crossing times of the integrated orbit. Used to check :func:`greens_mode` independently.

    :param gravdamp.steady_state.PolytropeModel model:
    :param float R: inside (r_-, r_+)
    :param float E:
    :param float L:
    :param int m_max:
    :return: coefficients for m = 1 .. m_max, and the crossing angles
    :rtype: (numpy.ndarray, (float, float))
    """
    r_m, r_p = turning_points(model, E, L)
    assert r_m < R < r_p, "R=%r not inside (%r, %r)" % (R, r_m, r_p)
    T = float(period(model, E, L))

    def rhs(t, y):
        return [y[1], -float(effective_potential_derivative(model, y[0], L))]

    def crossing(t, y):
        return y[0] - R

    sol = integrate.solve_ivp(
        rhs, (0.0, T), [float(r_m), 0.0], method="DOP853", rtol=1e-12, atol=1e-12, events=crossing
    )
    times = sol.t_events[0]
    assert len(times) == 2, "expected two crossings of R=%r, got %r" % (R, times)
    theta_out, theta_in = times[0] / T, times[1] / T
    m = numpy.arange(1, m_max + 1)
    k = 2j * math.pi * m
    # [0, theta_out] and [theta_in, 1] are inside R
    coef = (1.0 - numpy.exp(-k * theta_out)) / k + (numpy.exp(-k * theta_in) - 1.0) / k
    return coef, (theta_out, theta_in)


class GreensCache:
    """
    For a set of radii: theta(R, I) at every chart node, and the quadrature weights of
    int_{E >= Psi_L(R)} ... T |phi'| dI. Column-wise trapezoid in E, where the partial first cell
    [Psi_L(R), E_i0] uses the sqrt(E - Psi_L(R)) behaviour of the integrand.
    Arrays have shape (n_R, n_s * n_L).
    """

    def __init__(self, model, chart, cache, radii):
        """
        :param gravdamp.steady_state.PolytropeModel model:
        :param gravdamp.action_angle.ActionChart chart:
        :param OrbitCache cache:
        :param numpy.ndarray radii: increasing, inside [Rmin, Rmax]
        """
        self.model = model
        self.chart = chart
        self.cache = cache
        self.radii = numpy.asarray(radii, dtype=float)
        n_R = len(self.radii)
        theta, inside = cache.theta_at_radius(self.radii)
        E = chart.E
        psi = effective_potential(model, self.radii[:, None], chart.L[None, :])  # (n_R, n_L)
        weights = numpy.zeros((n_R,) + chart.shape)
        mask = E[None] >= psi[:, None, :]
        dE = numpy.diff(E, axis=0)[None]  # (1, n_s-1, n_L)
        both = mask[:, :-1] & mask[:, 1:]
        weights[:, :-1] += 0.5 * dE * both
        weights[:, 1:] += 0.5 * dE * both
        first = numpy.argmax(mask, axis=1)  # (n_R, n_L)
        has = numpy.any(mask, axis=1)
        r_idx, l_idx = numpy.nonzero(has)
        i0 = first[r_idx, l_idx]
        weights[r_idx, i0, l_idx] += (2.0 / 3.0) * (E[i0, l_idx] - psi[r_idx, l_idx])
        phi = vacuum_weight(model, E, chart.L_grid)
        weights *= (chart.T * phi * chart.L_weights[None, :])[None]
        inside = inside & mask
        weights = numpy.where(inside, weights, 0.0)
        self.theta = numpy.where(inside, theta, 0.0).reshape(n_R, -1)
        self.weights = weights.reshape(n_R, -1)
        self.inside = inside.reshape(n_R, -1)
        self._phase = numpy.exp(2j * math.pi * self.theta)
        print("greens cache: %i radii, %i nodes" % (n_R, chart.num_nodes), file=log.v4)

    def sin_modes(self):
        """
        Yields (m, sin(2 pi m theta(R, I))) for m = 1, 2, ..., via powers of exp(2 pi i theta).
        """
        z = numpy.ones_like(self._phase)
        m = 0
        while True:
            m += 1
            z = z * self._phase
            yield m, z.imag

    def mass_moments(self, pair_sums, M_max=None):
        """
        sum_m (1/m) int |phi'| T sin(2 pi m theta) (f^(m) + f^(-m)) dI, for each radius,
        and the same sum restricted to the tail m > M_max/2.

        :param numpy.ndarray pair_sums: (M_max, n_s, n_L, ...)
        :param int|None M_max:
        :return: (n_R, ...) totals and tail parts
        :rtype: (numpy.ndarray, numpy.ndarray)
        """
        M_max = M_max or pair_sums.shape[0]
        flat = pair_sums.reshape((pair_sums.shape[0], self.weights.shape[1]) + pair_sums.shape[3:])
        total = 0.0
        tail = 0.0
        for m, s in self.sin_modes():
            if m > M_max:
                break
            contrib = numpy.tensordot(self.weights * s, flat[m - 1], axes=([1], [0])) / m
            total = total + contrib
            if m > M_max // 2:
                tail = tail + contrib
        return total, tail

    def force(self, modefield, tol=1e-6, check_real=True):
        """
        :param ModeField modefield:
        :param float tol: relative tail threshold for the truncation warning
        :param bool check_real: assert a vanishing imaginary part for real data
        :return: d_R U at the radii. Complex if the field is not real.
        :rtype: numpy.ndarray
        """
        total, tail = self.mass_moments(modefield.pair_sums())
        force = 4.0 * math.pi * total / self.radii**2
        tail_force = 4.0 * math.pi * numpy.abs(tail) / self.radii**2
        scale = float(numpy.max(numpy.abs(force), initial=0.0))
        if float(numpy.max(tail_force, initial=0.0)) > tol * max(scale, 1e-300) and scale > 0:
            log.print_warning(
                "force: modes m > %i contribute %.3e relative, M_max=%i may be too small"
                % (modefield.M_max // 2, float(numpy.max(tail_force)) / scale, modefield.M_max)
            )
        if modefield.real:
            imag = float(numpy.max(numpy.abs(numpy.imag(force)), initial=0.0))
            print("force: imaginary residual %.3e (scale %.3e)" % (imag, scale), file=log.v5)
            if check_real:
                assert imag <= 1e-10 * scale, "imaginary residual %r of real data, scale %r" % (imag, scale)
            return numpy.real(force)
        return force


def force_radii(model, n):
    """
    :param gravdamp.steady_state.PolytropeModel model:
    :param int n:
    :return: Chebyshev-Lobatto points of [Rmin, Rmax]
    :rtype: numpy.ndarray
    """
    return chebyshev_lobatto(n, model.Rmin, model.Rmax)


def force_from_modes(model, chart, modefield, R, greens=None, cache=None):
    """
    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param ModeField modefield:
    :param numpy.ndarray|float R:
    :param GreensCache|None greens: reused if it was built for these radii
    :param OrbitCache|None cache:
    :return: d_R U_{|phi'| f} at R
    :rtype: numpy.ndarray|float
    """
    R_ = numpy.atleast_1d(numpy.asarray(R, dtype=float))
    if greens is None or greens.radii.shape != R_.shape or numpy.any(greens.radii != R_):
        greens = GreensCache(model, chart, cache or OrbitCache(chart, n_theta=4 * modefield.M_max), R_)
    force = greens.force(modefield)
    return force if numpy.ndim(R) else force[0]


def direct_force(model, f0, R, n_r=64, n_L=32, n_w=32):
    """
    (4 pi^2 / R^2) int_{r <= R} |phi'| f d(r, w, L), by Gauss-Jacobi rules that carry the vacuum
    boundary behaviour in w and L. Independent of the chart and the modes.

    :param gravdamp.steady_state.PolytropeModel model:
    :param f0: see :func:`sample_orbits`. Must have zero orbit averages to compare against
      :func:`force_from_modes`.
    :param float R:
    :param int n_r:
    :param int n_L:
    :param int n_w:
    :rtype: float
    """
    p = model.params
    E0, L0, M = model.E0, p.L0, p.M
    if R <= model.Rmin:
        return 0.0
    R_hi = min(R, model.Rmax)
    r, wr = gauss_legendre(n_r, model.Rmin, R_hi)
    U = model.U(r)
    L_r = 2.0 * r**2 * (E0 - U + M / r)  # (n_r,)
    xL, wxL = gauss_jacobi(n_L, p.mu - 0.5, p.nu)
    L = L0 + 0.5 * (L_r[:, None] - L0) * (1.0 + xL[None, :])  # (n_r, n_L)
    w_max = numpy.sqrt(numpy.maximum(L_r[:, None] - L, 0.0)) / r[:, None]
    u, wu = gauss_jacobi(n_w, p.mu - 1.0, p.mu - 1.0)
    w = w_max[..., None] * u  # (n_r, n_L, n_w)
    r3 = numpy.broadcast_to(r[:, None, None], w.shape)
    L3 = numpy.broadcast_to(L[..., None], w.shape)
    if getattr(f0, "coordinates", "phase") == "angle":
        E3 = 0.5 * w**2 + effective_potential(model, r3, L3)
        theta = angle(model, r3, w, L3)
        f = f0(theta, E3, L3)
    else:
        f = f0(r3, w, L3)
    f = numpy.broadcast_to(f, w.shape)
    # |phi'| = mu (E0-E)^(mu-1) (L-L0)^nu with E0 - E = (w_max^2/2)(1-u)(1+u),
    # w_max^2 = (L_r - L)/r^2 with L_r - L = (L_r - L0)(1-x)/2, L - L0 = (L_r - L0)(1+x)/2
    half = 0.5 * (L_r - L0)  # (n_r,)
    inner = numpy.sum(wu * f, axis=-1)  # (n_r, n_L)
    factor_L = p.mu * (half[:, None] / (2.0 * r[:, None] ** 2)) ** (p.mu - 1.0) * half[:, None] ** p.nu
    factor_L *= numpy.sqrt(half[:, None]) / r[:, None]
    outer = numpy.sum(wxL * factor_L * inner, axis=-1) * half  # dL = half dx
    mass = 4.0 * math.pi**2 * float(numpy.sum(wr * outer))
    return mass / R**2


def potential_from_force(model, force_profile, c=0.0):
    """
    U(R) = -int_R^{Rmax} d_r U dr + c / Rmax, continued by c/r beyond Rmax.

    :param gravdamp.steady_state.PolytropeModel model:
    :param RadialProfile force_profile: on a grid ending at Rmax
    :param float c: -mass of the perturbation. 0 for mass-zero data
    :rtype: RadialProfile
    """
    grid = force_profile.grid
    values = force_profile.values
    assert abs(grid[-1] - model.Rmax) <= 1e-12 * model.Rmax, "force grid must end at Rmax"
    spline = interpolate.CubicSpline(grid, values)
    antiderivative = spline.antiderivative()
    U = -(antiderivative(grid[-1]) - antiderivative(grid)) + c / grid[-1]
    return RadialProfile(grid, U, derivatives=values, exterior=c)


def mode_scaling_exponent(modefield, L_slice, m, window=(1e-6, 1e-2)):
    """
    Least squares slope of log |f^(m)| against log of the energy gap E - E_min^L,
    along the chart column L_slice. Smooth data gives |m|/2.

    :param ModeField modefield:
    :param int L_slice: column index
    :param int m:
    :param (float,float) window: range of energy gaps used
    :rtype: gravdamp.util.numerics.PowerLawFit
    """
    chart = modefield.chart
    gap = chart.energy_gap[:, L_slice]
    values = numpy.abs(modefield.get(m)[:, L_slice])
    sel = (gap >= window[0]) & (gap <= window[1])
    fit = fit_power_law(gap[sel], values[sel])
    print(
        "mode scaling m=%i, L=%.6g: slope %.4f (residual %.2e, %i points)"
        % (m, chart.L[L_slice], fit.slope, fit.residual, fit.n_points),
        file=log.v3,
    )
    return fit


def plancherel_defect(samples, M_max):
    """
    sum_{|m| <= M_max} |f^(m)|^2 (m = 0 included) against the theta quadrature of |f|^2, per node.

    :param numpy.ndarray samples: (..., n_theta)
    :param int M_max:
    :return: max relative defect over the nodes
    :rtype: float
    """
    n_theta = samples.shape[-1]
    coefficients, zero = modes_from_samples(samples, M_max)
    power = numpy.sum(numpy.abs(coefficients) ** 2, axis=0) + numpy.abs(zero) ** 2
    quad = numpy.sum(numpy.abs(samples) ** 2, axis=-1) / n_theta
    scale = float(numpy.max(quad, initial=0.0))
    if scale == 0.0:
        return 0.0
    return float(numpy.max(numpy.abs(power - quad))) / scale
