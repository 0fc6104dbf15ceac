"""
Action-angle variables of the radial motion in the effective potential Psi_L.

An orbit is labelled by I = (E, L). Its radial motion oscillates between the turning points
r_-(I) < r_L < r_+(I) with period T(I). The angle theta in [0, 1) is zero at r_- and 1/2 at r_+.

All orbit integrals use the substitution r = r_- + (r_+ - r_-) sin^2(phi), phi in [0, pi/2],
which removes the inverse square root singularities at both turning points:
with g(phi) = (E - Psi_L(r)) / ((r_+ - r_-)^2 sin^2(phi) cos^2(phi)) > 0 smooth,
T = 2 int sqrt(2/g) dphi and A = 2 int 2 (r_+ - r_-)^2 sin^2 cos^2 sqrt(2 g) dphi.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy
from numpy.polynomial import chebyshev
from scipy import integrate, interpolate

from gravdamp.log import log
from gravdamp.steady_state import (
    DomainError,
    effective_potential,
    effective_potential_derivative,
    kepler_turning_points,
    minimum_points,
)
from gravdamp.util.basic import GravDampError, parallel_map
from gravdamp.util.numerics import bisect_vectorized, gauss_legendre

# Below this energy gap above the minimum of Psi_L, the harmonic closed forms are used.
HarmonicCutoff = 1e-10
# Below eps = NearCircularCutoff * alpha_L * r_L^2, Psi_L is replaced by its quartic Taylor polynomial about r_L.
NearCircularCutoff = 1e-6
# Doubling tolerance of the orbit quadrature in the exact Kepler potential, and in interpolated potentials.
KeplerRtol = 1e-10
SplineRtol = 1e-8


class DegenerateOrbitError(GravDampError):
    """
    E <= E_min^L, there is no orbit.
    """


class NumericalError(GravDampError):
    """
    Quadrature or integrator failure.
    """

    def __init__(self, msg, nodes=None):
        """
        :param str msg:
        :param int|None nodes: number of quadrature nodes at which we gave up
        """
        super().__init__(msg)
        self.nodes = nodes


@dataclass(frozen=True)
class OrbitPoint:
    """
    Energy and (squared) angular momentum of an orbit.
    """

    E: float
    L: float


def kepler_period(E, M=1.0):
    """
    :param numpy.ndarray|float E: negative
    :param float M:
    :rtype: numpy.ndarray|float
    """
    return math.pi / math.sqrt(2.0) * M * (-numpy.asarray(E, dtype=float)) ** -1.5


def kepler_frequency(E, M=1.0):
    """
    :param numpy.ndarray|float E: negative
    :param float M:
    :rtype: numpy.ndarray|float
    """
    return 1.0 / kepler_period(E, M)


def _potential_rise(model, r, L, r_L):
    """
    Psi_L(r) - Psi_L(r_L), written such that it has full relative precision near r_L.
    """
    M = model.params.M
    dr = r - r_L
    rise = M * dr / (r * r_L) - L * dr * (r + r_L) / (2.0 * r**2 * r_L**2)
    if not model.is_kepler:
        rise = rise + (model.U(r) - model.U(r_L))
    return rise


def _local_expansion(model, r_L, L):
    """
    Third and fourth derivative of Psi_L at r_L. U is cubic between its grid nodes, so U'''' = 0.

    :param PolytropeModel model:
    :param numpy.ndarray r_L:
    :param numpy.ndarray L:
    :return: (Psi_L'''(r_L), Psi_L''''(r_L))
    """
    M = model.params.M
    beta = model.d3U(r_L) + 6.0 * M / r_L**4 - 12.0 * L / r_L**5
    gamma = -24.0 * M / r_L**5 + 60.0 * L / r_L**6
    return beta, gamma


class OrbitFamily:
    """
    Orbit data for many orbits at once, given by L and the energy gap eps = E - E_min^L >= 0.
    Computes turning points, periods, areas and the desingularized integrand.
    """

    def __init__(self, model, L, eps, r_L=None, e_min=None, alpha=None):
        """
        :param PolytropeModel model:
        :param numpy.ndarray L:
        :param numpy.ndarray eps: same shape as L
        :param numpy.ndarray|None r_L: if not given, computed via minimum_points
        :param numpy.ndarray|None e_min:
        :param numpy.ndarray|None alpha:
        """
        self.model = model
        self.L = numpy.asarray(L, dtype=float)
        self.eps = numpy.asarray(eps, dtype=float)
        assert self.L.shape == self.eps.shape
        if r_L is None:
            r_L, e_min, alpha = minimum_points(model, self.L)
        self.r_L = numpy.broadcast_to(r_L, self.L.shape)
        self.e_min = numpy.broadcast_to(e_min, self.L.shape)
        self.alpha = numpy.broadcast_to(alpha, self.L.shape)
        self.E = self.e_min + self.eps
        if numpy.any(self.eps < 0):
            raise DegenerateOrbitError("E below E_min^L for %i orbits" % numpy.count_nonzero(self.eps < 0))
        if numpy.any(self.E >= 0):
            raise DegenerateOrbitError("unbound orbit, E >= 0")
        self.harmonic = self.eps < HarmonicCutoff
        if model.is_kepler:
            self.near_circular = numpy.zeros(self.L.shape, dtype=bool)
        else:
            self.near_circular = ~self.harmonic & (self.eps < NearCircularCutoff * self.alpha * self.r_L**2)
        # (a, b, c) with g = a x^2 + b x + c in x = r - r_L, on the near circular orbits
        self._local_coef = None
        self.r_minus, self.r_plus = self._turning_points()
        self.delta = self.r_plus - self.r_minus

    def _turning_points(self):
        model, L, eps, r_L = self.model, self.L, self.eps, self.r_L
        width = numpy.sqrt(2.0 * eps / self.alpha)
        if model.is_kepler:
            r_m, r_p = kepler_turning_points(self.E, L, model.params.M)
        else:
            r_m = numpy.empty_like(L)
            r_p = numpy.empty_like(L)
            if numpy.any(self.near_circular):
                r_m[self.near_circular], r_p[self.near_circular] = self._near_circular_turning_points()
            gen = ~self.harmonic & ~self.near_circular
            if numpy.any(gen):
                Lg, eg, rg, wg = L[gen], eps[gen], r_L[gen], width[gen]
                f = lambda r: _potential_rise(model, r, Lg, rg) - eg  # noqa: E731
                lo = numpy.maximum(rg - 2.0 * wg, 0.5 * rg)
                for _ in range(100):
                    bad = f(lo) <= 0
                    if not numpy.any(bad):
                        break
                    lo = numpy.where(bad, 0.5 * lo, lo)
                hi = rg + 2.0 * wg
                for _ in range(100):
                    bad = f(hi) <= 0
                    if not numpy.any(bad):
                        break
                    hi = numpy.where(bad, rg + 2.0 * (hi - rg), hi)
                else:
                    raise DegenerateOrbitError("outer turning point not bracketed, orbit unbound?")
                r_m[gen] = bisect_vectorized(f, lo, rg)
                r_p[gen] = bisect_vectorized(f, rg, hi)
        r_m = numpy.where(self.harmonic, r_L - width, r_m)
        r_p = numpy.where(self.harmonic, r_L + width, r_p)
        return r_m, r_p

    def _near_circular_turning_points(self, newton_iter=8):
        """
        Roots x_- < 0 < x_+ of P(x) = eps, P the quartic Taylor polynomial of Psi_L - E_min^L about r_L.
        Also sets the quotient eps - P(x) = (x - x_-) (x_+ - x) (a x^2 + b x + c),
        which gives g without cancellation.

        :param int newton_iter:
        :return: r_minus, r_plus of the near circular orbits
        """
        nc = self.near_circular
        L, eps, r_L, alpha = self.L[nc], self.eps[nc], self.r_L[nc], self.alpha[nc]
        beta, gamma = _local_expansion(self.model, r_L, L)
        width = numpy.sqrt(2.0 * eps / alpha)
        roots = []
        for x in (-width, width):
            for _ in range(newton_iter):
                value = 0.5 * alpha * x**2 + beta / 6.0 * x**3 + gamma / 24.0 * x**4 - eps
                slope = alpha * x + 0.5 * beta * x**2 + gamma / 6.0 * x**3
                x = x - value / slope
            roots.append(x)
        x_m, x_p = roots
        p, q = x_m + x_p, x_m * x_p
        a = gamma / 24.0
        b = beta / 6.0 + a * p
        c = 0.5 * alpha + b * p - a * q
        coef = tuple(numpy.zeros(self.L.shape) for _ in range(3))
        for full, part in zip(coef, (a, b, c)):
            full[nc] = part
        self._local_coef = coef
        return r_L + x_m, r_L + x_p

    def g(self, phi, index=None):
        """
        Desingularized integrand g(phi), positive and smooth on [0, pi/2].

        :param numpy.ndarray phi: broadcastable against the orbit arrays with one extra trailing axis,
          e.g. shape (n_phi,), or (..., n_phi)
        :param numpy.ndarray|None index: restrict to these orbits (boolean mask or indices)
        :return: shape orbits.shape + (n_phi,)
        """
        sel = (lambda a: a) if index is None else (lambda a: a[index])
        r_m, delta, L, r_L, E, eps = (
            sel(self.r_minus)[..., None],
            sel(self.delta)[..., None],
            sel(self.L)[..., None],
            sel(self.r_L)[..., None],
            sel(self.E)[..., None],
            sel(self.eps)[..., None],
        )
        # g is smooth up to the end points, but 0/0 there
        phi = numpy.clip(phi, 1e-6, 0.5 * math.pi - 1e-6)
        s2 = numpy.sin(phi) ** 2
        c2 = numpy.cos(phi) ** 2
        r = r_m + delta * s2
        if self.model.is_kepler:
            g = -E / r**2
        else:
            with numpy.errstate(divide="ignore", invalid="ignore"):
                g = (eps - _potential_rise(self.model, r, L, r_L)) / (delta**2 * s2 * c2)
            if self._local_coef is not None:
                a, b, c = [sel(coef)[..., None] for coef in self._local_coef]
                x = r - r_L
                g = numpy.where(sel(self.near_circular)[..., None], (a * x + b) * x + c, g)
        g = numpy.where(sel(self.harmonic)[..., None], 0.5 * sel(self.alpha)[..., None], g)
        return numpy.maximum(g, 1e-300)

    def integrals(self, n_nodes=64, max_nodes=1024, rtol=None):
        """
        Gauss-Legendre in phi, doubling the nodes per orbit until T and A settle.
        In an interpolated potential g is only piecewise smooth and the doubling converges algebraically,
        so orbits still above rtol at max_nodes are accepted with a warning if their last change is below 100 rtol.

        :param int n_nodes: initial number of Gauss-Legendre nodes in phi
        :param int max_nodes:
        :param float|None rtol: relative change of T and A at which an orbit counts as converged.
          By default :data:`KeplerRtol` for the Kepler state,
          otherwise :data:`SplineRtol` or the interpolation error of U, whichever is larger
        :return: T, A, largest number of nodes used
        :rtype: (numpy.ndarray, numpy.ndarray, int)
        """
        if rtol is None:
            rtol = KeplerRtol if self.model.is_kepler else max(SplineRtol, self.model.interpolation_error)

        def quad(n, index):
            phi, w = gauss_legendre(n, 0.0, 0.5 * math.pi)
            g = self.g(phi, index)
            sc2 = (numpy.sin(phi) * numpy.cos(phi)) ** 2
            delta = self.delta[index][..., None]
            period_ = 2.0 * numpy.sum(w * numpy.sqrt(2.0 / g), axis=-1)
            area_ = 2.0 * numpy.sum(w * 2.0 * delta**2 * sc2 * numpy.sqrt(2.0 * g), axis=-1)
            return period_, area_

        period = numpy.zeros(self.L.shape)
        area = numpy.zeros(self.L.shape)
        todo = ~self.harmonic
        n = n_nodes
        period[todo], area[todo] = quad(n, todo)
        err = numpy.full(numpy.count_nonzero(todo), numpy.inf)
        while numpy.any(todo):
            if 2 * n > max_nodes:
                err_left = float(numpy.max(err))
                if err_left >= 100.0 * rtol:
                    raise NumericalError(
                        "orbit quadrature did not converge with %i nodes, relative change %.3e" % (n, err_left),
                        nodes=n,
                    )
                log.print_warning(
                    "orbit quadrature: %i orbits left at relative change %.1e with %i nodes"
                    % (numpy.count_nonzero(todo), err_left, n)
                )
                break
            period2, area2 = quad(2 * n, todo)
            err = numpy.maximum(
                numpy.abs(period2 - period[todo]) / period2,
                numpy.abs(area2 - area[todo]) / numpy.maximum(area2, 1e-300),
            )
            period[todo], area[todo] = period2, area2
            n *= 2
            todo_next = todo.copy()
            todo_next[todo] = err >= rtol
            todo = todo_next
            err = err[err >= rtol]
        harmonic_period = 2.0 * math.pi / numpy.sqrt(self.alpha)
        period = numpy.where(self.harmonic, harmonic_period, period)
        area = numpy.where(self.harmonic, self.eps * harmonic_period, area)
        return period, area, n


def _family(model, E, L):
    """
    :param PolytropeModel model:
    :param numpy.ndarray|float E:
    :param numpy.ndarray|float L:
    :rtype: OrbitFamily
    """
    E, L = numpy.broadcast_arrays(numpy.asarray(E, dtype=float), numpy.asarray(L, dtype=float))
    r_L, e_min, alpha = minimum_points(model, L)
    eps = E - e_min
    if numpy.any(eps <= 0):
        raise DegenerateOrbitError("E <= E_min^L: %r" % (E[eps <= 0].ravel()[:5],))
    return OrbitFamily(model, L, eps, r_L=r_L, e_min=e_min, alpha=alpha)


def turning_points(model, E, L):
    """
    :param PolytropeModel model:
    :param numpy.ndarray|float E:
    :param numpy.ndarray|float L:
    :return: (r_minus, r_plus)
    """
    fam = _family(model, E, L)
    return fam.r_minus[()], fam.r_plus[()]


def period(model, E, L):
    """
    :param PolytropeModel model:
    :param numpy.ndarray|float E:
    :param numpy.ndarray|float L:
    :rtype: numpy.ndarray|float
    """
    T, _, _ = _family(model, E, L).integrals()
    return T[()]


def area(model, E, L):
    """
    Phase-space area enclosed by the orbit, A = 2 int sqrt(2E - 2 Psi_L) dr.

    :param PolytropeModel model:
    :param numpy.ndarray|float E:
    :param numpy.ndarray|float L:
    :rtype: numpy.ndarray|float
    """
    _, A, _ = _family(model, E, L).integrals()
    return A[()]


def angle(model, r, w, L, rtol=1e-12):
    """
    :param PolytropeModel model:
    :param numpy.ndarray|float r:
    :param numpy.ndarray|float w: radial velocity
    :param numpy.ndarray|float L:
    :param float rtol: tolerance on r being inside [r_-, r_+]
    :return: theta in [0, 1)
    :rtype: numpy.ndarray|float
    """
    r, w, L = numpy.broadcast_arrays(*[numpy.asarray(x, dtype=float) for x in (r, w, L)])
    E = 0.5 * w**2 + effective_potential(model, r, L)
    fam = _family(model, E, L)
    T, _, n = fam.integrals()
    tol = rtol * fam.r_plus
    if numpy.any((r < fam.r_minus - tol) | (r > fam.r_plus + tol)):
        raise DomainError("r outside [r_-, r_+]")
    with numpy.errstate(divide="ignore", invalid="ignore"):
        frac = numpy.where(fam.delta > 0, (r - fam.r_minus) / fam.delta, 0.0)
    phi_r = numpy.arcsin(numpy.sqrt(numpy.clip(frac, 0.0, 1.0)))
    x, wq = gauss_legendre(n)
    phi = 0.5 * phi_r[..., None] * (x + 1.0)
    weights = 0.5 * phi_r[..., None] * wq
    g = fam.g(phi)
    theta = numpy.sum(weights * numpy.sqrt(2.0 / g), axis=-1) / T
    theta = numpy.where(fam.harmonic, phi_r / math.pi, theta)
    theta = numpy.where(w < 0, 1.0 - theta, theta)
    theta = numpy.where(theta >= 1.0, theta - 1.0, theta)
    return theta[()]


def orbit_position(model, theta, E, L):
    """
    Integrates the radial motion from (r_-, 0) for the time theta * T.

    :param PolytropeModel model:
    :param float theta:
    :param float E:
    :param float L:
    :return: (r, w)
    :rtype: (float, float)
    """
    fam = _family(model, E, L)
    T = float(fam.integrals()[0])
    r0 = float(fam.r_minus)
    t_end = (theta % 1.0) * T
    if t_end == 0.0:
        return r0, 0.0

    def rhs(t, y):
        return [y[1], -float(effective_potential_derivative(model, y[0], L))]

    sol = integrate.solve_ivp(rhs, (0.0, t_end), [r0, 0.0], method="DOP853", rtol=1e-12, atol=1e-12)
    if not sol.success:
        raise NumericalError("orbit integration failed: %s" % sol.message)
    return float(sol.y[0, -1]), float(sol.y[1, -1])


def _mapped_nodes(n, power):
    """
    :param int n:
    :param int power: 1 -> sin^2(pi v/2), 2 -> sin^4(pi v/2)
    :return: nodes in [0, 1] and the weights of int_0^1 ... ds, from the trapezoidal rule in v
    """
    v = numpy.linspace(0.0, 1.0, n)
    s = numpy.sin(0.5 * math.pi * v) ** (2 * power)
    ds_dv = power * math.pi * numpy.sin(0.5 * math.pi * v) ** (2 * power - 1) * numpy.cos(0.5 * math.pi * v)
    w = ds_dv / (n - 1)
    w[0] *= 0.5
    w[-1] *= 0.5
    s[0], s[-1] = 0.0, 1.0
    return s, w


class ActionChart:
    """
    Orbit data on a tensor grid in (s, L), where E = E_min^L + s (E0 - E_min^L).
    s = 0 is the trapping boundary (circular orbits), s = 1 the vacuum boundary E = E0.
    Arrays of node values have shape (n_s, n_L).
    """

    def __init__(self, model, s, L, s_weights, L_weights, r_L, e_min, alpha, r_minus, r_plus, T, A):
        """
        :param PolytropeModel model:
        :param numpy.ndarray s: (n_s,)
        :param numpy.ndarray L: (n_L,)
        :param numpy.ndarray s_weights: quadrature weights for int ds
        :param numpy.ndarray L_weights: quadrature weights for int dL
        :param numpy.ndarray r_L: (n_L,)
        :param numpy.ndarray e_min: (n_L,)
        :param numpy.ndarray alpha: (n_L,)
        :param numpy.ndarray r_minus: (n_s, n_L)
        :param numpy.ndarray r_plus: (n_s, n_L)
        :param numpy.ndarray T: (n_s, n_L)
        :param numpy.ndarray A: (n_s, n_L)
        """
        self.model = model
        self.s = numpy.asarray(s, dtype=float)
        self.L = numpy.asarray(L, dtype=float)
        self.s_weights = numpy.asarray(s_weights, dtype=float)
        self.L_weights = numpy.asarray(L_weights, dtype=float)
        self.r_L = numpy.asarray(r_L, dtype=float)
        self.e_min = numpy.asarray(e_min, dtype=float)
        self.alpha = numpy.asarray(alpha, dtype=float)
        self.r_minus = numpy.asarray(r_minus, dtype=float)
        self.r_plus = numpy.asarray(r_plus, dtype=float)
        self.T = numpy.asarray(T, dtype=float)
        self.A = numpy.asarray(A, dtype=float)
        self.omega = 1.0 / self.T
        self.D = model.E0 - self.e_min
        self.energy_gap = self.s[:, None] * self.D[None, :]
        self.E = self.e_min[None, :] + self.energy_gap
        self.L_grid = numpy.broadcast_to(self.L[None, :], self.E.shape)
        self.weights = self.s_weights[:, None] * self.D[None, :] * self.L_weights[None, :]
        self.omega_min = float(numpy.min(self.omega))
        self.omega_max = float(numpy.max(self.omega))
        self.lambda_min = 2.0 * math.pi * self.omega_min
        self._omega_spline = interpolate.RectBivariateSpline(self.s, self.L, self.omega, kx=3, ky=3)
        self._T_spline = interpolate.RectBivariateSpline(self.s, self.L, self.T, kx=3, ky=3)
        self._A_spline = interpolate.RectBivariateSpline(self.s, self.L, self.A, kx=3, ky=3)
        self._e_min_spline = interpolate.CubicHermiteSpline(self.L, self.e_min, 0.5 / self.r_L**2)
        self._r_L_spline = interpolate.CubicSpline(self.L, self.r_L)

    @property
    def shape(self):
        """
        :rtype: (int,int)
        """
        return self.E.shape

    @property
    def num_nodes(self):
        """
        :rtype: int
        """
        return self.E.size

    def __repr__(self):
        return "<ActionChart %ix%i omega in [%.6g, %.6g]>" % (
            self.shape[0],
            self.shape[1],
            self.omega_min,
            self.omega_max,
        )

    def orbit_family(self, mask=None):
        """
        :param numpy.ndarray|None mask: (n_s, n_L) bool, or None for all nodes
        :rtype: OrbitFamily
        """
        L = self.L_grid
        eps = self.energy_gap
        r_L = numpy.broadcast_to(self.r_L[None, :], self.shape)
        e_min = numpy.broadcast_to(self.e_min[None, :], self.shape)
        alpha = numpy.broadcast_to(self.alpha[None, :], self.shape)
        if mask is not None:
            L, eps, r_L, e_min, alpha = L[mask], eps[mask], r_L[mask], e_min[mask], alpha[mask]
        return OrbitFamily(self.model, L, eps, r_L=r_L, e_min=e_min, alpha=alpha)

    def e_min_at(self, L):
        """
        :param numpy.ndarray|float L:
        :rtype: numpy.ndarray|float
        """
        return self._e_min_spline(L)

    def to_s(self, E, L):
        """
        :param numpy.ndarray|float E:
        :param numpy.ndarray|float L:
        :return: s coordinate, and E0 - E_min^L
        """
        e_min = self._e_min_spline(L)
        D = self.model.E0 - e_min
        return (E - e_min) / D, D

    def _eval(self, spline, E, L, dE=0, dL=0):
        E, L = numpy.broadcast_arrays(numpy.asarray(E, dtype=float), numpy.asarray(L, dtype=float))
        L = numpy.clip(L, self.L[0], self.L[-1])
        s, D = self.to_s(E, L)
        s = numpy.clip(s, 0.0, 1.0)
        if dE == 0 and dL == 0:
            return spline.ev(s, L)
        f_s = spline.ev(s, L, dx=1)
        if dE == 1 and dL == 0:
            return f_s / D
        if dE == 0 and dL == 1:
            f_L = spline.ev(s, L, dy=1)
            r_L = self._r_L_spline(L)
            return f_L - f_s * (1.0 - s) / (2.0 * r_L**2 * D)
        raise ValueError("only first derivatives supported, got dE=%r dL=%r" % (dE, dL))

    def frequency(self, E, L, dE=0, dL=0):
        """
        omega(E, L), or its partial derivative in E (at fixed L) or in L (at fixed E).

        :param numpy.ndarray|float E:
        :param numpy.ndarray|float L:
        :param int dE:
        :param int dL:
        """
        return self._eval(self._omega_spline, E, L, dE=dE, dL=dL)[()]

    def period(self, E, L):
        """
        :param numpy.ndarray|float E:
        :param numpy.ndarray|float L:
        """
        return self._eval(self._T_spline, E, L)[()]

    def area(self, E, L):
        """
        :param numpy.ndarray|float E:
        :param numpy.ndarray|float L:
        """
        return self._eval(self._A_spline, E, L)[()]

    def frequency_derivatives_at_nodes(self):
        """
        :return: d omega/dE at fixed L and d omega/dL at fixed E, on the nodes
        :rtype: (numpy.ndarray, numpy.ndarray)
        """
        s = numpy.broadcast_to(self.s[:, None], self.shape)
        L = self.L_grid
        f_s = self._omega_spline.ev(s, L, dx=1)
        f_L = self._omega_spline.ev(s, L, dy=1)
        D = self.D[None, :]
        return f_s / D, f_L - f_s * (1.0 - s) / (2.0 * self.r_L[None, :] ** 2 * D)

    def monotonicity(self, rtol=None):
        """
        :param float|None rtol: increases of omega between neighbouring nodes up to rtol * omega are quadrature noise.
          Defaults to the quadrature tolerance of the model times 10
        :return: c0 = min |d omega/dE| over the nodes, and whether omega is decreasing in E
          along every L slice of the node values
        :rtype: (float, bool)
        """
        if rtol is None:
            rtol = 10.0 * (KeplerRtol if self.model.is_kepler else max(SplineRtol, self.model.interpolation_error))
        d_omega = numpy.diff(self.omega, axis=0)
        d_omega_dE, _ = self.frequency_derivatives_at_nodes()
        decreasing = bool(numpy.all(d_omega < rtol * self.omega[1:]))
        return float(numpy.min(numpy.abs(d_omega_dE))), decreasing

    def save(self, filename):
        """
        :param str filename: HDF5 file
        """
        from gravdamp.util.hdf import save_arrays

        save_arrays(
            filename,
            {
                "s": self.s,
                "L": self.L,
                "s_weights": self.s_weights,
                "L_weights": self.L_weights,
                "r_L": self.r_L,
                "e_min": self.e_min,
                "alpha": self.alpha,
                "r_minus": self.r_minus,
                "r_plus": self.r_plus,
                "T": self.T,
                "A": self.A,
            },
            attrs={"kind": "action_chart", "E0": self.model.E0},
        )

    @classmethod
    def load(cls, filename, model):
        """
        :param str filename:
        :param PolytropeModel model: the model the chart was built for
        :rtype: ActionChart
        """
        from gravdamp.util.hdf import load_arrays

        arrays, attrs = load_arrays(filename)
        assert attrs.get("kind") == "action_chart", "%r is not a chart file" % filename
        assert abs(attrs["E0"] - model.E0) <= 1e-14 * abs(model.E0), "chart %r belongs to another model" % filename
        return cls(model, **arrays)


def build_chart(model, energy_nodes=257, momentum_nodes=129, num_threads=1, gap_fraction=1e-4):
    """
    :param PolytropeModel model:
    :param int energy_nodes: n_s
    :param int momentum_nodes: n_L
    :param int num_threads:
    :param float gap_fraction: L_top = Lmax - gap_fraction (Lmax - L0)
    :rtype: ActionChart
    """
    L0, Lmax = model.params.L0, model.Lmax
    L_top = Lmax - gap_fraction * (Lmax - L0)
    u, u_weights = _mapped_nodes(momentum_nodes, power=1)
    L = L0 + (L_top - L0) * u
    L_weights = (L_top - L0) * u_weights
    s, s_weights = _mapped_nodes(energy_nodes, power=2)
    r_L, e_min, alpha = minimum_points(model, L)
    D = model.E0 - e_min

    n_blocks = max(1, min(num_threads or 1, momentum_nodes))
    blocks = numpy.array_split(numpy.arange(momentum_nodes), n_blocks)

    def build_block(cols):
        shape = (energy_nodes, len(cols))
        fam = OrbitFamily(
            model,
            numpy.broadcast_to(L[cols][None, :], shape).copy(),
            s[:, None] * D[cols][None, :],
            r_L=numpy.broadcast_to(r_L[cols][None, :], shape),
            e_min=numpy.broadcast_to(e_min[cols][None, :], shape),
            alpha=numpy.broadcast_to(alpha[cols][None, :], shape),
        )
        T_, A_, n = fam.integrals()
        return fam.r_minus, fam.r_plus, T_, A_, n

    results = parallel_map(build_block, blocks, num_threads=num_threads)
    r_minus = numpy.concatenate([res[0] for res in results], axis=1)
    r_plus = numpy.concatenate([res[1] for res in results], axis=1)
    T = numpy.concatenate([res[2] for res in results], axis=1)
    A = numpy.concatenate([res[3] for res in results], axis=1)
    chart = ActionChart(model, s, L, s_weights, L_weights, r_L, e_min, alpha, r_minus, r_plus, T, A)
    c0, decreasing = chart.monotonicity()
    print(
        "%r, quadrature nodes %i, min |d omega/dE| = %.6g" % (chart, max(res[4] for res in results), c0),
        file=log.v3,
    )
    if not decreasing:
        log.print_warning("orbital frequency is not strictly decreasing in E on all L slices")
    return chart


class OrbitCache:
    """
    Per chart node: the cumulative angle theta(phi) along the desingularized orbit as Chebyshev series,
    and n_theta samples of (r, w) at uniform theta = k / n_theta, k = 0 .. n_theta-1.
    Sample arrays have shape (n_s, n_L, n_theta).
    """

    def __init__(self, chart, n_theta=128, degree=48, newton_iter=50):
        """
        :param ActionChart chart:
        :param int n_theta:
        :param int degree: of the Chebyshev series of the integrand
        :param int newton_iter:
        """
        self.chart = chart
        self.model = chart.model
        self.n_theta = n_theta
        self.degree = degree
        fam = chart.orbit_family()
        self.family = fam
        x = chebyshev.chebpts1(degree + 1)
        phi = 0.25 * math.pi * (x + 1.0)
        h = numpy.sqrt(2.0 / fam.g(phi))  # (n_s, n_L, degree+1)
        flat_h = h.reshape(-1, degree + 1)
        coef = chebyshev.chebfit(x, flat_h.T, degree)  # (degree+1, n_nodes)
        coef_int = chebyshev.chebint(coef, lbnd=-1, scl=0.25 * math.pi)
        half = chebyshev.chebval(1.0, coef_int)  # int_0^{pi/2} h = T/2
        self.theta_coef = coef_int / (2.0 * half)  # theta(phi), theta(pi/2) = 1/2
        self.h_coef = coef / (2.0 * half)  # d theta / d phi
        self.period = (2.0 * half).reshape(chart.shape)
        self._flat_fam = (
            fam.r_minus.ravel(),
            fam.delta.ravel(),
            numpy.broadcast_to(fam.harmonic, chart.shape).ravel(),
        )

        n_half = n_theta // 2 + 1
        theta_half = numpy.arange(n_half) / n_theta  # in [0, 1/2]
        target = numpy.broadcast_to(theta_half[:, None], (n_half, flat_h.shape[0]))
        phi_k = math.pi * target.copy()  # exact for harmonic orbits
        for _ in range(newton_iter):
            xk = 4.0 * phi_k / math.pi - 1.0
            resid = chebyshev.chebval(xk, self.theta_coef, tensor=False) - target
            slope = chebyshev.chebval(xk, self.h_coef, tensor=False)
            phi_k = numpy.clip(phi_k - resid / slope, 0.0, 0.5 * math.pi)
            if numpy.max(numpy.abs(resid)) < 1e-14:
                break
        else:
            log.print_warning("orbit cache: Newton inversion of theta(phi) reached %i iterations" % newton_iter)
        r_m, delta, _ = self._flat_fam
        sin_phi, cos_phi = numpy.sin(phi_k), numpy.cos(phi_k)
        r_half = r_m[None, :] + delta[None, :] * sin_phi**2
        g_half = fam.g(phi_k.T.reshape(chart.shape + (n_half,)))  # per node own phi values
        g_half = g_half.reshape(-1, n_half).T
        w_half = delta[None, :] * sin_phi * cos_phi * numpy.sqrt(2.0 * g_half)

        k = numpy.arange(n_theta)
        mirror = numpy.minimum(k, n_theta - k)
        sign = numpy.where(k <= n_theta // 2, 1.0, -1.0)
        if n_theta % 2 == 0:
            sign[n_theta // 2] = 1.0
        r = r_half[mirror]  # (n_theta, n_nodes)
        w = sign[:, None] * w_half[mirror]
        self.r = r.T.reshape(chart.shape + (n_theta,))
        self.w = w.T.reshape(chart.shape + (n_theta,))
        self.theta = k / n_theta
        print("orbit cache: %i nodes x %i angles" % (chart.num_nodes, n_theta), file=log.v4)

    def theta_at_radius(self, R):
        """
        theta in [0, 1/2] at which the orbit of each node passes through R (outward).

        :param numpy.ndarray R: (n_R,)
        :return: theta (n_R, n_s, n_L) with NaN where R is not in [r_-, r_+], and that mask
        :rtype: (numpy.ndarray, numpy.ndarray)
        """
        R = numpy.atleast_1d(numpy.asarray(R, dtype=float))
        r_m, delta, harmonic = self._flat_fam
        with numpy.errstate(divide="ignore", invalid="ignore"):
            frac = (R[:, None] - r_m[None, :]) / delta[None, :]
        inside = (frac >= 0.0) & (frac <= 1.0) & ~harmonic[None, :] & (delta[None, :] > 0)
        phi = numpy.arcsin(numpy.sqrt(numpy.clip(numpy.where(inside, frac, 0.0), 0.0, 1.0)))
        theta = chebyshev.chebval(4.0 * phi / math.pi - 1.0, self.theta_coef, tensor=False)
        theta = numpy.clip(theta, 0.0, 0.5)
        theta = numpy.where(inside, theta, numpy.nan)
        shape = (len(R),) + self.chart.shape
        return theta.reshape(shape), inside.reshape(shape)


