"""
Polytropic shell equilibria with a central point mass.

The steady state is phi(E, L) = eta * (E0 - E)_+^mu * (L - L0)_+^nu.
For eta = 0 this is the exact Kepler state (no self-gravity, U = 0),
for small eta > 0 the potential is found by a Picard iteration on the radial Poisson equation.

Units: G = 1, Delta U = 4 pi rho, rho(r) = (pi / r^2) * int int f dw dL.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, asdict

import numpy
from scipy import integrate, interpolate, optimize, special

from gravdamp.log import log
from gravdamp.util.basic import GravDampError, better_repr, eval_repr_text, write_text_file_atomic
from gravdamp.util.numerics import bisect_vectorized, chebyshev_lobatto


class ParameterError(GravDampError):
    """
    Invalid polytrope parameters.
    """


class SteadyStateError(GravDampError):
    """
    The Picard iteration did not converge.
    """

    def __init__(self, msg, contraction=None, iterations=None):
        """
        :param str msg:
        :param float|None contraction: last measured ratio of successive updates
        :param int|None iterations:
        """
        super().__init__(msg)
        self.contraction = contraction
        self.iterations = iterations


class DegenerateStateError(GravDampError):
    """
    The density has empty support.
    """


class GeometryError(GravDampError):
    """
    A root of the effective potential could not be bracketed.
    """


class DomainError(GravDampError):
    """
    Argument outside the domain of definition, e.g. r <= 0.
    """


@dataclass(frozen=True)
class PolytropeParams:
    """
    Parameters of the steady state.
    """

    mu: float = 3.5
    nu: float = 2.0
    eta: float = 0.0
    kappa: float = -0.25
    M: float = 1.0
    L0: float = 1.0

    def kappa_window(self):
        """
        :return: (lo, hi) open interval of kappa for which the spectrum has a single gap
        :rtype: (float,float)
        """
        return -(2.0 ** (-2.0 / 3.0)) * self.M**2 / (2.0 * self.L0), 0.0

    def validate(self, eta_max=0.05):
        """
        :param float eta_max:
        :raises ParameterError:
        """
        if not self.mu > 2:
            raise ParameterError("mu must be > 2, got %r" % self.mu)
        if not self.nu > 1:
            raise ParameterError("nu must be > 1, got %r" % self.nu)
        if not self.M > 0:
            raise ParameterError("M must be > 0, got %r" % self.M)
        if not self.L0 > 0:
            raise ParameterError("L0 must be > 0, got %r" % self.L0)
        if not 0 <= self.eta <= eta_max:
            raise ParameterError("eta must be in [0, %r], got %r" % (eta_max, self.eta))
        if self.M**2 + 2.0 * self.kappa * self.L0 < 0:
            raise ParameterError("M^2 + 2 kappa L0 < 0 for kappa=%r" % self.kappa)
        lo, hi = self.kappa_window()
        if not lo < self.kappa < hi:
            raise ParameterError("kappa=%r outside the single-gap window (%r, %r)" % (self.kappa, lo, hi))

    @property
    def energy_exponent(self):
        """
        :return: exponent of (E0 - Psi_L0(r)) in the density
        :rtype: float
        """
        return self.mu + self.nu + 1.5

    def as_dict(self):
        """
        :rtype: dict[str,float]
        """
        return asdict(self)


class RadialProfile:
    """
    A radial function on a grid, e.g. a potential or a force.
    Cubic (Hermite if derivatives are given) interpolation inside the grid,
    ``exterior / r**exterior_power`` beyond the last node and the value of the first node below it
    (hollow interior).
    """

    def __init__(self, grid, values, derivatives=None, exterior=0.0, exterior_power=1):
        """
        :param numpy.ndarray grid: strictly increasing, positive
        :param numpy.ndarray values:
        :param numpy.ndarray|None derivatives:
        :param float exterior: coefficient c of the continuation c/r^p
        :param int exterior_power: p
        """
        self.grid = numpy.asarray(grid, dtype=float)
        self.values = numpy.asarray(values)
        self.derivatives = None if derivatives is None else numpy.asarray(derivatives)
        self.exterior = exterior
        self.exterior_power = exterior_power
        assert self.grid.ndim == 1 and len(self.grid) >= 2 and numpy.all(numpy.diff(self.grid) > 0)
        assert self.values.shape == self.grid.shape
        if self.derivatives is not None:
            self._spline = interpolate.CubicHermiteSpline(self.grid, self.values, self.derivatives)
        else:
            self._spline = interpolate.CubicSpline(self.grid, self.values)
        self.is_zero = not numpy.any(self.values) and not exterior

    def __repr__(self):
        return "<RadialProfile [%r, %r] n=%i exterior=%r/r^%i>" % (
            self.grid[0],
            self.grid[-1],
            len(self.grid),
            self.exterior,
            self.exterior_power,
        )

    def __call__(self, r, nu=0):
        """
        :param numpy.ndarray|float r:
        :param int nu: derivative order, 0 to 3
        :rtype: numpy.ndarray|float
        """
        r_ = numpy.asarray(r, dtype=float)
        if self.is_zero:
            out = numpy.zeros(r_.shape, dtype=self.values.dtype)
            return out if out.ndim else out[()]
        out = numpy.zeros(r_.shape, dtype=numpy.result_type(self.values.dtype, float))
        lo, hi = self.grid[0], self.grid[-1]
        inside = (r_ >= lo) & (r_ <= hi)
        out[inside] = self._spline(r_[inside], nu)
        below = r_ < lo
        if nu == 0:
            out[below] = self.values[0]
        above = r_ > hi
        if numpy.any(above):
            p = self.exterior_power
            coeff = self.exterior * {0: 1.0, 1: -p, 2: p * (p + 1.0), 3: -p * (p + 1.0) * (p + 2.0)}[nu]
            out[above] = coeff / r_[above] ** (p + nu)
        return out if out.ndim else out[()]

    def derivative(self, r, order=1):
        """
        :param numpy.ndarray|float r:
        :param int order:
        :rtype: numpy.ndarray|float
        """
        return self(r, nu=order)

    def as_dict(self):
        """
        :rtype: dict[str]
        """
        return {
            "grid": self.grid,
            "values": self.values,
            "derivatives": self.derivatives,
            "exterior": self.exterior,
            "exterior_power": self.exterior_power,
        }

    @classmethod
    def from_dict(cls, d):
        """
        :param dict[str] d: see :func:`as_dict`
        :rtype: RadialProfile
        """
        return cls(
            grid=numpy.array(d["grid"]),
            values=numpy.array(d["values"]),
            derivatives=None if d["derivatives"] is None else numpy.array(d["derivatives"]),
            exterior=d["exterior"],
            exterior_power=d["exterior_power"],
        )


def density_constant(mu, nu):
    """
    Closed form of c_{mu,nu} in rho(r) = eta c r^{2 nu} (E0 - Psi_L0(r))_+^{mu+nu+3/2}.

    :param float mu:
    :param float nu:
    :rtype: float
    """
    return (
        math.pi
        * math.sqrt(2.0)
        * 2.0 ** (nu + 1.0)
        * special.beta(0.5, mu + 1.0)
        * special.beta(nu + 1.0, mu + 1.5)
    )


def brute_force_density_constant(params, r=None):
    """
    c_{mu,nu} from a 2D quadrature of int int (E0-E)_+^mu (L-L0)_+^nu dw dL
    in the Kepler potential at radius r. Independent of :func:`density_constant`.

    :param PolytropeParams params:
    :param float|None r: defaults to the minimum of Psi_L0
    :rtype: float
    """
    mu, nu, kappa, M, L0 = params.mu, params.nu, params.kappa, params.M, params.L0
    if r is None:
        r = L0 / M
    a = kappa + M / r - L0 / (2.0 * r**2)  # E0 - Psi_L0(r)
    assert a > 0, "r=%r outside the support" % r
    w_max = math.sqrt(2.0 * a)

    def integrand(L, w):
        return max(a - 0.5 * w**2 - (L - L0) / (2.0 * r**2), 0.0) ** mu * (L - L0) ** nu

    value, _ = integrate.dblquad(
        integrand,
        -w_max,
        w_max,
        lambda w: L0,
        lambda w: L0 + 2.0 * r**2 * max(a - 0.5 * w**2, 0.0),
        epsabs=0.0,
        epsrel=1e-11,
    )
    rho = math.pi / r**2 * value
    return rho / (r ** (2.0 * nu) * a**params.energy_exponent)


class PolytropeModel:
    """
    A steady state. Treat as immutable.
    """

    def __init__(
        self,
        params,
        U_table,
        E0,
        Lmax=None,
        Rmin=None,
        Rmax=None,
        iterations=0,
        contraction=0.0,
        total_mass=0.0,
        radial_grid=None,
    ):
        """
        :param PolytropeParams params:
        :param RadialProfile U_table: gravitational potential of the shell, zero at infinity
        :param float E0: cut-off energy
        :param float|None Lmax: if None, computed
        :param float|None Rmin: if None, computed
        :param float|None Rmax: if None, computed
        :param int iterations: Picard iterations used
        :param float contraction: last measured contraction estimate
        :param float total_mass: mass of the shell (without the point mass)
        :param numpy.ndarray|None radial_grid: grid of the Picard iteration
        """
        self.params = params
        self.U_table = U_table
        self.E0 = float(E0)
        self.density_constant = density_constant(params.mu, params.nu)
        self.iterations = iterations
        self.contraction = contraction
        self.total_mass = total_mass
        self.radial_grid = U_table.grid if radial_grid is None else numpy.asarray(radial_grid)
        self.is_kepler = U_table.is_zero
        if Rmin is None or Rmax is None:
            Rmin, Rmax = _support_radii(self)
        self.Rmin, self.Rmax = float(Rmin), float(Rmax)
        if Lmax is None:
            Lmax = _max_momentum(self)
        self.Lmax = float(Lmax)

    def __repr__(self):
        return "<PolytropeModel %s E0=%r Lmax=%r R=[%r, %r]>" % (
            ", ".join("%s=%r" % kv for kv in self.params.as_dict().items()),
            self.E0,
            self.Lmax,
            self.Rmin,
            self.Rmax,
        )

    @property
    def N(self):
        """
        :return: max{n in N : n < mu + nu + 3/2}, the regularity of the steady state
        :rtype: int
        """
        return int(math.ceil(self.params.energy_exponent)) - 1

    @property
    def Kdefault(self):
        """
        :return: floor(min{mu-1, nu})
        :rtype: int
        """
        return int(math.floor(min(self.params.mu - 1.0, self.params.nu)))

    def decay_index(self, k=float("inf")):
        """
        :param float k: regularity of the initial data
        :return: K = min{mu-1, nu, k}, the predicted force decay exponent
        :rtype: float
        """
        return min(self.params.mu - 1.0, self.params.nu, k)

    def U(self, r):
        """
        :param numpy.ndarray|float r:
        """
        return self.U_table(r)

    def dU(self, r):
        """
        :param numpy.ndarray|float r:
        """
        return self.U_table(r, nu=1)

    def d2U(self, r):
        """
        Second derivative of the interpolant.
        Inside the grid it satisfies U'' = 4 pi rho - 2 U'/r up to the interpolation error.

        :param numpy.ndarray|float r:
        """
        return self.U_table(r, nu=2)

    def d3U(self, r):
        """
        Third derivative of the interpolant, piecewise constant.

        :param numpy.ndarray|float r:
        """
        return self.U_table(r, nu=3)

    @property
    def interpolation_error(self):
        """
        :return: relative distance of the Hermite interpolant of U to the plain cubic spline through the same
          values, at the midpoints of the radial grid. Zero for the Kepler state.
        :rtype: float
        """
        if self.is_kepler:
            return 0.0
        if getattr(self, "_interpolation_error", None) is None:
            grid = self.U_table.grid
            mid = 0.5 * (grid[1:] + grid[:-1])
            plain = interpolate.CubicSpline(grid, self.U_table.values)
            scale = float(numpy.max(numpy.abs(self.U_table.values)))
            self._interpolation_error = float(numpy.max(numpy.abs(self.U(mid) - plain(mid)))) / scale
        return self._interpolation_error

    def density(self, r):
        """
        :param numpy.ndarray|float r:
        :rtype: numpy.ndarray|float
        """
        p = self.params
        r = numpy.asarray(r, dtype=float)
        if p.eta == 0:
            return numpy.zeros_like(r)[()]
        a = self.E0 - effective_potential(self, r, p.L0)
        return p.eta * self.density_constant * r ** (2.0 * p.nu) * numpy.maximum(a, 0.0) ** p.energy_exponent

    def save(self, filename):
        """
        Structured text, readable by :func:`load`.

        :param str filename:
        """
        d = {
            "params": self.params.as_dict(),
            "E0": self.E0,
            "Lmax": self.Lmax,
            "Rmin": self.Rmin,
            "Rmax": self.Rmax,
            "iterations": self.iterations,
            "contraction": self.contraction,
            "total_mass": self.total_mass,
            "U_table": self.U_table.as_dict(),
        }
        write_text_file_atomic(filename, better_repr(d))

    @classmethod
    def load(cls, filename):
        """
        :param str filename:
        :rtype: PolytropeModel
        """
        d = eval_repr_text(open(filename).read())
        return cls(
            params=PolytropeParams(**d["params"]),
            U_table=RadialProfile.from_dict(d["U_table"]),
            E0=d["E0"],
            Lmax=d["Lmax"],
            Rmin=d["Rmin"],
            Rmax=d["Rmax"],
            iterations=d["iterations"],
            contraction=d["contraction"],
            total_mass=d["total_mass"],
        )


def kepler_turning_points(E, L, M):
    """
    Roots of E = -M/r + L/(2 r^2), written without cancellation.

    :param numpy.ndarray|float E: negative
    :param numpy.ndarray|float L:
    :param float M:
    :return: (r_minus, r_plus)
    """
    disc = numpy.sqrt(numpy.maximum(M**2 + 2.0 * E * L, 0.0))
    return L / (M + disc), (M + disc) / (-2.0 * E)


def build_kepler(params, eta_max=0.05):
    """
    :param PolytropeParams params: eta must be 0
    :param float eta_max:
    :rtype: PolytropeModel
    """
    if params.eta != 0:
        raise ParameterError("build_kepler needs eta = 0, got %r" % params.eta)
    params.validate(eta_max=eta_max)
    kappa, M, L0 = params.kappa, params.M, params.L0
    r_min, r_max = kepler_turning_points(kappa, L0, M)
    grid = numpy.array([r_min, r_max])
    U_table = RadialProfile(grid, numpy.zeros(2), numpy.zeros(2), exterior=0.0)
    model = PolytropeModel(
        params, U_table, E0=kappa, Lmax=-(M**2) / (2.0 * kappa), Rmin=float(r_min), Rmax=float(r_max)
    )
    print("Kepler state: %r" % model, file=log.v3)
    return model


def _poisson_solve(r, rho):
    """
    :param numpy.ndarray r: radial grid
    :param numpy.ndarray rho: density on the grid, zero at both ends
    :return: U, U', total mass
    :rtype: (numpy.ndarray, numpy.ndarray, float)
    """
    m = 4.0 * math.pi * integrate.cumulative_simpson(rho * r**2, x=r, initial=0.0)
    m_tot = float(m[-1])
    inner = integrate.cumulative_simpson(m / r**2, x=r, initial=0.0)
    U = -m_tot / r[-1] - (inner[-1] - inner)
    return U, m / r**2, m_tot


def build_selfconsistent(params, radial_nodes=2048, tol=1e-12, max_iter=200, relaxation=1.0, eta_max=0.05):
    """
    Picard iteration: density from the current potential, then Poisson, then the new cut-off energy
    E0 = kappa + U(0). The radial grid covers the Kepler support with some padding
    and is clustered at its ends.

    :param PolytropeParams params:
    :param int radial_nodes:
    :param float tol: on sup |Delta U|
    :param int max_iter:
    :param float relaxation: U <- U + relaxation * (U_new - U)
    :param float eta_max:
    :rtype: PolytropeModel
    """
    params.validate(eta_max=eta_max)
    if params.eta == 0:
        return build_kepler(params, eta_max=eta_max)
    r_min0, r_max0 = kepler_turning_points(params.kappa, params.L0, params.M)
    pad = 0.1 * (r_max0 - r_min0)
    r = chebyshev_lobatto(radial_nodes, max(r_min0 - pad, 0.5 * r_min0), r_max0 + pad)
    c = density_constant(params.mu, params.nu)
    U = numpy.zeros_like(r)
    E0 = params.kappa
    prev_diff = None
    contraction = 0.0
    for it in range(1, max_iter + 1):
        a = E0 - (U - params.M / r + params.L0 / (2.0 * r**2))
        rho = params.eta * c * r ** (2.0 * params.nu) * numpy.maximum(a, 0.0) ** params.energy_exponent
        if not numpy.any(rho > 0):
            raise DegenerateStateError("empty support in iteration %i, E0=%r" % (it, E0))
        U_new, _, m_tot = _poisson_solve(r, rho)
        U_new = U + relaxation * (U_new - U)
        diff = float(numpy.max(numpy.abs(U_new - U)))
        if prev_diff:
            contraction = diff / prev_diff
        prev_diff = diff
        U = U_new
        E0 = params.kappa + U[0]
        print("steady state iteration %i: sup|dU| = %.3e, contraction %.3e" % (it, diff, contraction), file=log.v4)
        if diff < tol:
            break
    else:
        raise SteadyStateError(
            "Picard iteration did not converge in %i iterations, contraction estimate %r" % (max_iter, contraction),
            contraction=contraction,
            iterations=max_iter,
        )
    a = E0 - (U - params.M / r + params.L0 / (2.0 * r**2))
    rho = params.eta * c * r ** (2.0 * params.nu) * numpy.maximum(a, 0.0) ** params.energy_exponent
    _, dU, m_tot = _poisson_solve(r, rho)
    U_table = RadialProfile(r, U, dU, exterior=-m_tot)
    model = PolytropeModel(
        params, U_table, E0=E0, iterations=it, contraction=contraction, total_mass=m_tot, radial_grid=r
    )
    print("self-consistent state after %i iterations: %r, shell mass %.6e" % (it, model, m_tot), file=log.v3)
    return model


def build_model(params, radial_nodes=2048, tol=1e-12, max_iter=200, relaxation=1.0, eta_max=0.05):
    """
    Kepler state for eta = 0, otherwise the self-consistent one.

    :rtype: PolytropeModel
    """
    return build_selfconsistent(
        params, radial_nodes=radial_nodes, tol=tol, max_iter=max_iter, relaxation=relaxation, eta_max=eta_max
    )


def _check_radius(r):
    r = numpy.asarray(r, dtype=float)
    if numpy.any(r <= 0):
        raise DomainError("radius must be > 0, got %r" % (r[r <= 0].ravel()[:5],))
    return r


def effective_potential(model, r, L):
    """
    Psi_L(r) = U(r) - M/r + L/(2 r^2).

    :param PolytropeModel model:
    :param numpy.ndarray|float r:
    :param numpy.ndarray|float L:
    :rtype: numpy.ndarray|float
    """
    r = _check_radius(r)
    return (model.U(r) - model.params.M / r + L / (2.0 * r**2))[()]


def effective_potential_derivative(model, r, L, order=1):
    """
    :param PolytropeModel model:
    :param numpy.ndarray|float r:
    :param numpy.ndarray|float L:
    :param int order: 1 or 2
    :rtype: numpy.ndarray|float
    """
    r = _check_radius(r)
    M = model.params.M
    if order == 1:
        return (model.dU(r) + M / r**2 - L / r**3)[()]
    if order == 2:
        return (model.d2U(r) - 2.0 * M / r**3 + 3.0 * L / r**4)[()]
    raise ValueError("order must be 1 or 2, got %r" % order)


def momentum_at_minimum(model, R):
    """
    L_R such that the minimum point of Psi_{L_R} is R: L_R = R^3 U'(R) + M R.

    :param PolytropeModel model:
    :param numpy.ndarray|float R:
    :rtype: numpy.ndarray|float
    """
    R = _check_radius(R)
    return (R**3 * model.dU(R) + model.params.M * R)[()]


def minimum_points(model, L):
    """
    Vectorized :func:`minimum_point`.

    :param PolytropeModel model:
    :param numpy.ndarray L:
    :return: r_L, E_min^L, alpha_L
    :rtype: (numpy.ndarray, numpy.ndarray, numpy.ndarray)
    """
    L = numpy.asarray(L, dtype=float)
    M = model.params.M
    if model.is_kepler:
        r_L = L / M
    else:
        # r^3 U'(r) + M r is increasing and lies in [M r, (M + m_tot) r].
        lo = L / (M + model.total_mass) * (1.0 - 1e-9)
        hi = L / M * (1.0 + 1e-9)
        r_L = bisect_vectorized(lambda r: momentum_at_minimum(model, r) - L, lo, hi)
    e_min = effective_potential(model, r_L, L)
    alpha = effective_potential_derivative(model, r_L, L, order=2)
    return r_L, e_min, alpha


def minimum_point(model, L):
    """
    :param PolytropeModel model:
    :param float L:
    :return: (r_L, E_min^L, alpha_L), the minimum of Psi_L, its value and Psi_L''(r_L) > 0
    :rtype: (float, float, float)
    """
    M = model.params.M
    if model.is_kepler:
        r_L = L / M
    else:
        lo = L / (M + model.total_mass) * (1.0 - 1e-9)
        hi = L / M * (1.0 + 1e-9)
        g = lambda r: float(momentum_at_minimum(model, r)) - L  # noqa: E731
        if not g(lo) <= 0 <= g(hi):
            raise GeometryError("minimum of Psi_L not bracketed for L=%r in [%r, %r]" % (L, lo, hi))
        r_L = optimize.brentq(g, lo, hi, xtol=1e-15 * hi, rtol=1e-14)
    alpha = float(effective_potential_derivative(model, r_L, L, order=2))
    assert alpha > 0, "Psi_L'' = %r <= 0 at r_L = %r" % (alpha, r_L)
    return float(r_L), float(effective_potential(model, r_L, L)), alpha


def _support_radii(model):
    """
    :param PolytropeModel model:
    :return: Rmin, Rmax with Psi_L0(R) = E0
    """
    L0 = model.params.L0
    r_L0, e_min, _ = minimum_point(model, L0)
    if not e_min < model.E0:
        raise DegenerateStateError("E0=%r <= min Psi_L0=%r, empty support" % (model.E0, e_min))
    f = lambda r: float(effective_potential(model, r, L0)) - model.E0  # noqa: E731
    lo = r_L0
    while f(lo) <= 0:
        lo *= 0.5
        if lo < 1e-12 * r_L0:
            raise GeometryError("inner support radius not bracketed")
    hi = r_L0
    while f(hi) <= 0:
        hi *= 2.0
        if hi > 1e12 * r_L0:
            raise GeometryError("outer support radius not bracketed")
    r_min = optimize.brentq(f, lo, r_L0, xtol=1e-15, rtol=1e-14)
    r_max = optimize.brentq(f, r_L0, hi, xtol=1e-15, rtol=1e-14)
    return r_min, r_max


def _max_momentum(model):
    """
    :param PolytropeModel model:
    :return: Lmax, the largest L with E_min^L <= E0
    """
    L0 = model.params.L0
    f = lambda L: minimum_point(model, L)[1] - model.E0  # noqa: E731
    hi = 2.0 * L0
    while f(hi) <= 0:
        hi *= 2.0
        if hi > 1e12 * L0:
            raise GeometryError("Lmax not bracketed")
    return optimize.brentq(f, L0, hi, xtol=1e-15, rtol=1e-14)


def self_consistency_residual(model):
    """
    Solves the Poisson equation once more for the density of the model.

    :param PolytropeModel model:
    :return: sup |U_new - U| on the radial grid
    :rtype: float
    """
    if model.is_kepler:
        return 0.0
    r = model.radial_grid
    U_new, _, _ = _poisson_solve(r, model.density(r))
    return float(numpy.max(numpy.abs(U_new - model.U(r))))


def density_profile(model, n=None):
    """
    :param PolytropeModel model:
    :param int|None n: if given, sample on that many Chebyshev points of [Rmin, Rmax] instead of the model grid
    :rtype: RadialProfile
    """
    if n is None and not model.is_kepler:
        r = model.radial_grid
    else:
        r = chebyshev_lobatto(n or 64, model.Rmin, model.Rmax)
    return RadialProfile(r, model.density(r), exterior=0.0)


def model_summary(model):
    """
    :param PolytropeModel model:
    :return: scalar quantities, for CSV output and logging
    :rtype: dict[str,float]
    """
    d = {"%s" % k: v for (k, v) in model.params.as_dict().items()}
    d.update(
        {
            "E0": model.E0,
            "Lmax": model.Lmax,
            "Rmin": model.Rmin,
            "Rmax": model.Rmax,
            "N": model.N,
            "Kdefault": model.Kdefault,
            "density_constant": model.density_constant,
            "iterations": model.iterations,
            "contraction": model.contraction,
            "total_mass": model.total_mass,
            "residual": self_consistency_residual(model),
        }
    )
    return d

