"""
The change of variables I = (E, L) -> (y, z) at a fixed radius R,
with y = omega(I) the orbital frequency and z = E - Psi_L(R) = w^2/2 the kinetic offset at R.
The image of the support {E >= Psi_L(R)} is called J_R.

The map is used by every singular integral in the resolvent,
where the weight q = |phi'| / |P_R omega| with P_R = (1/(2 R^2)) d/dE + d/dL shows up.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy
from scipy import optimize

from gravdamp.log import log
from gravdamp.steady_state import effective_potential, minimum_point, momentum_at_minimum
from gravdamp.util.basic import GravDampError


class OutsideFoliationError(GravDampError):
    """
    E < Psi_L(R), i.e. the orbit does not pass through R.
    """


class FoliationError(GravDampError):
    """
    Inversion failed, or the Jacobian is not positive.
    """


@dataclass(frozen=True)
class FoliationPoint:
    """
    A point of J_R.
    """

    R: float
    y: float
    z: float

    def __post_init__(self):
        assert self.z >= 0, "z must be >= 0, got %r" % self.z


def vacuum_weight(model, E, L):
    """
    |phi'(E, L)| = mu (E0 - E)_+^(mu-1) (L - L0)_+^nu, the weight of the linearized dynamics.
    It vanishes on the vacuum boundary E = E0 or L = L0.

    :param gravdamp.steady_state.PolytropeModel model:
    :param numpy.ndarray|float E:
    :param numpy.ndarray|float L:
    :rtype: numpy.ndarray|float
    """
    p = model.params
    dE = numpy.maximum(model.E0 - numpy.asarray(E, dtype=float), 0.0)
    dL = numpy.maximum(numpy.asarray(L, dtype=float) - p.L0, 0.0)
    return (p.mu * dE ** (p.mu - 1.0) * dL**p.nu)[()]


def to_yz(model, chart, R, E, L, tol=1e-13):
    """
    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param float R:
    :param numpy.ndarray|float E:
    :param numpy.ndarray|float L:
    :param float tol: E may be below Psi_L(R) by that much (relative), z is then 0
    :return: (y, z)
    """
    E = numpy.asarray(E, dtype=float)
    z = E - effective_potential(model, R, L)
    if numpy.any(z < -tol * numpy.abs(E)):
        raise OutsideFoliationError("E < Psi_L(R) at R=%r, min z=%r" % (R, float(numpy.min(z))))
    return chart.frequency(E, L), numpy.maximum(z, 0.0)[()]


def jacobian(model, chart, R, E, L, check=True):
    """
    -P_R omega = -(d_E omega / (2 R^2) + d_L omega), the determinant of d(y, z)/d(E, L) up to sign.

    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param float R:
    :param numpy.ndarray|float E:
    :param numpy.ndarray|float L:
    :param bool check: raise FoliationError if not positive
    :rtype: numpy.ndarray|float
    """
    d_E = chart.frequency(E, L, dE=1)
    d_L = chart.frequency(E, L, dL=1)
    jac = -(d_E / (2.0 * R**2) + d_L)
    if check and numpy.any(jac <= 0):
        raise FoliationError(
            "P_R omega is not negative at R=%r (min -P_R omega = %r), eta=%r too large?"
            % (R, float(numpy.min(jac)), model.params.eta)
        )
    return jac


def weight_q(model, chart, R, E, L):
    """
    q(R, I) = |phi'(I)| / |P_R omega(R, I)|, zero outside the support.

    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param float R:
    :param numpy.ndarray|float E:
    :param numpy.ndarray|float L:
    :rtype: numpy.ndarray|float
    """
    phi = vacuum_weight(model, E, L)
    return (phi / numpy.abs(jacobian(model, chart, R, E, L)))[()]


def _slice_bounds(model, chart, R, z):
    """
    :return: the L range in which E = z + Psi_L(R) stays in the chart
    """
    L0 = model.params.L0
    L_z = 2.0 * R**2 * (model.E0 - z - float(model.U(R)) + model.params.M / R)
    return L0, min(L_z, chart.L[-1])


def from_yz(model, chart, R, y, z, max_iter=50, tol=1e-13):
    """
    Damped Newton iteration with halving line search for {omega(E,L) = y, E - Psi_L(R) = z},
    seeded with the Kepler solution. If that fails, bisection in L along E = z + Psi_L(R),
    where omega is monotone.

    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param float R:
    :param float y:
    :param float z:
    :param int max_iter:
    :param float tol: relative, on the residual in y
    :return: (E, L)
    :rtype: (float, float)
    """
    if z < 0:
        raise OutsideFoliationError("z=%r < 0" % z)
    M = model.params.M
    UR = float(model.U(R))
    L_lo, L_hi = _slice_bounds(model, chart, R, z)
    if L_hi < L_lo:
        raise OutsideFoliationError("z=%r too large at R=%r" % (z, R))
    E = -((math.pi * M * y / math.sqrt(2.0)) ** (2.0 / 3.0))
    L = min(max(2.0 * R**2 * (E - z - UR + M / R), L_lo), L_hi)
    E = z + float(effective_potential(model, R, L))

    def residual(E_, L_):
        return numpy.array([float(chart.frequency(E_, L_)) - y, E_ - float(effective_potential(model, R, L_)) - z])

    def norm(res):
        return math.hypot(res[0] / y, res[1] / max(abs(E), 1e-300))

    res = residual(E, L)
    converged = False
    for it in range(max_iter):
        if abs(res[0]) <= tol * y and abs(res[1]) <= tol * abs(E):
            converged = True
            break
        a = float(chart.frequency(E, L, dE=1))
        b = float(chart.frequency(E, L, dL=1))
        mat = numpy.array([[a, b], [1.0, -0.5 / R**2]])
        try:
            dE, dL = numpy.linalg.solve(mat, -res)
        except numpy.linalg.LinAlgError:
            break
        step = 1.0
        n0 = norm(res)
        while step > 1e-6:
            E_new = E + step * dE
            L_new = min(max(L + step * dL, L_lo), L_hi)
            if E_new <= model.E0 + 1e-15 * abs(model.E0):
                res_new = residual(E_new, L_new)
                if norm(res_new) < n0:
                    break
            step *= 0.5
        else:
            break
        E, L, res = E_new, L_new, res_new
    if converged:
        print("from_yz: Newton converged in %i iterations" % it, file=log.v5)
        return E, L

    def slice_residual(L_):
        return float(chart.frequency(z + float(effective_potential(model, R, L_)), L_)) - y

    g_lo, g_hi = slice_residual(L_lo), slice_residual(L_hi)
    if g_lo * g_hi > 0:
        raise FoliationError(
            "from_yz: Newton failed and y=%r is not bracketed on the slice at R=%r, z=%r" % (y, R, z)
        )
    log.print_warning("from_yz: Newton did not converge at R=%r, using bisection" % R)
    L = optimize.brentq(slice_residual, L_lo, L_hi, xtol=1e-15 * L_hi, rtol=1e-14)
    return z + float(effective_potential(model, R, L)), L


def momentum_deviation_law(model, R, energies):
    """
    Largest |L - L_R| over the points of J_R with E - E_min^L = energy,
    where L_R is the momentum whose circular orbit has radius R.
    Grows like sqrt(energy).

    :param gravdamp.steady_state.PolytropeModel model:
    :param float R:
    :param numpy.ndarray energies: gaps above E_min^L, positive
    :rtype: numpy.ndarray
    """
    L0, Lmax = model.params.L0, model.Lmax
    L_R = float(momentum_at_minimum(model, R))

    def gap(L):
        # Psi_L(R) - E_min^L >= 0, zero at L_R
        return float(effective_potential(model, R, L)) - minimum_point(model, L)[1]

    out = []
    for level in numpy.asarray(energies, dtype=float):
        devs = [0.0]
        for end in (L0, Lmax):
            if end == L_R:
                continue
            if gap(end) <= level:
                devs.append(abs(end - L_R))
                continue
            root = optimize.brentq(lambda L: gap(L) - level, min(L_R, end), max(L_R, end), rtol=1e-14)
            devs.append(abs(root - L_R))
        out.append(max(devs))
    return numpy.array(out)


def level_set_endpoints(model, chart, R, z):
    """
    The curve {E - Psi_L(R) = z} in the (E, L) support starts on L = L0 and ends on E = E0,
    both on the vacuum boundary.

    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param float R:
    :param float z:
    :return: the two end points (E, L)
    :rtype: ((float, float), (float, float))
    """
    L0 = model.params.L0
    E_start = z + float(effective_potential(model, R, L0))
    if E_start > model.E0 or z < 0:
        raise OutsideFoliationError("level z=%r is not in J_R at R=%r" % (z, R))
    L_end = 2.0 * R**2 * (model.E0 - z - float(model.U(R)) + model.params.M / R)
    assert L_end <= model.Lmax * (1 + 1e-12), "level set end point beyond Lmax"
    return (E_start, L0), (model.E0, L_end)


def boundary_curves(model, chart, R, n=65):
    """
    The three edges of J_R in the (y, z) plane: the images of L = L0, of E = E0, and the curve z = 0.

    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param float R:
    :param int n: points per edge
    :return: edge name -> (y, z, E, L), each an array of length n
    :rtype: dict[str,tuple[numpy.ndarray]]
    """
    L0, E0 = model.params.L0, model.E0
    psi0 = float(effective_potential(model, R, L0))
    if psi0 > E0:
        raise OutsideFoliationError("R=%r outside [Rmin, Rmax]" % R)
    _, L_top = _slice_bounds(model, chart, R, 0.0)
    t = numpy.linspace(0.0, 1.0, n)
    curves = {}
    E = psi0 + t * (E0 - psi0)
    L = numpy.full(n, L0)
    curves["L0"] = (chart.frequency(E, L), E - psi0, E, L)
    L = L0 + t * (L_top - L0)
    E = numpy.full(n, E0)
    curves["E0"] = (chart.frequency(E, L), numpy.maximum(E0 - effective_potential(model, R, L), 0.0), E, L)
    E = effective_potential(model, R, L)
    E = numpy.maximum(E, chart.e_min_at(L))
    curves["z0"] = (chart.frequency(E, L), numpy.zeros(n), E, L)
    return curves
