"""
Limiting absorption: the resolvent of the linearized generator at lambda +- i eps,
expressed through the potential profiles U^+-(R; lambda) which solve

    U = source + K U,    K[V](R) = eta int_R^Rmax (4 pi / r^2) sum_m (1/m) Pl[|phi'| V^_m S_m](r) dr,

where Pl[h](r) = int_{E >= Psi_L(r)} h(I) / (omega(I) + (lambda +- i eps) / (2 pi m)) dI is a Plemelj
singular integral and S_m = sin(2 pi m theta(r, I)).
The force of the linearized flow is recovered from these profiles by the Stone formula.

Singular integrals are computed column by column in the chart (fixed L, omega monotone in E),
integrating the singular factor exactly against piecewise linear interpolants.
"""

from __future__ import annotations

import math
import typing
from dataclasses import dataclass

import numpy
from scipy import integrate

from gravdamp.foliation import jacobian, vacuum_weight
from gravdamp.log import log
from gravdamp.spectral_field import GreensCache, force_radii
from gravdamp.steady_state import effective_potential
from gravdamp.transport import transport_force_series
from gravdamp.util.basic import GravDampError, parallel_map
from gravdamp.util.numerics import fit_power_law, tail_integration_matrix, trapezoid_weights


class InvertibilityError(GravDampError):
    """
    The Neumann iteration for U = source + K U does not contract.
    """

    def __init__(self, msg, norm=None, eta=None):
        """
        :param str msg:
        :param float|None norm: measured contraction factor of K
        :param float|None eta:
        """
        super().__init__(msg)
        self.norm = norm
        self.eta = eta


@dataclass(frozen=True)
class SpectralPoint:
    """
    lambda +- i eps.
    """

    lam: float
    epsilon: float
    sign: int  # +1 or -1

    def __post_init__(self):
        assert self.epsilon > 0, "epsilon must be > 0"
        assert self.sign in (1, -1), "sign must be +-1"

    def shift(self, m):
        """
        :param int m: nonzero mode
        :return: c = (lambda +- i eps) / (2 pi m)
        :rtype: complex
        """
        return complex(self.lam, self.sign * self.epsilon) / (2.0 * math.pi * m)


_SeriesTerms = 6


def segment_weights(dx, ya, yb, c):
    """
    Exact weights of int_a^b h(x) / (y(x) + c) dx for h and y linear on the segment,
    h(a) = h_a, h(b) = h_b: the integral is w_a h_a + w_b h_b.

    :param numpy.ndarray dx: segment lengths, >= 0
    :param numpy.ndarray ya: y at the left end
    :param numpy.ndarray yb: y at the right end
    :param complex|numpy.ndarray c: with nonzero imaginary part
    :rtype: (numpy.ndarray, numpy.ndarray)
    """
    a = ya + c
    dy = yb - ya
    x = dy / a
    small = numpy.abs(x) < 1e-3
    with numpy.errstate(divide="ignore", invalid="ignore"):
        ell = numpy.log(yb + c) - numpy.log(a)
        tau = a / dy
        wa = dx / dy * (ell * (1.0 + tau) - 1.0)
        wb = dx / dy * (1.0 - tau * ell)
    # log(1+x) expanded for nearly flat segments
    sa = numpy.zeros_like(a)
    sb = numpy.zeros_like(a)
    xs = numpy.where(small, x, 0.0)
    power = numpy.ones_like(a)
    for k in range(1, _SeriesTerms + 1):
        sign = 1.0 if k % 2 else -1.0
        sa = sa + sign * power / (k * (k + 1))
        sb = sb + sign * power / (k + 1)
        power = power * xs
    with numpy.errstate(divide="ignore", invalid="ignore"):
        scale = dx / a
    wa = numpy.where(small, scale * sa, wa)
    wb = numpy.where(small, scale * sb, wb)
    return wa, wb


def plemelj_line(y, g, c):
    """
    int g(y) / (y + c) dy for g piecewise linear on the nodes y.

    :param numpy.ndarray y: increasing
    :param numpy.ndarray g:
    :param complex c: Im c != 0
    :rtype: complex
    """
    y = numpy.asarray(y, dtype=float)
    g = numpy.asarray(g)
    wa, wb = segment_weights(numpy.diff(y), y[:-1], y[1:], c)
    return complex(numpy.sum(wa * g[:-1]) + numpy.sum(wb * g[1:]))


def plemelj_model_check(x, eps, span=1e4, n=4000):
    """
    (1/(2 pi i)) int g(y) / (y - x - i eps) dy for g(y) = 1/(1+y^2), compared against its eps -> 0 limit
    (g(x) + i Hg(x)) / 2. The Hilbert transform is taken from an independent principal value quadrature.

    :param float x:
    :param float eps:
    :param float span: integration over [x - span, x + span]
    :param int n: nodes on each side, geometric towards x
    :return: numeric value, exact finite eps value, limit, error of the numeric value against the limit,
      and the Hilbert transform from the principal value quadrature
    :rtype: dict[str]
    """
    g = lambda y: 1.0 / (1.0 + y**2)  # noqa: E731
    offsets = numpy.geomspace(1e-7, span, n)
    y = numpy.concatenate([x - offsets[::-1], [x], x + offsets])
    numeric = plemelj_line(y, g(y), complex(-x, -eps)) / (2j * math.pi)
    z = complex(x, eps)
    exact = 1.0 / (1.0 + z**2) + 1.0 / (2j * (1j - z))
    pv, _ = integrate.quad(g, x - span, x + span, weight="cauchy", wvar=x, epsabs=1e-13, epsrel=1e-12, limit=400)
    hilbert = -pv / math.pi
    limit = 0.5 * (g(x) + 1j * hilbert)
    return {
        "numeric": numeric,
        "exact": exact,
        "limit": limit,
        "error": abs(numeric - limit),
        "hilbert": hilbert,
    }


def near_resonant_set(chart, lam, M_max, width=None):
    """
    {m : exists I with |omega(I) + lambda/(2 pi m)| < width omega_min}.

    :param gravdamp.action_angle.ActionChart chart:
    :param float lam:
    :param int M_max:
    :param float|None width: in (0, omega_min/omega_max), default half of that
    :rtype: list[int]
    """
    w_min, w_max = chart.omega_min, chart.omega_max
    if width is None:
        width = 0.5 * w_min / w_max
    out = []
    for m in list(range(-M_max, 0)) + list(range(1, M_max + 1)):
        y = -lam / (2.0 * math.pi * m)
        if w_min - width * w_min < y < w_max + width * w_min:
            out.append(m)
    return out


def resonance_constants(chart, lambdas, M_max, width=None):
    """
    :param gravdamp.action_angle.ActionChart chart:
    :param numpy.ndarray lambdas:
    :param int M_max:
    :param float|None width:
    :return: C0 = max |Res(lambda)| / |lambda| and c0 = min over lambda of min |m| / |lambda|
    :rtype: (float, float)
    """
    sizes, mins = [], []
    for lam in lambdas:
        res = near_resonant_set(chart, lam, M_max, width)
        sizes.append(len(res) / abs(lam))
        if res:
            mins.append(min(abs(m) for m in res) / abs(lam))
    return max(sizes), (min(mins) if mins else float("inf"))


class PlemeljGeometry:
    """
    Chart columns cut at E = Psi_L(r) for a set of radii. Nodes below the cut collapse onto it,
    so every column is a polygon starting at the cut, where the integrands vanish.
    Arrays have shape (n_r, n_s, n_L).
    """

    def __init__(self, model, chart, radii):
        """
        :param gravdamp.steady_state.PolytropeModel model:
        :param gravdamp.action_angle.ActionChart chart:
        :param numpy.ndarray radii:
        """
        self.model = model
        self.chart = chart
        self.radii = numpy.asarray(radii, dtype=float)
        psi = effective_potential(model, self.radii[:, None], chart.L[None, :])  # (n_r, n_L)
        psi = numpy.maximum(psi, chart.e_min[None, :])
        self.inside = chart.E[None] >= psi[:, None, :]
        self.E = numpy.maximum(chart.E[None], psi[:, None, :])
        y_cut = chart.frequency(psi, numpy.broadcast_to(chart.L[None, :], psi.shape))
        self.y = numpy.where(self.inside, chart.omega[None], y_cut[:, None, :])

    def weights(self, c, refine=4):
        """
        :param complex c: shift of the singular denominator omega + c
        :param int refine: singular segments are split in 2^refine parts
        :return: weights W with int_{E >= Psi_L(r)} h dI / (omega + c) = sum W h, per radius
        :rtype: numpy.ndarray
        """
        E, y = self.E, self.y
        dE = numpy.diff(E, axis=1)
        ya, yb = y[:, :-1], y[:, 1:]
        wa, wb = segment_weights(dE, ya, yb, c)
        width = 5.0 * abs(c.imag)
        pole = -c.real
        near = (numpy.minimum(ya, yb) - width < pole) & (numpy.maximum(ya, yb) + width > pole) & (dE > 0)
        if refine and numpy.any(near):
            wa_r, wb_r = self._refined(numpy.nonzero(near), c, refine)
            wa[near] = wa_r
            wb[near] = wb_r
        W = numpy.zeros(E.shape, dtype=complex)
        W[:, :-1] += wa
        W[:, 1:] += wb
        W = numpy.where(self.inside, W, 0.0)
        return W * self.chart.L_weights[None, None, :]

    def _refined(self, index, c, refine):
        j, i, l = index
        n_sub = 2**refine
        tau = numpy.linspace(0.0, 1.0, n_sub + 1)
        Ea = self.E[j, i, l]
        Eb = self.E[j, i + 1, l]
        E_sub = Ea[:, None] + (Eb - Ea)[:, None] * tau[None, :]
        L_sub = numpy.broadcast_to(self.chart.L[l][:, None], E_sub.shape)
        y_sub = self.chart.frequency(E_sub, L_sub)
        y_sub[:, 0] = self.y[j, i, l]
        y_sub[:, -1] = self.y[j, i + 1, l]
        wa_s, wb_s = segment_weights(numpy.diff(E_sub, axis=1), y_sub[:, :-1], y_sub[:, 1:], c)
        t0, t1 = tau[None, :-1], tau[None, 1:]
        wa = numpy.sum(wa_s * (1.0 - t0) + wb_s * (1.0 - t1), axis=1)
        wb = numpy.sum(wa_s * t0 + wb_s * t1, axis=1)
        if numpy.max(numpy.abs(numpy.diff(y_sub, axis=1))) > abs(c.imag):
            log.print_warning("Plemelj integral: singular layer under-resolved at refinement %i" % refine)
        return wa, wb


def plemelj(model, chart, R, m, sp, Q, V, refine=4):
    """
    int_{J_R} Q V / (y + (lambda +- i eps)/(2 pi m)) d(y, z),
    computed in the (E, L) chart, where d(y, z) = -P_R omega dE dL.

    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param float R:
    :param int m: nonzero
    :param SpectralPoint sp:
    :param numpy.ndarray|callable Q: on the chart nodes, or a callable of (E, L)
    :param numpy.ndarray|callable V:
    :param int refine:
    :rtype: complex
    """
    assert m != 0
    geometry = PlemeljGeometry(model, chart, [R])
    values = []
    for f in (Q, V):
        values.append(f(chart.E, chart.L_grid) if callable(f) else numpy.asarray(f))
    jac = jacobian(model, chart, R, chart.E, chart.L_grid, check=False)
    W = geometry.weights(sp.shift(m), refine=refine)[0]
    return complex(numpy.sum(W * values[0] * values[1] * jac))


class ResolventSolver:
    """
    Assembles source and K on a radial grid, for one initial datum.
    """

    def __init__(self, model, chart, cache, field0, radii=None, refine=4, cache_limit=1 << 28):
        """
        :param gravdamp.steady_state.PolytropeModel model:
        :param gravdamp.action_angle.ActionChart chart:
        :param gravdamp.action_angle.OrbitCache cache:
        :param gravdamp.spectral_field.ModeField field0:
        :param numpy.ndarray|None radii: Chebyshev points of [Rmin, Rmax] by default, must end at Rmax
        :param int refine:
        :param int cache_limit: bytes up to which the orbit interpolation matrices are kept
        """
        self.model = model
        self.chart = chart
        self.cache = cache
        self.field0 = field0
        self.M_max = field0.M_max
        self.eta = model.params.eta
        self.refine = refine
        self.radii = force_radii(model, 32) if radii is None else numpy.asarray(radii, dtype=float)
        n_r = len(self.radii)
        self.C = tail_integration_matrix(self.radii)
        self.geometry = PlemeljGeometry(model, chart, self.radii)
        theta, inside = cache.theta_at_radius(self.radii)
        inside = inside & self.geometry.inside
        self._phase = numpy.where(inside, numpy.exp(2j * math.pi * numpy.nan_to_num(theta)), 1.0).reshape(n_r, -1)
        self.phi = vacuum_weight(model, chart.E, chart.L_grid).reshape(-1)
        self.T = chart.T.reshape(-1)
        r = cache.r.reshape(chart.num_nodes, -1)
        idx = numpy.clip(numpy.searchsorted(self.radii, r) - 1, 0, n_r - 2)
        t = numpy.clip((r - self.radii[idx]) / (self.radii[idx + 1] - self.radii[idx]), 0.0, 1.0)
        self._hat = (idx, t)
        self._A = {}
        self._cache_A = chart.num_nodes * n_r * 16 * self.M_max <= cache_limit

    def sin_mode(self, m):
        """
        :param int m:
        :return: sin(2 pi m theta(r, I)), (n_r, N), zero where the orbit misses r
        :rtype: numpy.ndarray
        """
        return (self._phase ** abs(m)).imag * (1.0 if m > 0 else -1.0)

    def orbit_modes(self, m):
        """
        A_m, mapping values on the radial grid (linearly interpolated) to the m-th angle mode along every orbit.

        :param int m:
        :rtype: numpy.ndarray
        """
        if m in self._A:
            return self._A[m]
        if -m in self._A:
            return numpy.conj(self._A[-m])
        idx, t = self._hat
        N, n_theta = idx.shape
        n_r = len(self.radii)
        phase = numpy.exp(-2j * math.pi * m * numpy.arange(n_theta) / n_theta) / n_theta
        rows = numpy.arange(N)[:, None] * n_r
        flat = numpy.concatenate([(rows + idx).ravel(), (rows + idx + 1).ravel()])
        vals = numpy.concatenate([((1.0 - t) * phase).ravel(), (t * phase).ravel()])
        A = numpy.bincount(flat, weights=vals.real, minlength=N * n_r) + 1j * numpy.bincount(
            flat, weights=vals.imag, minlength=N * n_r
        )
        A = A.reshape(N, n_r)
        if self._cache_A:
            self._A[m] = A
        return A

    def assemble(self, sp):
        """
        :param SpectralPoint sp:
        :return: source (n_r,), K (n_r, n_r), and the bare mode sum G with K = eta C diag(4 pi/r^2) G
        :rtype: (numpy.ndarray, numpy.ndarray, numpy.ndarray)
        """
        n_r = len(self.radii)
        src = numpy.zeros(n_r, dtype=complex)
        G = numpy.zeros((n_r, n_r), dtype=complex)
        f0 = self.field0
        for m in f0.modes:
            m = int(m)
            P = self.geometry.weights(sp.shift(m), refine=self.refine).reshape(n_r, -1)
            S = self.sin_mode(m)
            src += numpy.sum(P * S * (self.T * self.phi * f0.get(m).reshape(-1))[None], axis=1) / m**2
            if self.eta != 0:
                G += ((P * S * self.phi[None]) @ self.orbit_modes(m)) / m
        source = -self.C @ (2.0 / self.radii**2 * src)
        K = self.eta * self.C @ ((4.0 * math.pi / self.radii**2)[:, None] * G)
        return source, K, G

    def solve(self, sp, tol=1e-12, max_iter=200):
        """
        Neumann iteration U <- source + K U.

        :param SpectralPoint sp:
        :param float tol: relative sup norm of the update
        :param int max_iter:
        :return: U, G U, iterations, contraction estimate
        :rtype: (numpy.ndarray, numpy.ndarray, int, float)
        """
        source, K, G = self.assemble(sp)
        U = source.copy()
        contraction = 0.0
        prev = None
        scale = max(float(numpy.max(numpy.abs(source))), 1e-300)
        for it in range(1, max_iter + 1):
            U_new = source + K @ U
            diff = float(numpy.max(numpy.abs(U_new - U)))
            if prev:
                contraction = max(contraction, diff / prev) if it <= 3 else diff / prev
            prev = diff
            U = U_new
            if diff <= tol * scale:
                break
            if contraction >= 1.0 and it > 2:
                raise InvertibilityError(
                    "Neumann iteration diverges at lambda=%r: contraction %.3f, eta=%r"
                    % (sp.lam, contraction, self.eta),
                    norm=contraction,
                    eta=self.eta,
                )
        else:
            raise InvertibilityError(
                "Neumann iteration did not converge in %i iterations at lambda=%r, contraction %.3f, eta=%r"
                % (max_iter, sp.lam, contraction, self.eta),
                norm=contraction,
                eta=self.eta,
            )
        return U, G @ U, it, contraction

    def operator_norm(self, sp):
        """
        :param SpectralPoint sp:
        :return: spectral radius of K, the asymptotic contraction factor of the Neumann iteration
        :rtype: float
        """
        _, K, _ = self.assemble(sp)
        return float(numpy.max(numpy.abs(numpy.linalg.eigvals(K)), initial=0.0))


class ResolventSolution(typing.NamedTuple):
    """
    Profiles U^+-(R; lambda) on a lambda grid, for one epsilon.
    """

    lambdas: numpy.ndarray  # (n_lam,)
    epsilon: float
    radii: numpy.ndarray  # (n_r,)
    U_plus: numpy.ndarray  # (n_lam, n_r)
    U_minus: numpy.ndarray
    G_plus: numpy.ndarray  # G U, as used by the Stone formula
    G_minus: numpy.ndarray
    iterations: numpy.ndarray  # (n_lam, 2)
    contraction: numpy.ndarray  # (n_lam, 2)


def source_term(model, chart, field0, R, sp, cache=None, refine=4):
    """
    :param gravdamp.steady_state.PolytropeModel model:
    :param gravdamp.action_angle.ActionChart chart:
    :param gravdamp.spectral_field.ModeField field0:
    :param numpy.ndarray R: radial grid ending at Rmax
    :param SpectralPoint sp:
    :param gravdamp.action_angle.OrbitCache|None cache:
    :param int refine:
    :return: source profile on R
    :rtype: numpy.ndarray
    """
    from gravdamp.action_angle import OrbitCache

    cache = cache or OrbitCache(chart, n_theta=4 * field0.M_max)
    solver = ResolventSolver(model, chart, cache, field0, radii=R, refine=refine)
    source, _, _ = solver.assemble(sp)
    return source


def assemble_K(solver, sp):
    """
    :param ResolventSolver solver:
    :param SpectralPoint sp:
    :rtype: numpy.ndarray
    """
    _, K, _ = solver.assemble(sp)
    return K


def solve_F(solver, sp, tol=1e-12, max_iter=200):
    """
    :param ResolventSolver solver:
    :param SpectralPoint sp:
    :param float tol:
    :param int max_iter:
    :return: U profile, iterations, contraction estimate
    :rtype: (numpy.ndarray, int, float)
    """
    U, _, it, contraction = solver.solve(sp, tol=tol, max_iter=max_iter)
    return U, it, contraction


def solve_sweep(solver, lambdas, epsilon, tol=1e-12, max_iter=200, num_threads=1):
    """
    :param ResolventSolver solver:
    :param numpy.ndarray lambdas:
    :param float epsilon:
    :param float tol:
    :param int max_iter:
    :param int num_threads:
    :rtype: ResolventSolution
    """
    lambdas = numpy.asarray(lambdas, dtype=float)
    items = [SpectralPoint(float(lam), epsilon, sign) for lam in lambdas for sign in (1, -1)]
    results = parallel_map(lambda sp: solver.solve(sp, tol=tol, max_iter=max_iter), items, num_threads=num_threads)
    U = numpy.array([r[0] for r in results]).reshape(len(lambdas), 2, -1)
    GU = numpy.array([r[1] for r in results]).reshape(len(lambdas), 2, -1)
    its = numpy.array([r[2] for r in results]).reshape(len(lambdas), 2)
    contraction = numpy.array([r[3] for r in results]).reshape(len(lambdas), 2)
    print(
        "resolvent sweep eps=%r: %i lambdas, max contraction %.4f, max iterations %i"
        % (epsilon, len(lambdas), float(numpy.max(contraction, initial=0.0)), int(numpy.max(its, initial=0))),
        file=log.v3,
    )
    return ResolventSolution(
        lambdas, epsilon, solver.radii, U[:, 0], U[:, 1], GU[:, 0], GU[:, 1], its, contraction
    )


def conjugation_defect(solution):
    """
    max |U^- - conj U^+| / max |U^+|. Vanishes for data even in theta.

    :param ResolventSolution solution:
    :rtype: float
    """
    scale = max(float(numpy.max(numpy.abs(solution.U_plus))), 1e-300)
    return float(numpy.max(numpy.abs(solution.U_minus - numpy.conj(solution.U_plus)))) / scale


def resolvent_bound_sweep(solutions):
    """
    Tabulates |lambda| sup|U^+-| and lambda^2 sup|U^+ - U^-| for each epsilon,
    their growth trend in lambda, and the ratio between successive epsilons.

    :param list[ResolventSolution] solutions: same lambda grid, decreasing epsilon
    :rtype: dict[str]
    """
    rows = []
    for sol in solutions:
        lam = numpy.abs(sol.lambdas)
        first = lam * numpy.maximum(numpy.max(numpy.abs(sol.U_plus), axis=1), numpy.max(numpy.abs(sol.U_minus), axis=1))
        second = lam**2 * numpy.max(numpy.abs(sol.U_plus - sol.U_minus), axis=1)
        rows.append({"epsilon": sol.epsilon, "first": first, "second": second})
    report = {"lambdas": solutions[0].lambdas, "rows": rows}
    for key in ("first", "second"):
        report[key + "_trend"] = [
            fit_power_law(numpy.abs(solutions[0].lambdas), row[key]).slope if numpy.any(row[key] > 0) else 0.0
            for row in rows
        ]
        ratios = []
        for a, b in zip(rows[:-1], rows[1:]):
            ratios.append(float(numpy.max(b[key]) / max(float(numpy.max(a[key])), 1e-300)))
        report[key + "_eps_ratio"] = ratios
    return report


def lambda_grid(chart, M_max, num=40, cut=None, oversample=8, t_max=None, include_gap=False):
    """
    Symmetric lambda nodes, geometric from lambda_min to the cut off,
    with spacing at most 2 pi / (oversample t_max) when t_max is given.

    :param gravdamp.action_angle.ActionChart chart:
    :param int M_max:
    :param int num: geometric nodes (both signs together)
    :param float|None cut: default 2 pi M_max omega_max
    :param int oversample:
    :param float|None t_max: largest time the grid has to resolve
    :param bool include_gap: also cover (-lambda_min, lambda_min), for integrals over the whole line
    :rtype: numpy.ndarray
    """
    lam_min = chart.lambda_min
    if cut is None:
        cut = 2.0 * math.pi * M_max * chart.omega_max
    pos = numpy.geomspace(lam_min, cut, max(num // 2, 2))
    if t_max:
        max_step = 2.0 * math.pi / (oversample * t_max)
        refined = [pos[:1]]
        for a, b in zip(pos[:-1], pos[1:]):
            n = int(math.ceil((b - a) / max_step))
            refined.append(numpy.linspace(a, b, n + 1)[1:])
        pos = numpy.concatenate(refined)
        if include_gap:
            n = int(math.ceil(lam_min / max_step))
            pos = numpy.concatenate([numpy.linspace(0.0, lam_min, n + 1)[:-1], pos])
    elif include_gap:
        pos = numpy.concatenate([numpy.linspace(0.0, lam_min, 9)[:-1], pos])
    neg = -pos[::-1]
    if pos[0] == 0.0:
        neg = neg[:-1]
    return numpy.concatenate([neg, pos])


def stone_reconstruct(
    solver, times, epsilons, lambdas=None, oversample=8, num_threads=1, tol=1e-12, max_iter=200, tail_tol=1e-2
):
    """
    d_R U(t, R) = transport part + (2 i eta / R^2) int e^(i lambda t) (G^- - G^+) d lambda,
    where G^+- = sum_m (1/m) Pl[|phi'| U^_m S_m] at lambda +- i eps.
    At finite eps the lambda integral gives the flow damped by exp(-eps t), which is undone,
    and the remaining dependence on eps is Richardson extrapolated in sqrt(eps).

    :param ResolventSolver solver:
    :param typing.Sequence[float] times:
    :param typing.Sequence[float] epsilons: decreasing
    :param numpy.ndarray|None lambdas: integration nodes covering the whole line
    :param int oversample:
    :param int num_threads:
    :param float tol:
    :param int max_iter:
    :param float tail_tol: relative size of the estimated lambda truncation error above which we warn
    :return: times, radii, force (n_t, n_R), and the per-eps coupled parts
    :rtype: dict[str]
    """
    model, chart = solver.model, solver.chart
    times = numpy.asarray(times, dtype=float)
    if lambdas is None:
        t_max = float(numpy.max(times))
        lambdas = lambda_grid(chart, solver.M_max, oversample=oversample, t_max=t_max, include_gap=True)
    weights = trapezoid_weights(lambdas)
    radii = solver.radii
    transport = transport_force_series(
        model, chart, solver.field0, times, radii, greens=GreensCache(model, chart, solver.cache, radii)
    )
    coupled = []
    for eps in epsilons:
        if solver.eta == 0:
            coupled.append(numpy.zeros((len(times), len(radii))))
            continue
        sol = solve_sweep(solver, lambdas, eps, tol=tol, max_iter=max_iter, num_threads=num_threads)
        diff = sol.G_minus - sol.G_plus  # (n_lam, n_r)
        kernel = numpy.exp(1j * numpy.outer(times, lambdas)) * weights[None, :]
        part = (2j * solver.eta / radii**2)[None, :] * (kernel @ diff)
        part *= numpy.exp(eps * times)[:, None]
        coupled.append(numpy.real(part))
        tail = float(numpy.max(numpy.abs(diff[[0, -1]]))) * float(numpy.max(numpy.abs(lambdas)))
        tail *= 2.0 * solver.eta / float(numpy.min(radii)) ** 2
        scale = float(numpy.max(numpy.abs(part), initial=0.0))
        if scale > 0 and tail > tail_tol * scale:
            log.print_warning(
                "Stone formula: lambda cut off %.4g leaves an estimated tail of %.3e (relative %.3e)"
                % (float(numpy.max(lambdas)), tail, tail / scale)
            )
    if len(epsilons) >= 2:
        r = math.sqrt(epsilons[-2] / epsilons[-1])
        extrapolated = (r * coupled[-1] - coupled[-2]) / (r - 1.0)
    else:
        extrapolated = coupled[-1]
    return {
        "times": times,
        "radii": radii,
        "force": transport + extrapolated,
        "transport": transport,
        "coupled": coupled,
        "epsilons": list(epsilons),
    }
