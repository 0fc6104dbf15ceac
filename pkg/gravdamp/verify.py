"""
The acceptance checks, run by the ``verify`` task.

Each check is a function of an :class:`AcceptanceContext` returning ``(passed, details)``,
registered under its number with :func:`criterion`.
The context shares the expensive objects (models, charts, linearized runs, resolvent solvers)
between the checks, so running all of them costs little more than running the largest ones.
"""

from __future__ import annotations

import math
import time
import typing

import numpy

from gravdamp.log import log
from gravdamp.util.basic import GravDampError, hms_fraction, parallel_map

# Relative growth of |lambda| sup|U| over the lambda grid, as power law slope, still counted as bounded.
TrendTolerance = 0.25
EpsilonRatioTolerance = 1.2
# A fitted decay exponent this far below K still counts as decay at rate K.
DecayBoundSlack = 0.3


class CriterionResult(typing.NamedTuple):
    """
    Outcome of one acceptance check.
    """

    number: int
    name: str
    passed: bool
    details: str
    elapsed: float

    def __str__(self):
        return "criterion %2i %-24s %s  (%s)  %s" % (
            self.number,
            self.name,
            "PASS" if self.passed else "FAIL",
            hms_fraction(self.elapsed),
            self.details,
        )


_criteria = {}  # type: typing.Dict[int, typing.Tuple[str, typing.Callable]]


def criterion(number, name):
    """
    Registers an acceptance check.

    :param int number:
    :param str name:
    """

    def decorator(func):
        assert number not in _criteria, "criterion %i registered twice" % number
        _criteria[number] = (name, func)
        return func

    return decorator


def get_criteria():
    """
    :return: number -> name
    :rtype: dict[int,str]
    """
    return {number: name for number, (name, _) in sorted(_criteria.items())}


class AcceptanceContext:
    """
    Engine variants and intermediate results, shared between the checks.
    """

    def __init__(self, engine):
        """
        :param gravdamp.engine.base.EngineBase engine: the configured engine
        """
        self.engine = engine
        self.run = engine.run
        self.rng = numpy.random.RandomState(engine.run.seed)
        self._variants = {}
        self._transport_fits = {}
        self._linear_runs = {}
        self._solvers = {}

    def variant(self, polytrope=None, initial_data=None):
        """
        :param dict[str,float]|None polytrope: partial override
        :param dict|None initial_data:
        :return: the configured engine if nothing changes, otherwise a cached sibling
        :rtype: gravdamp.engine.base.EngineBase
        """
        merged = dict(self.run.polytrope)
        merged.update(polytrope or {})
        data = self.run.initial_data if initial_data is None else initial_data
        if merged == self.run.polytrope and data == self.run.initial_data:
            return self.engine
        key = (repr(sorted(merged.items())), repr(data))
        if key not in self._variants:
            print("acceptance: variant polytrope=%r initial_data=%r" % (merged, data), file=log.v3)
            self._variants[key] = self.engine.with_overrides(polytrope=merged, initial_data=data)
        return self._variants[key]

    def smooth_data(self):
        """
        :return: the configured initial data if it is smooth, otherwise the default smooth datum
        :rtype: dict|callable
        """
        from gravdamp.initial_data import data_regularity

        if data_regularity(self.engine.initial_data) >= 3:
            return self.run.initial_data
        return {"class": "smooth_bump"}

    @property
    def t_end(self):
        """
        :rtype: float
        """
        return max(self.run.t_end, self.run.fit_window[1])

    def fit_decay(self, engine, series, times):
        """
        Decay fit in the configured window. Envelope blocks are at least one period of the slowest orbit long.

        :param gravdamp.engine.base.EngineBase engine:
        :param numpy.ndarray series: (n_t, n_R)
        :param numpy.ndarray times:
        :rtype: gravdamp.transport.DecayFit
        """
        from gravdamp.transport import fit_decay_rate

        return fit_decay_rate(series, times, t_window=self.run.fit_window, min_block=1.0 / engine.chart.omega_min)

    def transport_fit(self, engine):
        """
        :param gravdamp.engine.base.EngineBase engine:
        :return: decay fit of the pure transport force, and its runtime
        :rtype: (gravdamp.transport.DecayFit, float)
        """
        from gravdamp.spectral_field import GreensCache, force_radii
        from gravdamp.transport import decay_time_grid, transport_force_series

        if id(engine) not in self._transport_fits:
            start_time = time.time()
            times_opts = dict(self.run.times)
            times_opts["t_end"] = max(times_opts["t_end"], self.run.fit_window[1])
            times = decay_time_grid(**times_opts)
            radii = force_radii(engine.model, self.run.force_radii)
            greens = GreensCache(engine.model, engine.chart, engine.cache, radii)
            series = transport_force_series(
                engine.model, engine.chart, engine.field0, times, radii, num_threads=self.run.num_threads, greens=greens
            )
            fit = self.fit_decay(engine, series, times)
            self._transport_fits[id(engine)] = (fit, time.time() - start_time)
        return self._transport_fits[id(engine)]

    def linear_run(self, engine, snapshot_times=()):
        """
        :param gravdamp.engine.base.EngineBase engine:
        :param typing.Sequence[float] snapshot_times: snapshots are taken at t and 2t
        :rtype: gravdamp.linearized.RunOutput
        """
        from gravdamp.linearized import LinearizedSystem, run as run_flow
        from gravdamp.spectral_field import force_radii

        snaps = tuple(sorted(set(snapshot_times) | {2 * t for t in snapshot_times}))
        key = (id(engine), snaps)
        if key not in self._linear_runs:
            run = self.run
            system = LinearizedSystem(
                engine.model,
                engine.chart,
                engine.cache,
                run.M_max,
                synthesis=run.conserved_synthesis,
                n_force_radii=run.force_radii,
                dt_fraction=run.dt_fraction,
            )
            t_end = max([self.t_end] + list(snaps))
            self._linear_runs[key] = run_flow(
                system,
                engine.field0,
                t_end,
                output_interval=run.output_interval,
                radii=force_radii(engine.model, run.force_radii),
                snapshot_times=snaps,
            )
        return self._linear_runs[key]

    def solver(self, engine):
        """
        :param gravdamp.engine.base.EngineBase engine:
        :rtype: gravdamp.resolvent.ResolventSolver
        """
        from gravdamp.resolvent import ResolventSolver
        from gravdamp.spectral_field import force_radii

        if id(engine) not in self._solvers:
            self._solvers[id(engine)] = ResolventSolver(
                engine.model,
                engine.chart,
                engine.cache,
                engine.field0,
                radii=force_radii(engine.model, self.run.force_radii),
                refine=self.run.lambda_grid["refine"],
            )
        return self._solvers[id(engine)]

    def coupled(self, eta=0.01):
        """
        :param float eta:
        :return: the configured setup at the given coupling
        :rtype: gravdamp.engine.base.EngineBase
        """
        return self.variant(polytrope={"eta": eta})

    def lambdas(self, engine, num=40):
        """
        :param gravdamp.engine.base.EngineBase engine:
        :param int num:
        :rtype: numpy.ndarray
        """
        from gravdamp.resolvent import lambda_grid

        return lambda_grid(engine.chart, self.run.M_max, num=num, cut=self.run.lambda_grid["cut"])


def _support_samples(ctx, model, n, s_range=(0.05, 1.0)):
    """
    :return: n random (E, L) with E - E_min^L a fraction s_range of E0 - E_min^L
    :rtype: list[(float,float)]
    """
    from gravdamp.steady_state import minimum_point

    L0, Lmax = model.params.L0, model.Lmax
    out = []
    for _ in range(n):
        L = ctx.rng.uniform(L0, L0 + 0.95 * (Lmax - L0))
        _, e_min, _ = minimum_point(model, L)
        E = e_min + ctx.rng.uniform(*s_range) * (model.E0 - e_min)
        out.append((float(E), float(L)))
    return out


@criterion(1, "kepler-analytics")
def check_kepler_analytics(ctx):
    from gravdamp.action_angle import kepler_period, period, turning_points
    from gravdamp.steady_state import kepler_turning_points, minimum_point

    start_time = time.time()
    model = ctx.variant(polytrope={"eta": 0.0}).model
    M = model.params.M
    err_T = err_r = err_rL = 0.0
    for E, L in _support_samples(ctx, model, 20):
        T = float(period(model, E, L))
        err_T = max(err_T, abs(T / float(kepler_period(E, M)) - 1.0))
        r_m, r_p = turning_points(model, E, L)
        k_m, k_p = kepler_turning_points(E, L, M)
        err_r = max(err_r, abs(r_m - k_m) / k_m, abs(r_p - k_p) / k_p)
        r_L, _, _ = minimum_point(model, L)
        err_rL = max(err_rL, abs(r_L - L / M) / (L / M))
    elapsed = time.time() - start_time
    passed = err_T <= 1e-8 and err_r <= 1e-10 and err_rL <= 1e-10 and elapsed < 5.0
    return passed, "period %.2e, turning points %.2e, r_L %.2e (relative), %.2f sec" % (
        err_T,
        err_r,
        err_rL,
        elapsed,
    )


@criterion(2, "greens-identity")
def check_greens_identity(ctx):
    from gravdamp.action_angle import turning_points
    from gravdamp.spectral_field import greens_mode, orbit_indicator_modes

    model = ctx.engine.model
    m_max = 16
    err = 0.0
    for E, L in _support_samples(ctx, model, 12, s_range=(0.1, 1.0)):
        r_m, r_p = turning_points(model, E, L)
        R = float(r_m + ctx.rng.uniform(0.1, 0.9) * (r_p - r_m))
        coef, _ = orbit_indicator_modes(model, R, E, L, m_max)
        for m in range(1, m_max + 1):
            err = max(
                err,
                abs(coef[m - 1] - greens_mode(model, None, R, m, E, L)),
                abs(numpy.conj(coef[m - 1]) - greens_mode(model, None, R, -m, E, L)),
            )
    return err <= 1e-6, "max abs error %.3e over 12 orbits, |m| <= %i" % (err, m_max)


@criterion(3, "area-derivative")
def check_area_derivative(ctx):
    from gravdamp.action_angle import area, period

    model, chart = ctx.engine.model, ctx.engine.chart
    rows = numpy.nonzero((chart.s >= 0.05) & (chart.s <= 0.95))[0]
    n_L = chart.shape[1]
    cols = numpy.arange(1, n_L - 1) if n_L >= 3 else numpy.arange(n_L)
    err = 0.0
    n = 20
    for _ in range(n):
        i, j = int(ctx.rng.choice(rows)), int(ctx.rng.choice(cols))
        E, L = float(chart.E[i, j]), float(chart.L_grid[i, j])
        h = 1e-3 * float(chart.energy_gap[i, j])
        dA = (float(area(model, E + h, L)) - float(area(model, E - h, L))) / (2.0 * h)
        err = max(err, abs(dA / float(period(model, E, L)) - 1.0))
    return err <= 1e-4, "max relative error %.3e at %i interior nodes" % (err, n)


@criterion(4, "mode-scaling")
def check_mode_scaling(ctx):
    from gravdamp.spectral_field import mode_scaling_exponent

    engine = ctx.variant(initial_data={"class": "phase_bump"})
    chart = engine.chart
    L_slice = chart.shape[1] // 2
    window = (1e-6, 1e-2)
    gap = chart.energy_gap[:, L_slice]
    n_points = int(numpy.count_nonzero((gap >= window[0]) & (gap <= window[1])))
    if n_points < 4:
        return False, "only %i chart nodes with energy gap in %r" % (n_points, window)
    slopes = [mode_scaling_exponent(engine.field0, L_slice, m, window=window).slope for m in range(1, 5)]
    passed = all(abs(slope - m / 2.0) <= 0.1 for m, slope in zip(range(1, 5), slopes))
    return passed, "slopes %s for m = 1..4 (%i points)" % (", ".join("%.3f" % s for s in slopes), n_points)


@criterion(5, "transport-exponents")
def check_transport_exponents(ctx):
    """
    K = min{mu-1, nu, k} bounds the force by (1+t)^-K. The observed exponent may be larger:
    for small eta, omega hardly depends on L, so the (L - L0)^nu edge does not dephase before t = 200,
    and the (E0 - E)^(mu-1) edge gives (1+t)^-mu. Checked are the bound, the growth of the exponent
    with the smoothness of the steady state, and its drop for data with a C^1 kink.
    """
    eta = min(ctx.run.polytrope["eta"], 0.01)
    smooth = ctx.smooth_data()
    cases = [
        ("smooth", (3.5, 2.0), smooth),
        ("smoother", (4.5, 3.0), smooth),
        ("kink", (4.5, 3.0), {"class": "low_regularity"}),
    ]
    passed = True
    exponents = {}
    details = []
    for label, (mu, nu), data in cases:
        engine = ctx.variant(polytrope={"mu": mu, "nu": nu, "eta": eta}, initial_data=data)
        fit, elapsed = ctx.transport_fit(engine)
        K = engine.decay_index()
        exponents[label] = fit.exponent
        passed &= fit.exponent >= K - DecayBoundSlack and elapsed < 600.0
        details.append(
            "mu=%g nu=%g %s data: %.3f, K=%g (%s fit, %i points, %s)"
            % (mu, nu, label, fit.exponent, K, fit.method, fit.n_points, hms_fraction(elapsed))
        )
    passed &= exponents["smoother"] > exponents["smooth"]
    passed &= exponents["kink"] < exponents["smoother"] - 0.5
    return passed, "; ".join(details)


@criterion(6, "linearized-run")
def check_linearized_run(ctx):
    engine = ctx.coupled()
    out = ctx.linear_run(engine)
    d0 = out.diagnostics[0]
    drift = max(abs(d.antonov - d0.antonov) for d in out.diagnostics) / abs(d0.antonov)
    scale = max(float(numpy.max(numpy.abs(engine.field0.coefficients))), 1e-300)
    zero_mode = max(d.zero_mode for d in out.diagnostics) / scale
    mass = max(abs(d.mass - d0.mass) for d in out.diagnostics)
    fit = ctx.fit_decay(engine, out.forces, out.times)
    transport, _ = ctx.transport_fit(engine)
    passed = drift <= 1e-6 and zero_mode <= 1e-12 and mass <= 1e-10 and abs(fit.exponent - transport.exponent) <= 0.3
    return passed, "Antonov drift %.2e, m=0 residual %.2e, mass change %.2e, exponent %.3f vs transport %.3f" % (
        drift,
        zero_mode,
        mass,
        fit.exponent,
        transport.exponent,
    )


@criterion(7, "spectral-gap")
def check_spectral_gap(ctx):
    from gravdamp.linearized import spectral_gap_check

    engine = ctx.coupled()
    out = ctx.linear_run(engine)
    lam_min = engine.chart.lambda_min
    n_R = len(out.radii)
    fractions = [
        spectral_gap_check(out.forces[:, i], ctx.run.output_interval, lam_min, gap_fraction=0.9)
        for i in (n_R // 4, n_R // 2, (3 * n_R) // 4)
    ]
    passed = max(fractions) <= 0.02
    details = "power below 0.9 lambda_min (%.6g): %s" % (lam_min, ", ".join("%.2e" % f for f in fractions))
    kepler = ctx.variant(polytrope={"eta": 0.0})
    params = kepler.model.params
    expected = 2.0 * math.sqrt(2.0) * (-params.kappa) ** 1.5 / params.M
    kepler_err = abs(kepler.chart.lambda_min / expected - 1.0)
    passed &= kepler_err <= 1e-8
    return passed, details + "; Kepler lambda_min %.10f, closed form %.10f" % (kepler.chart.lambda_min, expected)


@criterion(8, "plemelj-limit")
def check_plemelj_limit(ctx):
    from gravdamp.resolvent import plemelj_model_check

    x, eps = 2.0, 1e-3
    a = plemelj_model_check(x, eps)
    b = plemelj_model_check(x, eps / 2)
    ratio = a["error"] / max(b["error"], 1e-300)
    passed = a["error"] <= 1e-3 and 1.5 <= ratio <= 2.5
    return passed, "error %.3e at eps=%g, ratio %.3f, Hilbert transform %.12f (closed form %.12f)" % (
        a["error"],
        eps,
        ratio,
        a["hilbert"],
        x / (1.0 + x**2),
    )


def _contraction_factors(ctx, engine):
    from gravdamp.resolvent import SpectralPoint

    solver = ctx.solver(engine)
    eps = ctx.run.epsilon_schedule[-1]
    points = [SpectralPoint(float(lam), eps, sign) for lam in ctx.lambdas(engine) for sign in (1, -1)]
    return parallel_map(solver.operator_norm, points, num_threads=ctx.run.num_threads)


@criterion(9, "invertibility")
def check_invertibility(ctx):
    eta = 0.01
    full = max(_contraction_factors(ctx, ctx.coupled(eta)))
    half = max(_contraction_factors(ctx, ctx.coupled(eta / 2)))
    ratio = half / max(full, 1e-300)
    passed = full <= 0.2 and 0.375 <= ratio <= 0.625
    return passed, "contraction %.4f at eta=%g, %.4f at eta=%g, ratio %.3f" % (full, eta, half, eta / 2, ratio)


@criterion(10, "resolvent-bounds")
def check_resolvent_bounds(ctx):
    from gravdamp.resolvent import resolvent_bound_sweep, solve_sweep

    engine = ctx.coupled()
    solver = ctx.solver(engine)
    lambdas = ctx.lambdas(engine)
    run = ctx.run
    solutions = [
        solve_sweep(
            solver, lambdas, eps, tol=run.resolvent_tol, max_iter=run.neumann_max_iter, num_threads=run.num_threads
        )
        for eps in run.epsilon_schedule[-2:]
    ]
    report = resolvent_bound_sweep(solutions)
    trends = report["first_trend"] + report["second_trend"]
    ratios = report["first_eps_ratio"] + report["second_eps_ratio"]
    passed = max(trends) <= TrendTolerance and all(
        1.0 / EpsilonRatioTolerance <= r <= EpsilonRatioTolerance for r in ratios
    )
    return passed, "trends %s, epsilon ratios %s" % (
        ", ".join("%.3f" % t for t in trends),
        ", ".join("%.3f" % r for r in ratios),
    )


@criterion(11, "stone-reconstruction")
def check_stone_reconstruction(ctx):
    from gravdamp.resolvent import stone_reconstruct

    engine = ctx.coupled()
    run = ctx.run
    out = ctx.linear_run(engine)
    times = run.stone_times or (5.0, 20.0)
    stone = stone_reconstruct(
        ctx.solver(engine),
        times,
        run.epsilon_schedule[-2:],
        oversample=run.lambda_grid["oversample"],
        num_threads=run.num_threads,
        tol=run.resolvent_tol,
        max_iter=run.neumann_max_iter,
    )
    errors = []
    for k, t in enumerate(times):
        direct = out.forces[int(round(t / run.output_interval))]
        errors.append(float(numpy.max(numpy.abs(stone["force"][k] - direct)) / numpy.max(numpy.abs(direct))))
    return max(errors) <= 0.05, "relative sup error %s at t = %s" % (
        ", ".join("%.3e" % e for e in errors),
        ", ".join("%g" % t for t in times),
    )


@criterion(12, "scattering")
def check_scattering(ctx):
    from gravdamp.linearized import scattering_profile

    engine = ctx.variant(polytrope={"mu": 4.5, "nu": 3.0, "eta": 0.01}, initial_data=ctx.smooth_data())
    times = (10.0, 20.0, 40.0, 80.0)
    out = ctx.linear_run(engine, snapshot_times=times)
    profile = scattering_profile(engine.model, out, times)
    increments = [v for _, v in profile]
    decreasing = len(increments) == len(times) and all(b < a for a, b in zip(increments[:-1], increments[1:]))
    passed = engine.decay_index() >= 3 and decreasing
    return passed, "K=%g, increments %s" % (engine.decay_index(), ", ".join("%.3e" % v for v in increments))


@criterion(13, "near-resonant-set")
def check_near_resonant_set(ctx):
    from gravdamp.resolvent import near_resonant_set, resonance_constants

    chart = ctx.engine.chart
    width = ctx.run.resonance_width
    cut = ctx.run.lambda_grid["cut"] or 2.0 * math.pi * ctx.run.M_max * chart.omega_max
    lambdas = numpy.geomspace(chart.lambda_min, 4.0 * cut, 80)
    w = width if width is not None else 0.5 * chart.omega_min / chart.omega_max
    # no truncation of Res(lambda) by the mode cut off
    M_big = int(math.ceil(lambdas[-1] / (2.0 * math.pi * chart.omega_min * (1.0 - w)))) + 1
    empty = [lam for lam in lambdas if not near_resonant_set(chart, lam, M_big, width)]
    C0, c0 = resonance_constants(chart, lambdas, M_big, width)
    C_lo, c_lo = resonance_constants(chart, lambdas[:40], M_big, width)
    C_hi, c_hi = resonance_constants(chart, lambdas[40:], M_big, width)
    passed = not empty and math.isfinite(C0) and 0 < c0 < float("inf") and C_hi <= 1.5 * C_lo and c_hi >= c_lo / 1.5
    return passed, "C0 %.4f, c0 %.4f (lower half %.4f, %.4f; upper half %.4f, %.4f), %i empty sets" % (
        C0,
        c0,
        C_lo,
        c_lo,
        C_hi,
        c_hi,
        len(empty),
    )


def run_acceptance(engine, criteria=None):
    """
    :param gravdamp.engine.base.EngineBase engine:
    :param typing.Sequence[int]|None criteria: numbers, default all
    :rtype: list[CriterionResult]
    """
    if criteria is None:
        criteria = sorted(_criteria.keys())
    ctx = AcceptanceContext(engine)
    results = []
    for number in criteria:
        name, func = _criteria[number]
        print("acceptance criterion %i (%s)" % (number, name), file=log.v2)
        start_time = time.time()
        try:
            passed, details = func(ctx)
        except GravDampError as exc:
            passed, details = False, "%s: %s" % (exc.__class__.__name__, exc)
        result = CriterionResult(number, name, bool(passed), details, time.time() - start_time)
        print(result, file=log.v3)
        results.append(result)
    return results
