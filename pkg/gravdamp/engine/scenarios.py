"""
Provides :class:`Engine`, one method per task, and :func:`run_scenario`.
Every task writes CSV files (one per observable) into the output directory,
and finally ``manifest.txt`` listing them with checksums.
"""

from __future__ import annotations

import math
import typing

import numpy

from gravdamp.config import RunConfig
from gravdamp.engine.base import EngineBase
from gravdamp.log import log
from gravdamp.util.basic import GravDampError


class Engine(EngineBase):
    """
    Runs the scenarios.
    """

    def steady_state(self):
        """
        The equilibrium: summary constants, potential and density on the radial grid.
        """
        from gravdamp.steady_state import density_profile, model_summary

        model = self.model
        summary = model_summary(model)
        keys = sorted(summary.keys())
        self.write_csv("steady_state_summary.csv", keys, [[summary[k] for k in keys]])
        rho = density_profile(model)
        self.write_csv(
            "steady_state_profile.csv",
            ["r", "U", "dU", "rho"],
            numpy.stack([rho.grid, model.U(rho.grid), model.dU(rho.grid), rho.values], axis=1),
        )
        filename = self.output_filename("model.txt")
        model.save(filename)
        self.add_artifact(filename)
        for key in keys:
            print("  %s: %r" % (key, summary[key]), file=log.v1)
        return 0

    def action_angle(self):
        """
        The action chart: per node orbit data, and the frequency bounds.
        """
        chart = self.chart
        s = numpy.broadcast_to(chart.s[:, None], chart.shape)
        columns = (chart.E, chart.L_grid, s, chart.T, chart.A, chart.omega, chart.r_minus, chart.r_plus)
        self.write_csv(
            "action_chart.csv",
            ["E", "L", "s", "T", "A", "omega", "r_minus", "r_plus"],
            numpy.stack([a.ravel() for a in columns], axis=1),
        )
        c0, decreasing = chart.monotonicity()
        self.write_csv(
            "frequency_bounds.csv",
            ["omega_min", "omega_max", "lambda_min", "min_abs_domega_dE", "decreasing"],
            [[chart.omega_min, chart.omega_max, chart.lambda_min, c0, int(decreasing)]],
        )
        filename = self.output_filename("chart.h5")
        chart.save(filename)
        self.add_artifact(filename)
        print(
            "omega in [%.12g, %.12g], lambda_min=%.12g, min |d_E omega|=%.3e, decreasing: %s"
            % (chart.omega_min, chart.omega_max, chart.lambda_min, c0, decreasing),
            file=log.v1,
        )
        if not decreasing:
            log.print_warning("omega is not strictly decreasing in E on every L slice")
        return 0

    def transport(self):
        """
        Force of the pure transport flow on a geometric time grid, and its decay fit.
        """
        from gravdamp.spectral_field import GreensCache, force_radii
        from gravdamp.transport import decay_time_grid, fit_decay_rate, transport_force_series

        run = self.run
        times = decay_time_grid(**run.times)
        radii = force_radii(self.model, run.force_radii)
        greens = GreensCache(self.model, self.chart, self.cache, radii)
        series = transport_force_series(
            self.model, self.chart, self.field0, times, radii, num_threads=run.num_threads, greens=greens
        )
        K = self.decay_index()
        self._write_force_series("transport_force.csv", times, radii, series, K)
        fit = fit_decay_rate(series, times, t_window=run.fit_window, min_block=1.0 / self.chart.omega_min)
        self._write_fit("transport_decay_fit.csv", fit, K)
        return 0

    def evolve(self):
        """
        The coupled linearized flow: force, conserved quantities, scattering increments.
        """
        from gravdamp.linearized import LinearizedSystem, load_checkpoint, run as run_flow, scattering_profile
        from gravdamp.spectral_field import force_radii
        from gravdamp.transport import fit_decay_rate

        run = self.run
        system = LinearizedSystem(
            self.model,
            self.chart,
            self.cache,
            run.M_max,
            synthesis=run.conserved_synthesis,
            n_force_radii=run.force_radii,
            dt_fraction=run.dt_fraction,
        )
        checkpoint_file = self.output_filename("checkpoint.h5") if run.checkpoint_interval else None
        state = None
        if checkpoint_file and self._exists(checkpoint_file):
            state = load_checkpoint(checkpoint_file, system)
            print("Resume from checkpoint at t=%r" % state.time, file=log.v2)
        scatter_times = sorted(set(run.snapshot_times) | {2 * t for t in run.snapshot_times})
        scatter_times = [t for t in scatter_times if t <= run.t_end]
        out = run_flow(
            system,
            self.field0,
            run.t_end,
            output_interval=run.output_interval,
            radii=force_radii(self.model, run.force_radii),
            snapshot_times=scatter_times,
            checkpoint_interval=run.checkpoint_interval,
            checkpoint_file=checkpoint_file,
            state=state,
        )
        if checkpoint_file and self._exists(checkpoint_file):
            self.add_artifact(checkpoint_file)
        K = self.decay_index()
        self._write_force_series("evolve_force.csv", out.times, out.radii, out.forces, K)
        self.write_csv(
            "evolve_diagnostics.csv",
            ["t", "antonov", "mass", "zero_mode"],
            [[d.time, d.antonov, d.mass, d.zero_mode] for d in out.diagnostics],
        )
        if run.snapshot_times:
            profile = scattering_profile(self.model, out, run.snapshot_times)
            self.write_csv("scattering.csv", ["t", "increment"], profile)
        if run.t_end >= run.fit_window[1]:
            fit = fit_decay_rate(out.forces, out.times, t_window=run.fit_window, min_block=1.0 / self.chart.omega_min)
            self._write_fit("evolve_decay_fit.csv", fit, K)
        return 0

    def resolvent(self):
        """
        Resolvent profiles on the lambda grid for every epsilon, the bound sweep,
        the near-resonant sets, and the Stone reconstruction at the configured times.
        """
        from gravdamp.resolvent import (
            ResolventSolver,
            conjugation_defect,
            lambda_grid,
            near_resonant_set,
            resolvent_bound_sweep,
            resonance_constants,
            solve_sweep,
            stone_reconstruct,
        )
        from gravdamp.spectral_field import force_radii

        run = self.run
        grid = run.lambda_grid
        chart = self.chart
        lambdas = lambda_grid(chart, run.M_max, num=grid["num"], cut=grid["cut"])
        solver = ResolventSolver(
            self.model,
            chart,
            self.cache,
            self.field0,
            radii=force_radii(self.model, run.force_radii),
            refine=grid["refine"],
        )
        solutions = []
        rows = []
        for eps in run.epsilon_schedule:
            sol = solve_sweep(
                solver, lambdas, eps, tol=run.resolvent_tol, max_iter=run.neumann_max_iter, num_threads=run.num_threads
            )
            solutions.append(sol)
            for i, lam in enumerate(sol.lambdas):
                rows.append(
                    [
                        eps,
                        lam,
                        float(numpy.max(numpy.abs(sol.U_plus[i]))),
                        float(numpy.max(numpy.abs(sol.U_minus[i]))),
                        float(numpy.max(numpy.abs(sol.U_plus[i] - sol.U_minus[i]))),
                        sol.contraction[i, 0],
                        sol.contraction[i, 1],
                        int(sol.iterations[i].max()),
                    ]
                )
            print("eps=%r: conjugation defect %.3e" % (eps, conjugation_defect(sol)), file=log.v2)
        self.write_csv(
            "resolvent_sweep.csv",
            [
                "epsilon",
                "lambda",
                "sup_U_plus",
                "sup_U_minus",
                "sup_U_diff",
                "contraction_plus",
                "contraction_minus",
                "iterations",
            ],
            rows,
        )
        report = resolvent_bound_sweep(solutions)
        self.write_csv(
            "resolvent_bounds.csv",
            ["epsilon", "first_trend", "second_trend", "first_max", "second_max"],
            [
                [row["epsilon"], a, b, float(numpy.max(row["first"])), float(numpy.max(row["second"]))]
                for row, a, b in zip(report["rows"], report["first_trend"], report["second_trend"])
            ],
        )
        width = run.resonance_width
        res_rows = []
        for lam in lambdas:
            res = near_resonant_set(chart, lam, run.M_max, width)
            res_rows.append([lam, len(res), min((abs(m) for m in res), default=0)])
        C0, c0 = resonance_constants(chart, lambdas, run.M_max, width)
        comments = ["C0 %r c0 %r" % (C0, c0)]
        self.write_csv("near_resonant.csv", ["lambda", "size", "min_abs_m"], res_rows, comments=comments)
        if run.stone_times:
            stone = stone_reconstruct(
                solver,
                run.stone_times,
                run.epsilon_schedule[-2:],
                oversample=grid["oversample"],
                num_threads=run.num_threads,
                tol=run.resolvent_tol,
                max_iter=run.neumann_max_iter,
            )
            self._write_force_series("stone_force.csv", stone["times"], stone["radii"], stone["force"], None)
        return 0

    def fit_decay(self):
        """
        Decay report over previously written force series.
        """
        text, passed = fit_report(self.run.fit_inputs, t_window=self.run.fit_window)
        self.write_text("fit_report.txt", text)
        print(text, file=log.v1)
        return 0 if passed else 1

    def verify(self):
        """
        The acceptance checks.
        """
        from gravdamp.verify import run_acceptance

        results = run_acceptance(self, self.run.verify["criteria"])
        lines = [str(r) for r in results]
        failed = [r.number for r in results if not r.passed]
        lines.append("%i/%i passed" % (len(results) - len(failed), len(results)))
        self.write_text("verify_report.txt", "\n".join(lines) + "\n")
        for line in lines:
            print(line, file=log.v1)
        return 0 if not failed else 1

    def _write_force_series(self, name, times, radii, series, K):
        series = numpy.asarray(series)
        sup = numpy.max(numpy.abs(series), axis=1)
        columns = ["t", "sup_abs_force"] + ["R%i" % i for i in range(len(radii))]
        comments = ["radii %s" % " ".join("%.17g" % r for r in radii)]
        if K is not None:
            comments.append("K %r" % K)
        rows = numpy.concatenate([numpy.asarray(times)[:, None], sup[:, None], series], axis=1)
        return self.write_csv(name, columns, rows, comments=comments)

    def _write_fit(self, name, fit, K):
        print(
            "decay exponent %.4f (%s fit, residual %.3e), predicted K=%r" % (fit.exponent, fit.method, fit.residual, K),
            file=log.v1,
        )
        return self.write_csv(
            name,
            ["exponent", "residual", "envelope", "n_points", "K"],
            [[fit.exponent, fit.residual, int(fit.method == "envelope"), fit.n_points, K]],
        )

    @staticmethod
    def _exists(filename):
        import os

        return os.path.exists(filename)


def fit_report(csv_inputs, K=None, t_window=(20.0, 200.0), tolerance=0.3, residual_threshold=0.1):
    """
    Human readable decay report over force series CSV files.

    :param typing.Sequence[str] csv_inputs: files with columns ``t`` and ``sup_abs_force``
    :param float|None K: predicted exponent. By default taken from the ``K`` header line of each file
    :param (float,float) t_window:
    :param float tolerance: pass if |exponent - K| <= tolerance
    :param float residual_threshold:
    :return: report text, whether all inputs passed
    :rtype: (str, bool)
    """
    from gravdamp.transport import fit_decay_rate
    from gravdamp.util.output import read_csv

    lines = ["decay report, fit window t in [%g, %g]" % tuple(t_window)]
    all_passed = True
    for filename in csv_inputs:
        header, columns, data = read_csv(filename)
        assert "t" in columns and "sup_abs_force" in columns, "%r: not a force series" % filename
        times = data[:, columns.index("t")]
        sup = data[:, columns.index("sup_abs_force")]
        fit = fit_decay_rate(sup, times, t_window=t_window, residual_threshold=residual_threshold)
        K_ = K if K is not None else (float(header["K"]) if "K" in header else None)
        if K_ is None or math.isinf(K_):
            verdict = "no prediction"
        else:
            passed = abs(fit.exponent - K_) <= tolerance
            all_passed &= passed
            verdict = "%s (K=%g, tolerance %g)" % ("PASS" if passed else "FAIL", K_, tolerance)
        lines.append(
            "%s: exponent %.4f, residual %.3e, %s fit over %i points: %s"
            % (filename, fit.exponent, fit.residual, fit.method, fit.n_points, verdict)
        )
    return "\n".join(lines) + "\n", all_passed


def run_scenario(run: RunConfig):
    """
    :param run:
    :return: exit status
    :rtype: int
    """
    engine = Engine(run)
    task = run.task
    print("Task: %s" % task, file=log.v2)
    tasks = {
        "steady-state": engine.steady_state,
        "action-angle": engine.action_angle,
        "transport": engine.transport,
        "evolve": engine.evolve,
        "resolvent": engine.resolvent,
        "fit-decay": engine.fit_decay,
        "verify": engine.verify,
    }  # type: typing.Dict[str, typing.Callable[[], int]]
    if task == "nop":
        print("Task: No-operation", file=log.v1)
        return 0
    if task not in tasks:
        raise GravDampError("unknown task: %r" % (task,))
    status = tasks[task]()
    engine.write_manifest()
    return status
