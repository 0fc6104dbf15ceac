"""
Provides :class:`EngineBase`.
"""

from __future__ import annotations

import os
import typing

from gravdamp.config import RunConfig
from gravdamp.log import log


class EngineBase:
    """
    Base class of the scenario engine.

    Manages the following components, all created lazily from the run config:
     - the steady state (:class:`gravdamp.steady_state.PolytropeModel`)
     - the action chart and the orbit sample cache
     - the initial datum and its modes
     - the output directory, and the list of artifacts written there
    """

    def __init__(self, run: RunConfig):
        """
        :param run:
        """
        from gravdamp.__setup__ import get_version_str

        self.run = run
        self.output_dir = run.output_dir
        self.version = get_version_str(fallback="unknown")
        self.config_sha256 = run.sha256()
        self.artifacts = []  # type: typing.List[str]
        self._model = None
        self._chart = None
        self._cache = None
        self._initial_data = None
        self._field0 = None

    def with_overrides(self, **kwargs):
        """
        A sibling engine on a modified config, writing to the same artifact list.
        ``polytrope`` may be given partially.

        :rtype: EngineBase
        """
        if "polytrope" in kwargs:
            polytrope = dict(self.run.polytrope)
            polytrope.update(kwargs["polytrope"])
            kwargs["polytrope"] = polytrope
        kwargs.setdefault("model_file", None)
        kwargs.setdefault("chart_file", None)
        engine = self.__class__(self.run.replace(**kwargs))
        engine.artifacts = self.artifacts
        engine.config_sha256 = self.config_sha256
        return engine

    @property
    def model(self):
        """
        :rtype: gravdamp.steady_state.PolytropeModel
        """
        if self._model is None:
            from gravdamp.steady_state import PolytropeModel, build_model

            run = self.run
            with log.stage("Steady state") as stage:
                if run.model_file:
                    print("Load steady state from %r" % run.model_file, file=log.v2)
                    self._model = PolytropeModel.load(run.model_file)
                else:
                    self._model = build_model(
                        run.params,
                        radial_nodes=run.radial_nodes,
                        tol=run.steady_state_tol,
                        max_iter=run.steady_state_max_iter,
                        relaxation=run.relaxation,
                        eta_max=run.eta_max,
                    )
                stage["result"] = self._model
        return self._model

    @property
    def chart(self):
        """
        :rtype: gravdamp.action_angle.ActionChart
        """
        if self._chart is None:
            from gravdamp.action_angle import ActionChart, build_chart

            run = self.run
            model = self.model
            with log.stage("Action chart") as stage:
                if run.chart_file:
                    print("Load action chart from %r" % run.chart_file, file=log.v2)
                    self._chart = ActionChart.load(run.chart_file, model)
                else:
                    self._chart = build_chart(
                        model,
                        energy_nodes=run.chart_energy_nodes,
                        momentum_nodes=run.chart_momentum_nodes,
                        num_threads=run.num_threads,
                    )
                stage["result"] = self._chart
        return self._chart

    @property
    def cache(self):
        """
        :rtype: gravdamp.action_angle.OrbitCache
        """
        if self._cache is None:
            from gravdamp.action_angle import OrbitCache

            self._cache = OrbitCache(self.chart, n_theta=self.run.n_theta)
        return self._cache

    @property
    def initial_data(self):
        """
        :rtype: gravdamp.initial_data.InitialData|callable
        """
        if self._initial_data is None:
            from gravdamp.initial_data import init_initial_data

            self._initial_data = init_initial_data(self.run.initial_data, self.model)
        return self._initial_data

    @property
    def field0(self):
        """
        :rtype: gravdamp.spectral_field.ModeField
        """
        if self._field0 is None:
            from gravdamp.spectral_field import analyze

            self._field0 = analyze(
                self.model,
                self.chart,
                self.initial_data,
                M_max=self.run.M_max,
                n_theta=self.run.n_theta,
                strict=self.run.strict,
                cache=self.cache,
            )
        return self._field0

    def decay_index(self):
        """
        :return: K = min{mu-1, nu, k} for the configured data
        :rtype: float
        """
        from gravdamp.initial_data import data_regularity

        return self.model.decay_index(data_regularity(self.initial_data))

    def output_filename(self, name):
        """
        :param str name: relative to the output dir
        :rtype: str
        """
        return os.path.join(self.output_dir, name)

    def add_artifact(self, filename):
        """
        :param str filename:
        :return: filename
        :rtype: str
        """
        self.artifacts.append(filename)
        print("Wrote %s" % filename, file=log.v3)
        return filename

    def write_csv(self, name, columns, rows, comments=()):
        """
        :param str name:
        :param typing.Sequence[str] columns:
        :param rows:
        :param typing.Sequence[str] comments:
        :return: filename
        :rtype: str
        """
        from gravdamp.util.output import write_csv

        filename = write_csv(
            self.output_filename(name), columns, rows, self.version, self.config_sha256, comments=comments
        )
        return self.add_artifact(filename)

    def write_text(self, name, content):
        """
        :param str name:
        :param str content:
        :rtype: str
        """
        from gravdamp.util.basic import write_text_file_atomic

        filename = self.output_filename(name)
        write_text_file_atomic(filename, content)
        return self.add_artifact(filename)

    def write_manifest(self):
        """
        :return: filename of the manifest
        :rtype: str
        """
        from gravdamp.util.output import write_manifest

        echo = self.output_filename("config.echo.py")
        files = list(self.artifacts) + ([echo] if os.path.exists(echo) else [])
        filename = write_manifest(self.output_dir, files)
        print("Manifest %s lists %i artifacts" % (filename, len(set(files))), file=log.v2)
        return filename
