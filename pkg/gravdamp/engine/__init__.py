"""
Scenario orchestration: :class:`gravdamp.engine.base.EngineBase` builds the shared objects
(model, chart, orbit cache, initial data) from a :class:`gravdamp.config.RunConfig`,
and :class:`gravdamp.engine.scenarios.Engine` runs the tasks.
"""
