import logging

import numpy as np
from dishka import make_container

from hapsim.controller import ImpedanceController
from hapsim.provider import RunProvider
from hapsim.scenario import ScenarioConfig
from hapsim.simulation import LogRecorder, Simulation, Timing
from ..sample_scenarios import sample_scenario


def test_app_scope():
    cfg = sample_scenario()
    container = make_container(RunProvider(cfg))
    assert container.get(ScenarioConfig) is cfg
    timing = container.get(Timing)
    assert timing is container.get(Timing)
    assert timing == Timing(ts=0.1, dt=0.001, ticks=21, inner_steps=100)
    container.close()


def test_run_scope():
    container = make_container(RunProvider(sample_scenario()))
    with container() as run:
        simulation = run.get(Simulation)
        assert simulation.controller is run.get(ImpedanceController)
        assert simulation.recorder is run.get(LogRecorder)
        assert simulation.timing is container.get(Timing)
    with container() as run:
        assert run.get(Simulation) is not simulation
        assert run.get(ImpedanceController) is not simulation.controller
    container.close()


def test_rng_is_seeded():
    container = make_container(RunProvider(sample_scenario({"seed": 7})))
    with container() as run:
        first = run.get(np.random.Generator).normal(size=3)
    with container() as run:
        second = run.get(np.random.Generator).normal(size=3)
    container.close()
    assert np.array_equal(first, second)


def test_recorder_closed_with_run(caplog):
    container = make_container(RunProvider(sample_scenario()))
    with caplog.at_level(logging.DEBUG, logger="hapsim.simulation"):
        with container() as run:
            run.get(Simulation).run()
            assert "Recorded" not in caplog.text
        assert "Recorded 21 steps of sample" in caplog.text
    container.close()
