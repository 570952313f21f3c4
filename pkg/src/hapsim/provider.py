from collections.abc import Iterable

import numpy as np
from dishka import Provider, Scope, provide

from .controller import ImpedanceController
from .scenario import ScenarioConfig, automation_intent, human_state
from .simulation import HumanSensor, LogRecorder, Simulation, Timing


class RunProvider(Provider):
    """
    Object graph of a simulation.

    The scenario and its timing live for the whole container, everything
    with mutable state is created anew for each run scope.
    """

    def __init__(self, scenario: ScenarioConfig):
        super().__init__()
        self.scenario = scenario

    @provide(scope=Scope.APP)
    def get_scenario(self) -> ScenarioConfig:
        return self.scenario

    @provide(scope=Scope.APP)
    def get_timing(self, cfg: ScenarioConfig) -> Timing:
        return Timing.from_scenario(cfg)

    @provide(scope=Scope.REQUEST)
    def get_rng(self, cfg: ScenarioConfig) -> np.random.Generator:
        return np.random.default_rng(cfg.seed)

    @provide(scope=Scope.REQUEST)
    def get_controller(self, cfg: ScenarioConfig) -> ImpedanceController:
        return ImpedanceController(
            config=cfg.controller,
            z_a0=cfg.automation.z_a0,
            theta_a0=automation_intent(cfg, 0.0),
        )

    @provide(scope=Scope.REQUEST)
    def get_sensor(
            self,
            cfg: ScenarioConfig,
            rng: np.random.Generator,
    ) -> HumanSensor:
        return HumanSensor(
            noise=cfg.human.measurement_noise,
            rng=rng,
            theta_h0=human_state(cfg, 0.0).theta_h,
        )

    @provide(scope=Scope.REQUEST)
    def get_recorder(self, cfg: ScenarioConfig) -> Iterable[LogRecorder]:
        recorder = LogRecorder(cfg)
        yield recorder
        recorder.close()

    @provide(scope=Scope.REQUEST)
    def get_simulation(
            self,
            cfg: ScenarioConfig,
            timing: Timing,
            controller: ImpedanceController,
            sensor: HumanSensor,
            recorder: LogRecorder,
    ) -> Simulation:
        return Simulation(cfg, timing, controller, sensor, recorder)
