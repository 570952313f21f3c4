import logging
from dataclasses import dataclass

import numpy as np

from .controller import (
    HISTORY_LENGTH,
    HorizonTheta,
    HumanObservation,
    ImpedanceController,
    push_history,
    stage_terms,
)
from .exceptions import HapsimError, SimulationError
from .impedance import ImpedanceState
from .plant import (
    AgentInput,
    PlantInputs,
    PlantState,
    coupling_torque,
    integrate,
)
from .prediction import IntentSample, intent_torque
from .scenario import (
    HumanState,
    ScenarioConfig,
    automation_future,
    automation_intent,
    human_state,
    road_torque,
    scenario_document,
)
from .schedule import sample_schedule
from .simlog import LogRecord, SimLog, config_hash

logger = logging.getLogger(__name__)


@dataclass(frozen=True, slots=True)
class Timing:
    ts: float
    dt: float
    ticks: int
    inner_steps: int

    @classmethod
    def from_scenario(cls, cfg: ScenarioConfig) -> "Timing":
        return cls(
            ts=cfg.ts,
            dt=cfg.dt,
            ticks=cfg.ticks,
            inner_steps=cfg.inner_steps,
        )


class HumanSensor:
    """
    Measures the driver's impedance and intent at tick instants.

    With zero noise the measurement is exact.
    """
    __slots__ = ("noise", "rng", "theta_h_hist")

    def __init__(
            self,
            noise: float,
            rng: np.random.Generator,
            theta_h0: float,
    ):
        self.noise = noise
        self.rng = rng
        self.theta_h_hist = (theta_h0,) * HISTORY_LENGTH

    def observe(self, human: HumanState) -> HumanObservation:
        z_h, theta_h = human.z_h, human.theta_h
        if self.noise > 0:
            db, dk, dtheta = self.rng.normal(0.0, self.noise, size=3)
            z_h = ImpedanceState(b=z_h.b + db, k=z_h.k + dk)
            theta_h = theta_h + dtheta
        self.theta_h_hist = push_history(self.theta_h_hist, float(theta_h))
        return HumanObservation(z_h=z_h, theta_h_hist=self.theta_h_hist)


class LogRecorder:
    """Turns the state of one tick into a log row."""
    __slots__ = ("cfg", "log", "_theta_h_hist")

    def __init__(self, cfg: ScenarioConfig):
        self.cfg = cfg
        self.log = SimLog(
            name=cfg.name,
            ts=cfg.ts,
            adaptive=cfg.controller.adaptive,
        )
        self._theta_h_hist: tuple[float, ...] = ()

    def record(
            self,
            t: float,
            plant: PlantState,
            human: HumanState,
            z_a: ImpedanceState,
            theta_a_hist: tuple[float, ...],
            dtheta_a: float,
    ) -> LogRecord:
        cfg = self.cfg
        if not self._theta_h_hist:
            self._theta_h_hist = (human.theta_h,) * HISTORY_LENGTH
        self._theta_h_hist = push_history(self._theta_h_hist, human.theta_h)
        theta_h_prev, theta_h = self._theta_h_hist
        theta_a_prev, theta_a = theta_a_hist[-2:]

        tau_h = intent_torque(
            human.z_h, IntentSample(theta_h, theta_h_prev, cfg.ts),
        )
        tau_a = intent_torque(z_a, IntentSample(theta_a, theta_a_prev, cfg.ts))
        epsilon = sample_schedule(cfg.controller.epsilon, t, cfg.duration)
        safety, disagreement = stage_terms(
            tau_h, tau_a, epsilon, cfg.controller.norm,
        )
        record = LogRecord(
            t=t,
            theta_s=plant.theta_s,
            dtheta_s=plant.dtheta_s,
            theta_h=theta_h,
            theta_a=theta_a,
            b_h=human.z_h.b,
            k_h=human.z_h.k,
            b_a=z_a.b,
            k_a=z_a.k,
            tau_h_intent=tau_h,
            tau_a_intent=tau_a,
            tau_h_coupling=coupling_torque(
                human.z_h, theta_h, human.dtheta_h, plant,
            ),
            tau_a_coupling=coupling_torque(z_a, theta_a, dtheta_a, plant),
            tau_total_intent=tau_h + tau_a,
            tau_diff=tau_h - tau_a,
            epsilon=epsilon,
            stage_cost=safety + disagreement,
            safety_term=safety,
            disagreement_term=disagreement,
        )
        self.log.append(record)
        return record

    def close(self) -> None:
        logger.debug(
            "Recorded %d steps of %s", len(self.log), self.log.name,
        )


class Simulation:
    """
    Closed loop of plant, scripted driver and automation controller.

    The controller runs every `ts`, the plant is integrated with RK4 at
    `dt` in between with all inputs held.
    """
    __slots__ = ("cfg", "timing", "controller", "sensor", "recorder")

    def __init__(
            self,
            cfg: ScenarioConfig,
            timing: Timing,
            controller: ImpedanceController,
            sensor: HumanSensor,
            recorder: LogRecorder,
    ):
        self.cfg = cfg
        self.timing = timing
        self.controller = controller
        self.sensor = sensor
        self.recorder = recorder

    def _plant_inputs(
            self,
            t: float,
            human: HumanState,
            z_a: ImpedanceState,
            theta_a: float,
            dtheta_a: float,
    ) -> PlantInputs:
        return PlantInputs(
            human=AgentInput(human.z_h, human.theta_h, human.dtheta_h),
            automation=AgentInput(z_a, theta_a, dtheta_a),
            tau_v=road_torque(self.cfg, t),
        )

    def _tick(self, k: int, plant: PlantState) -> PlantState:
        cfg, timing = self.cfg, self.timing
        t = cfg.tick_time(k)
        human = human_state(cfg, t)
        theta_a = automation_intent(cfg, t)
        obs = self.sensor.observe(human)

        z_a = self.controller.impedance
        future = None
        if cfg.controller.horizon_theta is HorizonTheta.SCHEDULED:
            future = automation_future(cfg, k)
        self.controller.tick(obs, theta_a, t, future)
        theta_a_hist = self.controller.state.theta_a_hist
        dtheta_a = (theta_a_hist[-1] - theta_a_hist[-2]) / timing.ts

        self.recorder.record(t, plant, human, z_a, theta_a_hist, dtheta_a)
        if k == timing.ticks - 1:
            return plant
        inputs = self._plant_inputs(t, human, z_a, theta_a, dtheta_a)
        return integrate(
            plant, inputs, cfg.plant, timing.dt, timing.inner_steps,
        )

    def run(self) -> SimLog:
        cfg = self.cfg
        logger.info(
            "Running %s (%s, %d steps)",
            cfg.name,
            "adaptive" if cfg.controller.adaptive else "fixed",
            self.timing.ticks,
        )
        plant = PlantState(theta_s=0.0, dtheta_s=0.0)
        for k in range(self.timing.ticks):
            try:
                plant = self._tick(k, plant)
            except HapsimError as e:
                raise SimulationError(k, cfg.tick_time(k), e) from e

        document = scenario_document(cfg)
        log = self.recorder.log
        log.meta.update(
            config_hash=config_hash(document),
            config=document,
        )
        logger.info("Finished %s", cfg.name)
        return log