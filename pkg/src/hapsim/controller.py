import logging
from collections.abc import Mapping, Sequence
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

import numpy as np

from .exceptions import (
    HistoryMissingError,
    LengthMismatchError,
    SingularSystemError,
)
from .impedance import (
    ControlAction,
    ImpedanceDynamicsParams,
    ImpedanceState,
    gamma_for_target,
    hold_action,
    step_impedance,
)
from .linalg import lstsq, modified_lstsq
from .prediction import (
    IntentSample,
    PredictionSystem,
    build_prediction_system,
    intent_torque,
    stack_actions,
)
from .schedule import Schedule, sample_schedule

logger = logging.getLogger(__name__)

HISTORY_LENGTH = 2
# first-step damping and stiffness columns of the stacked actions
DAMPING, STIFFNESS = 0, 1
CLAMP_CANDIDATES = ((DAMPING,), (STIFFNESS,), (DAMPING, STIFFNESS))
FEASIBILITY_TOLERANCE = 1e-12
COST_TOLERANCE = 1e-9


class CostNorm(Enum):
    L1 = "l1"
    SQUARED = "squared"


class TargetPolicy(Enum):
    NEAREST = "nearest"
    REACHABLE = "reachable"


class ClampLocus(Enum):
    IMPEDANCE = "impedance"
    SOLUTION = "solution"


class HorizonTheta(Enum):
    FROZEN = "frozen"
    SCHEDULED = "scheduled"


@dataclass(frozen=True, slots=True)
class ControllerConfig:
    horizon: int
    epsilon: Schedule
    dynamics: ImpedanceDynamicsParams
    adaptive: bool = True
    norm: CostNorm = CostNorm.L1
    target_policy: TargetPolicy = TargetPolicy.NEAREST
    clamp: ClampLocus = ClampLocus.IMPEDANCE
    horizon_theta: HorizonTheta = HorizonTheta.FROZEN
    hold_reference: bool = True
    resolve_clamped: bool = True

    @property
    def ts(self) -> float:
        return self.dynamics.ts


@dataclass(frozen=True, slots=True)
class ControllerState:
    """
    Everything the automation remembers between two ticks.

    `z_a` is Z_A(k), produced from `z_a_prev` by `gamma_prev`.
    `theta_a_hist` keeps intents oldest first.
    """
    z_a: ImpedanceState
    z_a_prev: ImpedanceState
    gamma_prev: ControlAction
    theta_a_hist: tuple[float, ...]
    cost_breakdown: tuple[float, float] = (0.0, 0.0)


@dataclass(frozen=True, slots=True)
class HumanObservation:
    z_h: ImpedanceState
    theta_h_hist: tuple[float, ...]


@dataclass(frozen=True, slots=True)
class PlanDiagnostics:
    tau_h: float
    epsilon: float
    targets: np.ndarray = field(repr=False)
    predicted: np.ndarray = field(repr=False)
    tau_a_next: float
    safety_term: float
    disagreement_term: float
    clamped: bool


class PlanResult(NamedTuple):
    action: ControlAction
    z_a: ImpedanceState
    diagnostics: PlanDiagnostics


def initial_state(
        z_a0: ImpedanceState,
        theta_a0: float,
        p: ImpedanceDynamicsParams,
) -> ControllerState:
    """State at rest: Z_A held at `z_a0`, intent history seeded twice."""
    return ControllerState(
        z_a=z_a0,
        z_a_prev=z_a0,
        gamma_prev=hold_action(z_a0, p),
        theta_a_hist=(theta_a0,) * HISTORY_LENGTH,
    )


def push_history(history: Sequence[float], value: float) -> tuple[float, ...]:
    return (*history, value)[-HISTORY_LENGTH:]


def stage_terms(
        tau_h: float,
        tau_a: float,
        epsilon: float,
        norm: CostNorm = CostNorm.L1,
) -> tuple[float, float]:
    """Safety and disagreement terms of one stage of the cost."""
    safety = abs(abs(tau_h + tau_a) - epsilon)
    disagreement = abs(tau_h - tau_a)
    if norm is CostNorm.SQUARED:
        return safety ** 2, disagreement ** 2
    return safety, disagreement


def stage_cost(
        tau_h: float,
        tau_a: float,
        epsilon: float,
        norm: CostNorm = CostNorm.L1,
) -> float:
    safety, disagreement = stage_terms(tau_h, tau_a, epsilon, norm)
    return safety + disagreement


def horizon_cost(
        tau_h: Sequence[float],
        tau_a: Sequence[float],
        epsilon: Sequence[float],
        norm: CostNorm = CostNorm.L1,
) -> float:
    if not len(tau_h) == len(tau_a) == len(epsilon):
        raise LengthMismatchError(
            f"Cost sequences differ in length: {len(tau_h)}, "
            f"{len(tau_a)}, {len(epsilon)}",
        )
    return sum(
        stage_cost(h, a, e, norm)
        for h, a, e in zip(tau_h, tau_a, epsilon, strict=True)
    )


def _direction(tau_h: float) -> float:
    return 1.0 if tau_h >= 0 else -1.0


def pointwise_target(
        tau_h: float,
        epsilon: float,
        norm: CostNorm = CostNorm.L1,
) -> float:
    """
    Automation torque minimizing one stage of the cost.

    Under L1 this is the safety-exact endpoint nearest to `tau_h`,
    under the squared norm it is sgn(tau_h)*epsilon/2. A zero `tau_h`
    counts as positive.
    """
    if norm is CostNorm.SQUARED:
        return _direction(tau_h) * epsilon / 2
    return _direction(tau_h) * epsilon - tau_h


def alternate_target(
        tau_h: float,
        epsilon: float,
        norm: CostNorm = CostNorm.L1,
) -> float:
    """The safety-exact candidate on the other side of zero total torque."""
    if norm is CostNorm.SQUARED:
        return -pointwise_target(tau_h, epsilon, norm)
    return -_direction(tau_h) * epsilon - tau_h


def is_reachable(torque: float, dtheta: float, theta: float) -> bool:
    """
    Whether B*dtheta + K*theta can equal `torque` for some B, K >= 0.
    """
    if torque > 0:
        return dtheta > 0 or theta > 0
    if torque < 0:
        return dtheta < 0 or theta < 0
    return True


def horizon_targets(
        tau_h: float,
        epsilon: float,
        system: PredictionSystem,
        cfg: ControllerConfig,
) -> np.ndarray:
    nearest = pointwise_target(tau_h, epsilon, cfg.norm)
    if cfg.target_policy is TargetPolicy.NEAREST:
        return np.full(system.horizon, nearest)
    other = alternate_target(tau_h, epsilon, cfg.norm)
    targets = np.empty(system.horizon)
    for n, (theta, theta_prev) in enumerate(system.pairs):
        dtheta = (theta - theta_prev) / cfg.ts
        if is_reachable(nearest, dtheta, theta):
            targets[n] = nearest
        elif is_reachable(other, dtheta, theta):
            targets[n] = other
        else:
            targets[n] = nearest
    return targets


def _solve(
        system: PredictionSystem,
        targets: np.ndarray,
        z_a: ImpedanceState,
        cfg: ControllerConfig,
) -> np.ndarray:
    rhs = targets - system.offset
    if cfg.clamp is ClampLocus.SOLUTION:
        return modified_lstsq(
            system.a_matrix, rhs, range(system.a_matrix.shape[1]),
        )
    return _solve_from_reference(system, rhs, z_a, cfg)


def _solve_from_reference(
        system: PredictionSystem,
        rhs: np.ndarray,
        z_a: ImpedanceState,
        cfg: ControllerConfig,
        fixed: Mapping[int, float] | None = None,
) -> np.ndarray:
    """
    Minimum-norm deviation from the reference action over the free columns.

    Columns listed in `fixed` keep the given values.
    """
    a = system.a_matrix
    if cfg.hold_reference:
        # the action that keeps Z_A(k) constant
        hold = hold_action(z_a, cfg.dynamics)
        solution = stack_actions([hold] * system.horizon)
    else:
        solution = np.zeros(a.shape[1])
    fixed = fixed or {}
    for column, value in fixed.items():
        solution[column] = value
    free = np.setdiff1d(np.arange(a.shape[1]), list(fixed))
    solution[free] += lstsq(a[:, free], rhs - a @ solution)
    return solution


def _resolve_clamped(
        system: PredictionSystem,
        targets: np.ndarray,
        tau_h: float,
        epsilon: float,
        z_a: ImpedanceState,
        cfg: ControllerConfig,
) -> tuple[np.ndarray, ControlAction, ImpedanceState]:
    """
    Re-solve with first-step impedance channels pinned at zero.

    Every combination of pinned channels is tried, the free channels
    must stay non-negative. The candidate with the lowest predicted
    horizon cost wins, fewer pinned channels win ties.
    """
    p = cfg.dynamics
    rhs = targets - system.offset
    zeroing = stack_actions(
        [gamma_for_target(z_a, ImpedanceState(0.0, 0.0), p)],
    )
    tau_h_horizon = np.full(system.horizon, tau_h)
    epsilon_horizon = np.full(system.horizon, epsilon)
    best: tuple[float, np.ndarray, tuple[int, ...]] | None = None
    for channels in CLAMP_CANDIDATES:
        solution = _solve_from_reference(
            system, rhs, z_a, cfg,
            {column: zeroing[column] for column in channels},
        )
        tentative = step_impedance(
            z_a, ControlAction(float(solution[0]), float(solution[1])), p,
        )
        if min(tentative.b, tentative.k) < -FEASIBILITY_TOLERANCE:
            continue
        cost = horizon_cost(
            tau_h_horizon, system.predict(solution), epsilon_horizon,
            cfg.norm,
        )
        if best is None or cost < best[0] - COST_TOLERANCE:
            best = cost, solution, channels

    # pinning both channels is always feasible
    _, solution, channels = best
    tentative = step_impedance(
        z_a, ControlAction(float(solution[0]), float(solution[1])), p,
    )
    z_next = ImpedanceState(
        b=0.0 if DAMPING in channels else max(tentative.b, 0.0),
        k=0.0 if STIFFNESS in channels else max(tentative.k, 0.0),
    )
    logger.debug(
        "Re-solved clamped impedance with columns %s pinned -> %s",
        channels, z_next,
    )
    return solution, gamma_for_target(z_a, z_next, p), z_next


def clamp_impedance(
        z: ImpedanceState,
        action: ControlAction,
        p: ImpedanceDynamicsParams,
) -> tuple[ControlAction, ImpedanceState, bool]:
    """
    Apply `action` and overwrite negative impedance components with zero.

    When a component is clamped the action is recomputed so that it
    produces the clamped impedance exactly.
    """
    z_next = step_impedance(z, action, p)
    if z_next.is_nonnegative():
        return action, z_next, False
    z_clamped = ImpedanceState(b=max(z_next.b, 0.0), k=max(z_next.k, 0.0))
    logger.debug("Clamped automation impedance %s -> %s", z_next, z_clamped)
    return gamma_for_target(z, z_clamped, p), z_clamped, True


def _intent_sample(
        history: Sequence[float],
        ts: float,
        who: str,
) -> IntentSample:
    if len(history) < HISTORY_LENGTH:
        raise HistoryMissingError(
            f"{who} intent history needs {HISTORY_LENGTH} samples, "
            f"got {len(history)}",
        )
    return IntentSample(theta=history[-1], theta_prev=history[-2], ts=ts)


def plan(
        state: ControllerState,
        obs: HumanObservation,
        cfg: ControllerConfig,
        t: float = 0.0,
        theta_a_future: Sequence[float] | None = None,
) -> PlanResult:
    """
    One receding-horizon step of the impedance modulation.

    :param state: controller memory at tick k
    :param obs: measured human impedance and intents
    :param cfg: controller configuration
    :param t: tick instant, used to sample epsilon
    :param theta_a_future: automation intents for k+1 ... k+Np, only
        used with `HorizonTheta.SCHEDULED`
    :return: applied action Gamma_A(k+1), clamped Z_A(k+1) and diagnostics
    """
    p = cfg.dynamics
    human = _intent_sample(obs.theta_h_hist, p.ts, "Human")
    automation = _intent_sample(state.theta_a_hist, p.ts, "Automation")
    tau_h = intent_torque(obs.z_h, human)
    epsilon = sample_schedule(cfg.epsilon, t)

    if cfg.horizon_theta is HorizonTheta.SCHEDULED:
        future = theta_a_future
    else:
        future = None
    system = build_prediction_system(
        z_prev=state.z_a_prev,
        gamma_k=state.gamma_prev,
        theta_pair=automation.pair,
        p=p,
        horizon=cfg.horizon,
        theta_future=future,
    )
    targets = horizon_targets(tau_h, epsilon, system, cfg)
    solution = _solve(system, targets, state.z_a, cfg)
    if not np.all(np.isfinite(solution)):
        raise SingularSystemError(
            "Least-squares solution of the prediction system is not finite",
        )

    first = ControlAction(float(solution[0]), float(solution[1]))
    action, z_next, clamped = clamp_impedance(state.z_a, first, p)
    if (
            clamped
            and cfg.resolve_clamped
            and cfg.clamp is ClampLocus.IMPEDANCE
    ):
        solution, action, z_next = _resolve_clamped(
            system, targets, tau_h, epsilon, state.z_a, cfg,
        )

    theta, theta_prev = system.pairs[0]
    tau_a_next = intent_torque(
        z_next, IntentSample(float(theta), float(theta_prev), p.ts),
    )
    safety, disagreement = stage_terms(tau_h, tau_a_next, epsilon, cfg.norm)
    diagnostics = PlanDiagnostics(
        tau_h=tau_h,
        epsilon=epsilon,
        targets=targets,
        predicted=system.predict(solution),
        tau_a_next=tau_a_next,
        safety_term=safety,
        disagreement_term=disagreement,
        clamped=clamped,
    )
    return PlanResult(action, z_next, diagnostics)


def plan_fixed(
        state: ControllerState,
        cfg: ControllerConfig,
) -> tuple[ControlAction, ImpedanceState]:
    return hold_action(state.z_a, cfg.dynamics), state.z_a


class ImpedanceController:
    """
    Stateful automation controller driven once per sampling period.

    Adaptive controllers re-plan every tick, fixed ones hold the
    initial impedance.
    """
    __slots__ = ("config", "state", "last_diagnostics")

    def __init__(
            self,
            config: ControllerConfig,
            z_a0: ImpedanceState,
            theta_a0: float,
    ):
        self.config = config
        self.state = initial_state(z_a0, theta_a0, config.dynamics)
        self.last_diagnostics: PlanDiagnostics | None = None

    @property
    def impedance(self) -> ImpedanceState:
        return self.state.z_a

    def tick(
            self,
            obs: HumanObservation,
            theta_a: float,
            t: float,
            theta_a_future: Sequence[float] | None = None,
    ) -> ImpedanceState:
        """
        Record the automation intent of tick k and compute Z_A(k+1).
        """
        state = replace(
            self.state,
            theta_a_hist=push_history(self.state.theta_a_hist, theta_a),
        )
        if not self.config.adaptive:
            action, z_next = plan_fixed(state, self.config)
            self.state = replace(
                state, z_a_prev=state.z_a, gamma_prev=action,
            )
            return z_next

        result = plan(state, obs, self.config, t, theta_a_future)
        diagnostics = result.diagnostics
        self.last_diagnostics = diagnostics
        self.state = ControllerState(
            z_a=result.z_a,
            z_a_prev=state.z_a,
            gamma_prev=result.action,
            theta_a_hist=state.theta_a_hist,
            cost_breakdown=(
                diagnostics.safety_term, diagnostics.disagreement_term,
            ),
        )
        return result.z_a
