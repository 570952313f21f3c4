import math
from dataclasses import dataclass

from .exceptions import NonFiniteStateError, NoStiffnessError, ZeroInertiaError
from .impedance import ImpedanceState


@dataclass(frozen=True, slots=True)
class PlantState:
    theta_s: float
    dtheta_s: float


@dataclass(frozen=True, slots=True)
class PlantParams:
    j_sw: float
    j_h: float
    j_a: float
    b_sw: float


@dataclass(frozen=True, slots=True)
class AgentInput:
    """Impedance and intent of one agent acting on the wheel."""
    z: ImpedanceState
    theta: float
    dtheta: float = 0.0

    def __post_init__(self):
        if not self.z.is_nonnegative():
            raise ValueError(f"Agent impedance must be non-negative: {self.z}")


@dataclass(frozen=True, slots=True)
class PlantInputs:
    human: AgentInput
    automation: AgentInput
    tau_v: float = 0.0


def equivalent_inertia(params: PlantParams) -> float:
    return params.j_sw + params.j_h + params.j_a


def coupling_torque(
        z: ImpedanceState,
        theta_intent: float,
        dtheta_intent: float,
        state: PlantState,
) -> float:
    """Torque an agent exerts on the wheel through its impedance."""
    return (
        z.k * (theta_intent - state.theta_s)
        + z.b * (dtheta_intent - state.dtheta_s)
    )


def plant_derivative(
        state: PlantState,
        inputs: PlantInputs,
        params: PlantParams,
) -> tuple[float, float]:
    """
    Right-hand side of J_eq*theta'' + B_SW*theta' = tau_H + tau_A + tau_V.

    :return: (theta', theta'') of the steering wheel
    """
    inertia = equivalent_inertia(params)
    if inertia == 0:
        raise ZeroInertiaError("Equivalent inertia of the wheel is zero")
    human, automation = inputs.human, inputs.automation
    torque = (
        coupling_torque(human.z, human.theta, human.dtheta, state)
        + coupling_torque(
            automation.z, automation.theta, automation.dtheta, state,
        )
        + inputs.tau_v
        - params.b_sw * state.dtheta_s
    )
    return state.dtheta_s, torque / inertia


def _finite_state(theta: float, dtheta: float) -> PlantState:
    if not (math.isfinite(theta) and math.isfinite(dtheta)):
        raise NonFiniteStateError(
            f"Plant state diverged: theta_s={theta}, dtheta_s={dtheta}",
        )
    return PlantState(theta_s=theta, dtheta_s=dtheta)


def _linear_coefficients(
        inputs: PlantInputs,
        params: PlantParams,
) -> tuple[float, float, float, float]:
    # plant_derivative with inputs frozen reduces to
    # J*theta'' = force - stiffness*theta - damping*theta'
    inertia = equivalent_inertia(params)
    if inertia == 0:
        raise ZeroInertiaError("Equivalent inertia of the wheel is zero")
    human, automation = inputs.human, inputs.automation
    force = (
        human.z.k * human.theta + human.z.b * human.dtheta
        + automation.z.k * automation.theta
        + automation.z.b * automation.dtheta
        + inputs.tau_v
    )
    stiffness = human.z.k + automation.z.k
    damping = human.z.b + automation.z.b + params.b_sw
    return force, stiffness, damping, inertia


def integrate(
        state: PlantState,
        inputs: PlantInputs,
        params: PlantParams,
        dt: float,
        steps: int,
) -> PlantState:
    """
    Advance the plant by `steps` classical RK4 steps of size `dt`.

    Inputs are held constant over the whole interval.
    """
    if dt <= 0:
        raise ValueError(f"Integration step must be positive, got {dt}")
    force, stiffness, damping, inertia = _linear_coefficients(inputs, params)

    def accel(theta: float, dtheta: float) -> float:
        return (force - stiffness * theta - damping * dtheta) / inertia

    theta, dtheta = state.theta_s, state.dtheta_s
    half = dt / 2
    for _ in range(steps):
        k1_x, k1_v = dtheta, accel(theta, dtheta)
        k2_x = dtheta + half * k1_v
        k2_v = accel(theta + half * k1_x, k2_x)
        k3_x = dtheta + half * k2_v
        k3_v = accel(theta + half * k2_x, k3_x)
        k4_x = dtheta + dt * k3_v
        k4_v = accel(theta + dt * k3_x, k4_x)
        theta += dt / 6 * (k1_x + 2 * k2_x + 2 * k3_x + k4_x)
        dtheta += dt / 6 * (k1_v + 2 * k2_v + 2 * k3_v + k4_v)
    return _finite_state(theta, dtheta)


def rk4_step(
        state: PlantState,
        inputs: PlantInputs,
        params: PlantParams,
        dt: float,
) -> PlantState:
    """One classical RK4 step built directly on `plant_derivative`."""
    if dt <= 0:
        raise ValueError(f"Integration step must be positive, got {dt}")

    def shifted(slope: tuple[float, float], h: float) -> PlantState:
        return PlantState(
            theta_s=state.theta_s + h * slope[0],
            dtheta_s=state.dtheta_s + h * slope[1],
        )

    k1 = plant_derivative(state, inputs, params)
    k2 = plant_derivative(shifted(k1, dt / 2), inputs, params)
    k3 = plant_derivative(shifted(k2, dt / 2), inputs, params)
    k4 = plant_derivative(shifted(k3, dt), inputs, params)
    return _finite_state(
        state.theta_s + dt / 6 * (k1[0] + 2 * k2[0] + 2 * k3[0] + k4[0]),
        state.dtheta_s + dt / 6 * (k1[1] + 2 * k2[1] + 2 * k3[1] + k4[1]),
    )


def static_equilibrium(inputs: PlantInputs) -> float:
    human, automation = inputs.human, inputs.automation
    stiffness = human.z.k + automation.z.k
    if stiffness == 0:
        raise NoStiffnessError(
            "No stiffness couples the wheel to either agent",
        )
    return (
        human.z.k * human.theta
        + automation.z.k * automation.theta
        + inputs.tau_v
    ) / stiffness
