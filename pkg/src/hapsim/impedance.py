from dataclasses import dataclass
from typing import NamedTuple

from .exceptions import DegenerateBetaError, SingularDiscretizationError


class Diagonal(NamedTuple):
    """Diagonal 2x2 matrix stored as its damping and stiffness entries."""
    b: float
    k: float


@dataclass(frozen=True, slots=True)
class ImpedanceState:
    """
    Damping/stiffness pair of one agent.

    Values coming out of `step_impedance` may be negative, the controller
    clamps them before they reach the plant or the log.
    """
    b: float
    k: float

    def is_nonnegative(self) -> bool:
        return self.b >= 0 and self.k >= 0


@dataclass(frozen=True, slots=True)
class ControlAction:
    gamma_b: float
    gamma_k: float


@dataclass(frozen=True, slots=True)
class ImpedanceDynamicsParams:
    alpha: Diagonal
    beta: Diagonal
    alpha_tilde: Diagonal
    beta_tilde: Diagonal
    ts: float


def discretize(
        alpha: Diagonal,
        beta: Diagonal,
        ts: float,
) -> ImpedanceDynamicsParams:
    """
    Build the implicit-Euler coefficients of the impedance dynamics.

    alpha_tilde = (I - ts*alpha)^-1 and beta_tilde = alpha_tilde*ts*beta,
    evaluated entry by entry since both matrices are diagonal.

    :param alpha: continuous drift matrix
    :param beta: continuous input matrix
    :param ts: sampling time of the controller
    :return: discrete coefficients together with the continuous ones
    """
    if ts <= 0:
        raise ValueError(f"Sampling time must be positive, got {ts}")
    alpha = Diagonal(*alpha)
    beta = Diagonal(*beta)
    for name, value in zip(("damping", "stiffness"), alpha, strict=True):
        if ts * value == 1:
            raise SingularDiscretizationError(
                f"I - ts*alpha is singular in the {name} channel "
                f"(ts={ts}, alpha={value})",
            )
    alpha_tilde = Diagonal(
        1 / (1 - ts * alpha.b),
        1 / (1 - ts * alpha.k),
    )
    beta_tilde = Diagonal(
        alpha_tilde.b * ts * beta.b,
        alpha_tilde.k * ts * beta.k,
    )
    return ImpedanceDynamicsParams(
        alpha=alpha,
        beta=beta,
        alpha_tilde=alpha_tilde,
        beta_tilde=beta_tilde,
        ts=ts,
    )


def step_impedance(
        z: ImpedanceState,
        gamma_next: ControlAction,
        p: ImpedanceDynamicsParams,
) -> ImpedanceState:
    return ImpedanceState(
        b=p.alpha_tilde.b * z.b + p.beta_tilde.b * gamma_next.gamma_b,
        k=p.alpha_tilde.k * z.k + p.beta_tilde.k * gamma_next.gamma_k,
    )


def continuous_derivative(
        z: ImpedanceState,
        gamma: ControlAction,
        alpha: Diagonal,
        beta: Diagonal,
) -> ImpedanceState:
    return ImpedanceState(
        b=alpha[0] * z.b + beta[0] * gamma.gamma_b,
        k=alpha[1] * z.k + beta[1] * gamma.gamma_k,
    )


def gamma_for_target(
        z: ImpedanceState,
        z_target: ImpedanceState,
        p: ImpedanceDynamicsParams,
) -> ControlAction:
    """Action that moves `z` onto `z_target` in exactly one step."""
    if p.beta_tilde.b == 0 or p.beta_tilde.k == 0:
        raise DegenerateBetaError(
            f"beta_tilde has a zero entry {p.beta_tilde}, "
            f"impedance cannot be steered to a target",
        )
    return ControlAction(
        gamma_b=(z_target.b - p.alpha_tilde.b * z.b) / p.beta_tilde.b,
        gamma_k=(z_target.k - p.alpha_tilde.k * z.k) / p.beta_tilde.k,
    )


def hold_action(
        z: ImpedanceState,
        p: ImpedanceDynamicsParams,
) -> ControlAction:
    return gamma_for_target(z, z, p)
