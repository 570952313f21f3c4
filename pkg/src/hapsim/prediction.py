from collections.abc import Sequence
from dataclasses import dataclass

import numpy as np

from .exceptions import HorizonZeroError, LengthMismatchError
from .impedance import (
    ControlAction,
    ImpedanceDynamicsParams,
    ImpedanceState,
)

ThetaPair = tuple[float, float]


@dataclass(frozen=True, slots=True)
class IntentSample:
    theta: float
    theta_prev: float
    ts: float

    @property
    def pair(self) -> ThetaPair:
        return self.theta, self.theta_prev


def theta_vector(sample: IntentSample) -> tuple[float, float]:
    if sample.ts <= 0:
        raise ValueError(f"Sampling time must be positive, got {sample.ts}")
    return (sample.theta - sample.theta_prev) / sample.ts, sample.theta


def intent_torque(z: ImpedanceState, sample: IntentSample) -> float:
    """Torque an agent commands through its impedance: B*theta' + K*theta."""
    dtheta, theta = theta_vector(sample)
    return z.b * dtheta + z.k * theta


@dataclass(frozen=True, slots=True)
class TorqueRow:
    """
    Row vector mapping [theta(k), theta(k-1)] to a torque.

    Rows built from an impedance-like pair (B, K) have the shape
    [B/ts + K, -B/ts], so the damping part is recoverable as -c1
    and the stiffness part as c0 + c1.
    """
    c0: float
    c1: float

    def __add__(self, other: "TorqueRow") -> "TorqueRow":
        return TorqueRow(self.c0 + other.c0, self.c1 + other.c1)

    def dot(self, theta_pair: ThetaPair) -> float:
        return self.c0 * theta_pair[0] + self.c1 * theta_pair[1]

    def propagated(self, p: ImpedanceDynamicsParams, n: int) -> "TorqueRow":
        # alpha_tilde^n applied channelwise: damping entry to the B-part,
        # stiffness entry to the K-part
        b_part = -self.c1 * p.alpha_tilde.b ** n
        k_part = (self.c0 + self.c1) * p.alpha_tilde.k ** n
        return TorqueRow(b_part + k_part, -b_part)


class PhiRow(TorqueRow):
    __slots__ = ()


class PsiRow(TorqueRow):
    __slots__ = ()


def phi_row(z_prev: ImpedanceState, p: ImpedanceDynamicsParams) -> PhiRow:
    b_part = p.alpha_tilde.b * z_prev.b / p.ts
    return PhiRow(b_part + p.alpha_tilde.k * z_prev.k, -b_part)


def psi_row(gamma: ControlAction, p: ImpedanceDynamicsParams) -> PsiRow:
    b_part = p.beta_tilde.b * gamma.gamma_b / p.ts
    return PsiRow(b_part + p.beta_tilde.k * gamma.gamma_k, -b_part)


def propagate_torque(
        delta: TorqueRow,
        psis: Sequence[TorqueRow],
        p: ImpedanceDynamicsParams,
        theta_pair: ThetaPair,
) -> float:
    """
    Predicted automation torque n = len(psis) steps ahead.

    All rows are evaluated against the same step-k intent pair.
    """
    n = len(psis)
    row = delta.propagated(p, n)
    for i, psi in enumerate(psis, start=1):
        row = row + psi.propagated(p, n - i)
    return row.dot(theta_pair)


@dataclass(frozen=True)
class PredictionSystem:
    """
    Affine map from stacked future actions to predicted automation torques.

    The action vector is ordered [gb(k+1), gk(k+1), ..., gb(k+Np), gk(k+Np)],
    predictions are ordered k+1 ... k+Np.
    """
    a_matrix: np.ndarray
    offset: np.ndarray
    theta_pair: ThetaPair
    pairs: np.ndarray

    @property
    def horizon(self) -> int:
        return len(self.offset)

    def predict(self, actions: np.ndarray) -> np.ndarray:
        return self.a_matrix @ actions + self.offset


def intent_pairs(
        theta_pair: ThetaPair,
        horizon: int,
        theta_future: Sequence[float] | None = None,
) -> np.ndarray:
    """
    Intent pairs (theta(k+n), theta(k+n-1)) for n = 1 ... horizon.

    Without future intents every step reuses the step-k pair.
    """
    if theta_future is None:
        return np.tile(np.asarray(theta_pair, dtype=float), (horizon, 1))
    if len(theta_future) != horizon:
        raise LengthMismatchError(
            f"Expected {horizon} future intents, got {len(theta_future)}",
        )
    history = np.asarray([theta_pair[0], *theta_future], dtype=float)
    return np.column_stack((history[1:], history[:-1]))


def stack_actions(actions: Sequence[ControlAction]) -> np.ndarray:
    return np.array(
        [value for a in actions for value in (a.gamma_b, a.gamma_k)],
        dtype=float,
    )


def unstack_actions(vector: np.ndarray) -> list[ControlAction]:
    return [
        ControlAction(float(gb), float(gk))
        for gb, gk in np.asarray(vector, dtype=float).reshape(-1, 2)
    ]


def build_prediction_system(
        z_prev: ImpedanceState,
        gamma_k: ControlAction,
        theta_pair: ThetaPair,
        p: ImpedanceDynamicsParams,
        horizon: int,
        theta_future: Sequence[float] | None = None,
) -> PredictionSystem:
    """
    Assemble the prediction system of the automation torque.

    :param z_prev: automation impedance Z_A(k-1)
    :param gamma_k: action Gamma_A(k) that produced Z_A(k)
    :param theta_pair: (theta_A(k), theta_A(k-1))
    :param p: discrete impedance dynamics
    :param horizon: prediction horizon Np
    :param theta_future: theta_A(k+1) ... theta_A(k+Np) to evaluate each
        step against its own intent pair, or None to freeze the step-k pair
    """
    if horizon < 1:
        raise HorizonZeroError(
            f"Prediction horizon must be >= 1, got {horizon}",
        )
    pairs = intent_pairs(theta_pair, horizon, theta_future)
    dtheta = (pairs[:, 0] - pairs[:, 1]) / p.ts
    theta = pairs[:, 0]

    delta = phi_row(z_prev, p) + psi_row(gamma_k, p)
    steps = np.arange(1, horizon + 1)
    offset = (
        p.alpha_tilde.b ** steps * -delta.c1 * (pairs[:, 0] - pairs[:, 1])
        + p.alpha_tilde.k ** steps * (delta.c0 + delta.c1) * theta
    )

    lag = steps[:, None] - steps[None, :]
    causal = lag >= 0
    lag = np.where(causal, lag, 0)
    a_matrix = np.zeros((horizon, 2 * horizon))
    a_matrix[:, 0::2] = np.where(
        causal,
        p.alpha_tilde.b ** lag * p.beta_tilde.b * dtheta[:, None],
        0.0,
    )
    a_matrix[:, 1::2] = np.where(
        causal,
        p.alpha_tilde.k ** lag * p.beta_tilde.k * theta[:, None],
        0.0,
    )
    return PredictionSystem(
        a_matrix=a_matrix,
        offset=offset,
        theta_pair=(float(theta_pair[0]), float(theta_pair[1])),
        pairs=pairs,
    )
