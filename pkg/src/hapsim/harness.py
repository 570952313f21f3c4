import logging
import math
from collections.abc import Mapping, Sequence
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, fields
from typing import Any

import numpy as np
from dishka import make_container

from .exceptions import (
    HapsimError,
    ScenarioValidationError,
    SweepError,
    TimingMismatchError,
)
from .provider import RunProvider
from .scenario import ScenarioConfig, with_values
from .simlog import SimLog
from .simulation import Simulation

logger = logging.getLogger(__name__)

STEADY_STATE_FRACTION = 0.2
SETTLE_TOLERANCE = 0.05
EPSILON_TRACKING = 0.1


def run_simulation(
        cfg: ScenarioConfig,
        overrides: Mapping[str, Any] | None = None,
) -> SimLog:
    """
    Run one closed-loop simulation of a validated scenario.

    :param cfg: scenario to simulate
    :param overrides: dotted-path overrides already applied to `cfg`,
        recorded in the log meta block
    """
    container = make_container(RunProvider(cfg))
    try:
        with container() as run:
            log = run.get(Simulation).run()
    finally:
        container.close()
    log.meta["overrides"] = dict(overrides or {})
    return log


@dataclass(frozen=True, slots=True)
class SettleTime:
    breakpoint: float
    settle: float | None


@dataclass(frozen=True, slots=True)
class Metrics:
    steady_state_tau_diff: float
    steady_state_tau_total: float
    settle_times: tuple[SettleTime, ...]
    max_abs_theta_s: float
    mean_disagreement: float
    final_abs_theta_s: float
    steady_state_epsilon: float

    def to_document(self) -> dict[str, Any]:
        return asdict(self)


def _steady_start(length: int) -> int:
    return min(int(length * (1 - STEADY_STATE_FRACTION)), length - 1)


def settle_times(
        t: np.ndarray,
        k_h: np.ndarray,
        k_a: np.ndarray,
        tolerance: float,
) -> tuple[SettleTime, ...]:
    """
    For each segment of constant K_H, the delay until |K_A - K_H| falls
    below `tolerance` and stays there until the segment ends.
    """
    starts = [0, *np.flatnonzero(np.diff(k_h) != 0) + 1]
    ends = [*starts[1:], len(k_h)]
    result = []
    for start, end in zip(starts, ends):
        outside = np.flatnonzero(
            np.abs(k_a[start:end] - k_h[start:end]) >= tolerance,
        )
        if outside.size == 0:
            settled = start
        else:
            settled = start + outside[-1] + 1
        if settled >= end:
            settle = None
        else:
            settle = float(t[settled] - t[start])
        result.append(SettleTime(breakpoint=float(t[start]), settle=settle))
    return tuple(result)


def compute_metrics(
        log: SimLog,
        tolerance: float = SETTLE_TOLERANCE,
) -> Metrics:
    log.require_records()
    t = log.column("t")
    theta_s = log.column("theta_s")
    tau_diff = np.abs(log.column("tau_diff"))
    tau_total = np.abs(log.column("tau_total_intent"))
    epsilon = log.column("epsilon")
    steady = slice(_steady_start(len(log)), None)
    return Metrics(
        steady_state_tau_diff=float(tau_diff[steady].mean()),
        steady_state_tau_total=float(tau_total[steady].mean()),
        settle_times=settle_times(
            t, log.column("k_h"), log.column("k_a"), tolerance,
        ),
        max_abs_theta_s=float(np.abs(theta_s).max()),
        mean_disagreement=float(tau_diff.mean()),
        final_abs_theta_s=float(abs(theta_s[-1])),
        steady_state_epsilon=float(epsilon[steady].mean()),
    )


def tracks_epsilon(
        metrics: Metrics,
        tolerance: float = EPSILON_TRACKING,
) -> bool:
    """Whether the steady total intent torque stays close to epsilon."""
    gap = abs(metrics.steady_state_tau_total - metrics.steady_state_epsilon)
    return gap <= tolerance * metrics.steady_state_epsilon + 1e-12


def _ratio(numerator: float, denominator: float) -> float | None:
    if denominator == 0:
        return 1.0 if numerator == 0 else None
    return numerator / denominator


@dataclass(frozen=True, slots=True)
class ComparisonReport:
    scenario: str
    adaptive: Metrics
    fixed: Metrics
    ratios: dict[str, float | None]
    adaptive_lower_disagreement: bool
    adaptive_tracks_epsilon: bool
    same_mode: bool

    @property
    def disagreement_ratio(self) -> float | None:
        return self.ratios["mean_disagreement"]

    def to_document(self) -> dict[str, Any]:
        return {
            "scenario": self.scenario,
            "adaptive": self.adaptive.to_document(),
            "fixed": self.fixed.to_document(),
            "ratios": dict(self.ratios),
            "disagreement_ratio": self.disagreement_ratio,
            "findings": {
                "adaptive_lower_disagreement": (
                    self.adaptive_lower_disagreement
                ),
                "adaptive_tracks_epsilon": self.adaptive_tracks_epsilon,
            },
            "same_mode": self.same_mode,
        }


def check_timing(first: SimLog, second: SimLog) -> None:
    if not math.isclose(first.ts, second.ts, rel_tol=0, abs_tol=1e-12):
        raise TimingMismatchError(
            f"Sampling times differ: {first.ts} and {second.ts}",
        )
    if len(first) != len(second):
        raise TimingMismatchError(
            f"Logs differ in length: {len(first)} and {len(second)}",
        )
    if not np.array_equal(first.times, second.times):
        raise TimingMismatchError("Logs are sampled at different instants")


def compare_runs(adaptive: SimLog, fixed: SimLog) -> ComparisonReport:
    check_timing(adaptive, fixed)
    adaptive_metrics = compute_metrics(adaptive)
    fixed_metrics = compute_metrics(fixed)
    ratios = {
        f.name: _ratio(
            getattr(adaptive_metrics, f.name), getattr(fixed_metrics, f.name),
        )
        for f in fields(Metrics)
        if f.name != "settle_times"
    }
    same_mode = adaptive.adaptive == fixed.adaptive
    if same_mode:
        logger.warning(
            "Comparing two %s runs of %s",
            "adaptive" if adaptive.adaptive else "fixed",
            adaptive.name,
        )
    return ComparisonReport(
        scenario=adaptive.name,
        adaptive=adaptive_metrics,
        fixed=fixed_metrics,
        ratios=ratios,
        adaptive_lower_disagreement=(
            adaptive_metrics.mean_disagreement
            < fixed_metrics.mean_disagreement
        ),
        adaptive_tracks_epsilon=tracks_epsilon(adaptive_metrics),
        same_mode=same_mode,
    )


def run_pair(cfg: ScenarioConfig) -> tuple[SimLog, SimLog]:
    """Run a scenario with the adaptive and the fixed controller."""
    adaptive = with_values(
        cfg, {"controller.adaptive": True},
        rename=lambda name: f"{name}_adaptive",
    )
    fixed = with_values(
        cfg, {"controller.adaptive": False},
        rename=lambda name: f"{name}_fixed",
    )
    return run_simulation(adaptive), run_simulation(fixed)


@dataclass(frozen=True, slots=True)
class SweepResult:
    value: float
    log: SimLog
    metrics: Metrics


def _sweep_name(name: str, key: str, value: float) -> str:
    return f"{name}_{key.rsplit('.', 1)[-1]}_{value:g}"


def run_sweep(
        cfg: ScenarioConfig,
        key: str,
        values: Sequence[float],
        max_workers: int | None = None,
) -> list[SweepResult]:
    """
    Run `cfg` once per value of the dotted `key`, concurrently.

    Results are ordered by value. Failures of individual runs are raised
    together as a `SweepError`.
    """
    if not values:
        raise ScenarioValidationError("sweep values non-empty")
    variants = [
        (
            value,
            with_values(
                cfg, {key: value},
                rename=lambda name, v=value: _sweep_name(name, key, v),
            ),
        )
        for value in sorted(values)
    ]
    results, errors = [], []
    with ThreadPoolExecutor(max_workers=max_workers) as pool:
        futures = [
            pool.submit(run_simulation, variant, {key: value})
            for value, variant in variants
        ]
        for (value, _), future in zip(variants, futures):
            try:
                log = future.result()
            except HapsimError as e:
                errors.append(e)
                continue
            logger.info("Finished sweep run %s=%g", key, value)
            results.append(SweepResult(value, log, compute_metrics(log)))
    if errors:
        raise SweepError(f"{len(errors)} sweep runs failed", errors)
    return results
