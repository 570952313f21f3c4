import math
from bisect import bisect_right
from collections.abc import Iterable
from dataclasses import dataclass
from enum import Enum

from .exceptions import OutOfDomainError

# slack for tick instants computed as round(k*ts, 12)
DOMAIN_TOLERANCE = 1e-9


class ScheduleKind(Enum):
    CONSTANT = "constant"
    STEP_SEQUENCE = "step-sequence"
    SINUSOID = "sinusoid"


@dataclass(frozen=True, slots=True)
class Schedule:
    """
    Time-varying scalar used for impedances, intents, road torque and epsilon.

    Step sequences are piecewise constant on left-closed intervals
    [t_i, t_{i+1}). Sinusoids evaluate
    ``offset + amplitude * sin(2*pi*frequency*t)``.
    """
    kind: ScheduleKind
    points: tuple[tuple[float, float], ...] = ()
    amplitude: float = 0.0
    frequency: float = 0.0
    offset: float = 0.0

    @classmethod
    def constant(cls, value: float) -> "Schedule":
        return cls(ScheduleKind.CONSTANT, ((0.0, float(value)),))

    @classmethod
    def steps(cls, points: Iterable[tuple[float, float]]) -> "Schedule":
        return cls(
            ScheduleKind.STEP_SEQUENCE,
            tuple((float(t), float(v)) for t, v in points),
        )

    @classmethod
    def sinusoid(
            cls,
            amplitude: float,
            frequency: float,
            offset: float = 0.0,
    ) -> "Schedule":
        return cls(
            ScheduleKind.SINUSOID,
            amplitude=float(amplitude),
            frequency=float(frequency),
            offset=float(offset),
        )

    @property
    def times(self) -> list[float]:
        return [t for t, _ in self.points]

    def bounds(self) -> tuple[float, float]:
        """Smallest and largest value the schedule can take."""
        if self.kind is ScheduleKind.SINUSOID:
            spread = abs(self.amplitude)
            return self.offset - spread, self.offset + spread
        values = [v for _, v in self.points]
        return min(values), max(values)

    def breakpoints(self) -> list[float]:
        """Instants after t=0 where a step sequence changes value."""
        if self.kind is not ScheduleKind.STEP_SEQUENCE:
            return []
        return self.times[1:]


def sample_schedule(
        s: Schedule,
        t: float,
        duration: float = math.inf,
) -> float:
    if t < -DOMAIN_TOLERANCE or t > duration + DOMAIN_TOLERANCE:
        raise OutOfDomainError(
            f"t={t} is outside the schedule domain [0, {duration}]",
        )
    match s.kind:
        case ScheduleKind.CONSTANT:
            return s.points[0][1]
        case ScheduleKind.SINUSOID:
            return s.offset + s.amplitude * math.sin(
                2 * math.pi * s.frequency * t,
            )
        case ScheduleKind.STEP_SEQUENCE:
            index = max(bisect_right(s.times, t) - 1, 0)
            return s.points[index][1]
    raise ValueError(f"Unknown schedule kind {s.kind}")


def schedule_rate(
        s: Schedule,
        t: float,
        ts: float,
        duration: float = math.inf,
) -> float:
    """
    Time derivative of a schedule as seen at sampling period `ts`.

    Analytic for sinusoids, zero on constant segments and a backward
    difference over one period when a step lies in (t - ts, t].
    """
    if ts <= 0:
        raise ValueError(f"Sampling time must be positive, got {ts}")
    match s.kind:
        case ScheduleKind.CONSTANT:
            sample_schedule(s, t, duration)
            return 0.0
        case ScheduleKind.SINUSOID:
            sample_schedule(s, t, duration)
            omega = 2 * math.pi * s.frequency
            return s.amplitude * omega * math.cos(omega * t)
    current = sample_schedule(s, t, duration)
    previous = sample_schedule(s, max(t - ts, 0.0), duration)
    return (current - previous) / ts
