import math

import pytest

from hapsim.exceptions import OutOfDomainError
from hapsim.schedule import (
    Schedule,
    ScheduleKind,
    sample_schedule,
    schedule_rate,
)

K_H = Schedule.steps([(0.0, 1.0), (8.0, 0.05), (20.0, 0.75)])


@pytest.mark.parametrize(
    ("t", "expected"),
    [
        (0.0, 1.0),
        (7.9, 1.0),
        (8.0, 0.05),
        (19.999, 0.05),
        (20.0, 0.75),
        (30.0, 0.75),
    ],
)
def test_step_sequence(t, expected):
    assert sample_schedule(K_H, t) == expected


def test_constant():
    s = Schedule.constant(0.5)
    assert s.kind is ScheduleKind.CONSTANT
    assert all(sample_schedule(s, t) == 0.5 for t in (0.0, 1.5, 30.0))


def test_sinusoid():
    s = Schedule.sinusoid(amplitude=0.2, frequency=0.5, offset=0.1)
    assert sample_schedule(s, 0.0) == pytest.approx(0.1)
    assert sample_schedule(s, 0.5) == pytest.approx(0.3)
    assert s.bounds() == pytest.approx((-0.1, 0.3))


def test_out_of_domain():
    with pytest.raises(OutOfDomainError):
        sample_schedule(K_H, -0.1)
    with pytest.raises(OutOfDomainError):
        sample_schedule(K_H, 30.5, duration=30.0)
    assert sample_schedule(K_H, 30.0 + 1e-12, duration=30.0) == 0.75


def test_breakpoints_and_bounds():
    assert K_H.breakpoints() == [8.0, 20.0]
    assert K_H.bounds() == (0.05, 1.0)
    assert Schedule.constant(2.0).breakpoints() == []


def test_rate_constant():
    assert schedule_rate(Schedule.constant(0.5), 3.0, 0.1) == 0


def test_rate_sinusoid():
    s = Schedule.sinusoid(amplitude=0.2, frequency=0.5)
    assert schedule_rate(s, 0.0, 0.1) == pytest.approx(0.2 * math.pi)


def test_rate_across_step():
    assert schedule_rate(K_H, 8.0, 0.1) == pytest.approx(-9.5)
    assert schedule_rate(K_H, 8.5, 0.1) == 0
    assert schedule_rate(K_H, 0.0, 0.1) == 0


def test_rate_nonpositive_ts():
    with pytest.raises(ValueError):
        schedule_rate(K_H, 1.0, 0.0)
