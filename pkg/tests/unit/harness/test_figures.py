import time

import numpy as np
import pytest

from hapsim.harness import (
    compare_runs,
    compute_metrics,
    run_pair,
    run_simulation,
    run_sweep,
)
from hapsim.scenario import EPSILON_SWEEP, builtin_names, load_scenario
from hapsim.simlog import write_csv

RUNTIME_LIMIT = 1.0
RUNTIME_ATTEMPTS = 3


@pytest.fixture(scope="module")
def cooperative():
    return run_simulation(load_scenario("fig3_cooperative"))


@pytest.fixture(scope="module")
def noncooperative():
    return run_simulation(load_scenario("fig4_noncooperative"))


@pytest.fixture(scope="module")
def adaptive_vs_fixed():
    return run_pair(load_scenario("fig6_adaptive_vs_fixed"))


def test_cooperative_tracks_driver(cooperative):
    assert len(cooperative) == 301
    settles = compute_metrics(cooperative).settle_times
    assert [s.breakpoint for s in settles] == [0.0, 8.0, 20.0]
    for s in settles:
        assert s.settle is not None
        assert s.settle <= 0.1 + 1e-9

    k_h = cooperative.column("k_h")
    k_a = cooperative.column("k_a")
    # one tick of lag after each change of the driver's stiffness
    lagged = np.abs(k_a[1:] - k_h[:-1])
    assert lagged.max() < 1e-9


def test_noncooperative_stiffness(noncooperative):
    k_a = noncooperative.column("k_a")
    assert k_a[10] == pytest.approx(0.8, abs=1e-9)
    assert k_a[100] == pytest.approx(0.25, abs=1e-9)
    assert k_a[250] == pytest.approx(0.55, abs=1e-9)
    assert (noncooperative.column("b_a") == 0.01).all()


def test_epsilon_sweep():
    cfg = load_scenario("fig5_epsilon_sweep")
    results = run_sweep(cfg, cfg.sweep.key, cfg.sweep.values)
    assert [r.value for r in results] == list(EPSILON_SWEEP)

    tau_diff = [r.metrics.steady_state_tau_diff for r in results]
    assert tau_diff == sorted(tau_diff)
    for r in results:
        assert r.metrics.steady_state_tau_diff == pytest.approx(
            r.value + 0.05, abs=1e-6,
        )
        assert r.metrics.steady_state_tau_total == pytest.approx(
            r.value, rel=0.1,
        )


def test_fixed_wheel_stays_centred(adaptive_vs_fixed):
    _, fixed = adaptive_vs_fixed
    metrics = compute_metrics(fixed)
    assert metrics.max_abs_theta_s < 0.02
    assert metrics.mean_disagreement == pytest.approx(1.0)


def test_adaptive_lowers_disagreement(adaptive_vs_fixed):
    adaptive, fixed = adaptive_vs_fixed
    report = compare_runs(adaptive, fixed)
    assert report.adaptive_lower_disagreement
    assert report.adaptive_tracks_epsilon
    assert report.disagreement_ratio < 1
    assert report.adaptive.mean_disagreement == pytest.approx(
        (1 + 0.9 * 300) / 301, abs=1e-6,
    )
    # the driver's intent wins the wheel
    assert report.adaptive.final_abs_theta_s > 0.05


@pytest.mark.parametrize("name", builtin_names())
def test_impedance_never_negative(name):
    log = run_simulation(load_scenario(name))
    assert (log.column("k_a") >= 0).all()
    assert (log.column("b_a") >= 0).all()
    assert np.isfinite(log.column("theta_s")).all()


def test_csv_is_reproducible(tmp_path):
    cfg = load_scenario("fig4_noncooperative")
    first = write_csv(run_simulation(cfg), tmp_path / "first.csv")
    second = write_csv(run_simulation(cfg), tmp_path / "second.csv")
    assert first.read_bytes() == second.read_bytes()


def test_runtime():
    cfg = load_scenario("fig6_adaptive_vs_fixed")
    durations = []
    for _ in range(RUNTIME_ATTEMPTS):
        start = time.perf_counter()
        run_simulation(cfg)
        durations.append(time.perf_counter() - start)
    assert min(durations) < RUNTIME_LIMIT
