import numpy as np
import pytest

from hapsim.controller import stage_cost
from hapsim.exceptions import NonFiniteStateError, SimulationError
from hapsim.harness import run_simulation
from hapsim.scenario import scenario_document
from hapsim.simlog import config_hash
from ..sample_scenarios import sample_scenario


def test_log_timing():
    log = run_simulation(sample_scenario())
    assert len(log) == 21
    assert log.times.tolist() == [round(k * 0.1, 12) for k in range(21)]
    assert log.ts == 0.1


def test_uneven_duration():
    log = run_simulation(sample_scenario({"duration": 1.25}))
    assert len(log) == 13
    assert log.times[-1] == 1.2


def test_impedance_is_held_between_ticks():
    log = run_simulation(sample_scenario())
    k_a = log.column("k_a")
    theta_s = log.column("theta_s")
    assert k_a[0] == 1.0
    assert k_a[1:] == pytest.approx(0.8, abs=1e-10)
    # symmetric impedances during the first interval keep the wheel centred
    assert theta_s[1] == 0
    assert theta_s[2] > 0


def test_stage_cost_identity():
    log = run_simulation(sample_scenario())
    total = log.column("safety_term") + log.column("disagreement_term")
    assert np.abs(log.column("stage_cost") - total).max() <= 1e-12
    for record in log.records:
        expected = stage_cost(
            record.tau_h_intent, record.tau_a_intent, record.epsilon,
        )
        assert record.stage_cost == pytest.approx(expected, abs=1e-12)
        assert record.tau_diff == pytest.approx(
            record.tau_h_intent - record.tau_a_intent, abs=1e-15,
        )


def test_deterministic():
    cfg = sample_scenario({"human.measurement_noise": 0.01, "seed": 5})
    assert run_simulation(cfg).records == run_simulation(cfg).records


def test_noise_follows_seed():
    first = run_simulation(sample_scenario({
        "human.measurement_noise": 0.01, "seed": 1,
    }))
    second = run_simulation(sample_scenario({
        "human.measurement_noise": 0.01, "seed": 2,
    }))
    noiseless = run_simulation(sample_scenario())
    assert not np.array_equal(first.column("k_a"), second.column("k_a"))
    assert not np.array_equal(first.column("k_a"), noiseless.column("k_a"))
    # the log keeps the true human state
    assert np.array_equal(first.column("k_h"), noiseless.column("k_h"))


def test_meta():
    cfg = sample_scenario()
    log = run_simulation(cfg, {"controller.epsilon": 0.1})
    assert log.meta["config_hash"] == config_hash(scenario_document(cfg))
    assert log.meta["config"]["controller"]["np"] == 20
    assert log.meta["overrides"] == {"controller.epsilon": 0.1}


def test_fixed_run():
    log = run_simulation(sample_scenario({"controller.adaptive": False}))
    assert not log.adaptive
    assert (log.column("k_a") == 1.0).all()
    assert (log.column("b_a") == 0.01).all()
    assert (log.column("theta_s") == 0).all()


def test_scheduled_intents_run():
    log = run_simulation(sample_scenario({
        "controller.horizon_theta": "scheduled",
        "controller.target": "reachable",
        "automation.theta_a": {
            "kind": "sinusoid", "amplitude": 0.5, "frequency": 0.5,
        },
    }))
    assert (log.column("k_a") >= 0).all()
    assert (log.column("b_a") >= 0).all()
    assert np.isfinite(log.column("theta_s")).all()


def test_coupling_torques():
    log = run_simulation(sample_scenario())
    record = log.records[5]
    expected = record.k_h * (record.theta_h - record.theta_s) - (
        record.b_h * record.dtheta_s
    )
    assert record.tau_h_coupling == pytest.approx(expected, abs=1e-12)


def test_failure_carries_step():
    cfg = sample_scenario({
        "plant.j_sw": 1e-9,
        "plant.j_h": 0.0,
        "plant.j_a": 0.0,
        "human.k_h": 1e6,
    })
    with pytest.raises(SimulationError) as e:
        run_simulation(cfg)
    assert e.value.step == 0
    assert e.value.t == 0
    assert isinstance(e.value.cause, NonFiniteStateError)
    assert isinstance(e.value.__cause__, NonFiniteStateError)
    assert str(e.value).startswith("Simulation failed at step 0")
