__all__ = [
    "ScenarioConfig", "builtin_scenarios", "load_scenario", "parse_scenario",
    "ControllerConfig", "ImpedanceController", "plan", "plan_fixed",
    "SimLog", "run_simulation", "compute_metrics", "compare_runs",
    "run_sweep",
    "HapsimError",
]

from .controller import (
    ControllerConfig,
    ImpedanceController,
    plan,
    plan_fixed,
)
from .exceptions import HapsimError
from .harness import compare_runs, compute_metrics, run_simulation, run_sweep
from .scenario import (
    ScenarioConfig,
    builtin_scenarios,
    load_scenario,
    parse_scenario,
)
from .simlog import SimLog
