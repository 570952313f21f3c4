from pathlib import Path
from typing import Any

import tomli_w

TINY_DOCUMENT: dict[str, Any] = {
    "duration": 1.0,
    "dt": 0.001,
    "mode_label": "non-cooperative",
    "plant": {"j_sw": 0.1, "j_h": 0.001, "j_a": 0.001, "b_sw": 0.01},
    "controller": {
        "ts": 0.1,
        "np": 10,
        "epsilon": 0.1,
        "alpha_b": 1.0,
        "alpha_k": 1.0,
        "beta_b": 1.0,
        "beta_k": 1.0,
        "target": "reachable",
    },
    "human": {"k_h": 1.0, "b_h": 0.01, "theta_h": 0.5},
    "automation": {"theta_a": -0.5},
}
TINY_TICKS = 11


def write_scenario(path: Path, document: dict[str, Any]) -> Path:
    with open(path, "wb") as f:
        tomli_w.dump(document, f)
    return path
