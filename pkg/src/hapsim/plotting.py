import logging
from collections.abc import Sequence
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib
from matplotlib.figure import Figure

from .exceptions import MissingColumnError
from .simlog import COLUMNS, SimLog

logger = logging.getLogger(__name__)

DEFAULT_PANELS: tuple[tuple[str, ...], ...] = (
    ("theta_s",),
    ("k_h", "k_a"),
    ("b_h", "b_a"),
    ("tau_diff",),
)
MARGIN = 0.05
PANEL_HEIGHT = 2.0
FIGURE_WIDTH = 8.0

UNITS = {
    "t": "s",
    "theta_s": "rad",
    "dtheta_s": "rad/s",
    "theta_h": "rad",
    "theta_a": "rad",
    "b_h": "N·m·s/rad",
    "b_a": "N·m·s/rad",
    "k_h": "N·m/rad",
    "k_a": "N·m/rad",
}
# stable element ids and glyphs drawn as paths keep the SVG reproducible
# and free of font references
SVG_RC = {
    "svg.hashsalt": "hapsim",
    "svg.fonttype": "path",
}


def _default_label(columns: Sequence[str]) -> str:
    units = {UNITS.get(c, "N·m") for c in columns}
    unit = units.pop() if len(units) == 1 else ""
    label = ", ".join(columns)
    return f"{label} [{unit}]" if unit else label


@dataclass(frozen=True)
class PlotSpec:
    """
    Stacked time-series panels sharing the time axis.

    Each panel draws one line per column name.
    """
    panels: tuple[tuple[str, ...], ...] = DEFAULT_PANELS
    output: Path = Path("plot.svg")
    ylabels: tuple[str, ...] = field(default=())
    xlabel: str = "t [s]"
    title: str = ""

    def __post_init__(self):
        if not self.panels or not all(self.panels):
            raise ValueError("Every panel needs at least one column")
        if self.ylabels and len(self.ylabels) != len(self.panels):
            raise ValueError(
                f"Got {len(self.ylabels)} axis labels "
                f"for {len(self.panels)} panels",
            )

    def columns(self) -> list[str]:
        return [column for panel in self.panels for column in panel]

    def validate(self) -> None:
        for column in self.columns():
            if column not in COLUMNS:
                raise MissingColumnError(column)

    def ylabel(self, index: int) -> str:
        if self.ylabels:
            return self.ylabels[index]
        return _default_label(self.panels[index])


def render(log: SimLog, spec: PlotSpec) -> Figure:
    spec.validate()
    log.require_records()
    t = log.times
    figure = Figure(figsize=(FIGURE_WIDTH, PANEL_HEIGHT * len(spec.panels)))
    axes = figure.subplots(len(spec.panels), 1, sharex=True, squeeze=False)
    for index, (ax, panel) in enumerate(zip(axes[:, 0], spec.panels)):
        for column in panel:
            ax.plot(t, log.column(column), label=column)
        ax.margins(MARGIN)
        ax.set_ylabel(spec.ylabel(index))
        ax.grid(True, alpha=0.3)
        ax.legend(loc="best")
    axes[-1, 0].set_xlabel(spec.xlabel)
    figure.suptitle(spec.title or log.name)
    figure.tight_layout()
    return figure


def save_svg(log: SimLog, spec: PlotSpec) -> Path:
    with matplotlib.rc_context(SVG_RC):
        figure = render(log, spec)
        figure.savefig(spec.output, format="svg", metadata={"Date": None})
    logger.info("Wrote %s", spec.output)
    return spec.output
