"""Relative engineering-metric models and comparison tables.

Wire counts follow the row/column structure of each panel's command and
signal matrices. Mass, area, and power are a declared linear cost model
over control count, indicator count, and wiring; only the ratios against a
baseline row are reported, so the unit costs are configurable inputs.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .core import PanelFamily, PanelSpec
from .errors import ConfigError
from .simulate import Step, TimeModelParams, estimate_time


def wire_counts(spec: PanelSpec, n_units: int) -> tuple[int, int]:
    """(command-row wires, signal-row wires) for a panel bound to N units.

    Multi-channel panels run one on line and one off line per unit plus a
    signal line per unit; matrix command fields need one wire per selector
    row and command column; a matrix signal field needs selector rows plus
    one line per indicator of the shared row.
    """
    if n_units < 1:
        raise ConfigError("wire model needs a bound plant")
    fam = spec.family
    if fam is PanelFamily.SINGLE_CHANNEL:
        return 1, 1
    if fam is PanelFamily.MULTI_CHANNEL:
        return 2 * n_units, n_units
    if fam is PanelFamily.MATRIX_EXPANDED:
        return spec.select_count + spec.command_count, n_units
    if fam is PanelFamily.MATRIX_MATRIX:
        return (
            spec.select_count + spec.command_count,
            spec.command_pairs + spec.select_count,
        )
    raise ConfigError(f"no wire model for family {fam.value}")


@dataclass(frozen=True)
class CostCoefficients:
    """Unit costs for the linear mass/area/power model."""

    mass_per_control: float = 1.0
    mass_per_indicator: float = 0.5
    mass_per_wire: float = 0.1
    area_per_control: float = 1.0
    area_per_indicator: float = 0.5
    power_per_indicator: float = 1.0
    power_per_control: float = 0.1

    def __post_init__(self) -> None:
        values = (
            self.mass_per_control,
            self.mass_per_indicator,
            self.mass_per_wire,
            self.area_per_control,
            self.area_per_indicator,
            self.power_per_indicator,
            self.power_per_control,
        )
        if any(v <= 0 for v in values):
            raise ConfigError("cost coefficients must be positive")


@dataclass(frozen=True)
class MetricsRow:
    spec_id: str
    nprkl: float
    nprsl: float
    g: float
    s_area: float
    w: float


def _absolute_metrics(
    spec: PanelSpec, n_units: int, coefficients: CostCoefficients
) -> tuple[float, float, float, float, float]:
    kl, sl = wire_counts(spec, n_units)
    controls = spec.control_count(n_units)
    indicators = spec.indicator_count(n_units)
    wires = kl + sl
    g = (
        coefficients.mass_per_control * controls
        + coefficients.mass_per_indicator * indicators
        + coefficients.mass_per_wire * wires
    )
    s_area = (
        coefficients.area_per_control * controls
        + coefficients.area_per_indicator * indicators
    )
    w = (
        coefficients.power_per_indicator * indicators
        + coefficients.power_per_control * controls
    )
    return float(kl), float(sl), g, s_area, w


def relative_metrics(
    specs: Sequence[PanelSpec],
    n_units: int,
    baseline: str,
    coefficients: CostCoefficients | None = None,
) -> list[MetricsRow]:
    """Metric rows normalized so the baseline panel reads exactly 1.0."""
    coefficients = coefficients or CostCoefficients()
    by_id = {spec.spec_id: spec for spec in specs}
    if baseline not in by_id:
        raise ConfigError(f"baseline '{baseline}' not among compared specs")
    base = _absolute_metrics(by_id[baseline], n_units, coefficients)
    if any(v == 0 for v in base):
        raise ConfigError("baseline panel has a zero metric; cannot normalize")
    rows = []
    for spec in specs:
        absolute = _absolute_metrics(spec, n_units, coefficients)
        rows.append(MetricsRow(spec.spec_id, *(a / b for a, b in zip(absolute, base))))
    return rows


@dataclass(frozen=True)
class TimeCell:
    spec_id: str
    task_index: int
    seconds: float
    near_minimum: bool  # within 10% of the fastest panel for this task


def response_time_table(
    specs: Sequence[PanelSpec],
    tasks: Sequence[Step],
    params: TimeModelParams,
    n_units: int,
) -> list[TimeCell]:
    """Per-(panel, task) response times with a parity flag column.

    ``near_minimum`` marks cells within 10% of the per-task minimum, which
    is how the no-significant-difference findings read off the table.
    """
    cells: list[TimeCell] = []
    for task_index, task in enumerate(tasks):
        times = [estimate_time(spec, task, params, n_units) for spec in specs]
        floor = min(times)
        for spec, seconds in zip(specs, times):
            near = seconds <= floor * 1.1 + 1e-12
            cells.append(TimeCell(spec.spec_id, task_index, seconds, near))
    return cells
