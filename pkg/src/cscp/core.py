"""Executable state machines for command-signaling control panels.

A plant is a catalog of two-state controlled units grouped by system, plus
scheduled command programs. A panel is a pure state machine over button
events: selector latching, guarded command emission, indicator rendering
(normal, dark-screen, and lamp-test modes), status-change acknowledgment,
and program auto-issue with overdue tracking for manual backup.

Every operation maps (state, input) -> (new state, outputs); nothing is
mutated in place, so snapshots can be shared freely between sessions.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ConfigError, ScenarioError, UnknownUnitError


class PanelFamily(str, Enum):
    SINGLE_CHANNEL = "single_channel"
    MULTI_CHANNEL = "multi_channel"
    MATRIX_EXPANDED = "matrix_expanded"
    MATRIX_MATRIX = "matrix_matrix"
    PROGRAM_PANEL = "program_panel"
    HIERARCHICAL = "hierarchical"
    ADDRESS_PANEL = "address_panel"


#: Families that appear on the compression scale, from the one-lamp
#: single-channel extreme to the uncompressed multi-channel extreme.
#: Program panels are a matrix-matrix variant bound to schedules and are
#: not ranked on the scale.
SCALE_FAMILIES: tuple[PanelFamily, ...] = (
    PanelFamily.SINGLE_CHANNEL,
    PanelFamily.HIERARCHICAL,
    PanelFamily.ADDRESS_PANEL,
    PanelFamily.MATRIX_MATRIX,
    PanelFamily.MATRIX_EXPANDED,
    PanelFamily.MULTI_CHANNEL,
)

#: Families whose command field is a two-stage select-then-press matrix.
MATRIX_CF_FAMILIES = frozenset(
    {PanelFamily.MATRIX_EXPANDED, PanelFamily.MATRIX_MATRIX}
)


@dataclass(frozen=True, order=True)
class UnitRef:
    """Reference to one controlled unit: (system index, unit index)."""

    system_id: int
    unit_id: int


@dataclass(frozen=True)
class SystemDef:
    system_id: int
    label: str
    unit_labels: tuple[str, ...]

    @property
    def unit_count(self) -> int:
        return len(self.unit_labels)


@dataclass(frozen=True)
class ProgramEntry:
    """One scheduled command: issue at start+issue_offset, confirm by
    start+deadline_offset or the operator backs it up manually."""

    issue_offset: float
    target: UnitRef
    desired_state: bool
    deadline_offset: float

    def __post_init__(self) -> None:
        if self.deadline_offset < self.issue_offset:
            raise ConfigError(
                f"entry deadline {self.deadline_offset} precedes issue time "
                f"{self.issue_offset}"
            )


@dataclass(frozen=True)
class ProgramSchedule:
    program_id: str
    entries: tuple[ProgramEntry, ...]
    active: bool = False
    start_time: Optional[float] = None

    def __post_init__(self) -> None:
        offsets = [e.issue_offset for e in self.entries]
        if offsets != sorted(offsets):
            raise ConfigError(f"program '{self.program_id}' entries not sorted by issue time")


@dataclass(frozen=True)
class PlantState:
    """The simulated set of two-state units plus program schedules.

    ``issued`` tracks (program_id, entry index) pairs that have already
    fired (automatically or manually), which is what makes program
    auto-issue exactly-once across arbitrary step partitions.
    """

    systems: tuple[SystemDef, ...]
    units: Mapping[UnitRef, bool]
    programs: tuple[ProgramSchedule, ...] = ()
    issued: frozenset[tuple[str, int]] = frozenset()
    clock: float = 0.0

    # -- catalog helpers ---------------------------------------------------

    @property
    def unit_count(self) -> int:
        return sum(s.unit_count for s in self.systems)

    def has_unit(self, ref: UnitRef) -> bool:
        return (
            0 <= ref.system_id < len(self.systems)
            and 0 <= ref.unit_id < self.systems[ref.system_id].unit_count
        )

    def unit_label(self, ref: UnitRef) -> str:
        return self.systems[ref.system_id].unit_labels[ref.unit_id]

    def all_units(self) -> list[UnitRef]:
        return [
            UnitRef(s.system_id, u)
            for s in self.systems
            for u in range(s.unit_count)
        ]

    def linear_index(self, ref: UnitRef) -> int:
        before = sum(s.unit_count for s in self.systems[: ref.system_id])
        return before + ref.unit_id

    def unit_at_linear(self, index: int) -> UnitRef:
        remaining = index
        for s in self.systems:
            if remaining < s.unit_count:
                return UnitRef(s.system_id, remaining)
            remaining -= s.unit_count
        raise UnknownUnitError(f"linear unit index {index} out of range")

    def program(self, program_id: str) -> ProgramSchedule:
        for p in self.programs:
            if p.program_id == program_id:
                return p
        raise ScenarioError(f"unknown program '{program_id}'")


def make_plant(
    unit_counts: Sequence[int],
    programs: Sequence[ProgramSchedule] = (),
    system_labels: Sequence[str] | None = None,
) -> PlantState:
    """Build an all-off plant with generated labels."""
    systems = []
    for i, count in enumerate(unit_counts):
        label = system_labels[i] if system_labels else f"S{i + 1:02d}"
        systems.append(
            SystemDef(i, label, tuple(f"{label}-U{j + 1:02d}" for j in range(count)))
        )
    plant = PlantState(
        systems=tuple(systems),
        units={UnitRef(s.system_id, u): False for s in systems for u in range(s.unit_count)},
        programs=tuple(programs),
    )
    for p in plant.programs:
        for idx, entry in enumerate(p.entries):
            if not plant.has_unit(entry.target):
                raise UnknownUnitError(
                    f"program '{p.program_id}' entry {idx} targets unknown unit {entry.target}"
                )
    return plant


# ---------------------------------------------------------------------------
# Panel specification
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PanelSpec:
    """Geometry and behavioral family of one panel.

    Matrix families use ``select_count`` (s) selector latches and
    ``command_count`` (b) command buttons; two-state units pair the command
    buttons, so capacity is s * (b/2). Hierarchical panels carry per-stage
    ``branching`` factors; address panels a screen grid plus keypad.
    """

    spec_id: str
    family: PanelFamily
    display_name: str = ""
    select_count: int = 0
    command_count: int = 0
    branching: tuple[int, ...] = ()
    screen_rows: int = 0
    screen_cols: int = 0
    screen_count: int = 1
    keypad_size: int = 0
    edge_keypads: bool = False
    two_state: bool = True
    dark_screen_capable: bool = False
    change_signaling_capable: bool = False
    safety_guarded: frozenset[int] = frozenset()
    system_rows: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        fam = self.family
        if fam in MATRIX_CF_FAMILIES or fam is PanelFamily.PROGRAM_PANEL:
            if self.select_count < 1 or self.command_count < 1:
                raise ConfigError(f"{fam.value} panel needs selector and command buttons")
            if self.two_state and self.command_count % 2 != 0:
                raise ConfigError(
                    "two-state units require command buttons in on/off pairs "
                    f"(got b={self.command_count})"
                )
        elif fam is PanelFamily.HIERARCHICAL:
            if not self.branching:
                raise ConfigError("hierarchical panel needs at least one stage")
            if any(b < 2 for b in self.branching):
                raise ConfigError("hierarchical branching factors must be >= 2")
        elif fam is PanelFamily.ADDRESS_PANEL:
            if self.screen_rows < 1 or self.screen_cols < 1:
                raise ConfigError("address panel needs a screen grid")
            if self.keypad_size < max(self.screen_rows, self.screen_cols):
                raise ConfigError(
                    "address keypad must cover the larger screen dimension "
                    f"(keypad {self.keypad_size} < {max(self.screen_rows, self.screen_cols)})"
                )

    # -- derived geometry ---------------------------------------------------

    @property
    def command_pairs(self) -> int:
        return self.command_count // 2 if self.two_state else self.command_count

    def capacity(self) -> Optional[int]:
        """Maximum units addressable, or None when plant-bound (expanded)."""
        if self.family is PanelFamily.MATRIX_MATRIX or self.family is PanelFamily.MATRIX_EXPANDED:
            return self.select_count * self.command_pairs
        if self.family is PanelFamily.HIERARCHICAL:
            return math.prod(self.branching)
        if self.family is PanelFamily.ADDRESS_PANEL:
            return self.screen_rows * self.screen_cols * self.screen_count
        return None

    def indicator_count(self, n_units: int) -> int:
        fam = self.family
        if fam is PanelFamily.SINGLE_CHANNEL:
            return 1
        if fam is PanelFamily.MULTI_CHANNEL or fam is PanelFamily.MATRIX_EXPANDED:
            return n_units
        if fam is PanelFamily.MATRIX_MATRIX:
            return self.command_pairs
        if fam is PanelFamily.PROGRAM_PANEL:
            return self.command_count
        if fam is PanelFamily.HIERARCHICAL:
            return self.branching[-1]
        if fam is PanelFamily.ADDRESS_PANEL:
            return self.screen_rows * self.screen_cols
        raise ConfigError(f"unknown family {fam}")

    def control_count(self, n_units: int) -> int:
        fam = self.family
        if fam is PanelFamily.SINGLE_CHANNEL:
            return 1
        if fam is PanelFamily.MULTI_CHANNEL:
            return 2 * n_units if self.two_state else n_units
        if fam in MATRIX_CF_FAMILIES or fam is PanelFamily.PROGRAM_PANEL:
            return self.select_count + self.command_count
        if fam is PanelFamily.HIERARCHICAL:
            return sum(self.branching) + 2
        if fam is PanelFamily.ADDRESS_PANEL:
            keys = 2 * self.keypad_size if self.edge_keypads else self.keypad_size
            return keys + 2
        raise ConfigError(f"unknown family {fam}")

    def selection_stages(self, n_units: int) -> tuple[int, ...]:
        """Alternative counts per unit-selection stage (drives choice time)."""
        fam = self.family
        if fam in MATRIX_CF_FAMILIES:
            return (self.select_count, self.command_pairs)
        if fam is PanelFamily.HIERARCHICAL:
            return self.branching
        if fam is PanelFamily.ADDRESS_PANEL:
            # Address recall is one flat stage over the coded cells.
            return (n_units,)
        if fam is PanelFamily.MULTI_CHANNEL or fam is PanelFamily.SINGLE_CHANNEL:
            return (n_units,)
        if fam is PanelFamily.PROGRAM_PANEL:
            return (self.select_count, self.command_count)
        raise ConfigError(f"unknown family {fam}")

    def is_expanded_if(self, n_units: int) -> bool:
        """True when the whole information field is visible at once."""
        return self.indicator_count(n_units) >= n_units

    def validate_for_plant(self, plant: PlantState) -> None:
        n = plant.unit_count
        cap = self.capacity()
        if cap is not None and cap < n:
            raise ConfigError(
                f"panel '{self.spec_id}' capacity {cap} cannot address {n} units"
            )


# ---------------------------------------------------------------------------
# Runtime panel state
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class IndicatorCell:
    lit: bool
    blinking: bool
    label: str


@dataclass(frozen=True)
class IndicatorFrame:
    cells: tuple[IndicatorCell, ...]

    def lit_set(self) -> frozenset[int]:
        return frozenset(i for i, c in enumerate(self.cells) if c.lit)


@dataclass(frozen=True)
class ButtonEvent:
    """One physical operator action.

    kind is one of: select_system, command, digit, lamp_test, ack,
    guard_toggle. ``index`` addresses the selector / command pair / cell,
    ``turn_on`` distinguishes the on/off half of a command pair, ``digit``
    carries keypad input, ``pressed`` the lamp-test press/release edge.
    """

    kind: str
    index: Optional[int] = None
    turn_on: Optional[bool] = None
    digit: Optional[int] = None
    pressed: Optional[bool] = None
    timestamp: float = 0.0


@dataclass(frozen=True)
class CommandEmission:
    target: UnitRef
    turn_on: bool
    source: str = "operator"  # operator | auto | remote
    time: float = 0.0


@dataclass(frozen=True)
class ChangeEvent:
    """Plant acknowledgment that a unit actually changed state."""

    unit: UnitRef
    new_state: bool
    source: str
    time: float


@dataclass(frozen=True)
class PanelState:
    """Live state of one panel instance bound to a plant."""

    spec: PanelSpec
    selected_system: Optional[int] = None
    digit_path: tuple[int, ...] = ()
    unacked: frozenset[UnitRef] = frozenset()
    overdue: frozenset[tuple[str, int]] = frozenset()
    lamp_test_held: bool = False
    guard_open: bool = False
    pending_pulses: tuple[int, ...] = ()
    last_command: Optional[tuple[UnitRef, bool]] = None

    @property
    def selected_screen(self) -> Optional[int]:
        if self.spec.family is PanelFamily.ADDRESS_PANEL and self.spec.screen_count > 1:
            return self.digit_path[0] - 1 if self.digit_path else None
        return None


@dataclass(frozen=True)
class PressResult:
    state: PanelState
    emissions: tuple[CommandEmission, ...] = ()
    outcome: str = "ok"
    program_toggles: tuple[str, ...] = ()


def _selected_unit_from_path(spec: PanelSpec, path: tuple[int, ...]) -> Optional[int]:
    """Linear unit index encoded by a complete digit path, else None."""
    if spec.family is PanelFamily.HIERARCHICAL:
        if len(path) != len(spec.branching):
            return None
        index = 0
        for digit, radix in zip(path, spec.branching):
            index = index * radix + (digit - 1)
        return index
    if spec.family is PanelFamily.ADDRESS_PANEL:
        want = (2 if spec.screen_count > 1 else 0) + (2 if spec.edge_keypads else 1)
        # Single-keypad cell entry: screen digit (if several screens) + cell
        # digit. Edge keypads: row digit + column digit.
        if spec.screen_count > 1:
            if len(path) != 1 + (2 if spec.edge_keypads else 1):
                return None
            screen = path[0] - 1
            rest = path[1:]
        else:
            if len(path) != (2 if spec.edge_keypads else 1):
                return None
            screen = 0
            rest = path
        cells = spec.screen_rows * spec.screen_cols
        if spec.edge_keypads:
            cell = (rest[0] - 1) * spec.screen_cols + (rest[1] - 1)
        else:
            cell = rest[0] - 1
        if cell >= cells:
            return None
        return screen * cells + cell
    return None


def _stage_limit(spec: PanelSpec, depth: int) -> int:
    """Valid digit range for the next selection stage."""
    if spec.family is PanelFamily.HIERARCHICAL:
        if depth >= len(spec.branching):
            return 0
        return spec.branching[depth]
    if spec.family is PanelFamily.ADDRESS_PANEL:
        stages: list[int] = []
        if spec.screen_count > 1:
            stages.append(spec.screen_count)
        if spec.edge_keypads:
            stages.extend([spec.screen_rows, spec.screen_cols])
        else:
            stages.append(spec.screen_rows * spec.screen_cols)
        if depth >= len(stages):
            return 0
        return stages[depth]
    return 0


def visible_units(state: PanelState, plant: PlantState) -> tuple[Optional[UnitRef], ...]:
    """Unit shown by each indicator cell in the current selection context."""
    spec = state.spec
    fam = spec.family
    n = plant.unit_count
    width = spec.indicator_count(n)

    if fam is PanelFamily.MULTI_CHANNEL or fam is PanelFamily.MATRIX_EXPANDED:
        return tuple(plant.all_units())

    if fam is PanelFamily.MATRIX_MATRIX:
        cells: list[Optional[UnitRef]] = [None] * width
        if state.selected_system is not None:
            system = plant.systems[state.selected_system]
            for j in range(min(width, system.unit_count)):
                cells[j] = UnitRef(system.system_id, j)
        return tuple(cells)

    if fam is PanelFamily.SINGLE_CHANNEL:
        return (state.last_command[0] if state.last_command else None,)

    if fam is PanelFamily.HIERARCHICAL:
        cells = [None] * width
        prefix_len = len(spec.branching) - 1
        if len(state.digit_path) >= prefix_len:
            prefix = state.digit_path[:prefix_len]
            base = 0
            for digit, radix in zip(prefix, spec.branching[:prefix_len]):
                base = base * radix + (digit - 1)
            base *= spec.branching[-1]
            for j in range(width):
                linear = base + j
                if linear < n:
                    cells[j] = plant.unit_at_linear(linear)
        return tuple(cells)

    if fam is PanelFamily.ADDRESS_PANEL:
        cells = [None] * width
        if spec.screen_count > 1:
            screen = state.selected_screen
            if screen is None:
                return tuple(cells)
        else:
            screen = 0
        base = screen * width
        for j in range(width):
            if base + j < n:
                cells[j] = plant.unit_at_linear(base + j)
        return tuple(cells)

    if fam is PanelFamily.PROGRAM_PANEL:
        return tuple([None] * width)

    raise ConfigError(f"unknown family {fam}")


def render_indicators(
    state: PanelState,
    plant: PlantState,
    expected: Mapping[UnitRef, bool] | None = None,
    dark_screen: bool = False,
) -> IndicatorFrame:
    """Compute the indicator frame for the current panel and plant state.

    Normal mode lights a cell when its bound unit is on. Dark-screen mode
    lights only deviations from ``expected`` plus unacknowledged changes.
    Unacknowledged changes blink (and force the cell lit so a blink is
    always visible). A held lamp test overrides everything with all-lit.
    """
    spec = state.spec
    n = plant.unit_count
    width = spec.indicator_count(n)

    if dark_screen:
        if not spec.dark_screen_capable:
            raise ConfigError(f"panel '{spec.spec_id}' is not dark-screen capable")
        if expected is None:
            raise ConfigError("dark-screen mode requires the expected plant state")

    if state.lamp_test_held:
        return IndicatorFrame(tuple(IndicatorCell(True, False, "") for _ in range(width)))

    if spec.family is PanelFamily.PROGRAM_PANEL:
        # Execution LEDs: one per command button, lit once its program entry
        # has issued; the selected program's schedule drives the row.
        cells = []
        selected = state.selected_system
        program = (
            plant.programs[selected]
            if selected is not None and selected < len(plant.programs)
            else None
        )
        for j in range(width):
            lit = False
            label = ""
            if program is not None and j < len(program.entries):
                lit = (program.program_id, j) in plant.issued
                label = plant.unit_label(program.entries[j].target)
            cells.append(IndicatorCell(lit, False, label))
        return IndicatorFrame(tuple(cells))

    bound = visible_units(state, plant)
    cells = []
    for ref in bound:
        if ref is None:
            cells.append(IndicatorCell(False, False, ""))
            continue
        blinking = spec.change_signaling_capable and ref in state.unacked
        if dark_screen:
            lit = plant.units[ref] != expected[ref] or blinking
        else:
            lit = plant.units[ref] or blinking
        if spec.family is PanelFamily.SINGLE_CHANNEL and state.last_command:
            # Confirmation lamp: lit when the last commanded unit reached
            # its commanded state.
            lit = plant.units[ref] == state.last_command[1]
        cells.append(IndicatorCell(lit, blinking, plant.unit_label(ref)))
    return IndicatorFrame(tuple(cells))


def ack_change(state: PanelState, cell: int, plant: PlantState) -> tuple[PanelState, bool]:
    """Acknowledge the blinking cell; returns (state, acked?).

    A cell that is not currently unacknowledged is a flagged no-op.
    """
    bound = visible_units(state, plant)
    if cell < 0 or cell >= len(bound):
        return state, False
    ref = bound[cell]
    if ref is None or ref not in state.unacked:
        return state, False
    return replace(state, unacked=state.unacked - {ref}), True


def observe_change(state: PanelState, event: ChangeEvent) -> PanelState:
    """Fold a plant change event into the panel's change-signaling state.

    Only automatic/remote changes demand acknowledgment; the operator's own
    commands do not, since the operator caused them.
    """
    if not state.spec.change_signaling_capable or event.source == "operator":
        return state
    return replace(state, unacked=state.unacked | {event.unit})


# ---------------------------------------------------------------------------
# Button handling
# ---------------------------------------------------------------------------


def press_button(state: PanelState, plant: PlantState, ev: ButtonEvent) -> PressResult:
    """Apply one button event; returns new state, emissions, and outcome."""
    spec = state.spec
    fam = spec.family

    if ev.kind == "lamp_test":
        return PressResult(replace(state, lamp_test_held=bool(ev.pressed)))

    if ev.kind == "guard_toggle":
        return PressResult(replace(state, guard_open=not state.guard_open))

    if ev.kind == "ack":
        if ev.index is None:
            return PressResult(state, outcome="invalid_index")
        new_state, acked = ack_change(state, ev.index, plant)
        return PressResult(new_state, outcome="ok" if acked else "noop_ack")

    if ev.kind == "select_system":
        if fam not in MATRIX_CF_FAMILIES and fam is not PanelFamily.PROGRAM_PANEL:
            return PressResult(state, outcome="unsupported")
        if ev.index is None or not (0 <= ev.index < spec.select_count):
            return PressResult(state, outcome="invalid_index")
        if fam is PanelFamily.PROGRAM_PANEL:
            # Latching program selectors: selecting starts the program,
            # re-pressing the latched selector releases (stops) it.
            if state.selected_system == ev.index:
                toggles = ()
                if ev.index < len(plant.programs):
                    toggles = (plant.programs[ev.index].program_id,)
                return PressResult(
                    replace(state, selected_system=None), program_toggles=toggles
                )
            toggles = ()
            if ev.index < len(plant.programs):
                toggles = (plant.programs[ev.index].program_id,)
            return PressResult(
                replace(state, selected_system=ev.index), program_toggles=toggles
            )
        # Radio-button latching: a new selection releases the old one.
        return PressResult(replace(state, selected_system=ev.index))

    if ev.kind == "digit":
        if fam is PanelFamily.SINGLE_CHANNEL:
            return _press_pulse_group(state, plant, ev)
        if fam is not PanelFamily.HIERARCHICAL and fam is not PanelFamily.ADDRESS_PANEL:
            return PressResult(state, outcome="unsupported")
        if ev.digit is None or ev.digit < 1:
            return PressResult(state, outcome="invalid_index")
        if spec.keypad_size and ev.digit > spec.keypad_size:
            return PressResult(state, outcome="invalid_index")
        path = state.digit_path
        if _selected_unit_from_path(spec, path) is not None:
            path = ()  # a complete selection restarts on new input
        limit = _stage_limit(spec, len(path))
        if limit == 0 or ev.digit > limit:
            return PressResult(state, outcome="invalid_index")
        return PressResult(replace(state, digit_path=path + (ev.digit,)))

    if ev.kind == "command":
        return _press_command(state, plant, ev)

    return PressResult(state, outcome="unsupported")


def _press_command(state: PanelState, plant: PlantState, ev: ButtonEvent) -> PressResult:
    spec = state.spec
    fam = spec.family
    if ev.index is None or ev.turn_on is None:
        return PressResult(state, outcome="invalid_index")

    if fam in MATRIX_CF_FAMILIES:
        if not (0 <= ev.index < spec.command_pairs):
            return PressResult(state, outcome="invalid_index")
        if state.selected_system is None:
            return PressResult(state, outcome="no_selection")
        if ev.index in spec.safety_guarded and not state.guard_open:
            return PressResult(state, outcome="guard_closed")
        target = UnitRef(state.selected_system, ev.index)
        if not plant.has_unit(target):
            return PressResult(state, outcome="no_unit")
        emission = CommandEmission(target, ev.turn_on, "operator", ev.timestamp)
        return PressResult(replace(state, last_command=(target, ev.turn_on)), (emission,))

    if fam is PanelFamily.MULTI_CHANNEL:
        if ev.index in spec.safety_guarded and not state.guard_open:
            return PressResult(state, outcome="guard_closed")
        try:
            target = plant.unit_at_linear(ev.index)
        except UnknownUnitError:
            return PressResult(state, outcome="no_unit")
        emission = CommandEmission(target, ev.turn_on, "operator", ev.timestamp)
        return PressResult(replace(state, last_command=(target, ev.turn_on)), (emission,))

    if fam is PanelFamily.PROGRAM_PANEL:
        if state.selected_system is None:
            return PressResult(state, outcome="no_selection")
        if state.selected_system >= len(plant.programs):
            return PressResult(state, outcome="no_unit")
        program = plant.programs[state.selected_system]
        if not (0 <= ev.index < len(program.entries)):
            return PressResult(state, outcome="invalid_index")
        entry = program.entries[ev.index]
        emission = CommandEmission(entry.target, ev.turn_on, "operator", ev.timestamp)
        return PressResult(
            replace(state, last_command=(entry.target, ev.turn_on)), (emission,)
        )

    if fam is PanelFamily.HIERARCHICAL or fam is PanelFamily.ADDRESS_PANEL:
        linear = _selected_unit_from_path(spec, state.digit_path)
        if linear is None:
            return PressResult(state, outcome="no_selection")
        if 0 in spec.safety_guarded and not state.guard_open:
            return PressResult(state, outcome="guard_closed")
        if linear >= plant.unit_count:
            return PressResult(state, outcome="no_unit")
        target = plant.unit_at_linear(linear)
        emission = CommandEmission(target, ev.turn_on, "operator", ev.timestamp)
        return PressResult(replace(state, last_command=(target, ev.turn_on)), (emission,))

    return PressResult(state, outcome="unsupported")


def _press_pulse_group(state: PanelState, plant: PlantState, ev: ButtonEvent) -> PressResult:
    """Single-channel input: one group of ``digit`` pulses, then a gap."""
    from .sequential import build_catalog, decode_sequential

    if ev.digit is None or ev.digit < 1:
        return PressResult(state, outcome="invalid_index")
    pulses = state.pending_pulses + (ev.digit,)
    catalog = build_catalog(plant)
    decoded = decode_sequential(pulses, catalog)
    if decoded.status == "incomplete":
        return PressResult(replace(state, pending_pulses=pulses), outcome="incomplete")
    if decoded.status == "error":
        return PressResult(replace(state, pending_pulses=()), outcome="decode_error")
    target, turn_on = decoded.command
    emission = CommandEmission(target, turn_on, "operator", ev.timestamp)
    return PressResult(
        replace(state, pending_pulses=(), last_command=(target, turn_on)),
        (emission,),
    )


# ---------------------------------------------------------------------------
# Plant transitions
# ---------------------------------------------------------------------------


def plant_apply(
    plant: PlantState, emission: CommandEmission
) -> tuple[PlantState, Optional[ChangeEvent]]:
    """Execute a command against the plant.

    Idempotent: a unit already in the desired state produces no change
    event. Unknown targets are rejected.
    """
    if not plant.has_unit(emission.target):
        raise UnknownUnitError(f"no such unit {emission.target}")
    current = plant.units[emission.target]
    if current == emission.turn_on:
        return plant, None
    units = dict(plant.units)
    units[emission.target] = emission.turn_on
    new_plant = replace(plant, units=units)
    event = ChangeEvent(emission.target, emission.turn_on, emission.source, plant.clock)
    return new_plant, event


def activate_program(
    plant: PlantState, program_id: str, start_time: Optional[float] = None
) -> PlantState:
    """Mark a program active, starting its schedule at ``start_time``."""
    start = plant.clock if start_time is None else start_time
    programs = tuple(
        replace(p, active=True, start_time=start) if p.program_id == program_id else p
        for p in plant.programs
    )
    if all(p.program_id != program_id for p in plant.programs):
        raise ScenarioError(f"unknown program '{program_id}'")
    return replace(plant, programs=programs)


def deactivate_program(plant: PlantState, program_id: str) -> PlantState:
    programs = tuple(
        replace(p, active=False) if p.program_id == program_id else p
        for p in plant.programs
    )
    return replace(plant, programs=programs)


@dataclass(frozen=True)
class ProgramEvent:
    kind: str  # issued | overdue | confirmed
    program_id: str
    entry_index: int
    change: Optional[ChangeEvent] = None


def step_program(
    plant: PlantState,
    state: PanelState,
    dt: float,
    fault_set: Iterable[tuple[str, int]] = (),
) -> tuple[PlantState, PanelState, list[ProgramEvent]]:
    """Advance the plant clock, auto-issuing due program entries.

    Entries in ``fault_set`` never auto-issue; an entry still unconfirmed
    past its deadline is flagged overdue, which is the operator's cue to
    issue it manually. Issuance is exactly-once regardless of how the time
    interval is partitioned into steps.
    """
    if dt <= 0:
        raise ScenarioError(f"step dt must be positive (got {dt})")
    faults = frozenset(fault_set)
    new_clock = plant.clock + dt
    issued = set(plant.issued)
    units = dict(plant.units)
    events: list[ProgramEvent] = []
    overdue = set(state.overdue)
    changes: list[ChangeEvent] = []

    for program in plant.programs:
        if not program.active or program.start_time is None:
            continue
        for idx, entry in enumerate(program.entries):
            key = (program.program_id, idx)
            due = program.start_time + entry.issue_offset
            deadline = program.start_time + entry.deadline_offset
            if key not in issued and key not in faults and due <= new_clock:
                issued.add(key)
                if units[entry.target] != entry.desired_state:
                    units[entry.target] = entry.desired_state
                    change = ChangeEvent(entry.target, entry.desired_state, "auto", due)
                    changes.append(change)
                    events.append(ProgramEvent("issued", program.program_id, idx, change))
                else:
                    events.append(ProgramEvent("issued", program.program_id, idx))
            confirmed = key in issued or units[entry.target] == entry.desired_state
            if confirmed and key in overdue:
                overdue.discard(key)
                events.append(ProgramEvent("confirmed", program.program_id, idx))
            elif not confirmed and deadline <= new_clock and key not in overdue:
                overdue.add(key)
                events.append(ProgramEvent("overdue", program.program_id, idx))

    new_plant = replace(plant, units=units, issued=frozenset(issued), clock=new_clock)
    new_state = replace(state, overdue=frozenset(overdue))
    for change in changes:
        new_state = observe_change(new_state, change)
    return new_plant, new_state, events


def mark_issued(plant: PlantState, program_id: str, entry_index: int) -> PlantState:
    """Record a manual issuance of a program entry (backs up a fault)."""
    return replace(plant, issued=plant.issued | {(program_id, entry_index)})


def apply_operator_event(
    panel: PanelState, plant: PlantState, ev: ButtonEvent
) -> tuple[PanelState, PlantState, PressResult, list[ChangeEvent]]:
    """Press a button and fold its consequences into both state machines.

    Handles program selector toggles, command execution against the plant,
    change-signaling observation, and execution-LED bookkeeping when a
    program panel's command matches a schedule entry.
    """
    result = press_button(panel, plant, ev)
    panel = result.state
    changes: list[ChangeEvent] = []
    for program_id in result.program_toggles:
        program = plant.program(program_id)
        if program.active:
            plant = deactivate_program(plant, program_id)
        else:
            plant = activate_program(plant, program_id)
    for emission in result.emissions:
        plant, change = plant_apply(plant, emission)
        if change is not None:
            changes.append(change)
            panel = observe_change(panel, change)
        if panel.spec.family is PanelFamily.PROGRAM_PANEL and panel.selected_system is not None:
            if panel.selected_system < len(plant.programs):
                program = plant.programs[panel.selected_system]
                for idx, entry in enumerate(program.entries):
                    if entry.target == emission.target and entry.desired_state == emission.turn_on:
                        plant = mark_issued(plant, program.program_id, idx)
    return panel, plant, result, changes
