"""Deterministic operator-task simulation over a panel and plant.

Each scenario step expands to the minimal legal button sequence for the
bound panel family, producing a timestamped session log whose entries are
classified K (state checks), U (command issues), O (full-status loops on
compressed information fields), or L (status-call loops). Action times
follow a keystroke-level model: a press time, a visual check time, and a
logarithmic choice term per unit-selection stage.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field, replace
from typing import Optional, Union

from .core import (
    MATRIX_CF_FAMILIES,
    ButtonEvent,
    PanelFamily,
    PanelSpec,
    PanelState,
    PlantState,
    UnitRef,
    activate_program,
    apply_operator_event,
    render_indicators,
    step_program,
    visible_units,
)
from .errors import ScenarioError, UndefinedRatioError


# ---------------------------------------------------------------------------
# Scenario steps
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class VerifyUnit:
    unit: UnitRef
    expected: bool
    kind: str = field(default="verify_unit", init=False)


@dataclass(frozen=True)
class SetUnit:
    unit: UnitRef
    desired: bool
    kind: str = field(default="set_unit", init=False)


@dataclass(frozen=True)
class AwaitProgramLabel:
    program_id: str
    entry_index: int
    kind: str = field(default="await_program_label", init=False)


@dataclass(frozen=True)
class FullStatusSweep:
    loop_class: str = "O"  # O after program/radio labels, L for status calls
    kind: str = field(default="full_status_sweep", init=False)


@dataclass(frozen=True)
class Wait:
    seconds: float
    kind: str = field(default="wait", init=False)


@dataclass(frozen=True)
class LampTest:
    kind: str = field(default="lamp_test", init=False)


@dataclass(frozen=True)
class AckChanges:
    kind: str = field(default="ack_changes", init=False)


Step = Union[VerifyUnit, SetUnit, AwaitProgramLabel, FullStatusSweep, Wait, LampTest, AckChanges]


@dataclass(frozen=True)
class Scenario:
    scenario_id: str
    steps: tuple[Step, ...]
    seed: int = 0
    faults: tuple[tuple[str, int], ...] = ()


@dataclass(frozen=True)
class TimeModelParams:
    """Keystroke-level time model.

    The choice term decide_a + decide_b * log2(alternatives + 1) is charged
    once per unit-selection stage. Defaults are calibration inputs tuned so
    the comparative orderings hold; the absolute seconds carry no authority.
    """

    t_press: float = 0.35
    t_check: float = 0.5
    decide_a: float = 0.2
    decide_b: float = 0.15

    def __post_init__(self) -> None:
        if min(self.t_press, self.t_check, self.decide_a, self.decide_b) < 0:
            raise ScenarioError("time model parameters must be non-negative")

    def decide(self, alternatives: int) -> float:
        if alternatives <= 0:
            return 0.0
        return self.decide_a + self.decide_b * math.log2(alternatives + 1)


# ---------------------------------------------------------------------------
# Session log
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LogEntry:
    time: float
    op_class: str  # K | U | O | L
    entry_kind: str  # press | check
    action: str
    system_id: Optional[int] = None
    unit_id: Optional[int] = None
    index: Optional[int] = None
    value: Optional[bool] = None
    ok: Optional[bool] = None


@dataclass(frozen=True)
class SessionLog:
    scenario_id: str
    spec_id: str
    entries: tuple[LogEntry, ...]
    total_time: float

    def class_counts(self) -> dict[str, int]:
        counts = {"K": 0, "U": 0, "O": 0, "L": 0}
        for e in self.entries:
            counts[e.op_class] += 1
        return counts

    def press_count(self) -> int:
        return sum(1 for e in self.entries if e.entry_kind == "press")

    def check_count(self) -> int:
        return sum(1 for e in self.entries if e.entry_kind == "check")


@dataclass(frozen=True)
class ClassBreakdown:
    counts: dict[str, int]
    shares: dict[str, float]
    total: int


def classify_ops(log: SessionLog) -> ClassBreakdown:
    """Per-class operation counts and shares (shares sum to 1 when any)."""
    counts = log.class_counts()
    total = sum(counts.values())
    shares = {
        cls: (count / total if total else 0.0) for cls, count in counts.items()
    }
    return ClassBreakdown(counts, shares, total)


def workload_ratio(log_a: SessionLog, log_b: SessionLog, measure: str = "load") -> float:
    """Ratio of a workload measure between two logs.

    Measures: presses, checks, time, and load (presses plus checks, the
    operationalized reading of operator load).
    """

    def value(log: SessionLog) -> float:
        if measure == "presses":
            return float(log.press_count())
        if measure == "checks":
            return float(log.check_count())
        if measure == "time":
            return log.total_time
        if measure == "load":
            return float(len(log.entries))
        raise ScenarioError(f"unknown workload measure '{measure}'")

    denom = value(log_b)
    if denom == 0:
        raise UndefinedRatioError(f"denominator log has zero {measure}")
    return value(log_a) / denom


# ---------------------------------------------------------------------------
# Step demands (shared by the engine and the closed-form estimator)
# ---------------------------------------------------------------------------


def _digits_for(size: int, keypad: int) -> int:
    if size <= 1:
        return 1
    if keypad < 2:
        return 1
    return max(1, math.ceil(math.log(size) / math.log(keypad)))


def _address_digit_count(spec: PanelSpec) -> int:
    count = 0
    if spec.screen_count > 1:
        count += _digits_for(spec.screen_count, spec.keypad_size)
    if spec.edge_keypads:
        count += 2
    else:
        count += _digits_for(spec.screen_rows * spec.screen_cols, spec.keypad_size)
    return count


def _pulse_groups(plant_systems: int, unit: UnitRef, turn_on: bool) -> tuple[int, ...]:
    action = 1 if turn_on else 2
    if plant_systems > 1:
        return (unit.system_id + 1, unit.unit_id + 1, action)
    return (unit.unit_id + 1, action)


def estimate_time(
    spec: PanelSpec, step: Step, params: TimeModelParams, n_units: int
) -> float:
    """Closed-form task time for one step, assuming a fresh selection
    context (any latched selection counts as needing a switch)."""
    fam = spec.family
    decide = params.decide
    tp, tc = params.t_press, params.t_check

    if isinstance(step, Wait):
        return 0.0
    if isinstance(step, AwaitProgramLabel):
        return tc
    if isinstance(step, LampTest):
        return 2 * tp + tc
    if isinstance(step, AckChanges):
        return tp

    if isinstance(step, FullStatusSweep):
        if spec.is_expanded_if(n_units):
            return 0.0
        if fam is PanelFamily.MATRIX_MATRIX or fam is PanelFamily.PROGRAM_PANEL:
            return spec.select_count * (tp + tc)
        if fam is PanelFamily.HIERARCHICAL:
            screens = math.ceil(n_units / spec.branching[-1])
            return screens * ((len(spec.branching) - 1) * tp + tc)
        if fam is PanelFamily.ADDRESS_PANEL:
            screens = spec.screen_count
            return screens * (_digits_for(screens, spec.keypad_size) * tp + tc)
        raise ScenarioError(f"full status sweep unsupported on {fam.value}")

    if isinstance(step, (VerifyUnit, SetUnit)):
        is_set = isinstance(step, SetUnit)
        if fam is PanelFamily.MATRIX_MATRIX or fam is PanelFamily.PROGRAM_PANEL:
            pairs = (
                spec.command_pairs
                if fam is PanelFamily.MATRIX_MATRIX
                else spec.command_count
            )
            presses = 2 if is_set else 1
            return presses * tp + decide(spec.select_count) + decide(pairs) + tc
        if fam is PanelFamily.MATRIX_EXPANDED:
            # Commands still go through the matrix field; checks read the
            # expanded field directly (one visual-search decision).
            if is_set:
                return 2 * tp + decide(spec.select_count) + decide(spec.command_pairs) + tc
            return decide(n_units) + tc
        if fam is PanelFamily.MULTI_CHANNEL:
            presses = 1 if is_set else 0
            return presses * tp + decide(n_units) + tc
        if fam is PanelFamily.HIERARCHICAL:
            digits = len(spec.branching)
            presses = digits + (1 if is_set else 0)
            return presses * tp + sum(decide(b) for b in spec.branching) + tc
        if fam is PanelFamily.ADDRESS_PANEL:
            digits = _address_digit_count(spec)
            presses = digits + (1 if is_set else 0)
            return presses * tp + decide(n_units) + tc
        if fam is PanelFamily.SINGLE_CHANNEL:
            if not is_set:
                return tc
            # Multi-system pulse form: system group, unit group, action group.
            action = 1 if step.desired else 2
            pulses = (step.unit.system_id + 1) + (step.unit.unit_id + 1) + action
            return pulses * tp + decide(n_units) + tc
    raise ScenarioError(f"cannot estimate step {step!r} on {fam.value}")


# ---------------------------------------------------------------------------
# Scenario validation
# ---------------------------------------------------------------------------


def validate_scenario(spec: PanelSpec, plant: PlantState, scenario: Scenario) -> None:
    """Whole-scenario validation: every step must be resolvable."""
    fam = spec.family
    spec.validate_for_plant(plant)
    program_ids = {p.program_id for p in plant.programs}
    for pid, idx in scenario.faults:
        if pid not in program_ids:
            raise ScenarioError(f"fault references unknown program '{pid}'")
        if not (0 <= idx < len(plant.program(pid).entries)):
            raise ScenarioError(f"fault references missing entry {idx} of '{pid}'")
    for i, step in enumerate(scenario.steps):
        if isinstance(step, (VerifyUnit, SetUnit)):
            if not plant.has_unit(step.unit):
                raise ScenarioError(f"step {i} references unknown unit {step.unit}")
            if fam in MATRIX_CF_FAMILIES and step.unit.unit_id >= spec.command_pairs:
                raise ScenarioError(
                    f"step {i}: unit {step.unit} beyond the {spec.command_pairs} command pairs"
                )
            if fam is PanelFamily.PROGRAM_PANEL:
                if not _program_entry_for_unit(plant, step.unit, getattr(step, "desired", None)):
                    raise ScenarioError(
                        f"step {i}: unit {step.unit} is not a program entry target"
                    )
            if fam is PanelFamily.HIERARCHICAL and isinstance(step, (VerifyUnit, SetUnit)):
                if any(b > max(spec.keypad_size, 9) for b in spec.branching):
                    raise ScenarioError("branching exceeds keypad range")
        elif isinstance(step, AwaitProgramLabel):
            if step.program_id not in program_ids:
                raise ScenarioError(f"step {i} awaits unknown program '{step.program_id}'")
            if not (0 <= step.entry_index < len(plant.program(step.program_id).entries)):
                raise ScenarioError(f"step {i} awaits missing entry {step.entry_index}")
        elif isinstance(step, FullStatusSweep):
            if fam is PanelFamily.SINGLE_CHANNEL:
                raise ScenarioError("a single-channel panel cannot sweep status")
            if fam is PanelFamily.PROGRAM_PANEL:
                raise ScenarioError("program panels surface status per selected program")
        elif isinstance(step, Wait):
            if step.seconds < 0:
                raise ScenarioError(f"step {i} waits a negative duration")


def _program_entry_for_unit(
    plant: PlantState, unit: UnitRef, desired: Optional[bool]
) -> Optional[tuple[str, int]]:
    for program in plant.programs:
        for idx, entry in enumerate(program.entries):
            if entry.target == unit and (desired is None or entry.desired_state == desired):
                return program.program_id, idx
    return None


# ---------------------------------------------------------------------------
# Scenario engine
# ---------------------------------------------------------------------------


class _Engine:
    def __init__(
        self, spec: PanelSpec, plant: PlantState, scenario: Scenario, params: TimeModelParams
    ):
        self.spec = spec
        self.panel = PanelState(spec)
        self.plant = plant
        self.scenario = scenario
        self.params = params
        self.entries: list[LogEntry] = []
        self.faults = frozenset(scenario.faults)

    # -- time/plant advancement -------------------------------------------

    def advance(self, dt: float) -> None:
        if dt <= 0:
            return
        self.plant, self.panel, _ = step_program(self.plant, self.panel, dt, self.faults)

    def advance_to(self, t: float) -> None:
        self.advance(t - self.plant.clock)

    # -- logging helpers ----------------------------------------------------

    def log(self, op_class: str, entry_kind: str, action: str, **fields) -> None:
        self.entries.append(
            LogEntry(self.plant.clock, op_class, entry_kind, action, **fields)
        )

    def press(self, ev: ButtonEvent, op_class: str, action: str, duration: float, **fields) -> None:
        ev = replace(ev, timestamp=self.plant.clock)
        self.panel, self.plant, result, _ = apply_operator_event(self.panel, self.plant, ev)
        if result.outcome not in ("ok", "incomplete"):
            raise ScenarioError(f"engine pressed an illegal button: {result.outcome}")
        self.log(op_class, "press", action, **fields)
        self.advance(duration)

    def check(self, op_class: str, action: str, duration: float, **fields) -> None:
        self.log(op_class, "check", action, **fields)
        self.advance(duration)

    # -- selection helpers ---------------------------------------------------

    def ensure_system(self, system_id: int, op_class: str) -> None:
        if self.panel.selected_system == system_id:
            return
        self.press(
            ButtonEvent("select_system", index=system_id),
            op_class,
            "select",
            self.params.t_press + self.params.decide(self.spec.select_count),
            system_id=system_id,
        )

    def ensure_digit_path(self, unit: UnitRef, op_class: str) -> None:
        """Drive the keypad to select ``unit`` on hierarchical/address panels."""
        spec = self.spec
        linear = self.plant.linear_index(unit)
        if spec.family is PanelFamily.HIERARCHICAL:
            digits = []
            remaining = linear
            for radix in reversed(spec.branching):
                digits.append(remaining % radix + 1)
                remaining //= radix
            digits.reverse()
            stage_costs = [self.params.decide(b) for b in spec.branching]
        else:
            cells = spec.screen_rows * spec.screen_cols
            screen, cell = divmod(linear, cells)
            digits = []
            if spec.screen_count > 1:
                digits.append(screen + 1)
            if spec.edge_keypads:
                digits.append(cell // spec.screen_cols + 1)
                digits.append(cell % spec.screen_cols + 1)
            else:
                digits.append(cell + 1)
            # Address recall is one flat decision, charged on the first digit.
            stage_costs = [self.params.decide(self.plant.unit_count)] + [0.0] * (
                len(digits) - 1
            )
        if self.panel.digit_path == tuple(digits):
            return
        if any(d > max(spec.keypad_size, max(digits)) for d in digits):
            raise ScenarioError("selection digits exceed keypad range")
        for digit, stage_cost in zip(digits, stage_costs):
            self.press(
                ButtonEvent("digit", digit=digit),
                op_class,
                "digit",
                self.params.t_press + stage_cost,
                index=digit,
            )

    def frame_cell_for(self, unit: UnitRef) -> Optional[int]:
        bound = visible_units(self.panel, self.plant)
        for i, ref in enumerate(bound):
            if ref == unit:
                return i
        return None

    # -- step expansions -----------------------------------------------------

    def run(self) -> SessionLog:
        for program_id in sorted(
            {s.program_id for s in self.scenario.steps if isinstance(s, AwaitProgramLabel)}
        ):
            self.plant = activate_program(self.plant, program_id, self.plant.clock)
        start = self.plant.clock
        for step in self.scenario.steps:
            self.dispatch(step)
        return SessionLog(
            self.scenario.scenario_id,
            self.spec.spec_id,
            tuple(self.entries),
            self.plant.clock - start,
        )

    def dispatch(self, step: Step) -> None:
        if isinstance(step, Wait):
            self.advance(step.seconds)
        elif isinstance(step, VerifyUnit):
            self.do_verify(step)
        elif isinstance(step, SetUnit):
            self.do_set(step)
        elif isinstance(step, FullStatusSweep):
            self.do_sweep(step)
        elif isinstance(step, AwaitProgramLabel):
            self.do_await(step)
        elif isinstance(step, LampTest):
            self.do_lamp_test()
        elif isinstance(step, AckChanges):
            self.do_ack_changes()
        else:
            raise ScenarioError(f"unknown step {step!r}")

    def do_verify(self, step: VerifyUnit) -> None:
        spec, params = self.spec, self.params
        fam = spec.family
        unit = step.unit
        if fam is PanelFamily.MATRIX_MATRIX:
            self.ensure_system(unit.system_id, "K")
        elif fam is PanelFamily.HIERARCHICAL or fam is PanelFamily.ADDRESS_PANEL:
            if self.frame_cell_for(unit) is None:
                self.ensure_digit_path(unit, "K")
        actual = self.plant.units[unit]
        duration = params.t_check
        if fam is PanelFamily.MATRIX_MATRIX:
            duration += params.decide(spec.command_pairs)
        elif fam is PanelFamily.MATRIX_EXPANDED or fam is PanelFamily.MULTI_CHANNEL:
            duration += params.decide(self.plant.unit_count)
        self.check(
            "K",
            "unit_check",
            duration,
            system_id=unit.system_id,
            unit_id=unit.unit_id,
            value=actual,
            ok=actual == step.expected,
        )

    def do_set(self, step: SetUnit) -> None:
        spec, params = self.spec, self.params
        fam = spec.family
        unit = step.unit

        if fam is PanelFamily.SINGLE_CHANNEL:
            for group in _pulse_groups(len(self.plant.systems), unit, step.desired):
                self.press(
                    ButtonEvent("digit", digit=group),
                    "U",
                    "pulse_group",
                    group * params.t_press,
                    index=group,
                )
            self.check(
                "K",
                "unit_check",
                params.decide(self.plant.unit_count) + params.t_check,
                system_id=unit.system_id,
                unit_id=unit.unit_id,
                value=self.plant.units[unit],
                ok=self.plant.units[unit] == step.desired,
            )
            return

        if fam in MATRIX_CF_FAMILIES:
            self.ensure_system(unit.system_id, "K")
            pair = unit.unit_id
            if pair in spec.safety_guarded and not self.panel.guard_open:
                self.press(ButtonEvent("guard_toggle"), "K", "guard", params.t_press)
            self.press(
                ButtonEvent("command", index=pair, turn_on=step.desired),
                "U",
                "command",
                params.t_press + params.decide(spec.command_pairs) + params.t_check,
                system_id=unit.system_id,
                unit_id=unit.unit_id,
                value=step.desired,
                ok=True,
            )
            return

        if fam is PanelFamily.MULTI_CHANNEL:
            linear = self.plant.linear_index(unit)
            if linear in spec.safety_guarded and not self.panel.guard_open:
                self.press(ButtonEvent("guard_toggle"), "K", "guard", params.t_press)
            self.press(
                ButtonEvent("command", index=linear, turn_on=step.desired),
                "U",
                "command",
                params.t_press + params.decide(self.plant.unit_count) + params.t_check,
                system_id=unit.system_id,
                unit_id=unit.unit_id,
                value=step.desired,
                ok=True,
            )
            return

        if fam is PanelFamily.HIERARCHICAL or fam is PanelFamily.ADDRESS_PANEL:
            self.ensure_digit_path(unit, "K")
            if 0 in spec.safety_guarded and not self.panel.guard_open:
                self.press(ButtonEvent("guard_toggle"), "K", "guard", params.t_press)
            self.press(
                ButtonEvent("command", index=0, turn_on=step.desired),
                "U",
                "command",
                params.t_press + params.t_check,
                system_id=unit.system_id,
                unit_id=unit.unit_id,
                value=step.desired,
                ok=True,
            )
            return

        if fam is PanelFamily.PROGRAM_PANEL:
            located = _program_entry_for_unit(self.plant, unit, step.desired)
            assert located is not None  # validated up front
            program_id, idx = located
            program_index = next(
                i for i, p in enumerate(self.plant.programs) if p.program_id == program_id
            )
            self.ensure_system(program_index, "K")
            self.press(
                ButtonEvent("command", index=idx, turn_on=step.desired),
                "U",
                "command",
                params.t_press + params.decide(spec.command_count) + params.t_check,
                system_id=unit.system_id,
                unit_id=unit.unit_id,
                value=step.desired,
                ok=True,
            )
            return

        raise ScenarioError(f"set unsupported on {fam.value}")

    def do_sweep(self, step: FullStatusSweep) -> None:
        spec, params = self.spec, self.params
        n = self.plant.unit_count
        if spec.is_expanded_if(n):
            # The whole field is already visible; the cyclic loop does not
            # exist on expanded information fields.
            return
        cls = step.loop_class if step.loop_class in ("O", "L") else "O"
        fam = spec.family
        if fam is PanelFamily.MATRIX_MATRIX:
            for system_id in range(spec.select_count):
                self.press(
                    ButtonEvent("select_system", index=system_id),
                    cls,
                    "select",
                    params.t_press,
                    system_id=system_id,
                )
                self.check(cls, "row_scan", params.t_check, system_id=system_id)
            return
        if fam is PanelFamily.HIERARCHICAL or fam is PanelFamily.ADDRESS_PANEL:
            width = spec.indicator_count(n)
            screens = math.ceil(n / width)
            for screen in range(screens):
                unit = self.plant.unit_at_linear(screen * width)
                self.ensure_digit_path(unit, cls)
                self.check(cls, "row_scan", params.t_check, index=screen)
            return
        raise ScenarioError(f"full status sweep unsupported on {fam.value}")

    def do_await(self, step: AwaitProgramLabel) -> None:
        program = self.plant.program(step.program_id)
        entry = program.entries[step.entry_index]
        start = program.start_time if program.start_time is not None else self.plant.clock
        faulted = (step.program_id, step.entry_index) in self.faults
        target = start + (entry.deadline_offset if faulted else entry.issue_offset)
        self.advance_to(target)
        issued = (step.program_id, step.entry_index) in self.plant.issued
        self.check(
            "K",
            "label_check",
            self.params.t_check,
            system_id=entry.target.system_id,
            unit_id=entry.target.unit_id,
            value=self.plant.units[entry.target],
            ok=issued,
        )

    def do_lamp_test(self) -> None:
        params = self.params
        self.press(ButtonEvent("lamp_test", pressed=True), "K", "lamp_test", params.t_press)
        frame = render_indicators(self.panel, self.plant)
        self.check("K", "lamp_check", params.t_check, ok=all(c.lit for c in frame.cells))
        self.press(ButtonEvent("lamp_test", pressed=False), "K", "lamp_test", params.t_press)

    def do_ack_changes(self) -> None:
        bound = visible_units(self.panel, self.plant)
        blinking = [
            i for i, ref in enumerate(bound) if ref is not None and ref in self.panel.unacked
        ]
        for cell in blinking:
            self.press(
                ButtonEvent("ack", index=cell), "K", "ack", self.params.t_press, index=cell
            )


def run_scenario(
    spec: PanelSpec, plant: PlantState, scenario: Scenario, params: TimeModelParams
) -> SessionLog:
    """Execute a scenario deterministically; identical inputs give
    identical logs."""
    validate_scenario(spec, plant, scenario)
    return _Engine(spec, plant, scenario, params).run()


# ---------------------------------------------------------------------------
# Random scenario generation (for property tests and replay checks)
# ---------------------------------------------------------------------------


def make_random_scenario(
    plant: PlantState,
    seed: int,
    max_unit_id: Optional[int] = None,
    allow_sweeps: bool = True,
) -> Scenario:
    rng = random.Random(seed)
    units = [
        u for u in plant.all_units() if max_unit_id is None or u.unit_id < max_unit_id
    ]
    steps: list[Step] = []
    for _ in range(rng.randint(4, 24)):
        roll = rng.random()
        if roll < 0.4:
            steps.append(VerifyUnit(rng.choice(units), rng.random() < 0.5))
        elif roll < 0.75:
            steps.append(SetUnit(rng.choice(units), rng.random() < 0.5))
        elif roll < 0.9 and allow_sweeps:
            steps.append(FullStatusSweep())
        else:
            steps.append(Wait(round(rng.uniform(0.1, 3.0), 1)))
    return Scenario(f"random-{seed}", tuple(steps), seed=seed)
