"""Built-in plants, panels, scenarios, and the autonomy-lint corpus.

The two workload fixtures are calibration artifacts: their step mixes are
chosen so that the known comparative load ratios between panel families
fall in the documented windows. The derivations are spelled out next to
each builder; tests pin the exact entry counts so any drift in the
expansion rules is caught immediately.
"""

from __future__ import annotations

from dataclasses import dataclass

from .core import (
    PanelFamily,
    PanelSpec,
    PlantState,
    ProgramEntry,
    ProgramSchedule,
    UnitRef,
    make_plant,
)
from .errors import ScenarioError
from .simulate import (
    AckChanges,
    AwaitProgramLabel,
    FullStatusSweep,
    LampTest,
    Scenario,
    SetUnit,
    Step,
    TimeModelParams,
    VerifyUnit,
)
from .synthesis import FunctionGroup

# ---------------------------------------------------------------------------
# Plants
# ---------------------------------------------------------------------------


def soyuz_plant() -> PlantState:
    """16 systems of 12 two-state units plus the 14-step automatic program."""
    entries = tuple(
        ProgramEntry(
            issue_offset=10.0 * (i + 1),
            target=UnitRef((3 * i) % 16, i % 10),
            desired_state=True,
            deadline_offset=10.0 * (i + 1) + 5.0,
        )
        for i in range(14)
    )
    program = ProgramSchedule("auto-program", entries)
    return make_plant([12] * 16, programs=[program])


def benchmark_plant() -> PlantState:
    """The 100-unit comparison plant: 10 systems of 10 units."""
    return make_plant([10] * 10)


def mini_plant() -> PlantState:
    """Two systems of five units; small enough for exhaustive state sweeps."""
    return make_plant([5, 5])


def micro_plant() -> PlantState:
    """One system of five units: a ten-command sequential-code catalog."""
    return make_plant([5])


def lint_plant() -> PlantState:
    return make_plant([4] * 6)


def drill_plant() -> PlantState:
    """Console-drill plant: one short program with a faulted second entry."""
    entries = (
        ProgramEntry(1.0, UnitRef(1, 1), True, 2.0),
        ProgramEntry(3.0, UnitRef(1, 2), True, 4.0),
    )
    return make_plant([4] * 4, programs=[ProgramSchedule("drill", entries)])


# ---------------------------------------------------------------------------
# Panels
# ---------------------------------------------------------------------------


def _panels() -> dict[str, PanelSpec]:
    return {
        "csd": PanelSpec(
            "csd",
            PanelFamily.MATRIX_MATRIX,
            "CSDl",
            select_count=16,
            command_count=24,
            safety_guarded=frozenset({11}),
        ),
        "csd-right": PanelSpec(
            "csd-right",
            PanelFamily.MATRIX_MATRIX,
            "CSDr",
            select_count=16,
            command_count=24,
            safety_guarded=frozenset({11}),
        ),
        "csf": PanelSpec(
            "csf",
            PanelFamily.MATRIX_EXPANDED,
            "CSF",
            select_count=16,
            command_count=24,
        ),
        "conventional": PanelSpec(
            "conventional", PanelFamily.MULTI_CHANNEL, "conventional toggle panel"
        ),
        "single": PanelSpec("single", PanelFamily.SINGLE_CHANNEL, "one lamp, one button"),
        "hier": PanelSpec(
            "hier",
            PanelFamily.HIERARCHICAL,
            "hierarchical selector",
            branching=(3, 4, 4, 4),
            keypad_size=4,
        ),
        "program": PanelSpec(
            "program",
            PanelFamily.PROGRAM_PANEL,
            "program monitor panel",
            select_count=2,
            command_count=28,
        ),
        "mm100": PanelSpec(
            "mm100",
            PanelFamily.MATRIX_MATRIX,
            "matrix-matrix, 100-unit benchmark",
            select_count=15,
            command_count=14,
        ),
        "csf100": PanelSpec(
            "csf100",
            PanelFamily.MATRIX_EXPANDED,
            "expanded matrix, 100-unit benchmark",
            select_count=15,
            command_count=14,
        ),
        "addr100": PanelSpec(
            "addr100",
            PanelFamily.ADDRESS_PANEL,
            "address field 10x10",
            screen_rows=10,
            screen_cols=10,
            screen_count=1,
            keypad_size=10,
            edge_keypads=True,
        ),
        "csf-dark": PanelSpec(
            "csf-dark",
            PanelFamily.MATRIX_EXPANDED,
            "dark-screen expanded field",
            select_count=2,
            command_count=10,
            dark_screen_capable=True,
            change_signaling_capable=True,
        ),
        "drill-csd": PanelSpec(
            "drill-csd",
            PanelFamily.MATRIX_MATRIX,
            "console drill CSD",
            select_count=4,
            command_count=8,
            safety_guarded=frozenset({3}),
            change_signaling_capable=True,
        ),
    }


# ---------------------------------------------------------------------------
# Calibrated scenarios
# ---------------------------------------------------------------------------


def checking_run_scenario() -> Scenario:
    """Checkout procedure: 18 verifications in 8 system batches, with 7
    cross-system commands interleaved.

    Load per family (operations = presses + checks):
      matrix-matrix   18 checks + 8 batch selections + 7x(select+command) = 40
      matrix-expanded 18 checks + 7x(select+command)                      = 32
      multi-channel   18 checks + 7 toggles                               = 25
    giving the checking-run ratios 40/32 = 1.25 and 40/25 = 1.60.
    """
    batch_systems = [0, 2, 4, 6, 8, 10, 12, 14]
    batch_sizes = [3, 3, 2, 2, 2, 2, 2, 2]
    set_systems = [1, 3, 5, 7, 9, 11, 13]
    steps: list[Step] = []
    for i, (system, size) in enumerate(zip(batch_systems, batch_sizes)):
        for unit in range(size):
            steps.append(VerifyUnit(UnitRef(system, unit), False))
        if i < len(set_systems):
            steps.append(SetUnit(UnitRef(set_systems[i], 0), True))
    return Scenario("checking-run", tuple(steps))


# Scripted reconfiguration commands per monitoring phase. Consecutive
# targets always change system so every command costs a fresh selection
# on matrix panels.
_AUTO_SET_SYSTEMS = [
    [6, 10, 14, 2, 7, 11, 3],
    [5, 9, 13, 1, 6, 10, 14],
    [4, 8, 12, 0, 5, 9, 13],
    [3, 7, 12, 0, 4, 8, 2],
]
_AUTO_VERIFY_SYSTEMS = [4, 8, 2, 6]


def auto_mode_scenario() -> Scenario:
    """Automatic-mode monitoring drill over the 14-step program.

    Composition: 14 program-label watches, 4 full status loops, 4 spot
    verifications, and 30 operator commands (28 scripted plus manual
    backups for the two faulted entries).

    Load per family (operations = presses + checks):
      matrix-matrix   14 + 4x(16 select + 16 row scans) + 4x2 + 30x2 = 210
      matrix-expanded 14 + 0 + 4 + 30x2                              =  78
      multi-channel   14 + 0 + 4 + 30                                =  48
    giving auto-mode ratios 210/78 = 2.69 and 210/48 = 4.38, with the
    status loops at 128/210 = 61.0% of all matrix-matrix operations.
    """
    faults = (("auto-program", 4), ("auto-program", 11))
    phases = [range(0, 4), range(4, 8), range(8, 11), range(11, 14)]
    steps: list[Step] = []
    for phase_index, entry_range in enumerate(phases):
        for entry_index in entry_range:
            steps.append(AwaitProgramLabel("auto-program", entry_index))
            if ("auto-program", entry_index) in faults:
                target = UnitRef((3 * entry_index) % 16, entry_index % 10)
                steps.append(SetUnit(target, True))
        steps.append(FullStatusSweep())
        steps.append(VerifyUnit(UnitRef(_AUTO_VERIFY_SYSTEMS[phase_index], 1), False))
        for system in _AUTO_SET_SYSTEMS[phase_index]:
            steps.append(SetUnit(UnitRef(system, 2), True))
    return Scenario("auto-mode-16", tuple(steps), faults=faults)


def console_drill_scenario() -> Scenario:
    """Five-step operator console drill against the drill plant."""
    return Scenario(
        "console-drill",
        (
            VerifyUnit(UnitRef(1, 1), False),
            SetUnit(UnitRef(1, 3), True),
            LampTest(),
            AckChanges(),
            AwaitProgramLabel("drill", 1),
        ),
        faults=(("drill", 1),),
    )


def _scenarios() -> dict[str, Scenario]:
    return {
        "checking-run": checking_run_scenario(),
        "auto-mode-16": auto_mode_scenario(),
        "console-drill": console_drill_scenario(),
    }


# ---------------------------------------------------------------------------
# Registry
# ---------------------------------------------------------------------------

_PLANT_BUILDERS = {
    "soyuz": soyuz_plant,
    "benchmark100": benchmark_plant,
    "mini10": mini_plant,
    "micro": micro_plant,
    "lint-plant": lint_plant,
    "drill": drill_plant,
}

#: Which plant each panel fixture is sized for.
PANEL_PLANTS = {
    "csd": "soyuz",
    "csd-right": "soyuz",
    "csf": "soyuz",
    "conventional": "soyuz",
    "single": "soyuz",
    "hier": "soyuz",
    "program": "soyuz",
    "mm100": "benchmark100",
    "csf100": "benchmark100",
    "addr100": "benchmark100",
    "csf-dark": "mini10",
    "drill-csd": "drill",
}

SCENARIO_PLANTS = {
    "checking-run": "soyuz",
    "auto-mode-16": "soyuz",
    "console-drill": "drill",
}


def plant_ids() -> list[str]:
    return sorted(_PLANT_BUILDERS)


def panel_ids() -> list[str]:
    return sorted(_panels())


def scenario_ids() -> list[str]:
    return sorted(_scenarios())


def get_plant(plant_id: str) -> PlantState:
    try:
        return _PLANT_BUILDERS[plant_id]()
    except KeyError:
        raise ScenarioError(f"unknown plant fixture '{plant_id}'") from None


def get_panel(spec_id: str) -> PanelSpec:
    try:
        return _panels()[spec_id]
    except KeyError:
        raise ScenarioError(f"unknown panel fixture '{spec_id}'") from None


def get_scenario(scenario_id: str) -> Scenario:
    try:
        return _scenarios()[scenario_id]
    except KeyError:
        raise ScenarioError(f"unknown scenario fixture '{scenario_id}'") from None


def default_params() -> TimeModelParams:
    return TimeModelParams()


# ---------------------------------------------------------------------------
# Autonomy-lint corpus
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LintFixture:
    fixture_id: str
    rows: tuple[tuple[UnitRef, ...], ...]
    functions: tuple[FunctionGroup, ...]
    expected_violations: int


def _system_rows(plant: PlantState, grouping: list[list[int]]) -> list[list[UnitRef]]:
    rows = []
    for group in grouping:
        row = []
        for system_id in group:
            row.extend(
                UnitRef(system_id, u) for u in range(plant.systems[system_id].unit_count)
            )
        rows.append(row)
    return rows


def lint_corpus() -> list[LintFixture]:
    """Ten clean and ten single-defect layouts over the lint plant."""
    plant = lint_plant()
    fixtures: list[LintFixture] = []

    clean_groupings = [
        [[0], [1], [2], [3], [4], [5]],
        [[0, 1], [2, 3], [4, 5]],
        [[0, 1, 2], [3, 4, 5]],
        [[0, 1, 2, 3, 4, 5]],
        [[5], [4], [3], [2], [1], [0]],
    ]
    for i, grouping in enumerate(clean_groupings):
        rows = _system_rows(plant, grouping)
        fixtures.append(
            LintFixture(f"clean-system-{i + 1}", tuple(map(tuple, rows)), (), 0)
        )

    # Functional layouts: rows 0/1 hold two functions sharing one unit,
    # displayed in both control rows; remaining systems fill row 2.
    for i in range(5):
        shared = UnitRef(i % 3, 3)
        f0_units = frozenset({UnitRef(0, 0), UnitRef(0, 1), shared})
        f1_units = frozenset({UnitRef(1, 2), shared})
        row0 = sorted(f0_units)
        row1 = sorted(f1_units)
        rest = [u for u in plant.all_units() if u not in f0_units | f1_units]
        rows = (tuple(row0), tuple(row1), tuple(rest))
        functions = (
            FunctionGroup(f"f{i}-a", f0_units, 0),
            FunctionGroup(f"f{i}-b", f1_units, 1),
        )
        fixtures.append(LintFixture(f"clean-functional-{i + 1}", rows, functions, 0))

    # Split-system defects: one unit of system k strays into the next row.
    for k in range(5):
        rows = _system_rows(plant, [[0], [1], [2], [3], [4], [5]])
        stray = UnitRef(k, 3)
        rows[k].remove(stray)
        rows[(k + 1) % 6].append(stray)
        fixtures.append(
            LintFixture(f"defect-split-{k + 1}", tuple(map(tuple, rows)), (), 1)
        )

    # Missing-duplicate defects: the shared unit is absent from the second
    # function's control row.
    for i in range(5):
        shared = UnitRef(i % 3, 3)
        f0_units = frozenset({UnitRef(0, 0), UnitRef(0, 1), shared})
        f1_units = frozenset({UnitRef(1, 2), shared})
        row0 = sorted(f0_units)
        row1 = sorted(f1_units - {shared})
        rest = [u for u in plant.all_units() if u not in f0_units | f1_units]
        rows = (tuple(row0), tuple(row1), tuple(rest))
        functions = (
            FunctionGroup(f"f{i}-a", f0_units, 0),
            FunctionGroup(f"f{i}-b", f1_units, 1),
        )
        fixtures.append(LintFixture(f"defect-duplicate-{i + 1}", rows, functions, 1))

    return fixtures
