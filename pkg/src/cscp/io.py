"""File formats and persistence: canonical JSON, digests, atomic writes.

All documents serialize canonically: stable field order, floats rendered
with six fractional digits, UTF-8, LF. Equal values therefore always
produce identical bytes, which is what replay verification and session
digests rely on.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from pathlib import Path
from typing import Any, Mapping, Optional

from .core import (
    PanelFamily,
    PanelSpec,
    PlantState,
    ProgramEntry,
    ProgramSchedule,
    SystemDef,
    UnitRef,
)
from .errors import FormatError
from .simulate import (
    AckChanges,
    AwaitProgramLabel,
    FullStatusSweep,
    LampTest,
    LogEntry,
    Scenario,
    SessionLog,
    SetUnit,
    Step,
    TimeModelParams,
    VerifyUnit,
    Wait,
)

# ---------------------------------------------------------------------------
# Canonical JSON
# ---------------------------------------------------------------------------


def _canonical(value: Any, out: list[str]) -> None:
    if value is None:
        out.append("null")
    elif value is True:
        out.append("true")
    elif value is False:
        out.append("false")
    elif isinstance(value, int):
        out.append(str(value))
    elif isinstance(value, float):
        out.append(f"{value + 0.0:.6f}" if value != 0 else "0.000000")
    elif isinstance(value, str):
        out.append(json.dumps(value, ensure_ascii=False))
    elif isinstance(value, (list, tuple)):
        out.append("[")
        for i, item in enumerate(value):
            if i:
                out.append(",")
            _canonical(item, out)
        out.append("]")
    elif isinstance(value, Mapping):
        out.append("{")
        for i, (key, item) in enumerate(value.items()):
            if i:
                out.append(",")
            out.append(json.dumps(str(key), ensure_ascii=False))
            out.append(":")
            _canonical(item, out)
        out.append("}")
    else:
        raise FormatError(f"cannot serialize {type(value).__name__}")


def canonical_json(value: Any) -> str:
    out: list[str] = []
    _canonical(value, out)
    out.append("\n")
    return "".join(out)


def digest(value: Any) -> str:
    return hashlib.sha256(canonical_json(value).encode("utf-8")).hexdigest()


def write_atomic(path: str | Path, text: str) -> None:
    """Write via a temp file and rename so readers never see partial files."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _load_doc(text: str, expected_format: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e.msg}", line=e.lineno) from None
    if not isinstance(doc, dict):
        raise FormatError("document root must be an object")
    got = doc.get("format")
    if got != expected_format:
        raise FormatError(
            f"expected format '{expected_format}', got {got!r}", field="format"
        )
    return doc


def _require(doc: Mapping, field_name: str, kind: type, context: str = "") -> Any:
    path = f"{context}.{field_name}" if context else field_name
    if field_name not in doc:
        raise FormatError("missing required field", field=path)
    value = doc[field_name]
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise FormatError("expected a number", field=path)
        return float(value)
    if kind is int and isinstance(value, bool):
        raise FormatError("expected an integer", field=path)
    if not isinstance(value, kind):
        raise FormatError(f"expected {kind.__name__}", field=path)
    return value


# ---------------------------------------------------------------------------
# Plant documents
# ---------------------------------------------------------------------------

PLANT_FORMAT = "cscp.plant/1"
PANEL_FORMAT = "cscp.panel/1"
SCENARIO_FORMAT = "cscp.scenario/1"
PARAMS_FORMAT = "cscp.params/1"
LOG_FORMAT = "cscp.log/1"
WORKSPACE_FORMAT = "cscp.workspace/1"


def plant_to_doc(plant: PlantState, plant_id: str) -> dict:
    return {
        "format": PLANT_FORMAT,
        "plant_id": plant_id,
        "systems": [
            {
                "system_id": s.system_id,
                "label": s.label,
                "units": list(s.unit_labels),
            }
            for s in plant.systems
        ],
        "programs": [
            {
                "program_id": p.program_id,
                "entries": [
                    {
                        "issue_offset": e.issue_offset,
                        "system_id": e.target.system_id,
                        "unit_id": e.target.unit_id,
                        "desired": e.desired_state,
                        "deadline_offset": e.deadline_offset,
                    }
                    for e in p.entries
                ],
            }
            for p in plant.programs
        ],
        "units_on": sorted(
            [r.system_id, r.unit_id] for r, on in plant.units.items() if on
        ),
    }


def parse_plant(text: str) -> tuple[PlantState, str]:
    doc = _load_doc(text, PLANT_FORMAT)
    plant_id = _require(doc, "plant_id", str)
    systems = []
    for i, raw in enumerate(_require(doc, "systems", list)):
        ctx = f"systems[{i}]"
        labels = _require(raw, "units", list, ctx)
        systems.append(
            SystemDef(
                _require(raw, "system_id", int, ctx),
                _require(raw, "label", str, ctx),
                tuple(str(u) for u in labels),
            )
        )
    programs = []
    for i, raw in enumerate(doc.get("programs", [])):
        ctx = f"programs[{i}]"
        entries = []
        for j, e in enumerate(_require(raw, "entries", list, ctx)):
            ectx = f"{ctx}.entries[{j}]"
            entries.append(
                ProgramEntry(
                    _require(e, "issue_offset", float, ectx),
                    UnitRef(
                        _require(e, "system_id", int, ectx),
                        _require(e, "unit_id", int, ectx),
                    ),
                    _require(e, "desired", bool, ectx),
                    _require(e, "deadline_offset", float, ectx),
                )
            )
        programs.append(ProgramSchedule(_require(raw, "program_id", str, ctx), tuple(entries)))
    units = {
        UnitRef(s.system_id, u): False for s in systems for u in range(s.unit_count)
    }
    for pair in doc.get("units_on", []):
        ref = UnitRef(int(pair[0]), int(pair[1]))
        if ref not in units:
            raise FormatError(f"units_on references unknown unit {pair}", field="units_on")
        units[ref] = True
    plant = PlantState(tuple(systems), units, tuple(programs))
    for p in programs:
        for j, e in enumerate(p.entries):
            if not plant.has_unit(e.target):
                raise FormatError(
                    f"program entry targets unknown unit ({e.target.system_id},{e.target.unit_id})",
                    field=f"programs.{p.program_id}.entries[{j}]",
                )
    return plant, plant_id


# ---------------------------------------------------------------------------
# Panel documents
# ---------------------------------------------------------------------------


def panel_to_doc(spec: PanelSpec) -> dict:
    return {
        "format": PANEL_FORMAT,
        "spec_id": spec.spec_id,
        "display_name": spec.display_name,
        "family": spec.family.value,
        "geometry": {
            "select_count": spec.select_count,
            "command_count": spec.command_count,
            "branching": list(spec.branching),
            "screen_rows": spec.screen_rows,
            "screen_cols": spec.screen_cols,
            "screen_count": spec.screen_count,
            "keypad_size": spec.keypad_size,
            "edge_keypads": spec.edge_keypads,
            "two_state": spec.two_state,
        },
        "flags": {
            "dark_screen_capable": spec.dark_screen_capable,
            "change_signaling_capable": spec.change_signaling_capable,
        },
        "safety_guarded": sorted(spec.safety_guarded),
        "system_rows": list(spec.system_rows),
    }


def serialize_panel_spec(spec: PanelSpec) -> str:
    return canonical_json(panel_to_doc(spec))


def parse_panel_spec(text: str) -> PanelSpec:
    doc = _load_doc(text, PANEL_FORMAT)
    family_name = _require(doc, "family", str)
    try:
        family = PanelFamily(family_name)
    except ValueError:
        raise FormatError(f"unknown family '{family_name}'", field="family") from None
    geometry = _require(doc, "geometry", dict)
    flags = doc.get("flags", {})
    try:
        return PanelSpec(
            spec_id=_require(doc, "spec_id", str),
            family=family,
            display_name=str(doc.get("display_name", "")),
            select_count=int(geometry.get("select_count", 0)),
            command_count=int(geometry.get("command_count", 0)),
            branching=tuple(int(b) for b in geometry.get("branching", [])),
            screen_rows=int(geometry.get("screen_rows", 0)),
            screen_cols=int(geometry.get("screen_cols", 0)),
            screen_count=int(geometry.get("screen_count", 1)),
            keypad_size=int(geometry.get("keypad_size", 0)),
            edge_keypads=bool(geometry.get("edge_keypads", False)),
            two_state=bool(geometry.get("two_state", True)),
            dark_screen_capable=bool(flags.get("dark_screen_capable", False)),
            change_signaling_capable=bool(flags.get("change_signaling_capable", False)),
            safety_guarded=frozenset(int(g) for g in doc.get("safety_guarded", [])),
            system_rows=tuple(int(r) for r in doc.get("system_rows", [])),
        )
    except FormatError:
        raise
    except Exception as e:  # geometry invariants surface as positioned errors
        raise FormatError(str(e), field="geometry") from None


# ---------------------------------------------------------------------------
# Scenario documents
# ---------------------------------------------------------------------------


def _step_to_doc(step: Step) -> dict:
    if isinstance(step, VerifyUnit):
        return {
            "kind": step.kind,
            "system_id": step.unit.system_id,
            "unit_id": step.unit.unit_id,
            "expected": step.expected,
        }
    if isinstance(step, SetUnit):
        return {
            "kind": step.kind,
            "system_id": step.unit.system_id,
            "unit_id": step.unit.unit_id,
            "desired": step.desired,
        }
    if isinstance(step, AwaitProgramLabel):
        return {
            "kind": step.kind,
            "program_id": step.program_id,
            "entry_index": step.entry_index,
        }
    if isinstance(step, FullStatusSweep):
        return {"kind": step.kind, "loop_class": step.loop_class}
    if isinstance(step, Wait):
        return {"kind": step.kind, "seconds": step.seconds}
    if isinstance(step, (LampTest, AckChanges)):
        return {"kind": step.kind}
    raise FormatError(f"cannot serialize step {step!r}")


def _step_from_doc(doc: Mapping, ctx: str) -> Step:
    kind = _require(doc, "kind", str, ctx)
    if kind == "verify_unit":
        return VerifyUnit(
            UnitRef(_require(doc, "system_id", int, ctx), _require(doc, "unit_id", int, ctx)),
            _require(doc, "expected", bool, ctx),
        )
    if kind == "set_unit":
        return SetUnit(
            UnitRef(_require(doc, "system_id", int, ctx), _require(doc, "unit_id", int, ctx)),
            _require(doc, "desired", bool, ctx),
        )
    if kind == "await_program_label":
        return AwaitProgramLabel(
            _require(doc, "program_id", str, ctx), _require(doc, "entry_index", int, ctx)
        )
    if kind == "full_status_sweep":
        return FullStatusSweep(str(doc.get("loop_class", "O")))
    if kind == "wait":
        return Wait(_require(doc, "seconds", float, ctx))
    if kind == "lamp_test":
        return LampTest()
    if kind == "ack_changes":
        return AckChanges()
    raise FormatError(f"unknown step kind '{kind}'", field=f"{ctx}.kind")


def scenario_to_doc(scenario: Scenario) -> dict:
    return {
        "format": SCENARIO_FORMAT,
        "scenario_id": scenario.scenario_id,
        "seed": scenario.seed,
        "faults": [[pid, idx] for pid, idx in scenario.faults],
        "steps": [_step_to_doc(s) for s in scenario.steps],
    }


def serialize_scenario(scenario: Scenario) -> str:
    return canonical_json(scenario_to_doc(scenario))


def parse_scenario(text: str) -> Scenario:
    doc = _load_doc(text, SCENARIO_FORMAT)
    steps = tuple(
        _step_from_doc(raw, f"steps[{i}]")
        for i, raw in enumerate(_require(doc, "steps", list))
    )
    faults = tuple(
        (str(pair[0]), int(pair[1])) for pair in doc.get("faults", [])
    )
    return Scenario(
        _require(doc, "scenario_id", str),
        steps,
        seed=int(doc.get("seed", 0)),
        faults=faults,
    )


# ---------------------------------------------------------------------------
# Time-model parameter documents
# ---------------------------------------------------------------------------


def params_to_doc(params: TimeModelParams) -> dict:
    return {
        "format": PARAMS_FORMAT,
        "t_press": params.t_press,
        "t_check": params.t_check,
        "decide_a": params.decide_a,
        "decide_b": params.decide_b,
    }


def parse_params(text: str) -> TimeModelParams:
    doc = _load_doc(text, PARAMS_FORMAT)
    return TimeModelParams(
        t_press=_require(doc, "t_press", float),
        t_check=_require(doc, "t_check", float),
        decide_a=_require(doc, "decide_a", float),
        decide_b=_require(doc, "decide_b", float),
    )


# ---------------------------------------------------------------------------
# Session log documents
# ---------------------------------------------------------------------------


def input_digest(
    plant_doc: dict, panel_doc: dict, scenario_doc: dict, params_doc: dict
) -> str:
    return digest(
        {
            "plant": plant_doc,
            "panel": panel_doc,
            "scenario": scenario_doc,
            "params": params_doc,
        }
    )


def log_to_doc(
    log: SessionLog,
    plant_id: str,
    input_digest_value: str,
) -> dict:
    counts = log.class_counts()
    return {
        "format": LOG_FORMAT,
        "scenario_id": log.scenario_id,
        "spec_id": log.spec_id,
        "plant_id": plant_id,
        "input_digest": input_digest_value,
        "entries": [
            {
                "time": e.time,
                "op_class": e.op_class,
                "entry_kind": e.entry_kind,
                "action": e.action,
                "system_id": e.system_id,
                "unit_id": e.unit_id,
                "index": e.index,
                "value": e.value,
                "ok": e.ok,
            }
            for e in log.entries
        ],
        "totals": {
            "K": counts["K"],
            "U": counts["U"],
            "O": counts["O"],
            "L": counts["L"],
            "presses": log.press_count(),
            "checks": log.check_count(),
        },
        "total_time": log.total_time,
    }


def serialize_session_log(log: SessionLog, plant_id: str, digest_value: str) -> str:
    return canonical_json(log_to_doc(log, plant_id, digest_value))


def parse_session_log(text: str) -> tuple[SessionLog, str, str]:
    """Returns (log, plant_id, input_digest)."""
    doc = _load_doc(text, LOG_FORMAT)
    entries = []
    for i, raw in enumerate(_require(doc, "entries", list)):
        ctx = f"entries[{i}]"
        entries.append(
            LogEntry(
                time=_require(raw, "time", float, ctx),
                op_class=_require(raw, "op_class", str, ctx),
                entry_kind=_require(raw, "entry_kind", str, ctx),
                action=_require(raw, "action", str, ctx),
                system_id=raw.get("system_id"),
                unit_id=raw.get("unit_id"),
                index=raw.get("index"),
                value=raw.get("value"),
                ok=raw.get("ok"),
            )
        )
    log = SessionLog(
        _require(doc, "scenario_id", str),
        _require(doc, "spec_id", str),
        tuple(entries),
        _require(doc, "total_time", float),
    )
    return log, _require(doc, "plant_id", str), _require(doc, "input_digest", str)


# ---------------------------------------------------------------------------
# Workspace configuration
# ---------------------------------------------------------------------------


ENV_WORKSPACE = "CSCP_WORKSPACE"


class Workspace:
    """Named fixture files plus an output directory.

    Falls back to the built-in registry for any id it does not override.
    """

    def __init__(self, config_path: str | Path | None = None):
        self.plants: dict[str, Path] = {}
        self.panels: dict[str, Path] = {}
        self.scenarios: dict[str, Path] = {}
        self.params_path: Optional[Path] = None
        self.output_dir = Path("out")
        if config_path is not None:
            self._load(Path(config_path))

    def _load(self, path: Path) -> None:
        doc = _load_doc(path.read_text(encoding="utf-8"), WORKSPACE_FORMAT)
        base = path.parent
        for attr, key in (("plants", "plants"), ("panels", "panels"), ("scenarios", "scenarios")):
            for name, rel in doc.get(key, {}).items():
                target = base / rel
                if not target.exists():
                    raise FormatError(f"referenced file missing: {target}", field=f"{key}.{name}")
                getattr(self, attr)[name] = target
        if doc.get("params"):
            target = base / doc["params"]
            if not target.exists():
                raise FormatError(f"referenced file missing: {target}", field="params")
            parse_params(target.read_text(encoding="utf-8"))  # validate now
            self.params_path = target
        if doc.get("output_dir"):
            self.output_dir = base / doc["output_dir"]

    # -- resolution ----------------------------------------------------------

    def plant(self, plant_id: str) -> PlantState:
        from . import fixtures

        if plant_id in self.plants:
            plant, _ = parse_plant(self.plants[plant_id].read_text(encoding="utf-8"))
            return plant
        if Path(plant_id).suffix == ".json" and Path(plant_id).exists():
            plant, _ = parse_plant(Path(plant_id).read_text(encoding="utf-8"))
            return plant
        return fixtures.get_plant(plant_id)

    def panel(self, spec_id: str) -> PanelSpec:
        from . import fixtures

        if spec_id in self.panels:
            return parse_panel_spec(self.panels[spec_id].read_text(encoding="utf-8"))
        if Path(spec_id).suffix == ".json" and Path(spec_id).exists():
            return parse_panel_spec(Path(spec_id).read_text(encoding="utf-8"))
        return fixtures.get_panel(spec_id)

    def scenario(self, scenario_id: str) -> Scenario:
        from . import fixtures

        if scenario_id in self.scenarios:
            return parse_scenario(self.scenarios[scenario_id].read_text(encoding="utf-8"))
        if Path(scenario_id).suffix == ".json" and Path(scenario_id).exists():
            return parse_scenario(Path(scenario_id).read_text(encoding="utf-8"))
        return fixtures.get_scenario(scenario_id)

    def params(self) -> TimeModelParams:
        if self.params_path is not None:
            return parse_params(self.params_path.read_text(encoding="utf-8"))
        return TimeModelParams()


def open_workspace(explicit: str | None = None) -> Workspace:
    path = explicit or os.environ.get(ENV_WORKSPACE)
    return Workspace(path) if path else Workspace()


# ---------------------------------------------------------------------------
# Session record helpers (shared by CLI simulate/replay and the tests)
# ---------------------------------------------------------------------------


def run_and_serialize(
    spec: PanelSpec,
    plant: PlantState,
    scenario: Scenario,
    params: TimeModelParams,
    plant_id: str,
) -> str:
    from .simulate import run_scenario

    log = run_scenario(spec, plant, scenario, params)
    digest_value = input_digest(
        plant_to_doc(plant, plant_id),
        panel_to_doc(spec),
        scenario_to_doc(scenario),
        params_to_doc(params),
    )
    return serialize_session_log(log, plant_id, digest_value)


def shipped_session_paths() -> list[Path]:
    """Paths of the session-log fixtures distributed with the package."""
    from importlib import resources

    root = resources.files("cscp") / "data" / "sessions"
    return sorted(Path(str(p)) for p in root.iterdir() if p.name.endswith(".log.json"))


def replay_session(text: str, workspace: Workspace) -> tuple[bool, str]:
    """Re-run a saved session and compare bytes. Returns (identical, detail)."""
    log, plant_id, recorded_digest = parse_session_log(text)
    plant = workspace.plant(plant_id)
    spec = workspace.panel(log.spec_id)
    scenario = workspace.scenario(log.scenario_id)
    params = workspace.params()
    fresh_digest = input_digest(
        plant_to_doc(plant, plant_id),
        panel_to_doc(spec),
        scenario_to_doc(scenario),
        params_to_doc(params),
    )
    if fresh_digest != recorded_digest:
        return False, "input drift: fixture digest differs from the recorded digest"
    fresh = run_and_serialize(spec, plant, scenario, params, plant_id)
    if fresh != text:
        return False, "output drift: re-run produced different bytes"
    return True, "identical"
