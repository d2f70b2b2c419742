"""Serialization round trips, canonical bytes, workspace, replay."""

from __future__ import annotations

import json

import pytest

from cscp.errors import FormatError
from cscp.fixtures import (
    get_panel,
    get_scenario,
    panel_ids,
    scenario_ids,
    soyuz_plant,
)
from cscp.io import (
    Workspace,
    canonical_json,
    digest,
    input_digest,
    panel_to_doc,
    params_to_doc,
    parse_panel_spec,
    parse_params,
    parse_plant,
    parse_scenario,
    parse_session_log,
    plant_to_doc,
    replay_session,
    run_and_serialize,
    scenario_to_doc,
    serialize_panel_spec,
    serialize_scenario,
    write_atomic,
)
from cscp.simulate import TimeModelParams


class TestCanonicalJson:
    def test_floats_have_six_fraction_digits(self):
        assert canonical_json(0.35) == "0.350000\n"
        assert canonical_json({"t": 1.0}) == '{"t":1.000000}\n'

    def test_int_and_bool_forms(self):
        assert canonical_json({"n": 3, "b": True, "x": None}) == '{"n":3,"b":true,"x":null}\n'

    def test_equal_values_equal_bytes(self):
        doc_a = panel_to_doc(get_panel("csd"))
        doc_b = panel_to_doc(get_panel("csd"))
        assert canonical_json(doc_a) == canonical_json(doc_b)
        assert digest(doc_a) == digest(doc_b)


class TestPanelRoundTrip:
    def test_minimal_matrix_document(self):
        text = serialize_panel_spec(get_panel("csd"))
        spec = parse_panel_spec(text)
        assert spec.capacity() == 192

    def test_every_builtin_round_trips(self):
        for spec_id in panel_ids():
            spec = get_panel(spec_id)
            assert parse_panel_spec(serialize_panel_spec(spec)) == spec

    def test_odd_command_count_is_a_positioned_error(self):
        doc = panel_to_doc(get_panel("csd"))
        doc["geometry"]["command_count"] = 23
        with pytest.raises(FormatError) as excinfo:
            parse_panel_spec(canonical_json(doc))
        assert "pairs" in str(excinfo.value)
        assert excinfo.value.field == "geometry"

    def test_syntax_error_carries_line(self):
        with pytest.raises(FormatError) as excinfo:
            parse_panel_spec('{"format": "cscp.panel/1",\n  broken\n}')
        assert excinfo.value.line == 2

    def test_wrong_format_marker(self):
        with pytest.raises(FormatError):
            parse_panel_spec('{"format": "other/1"}')


class TestOtherDocuments:
    def test_plant_round_trip(self):
        plant = soyuz_plant()
        text = canonical_json(plant_to_doc(plant, "soyuz"))
        parsed, plant_id = parse_plant(text)
        assert plant_id == "soyuz"
        assert parsed.systems == plant.systems
        assert parsed.units == plant.units
        assert [p.program_id for p in parsed.programs] == ["auto-program"]

    def test_scenario_round_trip(self):
        for scenario_id in scenario_ids():
            scenario = get_scenario(scenario_id)
            assert parse_scenario(serialize_scenario(scenario)) == scenario

    def test_params_round_trip(self):
        params = TimeModelParams(t_press=0.4, t_check=0.6, decide_a=0.1, decide_b=0.2)
        assert parse_params(canonical_json(params_to_doc(params))) == params

    def test_session_log_preserves_totals(self):
        text = run_and_serialize(
            get_panel("csd"), soyuz_plant(), get_scenario("checking-run"),
            TimeModelParams(), "soyuz",
        )
        log, plant_id, _ = parse_session_log(text)
        assert plant_id == "soyuz"
        assert len(log.entries) == 40
        doc = json.loads(text)
        assert doc["totals"]["presses"] == log.press_count()


class TestReplay:
    def test_replay_verifies_fresh_run(self):
        text = run_and_serialize(
            get_panel("csd"), soyuz_plant(), get_scenario("auto-mode-16"),
            TimeModelParams(), "soyuz",
        )
        identical, detail = replay_session(text, Workspace())
        assert identical, detail

    def test_replay_detects_tampering(self):
        text = run_and_serialize(
            get_panel("csd"), soyuz_plant(), get_scenario("checking-run"),
            TimeModelParams(), "soyuz",
        )
        doc = json.loads(text)
        doc["entries"][0]["op_class"] = "U"
        tampered = canonical_json(doc)
        identical, detail = replay_session(tampered, Workspace())
        assert not identical
        assert "drift" in detail

    def test_replay_detects_input_drift(self):
        text = run_and_serialize(
            get_panel("csd"), soyuz_plant(), get_scenario("checking-run"),
            TimeModelParams(t_press=0.123), "soyuz",
        )
        identical, detail = replay_session(text, Workspace())
        assert not identical
        assert "input drift" in detail


class TestWorkspace:
    def test_workspace_files_override_builtins(self, tmp_path):
        spec = get_panel("csd")
        (tmp_path / "panel.json").write_text(serialize_panel_spec(spec), encoding="utf-8")
        config = {
            "format": "cscp.workspace/1",
            "panels": {"my-panel": "panel.json"},
            "output_dir": "out",
        }
        config_path = tmp_path / "workspace.json"
        config_path.write_text(canonical_json(config), encoding="utf-8")
        ws = Workspace(config_path)
        assert ws.panel("my-panel") == spec
        assert ws.panel("csf") == get_panel("csf")  # registry fallback

    def test_missing_referenced_file_fails_at_load(self, tmp_path):
        config = {"format": "cscp.workspace/1", "panels": {"x": "nope.json"}}
        config_path = tmp_path / "workspace.json"
        config_path.write_text(canonical_json(config), encoding="utf-8")
        with pytest.raises(FormatError):
            Workspace(config_path)

    def test_atomic_write_creates_parents(self, tmp_path):
        target = tmp_path / "a" / "b" / "file.json"
        write_atomic(target, "hello\n")
        assert target.read_text(encoding="utf-8") == "hello\n"

    def test_digest_covers_all_inputs(self):
        plant = soyuz_plant()
        base = input_digest(
            plant_to_doc(plant, "soyuz"),
            panel_to_doc(get_panel("csd")),
            scenario_to_doc(get_scenario("checking-run")),
            params_to_doc(TimeModelParams()),
        )
        changed = input_digest(
            plant_to_doc(plant, "soyuz"),
            panel_to_doc(get_panel("csf")),
            scenario_to_doc(get_scenario("checking-run")),
            params_to_doc(TimeModelParams()),
        )
        assert base != changed
