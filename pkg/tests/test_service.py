"""Panel session service: endpoints, deltas, stream, checklist, fidelity."""

from __future__ import annotations

import pytest
from fastapi.testclient import TestClient

from cscp.io import digest
from cscp.service import create_app


@pytest.fixture
def client():
    return TestClient(create_app())


def create(client, spec_id="drill-csd", plant_id="drill", scenario_id=None):
    body = {"spec_id": spec_id, "plant_id": plant_id}
    if scenario_id:
        body["scenario_id"] = scenario_id
    response = client.post("/sessions", json=body)
    assert response.status_code == 201, response.text
    payload = response.json()
    return payload["session_id"], payload["snapshot"]


def post_event(client, session_id, **event):
    response = client.post(f"/sessions/{session_id}/events", json=event)
    assert response.status_code == 200, response.text
    return response.json()["delta"]


def tick(client, session_id, dt):
    response = client.post(f"/sessions/{session_id}/tick", json={"dt": dt})
    assert response.status_code == 200, response.text
    return response.json()["delta"]


class TestSessionLifecycle:
    def test_fixtures_listing(self, client):
        listing = client.get("/fixtures").json()
        assert "csd" in listing["panels"]
        assert "soyuz" in listing["plants"]
        assert "console-drill" in listing["scenarios"]

    def test_create_session_fresh_state(self, client):
        _, snap = create(client)
        assert snap["clock"] == 0
        assert snap["selected_system"] is None
        assert all(not cell["lit"] for cell in snap["frame"])

    def test_unknown_fixture_is_404(self, client):
        response = client.post(
            "/sessions", json={"spec_id": "nope", "plant_id": "drill"}
        )
        assert response.status_code == 404

    def test_scenario_attaches_checklist(self, client):
        _, snap = create(client, scenario_id="console-drill")
        checklist = snap["checklist"]
        assert checklist["total"] == 5
        assert checklist["current"] == 0
        assert checklist["steps"][0]["done"] is False

    def test_unknown_session_404(self, client):
        assert client.get("/sessions/zzz/snapshot").status_code == 404
        assert (
            client.post("/sessions/zzz/events", json={"kind": "guard_toggle"}).status_code
            == 404
        )


class TestEvents:
    def test_select_then_command_lights_indicator(self, client):
        session_id, _ = create(client)
        post_event(client, session_id, kind="select_system", index=1)
        delta = post_event(client, session_id, kind="command", index=0, turn_on=True)
        assert delta["outcome"] == "ok"
        lit = [pair for pair in delta["changed_cells"] if pair[1]["lit"]]
        assert len(lit) == 1 and lit[0][0] == 0

    def test_guarded_command_outcomes(self, client):
        session_id, _ = create(client)
        post_event(client, session_id, kind="select_system", index=0)
        rejected = post_event(client, session_id, kind="command", index=3, turn_on=True)
        assert rejected["outcome"] == "guard_closed"
        post_event(client, session_id, kind="guard_toggle")
        accepted = post_event(client, session_id, kind="command", index=3, turn_on=True)
        assert accepted["outcome"] == "ok"

    def test_lamp_test_press_release(self, client):
        session_id, _ = create(client)
        pressed = post_event(client, session_id, kind="lamp_test", pressed=True)
        assert all(cell["lit"] for _, cell in pressed["changed_cells"])
        released = post_event(client, session_id, kind="lamp_test", pressed=False)
        assert released["lamp_test_held"] is False

    def test_malformed_event_rejected(self, client):
        session_id, _ = create(client)
        response = client.post(
            f"/sessions/{session_id}/events", json={"kind": "explode"}
        )
        assert response.status_code == 400

    def test_seq_strictly_increases(self, client):
        session_id, snap = create(client)
        seqs = [snap["seq"]]
        for _ in range(3):
            seqs.append(post_event(client, session_id, kind="guard_toggle")["seq"])
        seqs.append(tick(client, session_id, 0.5)["seq"])
        assert seqs == sorted(set(seqs))


class TestTicksAndPrograms:
    def test_tick_advances_clock_only_without_programs(self, client):
        session_id, _ = create(client)
        delta = tick(client, session_id, 1.5)
        assert delta["clock"] == pytest.approx(1.5)
        assert delta["changed_cells"] == []

    def test_program_issue_shows_execution_and_blink(self, client):
        session_id, _ = create(client, scenario_id="console-drill")
        post_event(client, session_id, kind="select_system", index=1)
        delta = tick(client, session_id, 1.2)
        assert delta["unacked_cells"] == [1]

    def test_faulted_entry_becomes_overdue_prompt(self, client):
        session_id, _ = create(client, scenario_id="console-drill")
        delta = tick(client, session_id, 4.5)
        assert delta["overdue"]
        prompt = delta["overdue"][0]
        assert prompt["program_id"] == "drill"
        assert prompt["entry_index"] == 1


class TestSnapshotFidelity:
    def test_deltas_reconstruct_authoritative_state(self, client):
        session_id, snap = create(client, scenario_id="console-drill")
        state = {k: snap[k] for k in (
            "clock", "selected_system", "digit_path", "guard_open",
            "lamp_test_held", "frame", "unacked_cells", "overdue", "checklist",
        )}
        script = [
            dict(kind="select_system", index=1),
            dict(kind="guard_toggle"),
            dict(kind="command", index=3, turn_on=True),
            dict(kind="lamp_test", pressed=True),
            dict(kind="lamp_test", pressed=False),
        ]
        deltas = [post_event(client, session_id, **ev) for ev in script]
        deltas.append(tick(client, session_id, 1.2))
        deltas.append(post_event(client, session_id, kind="ack", index=1))
        for delta in deltas:
            for index, cell in delta["changed_cells"]:
                state["frame"][index] = cell
            for key in (
                "clock", "selected_system", "digit_path", "guard_open",
                "lamp_test_held", "unacked_cells", "overdue", "checklist",
            ):
                state[key] = delta[key]
            assert digest(state) == delta["state_hash"]
        authoritative = client.get(f"/sessions/{session_id}/snapshot").json()["snapshot"]
        assert digest(state) == authoritative["state_hash"]

    def test_server_log_matches_simulated_event_sequence(self, client):
        """The server-side event log for a scripted session equals the press
        sequence the scenario engine produces for the same task."""
        from cscp.fixtures import checking_run_scenario, get_panel, soyuz_plant
        from cscp.simulate import TimeModelParams, run_scenario

        log = run_scenario(
            get_panel("csd"), soyuz_plant(), checking_run_scenario(), TimeModelParams()
        )
        session_id, _ = create(client, spec_id="csd", plant_id="soyuz")
        for entry in log.entries:
            if entry.entry_kind != "press":
                continue
            if entry.action == "select":
                post_event(client, session_id, kind="select_system", index=entry.system_id)
            elif entry.action == "command":
                post_event(
                    client, session_id, kind="command", index=entry.unit_id,
                    turn_on=entry.value,
                )
        server_events = client.get(f"/sessions/{session_id}/log").json()["events"]
        expected = [
            (e.action, e.system_id if e.action == "select" else e.unit_id)
            for e in log.entries
            if e.entry_kind == "press"
        ]
        got = [
            (
                "select" if ev["event"]["kind"] == "select_system" else "command",
                ev["event"]["index"],
            )
            for ev in server_events
        ]
        assert got == expected
        assert all(ev["outcome"] == "ok" for ev in server_events)


class TestStream:
    def test_stream_snapshot_then_deltas(self, client):
        session_id, _ = create(client, scenario_id="console-drill")
        with client.websocket_connect(f"/sessions/{session_id}/stream?autotick=0") as ws:
            first = ws.receive_json()
            assert first["type"] == "snapshot"
            assert first["payload"]["session_id"] == session_id
            post_event(client, session_id, kind="select_system", index=1)
            message = ws.receive_json()
            assert message["type"] == "delta"
            assert message["payload"]["selected_system"] == 1
            assert message["seq"] > first["seq"]

    def test_stream_prompt_on_overdue(self, client):
        session_id, _ = create(client, scenario_id="console-drill")
        with client.websocket_connect(f"/sessions/{session_id}/stream?autotick=0") as ws:
            ws.receive_json()
            tick(client, session_id, 4.5)
            types = [ws.receive_json()["type"], ws.receive_json()["type"]]
            assert types == ["delta", "prompt"]

    def test_stream_unknown_session_closes_with_reason(self, client):
        with client.websocket_connect("/sessions/unknown/stream") as ws:
            message = ws.receive_json()
            assert message["type"] == "error"


class TestWireSchema:
    """Pin the payload field sets the browser console's types mirror."""

    SNAPSHOT_KEYS = {
        "session_id", "seq", "spec_id", "plant_id", "family", "clock",
        "selected_system", "digit_path", "guard_open", "lamp_test_held",
        "frame", "unacked_cells", "overdue", "checklist", "state_hash",
    }
    DELTA_KEYS = {
        "seq", "outcome", "emissions", "changed_cells", "clock",
        "selected_system", "digit_path", "guard_open", "lamp_test_held",
        "unacked_cells", "overdue", "checklist", "state_hash",
    }

    def test_snapshot_fields(self, client):
        _, snap = create(client, scenario_id="console-drill")
        assert set(snap) == self.SNAPSHOT_KEYS
        assert set(snap["frame"][0]) == {"lit", "blinking", "label"}
        assert set(snap["checklist"]) == {"scenario_id", "total", "current", "complete", "steps"}
        assert set(snap["checklist"]["steps"][0]) == {"index", "description", "done"}

    def test_delta_and_prompt_fields(self, client):
        session_id, _ = create(client, scenario_id="console-drill")
        delta = post_event(client, session_id, kind="select_system", index=1)
        assert set(delta) == self.DELTA_KEYS
        overdue = tick(client, session_id, 4.5)["overdue"][0]
        assert set(overdue) == {
            "program_id", "entry_index", "system_id", "unit_id",
            "desired", "command_index", "label",
        }


class TestSharedPlant:
    """Two-operator drills: left and right panels over one brokered plant."""

    def test_peer_session_sees_shared_plant_changes(self, client):
        left_id, _ = create(client, spec_id="csd", plant_id="soyuz")
        response = client.post(
            "/sessions",
            json={"spec_id": "csd-right", "plant_id": "soyuz", "share_plant_session": left_id},
        )
        assert response.status_code == 201
        right_id = response.json()["session_id"]

        post_event(client, right_id, kind="select_system", index=2)
        post_event(client, left_id, kind="select_system", index=2)
        post_event(client, left_id, kind="command", index=5, turn_on=True)

        right_snap = client.get(f"/sessions/{right_id}/snapshot").json()["snapshot"]
        assert right_snap["frame"][5]["lit"] is True

    def test_shared_tick_advances_one_clock(self, client):
        left_id, _ = create(client, spec_id="csd", plant_id="soyuz")
        response = client.post(
            "/sessions",
            json={"spec_id": "csd-right", "plant_id": "soyuz", "share_plant_session": left_id},
        )
        right_id = response.json()["session_id"]
        tick(client, left_id, 2.0)
        left_clock = client.get(f"/sessions/{left_id}/snapshot").json()["snapshot"]["clock"]
        right_clock = client.get(f"/sessions/{right_id}/snapshot").json()["snapshot"]["clock"]
        assert left_clock == right_clock == pytest.approx(2.0)

    def test_unshared_sessions_stay_isolated(self, client):
        a_id, _ = create(client, spec_id="csd", plant_id="soyuz")
        b_id, _ = create(client, spec_id="csd", plant_id="soyuz")
        post_event(client, a_id, kind="select_system", index=0)
        post_event(client, a_id, kind="command", index=1, turn_on=True)
        post_event(client, b_id, kind="select_system", index=0)
        b_snap = client.get(f"/sessions/{b_id}/snapshot").json()["snapshot"]
        assert b_snap["frame"][1]["lit"] is False


class TestChecklistFlow:
    def test_full_drill_completes(self, client):
        session_id, _ = create(client, scenario_id="console-drill")
        post_event(client, session_id, kind="select_system", index=1)
        post_event(client, session_id, kind="guard_toggle")
        post_event(client, session_id, kind="command", index=3, turn_on=True)
        tick(client, session_id, 1.2)
        post_event(client, session_id, kind="lamp_test", pressed=True)
        post_event(client, session_id, kind="lamp_test", pressed=False)
        post_event(client, session_id, kind="ack", index=1)
        tick(client, session_id, 3.0)
        delta = post_event(client, session_id, kind="command", index=2, turn_on=True)
        assert delta["checklist"]["complete"] is True
        assert delta["checklist"]["current"] == 5
