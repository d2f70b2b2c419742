"""HTTP + WebSocket session server exposing live panel simulations.

Each session owns one authoritative (panel, plant) pair advanced by a
single writer at a time. Clients submit button events, poll or stream
snapshots, and receive overdue-entry prompts. Deltas carry every state
change, so replaying them over the initial snapshot reconstructs the
authoritative state exactly (verified by the embedded state hash).

Interactive streams tick the plant in wall time at the session tick rate;
batch clients drive virtual time through the tick endpoint instead. The
first tick starts any programs the attached checklist references (the
initial snapshot itself is taken with programs inactive).
"""

from __future__ import annotations

import asyncio
import itertools
import threading
from dataclasses import dataclass, field
from typing import Any, Optional

from fastapi import FastAPI, HTTPException, WebSocket, WebSocketDisconnect
from pydantic import BaseModel

from . import fixtures
from .core import (
    ButtonEvent,
    PanelSpec,
    PanelState,
    PlantState,
    activate_program,
    apply_operator_event,
    observe_change,
    render_indicators,
    step_program,
    visible_units,
)
from .errors import CscpError
from .io import digest
from .simulate import (
    AckChanges,
    AwaitProgramLabel,
    FullStatusSweep,
    LampTest,
    Scenario,
    SetUnit,
    VerifyUnit,
    Wait,
)

DEFAULT_TICK_RATE = 10.0


# ---------------------------------------------------------------------------
# Checklist tracking
# ---------------------------------------------------------------------------


def _describe_step(step: Any, plant: PlantState) -> str:
    if isinstance(step, VerifyUnit):
        want = "on" if step.expected else "off"
        return f"Verify {plant.unit_label(step.unit)} is {want}"
    if isinstance(step, SetUnit):
        want = "on" if step.desired else "off"
        return f"Switch {plant.unit_label(step.unit)} {want}"
    if isinstance(step, LampTest):
        return "Run the lamp test"
    if isinstance(step, AckChanges):
        return "Acknowledge blinking status changes"
    if isinstance(step, AwaitProgramLabel):
        return f"See program '{step.program_id}' step {step.entry_index + 1} through"
    if isinstance(step, FullStatusSweep):
        return "Sweep full status"
    if isinstance(step, Wait):
        return f"Stand by {step.seconds:.0f}s"
    return "Proceed"


@dataclass
class ChecklistState:
    scenario: Scenario
    current: int = 0
    saw_lamp_test_press: bool = False
    saw_lamp_test_release: bool = False
    saw_ack: bool = False
    swept_systems: set[int] = field(default_factory=set)
    step_started_at: float = 0.0

    @property
    def done(self) -> bool:
        return self.current >= len(self.scenario.steps)


# ---------------------------------------------------------------------------
# Session
# ---------------------------------------------------------------------------


_session_counter = itertools.count(1)


@dataclass
class _Subscriber:
    queue: asyncio.Queue
    loop: asyncio.AbstractEventLoop

    def push(self, message: dict) -> None:
        self.loop.call_soon_threadsafe(self.queue.put_nowait, message)


class PlantBroker:
    """Authoritative plant state shared by one or more panel sessions.

    Multi-operator drills (left and right panels over one plant) attach a
    second session to the first session's broker; the broker lock is the
    single-writer point for every transition touching the plant.
    """

    def __init__(self, plant: PlantState, plant_id: str):
        self.plant = plant
        self.plant_id = plant_id
        self.lock = threading.RLock()
        self.sessions: list["Session"] = []
        self.programs_started = False


class Session:
    def __init__(
        self,
        session_id: str,
        spec: PanelSpec,
        broker: PlantBroker,
        scenario: Optional[Scenario],
        tick_rate: float = DEFAULT_TICK_RATE,
    ):
        self.session_id = session_id
        self.spec = spec
        self.broker = broker
        self.panel = PanelState(spec)
        self.checklist = ChecklistState(scenario) if scenario else None
        self.tick_rate = tick_rate
        self.seq = 0
        self.event_log: list[dict] = []
        self.subscribers: list[_Subscriber] = []
        broker.sessions.append(self)

    @property
    def plant(self) -> PlantState:
        return self.broker.plant

    @plant.setter
    def plant(self, value: PlantState) -> None:
        self.broker.plant = value

    @property
    def plant_id(self) -> str:
        return self.broker.plant_id

    @property
    def lock(self) -> threading.RLock:
        return self.broker.lock

    @property
    def programs_started(self) -> bool:
        return self.broker.programs_started

    @programs_started.setter
    def programs_started(self, value: bool) -> None:
        self.broker.programs_started = value

    # -- checklist ----------------------------------------------------------

    def _step_done(self, step: Any) -> bool:
        if isinstance(step, VerifyUnit):
            return step.unit in visible_units(self.panel, self.plant)
        if isinstance(step, SetUnit):
            return self.plant.units[step.unit] == step.desired
        if isinstance(step, LampTest):
            return self.checklist.saw_lamp_test_press and self.checklist.saw_lamp_test_release
        if isinstance(step, AckChanges):
            return self.checklist.saw_ack and not self.panel.unacked
        if isinstance(step, AwaitProgramLabel):
            key = (step.program_id, step.entry_index)
            if key in self.plant.issued:
                return True
            entry = self.plant.program(step.program_id).entries[step.entry_index]
            return self.plant.units[entry.target] == entry.desired_state
        if isinstance(step, FullStatusSweep):
            return len(self.checklist.swept_systems) >= self.spec.select_count
        if isinstance(step, Wait):
            return self.plant.clock >= self.checklist.step_started_at + step.seconds
        return True

    def _advance_checklist(self) -> None:
        if self.checklist is None:
            return
        while not self.checklist.done:
            step = self.checklist.scenario.steps[self.checklist.current]
            if isinstance(step, AwaitProgramLabel):
                program = self.plant.program(step.program_id)
                if not program.active and self.programs_started:
                    self.plant = activate_program(self.plant, step.program_id)
            if not self._step_done(step):
                break
            self.checklist.current += 1
            self.checklist.saw_lamp_test_press = False
            self.checklist.saw_lamp_test_release = False
            self.checklist.saw_ack = False
            self.checklist.swept_systems.clear()
            self.checklist.step_started_at = self.plant.clock

    def _note_event_for_checklist(self, ev: ButtonEvent) -> None:
        if self.checklist is None or self.checklist.done:
            return
        if ev.kind == "lamp_test":
            if ev.pressed:
                self.checklist.saw_lamp_test_press = True
            elif self.checklist.saw_lamp_test_press:
                self.checklist.saw_lamp_test_release = True
        elif ev.kind == "ack":
            self.checklist.saw_ack = True
        elif ev.kind == "select_system" and ev.index is not None:
            self.checklist.swept_systems.add(ev.index)

    # -- snapshots ------------------------------------------------------------

    def _frame_doc(self) -> list[dict]:
        frame = render_indicators(self.panel, self.plant)
        return [
            {"lit": c.lit, "blinking": c.blinking, "label": c.label} for c in frame.cells
        ]

    def _overdue_doc(self) -> list[dict]:
        prompts = []
        for program_id, idx in sorted(self.panel.overdue):
            entry = self.plant.program(program_id).entries[idx]
            prompts.append(
                {
                    "program_id": program_id,
                    "entry_index": idx,
                    "system_id": entry.target.system_id,
                    "unit_id": entry.target.unit_id,
                    "desired": entry.desired_state,
                    "command_index": entry.target.unit_id,
                    "label": self.plant.unit_label(entry.target),
                }
            )
        return prompts

    def _checklist_doc(self) -> Optional[dict]:
        if self.checklist is None:
            return None
        steps = [
            {
                "index": i,
                "description": _describe_step(step, self.plant),
                "done": i < self.checklist.current,
            }
            for i, step in enumerate(self.checklist.scenario.steps)
        ]
        return {
            "scenario_id": self.checklist.scenario.scenario_id,
            "total": len(steps),
            "current": self.checklist.current,
            "complete": self.checklist.done,
            "steps": steps,
        }

    def _unacked_cells(self) -> list[int]:
        bound = visible_units(self.panel, self.plant)
        return [
            i for i, ref in enumerate(bound) if ref is not None and ref in self.panel.unacked
        ]

    def state_fields(self) -> dict:
        return {
            "clock": round(self.plant.clock, 6),
            "selected_system": self.panel.selected_system,
            "digit_path": list(self.panel.digit_path),
            "guard_open": self.panel.guard_open,
            "lamp_test_held": self.panel.lamp_test_held,
            "frame": self._frame_doc(),
            "unacked_cells": self._unacked_cells(),
            "overdue": self._overdue_doc(),
            "checklist": self._checklist_doc(),
        }

    def snapshot(self) -> dict:
        state = self.state_fields()
        return {
            "session_id": self.session_id,
            "seq": self.seq,
            "spec_id": self.spec.spec_id,
            "plant_id": self.plant_id,
            "family": self.spec.family.value,
            **state,
            "state_hash": digest(state),
        }

    # -- transitions ----------------------------------------------------------

    def _broadcast(self, message: dict) -> None:
        for sub in list(self.subscribers):
            sub.push(message)

    def _delta(self, before: dict, outcome: str, emissions: list[dict]) -> dict:
        after = self.state_fields()
        changed_cells = [
            [i, cell]
            for i, cell in enumerate(after["frame"])
            if i >= len(before["frame"]) or before["frame"][i] != cell
        ]
        delta = {
            "seq": self.seq,
            "outcome": outcome,
            "emissions": emissions,
            "changed_cells": changed_cells,
            **{k: v for k, v in after.items() if k != "frame"},
            "state_hash": digest(after),
        }
        return delta

    def _peers(self) -> list["Session"]:
        return [s for s in self.broker.sessions if s is not self]

    def apply_event(self, ev: ButtonEvent) -> dict:
        outgoing: list[tuple[Session, dict]] = []
        with self.lock:
            peer_befores = {peer: peer.state_fields() for peer in self._peers()}
            before = self.state_fields()
            self.panel, self.plant, result, changes = apply_operator_event(
                self.panel, self.plant, ev
            )
            if result.outcome in ("ok", "incomplete"):
                self._note_event_for_checklist(ev)
            self._advance_checklist()
            emissions = [
                {
                    "system_id": e.target.system_id,
                    "unit_id": e.target.unit_id,
                    "turn_on": e.turn_on,
                    "source": e.source,
                }
                for e in result.emissions
            ]
            self.event_log.append(
                {"event": _event_doc(ev), "outcome": result.outcome, "clock": self.plant.clock}
            )
            self.seq += 1
            delta = self._delta(before, result.outcome, emissions)
            # A shared plant changed under the peers' panels too.
            for peer, peer_before in peer_befores.items():
                for change in changes:
                    peer.panel = observe_change(peer.panel, change)
                peer._advance_checklist()
                if peer.state_fields() != peer_before:
                    peer.seq += 1
                    outgoing.append((peer, peer._delta(peer_before, "peer", [])))
        self._broadcast({"type": "delta", "seq": delta["seq"], "payload": delta})
        for peer, peer_delta in outgoing:
            peer._broadcast({"type": "delta", "seq": peer_delta["seq"], "payload": peer_delta})
        return delta

    def tick(self, dt: float) -> dict:
        outgoing: list[tuple[Session, dict, bool]] = []
        with self.lock:
            sessions = list(self.broker.sessions)
            befores = {s: s.state_fields() for s in sessions}
            if not self.programs_started:
                for session in sessions:
                    if session.checklist is None:
                        continue
                    for step in session.checklist.scenario.steps:
                        if isinstance(step, AwaitProgramLabel):
                            program = self.plant.program(step.program_id)
                            if not program.active:
                                self.plant = activate_program(self.plant, step.program_id)
                self.programs_started = True
            faults: set = set()
            for session in sessions:
                if session.checklist is not None:
                    faults.update(session.checklist.scenario.faults)
            plant_before = self.plant
            stepped_plant = plant_before
            for session in sessions:
                # step_program is deterministic, so folding each panel from
                # the same starting plant yields one identical plant result.
                stepped_plant, session.panel, _events = step_program(
                    plant_before, session.panel, dt, faults
                )
            self.plant = stepped_plant
            deltas: dict[Session, dict] = {}
            for session in sessions:
                session._advance_checklist()
                session.seq += 1
                outcome = "tick" if session is self else "peer"
                deltas[session] = session._delta(befores[session], outcome, [])
                fresh_overdue = bool(
                    deltas[session]["overdue"]
                    and deltas[session]["overdue"] != befores[session]["overdue"]
                )
                outgoing.append((session, deltas[session], fresh_overdue))
            delta = deltas[self]
        for session, session_delta, fresh_overdue in outgoing:
            session._broadcast(
                {"type": "delta", "seq": session_delta["seq"], "payload": session_delta}
            )
            if fresh_overdue:
                session._broadcast(
                    {
                        "type": "prompt",
                        "seq": session_delta["seq"],
                        "payload": {"overdue": session_delta["overdue"]},
                    }
                )
        return delta


# ---------------------------------------------------------------------------
# FastAPI application
# ---------------------------------------------------------------------------


class CreateSessionRequest(BaseModel):
    spec_id: str
    plant_id: str
    scenario_id: Optional[str] = None
    tick_rate: float = DEFAULT_TICK_RATE
    # Attach to an existing session's plant for multi-operator drills
    # (e.g. left and right panels over one plant).
    share_plant_session: Optional[str] = None


class EventRequest(BaseModel):
    kind: str
    index: Optional[int] = None
    turn_on: Optional[bool] = None
    digit: Optional[int] = None
    pressed: Optional[bool] = None


class TickRequest(BaseModel):
    dt: float


def _event_doc(ev: ButtonEvent) -> dict:
    return {
        "kind": ev.kind,
        "index": ev.index,
        "turn_on": ev.turn_on,
        "digit": ev.digit,
        "pressed": ev.pressed,
    }


def create_app() -> FastAPI:
    app = FastAPI(title="cscp panel service")
    sessions: dict[str, Session] = {}
    app.state.sessions = sessions

    def get_session(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail=f"unknown session '{session_id}'")
        return session

    @app.get("/fixtures")
    def list_fixtures() -> dict:
        return {
            "plants": fixtures.plant_ids(),
            "panels": fixtures.panel_ids(),
            "scenarios": fixtures.scenario_ids(),
        }

    @app.post("/sessions", status_code=201)
    def create_session(req: CreateSessionRequest) -> dict:
        try:
            spec = fixtures.get_panel(req.spec_id)
            scenario = fixtures.get_scenario(req.scenario_id) if req.scenario_id else None
            if req.share_plant_session is not None:
                host = sessions.get(req.share_plant_session)
                if host is None:
                    raise HTTPException(
                        status_code=404,
                        detail=f"unknown session '{req.share_plant_session}'",
                    )
                broker = host.broker
            else:
                plant = fixtures.get_plant(req.plant_id)
                broker = PlantBroker(plant, req.plant_id)
            spec.validate_for_plant(broker.plant)
        except CscpError as e:
            raise HTTPException(status_code=404, detail=str(e)) from None
        session_id = f"s{next(_session_counter):06d}"
        session = Session(session_id, spec, broker, scenario, req.tick_rate)
        sessions[session_id] = session
        return {"session_id": session_id, "snapshot": session.snapshot()}

    @app.get("/sessions/{session_id}/snapshot")
    def get_snapshot(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            return {"snapshot": session.snapshot()}

    @app.post("/sessions/{session_id}/events")
    def submit_event(session_id: str, req: EventRequest) -> dict:
        session = get_session(session_id)
        known = {"select_system", "command", "digit", "lamp_test", "ack", "guard_toggle"}
        if req.kind not in known:
            raise HTTPException(status_code=400, detail=f"malformed event kind '{req.kind}'")
        ev = ButtonEvent(
            kind=req.kind,
            index=req.index,
            turn_on=req.turn_on,
            digit=req.digit,
            pressed=req.pressed,
        )
        try:
            delta = session.apply_event(ev)
        except CscpError as e:
            raise HTTPException(status_code=400, detail=str(e)) from None
        return {"delta": delta}

    @app.post("/sessions/{session_id}/tick")
    def tick(session_id: str, req: TickRequest) -> dict:
        session = get_session(session_id)
        if req.dt <= 0:
            raise HTTPException(status_code=400, detail="dt must be positive")
        return {"delta": session.tick(req.dt)}

    @app.get("/sessions/{session_id}/log")
    def get_log(session_id: str) -> dict:
        session = get_session(session_id)
        with session.lock:
            return {"events": list(session.event_log)}

    @app.websocket("/sessions/{session_id}/stream")
    async def stream(websocket: WebSocket, session_id: str) -> None:
        session = sessions.get(session_id)
        await websocket.accept()
        if session is None:
            await websocket.send_json(
                {"type": "error", "seq": 0, "payload": {"reason": f"unknown session '{session_id}'"}}
            )
            await websocket.close()
            return
        autotick = websocket.query_params.get("autotick", "1") != "0"
        queue: asyncio.Queue = asyncio.Queue()
        subscriber = _Subscriber(queue, asyncio.get_running_loop())
        session.subscribers.append(subscriber)
        with session.lock:
            await websocket.send_json(
                {"type": "snapshot", "seq": session.seq, "payload": session.snapshot()}
            )

        async def ticker() -> None:
            interval = 1.0 / session.tick_rate
            while True:
                await asyncio.sleep(interval)
                await asyncio.get_running_loop().run_in_executor(
                    None, session.tick, interval
                )

        tick_task = asyncio.create_task(ticker()) if autotick else None
        try:
            while True:
                message = await queue.get()
                await websocket.send_json(message)
        except WebSocketDisconnect:
            pass
        finally:
            if tick_task is not None:
                tick_task.cancel()
            if subscriber in session.subscribers:
                session.subscribers.remove(subscriber)

    return app


app = create_app()


def serve(host: str = "127.0.0.1", port: int = 8432) -> None:
    import uvicorn

    uvicorn.run(app, host=host, port=port)
