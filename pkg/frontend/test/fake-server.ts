// In-memory twin of the panel session server, limited to the console-drill
// fixture. Payload shapes mirror the real server byte-for-byte in structure;
// semantics (latching, guard, change signaling, program auto-issue, overdue,
// checklist advance) are ported from the server so the console can be
// exercised without a network. Tests control message delivery explicitly.

import type {
  ButtonEventBody,
  Checklist,
  Delta,
  IndicatorCell,
  OverduePrompt,
  ServerTransport,
  Snapshot,
  StreamMessage,
} from "../src/protocol.js";

const SELECTORS = 4;
const PAIRS = 4;
const GUARDED = new Set([3]);
const UNIT_LABELS = ["U01", "U02", "U03", "U04"];

interface ProgramEntry {
  issueAt: number;
  deadlineAt: number;
  system: number;
  unit: number;
  desired: boolean;
  faulted: boolean;
}

const PROGRAM: ProgramEntry[] = [
  { issueAt: 1.0, deadlineAt: 2.0, system: 1, unit: 1, desired: true, faulted: false },
  { issueAt: 3.0, deadlineAt: 4.0, system: 1, unit: 2, desired: true, faulted: true },
];

const CHECKLIST_DESCRIPTIONS = [
  "Verify S02-U02 is off",
  "Switch S02-U04 on",
  "Run the lamp test",
  "Acknowledge blinking status changes",
  "See program 'drill' step 2 through",
];

function stateHash(fields: Record<string, unknown>): string {
  // Opaque integrity token; the client never recomputes it, only mirrors it.
  const text = JSON.stringify(fields);
  let hash = 0;
  for (let i = 0; i < text.length; i += 1) {
    hash = (hash * 31 + text.charCodeAt(i)) >>> 0;
  }
  return `fake-${hash.toString(16)}`;
}

export class FakeServer implements ServerTransport {
  // Authoritative state
  units: boolean[][] = Array.from({ length: 4 }, () => [false, false, false, false]);
  clock = 0;
  selectedSystem: number | null = null;
  guardOpen = false;
  lampTestHeld = false;
  unacked = new Set<string>(); // "system:unit"
  overdue = new Set<number>(); // program entry indexes
  issued = new Set<number>();
  programsStarted = false;
  checklistCurrent = 0;
  sawLampPress = false;
  sawLampRelease = false;
  sawAck = false;
  seq = 0;

  sessionId = "fake-000001";
  outbox: StreamMessage[] = [];
  postedEvents: ButtonEventBody[] = [];
  failNextPost = false;

  // -- transport interface ----------------------------------------------------

  async createSession(): Promise<Snapshot> {
    return this.snapshot();
  }

  async postEvent(_sessionId: string, event: ButtonEventBody): Promise<void> {
    if (this.failNextPost) {
      this.failNextPost = false;
      throw new Error("connection refused");
    }
    this.postedEvents.push(event);
    this.applyEvent(event);
  }

  async fetchSnapshot(): Promise<Snapshot> {
    return this.snapshot();
  }

  // -- state machine ------------------------------------------------------------

  private unitKey(system: number, unit: number): string {
    return `${system}:${unit}`;
  }

  private frame(): IndicatorCell[] {
    const cells: IndicatorCell[] = [];
    for (let pair = 0; pair < PAIRS; pair += 1) {
      if (this.lampTestHeld) {
        cells.push({ lit: true, blinking: false, label: "" });
        continue;
      }
      if (this.selectedSystem === null) {
        cells.push({ lit: false, blinking: false, label: "" });
        continue;
      }
      const blinking = this.unacked.has(this.unitKey(this.selectedSystem, pair));
      const lit = this.units[this.selectedSystem]![pair]! || blinking;
      cells.push({ lit, blinking, label: `S0${this.selectedSystem + 1}-${UNIT_LABELS[pair]}` });
    }
    return cells;
  }

  private unackedCells(): number[] {
    if (this.selectedSystem === null) return [];
    const cells: number[] = [];
    for (let pair = 0; pair < PAIRS; pair += 1) {
      if (this.unacked.has(this.unitKey(this.selectedSystem, pair))) cells.push(pair);
    }
    return cells;
  }

  private overduePrompts(): OverduePrompt[] {
    return [...this.overdue].sort().map((index) => {
      const entry = PROGRAM[index]!;
      return {
        program_id: "drill",
        entry_index: index,
        system_id: entry.system,
        unit_id: entry.unit,
        desired: entry.desired,
        command_index: entry.unit,
        label: `S0${entry.system + 1}-${UNIT_LABELS[entry.unit]}`,
      };
    });
  }

  private checklist(): Checklist {
    return {
      scenario_id: "console-drill",
      total: CHECKLIST_DESCRIPTIONS.length,
      current: this.checklistCurrent,
      complete: this.checklistCurrent >= CHECKLIST_DESCRIPTIONS.length,
      steps: CHECKLIST_DESCRIPTIONS.map((description, index) => ({
        index,
        description,
        done: index < this.checklistCurrent,
      })),
    };
  }

  private stateFields() {
    return {
      clock: this.clock,
      selected_system: this.selectedSystem,
      digit_path: [] as number[],
      guard_open: this.guardOpen,
      lamp_test_held: this.lampTestHeld,
      frame: this.frame(),
      unacked_cells: this.unackedCells(),
      overdue: this.overduePrompts(),
      checklist: this.checklist(),
    };
  }

  snapshot(): Snapshot {
    const fields = this.stateFields();
    return {
      session_id: this.sessionId,
      seq: this.seq,
      spec_id: "drill-csd",
      plant_id: "drill",
      family: "matrix_matrix",
      ...fields,
      state_hash: stateHash(fields),
    };
  }

  private advanceChecklist(): void {
    while (this.checklistCurrent < CHECKLIST_DESCRIPTIONS.length) {
      const step = this.checklistCurrent;
      let done = false;
      if (step === 0) done = this.selectedSystem === 1;
      else if (step === 1) done = this.units[1]![3]!;
      else if (step === 2) done = this.sawLampPress && this.sawLampRelease;
      else if (step === 3) done = this.sawAck && this.unacked.size === 0;
      else if (step === 4) {
        const entry = PROGRAM[1]!;
        done = this.issued.has(1) || this.units[entry.system]![entry.unit] === entry.desired;
      }
      if (!done) break;
      this.checklistCurrent += 1;
      this.sawLampPress = false;
      this.sawLampRelease = false;
      this.sawAck = false;
    }
  }

  private emitDelta(before: ReturnType<FakeServer["stateFields"]>, outcome: string, emissions: Delta["emissions"]): Delta {
    this.seq += 1;
    const after = this.stateFields();
    const changed: Array<[number, IndicatorCell]> = [];
    after.frame.forEach((cell, index) => {
      const previous = before.frame[index];
      if (
        !previous ||
        previous.lit !== cell.lit ||
        previous.blinking !== cell.blinking ||
        previous.label !== cell.label
      ) {
        changed.push([index, cell]);
      }
    });
    const delta: Delta = {
      seq: this.seq,
      outcome,
      emissions,
      changed_cells: changed,
      clock: after.clock,
      selected_system: after.selected_system,
      digit_path: after.digit_path,
      guard_open: after.guard_open,
      lamp_test_held: after.lamp_test_held,
      unacked_cells: after.unacked_cells,
      overdue: after.overdue,
      checklist: after.checklist,
      state_hash: stateHash(after),
    };
    this.outbox.push({ type: "delta", seq: delta.seq, payload: delta });
    return delta;
  }

  applyEvent(event: ButtonEventBody): Delta {
    const before = this.stateFields();
    let outcome = "ok";
    const emissions: Delta["emissions"] = [];
    switch (event.kind) {
      case "select_system":
        if (event.index === undefined || event.index < 0 || event.index >= SELECTORS) {
          outcome = "invalid_index";
        } else {
          this.selectedSystem = event.index;
        }
        break;
      case "guard_toggle":
        this.guardOpen = !this.guardOpen;
        break;
      case "lamp_test":
        this.lampTestHeld = Boolean(event.pressed);
        if (event.pressed) this.sawLampPress = true;
        else if (this.sawLampPress) this.sawLampRelease = true;
        break;
      case "ack": {
        const cells = this.unackedCells();
        if (event.index !== undefined && cells.includes(event.index)) {
          this.unacked.delete(this.unitKey(this.selectedSystem!, event.index));
          this.sawAck = true;
        } else {
          outcome = "noop_ack";
        }
        break;
      }
      case "command": {
        if (this.selectedSystem === null) {
          outcome = "no_selection";
          break;
        }
        if (event.index === undefined || event.index < 0 || event.index >= PAIRS) {
          outcome = "invalid_index";
          break;
        }
        if (GUARDED.has(event.index) && !this.guardOpen) {
          outcome = "guard_closed";
          break;
        }
        const turnOn = Boolean(event.turn_on);
        this.units[this.selectedSystem]![event.index] = turnOn;
        emissions.push({
          system_id: this.selectedSystem,
          unit_id: event.index,
          turn_on: turnOn,
          source: "operator",
        });
        break;
      }
      default:
        outcome = "unsupported";
    }
    this.advanceChecklist();
    return this.emitDelta(before, outcome, emissions);
  }

  tick(dt: number): Delta {
    const before = this.stateFields();
    this.programsStarted = true;
    this.clock += dt;
    const overdueBefore = new Set(this.overdue);
    PROGRAM.forEach((entry, index) => {
      if (!entry.faulted && !this.issued.has(index) && entry.issueAt <= this.clock) {
        this.issued.add(index);
        if (this.units[entry.system]![entry.unit] !== entry.desired) {
          this.units[entry.system]![entry.unit] = entry.desired;
          this.unacked.add(this.unitKey(entry.system, entry.unit)); // auto change blinks
        }
      }
      const confirmed =
        this.issued.has(index) || this.units[entry.system]![entry.unit] === entry.desired;
      if (confirmed) this.overdue.delete(index);
      else if (entry.deadlineAt <= this.clock) this.overdue.add(index);
    });
    this.advanceChecklist();
    const delta = this.emitDelta(before, "tick", []);
    const fresh = [...this.overdue].filter((index) => !overdueBefore.has(index));
    if (fresh.length > 0) {
      this.outbox.push({
        type: "prompt",
        seq: this.seq,
        payload: { overdue: this.overduePrompts() },
      });
    }
    return delta;
  }
}
