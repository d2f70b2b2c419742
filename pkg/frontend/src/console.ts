// Console state machine. Holds the view model mirrored from the latest
// server message and maps operator input to button events.
//
// Server authority is structural here: the only code paths that touch the
// view model are applyMessage (server messages) and the snapshot refetch
// that a sequence gap triggers. Interactions merely POST events.

import type {
  ButtonEventBody,
  Checklist,
  Delta,
  IndicatorCell,
  OverduePrompt,
  ServerTransport,
  Snapshot,
  StreamMessage,
} from "./protocol.js";

export interface ViewModel {
  sessionId: string;
  specId: string;
  family: string;
  seq: number;
  clock: number;
  selectedSystem: number | null;
  digitPath: number[];
  guardOpen: boolean;
  lampTestHeld: boolean;
  frame: IndicatorCell[];
  unackedCells: number[];
  overdue: OverduePrompt[];
  checklist: Checklist | null;
  stateHash: string;
  lastOutcome: string;
  connectionOk: boolean;
  errorBanner: string | null;
}

function viewFromSnapshot(snapshot: Snapshot): ViewModel {
  return {
    sessionId: snapshot.session_id,
    specId: snapshot.spec_id,
    family: snapshot.family,
    seq: snapshot.seq,
    clock: snapshot.clock,
    selectedSystem: snapshot.selected_system,
    digitPath: [...snapshot.digit_path],
    guardOpen: snapshot.guard_open,
    lampTestHeld: snapshot.lamp_test_held,
    frame: snapshot.frame.map((cell) => ({ ...cell })),
    unackedCells: [...snapshot.unacked_cells],
    overdue: [...snapshot.overdue],
    checklist: snapshot.checklist,
    stateHash: snapshot.state_hash,
    lastOutcome: "",
    connectionOk: true,
    errorBanner: null,
  };
}

function snapshotLooksValid(snapshot: Snapshot): boolean {
  return (
    typeof snapshot.session_id === "string" &&
    Array.isArray(snapshot.frame) &&
    typeof snapshot.seq === "number" &&
    typeof snapshot.state_hash === "string"
  );
}

export class ConsoleCore {
  private view: ViewModel | null = null;
  private transport: ServerTransport;
  private listeners = new Set<(view: ViewModel) => void>();
  private refetching = false;
  /** Count of gap-triggered snapshot refetches (observable for tests). */
  refetchCount = 0;

  constructor(transport: ServerTransport) {
    this.transport = transport;
  }

  get viewModel(): ViewModel | null {
    return this.view;
  }

  onChange(listener: (view: ViewModel) => void): () => void {
    this.listeners.add(listener);
    return () => this.listeners.delete(listener);
  }

  private emit(): void {
    if (this.view) {
      for (const listener of this.listeners) listener(this.view);
    }
  }

  // -- session -------------------------------------------------------------

  async start(specId: string, plantId: string, scenarioId?: string): Promise<ViewModel> {
    const snapshot = await this.transport.createSession(specId, plantId, scenarioId);
    this.acceptSnapshot(snapshot);
    return this.view!;
  }

  private acceptSnapshot(snapshot: Snapshot): void {
    if (!snapshotLooksValid(snapshot)) {
      if (this.view) {
        this.view = { ...this.view, errorBanner: "malformed snapshot", connectionOk: false };
        this.emit();
      }
      return;
    }
    this.view = viewFromSnapshot(snapshot);
    this.emit();
  }

  // -- server messages -------------------------------------------------------

  applyMessage(message: StreamMessage): void {
    if (message.type === "snapshot") {
      this.acceptSnapshot(message.payload);
      return;
    }
    if (message.type === "error") {
      if (this.view) {
        this.view = { ...this.view, errorBanner: message.payload.reason, connectionOk: false };
        this.emit();
      }
      return;
    }
    if (!this.view) return;
    if (message.type === "prompt") {
      // Prompts duplicate state already carried by deltas; they only steer
      // attention, so accept them without a sequence check.
      this.view = { ...this.view, overdue: message.payload.overdue };
      this.emit();
      return;
    }
    const delta = message.payload;
    if (delta.seq <= this.view.seq) {
      return; // stale duplicate
    }
    if (delta.seq !== this.view.seq + 1) {
      void this.resync();
      return;
    }
    this.applyDelta(delta);
  }

  private applyDelta(delta: Delta): void {
    const view = this.view!;
    const frame = view.frame.map((cell) => ({ ...cell }));
    for (const [index, cell] of delta.changed_cells) {
      frame[index] = { ...cell };
    }
    this.view = {
      ...view,
      seq: delta.seq,
      clock: delta.clock,
      selectedSystem: delta.selected_system,
      digitPath: [...delta.digit_path],
      guardOpen: delta.guard_open,
      lampTestHeld: delta.lamp_test_held,
      frame,
      unackedCells: [...delta.unacked_cells],
      overdue: [...delta.overdue],
      checklist: delta.checklist,
      stateHash: delta.state_hash,
      lastOutcome: delta.outcome,
    };
    this.emit();
  }

  /** A sequence gap means missed messages: refetch the snapshot once. */
  private async resync(): Promise<void> {
    if (this.refetching || !this.view) return;
    this.refetching = true;
    this.refetchCount += 1;
    try {
      const snapshot = await this.transport.fetchSnapshot(this.view.sessionId);
      this.acceptSnapshot(snapshot);
    } finally {
      this.refetching = false;
    }
  }

  // -- operator input ---------------------------------------------------------

  private async post(event: ButtonEventBody): Promise<void> {
    if (!this.view) return;
    try {
      await this.transport.postEvent(this.view.sessionId, event);
      if (!this.view.connectionOk) {
        this.view = { ...this.view, connectionOk: true };
        this.emit();
      }
    } catch {
      // No silent loss: surface the failure on the connection indicator and
      // drop the event (the server stays authoritative either way).
      this.view = { ...this.view, connectionOk: false };
      this.emit();
    }
  }

  selectSystem(index: number): Promise<void> {
    return this.post({ kind: "select_system", index });
  }

  /**
   * Issue the on/off half of a command pair. Clicking a guarded command with
   * the guard closed still posts (the server rejects it authoritatively);
   * guardHint tells the caller to show the local two-step affordance.
   */
  command(index: number, turnOn: boolean): { guardHint: boolean; done: Promise<void> } {
    const guardHint = this.isGuardHintNeeded(index);
    return { guardHint, done: this.post({ kind: "command", index, turn_on: turnOn }) };
  }

  isGuardHintNeeded(_index: number): boolean {
    // The client does not know the guarded set; it only knows the guard latch.
    return this.view !== null && !this.view.guardOpen;
  }

  toggleGuard(): Promise<void> {
    return this.post({ kind: "guard_toggle" });
  }

  pressDigit(digit: number): Promise<void> {
    return this.post({ kind: "digit", digit });
  }

  lampTest(pressed: boolean): Promise<void> {
    return this.post({ kind: "lamp_test", pressed });
  }

  acknowledge(cellIndex: number): Promise<void> {
    return this.post({ kind: "ack", index: cellIndex });
  }

  /** Answer an overdue prompt by issuing its backed-up command. */
  answerPrompt(prompt: OverduePrompt): Promise<void> {
    return this.post({ kind: "command", index: prompt.command_index, turn_on: prompt.desired });
  }

  /** O-loop sweep: press every selector in order. */
  async sweepAllSystems(selectorCount: number): Promise<void> {
    for (let index = 0; index < selectorCount; index += 1) {
      await this.selectSystem(index);
    }
  }

  /** Keyboard binding: digits 1..9 drive the keypad on selector families. */
  handleKey(key: string): Promise<void> | null {
    if (/^[1-9]$/.test(key)) {
      return this.pressDigit(Number(key));
    }
    return null;
  }
}
