// Wire types of the panel session server. Field names and shapes mirror the
// server payloads exactly; the console never invents state of its own.

export interface IndicatorCell {
  lit: boolean;
  blinking: boolean;
  label: string;
}

export interface OverduePrompt {
  program_id: string;
  entry_index: number;
  system_id: number;
  unit_id: number;
  desired: boolean;
  command_index: number;
  label: string;
}

export interface ChecklistStep {
  index: number;
  description: string;
  done: boolean;
}

export interface Checklist {
  scenario_id: string;
  total: number;
  current: number;
  complete: boolean;
  steps: ChecklistStep[];
}

export interface Snapshot {
  session_id: string;
  seq: number;
  spec_id: string;
  plant_id: string;
  family: string;
  clock: number;
  selected_system: number | null;
  digit_path: number[];
  guard_open: boolean;
  lamp_test_held: boolean;
  frame: IndicatorCell[];
  unacked_cells: number[];
  overdue: OverduePrompt[];
  checklist: Checklist | null;
  state_hash: string;
}

export interface Delta {
  seq: number;
  outcome: string;
  emissions: Array<{
    system_id: number;
    unit_id: number;
    turn_on: boolean;
    source: string;
  }>;
  changed_cells: Array<[number, IndicatorCell]>;
  clock: number;
  selected_system: number | null;
  digit_path: number[];
  guard_open: boolean;
  lamp_test_held: boolean;
  unacked_cells: number[];
  overdue: OverduePrompt[];
  checklist: Checklist | null;
  state_hash: string;
}

export type StreamMessage =
  | { type: "snapshot"; seq: number; payload: Snapshot }
  | { type: "delta"; seq: number; payload: Delta }
  | { type: "prompt"; seq: number; payload: { overdue: OverduePrompt[] } }
  | { type: "error"; seq: number; payload: { reason: string } };

export interface ButtonEventBody {
  kind: "select_system" | "command" | "digit" | "lamp_test" | "ack" | "guard_toggle";
  index?: number;
  turn_on?: boolean;
  digit?: number;
  pressed?: boolean;
}

// Transport the console core talks through. The browser build wires this to
// fetch + WebSocket; tests substitute an in-memory twin of the server.
export interface ServerTransport {
  createSession(specId: string, plantId: string, scenarioId?: string): Promise<Snapshot>;
  postEvent(sessionId: string, event: ButtonEventBody): Promise<void>;
  fetchSnapshot(sessionId: string): Promise<Snapshot>;
}
