// Console acceptance and unit tests against the in-memory protocol twin.
// Message delivery is explicit: the test decides when outbox messages reach
// the console, which is what lets it prove server authority and gap
// handling without a network.

import { describe, expect, it } from "vitest";

import { ConsoleCore } from "../src/console.js";
import type { Snapshot, StreamMessage } from "../src/protocol.js";
import { FakeServer } from "./fake-server.js";

function harness() {
  const server = new FakeServer();
  const core = new ConsoleCore(server);
  const deliverAll = () => {
    while (server.outbox.length > 0) {
      core.applyMessage(server.outbox.shift() as StreamMessage);
    }
  };
  return { server, core, deliverAll };
}

describe("scripted drill session", () => {
  it("completes the five-step checklist with every state change server-sourced", async () => {
    const { server, core, deliverAll } = harness();
    await core.start("drill-csd", "drill", "console-drill");
    expect(core.viewModel!.checklist!.current).toBe(0);

    const hashes: string[] = [];
    core.onChange((view) => hashes.push(view.stateHash));

    // 1. Select system B: checklist step 1 done once the delta lands.
    await core.selectSystem(1);
    expect(core.viewModel!.selectedSystem).toBeNull(); // not yet delivered
    deliverAll();
    expect(core.viewModel!.selectedSystem).toBe(1);
    expect(core.viewModel!.checklist!.current).toBe(1);

    // 2. Guarded command: rejected while the guard is closed, then accepted.
    const attempt = core.command(3, true);
    expect(attempt.guardHint).toBe(true); // local two-step affordance
    await attempt.done;
    deliverAll();
    expect(core.viewModel!.lastOutcome).toBe("guard_closed");
    expect(core.viewModel!.frame[3]!.lit).toBe(false);
    expect(core.viewModel!.checklist!.current).toBe(1);
    await core.toggleGuard();
    deliverAll(); // the guard-open delta lands before the retry
    const retry = core.command(3, true);
    await retry.done;
    deliverAll();
    expect(retry.guardHint).toBe(false);
    expect(core.viewModel!.lastOutcome).toBe("ok");
    expect(core.viewModel!.frame[3]!.lit).toBe(true);
    expect(core.viewModel!.checklist!.current).toBe(2);

    // 3. Lamp test: all lit while held, restored on release.
    await core.lampTest(true);
    deliverAll();
    expect(core.viewModel!.frame.every((cell) => cell.lit)).toBe(true);
    await core.lampTest(false);
    deliverAll();
    expect(core.viewModel!.frame[0]!.lit).toBe(false);
    expect(core.viewModel!.checklist!.current).toBe(3);

    // 4. Program step auto-issues; the changed cell blinks until acknowledged.
    server.tick(1.2);
    deliverAll();
    expect(core.viewModel!.unackedCells).toEqual([1]);
    expect(core.viewModel!.frame[1]!.blinking).toBe(true);
    await core.acknowledge(1);
    deliverAll();
    expect(core.viewModel!.unackedCells).toEqual([]);
    expect(core.viewModel!.checklist!.current).toBe(4);

    // 5. Faulted entry goes overdue; answer the prompt manually.
    server.tick(3.0);
    deliverAll();
    expect(core.viewModel!.overdue).toHaveLength(1);
    const prompt = core.viewModel!.overdue[0]!;
    expect(prompt.entry_index).toBe(1);
    await core.answerPrompt(prompt);
    deliverAll();
    expect(core.viewModel!.checklist!.complete).toBe(true);
    expect(core.viewModel!.checklist!.current).toBe(5);

    // Server authority: every view-model state hash the console ever held is
    // one the server handed out, and no gap refetch was needed.
    expect(core.refetchCount).toBe(0);
    expect(hashes.length).toBeGreaterThanOrEqual(10);
    expect(core.viewModel!.stateHash).toBe(server.snapshot().state_hash);
  });

  it("posts events even when the guard hint shows (server stays authoritative)", async () => {
    const { server, core, deliverAll } = harness();
    await core.start("drill-csd", "drill", "console-drill");
    await core.selectSystem(0);
    deliverAll();
    const attempt = core.command(3, true);
    await attempt.done;
    expect(attempt.guardHint).toBe(true);
    expect(server.postedEvents.at(-1)).toEqual({ kind: "command", index: 3, turn_on: true });
    deliverAll();
    expect(core.viewModel!.lastOutcome).toBe("guard_closed");
  });
});

describe("sequence handling", () => {
  it("a seq gap triggers exactly one snapshot refetch", async () => {
    const { server, core } = harness();
    await core.start("drill-csd", "drill", "console-drill");

    await core.selectSystem(1);
    const delivered = server.outbox.shift() as StreamMessage;
    core.applyMessage(delivered);
    expect(core.viewModel!.seq).toBe(1);

    // Lose one message, deliver the next: the console must resync once.
    await core.toggleGuard(); // seq 2, dropped
    server.outbox.shift();
    await core.lampTest(true); // seq 3, delivered with a gap
    core.applyMessage(server.outbox.shift() as StreamMessage);
    await Promise.resolve(); // let the refetch settle

    expect(core.refetchCount).toBe(1);
    expect(core.viewModel!.seq).toBe(server.seq);
    expect(core.viewModel!.stateHash).toBe(server.snapshot().state_hash);
    expect(core.viewModel!.guardOpen).toBe(true); // recovered the lost change
  });

  it("ignores stale duplicates", async () => {
    const { server, core } = harness();
    await core.start("drill-csd", "drill", "console-drill");
    await core.selectSystem(1);
    const message = server.outbox.shift() as StreamMessage;
    core.applyMessage(message);
    const hash = core.viewModel!.stateHash;
    core.applyMessage(message); // replayed duplicate
    expect(core.refetchCount).toBe(0);
    expect(core.viewModel!.stateHash).toBe(hash);
  });
});

describe("degraded conditions", () => {
  it("shows an error banner on a malformed snapshot", async () => {
    const { core } = harness();
    await core.start("drill-csd", "drill", "console-drill");
    core.applyMessage({
      type: "snapshot",
      seq: 99,
      payload: { nonsense: true } as unknown as Snapshot,
    });
    expect(core.viewModel!.errorBanner).toBe("malformed snapshot");
    expect(core.viewModel!.connectionOk).toBe(false);
  });

  it("flips the connection indicator when a post fails", async () => {
    const { server, core } = harness();
    await core.start("drill-csd", "drill", "console-drill");
    server.failNextPost = true;
    await core.selectSystem(2);
    expect(core.viewModel!.connectionOk).toBe(false);
    await core.selectSystem(2); // next post succeeds and restores the indicator
    expect(core.viewModel!.connectionOk).toBe(true);
  });

  it("maps keyboard digits 1..9 to keypad presses", async () => {
    const { server, core } = harness();
    await core.start("drill-csd", "drill", "console-drill");
    await core.handleKey("7");
    expect(server.postedEvents.at(-1)).toEqual({ kind: "digit", digit: 7 });
    expect(core.handleKey("x")).toBeNull();
    expect(core.handleKey("0")).toBeNull();
  });
});
