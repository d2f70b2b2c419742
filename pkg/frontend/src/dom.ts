// DOM rendering: command field, information field, program prompts,
// checklist, and the connection indicator. Pure render-from-view-model;
// nothing here mutates domain state.

import type { ConsoleCore, ViewModel } from "./console.js";

const BLINK_INTERVAL_MS = 250; // 2 Hz blink: 250 ms on, 250 ms off

export class ConsoleDom {
  private blinkPhase = true;
  private blinkTimer: number | undefined;
  private lastView: ViewModel | null = null;

  constructor(private root: HTMLElement, private core: ConsoleCore, private selectorCount: number) {
    core.onChange((view) => this.render(view));
    this.blinkTimer = window.setInterval(() => {
      this.blinkPhase = !this.blinkPhase;
      if (this.lastView) this.render(this.lastView);
    }, BLINK_INTERVAL_MS);
    window.addEventListener("keydown", (event) => {
      void this.core.handleKey(event.key);
    });
  }

  dispose(): void {
    if (this.blinkTimer !== undefined) window.clearInterval(this.blinkTimer);
  }

  render(view: ViewModel): void {
    this.lastView = view;
    this.root.replaceChildren();
    if (view.errorBanner) {
      const banner = document.createElement("div");
      banner.className = "error-banner";
      banner.textContent = view.errorBanner;
      this.root.appendChild(banner);
      return; // input disabled while the snapshot is unusable
    }
    this.root.appendChild(this.statusBar(view));
    this.root.appendChild(this.commandField(view));
    this.root.appendChild(this.informationField(view));
    if (view.overdue.length > 0) this.root.appendChild(this.promptPanel(view));
    if (view.checklist) this.root.appendChild(this.checklistPanel(view));
  }

  private statusBar(view: ViewModel): HTMLElement {
    const bar = document.createElement("div");
    bar.className = "status-bar";
    const connection = document.createElement("span");
    connection.className = view.connectionOk ? "conn ok" : "conn lost";
    connection.textContent = view.connectionOk ? "link" : "no link";
    const clock = document.createElement("span");
    clock.className = "clock";
    clock.textContent = `t=${view.clock.toFixed(1)}s`;
    const guard = document.createElement("button");
    guard.className = view.guardOpen ? "guard open" : "guard closed";
    guard.textContent = view.guardOpen ? "guard open" : "guard closed";
    guard.onclick = () => void this.core.toggleGuard();
    bar.append(connection, clock, guard);
    return bar;
  }

  private commandField(view: ViewModel): HTMLElement {
    const field = document.createElement("div");
    field.className = "command-field";
    const selectors = document.createElement("div");
    selectors.className = "selectors";
    for (let i = 0; i < this.selectorCount; i += 1) {
      const selector = document.createElement("button");
      selector.textContent = String.fromCharCode(65 + i);
      selector.className = view.selectedSystem === i ? "selector latched" : "selector";
      selector.onclick = () => void this.core.selectSystem(i);
      selectors.appendChild(selector);
    }
    const commands = document.createElement("div");
    commands.className = "commands";
    for (let i = 0; i < view.frame.length; i += 1) {
      for (const turnOn of [true, false]) {
        const button = document.createElement("button");
        button.className = turnOn ? "cmd on" : "cmd off";
        button.textContent = `${i + 1}${turnOn ? "+" : "-"}`;
        button.onclick = () => {
          const { guardHint } = this.core.command(i, turnOn);
          if (guardHint) button.classList.add("guard-hint");
        };
        commands.appendChild(button);
      }
    }
    const lamp = document.createElement("button");
    lamp.className = "lamp-test";
    lamp.textContent = "lamp test";
    lamp.onmousedown = () => void this.core.lampTest(true);
    lamp.onmouseup = () => void this.core.lampTest(false);
    field.append(selectors, commands, lamp);
    return field;
  }

  private informationField(view: ViewModel): HTMLElement {
    const field = document.createElement("div");
    field.className = `information-field ${view.family}`;
    for (let i = 0; i < view.frame.length; i += 1) {
      const cell = view.frame[i]!;
      const el = document.createElement("div");
      const visible = cell.lit && (!cell.blinking || this.blinkPhase);
      el.className = visible ? "cell lit" : "cell";
      el.title = cell.label;
      el.textContent = cell.label || "·";
      if (cell.blinking) {
        el.classList.add("unacked");
        el.onclick = () => void this.core.acknowledge(i);
      }
      field.appendChild(el);
    }
    return field;
  }

  private promptPanel(view: ViewModel): HTMLElement {
    const panel = document.createElement("div");
    panel.className = "overdue-prompts";
    for (const prompt of view.overdue) {
      const row = document.createElement("div");
      row.className = "prompt";
      const text = document.createElement("span");
      text.textContent =
        `program ${prompt.program_id} step ${prompt.entry_index + 1} overdue: ` +
        `${prompt.label} ${prompt.desired ? "on" : "off"}`;
      const issue = document.createElement("button");
      issue.className = "manual-issue";
      issue.textContent = "issue manually";
      issue.onclick = () => void this.core.answerPrompt(prompt);
      row.append(text, issue);
      panel.appendChild(row);
    }
    return panel;
  }

  private checklistPanel(view: ViewModel): HTMLElement {
    const panel = document.createElement("div");
    panel.className = "checklist";
    for (const step of view.checklist!.steps) {
      const row = document.createElement("div");
      row.className = step.done
        ? "step done"
        : step.index === view.checklist!.current
          ? "step current"
          : "step";
      row.textContent = `${step.index + 1}. ${step.description}`;
      panel.appendChild(row);
    }
    return panel;
  }
}
