// Browser transport: fetch for commands, WebSocket for the live stream.

import type { ButtonEventBody, ServerTransport, Snapshot, StreamMessage } from "./protocol.js";

export class HttpTransport implements ServerTransport {
  constructor(private baseUrl: string) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await fetch(`${this.baseUrl}${path}`, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    if (!response.ok) {
      throw new Error(`${response.status} ${await response.text()}`);
    }
    return (await response.json()) as T;
  }

  async createSession(specId: string, plantId: string, scenarioId?: string): Promise<Snapshot> {
    const body: Record<string, string> = { spec_id: specId, plant_id: plantId };
    if (scenarioId) body.scenario_id = scenarioId;
    const payload = await this.request<{ session_id: string; snapshot: Snapshot }>(
      "/sessions",
      { method: "POST", body: JSON.stringify(body) },
    );
    return payload.snapshot;
  }

  async postEvent(sessionId: string, event: ButtonEventBody): Promise<void> {
    await this.request(`/sessions/${sessionId}/events`, {
      method: "POST",
      body: JSON.stringify(event),
    });
  }

  async fetchSnapshot(sessionId: string): Promise<Snapshot> {
    const payload = await this.request<{ snapshot: Snapshot }>(
      `/sessions/${sessionId}/snapshot`,
    );
    return payload.snapshot;
  }
}

export function openStream(
  baseUrl: string,
  sessionId: string,
  onMessage: (message: StreamMessage) => void,
  onClose: () => void,
): WebSocket {
  const wsBase = baseUrl.replace(/^http/, "ws");
  const socket = new WebSocket(`${wsBase}/sessions/${sessionId}/stream`);
  socket.onmessage = (event) => onMessage(JSON.parse(event.data as string) as StreamMessage);
  socket.onclose = onClose;
  return socket;
}
