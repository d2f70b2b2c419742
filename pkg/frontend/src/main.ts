// Bootstrap: connect to the session server, open the stream, render.

import { ConsoleCore } from "./console.js";
import { ConsoleDom } from "./dom.js";
import { HttpTransport, openStream } from "./transport.js";

const params = new URLSearchParams(window.location.search);
const baseUrl = params.get("server") ?? "http://127.0.0.1:8432";
const specId = params.get("panel") ?? "drill-csd";
const plantId = params.get("plant") ?? "drill";
const scenarioId = params.get("scenario") ?? "console-drill";
const selectorCount = Number(params.get("selectors") ?? "4");

async function boot(): Promise<void> {
  const root = document.getElementById("console");
  if (!root) throw new Error("missing #console mount point");
  const transport = new HttpTransport(baseUrl);
  const core = new ConsoleCore(transport);
  new ConsoleDom(root, core, selectorCount);
  const view = await core.start(specId, plantId, scenarioId);
  openStream(
    baseUrl,
    view.sessionId,
    (message) => core.applyMessage(message),
    () => {
      // Surface the drop; the next snapshot fetch re-syncs on reconnect.
      const current = core.viewModel;
      if (current) core.applyMessage({ type: "error", seq: current.seq, payload: { reason: "stream closed" } });
    },
  );
}

void boot();
