// Dispatcher console bootstrap: wires the gateway client, the view
// store, and the SVG map into the static page shell. All sim data
// flows through the HTTP API; nothing here touches files or the
// engine directly.

import { CommandRejectedError, GatewayClient } from "./client.js";
import { renderMap } from "./map.js";
import { ConsoleStore } from "./store.js";
import type { StateResponse } from "./types.js";

const SNAPSHOT_POLL_MS = 2000;
const RENDER_MS = 400;
const SEVERITIES = ["routine", "urgent", "critical"] as const;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

function el(id: string): HTMLElement {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id} in page shell`);
  return node;
}

async function main(): Promise<void> {
  const client = new GatewayClient("");
  const initial = (await client.state()) as StateResponse;
  const store = new ConsoleStore(initial);
  const aborter = new AbortController();

  // static pieces that depend only on map geometry
  const nodeSelect = el("incident-node") as HTMLSelectElement;
  nodeSelect.innerHTML = store.world.nodes
    .map((n) => `<option value="${esc(n.id)}">${esc(n.id)}</option>`)
    .join("");
  const severitySelect = el("incident-severity") as HTMLSelectElement;
  severitySelect.innerHTML = SEVERITIES.map(
    (s) => `<option value="${s}">${s}</option>`,
  ).join("");

  let dirty = true;
  const markDirty = () => {
    dirty = true;
  };

  void client.events(
    store.eventCursor,
    (event) => {
      if (store.applyEvent(event)) markDirty();
    },
    aborter.signal,
  );

  setInterval(() => {
    void client
      .state()
      .then((state) => {
        store.applySnapshot(state as StateResponse);
        markDirty();
      })
      .catch(() => undefined); // gateway briefly unreachable: keep last view
  }, SNAPSHOT_POLL_MS);

  async function send(command: string, args: Record<string, unknown>): Promise<void> {
    try {
      await client.command(command, args);
    } catch (err) {
      if (err instanceof CommandRejectedError) {
        store.pushToast(`${command} rejected: ${err.message}`);
      } else {
        store.pushToast(`${command} failed: ${String(err)}`);
      }
    }
    markDirty();
  }

  el("btn-start").addEventListener("click", () => void send("start", {}));
  el("btn-pause").addEventListener("click", () => void send("pause", {}));
  el("btn-step").addEventListener("click", () => void send("step_n", { n: 1 }));

  (el("incident-form") as HTMLFormElement).addEventListener("submit", (ev) => {
    ev.preventDefault();
    // severity rides along for the operator log; the engine keys on node only
    void send("inject_incident", {
      node: nodeSelect.value,
      severity: severitySelect.value,
    });
  });

  el("decision-panel").addEventListener("click", (ev) => {
    const target = ev.target as HTMLElement;
    const action = target.dataset["action"];
    if (action === "accept") {
      store.pendingDecision = null; // auto-dispatch already holds
      markDirty();
    } else if (action === "override") {
      const incident = target.dataset["incident"] ?? "";
      const unit = target.dataset["unit"] ?? "";
      void send("dispatch_override", { incident, unit });
    }
  });

  el("incident-table").addEventListener("click", (ev) => {
    const row = (ev.target as HTMLElement).closest("tr[data-incident]");
    if (row instanceof HTMLElement) {
      const id = row.dataset["incident"] ?? null;
      store.selectedIncident = store.selectedIncident === id ? null : id;
      markDirty();
    }
  });
  el("unit-table").addEventListener("click", (ev) => {
    const row = (ev.target as HTMLElement).closest("tr[data-unit]");
    if (row instanceof HTMLElement) {
      const id = row.dataset["unit"] ?? null;
      store.selectedUnit = store.selectedUnit === id ? null : id;
      markDirty();
    }
  });

  function render(): void {
    const view = store.view();
    el("map-pane").innerHTML = renderMap(store.world, view);
    el("sim-clock").textContent = `t = ${view.t_s.toFixed(1)} s`;
    el("sim-running").textContent = view.running
      ? `running x${view.rate}`
      : "paused";
    el("sim-priority").textContent = view.priority_enabled
      ? "signal priority on"
      : "signal priority off";

    el("unit-table").innerHTML =
      `<tr><th>unit</th><th>status</th><th>position</th></tr>` +
      view.ambulances
        .map((u) => {
          const sel = u.id === store.selectedUnit ? " class=\"selected\"" : "";
          const pos = u.edge === null ? "idle" : `${esc(u.edge)} @ ${u.offset_m.toFixed(0)} m`;
          return (
            `<tr data-unit="${esc(u.id)}"${sel}><td>${esc(u.id)}</td>` +
            `<td class="status-${esc(u.status)}">${esc(u.status)}</td><td>${pos}</td></tr>`
          );
        })
        .join("");

    el("incident-table").innerHTML =
      `<tr><th>incident</th><th>node</th><th>status</th><th>age</th></tr>` +
      view.incidents
        .map((i) => {
          const sel = i.id === store.selectedIncident ? " class=\"selected\"" : "";
          const age = Math.max(0, view.t_s - i.created_at_s).toFixed(0);
          return (
            `<tr data-incident="${esc(i.id)}"${sel}><td>${esc(i.id)}</td>` +
            `<td>${esc(i.node)}</td><td class="status-${esc(i.status)}">${esc(i.status)}</td>` +
            `<td>${age} s</td></tr>`
          );
        })
        .join("");

    const decision = store.pendingDecision;
    if (decision === null) {
      el("decision-panel").innerHTML = `<p class="muted">no pending dispatch decision</p>`;
    } else {
      const rows = Object.entries(decision.candidates)
        .sort((a, b) => a[1] - b[1])
        .map(([uid, eta]) => {
          const tag = uid === decision.recommended_unit ? " (recommended)" : "";
          return (
            `<tr><td>${esc(uid)}${tag}</td><td>${eta.toFixed(1)} s</td>` +
            `<td><button data-action="override" data-incident="${esc(decision.incident)}" ` +
            `data-unit="${esc(uid)}">Override</button></td></tr>`
          );
        })
        .join("");
      el("decision-panel").innerHTML =
        `<p><strong>${esc(decision.unit)}</strong> dispatched to ` +
        `<strong>${esc(decision.incident)}</strong>, eta ${decision.eta_s.toFixed(1)} s ` +
        `-> ${esc(decision.hospital)}</p>` +
        `<table><tr><th>unit</th><th>predicted</th><th></th></tr>${rows}</table>` +
        `<button data-action="accept">Accept</button>`;
    }

    el("activity-feed").innerHTML = store.activity
      .slice()
      .reverse()
      .map(
        (entry) =>
          `<li><span class="stamp">${entry.t_s.toFixed(1)}s</span> ${esc(entry.text)}</li>`,
      )
      .join("");

    el("toasts").innerHTML = store.toasts
      .map((t) => `<div class="toast">${esc(t)}</div>`)
      .join("");
  }

  render();
  setInterval(() => {
    if (dirty) {
      dirty = false;
      render();
    }
  }, RENDER_MS);
}

void main().catch((err) => {
  document.body.insertAdjacentHTML(
    "beforeend",
    `<div class="toast">console failed to start: ${esc(String(err))}</div>`,
  );
});
