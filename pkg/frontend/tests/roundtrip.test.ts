// End-to-end console round trip against a real gateway process:
// inject an incident, see the Dispatch event arrive within one
// simulation step at real-time pacing, get the busy-unit override
// rejected, and confirm the store's view matches a fresh snapshot.

import { spawn, type ChildProcess } from "node:child_process";
import { mkdtempSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { CommandRejectedError, GatewayClient } from "../src/client.js";
import { ConsoleStore } from "../src/store.js";
import type { DispatchPayload, SimEventRecord, StateResponse } from "../src/types.js";

const DT_S = 0.5;

const SCENARIO = {
  schema_version: 1,
  config: { dt_s: DT_S },
  network: {
    nodes: [
      { id: "dw", x: 0, y: 0 },
      { id: "mid", x: 600, y: 0 },
      { id: "sc", x: 1200, y: 0 },
      { id: "ho", x: 1800, y: 0 },
      { id: "sp", x: 0, y: 600 },
    ],
    edges: [
      { id: "e_dm", from: "dw", to: "mid", length_m: 600, free_speed_mps: 15 },
      { id: "e_ms", from: "mid", to: "sc", length_m: 600, free_speed_mps: 15 },
      { id: "e_sh", from: "sc", to: "ho", length_m: 600, free_speed_mps: 15 },
      { id: "e_sp", from: "sp", to: "dw", length_m: 600, free_speed_mps: 10 },
    ],
  },
  fleet: [
    { id: "a1", edge: "e_dm", offset_m: 0, speed_mps: 15 },
    { id: "a2", edge: "e_sp", offset_m: 0, speed_mps: 10 },
  ],
  hospitals: [{ id: "h1", node: "ho" }],
};

let child: ChildProcess;
let workDir: string;
let base: string;

function startGateway(scenarioPath: string): Promise<string> {
  return new Promise((resolve, reject) => {
    child = spawn(
      "python3",
      ["-m", "ambusim", "serve", scenarioPath, "--port", "0"],
      { stdio: ["ignore", "ignore", "pipe"] },
    );
    let stderr = "";
    const timer = setTimeout(
      () => reject(new Error(`gateway did not report a port; stderr so far:\n${stderr}`)),
      15000,
    );
    child.stderr!.on("data", (chunk: Buffer) => {
      stderr += chunk.toString();
      const match = stderr.match(/listening on (http:\/\/[\d.]+:\d+)/);
      if (match !== null) {
        clearTimeout(timer);
        resolve(match[1]!);
      }
    });
    child.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`gateway exited early (code ${code}):\n${stderr}`));
    });
  });
}

async function waitFor<T>(probe: () => T | undefined, what: string, timeoutMs = 8000): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  for (;;) {
    const got = probe();
    if (got !== undefined) return got;
    if (Date.now() > deadline) throw new Error(`timed out waiting for ${what}`);
    await new Promise((resolve) => setTimeout(resolve, 25));
  }
}

beforeAll(async () => {
  workDir = mkdtempSync(join(tmpdir(), "console-rt-"));
  const scenarioPath = join(workDir, "scenario.json");
  writeFileSync(scenarioPath, JSON.stringify(SCENARIO));
  base = await startGateway(scenarioPath);
});

afterAll(() => {
  child?.kill("SIGTERM");
  rmSync(workDir, { recursive: true, force: true });
});

describe("console round trip", () => {
  it("dispatches an injected incident within one step and rejects a busy override", async () => {
    const client = new GatewayClient(base);
    const initial = await client.state();
    expect(initial.running).toBe(false);
    expect(initial.ambulances.map((u) => [u.id, u.status])).toEqual([
      ["a1", "Free"],
      ["a2", "Free"],
    ]);
    expect(initial.network.nodes.map((n) => n.id).sort()).toEqual(
      ["dw", "ho", "mid", "sc", "sp"],
    );

    const store = new ConsoleStore(initial);
    const events: SimEventRecord[] = [];
    const aborter = new AbortController();
    const feed = client.events(
      store.eventCursor,
      (event) => {
        store.applyEvent(event);
        events.push(event);
      },
      aborter.signal,
    );

    try {
      // real-time pacing: the engine advances one dt per dt of wall clock
      await client.command("start");

      const injectedAt = Date.now();
      const result = await client.command("inject_incident", {
        node: "sc",
        severity: "urgent",
      });
      const incidentId = result["incident"] as string;
      expect(typeof incidentId).toBe("string");

      const dispatch = await waitFor(
        () =>
          events.find(
            (e) => e.kind === "Dispatch" && e.payload["incident"] === incidentId,
          ),
        "the Dispatch event",
      );
      const wallMs = Date.now() - injectedAt;
      const created = events.find(
        (e) => e.kind === "IncidentCreated" && e.payload["incident"] === incidentId,
      );
      expect(created).toBeDefined();

      // within one simulation step of the injection, at real-time pacing
      expect(dispatch.t_s - created!.t_s).toBeLessThanOrEqual(DT_S + 1e-9);
      expect(wallMs).toBeLessThan(2500);

      const payload = dispatch.payload as unknown as DispatchPayload;
      expect(payload.unit).toBe("a1"); // shorter predicted time than a2's spur detour
      expect(payload.recommended_unit).toBe("a1");
      expect(payload.manual_override).toBe(false);
      expect(Object.keys(payload.candidates).sort()).toEqual(["a1", "a2"]);
      expect(payload.candidates["a1"]!).toBeLessThan(payload.candidates["a2"]!);

      // the event-driven view reflects the dispatch before any snapshot
      const live = store.view();
      expect(live.incidents.find((i) => i.id === incidentId)?.status).toBe("Assigned");
      expect(live.ambulances.find((u) => u.id === "a1")?.status).toBe("EnRoute");
      expect(store.pendingDecision?.incident).toBe(incidentId);

      // overriding to the unit that is already EnRoute must be rejected
      const rejection = await client
        .command("dispatch_override", { incident: incidentId, unit: "a1" })
        .then(() => null)
        .catch((err: unknown) => err);
      expect(rejection).toBeInstanceOf(CommandRejectedError);
      expect((rejection as CommandRejectedError).status).toBe(422);
      expect((rejection as CommandRejectedError).message).toMatch(/not Free/);

      // after reconciling with a fresh snapshot, the UI state matches it
      const fresh: StateResponse = await client.state();
      store.applySnapshot(fresh);
      expect(store.view()).toEqual({
        t_s: fresh.t_s,
        running: fresh.running,
        rate: fresh.rate,
        priority_enabled: fresh.priority_enabled,
        ambulances: fresh.ambulances,
        incidents: fresh.incidents,
        assignments: fresh.assignments,
        controllers: fresh.controllers,
      });
      expect(store.eventCursor).toBeGreaterThanOrEqual(fresh.last_seq);

      // the rejected override left the assignment untouched
      const assignment = fresh.assignments.find((a) => a.incident === incidentId);
      expect(assignment?.unit).toBe("a1");
      expect(assignment?.manual_override).toBe(false);
      expect(assignment?.route_to_scene).toEqual(["e_dm", "e_ms"]);
    } finally {
      aborter.abort();
      await feed;
    }
  });

  it("serves the built console page at /ui/", async () => {
    const response = await fetch(`${base}/ui/`);
    expect(response.status).toBe(200);
    const html = await response.text();
    expect(html).toContain("Dispatch Console");
    expect(html).toContain("app.js");
    const js = await fetch(`${base}/ui/app.js`);
    expect(js.status).toBe(200);
  });
});
