import { describe, expect, it } from "vitest";

import { renderMap } from "../src/map.js";
import type { ConsoleView } from "../src/store.js";
import type { WorldGeometry } from "../src/types.js";

const WORLD: WorldGeometry = {
  nodes: [
    { id: "a", x: 0, y: 0 },
    { id: "b", x: 400, y: 0 },
    { id: "c", x: 400, y: 300 },
  ],
  edges: [
    {
      id: "e1",
      from: "a",
      to: "b",
      length_m: 400,
      stop_line: { controller: "c1", approach: "west" },
    },
    {
      id: "e2",
      from: "b",
      to: "c",
      length_m: 300,
      stop_line: { controller: "c1", approach: "north" },
    },
  ],
  hospitals: [{ id: "h1", node: "c" }],
};

function view(overrides: Partial<ConsoleView> = {}): ConsoleView {
  return {
    t_s: 0,
    running: false,
    rate: 1,
    priority_enabled: true,
    ambulances: [],
    incidents: [],
    assignments: [],
    controllers: [
      {
        id: "c1",
        phase: "P_EW",
        mode: "Normal",
        elapsed_s: 0,
        remaining_green_s: 24,
        approaches: { west: "Green", north: "Red" },
      },
    ],
    ...overrides,
  };
}

describe("renderMap", () => {
  it("draws every edge, node, and hospital", () => {
    const svg = renderMap(WORLD, view());
    expect(svg).toContain('data-edge="e1"');
    expect(svg).toContain('data-edge="e2"');
    expect(svg).toContain('data-node="a"');
    expect(svg).toContain('data-node="b"');
    expect(svg).toContain('data-node="c"');
    expect(svg).toContain('data-hospital="h1"');
  });

  it("badges each controlled approach with its signal color", () => {
    const svg = renderMap(WORLD, view());
    expect(svg).toMatch(/data-approach="west"[^/]*data-state="Green"/);
    expect(svg).toMatch(/data-approach="north"[^/]*data-state="Red"/);
    expect(svg).not.toContain("extension-marker");
  });

  it("marks a held green distinctly in Extended mode", () => {
    const extended = view({
      controllers: [
        {
          id: "c1",
          phase: "P_EW",
          mode: "Extended",
          elapsed_s: 30,
          remaining_green_s: 8,
          approaches: { west: "Green", north: "Red" },
        },
      ],
    });
    const svg = renderMap(WORLD, extended);
    expect(svg).toContain("signal-extended");
    expect(svg).toContain('class="extension-marker"');
    // only the held green approach grows a ring, not the red one
    const rings = svg.match(/class="extension-marker"/g) ?? [];
    expect(rings.length).toBe(1);
    expect(svg).not.toMatch(/data-approach="north"[^/]*signal-extended/);
  });

  it("colors unit markers by status", () => {
    const busy = view({
      ambulances: [
        {
          id: "a1",
          status: "EnRoute",
          edge: "e1",
          offset_m: 200,
          x: 200,
          y: 0,
          speed_mps: 15,
          stopped: false,
        },
        {
          id: "a2",
          status: "Free",
          edge: "e2",
          offset_m: 0,
          x: 400,
          y: 0,
          speed_mps: 0,
          stopped: false,
        },
      ],
    });
    const svg = renderMap(WORLD, busy);
    expect(svg).toMatch(/data-unit="a1" data-status="EnRoute"/);
    expect(svg).toMatch(/data-unit="a2" data-status="Free"/);
    const a1 = svg.match(/data-unit="a1"[^>]*>[^<]*<circle[^>]*fill="([^"]+)"/);
    const a2 = svg.match(/data-unit="a2"[^>]*>[^<]*<circle[^>]*fill="([^"]+)"/);
    expect(a1?.[1]).not.toBe(a2?.[1]);
  });

  it("overlays route polylines for active assignments", () => {
    const assigned = view({
      assignments: [
        {
          incident: "i1",
          unit: "a1",
          hospital: "h1",
          manual_override: false,
          decided_at_s: 1,
          route_to_scene: ["e1"],
          route_to_hospital: ["e2"],
        },
      ],
    });
    const svg = renderMap(WORLD, assigned);
    expect(svg).toContain('class="route route-scene"');
    expect(svg).toContain('class="route route-hospital"');
    expect(svg).toMatch(/route-scene[^>]*data-incident="i1"/);
  });

  it("skips unknown edge ids in routes instead of failing", () => {
    const assigned = view({
      assignments: [
        {
          incident: "i1",
          unit: "a1",
          hospital: "h1",
          manual_override: false,
          decided_at_s: 1,
          route_to_scene: ["ghost"],
          route_to_hospital: [],
        },
      ],
    });
    const svg = renderMap(WORLD, assigned);
    expect(svg).toContain("<svg");
    expect(svg).not.toContain("route-scene");
  });

  it("renders an empty scenario without errors", () => {
    const empty: WorldGeometry = { nodes: [], edges: [], hospitals: [] };
    const svg = renderMap(empty, view({ controllers: [] }));
    expect(svg).toContain("<svg");
    expect(svg).toContain("</svg>");
  });

  it("escapes markup-significant characters in ids", () => {
    const hostile: WorldGeometry = {
      nodes: [{ id: 'n"<script>', x: 0, y: 0 }],
      edges: [],
      hospitals: [],
    };
    const svg = renderMap(hostile, view({ controllers: [] }));
    expect(svg).not.toContain("<script>");
    expect(svg).toContain("&lt;script&gt;");
  });
});
