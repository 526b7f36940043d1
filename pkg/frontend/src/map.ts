// Town map rendered as an SVG string: road edges, intersection nodes,
// hospitals, per-approach signal badges, active routes, unit markers.
// Pure string construction so tests can assert on the markup directly.

import type { ConsoleView } from "./store.js";
import type { EdgeGeom, NodeGeom, UnitStatus, WorldGeometry } from "./types.js";

const UNIT_COLORS: Record<UnitStatus, string> = {
  Free: "#2e9e5b",
  EnRoute: "#d8452e",
  OnScene: "#d89a2e",
  Transporting: "#8a4fd0",
  AtHospital: "#4f6bd0",
};

const PAD = 30;

function esc(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;");
}

interface Projection {
  x(wx: number): number;
  y(wy: number): number;
  width: number;
  height: number;
}

function projection(nodes: NodeGeom[], width: number, height: number): Projection {
  if (nodes.length === 0) {
    return { x: (v) => v, y: (v) => v, width, height };
  }
  const xs = nodes.map((n) => n.x);
  const ys = nodes.map((n) => n.y);
  const minX = Math.min(...xs);
  const minY = Math.min(...ys);
  const spanX = Math.max(...xs) - minX || 1;
  const spanY = Math.max(...ys) - minY || 1;
  const scale = Math.min((width - 2 * PAD) / spanX, (height - 2 * PAD) / spanY);
  return {
    x: (wx) => PAD + (wx - minX) * scale,
    y: (wy) => height - PAD - (wy - minY) * scale, // world y grows upward
    width,
    height,
  };
}

function unitPosition(
  unit: { edge: string | null; offset_m: number; x: number; y: number },
  edges: Map<string, EdgeGeom>,
  nodes: Map<string, NodeGeom>,
): { x: number; y: number } {
  // snapshot carries interpolated coordinates; fall back to edge endpoints
  if (Number.isFinite(unit.x) && Number.isFinite(unit.y)) {
    return { x: unit.x, y: unit.y };
  }
  const edge = unit.edge === null ? undefined : edges.get(unit.edge);
  if (edge === undefined) return { x: 0, y: 0 };
  const a = nodes.get(edge.from)!;
  const b = nodes.get(edge.to)!;
  const f = edge.length_m > 0 ? unit.offset_m / edge.length_m : 0;
  return { x: a.x + (b.x - a.x) * f, y: a.y + (b.y - a.y) * f };
}

function routePath(
  edgeIds: string[],
  edges: Map<string, EdgeGeom>,
  nodes: Map<string, NodeGeom>,
  proj: Projection,
): string {
  const points: string[] = [];
  for (const id of edgeIds) {
    const edge = edges.get(id);
    if (edge === undefined) continue;
    const a = nodes.get(edge.from)!;
    const b = nodes.get(edge.to)!;
    if (points.length === 0) points.push(`${proj.x(a.x)},${proj.y(a.y)}`);
    points.push(`${proj.x(b.x)},${proj.y(b.y)}`);
  }
  return points.join(" ");
}

export function renderMap(
  world: WorldGeometry,
  view: ConsoleView,
  width = 760,
  height = 520,
): string {
  const proj = projection(world.nodes, width, height);
  const nodeById = new Map(world.nodes.map((n) => [n.id, n]));
  const edgeById = new Map(world.edges.map((e) => [e.id, e]));
  const parts: string[] = [];
  parts.push(
    `<svg class="town-map" viewBox="0 0 ${width} ${height}" xmlns="http://www.w3.org/2000/svg" role="img">`,
  );

  // road edges
  for (const edge of world.edges) {
    const a = nodeById.get(edge.from);
    const b = nodeById.get(edge.to);
    if (a === undefined || b === undefined) continue;
    parts.push(
      `<line class="road" data-edge="${esc(edge.id)}" ` +
        `x1="${proj.x(a.x)}" y1="${proj.y(a.y)}" x2="${proj.x(b.x)}" y2="${proj.y(b.y)}" ` +
        `stroke="#9aa2ad" stroke-width="3" />`,
    );
  }

  // active routes above the base roads
  for (const assignment of view.assignments) {
    const scenePts = routePath(assignment.route_to_scene, edgeById, nodeById, proj);
    if (scenePts.length > 0) {
      parts.push(
        `<polyline class="route route-scene" data-incident="${esc(assignment.incident)}" ` +
          `points="${scenePts}" fill="none" stroke="#d8452e" stroke-width="5" stroke-opacity="0.55" />`,
      );
    }
    const hospPts = routePath(assignment.route_to_hospital, edgeById, nodeById, proj);
    if (hospPts.length > 0) {
      parts.push(
        `<polyline class="route route-hospital" data-incident="${esc(assignment.incident)}" ` +
          `points="${hospPts}" fill="none" stroke="#4f6bd0" stroke-width="5" ` +
          `stroke-opacity="0.45" stroke-dasharray="8 6" />`,
      );
    }
  }

  // intersection nodes and hospitals
  for (const node of world.nodes) {
    parts.push(
      `<circle class="node" data-node="${esc(node.id)}" cx="${proj.x(node.x)}" cy="${proj.y(node.y)}" ` +
        `r="5" fill="#3a4250" />`,
      `<text class="node-label" x="${proj.x(node.x) + 7}" y="${proj.y(node.y) - 7}" ` +
        `font-size="11">${esc(node.id)}</text>`,
    );
  }
  for (const hospital of world.hospitals) {
    const node = nodeById.get(hospital.node);
    if (node === undefined) continue;
    parts.push(
      `<rect class="hospital" data-hospital="${esc(hospital.id)}" ` +
        `x="${proj.x(node.x) - 8}" y="${proj.y(node.y) - 8}" width="16" height="16" ` +
        `fill="#ffffff" stroke="#c43333" stroke-width="2" />`,
      `<text class="hospital-cross" x="${proj.x(node.x)}" y="${proj.y(node.y) + 4}" ` +
        `font-size="12" text-anchor="middle" fill="#c43333">H</text>`,
    );
  }

  // signal badges: one per controlled approach, near its stop line
  const controllerMode = new Map(view.controllers.map((c) => [c.id, c]));
  for (const edge of world.edges) {
    if (edge.stop_line === null) continue;
    const controller = controllerMode.get(edge.stop_line.controller);
    if (controller === undefined) continue;
    const a = nodeById.get(edge.from);
    const b = nodeById.get(edge.to);
    if (a === undefined || b === undefined) continue;
    const color = controller.approaches[edge.stop_line.approach];
    const bx = proj.x(a.x + (b.x - a.x) * 0.8);
    const by = proj.y(a.y + (b.y - a.y) * 0.8);
    const fill = color === "Green" ? "#2e9e5b" : "#c43333";
    const extended = controller.mode === "Extended" && color === "Green";
    parts.push(
      `<circle class="signal${extended ? " signal-extended" : ""}" ` +
        `data-controller="${esc(edge.stop_line.controller)}" data-approach="${esc(edge.stop_line.approach)}" ` +
        `data-state="${color ?? "Red"}" cx="${bx}" cy="${by}" r="6" ` +
        `fill="${fill}" stroke="#1c212a" stroke-width="1.5" />`,
    );
    if (extended) {
      // extension marker: ring around the held green
      parts.push(
        `<circle class="extension-marker" data-controller="${esc(edge.stop_line.controller)}" ` +
          `cx="${bx}" cy="${by}" r="10" fill="none" stroke="#2e9e5b" stroke-width="2" ` +
          `stroke-dasharray="3 3" />`,
      );
    }
  }

  // units on top, colored by status
  for (const unit of view.ambulances) {
    const pos = unitPosition(unit, edgeById, nodeById);
    const color = UNIT_COLORS[unit.status] ?? "#3a4250";
    parts.push(
      `<g class="unit" data-unit="${esc(unit.id)}" data-status="${esc(unit.status)}" ` +
        `transform="translate(${proj.x(pos.x)},${proj.y(pos.y)})">` +
        `<circle r="8" fill="${color}" stroke="#ffffff" stroke-width="2" />` +
        `<text y="4" font-size="9" text-anchor="middle" fill="#ffffff">A</text>` +
        `</g>`,
    );
  }

  parts.push("</svg>");
  return parts.join("\n");
}
