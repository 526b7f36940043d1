// Console view state: an authoritative /state snapshot plus an overlay
// built from events newer than the snapshot.
//
// Two invariants govern everything here:
//  - monotonicity: an event with seq <= cursor is never processed;
//  - derivation: the rendered view is a pure function of the last
//    snapshot and the events applied after it, so replaying the stream
//    reproduces the display and a fresh snapshot always wins.

import type {
  AssignmentView,
  ControllerView,
  DispatchPayload,
  IncidentView,
  SimEventRecord,
  StateResponse,
  UnitStatus,
  UnitView,
} from "./types.js";

export interface ActivityEntry {
  seq: number;
  t_s: number;
  kind: string;
  text: string;
}

export interface ConsoleView {
  t_s: number;
  running: boolean;
  rate: number;
  priority_enabled: boolean;
  ambulances: UnitView[];
  incidents: IncidentView[];
  assignments: AssignmentView[];
  controllers: ControllerView[];
}

interface Stamped<T> {
  seq: number;
  value: T;
}

const ACTIVITY_LIMIT = 50;

function describe(event: SimEventRecord): string {
  const p = event.payload as Record<string, string | number>;
  switch (event.kind) {
    case "IncidentCreated":
      return `incident ${p.incident} reported at ${p.node}`;
    case "Dispatch":
      return `${p.unit} assigned to ${p.incident} (eta ${Number(p.eta_s).toFixed(1)} s)`;
    case "Detection":
      return `${p.unit} detected ${p.distance_m} m from ${p.controller}: ${p.action}`;
    case "PhaseChange":
      return `${p.controller} -> ${p.phase} (${p.mode})`;
    case "StopLineCross":
      return `${p.unit} crossed the ${p.controller} stop line`;
    case "SceneArrival":
      return `${p.unit} on scene at ${p.incident} after ${Number(p.response_time_s).toFixed(1)} s`;
    case "HospitalArrival":
      return `${p.unit} delivered ${p.incident} to ${p.hospital}`;
  }
}

export class ConsoleStore {
  private snapshot: StateResponse;
  private cursor: number;
  private incidentOverlay = new Map<string, Stamped<IncidentView>>();
  private assignmentOverlay = new Map<string, Stamped<AssignmentView>>();
  private unitStatusOverlay = new Map<string, Stamped<UnitStatus>>();
  private controllerOverlay = new Map<string, Stamped<{ phase: string; mode: ControllerView["mode"] }>>();

  activity: ActivityEntry[] = [];
  toasts: string[] = [];
  /** Latest dispatch decision, shown with Accept / Override actions. */
  pendingDecision: DispatchPayload | null = null;
  selectedIncident: string | null = null;
  selectedUnit: string | null = null;

  constructor(initial: StateResponse) {
    this.snapshot = initial;
    this.cursor = initial.last_seq;
  }

  get eventCursor(): number {
    return this.cursor;
  }

  get world() {
    return this.snapshot.network;
  }

  /** Replace the authoritative snapshot; drop overlay entries it covers. */
  applySnapshot(state: StateResponse): void {
    this.snapshot = state;
    this.cursor = Math.max(this.cursor, state.last_seq);
    for (const overlay of [
      this.incidentOverlay,
      this.assignmentOverlay,
      this.unitStatusOverlay,
      this.controllerOverlay,
    ]) {
      for (const [key, entry] of overlay) {
        if (entry.seq <= state.last_seq) overlay.delete(key);
      }
    }
    if (this.pendingDecision !== null) {
      const assigned = state.assignments.some(
        (a) => a.incident === this.pendingDecision?.incident,
      );
      if (!assigned) this.pendingDecision = null; // assignment gone: decision stale
    }
  }

  /** Apply one event; returns false when it was at or behind the cursor. */
  applyEvent(event: SimEventRecord): boolean {
    if (event.seq <= this.cursor) return false;
    this.cursor = event.seq;
    this.activity.push({
      seq: event.seq,
      t_s: event.t_s,
      kind: event.kind,
      text: describe(event),
    });
    if (this.activity.length > ACTIVITY_LIMIT) {
      this.activity.splice(0, this.activity.length - ACTIVITY_LIMIT);
    }

    const p = event.payload as Record<string, never>;
    switch (event.kind) {
      case "IncidentCreated":
        this.incidentOverlay.set(p["incident"], {
          seq: event.seq,
          value: {
            id: p["incident"],
            node: p["node"],
            status: "Open",
            created_at_s: event.t_s,
          },
        });
        break;
      case "Dispatch": {
        const d = event.payload as unknown as DispatchPayload;
        this.assignmentOverlay.set(d.incident, {
          seq: event.seq,
          value: {
            incident: d.incident,
            unit: d.unit,
            hospital: d.hospital,
            manual_override: d.manual_override,
            decided_at_s: event.t_s,
            route_to_scene: [],
            route_to_hospital: [],
          },
        });
        this.setIncidentStatus(event.seq, d.incident, "Assigned");
        this.unitStatusOverlay.set(d.unit, { seq: event.seq, value: "EnRoute" });
        this.pendingDecision = d;
        break;
      }
      case "SceneArrival":
        this.unitStatusOverlay.set(p["unit"], { seq: event.seq, value: "OnScene" });
        break;
      case "HospitalArrival":
        this.unitStatusOverlay.set(p["unit"], { seq: event.seq, value: "AtHospital" });
        this.setIncidentStatus(event.seq, p["incident"], "Served");
        break;
      case "PhaseChange":
        this.controllerOverlay.set(p["controller"], {
          seq: event.seq,
          value: { phase: p["phase"], mode: p["mode"] },
        });
        break;
      case "Detection":
      case "StopLineCross":
        break; // activity feed only
    }
    return true;
  }

  private setIncidentStatus(seq: number, id: string, status: IncidentView["status"]): void {
    const known =
      this.incidentOverlay.get(id)?.value ??
      this.snapshot.incidents.find((i) => i.id === id);
    if (known !== undefined) {
      this.incidentOverlay.set(id, { seq, value: { ...known, status } });
    }
  }

  pushToast(message: string): void {
    this.toasts.push(message);
    if (this.toasts.length > 5) this.toasts.shift();
  }

  /** The rendered state: snapshot fields with newer event facts on top. */
  view(): ConsoleView {
    const incidents = new Map(this.snapshot.incidents.map((i) => [i.id, i]));
    for (const [id, entry] of this.incidentOverlay) incidents.set(id, entry.value);

    const assignments = new Map(this.snapshot.assignments.map((a) => [a.incident, a]));
    for (const [id, entry] of this.assignmentOverlay) {
      const prior = assignments.get(id);
      // keep snapshot route geometry when the overlay agrees on the unit
      const value =
        prior !== undefined && prior.unit === entry.value.unit
          ? { ...entry.value, route_to_scene: prior.route_to_scene, route_to_hospital: prior.route_to_hospital }
          : entry.value;
      assignments.set(id, value);
    }

    const ambulances = this.snapshot.ambulances.map((u) => {
      const overlay = this.unitStatusOverlay.get(u.id);
      return overlay === undefined ? u : { ...u, status: overlay.value };
    });

    const controllers = this.snapshot.controllers.map((c) => {
      const overlay = this.controllerOverlay.get(c.id);
      return overlay === undefined ? c : { ...c, ...overlay.value };
    });

    return {
      t_s: this.snapshot.t_s,
      running: this.snapshot.running,
      rate: this.snapshot.rate,
      priority_enabled: this.snapshot.priority_enabled,
      ambulances,
      incidents: [...incidents.values()].sort((a, b) => a.id.localeCompare(b.id)),
      assignments: [...assignments.values()].sort((a, b) =>
        a.incident.localeCompare(b.incident),
      ),
      controllers,
    };
  }
}
