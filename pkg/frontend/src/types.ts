// Wire types mirroring the gateway's JSON responses.

export interface NodeGeom {
  id: string;
  x: number;
  y: number;
}

export interface EdgeGeom {
  id: string;
  from: string;
  to: string;
  length_m: number;
  stop_line: { controller: string; approach: string } | null;
}

export interface WorldGeometry {
  nodes: NodeGeom[];
  edges: EdgeGeom[];
  hospitals: { id: string; node: string }[];
}

export type UnitStatus = "Free" | "EnRoute" | "OnScene" | "Transporting" | "AtHospital";
export type IncidentStatus = "Open" | "Assigned" | "Served";

export interface UnitView {
  id: string;
  status: UnitStatus;
  edge: string;
  offset_m: number;
  x: number;
  y: number;
  speed_mps: number;
  stopped: boolean;
}

export interface IncidentView {
  id: string;
  node: string;
  status: IncidentStatus;
  created_at_s: number;
}

export interface AssignmentView {
  incident: string;
  unit: string;
  hospital: string;
  manual_override: boolean;
  decided_at_s: number;
  route_to_scene: string[];
  route_to_hospital: string[];
}

export interface ControllerView {
  id: string;
  phase: string;
  mode: "Normal" | "Extended" | "PreemptPending" | "Intergreen";
  elapsed_s: number;
  remaining_green_s: number;
  approaches: Record<string, "Green" | "Red">;
}

export interface StateResponse {
  t_s: number;
  priority_enabled: boolean;
  ambulances: UnitView[];
  incidents: IncidentView[];
  assignments: AssignmentView[];
  controllers: ControllerView[];
  last_seq: number;
  running: boolean;
  rate: number;
  network: WorldGeometry;
}

export type EventKind =
  | "Detection"
  | "PhaseChange"
  | "Dispatch"
  | "StopLineCross"
  | "SceneArrival"
  | "HospitalArrival"
  | "IncidentCreated";

export interface SimEventRecord {
  seq: number;
  t_s: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export interface DispatchPayload {
  incident: string;
  unit: string;
  recommended_unit: string;
  hospital: string;
  eta_s: number;
  candidates: Record<string, number>;
  manual_override: boolean;
}

export interface CommandResult {
  ok: boolean;
  client: string;
  seq: number;
  [extra: string]: unknown;
}

export interface CommandRejection {
  status: number;
  error: string;
}
