"""Fixed-step deterministic simulation of dispatch, driving, and signals.

Each step runs in a fixed order: due timers, scripted injections, dispatch
of open incidents, controller ticks, then vehicle movement. Controllers tick
before vehicles move, so a detection fired while moving sees the controller
clock already at the step's end time. All iteration is sorted and all state
is explicit, which makes a rerun of the same scenario reproduce the event
log byte for byte.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from enum import Enum

from . import dispatch as dsp
from . import signals as sig
from .network import MapPosition, NoRoute, RoadNetwork, Route, position_xy

DT_DEFAULT_S = 0.5
DETECTION_DISTANCE_DEFAULT_M = 150.0
SCENE_SERVICE_DEFAULT_S = 120.0


class SimError(Exception):
    pass


class ZeroSpeed(SimError):
    pass


class CommandRejected(SimError):
    """A console command that must not change state (with the reason)."""


class EventKind(str, Enum):
    DETECTION = "Detection"
    PHASE_CHANGE = "PhaseChange"
    DISPATCH = "Dispatch"
    STOP_LINE_CROSS = "StopLineCross"
    SCENE_ARRIVAL = "SceneArrival"
    HOSPITAL_ARRIVAL = "HospitalArrival"
    INCIDENT_CREATED = "IncidentCreated"


@dataclass(frozen=True)
class SimConfig:
    dt_s: float = DT_DEFAULT_S
    duration_s: float | None = None
    priority_enabled: bool = True
    detection_distance_m: float = DETECTION_DISTANCE_DEFAULT_M
    scene_service_s: float = SCENE_SERVICE_DEFAULT_S
    hospital_turnaround_s: float = 0.0

    def __post_init__(self) -> None:
        if self.dt_s <= 0:
            raise ValueError("dt_s must be > 0")
        if self.detection_distance_m <= 0:
            raise ValueError("detection_distance_m must be > 0")


@dataclass(frozen=True)
class ScriptedIncident:
    id: str
    node: str
    t_s: float

    def __post_init__(self) -> None:
        if self.t_s < 0:
            raise ValueError(f"incident {self.id}: t_s must be >= 0")


@dataclass(frozen=True)
class SimEvent:
    seq: int
    t_s: float
    kind: EventKind
    payload: dict

    def to_dict(self) -> dict:
        return {"seq": self.seq, "t_s": self.t_s, "kind": self.kind.value,
                "payload": self.payload}

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


def canonical_json(doc) -> str:
    return json.dumps(doc, sort_keys=True, separators=(",", ":"))


@dataclass
class VehicleKinematics:
    """Progress of one driving leg; edge-local offset avoids float drift."""

    route: Route
    purpose: str  # "to_scene" | "to_hospital"
    edge_index: int = 0
    edge_offset_m: float = 0.0
    route_offset_m: float = 0.0
    speed_mps: float = 0.0
    stopped: bool = False

    def at_route_end(self) -> bool:
        if not self.route.edges:
            return True
        return (
            self.edge_index == len(self.route.edges) - 1
            and self.edge_offset_m >= self.route.edges[-1].length_m
        )


def predict_t_d(v: VehicleKinematics, distance_m: float) -> float:
    """Constant-speed prediction of the time to reach the stop line."""
    if v.stopped or v.speed_mps <= 0:
        raise ZeroSpeed("cannot predict arrival for a stopped vehicle")
    return distance_m / v.speed_mps


@dataclass(frozen=True)
class MetricsReport:
    duration_s: float
    priority_enabled: bool
    response_times_s: dict[str, float]
    stopped_s: dict[str, float]
    stopped_by_controller_s: dict[str, dict[str, float]]
    extensions_granted: int
    preemptions: int
    incidents_served: int

    def to_dict(self) -> dict:
        return {
            "duration_s": self.duration_s,
            "priority_enabled": self.priority_enabled,
            "response_times_s": dict(sorted(self.response_times_s.items())),
            "stopped_s": dict(sorted(self.stopped_s.items())),
            "stopped_by_controller_s": {
                unit: dict(sorted(per.items()))
                for unit, per in sorted(self.stopped_by_controller_s.items())
            },
            "extensions_granted": self.extensions_granted,
            "preemptions": self.preemptions,
            "incidents_served": self.incidents_served,
        }

    def to_json(self) -> str:
        return canonical_json(self.to_dict())


class Simulation:
    """Single-owner world; the gateway only ever reads snapshot() output."""

    def __init__(
        self,
        net: RoadNetwork,
        plans: dict[str, sig.PhasePlan],
        fleet: list[dsp.Ambulance],
        hospitals: list[dsp.Hospital],
        scripted: list[ScriptedIncident] = (),
        config: SimConfig = SimConfig(),
        camera_gate: dict[tuple[str, str], bool] | None = None,
    ):
        self.net = net
        self.plans = dict(sorted(plans.items()))
        self.controller_states = {cid: sig.initial_state(p) for cid, p in self.plans.items()}
        self.fleet = {a.id: a for a in fleet}
        self.hospitals = list(hospitals)
        self.config = config
        self.camera_gate = camera_gate or {}
        for e in net.edges.values():
            if e.stop_line_controller is not None:
                cid, approach = e.stop_line_controller
                if cid not in self.plans:
                    raise SimError(f"edge {e.id} references unknown controller {cid}")
                self.plans[cid].phase_for_approach(approach)  # approach must be served

        self.t_s = 0.0
        self.events: list[SimEvent] = []
        self._seq = 0
        self.incidents: dict[str, dsp.Incident] = {}
        self.assignments: dict[str, dsp.Assignment] = {}
        self._unit_incident: dict[str, str] = {}
        self.kinematics: dict[str, VehicleKinematics] = {}
        self._scripted = sorted(scripted, key=lambda s: (s.t_s, s.id))
        self._next_scripted = 0
        self._open_order: list[str] = []
        self._detected: set[tuple[str, str, str]] = set()
        self._depart_at: dict[str, float] = {}
        self._free_at: dict[str, float] = {}
        self._injected_counter = 0

        self.stopped_s: dict[str, float] = {a: 0.0 for a in self.fleet}
        self.stopped_by_controller_s: dict[str, dict[str, float]] = {}
        self.extensions_granted = 0
        self.preemptions = 0
        self.response_times_s: dict[str, float] = {}

    # -- event plumbing --------------------------------------------------

    def _emit(self, t_s: float, kind: EventKind, payload: dict) -> None:
        self._seq += 1
        self.events.append(SimEvent(seq=self._seq, t_s=t_s, kind=kind, payload=payload))

    # -- commands (applied between steps) --------------------------------

    def inject_incident(self, node: str, incident_id: str | None = None) -> str:
        if node not in self.net.nodes:
            raise CommandRejected(f"unknown node {node}")
        if incident_id is None:
            self._injected_counter += 1
            incident_id = f"inc-{self._injected_counter:04d}"
        if incident_id in self.incidents:
            raise CommandRejected(f"incident id {incident_id} already used")
        self.incidents[incident_id] = dsp.Incident(
            id=incident_id, location=node, created_at_s=self.t_s
        )
        self._open_order.append(incident_id)
        self._emit(self.t_s, EventKind.INCIDENT_CREATED,
                   {"incident": incident_id, "node": node})
        return incident_id

    def override_assignment(self, incident_id: str, unit_id: str) -> None:
        """Dispatcher override: reassign an incident to a chosen Free unit."""
        incident = self.incidents.get(incident_id)
        if incident is None:
            raise CommandRejected(f"unknown incident {incident_id}")
        if incident.status is dsp.IncidentStatus.SERVED:
            raise CommandRejected(f"incident {incident_id} is already served")
        unit = self.fleet.get(unit_id)
        if unit is None:
            raise CommandRejected(f"unknown unit {unit_id}")
        if unit.status is not dsp.AmbulanceStatus.FREE:
            raise CommandRejected(f"unit {unit_id} is {unit.status.value}, not Free")
        previous = self.assignments.get(incident_id)
        if previous is not None:
            held = self.fleet[previous.ambulance]
            if held.status is not dsp.AmbulanceStatus.EN_ROUTE:
                raise CommandRejected(
                    f"incident {incident_id} is past the en-route stage"
                )
            self._cancel_leg(previous.ambulance)
        try:
            self._assign(incident, unit_id, manual_override=True)
        except (NoRoute, dsp.DispatchError) as exc:
            raise CommandRejected(str(exc)) from exc

    # -- assignment and legs ----------------------------------------------

    def _assign(self, incident: dsp.Incident, unit_id: str, manual_override: bool) -> None:
        unit = self.fleet[unit_id]
        eta_s, route = dsp.predicted_time_to(self.net, unit, incident.location)
        hospital_id, hospital_route = dsp.select_hospital(
            incident.location, self.hospitals, self.net
        )
        candidates = {
            uid: t for uid, t, _ in dsp.evaluate_fleet(incident, list(self.fleet.values()), self.net)
        }
        recommended = min(candidates.items(), key=lambda kv: (kv[1], kv[0]))[0]
        self.assignments[incident.id] = dsp.Assignment(
            incident=incident.id,
            ambulance=unit_id,
            route_to_scene=route,
            hospital=hospital_id,
            route_to_hospital=hospital_route,
            decided_at_s=self.t_s,
            manual_override=manual_override,
        )
        self._unit_incident[unit_id] = incident.id
        self.incidents[incident.id] = replace(incident, status=dsp.IncidentStatus.ASSIGNED)
        self.fleet[unit_id] = replace(unit, status=dsp.AmbulanceStatus.EN_ROUTE)
        if incident.id in self._open_order:
            self._open_order.remove(incident.id)
        self._emit(self.t_s, EventKind.DISPATCH, {
            "incident": incident.id,
            "unit": unit_id,
            "recommended_unit": recommended,
            "hospital": hospital_id,
            "eta_s": eta_s,
            "candidates": dict(sorted(candidates.items())),
            "manual_override": manual_override,
        })
        self._start_leg(unit_id, route, "to_scene")

    def _start_leg(self, unit_id: str, route: Route, purpose: str) -> None:
        self._detected = {k for k in self._detected if k[0] != unit_id}
        pos = self.fleet[unit_id].position
        here = self.net.edges[pos.edge]
        if 0.0 < pos.offset_m < here.length_m:
            # a unit parked mid-edge finishes that edge before the routed path
            leg = Route.from_edges((here,) + route.edges)
            kin = VehicleKinematics(
                route=leg, purpose=purpose,
                edge_offset_m=pos.offset_m, route_offset_m=pos.offset_m,
            )
        else:
            kin = VehicleKinematics(route=route, purpose=purpose)
        if kin.route.edges:
            kin.speed_mps = self._edge_speed(unit_id, kin.route.edges[kin.edge_index])
            self.kinematics[unit_id] = kin
            self._check_detection(unit_id, self.t_s)
        else:
            self.kinematics[unit_id] = kin
            self._complete_leg(unit_id, self.t_s)

    def _cancel_leg(self, unit_id: str) -> None:
        """Return an en-route unit to Free where it currently stands."""
        kin = self.kinematics.pop(unit_id, None)
        unit = self.fleet[unit_id]
        position = unit.position
        if kin is not None and kin.route.edges:
            edge = kin.route.edges[kin.edge_index]
            position = MapPosition(edge=edge.id, offset_m=kin.edge_offset_m)
        self.fleet[unit_id] = replace(
            unit, status=dsp.AmbulanceStatus.FREE, position=position
        )
        incident_id = self._unit_incident.pop(unit_id, None)
        if incident_id is not None:
            self.assignments.pop(incident_id, None)
            incident = self.incidents[incident_id]
            self.incidents[incident_id] = replace(incident, status=dsp.IncidentStatus.OPEN)
            if incident_id not in self._open_order:
                self._open_order.append(incident_id)
        # release any priority or queue slot the unit still holds
        for cid in self.plans:
            self.controller_states[cid] = sig.on_stop_line_crossed(
                self.controller_states[cid], self.plans[cid], unit_id
            )
        self._detected = {k for k in self._detected if k[0] != unit_id}

    def _edge_speed(self, unit_id: str, edge) -> float:
        """A unit drives at cruise speed but no faster than traffic allows."""
        effective = edge.free_speed_mps / edge.congestion_factor
        return min(self.fleet[unit_id].speed_mps, effective)

    def _park(self, unit_id: str, kin: VehicleKinematics) -> MapPosition:
        if kin.route.edges:
            last = kin.route.edges[-1]
            return MapPosition(edge=last.id, offset_m=last.length_m)
        return self.fleet[unit_id].position

    def _complete_leg(self, unit_id: str, t_s: float) -> None:
        kin = self.kinematics.pop(unit_id)
        incident_id = self._unit_incident[unit_id]
        incident = self.incidents[incident_id]
        unit = replace(self.fleet[unit_id], position=self._park(unit_id, kin))
        if kin.purpose == "to_scene":
            response = t_s - incident.created_at_s
            self.response_times_s[incident_id] = response
            self._emit(t_s, EventKind.SCENE_ARRIVAL, {
                "unit": unit_id, "incident": incident_id, "response_time_s": response,
            })
            unit, incident = dsp.advance(unit, incident, dsp.LifecycleEvent.ARRIVED_AT_SCENE)
            self._depart_at[unit_id] = t_s + self.config.scene_service_s
        else:
            assignment = self.assignments[incident_id]
            self._emit(t_s, EventKind.HOSPITAL_ARRIVAL, {
                "unit": unit_id, "incident": incident_id, "hospital": assignment.hospital,
            })
            unit, incident = dsp.advance(unit, incident, dsp.LifecycleEvent.ARRIVED_AT_HOSPITAL)
            self._free_at[unit_id] = t_s + self.config.hospital_turnaround_s
        self.fleet[unit_id] = unit
        self.incidents[incident_id] = incident

    # -- step phases -------------------------------------------------------

    def _process_timers(self, t_s: float) -> None:
        for unit_id in sorted(self._depart_at):
            if self._depart_at[unit_id] <= t_s:
                del self._depart_at[unit_id]
                incident_id = self._unit_incident[unit_id]
                unit, incident = dsp.advance(
                    self.fleet[unit_id], self.incidents[incident_id],
                    dsp.LifecycleEvent.DEPARTED_SCENE,
                )
                self.fleet[unit_id] = unit
                self.incidents[incident_id] = incident
                self._start_leg(unit_id, self.assignments[incident_id].route_to_hospital,
                                "to_hospital")
        for unit_id in sorted(self._free_at):
            if self._free_at[unit_id] <= t_s:
                del self._free_at[unit_id]
                incident_id = self._unit_incident.pop(unit_id)
                unit, incident = dsp.advance(
                    self.fleet[unit_id], self.incidents[incident_id],
                    dsp.LifecycleEvent.RETURNED_FREE,
                )
                self.fleet[unit_id] = unit
                self.incidents[incident_id] = incident

    def _inject_scripted(self, t_s: float) -> None:
        while (
            self._next_scripted < len(self._scripted)
            and self._scripted[self._next_scripted].t_s <= t_s
        ):
            s = self._scripted[self._next_scripted]
            self._next_scripted += 1
            self.incidents[s.id] = dsp.Incident(id=s.id, location=s.node, created_at_s=t_s)
            self._open_order.append(s.id)
            self._emit(t_s, EventKind.INCIDENT_CREATED, {"incident": s.id, "node": s.node})

    def _dispatch_open(self) -> None:
        for incident_id in list(self._open_order):
            incident = self.incidents[incident_id]
            try:
                unit_id, _ = dsp.select_ambulance(
                    incident, list(self.fleet.values()), self.net
                )
                self._assign(incident, unit_id, manual_override=False)
            except (dsp.NoFreeAmbulance, NoRoute):
                continue  # retried next step

    def _tick_controllers(self, t_end: float) -> None:
        for cid in self.plans:
            before = self.controller_states[cid]
            after, _ = sig.tick(before, self.plans[cid], self.config.dt_s)
            self.controller_states[cid] = after
            if (before.current_phase, before.mode) != (after.current_phase, after.mode):
                self._emit(t_end, EventKind.PHASE_CHANGE, {
                    "controller": cid,
                    "phase": after.current_phase,
                    "mode": after.mode.value,
                })

    def _check_detection(self, unit_id: str, t_s: float) -> None:
        kin = self.kinematics.get(unit_id)
        if kin is None or not kin.route.edges:
            return
        edge = kin.route.edges[kin.edge_index]
        if edge.stop_line_controller is None:
            return
        cid, approach = edge.stop_line_controller
        key = (unit_id, cid, approach)
        if key in self._detected:
            return
        distance = edge.length_m - kin.edge_offset_m
        if distance > self.config.detection_distance_m:
            return
        self._detected.add(key)
        action = "none"
        t_d: float | None = None
        if distance <= 0:
            action = "at_line"
        elif self.camera_gate.get((cid, approach), True) is False:
            action = "camera_rejected"
        elif not self.config.priority_enabled:
            action = "priority_disabled"
        else:
            t_d = predict_t_d(kin, distance)
            plan = self.plans[cid]
            before = self.controller_states[cid]
            request = sig.PriorityRequest(
                vehicle=unit_id, approach=approach, t_d_s=t_d, issued_at_s=t_s
            )
            try:
                after = sig.on_detection(before, plan, request)
            except sig.PriorityConflict:
                after, action = before, "conflict"
            else:
                action = self._classify_grant(before, after, unit_id)
            self.controller_states[cid] = after
        self._emit(t_s, EventKind.DETECTION, {
            "unit": unit_id, "controller": cid, "approach": approach,
            "distance_m": distance, "t_d_s": t_d, "action": action,
        })

    def _classify_grant(
        self, before: sig.ControllerState, after: sig.ControllerState, unit_id: str
    ) -> str:
        holder = after.active_priority
        if holder is None or holder.vehicle != unit_id:
            return "queued"
        if after.mode is sig.Mode.EXTENDED and before.mode is not sig.Mode.EXTENDED:
            self.extensions_granted += 1
            return "extension"
        if after.mode is sig.Mode.PREEMPT_PENDING and before.mode is not sig.Mode.PREEMPT_PENDING:
            self.preemptions += 1
            return "preemption"
        if after.mode is sig.Mode.INTERGREEN and after.upcoming_phase != before.upcoming_phase:
            self.preemptions += 1
            return "preemption"
        return "within_green"

    def _signal_color(self, cid: str, approach: str) -> sig.Color:
        return sig.signals(self.controller_states[cid], self.plans[cid])[approach]

    def _move_vehicle(self, unit_id: str, t_end: float) -> None:
        kin = self.kinematics[unit_id]
        edge = kin.route.edges[kin.edge_index]
        if kin.stopped:
            cid, approach = edge.stop_line_controller
            if self._signal_color(cid, approach) is sig.Color.RED:
                self.stopped_s[unit_id] += self.config.dt_s
                per = self.stopped_by_controller_s.setdefault(unit_id, {})
                per[cid] = per.get(cid, 0.0) + self.config.dt_s
                return
            kin.stopped = False
        remaining = self.config.dt_s
        while True:
            edge = kin.route.edges[kin.edge_index]
            at_end = kin.edge_offset_m >= edge.length_m
            if at_end:
                if edge.stop_line_controller is not None:
                    cid, approach = edge.stop_line_controller
                    if self._signal_color(cid, approach) is sig.Color.RED:
                        kin.stopped = True
                        kin.speed_mps = 0.0
                        return
                    self._emit(t_end, EventKind.STOP_LINE_CROSS, {
                        "unit": unit_id, "controller": cid, "approach": approach,
                    })
                    self.controller_states[cid] = sig.on_stop_line_crossed(
                        self.controller_states[cid], self.plans[cid], unit_id
                    )
                if kin.edge_index == len(kin.route.edges) - 1:
                    self._complete_leg(unit_id, t_end)
                    return
                kin.edge_index += 1
                kin.edge_offset_m = 0.0
                kin.route_offset_m = sum(
                    e.length_m for e in kin.route.edges[: kin.edge_index]
                )
                self._check_detection(unit_id, t_end)
                continue
            if remaining <= 0:
                return
            speed = self._edge_speed(unit_id, edge)
            kin.speed_mps = speed
            to_end = edge.length_m - kin.edge_offset_m
            step_m = speed * remaining
            if step_m >= to_end:
                kin.edge_offset_m = edge.length_m
                kin.route_offset_m += to_end
                remaining -= to_end / speed
            else:
                kin.edge_offset_m += step_m
                kin.route_offset_m += step_m
                remaining = 0.0
            self._check_detection(unit_id, t_end)

    # -- the step and the run ---------------------------------------------

    def step(self) -> list[SimEvent]:
        first_new = len(self.events)
        t0 = self.t_s
        t1 = t0 + self.config.dt_s
        self._process_timers(t0)
        self._inject_scripted(t0)
        self._dispatch_open()
        self._tick_controllers(t1)
        for unit_id in sorted(self.kinematics):
            self._move_vehicle(unit_id, t1)
        self.t_s = t1
        return self.events[first_new:]

    def _quiescent(self) -> bool:
        if self._next_scripted < len(self._scripted):
            return False
        if self._depart_at or self._free_at or self.kinematics:
            return False
        if any(a.status is not dsp.AmbulanceStatus.FREE for a in self.fleet.values()):
            return False
        # remaining open incidents are unserveable with the whole fleet free
        return all(
            i.status is not dsp.IncidentStatus.ASSIGNED for i in self.incidents.values()
        )

    def run(self) -> MetricsReport:
        if self.config.duration_s is not None:
            while self.t_s < self.config.duration_s:
                self.step()
        else:
            while True:
                self.step()
                if self._quiescent():
                    break
        return self.report()

    def report(self) -> MetricsReport:
        served = sum(
            1 for i in self.incidents.values() if i.status is dsp.IncidentStatus.SERVED
        )
        return MetricsReport(
            duration_s=self.t_s,
            priority_enabled=self.config.priority_enabled,
            response_times_s=dict(self.response_times_s),
            stopped_s=dict(self.stopped_s),
            stopped_by_controller_s={
                u: dict(per) for u, per in self.stopped_by_controller_s.items()
            },
            extensions_granted=self.extensions_granted,
            preemptions=self.preemptions,
            incidents_served=served,
        )

    def event_log_lines(self) -> list[str]:
        return [e.to_json() for e in self.events]

    def snapshot(self) -> dict:
        ambulances = []
        for uid in sorted(self.fleet):
            unit = self.fleet[uid]
            kin = self.kinematics.get(uid)
            if kin is not None and kin.route.edges:
                edge = kin.route.edges[kin.edge_index]
                pos = MapPosition(edge=edge.id, offset_m=kin.edge_offset_m)
            else:
                pos = unit.position
            x, y = position_xy(self.net, pos)
            ambulances.append({
                "id": uid, "status": unit.status.value,
                "edge": pos.edge, "offset_m": pos.offset_m,
                "x": x, "y": y,
                "speed_mps": kin.speed_mps if kin else 0.0,
                "stopped": kin.stopped if kin else False,
            })
        controllers = []
        for cid in self.plans:
            state = self.controller_states[cid]
            colors = sig.signals(state, self.plans[cid])
            controllers.append({
                "id": cid,
                "phase": state.current_phase,
                "mode": state.mode.value,
                "elapsed_s": state.phase_elapsed_s,
                "remaining_green_s": state.remaining_green_s,
                "approaches": {a: c.value for a, c in sorted(colors.items())},
            })
        return {
            "t_s": self.t_s,
            "priority_enabled": self.config.priority_enabled,
            "ambulances": ambulances,
            "incidents": [
                {
                    "id": i.id, "node": i.location, "status": i.status.value,
                    "created_at_s": i.created_at_s,
                }
                for _, i in sorted(self.incidents.items())
            ],
            "assignments": [
                {
                    "incident": a.incident, "unit": a.ambulance, "hospital": a.hospital,
                    "manual_override": a.manual_override, "decided_at_s": a.decided_at_s,
                    "route_to_scene": [e.id for e in a.route_to_scene.edges],
                    "route_to_hospital": [e.id for e in a.route_to_hospital.edges],
                }
                for _, a in sorted(self.assignments.items())
            ],
            "controllers": controllers,
            "last_seq": self._seq,
        }
