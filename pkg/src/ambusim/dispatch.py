"""Incident intake, nearest-free-unit selection, and the ambulance lifecycle.

Selection minimizes predicted travel time, never distance. Predictions come
from the same arc costs the router uses, so the chosen unit and the chosen
route can never disagree.
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from enum import Enum

from .network import (
    MapPosition,
    NoRoute,
    RoadNetwork,
    Route,
    edge_travel_time,
    shortest_path,
)


class DispatchError(Exception):
    """Base class for dispatch failures."""


class NoFreeAmbulance(DispatchError):
    pass


class IllegalTransition(DispatchError):
    pass


class AmbulanceStatus(str, Enum):
    FREE = "Free"
    EN_ROUTE = "EnRoute"
    ON_SCENE = "OnScene"
    TRANSPORTING = "Transporting"
    AT_HOSPITAL = "AtHospital"


class IncidentStatus(str, Enum):
    OPEN = "Open"
    ASSIGNED = "Assigned"
    SERVED = "Served"


class LifecycleEvent(str, Enum):
    ARRIVED_AT_SCENE = "ArrivedAtScene"
    DEPARTED_SCENE = "DepartedScene"
    ARRIVED_AT_HOSPITAL = "ArrivedAtHospital"
    RETURNED_FREE = "ReturnedFree"


@dataclass(frozen=True)
class Ambulance:
    id: str
    status: AmbulanceStatus
    position: MapPosition
    speed_mps: float

    def __post_init__(self) -> None:
        if self.speed_mps <= 0:
            raise ValueError(f"ambulance {self.id}: speed_mps must be > 0")


@dataclass(frozen=True)
class Incident:
    id: str
    location: str
    created_at_s: float
    status: IncidentStatus = IncidentStatus.OPEN


@dataclass(frozen=True)
class Hospital:
    id: str
    location: str


@dataclass(frozen=True)
class Assignment:
    incident: str
    ambulance: str
    route_to_scene: Route
    hospital: str
    route_to_hospital: Route
    decided_at_s: float
    manual_override: bool = False


def predicted_time_to(net: RoadNetwork, ambulance: Ambulance, dest: str) -> tuple[float, Route]:
    """Predicted seconds from the unit's position to ``dest``, with the route.

    A unit parked mid-edge must finish that edge first; the returned Route
    starts at the node the unit will reach (its position node), and the
    residual edge time is folded into the prediction.
    """
    pos = ambulance.position
    edge = net.edges[pos.edge]
    if pos.offset_m == 0.0:
        start, residual = edge.from_node, 0.0
    elif pos.offset_m == edge.length_m:
        start, residual = edge.to_node, 0.0
    else:
        start = edge.to_node
        residual = edge_travel_time(edge) * (edge.length_m - pos.offset_m) / edge.length_m
    route = shortest_path(net, start, dest)
    return residual + route.total_time_s, route


def evaluate_fleet(
    incident: Incident, fleet: list[Ambulance], net: RoadNetwork
) -> list[tuple[str, float, Route]]:
    """All Free units that can reach the scene, fastest first, ties by id."""
    ranked: list[tuple[float, str, Route]] = []
    for unit in sorted(fleet, key=lambda a: a.id):
        if unit.status is not AmbulanceStatus.FREE:
            continue
        try:
            t, route = predicted_time_to(net, unit, incident.location)
        except NoRoute:
            continue
        ranked.append((t, unit.id, route))
    ranked.sort(key=lambda r: (r[0], r[1]))
    return [(uid, t, route) for t, uid, route in ranked]


def select_ambulance(
    incident: Incident, fleet: list[Ambulance], net: RoadNetwork
) -> tuple[str, Route]:
    """Nearest free unit by predicted travel time; ties go to the lowest id."""
    if not any(a.status is AmbulanceStatus.FREE for a in fleet):
        raise NoFreeAmbulance(f"no free unit for incident {incident.id}")
    ranked = evaluate_fleet(incident, fleet, net)
    if not ranked:
        raise NoRoute(f"no free unit can reach {incident.location}")
    uid, _, route = ranked[0]
    return uid, route


def select_hospital(
    scene: str, hospitals: list[Hospital], net: RoadNetwork
) -> tuple[str, Route]:
    """Time-nearest hospital from the scene; ties go to the lowest id."""
    if not hospitals:
        raise ValueError("no hospitals configured")
    best: tuple[float, str, Route] | None = None
    for h in sorted(hospitals, key=lambda h: h.id):
        try:
            route = shortest_path(net, scene, h.location)
        except NoRoute:
            continue
        if best is None or route.total_time_s < best[0]:
            best = (route.total_time_s, h.id, route)
    if best is None:
        raise NoRoute(f"no hospital reachable from {scene}")
    return best[1], best[2]


_TRANSITIONS: dict[LifecycleEvent, tuple[AmbulanceStatus, AmbulanceStatus]] = {
    LifecycleEvent.ARRIVED_AT_SCENE: (AmbulanceStatus.EN_ROUTE, AmbulanceStatus.ON_SCENE),
    LifecycleEvent.DEPARTED_SCENE: (AmbulanceStatus.ON_SCENE, AmbulanceStatus.TRANSPORTING),
    LifecycleEvent.ARRIVED_AT_HOSPITAL: (AmbulanceStatus.TRANSPORTING, AmbulanceStatus.AT_HOSPITAL),
    LifecycleEvent.RETURNED_FREE: (AmbulanceStatus.AT_HOSPITAL, AmbulanceStatus.FREE),
}


def advance(
    ambulance: Ambulance, incident: Incident, event: LifecycleEvent
) -> tuple[Ambulance, Incident]:
    """One step along Free > EnRoute > OnScene > Transporting > AtHospital > Free.

    Positions are owned by the engine: by the time RETURNED_FREE fires the
    unit is already parked at the hospital, so only statuses change here.
    """
    required, target = _TRANSITIONS[event]
    if ambulance.status is not required:
        raise IllegalTransition(f"{ambulance.id} is {ambulance.status.value}, not {required.value}")
    new_unit = replace(ambulance, status=target)
    new_incident = incident
    if event is LifecycleEvent.RETURNED_FREE:
        new_incident = replace(incident, status=IncidentStatus.SERVED)
    return new_unit, new_incident
