"""Scenario files: JSON in, validated world out.

A scenario bundles the road network, signal plans, fleet, hospitals, and
scripted incidents, plus optional engine-config overrides and optional
camera fixtures that gate detections through the recognition pipeline.
Validation collects every problem with its JSON path instead of stopping
at the first, so a bad file is fixable in one pass.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields
from pathlib import Path

from .dispatch import Ambulance, AmbulanceStatus, Hospital
from .network import Edge, MapPosition, Node, RoadNetwork
from .pgm import PgmError, parse_pgm
from .recognition import (
    SOBEL_THRESHOLD_DEFAULT,
    TAU_PER_POINT_DEFAULT,
    NotRecognizable,
    Pattern,
    RecognitionError,
    recognize,
)
from .signals import Phase, PhasePlan, SignalError
from .sim import ScriptedIncident, SimConfig, Simulation

SCHEMA_VERSION = 1


@dataclass(frozen=True)
class ValidationIssue:
    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ScenarioInvalid(Exception):
    def __init__(self, issues: list[ValidationIssue]):
        self.issues = list(issues)
        super().__init__("; ".join(str(i) for i in self.issues))


@dataclass(frozen=True)
class Scenario:
    net: RoadNetwork
    plans: dict[str, PhasePlan]
    fleet: tuple[Ambulance, ...]
    hospitals: tuple[Hospital, ...]
    incidents: tuple[ScriptedIncident, ...]
    config: SimConfig
    camera_gate: dict[tuple[str, str], bool] = field(default_factory=dict)
    camera_results: dict[tuple[str, str], dict] = field(default_factory=dict)


def build_simulation(scenario: Scenario) -> Simulation:
    return Simulation(
        net=scenario.net,
        plans=dict(scenario.plans),
        fleet=list(scenario.fleet),
        hospitals=list(scenario.hospitals),
        scripted=list(scenario.incidents),
        config=scenario.config,
        camera_gate=dict(scenario.camera_gate),
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ScenarioInvalid([ValidationIssue("$", f"unreadable scenario: {exc}")])
    return parse_scenario(doc, base_dir=path.parent)


class _Check:
    """Issue collector with typed field accessors keyed by JSON path."""

    def __init__(self) -> None:
        self.issues: list[ValidationIssue] = []

    def add(self, path: str, message: str) -> None:
        self.issues.append(ValidationIssue(path=path, message=message))

    def field(self, doc: dict, key: str, kinds, path: str, required=True, default=None):
        if not isinstance(doc, dict) or key not in doc:
            if required:
                self.add(f"{path}.{key}", "missing required field")
            return default
        value = doc[key]
        if kinds is float and isinstance(value, int) and not isinstance(value, bool):
            return float(value)  # JSON has one number type; accept ints as floats
        if not isinstance(value, kinds) or isinstance(value, bool) and kinds is not bool:
            want = kinds.__name__ if isinstance(kinds, type) else "number"
            self.add(f"{path}.{key}", f"expected {want}, got {type(value).__name__}")
            return default
        return value

    def number(self, doc: dict, key: str, path: str, required=True, default=None):
        value = self.field(doc, key, (int, float), path, required, default)
        if isinstance(value, bool):
            self.add(f"{path}.{key}", "expected number, got bool")
            return default
        return float(value) if value is not None else default

    def items(self, doc: dict, key: str, path: str, required=True) -> list[tuple[str, object]]:
        value = self.field(doc, key, list, path, required, default=None)
        if value is None:
            return []
        return [(f"{path}.{key}[{i}]", item) for i, item in enumerate(value)]


def _parse_nodes(check: _Check, doc: dict) -> list[Node]:
    nodes: list[Node] = []
    seen: set[str] = set()
    for path, item in check.items(doc, "nodes", "$.network"):
        if not isinstance(item, dict):
            check.add(path, "expected object")
            continue
        nid = check.field(item, "id", str, path)
        x = check.number(item, "x", path)
        y = check.number(item, "y", path)
        if nid is None or x is None or y is None:
            continue
        if nid in seen:
            check.add(path, f"duplicate node id {nid}")
            continue
        seen.add(nid)
        nodes.append(Node(id=nid, x=x, y=y))
    return nodes


def _parse_edges(check: _Check, doc: dict, node_ids: set[str]) -> list[Edge]:
    edges: list[Edge] = []
    seen: set[str] = set()
    for path, item in check.items(doc, "edges", "$.network"):
        if not isinstance(item, dict):
            check.add(path, "expected object")
            continue
        eid = check.field(item, "id", str, path)
        from_node = check.field(item, "from", str, path)
        to_node = check.field(item, "to", str, path)
        length = check.number(item, "length_m", path)
        speed = check.number(item, "free_speed_mps", path)
        factor = check.number(item, "congestion_factor", path, required=False, default=1.0)
        stop_line = None
        if "stop_line" in item:
            sl = check.field(item, "stop_line", dict, path)
            if sl is not None:
                controller = check.field(sl, "controller", str, f"{path}.stop_line")
                approach = check.field(sl, "approach", str, f"{path}.stop_line")
                if controller is not None and approach is not None:
                    stop_line = (controller, approach)
        if None in (eid, from_node, to_node, length, speed, factor):
            continue
        if eid in seen:
            check.add(path, f"duplicate edge id {eid}")
            continue
        seen.add(eid)
        for which, ref in (("from", from_node), ("to", to_node)):
            if ref not in node_ids:
                check.add(f"{path}.{which}", f"unknown node {ref}")
        try:
            edges.append(Edge(
                id=eid, from_node=from_node, to_node=to_node, length_m=length,
                free_speed_mps=speed, congestion_factor=factor,
                stop_line_controller=stop_line,
            ))
        except ValueError as exc:
            check.add(path, str(exc))
    return edges


def _parse_controllers(check: _Check, doc: dict) -> dict[str, PhasePlan]:
    plans: dict[str, PhasePlan] = {}
    for path, item in check.items(doc, "controllers", "$", required=False):
        if not isinstance(item, dict):
            check.add(path, "expected object")
            continue
        cid = check.field(item, "id", str, path)
        intergreen = check.number(item, "intergreen_s", path, required=False, default=3.0)
        margin = check.number(item, "clearance_margin_s", path, required=False, default=1.0)
        ceiling = check.number(item, "extension_ceiling_s", path, required=False, default=300.0)
        phases: list[Phase] = []
        for ppath, pitem in check.items(item, "phases", path):
            if not isinstance(pitem, dict):
                check.add(ppath, "expected object")
                continue
            pid = check.field(pitem, "id", str, ppath)
            approaches = check.field(pitem, "approaches", list, ppath)
            g_min = check.number(pitem, "green_min_s", ppath)
            g_nom = check.number(pitem, "green_nominal_s", ppath)
            g_max = check.number(pitem, "green_max_s", ppath)
            if None in (pid, approaches, g_min, g_nom, g_max):
                continue
            if not all(isinstance(a, str) for a in approaches):
                check.add(f"{ppath}.approaches", "expected list of strings")
                continue
            try:
                phases.append(Phase(
                    id=pid, served_approaches=frozenset(approaches),
                    green_min_s=g_min, green_nominal_s=g_nom, green_max_s=g_max,
                ))
            except (ValueError, SignalError) as exc:
                check.add(ppath, str(exc))
        if cid is None:
            continue
        if cid in plans:
            check.add(path, f"duplicate controller id {cid}")
            continue
        try:
            plans[cid] = PhasePlan(
                phases=tuple(phases), intergreen_s=intergreen,
                clearance_margin_s=margin, extension_ceiling_s=ceiling,
            )
        except (ValueError, SignalError) as exc:
            check.add(path, str(exc))
    return plans


def _parse_fleet(check: _Check, doc: dict, edges: dict[str, Edge]) -> list[Ambulance]:
    fleet: list[Ambulance] = []
    seen: set[str] = set()
    for path, item in check.items(doc, "fleet", "$"):
        if not isinstance(item, dict):
            check.add(path, "expected object")
            continue
        uid = check.field(item, "id", str, path)
        edge = check.field(item, "edge", str, path)
        offset = check.number(item, "offset_m", path, required=False, default=0.0)
        speed = check.number(item, "speed_mps", path)
        if None in (uid, edge, offset, speed):
            continue
        if uid in seen:
            check.add(path, f"duplicate unit id {uid}")
            continue
        seen.add(uid)
        if edge not in edges:
            check.add(f"{path}.edge", f"unknown edge {edge}")
            continue
        if not 0.0 <= offset <= edges[edge].length_m:
            check.add(f"{path}.offset_m", f"offset {offset} outside edge {edge}")
            continue
        try:
            fleet.append(Ambulance(
                id=uid, status=AmbulanceStatus.FREE,
                position=MapPosition(edge=edge, offset_m=offset), speed_mps=speed,
            ))
        except ValueError as exc:
            check.add(path, str(exc))
    return fleet


def _parse_hospitals(check: _Check, doc: dict, node_ids: set[str]) -> list[Hospital]:
    hospitals: list[Hospital] = []
    seen: set[str] = set()
    for path, item in check.items(doc, "hospitals", "$"):
        if not isinstance(item, dict):
            check.add(path, "expected object")
            continue
        hid = check.field(item, "id", str, path)
        node = check.field(item, "node", str, path)
        if hid is None or node is None:
            continue
        if hid in seen:
            check.add(path, f"duplicate hospital id {hid}")
            continue
        seen.add(hid)
        if node not in node_ids:
            check.add(f"{path}.node", f"unknown node {node}")
            continue
        hospitals.append(Hospital(id=hid, location=node))
    return hospitals


def _parse_incidents(check: _Check, doc: dict, node_ids: set[str]) -> list[ScriptedIncident]:
    incidents: list[ScriptedIncident] = []
    seen: set[str] = set()
    last_t = None
    for path, item in check.items(doc, "incidents", "$", required=False):
        if not isinstance(item, dict):
            check.add(path, "expected object")
            continue
        iid = check.field(item, "id", str, path)
        node = check.field(item, "node", str, path)
        t_s = check.number(item, "t_s", path)
        if None in (iid, node, t_s):
            continue
        if iid in seen:
            check.add(path, f"duplicate incident id {iid}")
            continue
        seen.add(iid)
        if node not in node_ids:
            check.add(f"{path}.node", f"unknown node {node}")
            continue
        if last_t is not None and t_s < last_t:
            check.add(f"{path}.t_s", f"incident times must be non-decreasing ({t_s} after {last_t})")
            continue
        last_t = t_s
        try:
            incidents.append(ScriptedIncident(id=iid, node=node, t_s=t_s))
        except ValueError as exc:
            check.add(path, str(exc))
    return incidents


def _parse_config(check: _Check, doc: dict) -> SimConfig:
    overrides = check.field(doc, "config", dict, "$", required=False, default=None)
    if overrides is None:
        return SimConfig()
    allowed = {f.name for f in fields(SimConfig)}
    values: dict[str, object] = {}
    for key, value in overrides.items():
        if key not in allowed:
            check.add(f"$.config.{key}", "unknown config key")
            continue
        if key == "priority_enabled":
            if not isinstance(value, bool):
                check.add(f"$.config.{key}", "expected bool")
                continue
            values[key] = value
        elif key == "duration_s" and value is None:
            values[key] = None
        else:
            parsed = check.number(overrides, key, "$.config")
            if parsed is not None:
                values[key] = parsed
    try:
        return SimConfig(**values)
    except ValueError as exc:
        check.add("$.config", str(exc))
        return SimConfig()


def _load_pattern(check: _Check, spec: dict, path: str, base_dir: Path | None) -> Pattern | None:
    doc = spec
    if "path" in spec:
        rel = check.field(spec, "path", str, path)
        if rel is None:
            return None
        file = (base_dir / rel) if base_dir is not None else Path(rel)
        try:
            doc = json.loads(file.read_text())
        except (OSError, json.JSONDecodeError) as exc:
            check.add(f"{path}.path", f"unreadable pattern: {exc}")
            return None
    points = check.field(doc, "points", list, path)
    if points is None:
        return None
    cleaned = []
    for i, pt in enumerate(points):
        if (not isinstance(pt, list) or len(pt) != 2
                or not all(isinstance(c, int) and not isinstance(c, bool) for c in pt)):
            check.add(f"{path}.points[{i}]", "expected [x, y] integer pair")
            return None
        cleaned.append((pt[0], pt[1]))
    try:
        return Pattern.from_points(cleaned)
    except (ValueError, RecognitionError) as exc:
        check.add(f"{path}.points", str(exc))
        return None


def _parse_recognition(
    check: _Check, doc: dict, edges: dict[str, Edge], base_dir: Path | None
) -> tuple[dict[tuple[str, str], bool], dict[tuple[str, str], dict]]:
    section = check.field(doc, "recognition", dict, "$", required=False, default=None)
    if section is None:
        return {}, {}
    gated = check.field(section, "camera_gated_detection", bool, "$.recognition",
                        required=False, default=True)
    pattern_spec = check.field(section, "pattern", dict, "$.recognition")
    threshold = check.number(section, "sobel_threshold", "$.recognition",
                             required=False, default=float(SOBEL_THRESHOLD_DEFAULT))
    tau = check.number(section, "tau_per_point", "$.recognition",
                       required=False, default=TAU_PER_POINT_DEFAULT)
    pattern = None
    if pattern_spec is not None:
        pattern = _load_pattern(check, pattern_spec, "$.recognition.pattern", base_dir)
    approaches = {
        e.stop_line_controller for e in edges.values() if e.stop_line_controller
    }
    gate: dict[tuple[str, str], bool] = {}
    results: dict[tuple[str, str], dict] = {}
    for path, item in check.items(section, "frames", "$.recognition", required=False):
        if not isinstance(item, dict):
            check.add(path, "expected object")
            continue
        controller = check.field(item, "controller", str, path)
        approach = check.field(item, "approach", str, path)
        rel = check.field(item, "pgm", str, path)
        if None in (controller, approach, rel) or pattern is None:
            continue
        key = (controller, approach)
        if key not in approaches:
            check.add(path, f"no edge approaches {controller} via {approach}")
            continue
        file = (base_dir / rel) if base_dir is not None else Path(rel)
        try:
            image = parse_pgm(file.read_bytes())
        except (OSError, PgmError) as exc:
            check.add(f"{path}.pgm", f"unreadable frame: {exc}")
            continue
        try:
            match = recognize(image, pattern, sobel_threshold=int(threshold),
                              tau_per_point=tau)
            confirmed = match.is_ambulance
            results[key] = {
                "is_ambulance": confirmed,
                "dissimilarity": match.dissimilarity,
                "per_point": float(match.per_point),
                "translation": list(match.best_translation),
            }
        except NotRecognizable:
            confirmed = False
            results[key] = {"is_ambulance": False, "reason": "no edges extracted"}
        if gated:
            gate[key] = confirmed
    return gate, results


def parse_scenario(doc: object, base_dir: Path | None = None) -> Scenario:
    check = _Check()
    if not isinstance(doc, dict):
        raise ScenarioInvalid([ValidationIssue("$", "scenario must be a JSON object")])
    version = check.field(doc, "schema_version", int, "$")
    if version is not None and version != SCHEMA_VERSION:
        check.add("$.schema_version", f"unsupported version {version}, expected {SCHEMA_VERSION}")
    network_doc = check.field(doc, "network", dict, "$", default={})
    nodes = _parse_nodes(check, network_doc or {})
    node_ids = {n.id for n in nodes}
    edges = _parse_edges(check, network_doc or {}, node_ids)
    edge_map = {e.id: e for e in edges}
    plans = _parse_controllers(check, doc)
    for e in edges:
        if e.stop_line_controller is None:
            continue
        cid, approach = e.stop_line_controller
        if cid not in plans:
            check.add(f"$.network.edges({e.id}).stop_line.controller", f"unknown controller {cid}")
        else:
            served = {a for p in plans[cid].phases for a in p.served_approaches}
            if approach not in served:
                check.add(
                    f"$.network.edges({e.id}).stop_line.approach",
                    f"controller {cid} serves no approach {approach}",
                )
    fleet = _parse_fleet(check, doc, edge_map)
    hospitals = _parse_hospitals(check, doc, node_ids)
    incidents = _parse_incidents(check, doc, node_ids)
    config = _parse_config(check, doc)
    gate, camera_results = _parse_recognition(check, doc, edge_map, base_dir)
    if check.issues:
        raise ScenarioInvalid(check.issues)
    try:
        net = RoadNetwork(nodes=nodes, edges=edges)
    except ValueError as exc:
        raise ScenarioInvalid([ValidationIssue("$.network", str(exc))])
    return Scenario(
        net=net, plans=plans, fleet=tuple(fleet), hospitals=tuple(hospitals),
        incidents=tuple(incidents), config=config,
        camera_gate=gate, camera_results=camera_results,
    )
