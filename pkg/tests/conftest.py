"""Shared strategies and the acceptance-summary reporting hook."""

from hypothesis import strategies as st

from ambusim.network import Edge, Node, RoadNetwork


@st.composite
def small_networks(draw):
    """Random directed networks with at most 7 nodes and 12 edges."""
    n = draw(st.integers(min_value=2, max_value=7))
    ids = [f"n{i}" for i in range(n)]
    nodes = [
        Node(id=i, x=draw(st.integers(0, 1000)), y=draw(st.integers(0, 1000)))
        for i in ids
    ]
    n_edges = draw(st.integers(min_value=1, max_value=12))
    edges = []
    for k in range(n_edges):
        a, b = draw(st.tuples(st.sampled_from(ids), st.sampled_from(ids)))
        if a == b:
            continue
        edges.append(Edge(
            id=f"e{k}",
            from_node=a,
            to_node=b,
            length_m=draw(st.sampled_from([50.0, 100.0, 150.0, 300.0])),
            free_speed_mps=draw(st.sampled_from([5.0, 10.0, 15.0])),
            congestion_factor=draw(st.sampled_from([1.0, 1.5, 2.0])),
        ))
    return RoadNetwork(nodes, edges)


def scenario_doc_basic():
    """Straight road, one unit, one incident, no signals."""
    return {
        "schema_version": 1,
        "network": {
            "nodes": [
                {"id": "a", "x": 0, "y": 0},
                {"id": "b", "x": 300, "y": 0},
                {"id": "c", "x": 500, "y": 0},
            ],
            "edges": [
                {"id": "e1", "from": "a", "to": "b", "length_m": 300,
                 "free_speed_mps": 15},
                {"id": "e2", "from": "b", "to": "c", "length_m": 200,
                 "free_speed_mps": 10},
            ],
        },
        "fleet": [{"id": "a1", "edge": "e1", "offset_m": 0, "speed_mps": 15}],
        "hospitals": [{"id": "h1", "node": "c"}],
        "incidents": [{"id": "i1", "node": "b", "t_s": 0}],
    }


def scenario_doc_signal():
    """400 m controlled approach at 12.5 m/s: detection at t=20 extends by 8 s."""
    return {
        "schema_version": 1,
        "network": {
            "nodes": [
                {"id": "a", "x": 0, "y": 0}, {"id": "b", "x": 400, "y": 0},
                {"id": "c", "x": 500, "y": 0}, {"id": "d", "x": 625, "y": 0},
            ],
            "edges": [
                {"id": "e1", "from": "a", "to": "b", "length_m": 400,
                 "free_speed_mps": 12.5,
                 "stop_line": {"controller": "c1", "approach": "north"}},
                {"id": "e2", "from": "b", "to": "c", "length_m": 100,
                 "free_speed_mps": 12.5},
                {"id": "e3", "from": "c", "to": "d", "length_m": 125,
                 "free_speed_mps": 12.5},
            ],
        },
        "controllers": [{
            "id": "c1",
            "intergreen_s": 3.0,
            "phases": [
                {"id": "P_A", "approaches": ["north"], "green_min_s": 5,
                 "green_nominal_s": 25, "green_max_s": 40},
                {"id": "P_B", "approaches": ["south"], "green_min_s": 8,
                 "green_nominal_s": 30, "green_max_s": 45},
            ],
        }],
        "fleet": [{"id": "a1", "edge": "e1", "speed_mps": 12.5}],
        "hospitals": [{"id": "h1", "node": "d"}],
        "incidents": [{"id": "i1", "node": "c", "t_s": 0}],
    }


# collected "criterion N pass/fail" lines, printed after the test summary so
# they are visible in a plain pytest run
acceptance_lines: list[str] = []


def record_criterion(number: int, label: str, passed: bool) -> None:
    status = "PASS" if passed else "FAIL"
    acceptance_lines.append(f"criterion {number} [{label}]: {status}")


def pytest_terminal_summary(terminalreporter):
    if acceptance_lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(acceptance_lines):
            terminalreporter.line(line)
