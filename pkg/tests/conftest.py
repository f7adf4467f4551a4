import json
import random
import shutil
from pathlib import Path

import pytest

from intentnet.gateway import load_replay_script
from intentnet.netmodel import (
    Demand,
    FiberLink,
    IpLink,
    Node,
    TimeWindow,
    Topology,
    TrafficMatrix,
    parse_topology,
    parse_traffic_matrix,
)
from intentnet.solver import CostModel, PlanningProblem

DATA_DIR = Path(__file__).parent / "data"


@pytest.fixture
def triangle_json() -> str:
    return (DATA_DIR / "triangle.json").read_text(encoding="utf-8")


@pytest.fixture
def triangle(triangle_json) -> Topology:
    return parse_topology(triangle_json)


@pytest.fixture
def traffic_csv() -> str:
    return (DATA_DIR / "traffic.csv").read_text(encoding="utf-8")


@pytest.fixture
def traffic(traffic_csv) -> TrafficMatrix:
    return parse_traffic_matrix(traffic_csv)


@pytest.fixture
def triangle_problem(triangle, traffic) -> PlanningProblem:
    return PlanningProblem(topology=triangle, traffic=traffic,
                           cost=CostModel(module_cost=1.0))


@pytest.fixture
def capacity_backend():
    return load_replay_script(DATA_DIR / "replay_capacity.jsonl")


@pytest.fixture
def session_dir(tmp_path) -> Path:
    """A data dir holding the canonical fixture attachments."""
    shutil.copy(DATA_DIR / "triangle.json", tmp_path / "triangle.json")
    shutil.copy(DATA_DIR / "traffic.csv", tmp_path / "traffic.csv")
    return tmp_path


CAPACITY_TASK = "Plan the IP network capacity for the attached traffic matrix."


def make_request():
    from intentnet.pipeline import AnalysisRequest

    return AnalysisRequest(
        task_text=CAPACITY_TASK,
        state_text="three-site metro ring, one fiber per site pair",
        constraint_text="max_load <= 0.8 * total_capacity between 9 and 17",
        attachments=("triangle.json", "traffic.csv"),
    )


def random_instance(rng: random.Random, max_nodes: int = 6, max_demands: int = 4,
                    demand_count: int | None = None) -> PlanningProblem:
    """Small random planning instance: spanning tree plus extra fibers, one
    IP link per fiber, peak-window demands, random costs."""
    n = rng.randint(3, max_nodes)
    names = [chr(ord("A") + i) for i in range(n)]
    nodes = tuple(Node(id=name, name=name, x_km=rng.uniform(0, 500), y_km=rng.uniform(0, 500))
                  for name in names)

    edges = set()
    for i in range(1, n):
        edges.add((names[rng.randrange(i)], names[i]))
    for _ in range(rng.randint(0, n)):
        a, b = rng.sample(names, 2)
        edges.add((min(a, b), max(a, b)))

    fibers = []
    links = []
    for i, (a, b) in enumerate(sorted(edges), start=1):
        fibers.append(FiberLink(id=f"F{i}", a=a, b=b, length_km=rng.uniform(20, 300)))
        links.append(IpLink(id=f"L{i}", a=a, b=b, fiber_path=(f"F{i}",)))
    topology = Topology(nodes=nodes, fibers=tuple(fibers), ip_links=tuple(links))

    count = demand_count if demand_count is not None else rng.randint(1, max_demands)
    demands = []
    for _ in range(count):
        a, b = rng.sample(names, 2)
        demands.append(Demand(src=a, dst=b, gbps=rng.uniform(10, 400), window=TimeWindow(9, 17)))

    return PlanningProblem(
        topology=topology,
        traffic=TrafficMatrix(demands=tuple(demands)),
        u_max=rng.choice([0.5, 0.7, 0.8, 0.9, 1.0]),
        cost=CostModel(module_cost=rng.uniform(0.5, 5.0)),
        k_paths=3,
    )


def write_fixture_tree(base: Path) -> None:
    """Copy the canonical attachments into a service data dir."""
    base.mkdir(parents=True, exist_ok=True)
    shutil.copy(DATA_DIR / "triangle.json", base / "triangle.json")
    shutil.copy(DATA_DIR / "traffic.csv", base / "traffic.csv")


def load_capacity_script_entries() -> list[dict]:
    lines = (DATA_DIR / "replay_capacity.jsonl").read_text(encoding="utf-8").splitlines()
    return [json.loads(line) for line in lines if line.strip()]
