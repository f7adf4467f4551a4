"""Capacity planning over the IP layer.

Routes demands (single-path, unsplit), sizes link capacity in whole modules
under a utilization cap, and minimizes module + new-fiber cost.  Two routes
to an answer: a deterministic first-improvement local search (`optimize`)
and an exhaustive enumeration (`brute_force_oracle`) that is exact on small
instances and serves as the testing oracle for the heuristic.

Sizing rule: a link loaded with ``load`` Gbps during the peak window needs
``ceil(load / (u_max * module_size))`` modules.  Demands whose window does
not overlap the peak window never contend with peak traffic and are sized
with a cap of 1.0 instead.
"""

from __future__ import annotations

import heapq
import json
import math
from dataclasses import dataclass, field

from .errors import LimitExceededError, NotFoundError
from .netmodel import (
    PEAK_WINDOW,
    FiberLink,
    IpLink,
    TimeWindow,
    Topology,
    TrafficMatrix,
)

_SIZE_EPS = 1e-9  # absorbs float noise at exact-boundary loads


@dataclass(frozen=True)
class CostModel:
    module_cost: float = 1.0
    fiber_cost_per_km: float = 1.0
    fiber_fixed_cost: float = 0.0
    currency: str = "unit"

    def __post_init__(self):
        if self.module_cost < 0 or self.fiber_cost_per_km < 0 or self.fiber_fixed_cost < 0:
            raise ValueError("costs must be >= 0")


@dataclass(frozen=True)
class PlanningProblem:
    topology: Topology
    traffic: TrafficMatrix
    u_max: float = 0.8
    peak_window: TimeWindow = PEAK_WINDOW
    cost: CostModel = field(default_factory=CostModel)
    k_paths: int = 3

    def __post_init__(self):
        if not (0 < self.u_max <= 1):
            raise ValueError(f"u_max must lie in (0, 1], got {self.u_max}")
        if self.k_paths < 1:
            raise ValueError("k_paths must be >= 1")


@dataclass(frozen=True)
class CapacityPlan:
    """One sized solution: routes, per-link modules/loads/utilization, cost.

    ``routes[i]`` is the node path of demand ``i`` (None when unroutable).
    ``link_load_gbps`` carries peak-window load; ``utilization`` divides it
    by the link's effective capacity (planned modules, or the installed
    module count when that is higher).
    """

    routes: tuple[tuple[str, ...] | None, ...]
    modules: dict[str, int]
    link_load_gbps: dict[str, float]
    utilization: dict[str, float]
    added_fibers: tuple[FiberLink, ...] = ()
    total_cost: float = 0.0
    feasible: bool = True
    unrouted: tuple[int, ...] = ()


# ---------------------------------------------------------------------------
# IP-layer routing substrate


def ip_adjacency(t: Topology) -> dict[str, list[tuple[str, float]]]:
    """Undirected adjacency over IP links, weighted by underlying fiber
    length; parallel links collapse to the cheapest (by length, then id).
    Neighbor lists are sorted so every traversal is deterministic."""
    adj: dict[str, list[tuple[str, float]]] = {n.id: [] for n in t.nodes}
    for (a, b), link in hop_links(t).items():
        w = t.link_fiber_length_km(link)
        adj[a].append((b, w))
        adj[b].append((a, w))
    for nbrs in adj.values():
        nbrs.sort()
    return adj


def hop_links(t: Topology) -> dict[tuple[str, str], IpLink]:
    """For each adjacent node pair, the IP link that carries its traffic
    (cheapest parallel link, ties by id)."""
    chosen: dict[tuple[str, str], IpLink] = {}
    weights: dict[str, float] = {}
    for link in sorted(t.ip_links, key=lambda l: l.id):
        weights[link.id] = t.link_fiber_length_km(link)
        key = (min(link.a, link.b), max(link.a, link.b))
        if key not in chosen or weights[link.id] < weights[chosen[key].id]:
            chosen[key] = link
    return chosen


def links_for_path(t: Topology, path: tuple[str, ...],
                   chosen: dict[tuple[str, str], IpLink] | None = None) -> list[IpLink]:
    """Map a node path onto the IP links that carry it."""
    if chosen is None:
        chosen = hop_links(t)
    links = []
    for u, v in zip(path, path[1:]):
        key = (min(u, v), max(u, v))
        if key not in chosen:
            raise NotFoundError(f"no ip link joins {u!r} and {v!r}")
        links.append(chosen[key])
    return links


def _dijkstra(adj, src, dst, banned_nodes=frozenset(), banned_edges=frozenset()):
    """Shortest path with (cost, node-sequence) heap ordering for determinism.

    Returns (cost, path tuple) or (inf, None) when disconnected.
    """
    if src in banned_nodes or dst in banned_nodes:
        return math.inf, None
    heap = [(0.0, (src,))]
    settled = set()
    while heap:
        cost, path = heapq.heappop(heap)
        node = path[-1]
        if node == dst:
            return cost, path
        if node in settled:
            continue
        settled.add(node)
        for nbr, w in adj.get(node, ()):
            if nbr in settled or nbr in banned_nodes:
                continue
            if (min(node, nbr), max(node, nbr)) in banned_edges:
                continue
            heapq.heappush(heap, (cost + w, path + (nbr,)))
    return math.inf, None


def k_shortest_paths(t: Topology, src: str, dst: str, k: int) -> list[tuple[str, ...]]:
    """Up to k loopless IP-layer paths by Yen's scheme over a Dijkstra core.

    Output is sorted by total underlying fiber length, ties broken by the
    lexicographic node-id sequence.  A disconnected pair yields [].
    """
    t.node(src)
    t.node(dst)
    if src == dst:
        raise ValueError("src and dst must differ")
    if k < 1:
        raise ValueError("k must be >= 1")

    adj = ip_adjacency(t)
    cost, path = _dijkstra(adj, src, dst)
    if path is None:
        return []

    accepted: list[tuple[float, tuple[str, ...]]] = [(cost, path)]
    candidates: list[tuple[float, tuple[str, ...]]] = []
    seen = {path}

    while len(accepted) < k:
        _, prev = accepted[-1]
        for i in range(len(prev) - 1):
            root = prev[: i + 1]
            banned_edges = set()
            for _, q in accepted:
                if len(q) > i + 1 and q[: i + 1] == root:
                    banned_edges.add((min(q[i], q[i + 1]), max(q[i], q[i + 1])))
            spur_cost, spur_path = _dijkstra(adj, root[-1], dst,
                                             frozenset(root[:-1]), frozenset(banned_edges))
            if spur_path is None:
                continue
            total = root[:-1] + spur_path
            if total in seen:
                continue
            heapq.heappush(candidates, (_path_cost(adj, root) + spur_cost, total))
            seen.add(total)
        if not candidates:
            break
        accepted.append(heapq.heappop(candidates))

    accepted.sort(key=lambda cp: (cp[0], cp[1]))
    return [p for _, p in accepted]


def _path_cost(adj, path) -> float:
    total = 0.0
    for u, v in zip(path, path[1:]):
        total += next(w for nbr, w in adj[u] if nbr == v)
    return total


def all_simple_paths(t: Topology, src: str, dst: str) -> list[tuple[str, ...]]:
    """Every loopless IP-layer path, lexicographically ordered by node
    sequence.  Exhaustive by design; intended for oracle-scale instances."""
    adj = ip_adjacency(t)
    result: list[tuple[str, ...]] = []

    def walk(path: tuple[str, ...], visited: set[str]):
        node = path[-1]
        if node == dst:
            result.append(path)
            return
        for nbr, _ in adj.get(node, ()):
            if nbr not in visited:
                walk(path + (nbr,), visited | {nbr})

    walk((src,), {src})
    return sorted(result)


# ---------------------------------------------------------------------------
# sizing and cost


def size_links(t: Topology, load: dict[str, float], u_max: float) -> dict[str, int]:
    """Whole-module sizing: ``ceil(load / (u_max * module_size))`` per link,
    zero-load links get zero modules."""
    if not (0 < u_max <= 1):
        raise ValueError(f"u_max must lie in (0, 1], got {u_max}")
    links = {l.id: l for l in t.ip_links}
    sized = {}
    for link_id, gbps in load.items():
        if gbps < 0:
            raise ValueError(f"load on {link_id} must be >= 0")
        sized[link_id] = _modules_for(gbps, u_max, links[link_id].module_size_gbps)
    return sized


def _modules_for(gbps: float, u_max: float, module_size: float) -> int:
    if gbps <= 0:
        return 0
    return max(1, math.ceil(gbps / (u_max * module_size) - _SIZE_EPS))


def plan_cost(plan: CapacityPlan, c: CostModel) -> float:
    """Module cost plus capital cost of any fibers the plan adds.

    Pure function of the plan; recomputation matches ``plan.total_cost``.
    """
    cost = sum(plan.modules.values()) * c.module_cost
    for fiber in plan.added_fibers:
        cost += c.fiber_fixed_cost + fiber.length_km * c.fiber_cost_per_km
    return cost


class _Sizer:
    """Precomputed per-problem state so route assignments cost quickly."""

    def __init__(self, p: PlanningProblem):
        self.p = p
        self.chosen = hop_links(p.topology)
        self.link_ids = sorted(l.id for l in p.topology.ip_links)
        self.module_size = {l.id: l.module_size_gbps for l in p.topology.ip_links}
        self.installed = {l.id: l.capacity_modules for l in p.topology.ip_links}
        self.peak_demand = [d.window.overlaps(p.peak_window) for d in p.traffic.demands]

    def path_link_ids(self, path: tuple[str, ...]) -> tuple[str, ...]:
        return tuple(l.id for l in links_for_path(self.p.topology, path, self.chosen))

    def loads(self, routes) -> tuple[dict[str, float], dict[str, float]]:
        peak = dict.fromkeys(self.link_ids, 0.0)
        off = dict.fromkeys(self.link_ids, 0.0)
        for i, path in enumerate(routes):
            if path is None:
                continue
            demand = self.p.traffic.demands[i]
            pool = peak if self.peak_demand[i] else off
            for lid in self.path_link_ids(path):
                pool[lid] += demand.gbps
        return peak, off

    def modules(self, peak: dict[str, float], off: dict[str, float]) -> dict[str, int]:
        u = self.p.u_max
        return {
            lid: max(_modules_for(peak[lid], u, self.module_size[lid]),
                     _modules_for(off[lid], 1.0, self.module_size[lid]))
            for lid in self.link_ids
        }

    def route_cost(self, routes) -> float:
        peak, off = self.loads(routes)
        return sum(self.modules(peak, off).values()) * self.p.cost.module_cost

    def plan(self, routes, added_fibers: tuple[FiberLink, ...] = ()) -> CapacityPlan:
        peak, off = self.loads(routes)
        modules = self.modules(peak, off)
        utilization = {}
        for lid in self.link_ids:
            cap = max(modules[lid], self.installed[lid]) * self.module_size[lid]
            utilization[lid] = peak[lid] / cap if cap > 0 else 0.0
        unrouted = tuple(i for i, path in enumerate(routes) if path is None)
        plan = CapacityPlan(
            routes=tuple(routes),
            modules=modules,
            link_load_gbps=peak,
            utilization=utilization,
            added_fibers=tuple(added_fibers),
            feasible=not unrouted,
            unrouted=unrouted,
        )
        return CapacityPlan(
            routes=plan.routes, modules=plan.modules, link_load_gbps=plan.link_load_gbps,
            utilization=plan.utilization, added_fibers=plan.added_fibers,
            total_cost=plan_cost(plan, self.p.cost), feasible=plan.feasible,
            unrouted=plan.unrouted,
        )


def plan_for_routes(p: PlanningProblem, routes,
                    added_fibers: tuple[FiberLink, ...] = ()) -> CapacityPlan:
    """Size and cost a fixed route assignment (shared by the optimizer, the
    oracle, and what-if recomputation, so all three cost identically)."""
    return _Sizer(p).plan(routes, added_fibers)


# ---------------------------------------------------------------------------
# optimizer and oracle


def optimize(p: PlanningProblem) -> CapacityPlan:
    """Heuristic plan: shortest-path start, then first-improvement local
    search moving one demand at a time among its k-shortest candidates while
    total cost strictly decreases.  Deterministic in input order."""
    sizer = _Sizer(p)
    candidates: list[list[tuple[str, ...]]] = []
    routes: list[tuple[str, ...] | None] = []
    for demand in p.traffic.demands:
        if not (p.topology.has_node(demand.src) and p.topology.has_node(demand.dst)):
            candidates.append([])
            routes.append(None)
            continue
        paths = k_shortest_paths(p.topology, demand.src, demand.dst, p.k_paths)
        candidates.append(paths)
        routes.append(paths[0] if paths else None)

    current_cost = sizer.route_cost(routes)
    moved = True
    while moved:
        moved = False
        for i in range(len(routes)):
            if routes[i] is None:
                continue
            for alt in candidates[i]:
                if alt == routes[i]:
                    continue
                held, routes[i] = routes[i], alt
                trial_cost = sizer.route_cost(routes)
                if trial_cost < current_cost:
                    current_cost, moved = trial_cost, True
                    break
                routes[i] = held
    return sizer.plan(routes)


ORACLE_MAX_NODES = 8
ORACLE_MAX_DEMANDS = 4


def brute_force_oracle(p: PlanningProblem, max_nodes: int = ORACLE_MAX_NODES,
                       max_demands: int = ORACLE_MAX_DEMANDS) -> CapacityPlan:
    """Exact optimum by exhaustive joint assignment of each demand to any
    simple IP path.  Ties break to the lexicographically smallest
    route-assignment encoding.  Instances beyond the limits are refused.
    """
    max_nodes = min(max_nodes, ORACLE_MAX_NODES)
    max_demands = min(max_demands, ORACLE_MAX_DEMANDS)
    if len(p.topology.nodes) > max_nodes:
        raise LimitExceededError(f"{len(p.topology.nodes)} nodes exceeds oracle limit {max_nodes}")
    if len(p.traffic.demands) > max_demands:
        raise LimitExceededError(f"{len(p.traffic.demands)} demands exceeds oracle limit {max_demands}")

    sizer = _Sizer(p)
    choices: list[list[tuple[str, ...]]] = []
    for demand in p.traffic.demands:
        if p.topology.has_node(demand.src) and p.topology.has_node(demand.dst):
            choices.append(all_simple_paths(p.topology, demand.src, demand.dst))
        else:
            choices.append([])
    routable = [i for i, paths in enumerate(choices) if paths]

    # Seed with the lexicographically first full assignment, then search
    # depth-first in encoding order.  A partial assignment's cost is a lower
    # bound on any completion (loads only grow), so >= prunes are safe and
    # the first assignment reaching the optimum is the lexicographically
    # smallest route-assignment encoding.
    best_routes: list[tuple[str, ...] | None] = [None] * len(choices)
    for i in routable:
        best_routes[i] = choices[i][0]
    best_cost = sizer.route_cost(best_routes)

    assignment: list[tuple[str, ...] | None] = [None] * len(choices)

    def descend(level: int):
        nonlocal best_routes, best_cost
        idx = routable[level]
        last = level == len(routable) - 1
        for path in choices[idx]:
            assignment[idx] = path
            partial_cost = sizer.route_cost(assignment)
            if partial_cost < best_cost:
                if last:
                    best_routes, best_cost = assignment.copy(), partial_cost
                else:
                    descend(level + 1)
        assignment[idx] = None

    if routable:
        descend(0)
    return sizer.plan(best_routes)


# ---------------------------------------------------------------------------
# serialization


def plan_to_dict(plan: CapacityPlan, traffic: TrafficMatrix | None = None) -> dict:
    doc = {
        "routes": [list(r) if r is not None else None for r in plan.routes],
        "modules": dict(sorted(plan.modules.items())),
        "link_load_gbps": dict(sorted(plan.link_load_gbps.items())),
        "utilization": dict(sorted(plan.utilization.items())),
        "added_fibers": [
            {"id": f.id, "a": f.a, "b": f.b, "length_km": f.length_km}
            for f in plan.added_fibers
        ],
        "total_cost": plan.total_cost,
        "feasible": plan.feasible,
        "unrouted": list(plan.unrouted),
    }
    if traffic is not None:
        doc["demands"] = [
            {"src": d.src, "dst": d.dst, "gbps": d.gbps,
             "window": [d.window.start_hour, d.window.end_hour]}
            for d in traffic.demands
        ]
    return doc


def plan_to_json(plan: CapacityPlan, traffic: TrafficMatrix | None = None) -> str:
    return json.dumps(plan_to_dict(plan, traffic), indent=2, sort_keys=True)


def plan_from_dict(doc: dict) -> CapacityPlan:
    return CapacityPlan(
        routes=tuple(tuple(r) if r is not None else None for r in doc["routes"]),
        modules={k: int(v) for k, v in doc["modules"].items()},
        link_load_gbps={k: float(v) for k, v in doc["link_load_gbps"].items()},
        utilization={k: float(v) for k, v in doc["utilization"].items()},
        added_fibers=tuple(
            FiberLink(id=f["id"], a=f["a"], b=f["b"], length_km=float(f["length_km"]))
            for f in doc.get("added_fibers", [])
        ),
        total_cost=float(doc["total_cost"]),
        feasible=bool(doc["feasible"]),
        unrouted=tuple(int(i) for i in doc.get("unrouted", [])),
    )
