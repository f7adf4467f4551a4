"""Dual-layer network model: nodes, optical fibers, IP links riding fiber paths.

All types are immutable values; topology-mutating actions return new
topologies.  JSON (topology) and CSV (traffic) are the canonical on-disk
formats consumed by the rest of the suite.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
from dataclasses import dataclass, replace

from .errors import InvariantError, NotFoundError, SchemaError

NODE_ROLES = ("core", "edge")
DEFAULT_MODULE_GBPS = 100.0


@dataclass(frozen=True)
class Node:
    id: str
    name: str
    x_km: float
    y_km: float
    role: str = "core"

    def __post_init__(self):
        if not self.id:
            raise ValueError("node id must be non-empty")
        if self.role not in NODE_ROLES:
            raise ValueError(f"node {self.id}: role must be one of {NODE_ROLES}, got {self.role!r}")


@dataclass(frozen=True)
class FiberLink:
    id: str
    a: str
    b: str
    length_km: float
    deployed: bool = True

    def __post_init__(self):
        if not self.id:
            raise ValueError("fiber id must be non-empty")
        if self.a == self.b:
            raise ValueError(f"fiber {self.id}: endpoints must differ")
        if not self.length_km > 0:
            raise ValueError(f"fiber {self.id}: length_km must be positive, got {self.length_km}")


@dataclass(frozen=True)
class IpLink:
    id: str
    a: str
    b: str
    fiber_path: tuple[str, ...]
    capacity_modules: int = 0
    module_size_gbps: float = DEFAULT_MODULE_GBPS

    def __post_init__(self):
        object.__setattr__(self, "fiber_path", tuple(self.fiber_path))
        if not self.id:
            raise ValueError("ip link id must be non-empty")
        if self.capacity_modules < 0:
            raise ValueError(f"ip link {self.id}: capacity_modules must be >= 0")
        if not self.module_size_gbps > 0:
            raise ValueError(f"ip link {self.id}: module_size_gbps must be positive")

    @property
    def capacity_gbps(self) -> float:
        return self.capacity_modules * self.module_size_gbps


@dataclass(frozen=True)
class Topology:
    nodes: tuple[Node, ...] = ()
    fibers: tuple[FiberLink, ...] = ()
    ip_links: tuple[IpLink, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "fibers", tuple(self.fibers))
        object.__setattr__(self, "ip_links", tuple(self.ip_links))

    def node(self, node_id: str) -> Node:
        for n in self.nodes:
            if n.id == node_id:
                return n
        raise NotFoundError(f"unknown node {node_id!r}")

    def fiber(self, fiber_id: str) -> FiberLink:
        for f in self.fibers:
            if f.id == fiber_id:
                return f
        raise NotFoundError(f"unknown fiber {fiber_id!r}")

    def ip_link(self, link_id: str) -> IpLink:
        for l in self.ip_links:
            if l.id == link_id:
                return l
        raise NotFoundError(f"unknown ip link {link_id!r}")

    def has_node(self, node_id: str) -> bool:
        return any(n.id == node_id for n in self.nodes)

    def link_fiber_length_km(self, link: IpLink) -> float:
        """Total length of the fibers an IP link rides."""
        by_id = {f.id: f for f in self.fibers}
        return sum(by_id[fid].length_km for fid in link.fiber_path)


@dataclass(frozen=True)
class TimeWindow:
    start_hour: int
    end_hour: int

    def __post_init__(self):
        if not (0 <= self.start_hour <= 24 and 0 <= self.end_hour <= 24):
            raise ValueError(f"hours must lie in [0, 24], got {self.start_hour}..{self.end_hour}")
        if self.start_hour >= self.end_hour:
            raise ValueError(f"start_hour must precede end_hour, got {self.start_hour}..{self.end_hour}")

    def overlap_hours(self, other: "TimeWindow") -> int:
        return max(0, min(self.end_hour, other.end_hour) - max(self.start_hour, other.start_hour))

    def overlaps(self, other: "TimeWindow") -> bool:
        """True when the windows share at least one full hour."""
        return self.overlap_hours(other) >= 1


PEAK_WINDOW = TimeWindow(9, 17)


@dataclass(frozen=True)
class Demand:
    src: str
    dst: str
    gbps: float
    window: TimeWindow = PEAK_WINDOW

    def __post_init__(self):
        if self.src == self.dst:
            raise ValueError(f"demand endpoints must differ, got {self.src}->{self.dst}")
        if self.gbps < 0:
            raise ValueError(f"demand {self.src}->{self.dst}: gbps must be >= 0")


@dataclass(frozen=True)
class TrafficMatrix:
    demands: tuple[Demand, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "demands", tuple(self.demands))


@dataclass(frozen=True)
class AddFiber:
    a: str
    b: str
    length_km: float

    def __post_init__(self):
        if not self.length_km > 0:
            raise ValueError("length_km must be positive")


@dataclass(frozen=True)
class AddCapacity:
    ip_link_id: str
    extra_modules: int

    def __post_init__(self):
        if self.extra_modules < 1:
            raise ValueError("extra_modules must be >= 1")


Action = AddFiber | AddCapacity


@dataclass(frozen=True)
class Violation:
    code: str
    subject_id: str
    message: str


# ---------------------------------------------------------------------------
# parsing


def _require(obj: dict, key: str, path: str):
    if key not in obj:
        raise SchemaError(f"missing field {key!r}", path)
    return obj[key]


def _number(value, key: str, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(f"field {key!r} must be a number, got {type(value).__name__}", path)
    return float(value)


def _string(value, key: str, path: str) -> str:
    if not isinstance(value, str):
        raise SchemaError(f"field {key!r} must be a string, got {type(value).__name__}", path)
    return value


def parse_topology(text: str) -> Topology:
    """Parse a topology JSON document, enforcing every type invariant.

    Unknown keys are ignored.  Raises :class:`SchemaError` for structural
    problems (with the JSON path) and :class:`InvariantError` for dangling
    ids or broken fiber chains (naming the offending id).
    """
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError(f"not valid JSON: {exc}", "$") from exc
    if not isinstance(doc, dict):
        raise SchemaError("top level must be an object", "$")

    nodes = []
    for i, raw in enumerate(doc.get("nodes", [])):
        path = f"$.nodes[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError("node must be an object", path)
        node_id = _string(_require(raw, "id", path), "id", path)
        try:
            nodes.append(Node(
                id=node_id,
                name=_string(raw.get("name", node_id), "name", path),
                x_km=_number(_require(raw, "x_km", path), "x_km", path),
                y_km=_number(_require(raw, "y_km", path), "y_km", path),
                role=_string(raw.get("role", "core"), "role", path),
            ))
        except ValueError as exc:
            raise InvariantError(str(exc), node_id) from exc

    coords = {n.id: (n.x_km, n.y_km) for n in nodes}

    fibers = []
    for i, raw in enumerate(doc.get("fibers", [])):
        path = f"$.fibers[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError("fiber must be an object", path)
        fiber_id = _string(_require(raw, "id", path), "id", path)
        a = _string(_require(raw, "a", path), "a", path)
        b = _string(_require(raw, "b", path), "b", path)
        if "length_km" in raw:
            length = _number(raw["length_km"], "length_km", path)
        else:
            # omitted length defaults to the Euclidean node distance
            if a not in coords or b not in coords:
                raise InvariantError(f"fiber {fiber_id}: cannot default length, unknown endpoint", fiber_id)
            length = math.dist(coords[a], coords[b])
        deployed = raw.get("deployed", True)
        if not isinstance(deployed, bool):
            raise SchemaError("field 'deployed' must be a boolean", path)
        try:
            fibers.append(FiberLink(id=fiber_id, a=a, b=b, length_km=length, deployed=deployed))
        except ValueError as exc:
            raise InvariantError(str(exc), fiber_id) from exc

    ip_links = []
    for i, raw in enumerate(doc.get("ip_links", [])):
        path = f"$.ip_links[{i}]"
        if not isinstance(raw, dict):
            raise SchemaError("ip link must be an object", path)
        link_id = _string(_require(raw, "id", path), "id", path)
        fiber_path = _require(raw, "fiber_path", path)
        if not isinstance(fiber_path, list) or not all(isinstance(x, str) for x in fiber_path):
            raise SchemaError("field 'fiber_path' must be a list of fiber ids", path)
        modules = raw.get("capacity_modules", 0)
        if isinstance(modules, bool) or not isinstance(modules, int):
            raise SchemaError("field 'capacity_modules' must be an integer", path)
        try:
            ip_links.append(IpLink(
                id=link_id,
                a=_string(_require(raw, "a", path), "a", path),
                b=_string(_require(raw, "b", path), "b", path),
                fiber_path=tuple(fiber_path),
                capacity_modules=modules,
                module_size_gbps=_number(raw.get("module_size_gbps", DEFAULT_MODULE_GBPS),
                                         "module_size_gbps", path),
            ))
        except ValueError as exc:
            raise InvariantError(str(exc), link_id) from exc

    topo = Topology(nodes=tuple(nodes), fibers=tuple(fibers), ip_links=tuple(ip_links))
    violations = validate_topology(topo)
    if violations:
        v = violations[0]
        raise InvariantError(v.message, v.subject_id)
    return topo


def serialize_topology(t: Topology) -> str:
    """Inverse of :func:`parse_topology`; round-trips field for field."""
    doc = {
        "nodes": [
            {"id": n.id, "name": n.name, "x_km": n.x_km, "y_km": n.y_km, "role": n.role}
            for n in t.nodes
        ],
        "fibers": [
            {"id": f.id, "a": f.a, "b": f.b, "length_km": f.length_km, "deployed": f.deployed}
            for f in t.fibers
        ],
        "ip_links": [
            {
                "id": l.id, "a": l.a, "b": l.b, "fiber_path": list(l.fiber_path),
                "capacity_modules": l.capacity_modules, "module_size_gbps": l.module_size_gbps,
            }
            for l in t.ip_links
        ],
    }
    return json.dumps(doc, indent=2, sort_keys=True)


TRAFFIC_HEADER = ["src", "dst", "gbps", "start_hour", "end_hour"]


def parse_traffic_matrix(text: str) -> TrafficMatrix:
    """Parse a traffic CSV with header ``src,dst,gbps,start_hour,end_hour``.

    One demand per data row, in file order.  Value problems (negative gbps,
    src==dst, hours out of range) raise :class:`ValueError` naming the row.
    """
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows:
        raise SchemaError("empty document, expected a header row", "row 0")
    header = [cell.strip() for cell in rows[0]]
    if header != TRAFFIC_HEADER:
        raise SchemaError(f"bad header {header!r}, expected {TRAFFIC_HEADER!r}", "row 0")

    demands = []
    for rownum, row in enumerate(rows[1:], start=1):
        cells = [cell.strip() for cell in row]
        if len(cells) != len(TRAFFIC_HEADER):
            raise SchemaError(f"expected {len(TRAFFIC_HEADER)} cells, got {len(cells)}", f"row {rownum}")
        src, dst = cells[0], cells[1]
        try:
            gbps = float(cells[2])
            start_hour, end_hour = int(cells[3]), int(cells[4])
        except ValueError as exc:
            raise ValueError(f"row {rownum}: {exc}") from exc
        try:
            demands.append(Demand(src=src, dst=dst, gbps=gbps,
                                  window=TimeWindow(start_hour, end_hour)))
        except ValueError as exc:
            raise ValueError(f"row {rownum}: {exc}") from exc
    return TrafficMatrix(demands=tuple(demands))


def serialize_traffic_matrix(m: TrafficMatrix) -> str:
    out = io.StringIO()
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(TRAFFIC_HEADER)
    for d in m.demands:
        writer.writerow([d.src, d.dst, repr(d.gbps), d.window.start_hour, d.window.end_hour])
    return out.getvalue()


# ---------------------------------------------------------------------------
# validation


def _chain_ok(link: IpLink, fibers_by_id: dict[str, FiberLink]) -> bool:
    """Walk the fiber chain from link.a; it must reach exactly link.b."""
    if not link.fiber_path:
        return False
    current = link.a
    for fid in link.fiber_path:
        fiber = fibers_by_id[fid]
        if not fiber.deployed:
            return False
        if fiber.a == current:
            current = fiber.b
        elif fiber.b == current:
            current = fiber.a
        else:
            return False
    return current == link.b


def validate_topology(t: Topology) -> list[Violation]:
    """Check all referential invariants; empty list iff the topology is valid.

    Violations are data, not errors, and come back ordered by subject id.
    """
    violations = []
    node_ids = [n.id for n in t.nodes]
    fiber_ids = [f.id for f in t.fibers]
    link_ids = [l.id for l in t.ip_links]

    for ids, what in ((node_ids, "node"), (fiber_ids, "fiber"), (link_ids, "ip link")):
        seen = set()
        for i in ids:
            if i in seen:
                violations.append(Violation("DUP_ID", i, f"duplicate {what} id {i!r}"))
            seen.add(i)

    known_nodes = set(node_ids)
    fibers_by_id = {f.id: f for f in t.fibers}

    for f in t.fibers:
        for end in (f.a, f.b):
            if end not in known_nodes:
                violations.append(Violation("DANGLING_REF", f.id, f"fiber {f.id} references unknown node {end!r}"))

    for l in t.ip_links:
        for end in (l.a, l.b):
            if end not in known_nodes:
                violations.append(Violation("DANGLING_REF", l.id, f"ip link {l.id} references unknown node {end!r}"))
        missing = [fid for fid in l.fiber_path if fid not in fibers_by_id]
        if missing:
            violations.append(Violation("DANGLING_REF", l.id,
                                        f"ip link {l.id} references unknown fiber {missing[0]!r}"))
            continue
        if not _chain_ok(l, fibers_by_id):
            violations.append(Violation(
                "BROKEN_CHAIN", l.id,
                f"ip link {l.id}: fiber_path is not a deployed chain from {l.a!r} to {l.b!r}"))

    return sorted(violations, key=lambda v: (v.subject_id, v.code))


# ---------------------------------------------------------------------------
# actions


def _next_numbered_id(prefix: str, existing: list[str]) -> str:
    """Fresh id ``<prefix><n>`` with n = 1 + max numeric suffix across existing ids."""
    highest = 0
    for ident in existing:
        m = re.search(r"(\d+)$", ident)
        if m:
            highest = max(highest, int(m.group(1)))
    return f"{prefix}{highest + 1}"


def apply_action(t: Topology, action: Action) -> Topology:
    """Apply a planning what-if action, returning a new topology.

    AddFiber deploys a fresh fiber plus a parallel one-module IP link riding
    it; AddCapacity raises an IP link's installed module count.  The input
    topology is never mutated.
    """
    if isinstance(action, AddFiber):
        for end in (action.a, action.b):
            if not t.has_node(end):
                raise NotFoundError(f"unknown node {end!r}")
        fiber_id = _next_numbered_id("F", [f.id for f in t.fibers])
        link_id = _next_numbered_id("L", [l.id for l in t.ip_links])
        fiber = FiberLink(id=fiber_id, a=action.a, b=action.b, length_km=action.length_km, deployed=True)
        link = IpLink(id=link_id, a=action.a, b=action.b, fiber_path=(fiber_id,), capacity_modules=1)
        return Topology(nodes=t.nodes, fibers=t.fibers + (fiber,), ip_links=t.ip_links + (link,))

    if isinstance(action, AddCapacity):
        target = t.ip_link(action.ip_link_id)  # NotFoundError for unknown ids
        upgraded = replace(target, capacity_modules=target.capacity_modules + action.extra_modules)
        links = tuple(upgraded if l.id == target.id else l for l in t.ip_links)
        return Topology(nodes=t.nodes, fibers=t.fibers, ip_links=links)

    raise TypeError(f"unsupported action {action!r}")


def action_to_dict(action: Action) -> dict:
    if isinstance(action, AddFiber):
        return {"type": "add_fiber", "a": action.a, "b": action.b, "length_km": action.length_km}
    if isinstance(action, AddCapacity):
        return {"type": "add_capacity", "ip_link_id": action.ip_link_id,
                "extra_modules": action.extra_modules}
    raise TypeError(f"unsupported action {action!r}")


def action_from_dict(doc: dict) -> Action:
    kind = doc.get("type")
    if kind == "add_fiber":
        return AddFiber(a=doc["a"], b=doc["b"], length_km=float(doc["length_km"]))
    if kind == "add_capacity":
        return AddCapacity(ip_link_id=doc["ip_link_id"], extra_modules=int(doc["extra_modules"]))
    raise SchemaError(f"unknown action type {kind!r}", "$.type")
