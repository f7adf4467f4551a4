"""Dual-layer network model: parse, validate, and mutate a topology.

The model has two layers: optical fibers (physical spans) and IP links that
ride ordered fiber paths. Run this to see parsing, validation, and the two
planning actions (add a fiber, add capacity) at work.
"""

from pathlib import Path

from intentnet import (
    AddCapacity,
    AddFiber,
    apply_action,
    parse_topology,
    parse_traffic_matrix,
    validate_topology,
)

DATA = Path(__file__).parent / "data"

topology = parse_topology((DATA / "triangle.json").read_text())
print(f"parsed topology: {len(topology.nodes)} nodes, "
      f"{len(topology.fibers)} fibers, {len(topology.ip_links)} ip links")
print(f"violations on the fixture: {validate_topology(topology)}")

traffic = parse_traffic_matrix((DATA / "traffic.csv").read_text())
for demand in traffic.demands:
    print(f"demand {demand.src} -> {demand.dst}: {demand.gbps} Gbps "
          f"during [{demand.window.start_hour}, {demand.window.end_hour})")

# What-if actions return new topologies; the original is never mutated.
grown = apply_action(topology, AddFiber("A", "B", 80.0))
print(f"\nafter AddFiber(A, B, 80 km): {len(grown.fibers)} fibers, "
      f"{len(grown.ip_links)} ip links (new ids {grown.fibers[-1].id}, {grown.ip_links[-1].id})")

upgraded = apply_action(topology, AddCapacity("L3", 2))
print(f"after AddCapacity(L3, +2): L3 carries "
      f"{upgraded.ip_link('L3').capacity_modules} modules "
      f"(original still {topology.ip_link('L3').capacity_modules})")
