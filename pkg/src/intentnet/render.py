"""Executor output surface: dual-layer topology diagrams and plan reports.

DOT is emitted in a restricted dialect (nodes, edges, style/color/label/pos)
and the SVG writer renders that same dialect natively, so no external
graph tool is ever required and identical inputs give identical bytes.
Optical edges draw dashed, IP edges solid; with a plan attached each IP
edge is colored by its utilization class and labeled ``load/capacity``.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

from .errors import LayoutError, MismatchError, NoOutcomeError
from .netmodel import Topology
from .solver import CapacityPlan, CostModel, plan_cost

CONGESTION_CLASSES = ("green", "yellow", "orange", "red")
NEUTRAL_COLOR = "dimgray"


@dataclass(frozen=True)
class RenderSpec:
    congestion_thresholds: tuple[float, float, float] = (0.5, 0.7, 0.8)
    ip_style: str = "solid"
    optical_style: str = "dashed"
    layout: str = "coords"

    def __post_init__(self):
        ts = self.congestion_thresholds
        if list(ts) != sorted(ts) or len(set(ts)) != len(ts):
            raise ValueError("thresholds must be strictly increasing")
        if not all(0 < t <= 1 for t in ts):
            raise ValueError("thresholds must lie in (0, 1]")
        if self.layout not in ("coords", "circular"):
            raise ValueError(f"layout must be coords or circular, got {self.layout!r}")


def color_for(utilization: float, spec: RenderSpec) -> str:
    """Congestion class for a utilization; class changes at u >= threshold."""
    index = sum(1 for t in spec.congestion_thresholds if utilization >= t)
    return CONGESTION_CLASSES[index]


def _fmt_num(x: float) -> str:
    return format(x, "g")


def _quote(s: str) -> str:
    return '"' + s.replace("\\", "\\\\").replace('"', '\\"') + '"'


def render_dot(t: Topology, plan: CapacityPlan | None = None,
               spec: RenderSpec | None = None) -> str:
    """One deterministic DOT graph carrying both layers.

    Raises :class:`MismatchError` when the plan names links the topology
    does not have.
    """
    spec = spec or RenderSpec()
    if plan is not None:
        known = {l.id for l in t.ip_links}
        unknown = sorted(set(plan.modules) - known)
        if unknown:
            raise MismatchError(f"plan references unknown ip links: {', '.join(unknown)}")

    lines = ["graph topology {"]
    for node in sorted(t.nodes, key=lambda n: n.id):
        attrs = [f"label={_quote(node.name)}"]
        if spec.layout == "coords":
            attrs.append(f'pos="{_fmt_num(node.x_km)},{_fmt_num(node.y_km)}!"')
        lines.append(f"  {_quote(node.id)} [{', '.join(attrs)}];")

    for fiber in sorted(t.fibers, key=lambda f: f.id):
        attrs = [f"style={spec.optical_style}", f"label={_quote(fiber.id)}"]
        lines.append(f"  {_quote(fiber.a)} -- {_quote(fiber.b)} [{', '.join(attrs)}];")

    for link in sorted(t.ip_links, key=lambda l: l.id):
        attrs = [f"style={spec.ip_style}"]
        if plan is not None and link.id in plan.modules:
            modules = max(plan.modules[link.id], link.capacity_modules)
            capacity = modules * link.module_size_gbps
            load = plan.link_load_gbps.get(link.id, 0.0)
            attrs.append(f"color={color_for(plan.utilization.get(link.id, 0.0), spec)}")
            attrs.append(f'label="{_fmt_num(load)}/{_fmt_num(capacity)}"')
        else:
            attrs.append(f"label={_quote(link.id)}")
        lines.append(f"  {_quote(link.a)} -- {_quote(link.b)} [{', '.join(attrs)}];")

    lines.append("}")
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# DOT -> SVG (restricted dialect only)

_NODE_RX = re.compile(r'^\s*"(?P<id>(?:[^"\\]|\\.)*)"\s*\[(?P<attrs>.*)\];\s*$')
_EDGE_RX = re.compile(
    r'^\s*"(?P<a>(?:[^"\\]|\\.)*)"\s*--\s*"(?P<b>(?:[^"\\]|\\.)*)"\s*\[(?P<attrs>.*)\];\s*$')
_ATTR_RX = re.compile(r'(\w+)=(?:"((?:[^"\\]|\\.)*)"|(\w+))')

_VIEW_W, _VIEW_H, _MARGIN = 800.0, 600.0, 70.0


def _unescape(s: str) -> str:
    return s.replace('\\"', '"').replace("\\\\", "\\")


def _parse_attrs(raw: str) -> dict[str, str]:
    return {m.group(1): _unescape(m.group(2) if m.group(2) is not None else m.group(3))
            for m in _ATTR_RX.finditer(raw)}


def dot_to_svg(dot: str, spec: RenderSpec | None = None) -> str:
    """Self-contained SVG for a DOT document in the emitter's dialect.

    Deterministic bytes for identical input; coords layout requires every
    node to carry a ``pos`` attribute (otherwise :class:`LayoutError`).
    """
    spec = spec or RenderSpec()
    nodes: list[tuple[str, dict]] = []
    edges: list[tuple[str, str, dict]] = []
    for line in dot.splitlines():
        if m := _EDGE_RX.match(line):
            edges.append((_unescape(m.group("a")), _unescape(m.group("b")),
                          _parse_attrs(m.group("attrs"))))
        elif m := _NODE_RX.match(line):
            nodes.append((_unescape(m.group("id")), _parse_attrs(m.group("attrs"))))

    positions = _layout_positions(nodes, spec)

    parts = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{_VIEW_W:g}" height="{_VIEW_H:g}" '
        f'viewBox="0 0 {_VIEW_W:g} {_VIEW_H:g}">',
        f'  <rect width="{_VIEW_W:g}" height="{_VIEW_H:g}" fill="white"/>',
    ]

    # spread parallel edges between the same node pair so both stay visible
    pair_counts: dict[tuple[str, str], int] = {}
    for a, b, _ in edges:
        pair_counts[(min(a, b), max(a, b))] = pair_counts.get((min(a, b), max(a, b)), 0) + 1
    pair_seen: dict[tuple[str, str], int] = {}

    for a, b, attrs in edges:
        if a not in positions or b not in positions:
            raise LayoutError(f"edge references unplaced node {a!r} or {b!r}")
        (x1, y1), (x2, y2) = positions[a], positions[b]
        key = (min(a, b), max(a, b))
        index = pair_seen.get(key, 0)
        pair_seen[key] = index + 1
        x1, y1, x2, y2 = _offset_parallel(x1, y1, x2, y2, index, pair_counts[key])

        color = attrs.get("color", NEUTRAL_COLOR)
        dash = ' stroke-dasharray="8,5"' if attrs.get("style") == "dashed" else ""
        parts.append(
            f'  <line x1="{x1:.1f}" y1="{y1:.1f}" x2="{x2:.1f}" y2="{y2:.1f}" '
            f'stroke="{color}" stroke-width="2"{dash}/>')
        if "label" in attrs:
            mx, my = (x1 + x2) / 2, (y1 + y2) / 2
            parts.append(
                f'  <text x="{mx:.1f}" y="{my - 4:.1f}" font-size="11" '
                f'text-anchor="middle" fill="{color}">{_xml_escape(attrs["label"])}</text>')

    for node_id, attrs in nodes:
        x, y = positions[node_id]
        label = attrs.get("label", node_id)
        parts.append(f'  <circle cx="{x:.1f}" cy="{y:.1f}" r="14" '
                     f'fill="#eef3f8" stroke="black" stroke-width="1.5"/>')
        parts.append(f'  <text x="{x:.1f}" y="{y + 4:.1f}" font-size="12" '
                     f'text-anchor="middle">{_xml_escape(label)}</text>')

    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def _offset_parallel(x1, y1, x2, y2, index, count):
    if count <= 1:
        return x1, y1, x2, y2
    dx, dy = x2 - x1, y2 - y1
    length = math.hypot(dx, dy) or 1.0
    shift = (index - (count - 1) / 2) * 10.0
    ox, oy = -dy / length * shift, dx / length * shift
    return x1 + ox, y1 + oy, x2 + ox, y2 + oy


def _layout_positions(nodes, spec: RenderSpec) -> dict[str, tuple[float, float]]:
    if spec.layout == "circular":
        count = max(len(nodes), 1)
        cx, cy = _VIEW_W / 2, _VIEW_H / 2
        radius = min(_VIEW_W, _VIEW_H) / 2 - _MARGIN
        return {
            node_id: (cx + radius * math.cos(2 * math.pi * i / count - math.pi / 2),
                      cy + radius * math.sin(2 * math.pi * i / count - math.pi / 2))
            for i, (node_id, _) in enumerate(nodes)
        }

    raw: dict[str, tuple[float, float]] = {}
    for node_id, attrs in nodes:
        pos = attrs.get("pos")
        if not pos:
            raise LayoutError(f"coords layout but node {node_id!r} has no pos")
        m = re.fullmatch(r"(-?[\d.]+),(-?[\d.]+)!?", pos)
        if not m:
            raise LayoutError(f"unparsable pos {pos!r} on node {node_id!r}")
        raw[node_id] = (float(m.group(1)), float(m.group(2)))
    if not raw:
        return {}

    xs = [p[0] for p in raw.values()]
    ys = [p[1] for p in raw.values()]
    span_x = max(xs) - min(xs) or 1.0
    span_y = max(ys) - min(ys) or 1.0
    scale = min((_VIEW_W - 2 * _MARGIN) / span_x, (_VIEW_H - 2 * _MARGIN) / span_y)
    return {
        node_id: (_MARGIN + (x - min(xs)) * scale,
                  # flip y so larger y_km draws upward, as on a map
                  _VIEW_H - _MARGIN - (y - min(ys)) * scale)
        for node_id, (x, y) in raw.items()
    }


def _xml_escape(s: str) -> str:
    return s.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")


# ---------------------------------------------------------------------------
# markdown report


def render_report(session) -> str:
    """Markdown summary of a finished session (request, analysis, plan
    table, cost breakdown, HI count, artifact inventory)."""
    outcome = getattr(session, "outcome", None)
    if outcome is None:
        raise NoOutcomeError("session has no outcome yet")

    request = session.request
    lines = [
        "# Planning session report",
        "",
        "## Request",
        f"- Task: {request.task_text}",
        f"- State: {request.state_text or '(none)'}",
        f"- Constraints: {request.constraint_text or '(none)'}",
        "",
    ]

    if session.report is not None:
        lines += [
            "## Analysis",
            f"- Feasible: {'yes' if session.report.feasible else 'no'}",
            f"- Concepts: {', '.join(session.report.concepts) or '(none)'}",
            f"- Required tools: {', '.join(session.report.required_tools) or '(none)'}",
            f"- Rationale: {session.report.rationale or '(none)'}",
            "",
        ]

    if session.plan is not None:
        lines += ["## Plan", "", "| # | description | action | tool | status |",
                  "|---|-------------|--------|------|--------|"]
        for step in session.plan.steps:
            lines.append(f"| {step.id} | {step.description} | {step.action} "
                         f"| {step.tool or '-'} | {step.status} |")
        lines.append("")

    plan = getattr(session, "capacity_plan", None)
    if plan is not None:
        cost_model: CostModel = session.defaults.cost
        module_count = sum(plan.modules.values())
        lines += [
            "## Cost",
            f"- Capacity modules: {module_count} x {_fmt_num(cost_model.module_cost)} "
            f"{cost_model.currency} = {_fmt_num(module_count * cost_model.module_cost)}",
        ]
        for fiber in plan.added_fibers:
            fiber_cost = cost_model.fiber_fixed_cost + fiber.length_km * cost_model.fiber_cost_per_km
            lines.append(f"- New fiber {fiber.id} ({_fmt_num(fiber.length_km)} km): "
                         f"{_fmt_num(fiber_cost)}")
        lines += [
            f"- Total cost: {plan.total_cost}",
            f"- Feasible: {'yes' if plan.feasible else 'no'}",
            "",
        ]
        recomputed = plan_cost(plan, cost_model)
        if recomputed != plan.total_cost:
            lines.insert(-1, f"- WARNING: cost recomputation drift ({recomputed} != {plan.total_cost})")

    done = sum(1 for s in session.plan.steps if s.status == "done") if session.plan else 0
    total = len(session.plan.steps) if session.plan else 0
    lines += [
        "## Session",
        f"- HI: {session.hi_count}",
        f"- Completion: {done}/{total} steps"
        + ("" if outcome.complete else f" [INCOMPLETE: fraction {_fmt_num(outcome.completion_fraction)}]"),
        "",
        "## Artifacts",
    ]
    names = sorted(session.artifacts)
    lines += [f"- {name}" for name in names] or ["- (none)"]
    lines.append("")
    return "\n".join(lines)
