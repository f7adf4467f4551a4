"""Natural-language intents to network-language artifacts.

Two extraction routes: a deterministic keyword/regex cascade that needs no
model, and an LLM-backed extractor for text the cascade cannot place.  Both
produce the same `Intent` shape, which compiles to concrete artifacts (ACL
lines, CLI policy, YANG/XML fragments, filter specs, constraint
expressions, plan requests).  A pairwise checker flags conflicting and
redundant ACL rules before anything ships.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field

from .errors import (
    ExtractionFailedError,
    MissingParamError,
    ParseError,
    UnrecognizedIntentError,
)
from . import gateway as gw

INTENT_KINDS = (
    "AccessControl",
    "QosPriority",
    "AutoConfig",
    "PacketInspection",
    "CapacityConstraint",
    "CapacityPlanning",
)

ARTIFACT_KINDS = ("Acl", "CliPolicy", "YangXml", "FilterSpec", "ConstraintExpr", "PlanRequest")

REQUIRED_PARAMS = {
    "AccessControl": ("ip",),
    "QosPriority": ("traffic_class",),
    "CapacityConstraint": ("u_max", "window"),
}


@dataclass(frozen=True)
class Intent:
    kind: str
    params: dict[str, str] = field(default_factory=dict)
    task_text: str = ""
    state_text: str = ""
    constraint_text: str = ""
    source: str = "pattern"

    def __post_init__(self):
        if self.kind not in INTENT_KINDS:
            raise ValueError(f"unknown intent kind {self.kind!r}")
        if self.source not in ("pattern", "llm"):
            raise ValueError(f"source must be pattern or llm, got {self.source!r}")

    def require(self, param: str) -> str:
        if param not in self.params or not self.params[param]:
            raise MissingParamError(param, self.kind)
        return self.params[param]


@dataclass(frozen=True)
class NetworkArtifact:
    kind: str
    body: str
    metadata: dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in ARTIFACT_KINDS:
            raise ValueError(f"unknown artifact kind {self.kind!r}")
        if not self.body:
            raise ValueError("artifact body must be non-empty")


@dataclass(frozen=True)
class Conflict:
    kind: str  # "conflict" | "redundancy"
    rule_a: str
    rule_b: str
    reason: str


# ---------------------------------------------------------------------------
# parameter extraction

_IPV4 = re.compile(r"\b(?:\d{1,3}\.){3}\d{1,3}\b")
_PERCENT = re.compile(r"(\d+(?:\.\d+)?)\s*%")
_CLOCK_RANGE = re.compile(
    r"(\d{1,2})\s*(am|pm)\s*(?:to|and|until|through|-|–)\s*(\d{1,2})\s*(am|pm)", re.I)
_HOUR_RANGE = re.compile(r"\b(\d{1,2})\s*-\s*(\d{1,2})\b")
_TRAFFIC_CLASS = re.compile(r"\b(voip|voice|video|streaming|gaming|backup)\b", re.I)
_INTERFACE = re.compile(r"\b(\d+GE\s+[\d/]+)\b")
_PROTOCOL = re.compile(r"\b(tcp|udp|icmp)\b", re.I)


def _hour_24(hour: int, meridiem: str) -> int:
    hour = hour % 12
    return hour + 12 if meridiem.lower() == "pm" else hour


def _extract_window(text: str) -> str | None:
    m = _CLOCK_RANGE.search(text)
    if m:
        start = _hour_24(int(m.group(1)), m.group(2))
        end = _hour_24(int(m.group(3)), m.group(4))
        return f"{start}-{end}"
    m = _HOUR_RANGE.search(text)
    if m:
        return f"{int(m.group(1))}-{int(m.group(2))}"
    return None


def _extract_params(text: str) -> dict[str, str]:
    params: dict[str, str] = {}
    if m := _IPV4.search(text):
        params["ip"] = m.group(0)
    if m := _PERCENT.search(text):
        params["u_max"] = format(float(m.group(1)) / 100.0, "g")
    if window := _extract_window(text):
        params["window"] = window
    if m := _TRAFFIC_CLASS.search(text):
        params["traffic_class"] = m.group(1).upper()
    if m := _INTERFACE.search(text):
        params["interface"] = m.group(1)
    if m := _PROTOCOL.search(text):
        params["protocol"] = m.group(1).lower()
    return params


# Ordered rule cascade; the first rule whose predicate fires decides the
# kind.  Order is fixed (access restriction, QoS, config adaptation, packet
# inspection, capacity phrases) so parsing stays deterministic.
def _has(pattern: str):
    rx = re.compile(pattern, re.I)
    return lambda text: bool(rx.search(text))


_RULES: list[tuple[str, object]] = [
    ("AccessControl", lambda t: _has(r"\b(restrict|block|deny|forbid)\b")(t) and _has(r"\baccess\b")(t)),
    ("QosPriority", _has(r"\b(prioriti[sz]e|priority|qos)\b")),
    ("AutoConfig", _has(r"\b(adapt|reconfigur\w*|auto-?configur\w*|self-?configur\w*)\b")),
    ("PacketInspection", lambda t: _has(r"\b(parse|inspect|detect)\b")(t) and _has(r"\b(packets?|connections?)\b")(t)),
    ("CapacityPlanning", lambda t: _has(r"\b(plan|planning|size|sizing|dimension\w*)\b")(t) and _has(r"\bcapacity\b")(t)),
    ("CapacityConstraint", lambda t: bool(_PERCENT.search(t)) and _has(r"\b(capacity|load|utili[sz]ation)\b")(t)),
]


def parse_intent_pattern(text: str) -> Intent:
    """Classify an intent sentence with the deterministic rule cascade.

    Raises :class:`UnrecognizedIntentError` (carrying the input, so callers
    can escalate to the LLM route) when no rule fires.
    """
    for kind, predicate in _RULES:
        if predicate(text):
            return Intent(kind=kind, params=_extract_params(text), task_text=text, source="pattern")
    raise UnrecognizedIntentError(text)


def validate_intent(intent: Intent) -> None:
    for param in REQUIRED_PARAMS.get(intent.kind, ()):
        intent.require(param)


# ---------------------------------------------------------------------------
# LLM extraction route

_EXTRACT_INSTRUCTIONS = (
    "Classify the intent below and extract its parameters.\n"
    "Intent: {text}\n\n"
    "Respond with only a JSON object of the form "
    '{{"kind": "<one of {kinds}>", "params": {{"name": "value"}}}}.'
)


def _intent_from_json(raw: str, text: str) -> Intent:
    doc = extract_json_object(raw)
    if not isinstance(doc, dict):
        raise ValueError("response must be a JSON object")
    kind = doc.get("kind")
    if kind not in INTENT_KINDS:
        raise ValueError(f"'kind' must be one of {list(INTENT_KINDS)}, got {kind!r}")
    params = doc.get("params", {})
    if not isinstance(params, dict) or not all(
            isinstance(k, str) and isinstance(v, str) for k, v in params.items()):
        raise ValueError("'params' must be a string-to-string map")
    intent = Intent(kind=kind, params=dict(params), task_text=text, source="llm")
    validate_intent(intent)
    return intent


def extract_json_object(raw: str):
    """Parse the first JSON object found in a model reply (tolerates fences)."""
    start, end = raw.find("{"), raw.rfind("}")
    if start == -1 or end <= start:
        raise ValueError("no JSON object in response")
    return json.loads(raw[start:end + 1])


def parse_intent_llm(text: str, backend, strategy=None) -> Intent:
    """LLM-backed extraction with schema validation and one reprompt.

    Two invalid responses raise :class:`ExtractionFailedError`; transport
    problems surface as the gateway's own errors.
    """
    strategy = strategy if strategy is not None else gw.ZeroShot()
    task = _EXTRACT_INSTRUCTIONS.format(text=text, kinds=", ".join(INTENT_KINDS))
    messages = gw.build_prompt(strategy, task, context="You translate operator intents into structured network requests.")
    reply = gw.complete(backend, messages)
    try:
        return _intent_from_json(reply.content, text)
    except (ValueError, MissingParamError) as first_error:
        messages = messages + [reply, gw.ChatMessage(
            "user", f"That response was invalid: {first_error}. Respond with only the corrected JSON object.")]
        reply = gw.complete(backend, messages)
        try:
            return _intent_from_json(reply.content, text)
        except (ValueError, MissingParamError) as second_error:
            raise ExtractionFailedError(
                f"two invalid extraction responses; last error: {second_error}") from second_error


# ---------------------------------------------------------------------------
# compilation

DEFAULT_INTERFACE = "10GE 1/0/1"


def compile_intent(intent: Intent) -> NetworkArtifact:
    """Emit the network-language artifact for an intent.

    Body cores are fixed strings (the boilerplate around them is ours and
    documented in the README); missing required params raise
    :class:`MissingParamError`.
    """
    validate_intent(intent)

    if intent.kind == "AccessControl":
        ip = intent.require("ip")
        body = f"ip access-list extended INTENT-ACL\n 10 deny ip any {ip}\n"
        return NetworkArtifact("Acl", body, {"ip": ip, "direction": "deny"})

    if intent.kind == "QosPriority":
        cls = intent.require("traffic_class")
        body = (
            f"class-map {cls}\n"
            f" match protocol {cls.lower()}\n"
            f"policy-map {cls}-Policy\n"
            f" class {cls}\n"
            f"  priority level 1\n"
        )
        return NetworkArtifact("CliPolicy", body, {"traffic_class": cls})

    if intent.kind == "AutoConfig":
        interface = intent.params.get("interface", DEFAULT_INTERFACE)
        body = f"<config><interface><name>{interface}</name></interface></config>"
        return NetworkArtifact("YangXml", body, {"interface": interface})

    if intent.kind == "PacketInspection":
        protocol = intent.params.get("protocol", "tcp")
        body = (
            f"filter protocol {protocol}\n"
            "layout IP header| TCP header| Payload\n"
            "check handshake-complete\n"
            "check source-address-consistent\n"
        )
        return NetworkArtifact("FilterSpec", body, {"protocol": protocol, "spoof_check": "true"})

    if intent.kind == "CapacityConstraint":
        u_max = intent.require("u_max")
        start, end = parse_window(intent.require("window"))
        body = f"if (time>={start} and time<={end}) {{ max_load <= {u_max} * total_capacity }}"
        parse_constraint_expr(body)  # emitted text must satisfy its own grammar
        return NetworkArtifact("ConstraintExpr", body, {"u_max": u_max, "window": f"{start}-{end}"})

    if intent.kind == "CapacityPlanning":
        doc = {
            "task": intent.task_text or "network capacity plan",
            "u_max": float(intent.params["u_max"]) if "u_max" in intent.params else None,
            "window": intent.params.get("window"),
        }
        return NetworkArtifact("PlanRequest", json.dumps(doc, sort_keys=True), {})

    raise MissingParamError("kind", intent.kind)


def parse_window(window: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d{1,2})-(\d{1,2})", window)
    if not m:
        raise MissingParamError("window", f"malformed window {window!r}")
    return int(m.group(1)), int(m.group(2))


_CONSTRAINT_RX = re.compile(
    r"^if \((?P<clauses>[^)]+)\) \{ (?P<metric>\w+) <= (?P<factor>\d+(?:\.\d+)?) \* (?P<cap>\w+) \}$")
_CLAUSE_RX = re.compile(r"^time(>=|<=)(\d{1,2})$")


def parse_constraint_expr(body: str) -> dict:
    """Parse a constraint expression of the form
    ``if (time>=H and time<=H) { metric <= number * metric }``."""
    m = _CONSTRAINT_RX.match(body)
    if not m:
        raise ParseError(f"constraint expression does not match grammar: {body!r}")
    clauses = []
    for raw in m.group("clauses").split(" and "):
        cm = _CLAUSE_RX.match(raw)
        if not cm:
            raise ParseError(f"bad clause {raw!r} in constraint expression")
        hour = int(cm.group(2))
        if not 0 <= hour <= 24:
            raise ParseError(f"clause hour out of range: {raw!r}")
        clauses.append((cm.group(1), hour))
    return {
        "clauses": clauses,
        "metric": m.group("metric"),
        "factor": float(m.group("factor")),
        "capacity_metric": m.group("cap"),
    }


# ---------------------------------------------------------------------------
# verification

_ACL_RULE_RX = re.compile(r"^\s*(?:\d+\s+)?(permit|deny)\s+(\S+)\s+(\S+)\s+(\S+)\s*$")


def _acl_rules(artifact: NetworkArtifact) -> list[tuple[str, str, str, str, str]]:
    """(action, protocol, src, dst, original line) per rule line."""
    rules = []
    for line in artifact.body.splitlines():
        stripped = line.strip()
        if not stripped or stripped.startswith("ip access-list"):
            continue
        m = _ACL_RULE_RX.match(stripped)
        if not m:
            raise ParseError(f"malformed ACL rule line: {stripped!r}")
        action, proto, src, dst = m.groups()
        rules.append((action, proto.lower(), src, dst, f"{action} {proto.lower()} {src} {dst}"))
    return rules


def _protocols_overlap(a: str, b: str) -> bool:
    return a == b or a == "ip" or b == "ip"


def _addrs_overlap(a: str, b: str) -> bool:
    return a == b or a == "any" or b == "any"


def verify_artifacts(artifacts: list[NetworkArtifact]) -> list[Conflict]:
    """Pairwise policy check over ACL artifacts.

    A deny and a permit whose (ip, protocol) match-sets overlap conflict;
    identical rules are redundant.  Output order follows rule order, so the
    result is deterministic and symmetric up to pair ordering.
    """
    rules = []
    for artifact in artifacts:
        if artifact.kind == "Acl":
            rules.extend(_acl_rules(artifact))

    findings = []
    for i in range(len(rules)):
        for j in range(i + 1, len(rules)):
            act_a, proto_a, src_a, dst_a, line_a = rules[i]
            act_b, proto_b, src_b, dst_b, line_b = rules[j]
            overlap = (_protocols_overlap(proto_a, proto_b)
                       and _addrs_overlap(src_a, src_b) and _addrs_overlap(dst_a, dst_b))
            if not overlap:
                continue
            if line_a == line_b:
                findings.append(Conflict("redundancy", line_a, line_b, "identical rules"))
            elif act_a != act_b:
                findings.append(Conflict(
                    "conflict", line_a, line_b,
                    "deny and permit match overlapping (ip, protocol) sets"))
    return findings


def artifact_to_dict(artifact: NetworkArtifact) -> dict:
    return {"kind": artifact.kind, "body": artifact.body, "metadata": dict(artifact.metadata)}


def artifact_from_dict(doc: dict) -> NetworkArtifact:
    return NetworkArtifact(kind=doc["kind"], body=doc["body"], metadata=dict(doc.get("metadata", {})))
