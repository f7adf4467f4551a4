"""Intent-to-network-language compilation and policy conflict checking.

Operator sentences classify through a deterministic rule cascade (no model
required) and compile to concrete artifacts: ACL rules, CLI policy, YANG
XML, filter specs, constraint expressions. The verifier then flags
deny/permit overlaps and redundant rules across artifacts.
"""

from intentnet import NetworkArtifact, compile_intent, parse_intent_pattern, verify_artifacts

SENTENCES = [
    "Restrict access to the server at 192.168.1.5 from all external IPs",
    "Set up the new router to prioritize VoIP traffic for better call quality",
    "Automatically adapt to changes in topology without manual reconfiguration",
    "Parse all TCP packets and detect malicious and spoofed connections",
    "Ensure the network does not exceed 80% capacity during 9 AM to 5 PM",
]

artifacts = []
for sentence in SENTENCES:
    intent = parse_intent_pattern(sentence)
    artifact = compile_intent(intent)
    artifacts.append(artifact)
    print(f"{sentence!r}")
    print(f"  -> {intent.kind} {intent.params}")
    print(f"  -> {artifact.kind}:")
    for line in artifact.body.splitlines():
        print(f"     {line}")
    print()

# Conflict checking: a permit that overlaps the compiled deny rule.
permit = NetworkArtifact("Acl", "permit ip any 192.168.1.5\n")
for finding in verify_artifacts([artifacts[0], permit]):
    print(f"{finding.kind}: {finding.rule_a!r} vs {finding.rule_b!r} ({finding.reason})")
