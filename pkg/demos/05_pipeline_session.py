"""The four-role pipeline end to end, plus a what-if steer.

Analyzer and planner are chat-completion exchanges (here a deterministic
replay script, so the whole run is reproducible offline); the calculator
and executor run native code. The session records a transcript, produces
plan.json / topology.dot / topology.svg / report.md, and an operator
what-if re-solves on a modified copy of the topology.
"""

import shutil
import tempfile
from pathlib import Path

from intentnet import AddCapacity, new_session, run_session, what_if
from intentnet.gateway import load_replay_script
from intentnet.pipeline import AnalysisRequest

DATA = Path(__file__).parent / "data"

workdir = Path(tempfile.mkdtemp(prefix="intentnet-demo-"))
for name in ("triangle.json", "traffic.csv"):
    shutil.copy(DATA / name, workdir / name)

backend = load_replay_script(DATA / "replay_capacity.jsonl")
request = AnalysisRequest(
    task_text="Plan the IP network capacity for the attached traffic matrix.",
    state_text="three-site metro ring, one fiber per site pair",
    constraint_text="max_load <= 0.8 * total_capacity between 9 and 17",
    attachments=("triangle.json", "traffic.csv"),
)

session = new_session(request, base_dir=workdir)
outcome = run_session(session, "auto", backend)

print(f"outcome: complete={outcome.complete}, cost={outcome.total_cost}")
print("transcript:")
for message in session.transcript:
    print(f"  [{message['role']:>9}] {message['content'][:80]}")

print("\nsteered what-if: add 3 modules to the bottleneck link L3")
comparison = what_if(session, AddCapacity("L3", 3))
print(f"  max utilization {comparison['old_max_utilization']:.2f} -> "
      f"{comparison['new_max_utilization']:.2f}")
print(f"  plan cost {comparison['old_cost']} -> {comparison['new_cost']} "
      f"(action capex {comparison['action_capex']})")
print(f"  human interventions so far: {session.hi_count}")

out = workdir / "artifacts"
out.mkdir()
for name, content in sorted(session.artifacts.items()):
    (out / name).write_text(content)
print(f"\nartifacts written to {out}:")
for name in sorted(session.artifacts):
    print(f"  {name}")
print("\nfinal report:\n")
print(session.artifacts["report.md"])
