"""Evaluation harness: rubric scoring, aggregation, report export.

An evaluator model answers with one score on the anchor grid per output
(replayed here, so deterministic); records aggregate into a module-by-method
table with mean score and mean human-intervention count, exported as CSV,
JSON, or markdown with the anchor legend.
"""

from intentnet import aggregate, export_report, hlp_accuracy, score_output
from intentnet.evaluation import default_rubric
from intentnet.gateway import ReplayBackend, ReplayEntry
from intentnet.pipeline import Plan, Step

SCENARIO = {
    ("analyzer", "zero_shot"): ("0.8", 1), ("analyzer", "cot"): ("1.0", 0),
    ("planner", "zero_shot"): ("0.6", 2), ("planner", "cot"): ("0.8", 1),
    ("calculator", "zero_shot"): ("0.2", 4), ("calculator", "cot"): ("0.4", 3),
    ("executor", "zero_shot"): ("0.6", 1), ("executor", "cot"): ("0.8", 0),
}

backend = ReplayBackend(script=tuple(
    ReplayEntry(match=f"OUTPUT[{module}/{method}]", response=answer)
    for (module, method), (answer, _) in SCENARIO.items()))

rubric = default_rubric()
records = [
    score_output(backend, rubric, module, f"OUTPUT[{module}/{method}] ...",
                 method=method, task_id="demo", hi=hi)
    for (module, method), (answer, hi) in SCENARIO.items()
]

summary = aggregate(records)
print(export_report(summary, "markdown"))

def plan_of(*sig):
    return Plan(steps=[Step(id=i + 1, description="s", action=a, tool=t,
                            args={"path": "traffic.csv"} if a == "read_file" else {})
                       for i, (a, t) in enumerate(sig)])

golden = plan_of(("read_file", "read_traffic_matrix"),
                 ("call_tool", "solve_capacity"),
                 ("call_tool", "render_topology"))
partial = plan_of(("read_file", "read_traffic_matrix"),
                  ("call_tool", "solve_capacity"))
print(f"high-level plan agreement, full plan:    {hlp_accuracy(golden, golden):.3f}")
print(f"high-level plan agreement, missing step: {hlp_accuracy(partial, golden):.3f}")
