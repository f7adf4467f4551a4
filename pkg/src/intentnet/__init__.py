"""Intent-driven IP-over-optical capacity planning.

Natural-language intents flow through analyzer/planner/calculator/executor
roles backed by pluggable chat-completion backends, grounded by a
deterministic multi-layer capacity solver, an intent-to-network-language
compiler, a retrieval store for prompt augmentation, an evaluation harness,
and an HTTP session service for the operator console.
"""

__version__ = "0.1.0"

from .errors import IntentNetError
from .netmodel import (
    AddCapacity,
    AddFiber,
    Demand,
    FiberLink,
    IpLink,
    Node,
    TimeWindow,
    Topology,
    TrafficMatrix,
    apply_action,
    parse_topology,
    parse_traffic_matrix,
    serialize_topology,
    validate_topology,
)
from .solver import (
    CapacityPlan,
    CostModel,
    PlanningProblem,
    brute_force_oracle,
    k_shortest_paths,
    optimize,
    plan_cost,
    size_links,
)
from .intents import (
    Intent,
    NetworkArtifact,
    compile_intent,
    parse_intent_llm,
    parse_intent_pattern,
    verify_artifacts,
)
from .gateway import (
    ChainOfThought,
    ChatMessage,
    FewShot,
    Rag,
    RemoteBackend,
    ReplayBackend,
    ReplayEntry,
    ZeroShot,
    build_prompt,
    complete,
    record_session,
)
from .rag import VectorStore, augment_prompt, chunk_document, embed_text, search
from .pipeline import (
    AnalysisReport,
    AnalysisRequest,
    Plan,
    SessionState,
    Step,
    analyze,
    edit_plan,
    make_plan,
    new_session,
    run_session,
    run_step,
    what_if,
)
from .render import RenderSpec, dot_to_svg, render_dot, render_report
from .evaluation import (
    EvalRecord,
    EvalSummary,
    Rubric,
    aggregate,
    export_report,
    hlp_accuracy,
    score_output,
)

__all__ = [name for name in dir() if not name.startswith("_")]
