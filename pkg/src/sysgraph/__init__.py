"""System-graph modeling toolchain.

Parse models written in the ``.sg`` language, elaborate them into explicit
transition systems, check refinements and temporal properties, simulate
executions, emit skeleton bundles and archive versions.
"""
__version__ = "0.1.0"
SCHEMA_VERSION = 1

from .dsl import load_model, parse_model, parse_source, print_graph, validate_graph  # noqa: E402
from .elaboration import (  # noqa: E402
    ChannelSystem,
    ExplorationConfig,
    compose_interleave,
    compose_shared,
    explore,
    interpret_graph,
)
from .equivalence import bisim_equiv, refine_check, simulates  # noqa: E402
from .increment import classify_next_move, compose_vertical, embed, is_module  # noqa: E402
from .runtime import (  # noqa: E402
    DivergenceResolver,
    EffectRegistry,
    detect_divergences,
    run,
    run_parallel,
    trace_conformance,
)
from .skeleton import bundle_to_graph, generate_skeleton  # noqa: E402
from .verification import check, check_ctl, check_ltl, compile_property, emit_promela, parse_formula  # noqa: E402
from .versioning import VersionStore, graph_digest  # noqa: E402

__all__ = [
    "ChannelSystem", "DivergenceResolver", "EffectRegistry", "ExplorationConfig", "VersionStore",
    "bisim_equiv", "bundle_to_graph", "check", "check_ctl", "check_ltl", "classify_next_move",
    "compile_property", "compose_interleave", "compose_shared", "compose_vertical", "detect_divergences",
    "embed", "emit_promela", "explore", "generate_skeleton", "graph_digest", "interpret_graph", "is_module",
    "load_model", "parse_formula", "parse_model", "parse_source", "print_graph", "refine_check", "run",
    "run_parallel", "simulates", "trace_conformance", "validate_graph",
]
