from src.graph.builtins import BUILTIN_GRAPHS, builtin
from src.graph.dag import (
    CausalGraph,
    DirectedPath,
    Node,
    PathSet,
    Role,
    enumerate_paths,
    parse_paths,
    validate_dag,
)
from src.graph.identifiability import (
    IdentifiabilityResult,
    check_identifiability,
    require_identifiable,
)

__all__ = [
    "BUILTIN_GRAPHS",
    "CausalGraph",
    "DirectedPath",
    "IdentifiabilityResult",
    "Node",
    "PathSet",
    "Role",
    "builtin",
    "check_identifiability",
    "enumerate_paths",
    "parse_paths",
    "require_identifiable",
    "validate_dag",
]
