import logging
from dataclasses import dataclass
from itertools import product

from src.errors import ContractError, IdentifiabilityError
from src.graph.dag import CausalGraph, DirectedPath, PathSet, enumerate_paths

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IdentifiabilityResult:
    identifiable: bool
    witness: str | None = None
    # the (active, inactive) pair of paths that share the prefix up to the witness
    conflict: tuple[DirectedPath, DirectedPath] | None = None

    def to_dict(self) -> dict:
        return {
            "identifiable": self.identifiable,
            "witness": self.witness,
            "conflict": [str(p) for p in self.conflict] if self.conflict else None,
        }


def check_identifiability(graph: CausalGraph, pi: PathSet) -> IdentifiabilityResult:
    """Recanting-witness check for the effect along the path set ``pi``.

    Non-identifiable iff some W (not A, not Y) lies on a path in ``pi`` and on an
    A->Y path outside ``pi`` with the same A->W prefix.
    """
    all_paths = enumerate_paths(graph)
    known = set(all_paths)
    unknown = sorted(p for p in pi if p not in known)
    if unknown:
        raise ContractError(
            f"Paths not in graph {graph.name}: {', '.join(str(p) for p in unknown)}"
        )

    active = sorted(pi)
    inactive = [p for p in all_paths if p not in pi]
    for p_active, p_inactive in product(active, inactive):
        for depth, w in enumerate(p_active.nodes[1:-1], start=1):
            prefix = p_active.nodes[: depth + 1]
            if p_inactive.nodes[: depth + 1] == prefix:
                logger.debug("Witness %s for %s vs %s", w, p_active, p_inactive)
                return IdentifiabilityResult(False, w, (p_active, p_inactive))
    return IdentifiabilityResult(True)


def require_identifiable(graph: CausalGraph, pi: PathSet) -> None:
    result = check_identifiability(graph, pi)
    if not result.identifiable:
        active, inactive = result.conflict
        raise IdentifiabilityError(
            f"Path set is not identifiable: {result.witness} is a recanting witness "
            f"({active} is active but {inactive} is not)",
            witness=result.witness,
        )
