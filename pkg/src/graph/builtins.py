from src.errors import ContractError
from src.graph.dag import CausalGraph, Node, Role


def _fig1a() -> CausalGraph:
    return CausalGraph(
        nodes=(
            Node("Z", Role.LATENT, observed=False),
            Node("A", Role.SENSITIVE),
            Node("X", Role.COVARIATE),
            Node("Y", Role.OUTCOME),
        ),
        edges=frozenset({("Z", "X"), ("Z", "Y"), ("A", "X"), ("A", "Y"), ("X", "Y")}),
        name="fig1a",
    )


def _fig1b() -> CausalGraph:
    base = _fig1a()
    return CausalGraph(
        nodes=base.nodes + (Node("B", Role.BASE),),
        edges=base.edges | {("B", "X"), ("B", "Y")},
        name="fig1b",
    )


def _fig1c() -> CausalGraph:
    base = _fig1b()
    return CausalGraph(
        nodes=base.nodes + (Node("R", Role.RESOLVING),),
        edges=base.edges | {("Z", "R"), ("B", "R"), ("A", "R"), ("X", "R"), ("R", "Y")},
        name="fig1c",
    )


def _fig2() -> CausalGraph:
    return CausalGraph(
        nodes=(
            Node("Z", Role.LATENT, observed=False),
            Node("A", Role.SENSITIVE),
            Node("X", Role.COVARIATE),
            Node("T", Role.TREATMENT),
            Node("Y", Role.OUTCOME),
        ),
        edges=frozenset(
            {
                ("Z", "X"), ("Z", "T"), ("Z", "Y"),
                ("A", "X"), ("A", "T"), ("A", "Y"),
                ("X", "Y"), ("T", "Y"),
            }
        ),
        name="fig2",
    )


BUILTIN_GRAPHS = {
    "fig1a": _fig1a,
    "fig1b": _fig1b,
    "fig1c": _fig1c,
    "fig2": _fig2,
}


def builtin(name: str) -> CausalGraph:
    factory = BUILTIN_GRAPHS.get(name)
    if factory is None:
        raise ContractError(f"Unknown graph: {name}. Valid: {sorted(BUILTIN_GRAPHS)}")
    return factory()
