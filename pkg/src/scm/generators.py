"""Synthetic data generating processes."""

import logging
from dataclasses import dataclass, field
from typing import Literal

import numpy as np
from pydantic import BaseModel, ConfigDict, Field
from scipy.special import logit as logit_of

from src.errors import ContractError
from src.graph import CausalGraph, DirectedPath, builtin
from src.scm.mechanism import Mechanism, Values, bernoulli, gaussian
from src.scm.model import Scm

logger = logging.getLogger(__name__)


# --- black-box scoring simulation ---


class AppendixDgpParams(BaseModel):
    """Parameters of the black-box scoring simulation."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    a_x: float = 0.1
    b_x: float = 0.55
    c_x: float = 0.2
    p_a: float = Field(0.5, gt=0.0, lt=1.0)
    mu_z: float = 0.0
    sigma_z: float = Field(1.0, gt=0.0)
    gamma_x: float = 1.5
    gamma_y: float = -8.5
    theta_a: float = 3.0
    theta_x: float = 2.0 / 3.0
    theta_z: float = 2.0


def appendix_outcome_logit(params: AppendixDgpParams, a, x, z) -> np.ndarray:
    """gamma_y + theta_a*a + theta_x*sum_j x_j^2 + theta_z*z, shape (n, 1)."""
    a = np.asarray(a, dtype=np.float64).reshape(-1, 1)
    z = np.asarray(z, dtype=np.float64).reshape(-1, 1)
    x = np.asarray(x, dtype=np.float64).reshape(a.shape[0], -1)
    sq = np.sum(x**2, axis=1, keepdims=True)
    return params.gamma_y + params.theta_a * a + params.theta_x * sq + params.theta_z * z


def appendix_dgp(params: AppendixDgpParams | None = None) -> Scm:
    p = params or AppendixDgpParams()

    def x_mean(v: Values) -> np.ndarray:
        a, z = v["A"], v["Z"]
        return np.hstack([-(p.gamma_x + a), z, p.gamma_x + a])

    def x_sd(v: Values) -> np.ndarray:
        return np.maximum(p.a_x, p.b_x + p.c_x * v["Z"])

    mechanisms = {
        "A": bernoulli((), lambda v: logit_of(p.p_a)),
        "Z": gaussian((), lambda v: p.mu_z, p.sigma_z),
        "X": gaussian(("A", "Z"), x_mean, x_sd, width=3),
        "Y": bernoulli(
            ("A", "X", "Z"), lambda v: appendix_outcome_logit(p, v["A"], v["X"], v["Z"])
        ),
    }
    return Scm(builtin("fig1a"), mechanisms, name="appendix")


# --- linear-Gaussian SCMs over any graph ---


@dataclass(frozen=True, eq=False)
class LinearScm(Scm):
    """Scm whose non-sensitive nodes are linear in their parents with Gaussian noise."""

    coefficients: dict[tuple[str, str], float] = field(default_factory=dict)

    def path_coefficient(self, path: DirectedPath) -> float:
        """Product of edge coefficients along ``path``."""
        product = 1.0
        for edge in path.edges():
            if edge not in self.coefficients:
                raise ContractError(f"{edge[0]}->{edge[1]} is not an edge of {self.name}")
            product *= self.coefficients[edge]
        return product


def linear_gaussian_scm(
    graph: CausalGraph,
    coefficients: dict[tuple[str, str], float],
    intercepts: dict[str, float] | None = None,
    noise_sd: float = 1.0,
    p_a: float = 0.5,
    binary_outcome: bool = False,
) -> LinearScm:
    """A ~ Ber(p_a) (logit-linear in its parents if it has any); every other
    node = intercept + sum(coef * parent) + noise_sd * u.

    With ``binary_outcome`` the outcome is Bernoulli with that linear predictor as
    its logit, so path coefficients no longer give the effect in closed form.
    """
    missing = sorted(e for e in graph.edges if e not in coefficients)
    if missing:
        raise ContractError(f"Missing edge coefficients: {missing}")
    unknown = sorted(e for e in coefficients if e not in graph.edges)
    if unknown:
        raise ContractError(f"Coefficients for edges not in {graph.name}: {unknown}")
    intercepts = intercepts or {}
    sensitive = graph.sensitive

    def linear(node: str):
        parents = graph.parents(node)
        weights = [coefficients[(p, node)] for p in parents]
        c0 = intercepts.get(node, 0.0)
        return lambda v: c0 + sum(w * v[p] for p, w in zip(parents, weights))

    mechanisms: dict[str, Mechanism] = {}
    for node in graph.topological_order:
        parents = graph.parents(node)
        if node == sensitive:
            location = linear(node)
            mechanisms[node] = bernoulli(
                parents, lambda v, f=location: logit_of(p_a) + f(v)
            )
        elif binary_outcome and node == graph.outcome:
            mechanisms[node] = bernoulli(parents, linear(node))
        else:
            mechanisms[node] = gaussian(parents, linear(node), noise_sd)
    return LinearScm(
        graph, mechanisms, name=f"linear-{graph.name}", coefficients=dict(coefficients)
    )


# --- semi-synthetic fig2 structure ---


class MechanismTemplate(BaseModel):
    """Linear (Gaussian) or logistic (Bernoulli) mechanism in the node's parents.

    A coefficient may be a scalar (shared across the parent's columns, and across
    the node's columns) or a list with one entry per column.
    """

    model_config = ConfigDict(extra="forbid")

    form: Literal["linear", "logistic"] = "linear"
    intercept: float = 0.0
    coefficients: dict[str, float | list[float]] = Field(default_factory=dict)
    sd: float = Field(1.0, gt=0.0)


class Fig2Config(BaseModel):
    """Treatment-style generator over Z, A -> X; Z, A -> T; Z, A, X, T -> Y.

    The default outcome has a strong treatment effect so that Y is bimodal in T.
    """

    model_config = ConfigDict(extra="forbid")

    n_covariates: int = Field(5, ge=1)
    p_a: float = Field(0.5, gt=0.0, lt=1.0)
    x: MechanismTemplate = MechanismTemplate(coefficients={"Z": 1.0, "A": 0.5})
    t: MechanismTemplate = MechanismTemplate(
        form="logistic", intercept=-0.25, coefficients={"Z": 0.5, "A": 0.5}
    )
    y: MechanismTemplate = MechanismTemplate(
        coefficients={"T": 4.0, "A": 0.5, "Z": 0.3, "X": 0.05}, sd=0.5
    )

    @classmethod
    def zero_treatment_effect(cls) -> "Fig2Config":
        default = cls()
        y = default.y.model_copy(update={"coefficients": dict(default.y.coefficients, T=0.0)})
        return default.model_copy(update={"y": y})


def _template_mechanism(
    graph: CausalGraph, node: str, template: MechanismTemplate, width: int, widths: dict[str, int]
) -> Mechanism:
    parents = graph.parents(node)
    stray = sorted(set(template.coefficients) - set(parents))
    if stray:
        raise ContractError(f"Mechanism for {node} references non-parents {stray}")
    if template.form == "logistic" and width != 1:
        raise ContractError(f"Logistic template for {node} needs a single column")

    terms = []
    for parent, coef in sorted(template.coefficients.items()):
        c = np.asarray(coef, dtype=np.float64)
        expected = widths[parent] if widths[parent] > 1 else width
        if c.ndim == 1 and c.size != expected:
            raise ContractError(
                f"Coefficient list for {parent}->{node} has {c.size} entries, expected {expected}"
            )
        terms.append((parent, c))

    def location(v: Values) -> np.ndarray:
        out = template.intercept
        for parent, c in terms:
            pv = v[parent]
            if pv.shape[1] > 1:
                # multi-column parent: weighted sum over its columns
                out = out + (pv @ np.broadcast_to(c, (pv.shape[1],))).reshape(-1, 1)
            else:
                out = out + pv * c
        return out

    if template.form == "logistic":
        return bernoulli(parents, location)
    return gaussian(parents, location, template.sd, width=width)


def semi_synthetic_fig2(config: Fig2Config | None = None) -> Scm:
    config = config or Fig2Config()
    graph = builtin("fig2")
    widths = {"Z": 1, "A": 1, "T": 1, "X": config.n_covariates, "Y": 1}
    mechanisms = {
        "Z": gaussian((), lambda v: 0.0, 1.0),
        "A": bernoulli((), lambda v: logit_of(config.p_a)),
        "X": _template_mechanism(graph, "X", config.x, config.n_covariates, widths),
        "T": _template_mechanism(graph, "T", config.t, 1, widths),
        "Y": _template_mechanism(graph, "Y", config.y, 1, widths),
    }
    return Scm(graph, mechanisms, name="fig2")
