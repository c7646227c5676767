"""Flux and reaction laws, coupling tables and admissibility checks."""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import TYPE_CHECKING
from typing import TypeVar

import numpy as np

from netdiff.exceptions import CoefficientError
from netdiff.exceptions import DegenerateFluxError
from netdiff.geometry import Violation
from netdiff.geometry import edges_at_vertex
from netdiff.kernels import power_coefficient
from netdiff.kernels import power_coefficient_derivative
from netdiff.kernels import power_potential
from netdiff.kernels import power_reaction
from netdiff.kernels import power_reaction_derivative
from netdiff.schema.model import FluxVariant
from netdiff.schema.model import ReactionKind

if TYPE_CHECKING:
    from numpy.typing import ArrayLike
    from numpy.typing import NDArray

    from netdiff.geometry import PartitionedDomain
    from netdiff.schema.model import CouplingCoefficients
    from netdiff.schema.model import FluxLaw
    from netdiff.schema.model import ModelSpec
    from netdiff.schema.model import ReactionLaw

logger = logging.getLogger(__name__)

_Key = TypeVar("_Key", tuple[int, int], tuple[int, int, int])


def flux_coefficient(law: FluxLaw, s: ArrayLike) -> NDArray[np.float64]:
    """Scalar factor a(s) with flux = a(|g|^2) g."""
    a = power_coefficient(np.asarray(s, dtype=np.float64), law.exponent, law.regularization)
    if law.variant == FluxVariant.LINEAR_PLUS:
        a = a + 1.0
    return np.asarray(a, dtype=np.float64)


def flux_coefficient_derivative(law: FluxLaw, s: ArrayLike) -> NDArray[np.float64]:
    """Derivative a'(s) of the scalar flux factor.

    Raises:
        DegenerateFluxError: For the unregularized flux with p > 2 at s = 0.
    """
    s = np.asarray(s, dtype=np.float64)
    if law.regularization == 0.0 and law.exponent > 2.0 and np.any(s == 0.0):  # noqa: PLR2004
        msg = (
            f"Flux with p={law.exponent} and no regularization is not differentiable "
            "at a zero gradient. Set a positive regularization."
        )
        raise DegenerateFluxError(msg)
    derivative = power_coefficient_derivative(s, law.exponent, law.regularization)
    return np.asarray(derivative, dtype=np.float64)


def flux_eval(law: FluxLaw, gradient: ArrayLike) -> NDArray[np.float64]:
    """Evaluate the flux a(|g|^2) g.

    Args:
        law: Flux law.
        gradient: A scalar edge derivative, or an array whose last axis holds
            the gradient components.

    Returns:
        Flux with the shape of ``gradient``.
    """
    g = np.asarray(gradient, dtype=np.float64)
    if g.ndim == 0:
        return flux_coefficient(law, g * g) * g
    s = np.sum(g * g, axis=-1)
    return flux_coefficient(law, s)[..., None] * g


def flux_jacobian(law: FluxLaw, gradient: ArrayLike) -> NDArray[np.float64]:
    """Derivative of the flux with respect to the gradient.

    The Jacobian is a I + 2 a' g g^T. For a scalar edge derivative this reduces
    to a + 2 a' g^2.

    Raises:
        DegenerateFluxError: For the unregularized flux with p > 2 at a zero gradient.
    """
    g = np.asarray(gradient, dtype=np.float64)
    if g.ndim == 0:
        s = g * g
        return flux_coefficient(law, s) + 2.0 * flux_coefficient_derivative(law, s) * s

    s = np.sum(g * g, axis=-1)
    a = flux_coefficient(law, s)
    da = flux_coefficient_derivative(law, s)
    identity = np.eye(g.shape[-1])
    outer = g[..., :, None] * g[..., None, :]
    return a[..., None, None] * identity + 2.0 * da[..., None, None] * outer


def antiderivative_eval(law: FluxLaw, gradient: ArrayLike) -> NDArray[np.float64]:
    """Potential whose gradient is the flux, zero at the origin.

    For the pure law this is |g|^p / p when unregularized; the linear-plus law
    adds |g|^2 / 2.
    """
    g = np.asarray(gradient, dtype=np.float64)
    s = g * g if g.ndim == 0 else np.sum(g * g, axis=-1)
    value = power_potential(s, law.exponent, law.regularization)
    if law.variant == FluxVariant.LINEAR_PLUS:
        value = value + 0.5 * s
    return np.asarray(value, dtype=np.float64)


def reaction_eval(law: ReactionLaw, s: ArrayLike) -> NDArray[np.float64]:
    """Evaluate the reaction law f(s)."""
    s = np.asarray(s, dtype=np.float64)
    if law.kind == ReactionKind.LINEAR:
        return law.coefficient * s
    if law.kind == ReactionKind.POWER:
        return np.asarray(power_reaction(s, law.coefficient, law.exponent), dtype=np.float64)
    return np.zeros_like(s)


def reaction_derivative(law: ReactionLaw, s: ArrayLike) -> NDArray[np.float64]:
    """Evaluate f'(s); for power laws with sigma < 2 it is 0 at s = 0."""
    s = np.asarray(s, dtype=np.float64)
    if law.kind == ReactionKind.LINEAR:
        return np.full_like(s, law.coefficient)
    if law.kind == ReactionKind.POWER:
        derivative = power_reaction_derivative(s, law.coefficient, law.exponent)
        return np.asarray(derivative, dtype=np.float64)
    return np.zeros_like(s)


def subdomain_growth_bound(p: float) -> float:
    """Upper bound 2 (p-1)^2 / p + 2 on the subdomain reaction growth exponent."""
    return 2.0 * (p - 1.0) ** 2 / p + 2.0


def edge_growth_bound(p: float) -> float:
    """Upper bound (3p-2)(p-1)/p + 2 on the edge reaction growth exponent."""
    return (3.0 * p - 2.0) * (p - 1.0) / p + 2.0


@dataclass(frozen=True)
class CouplingTable:
    """Coupling coefficients resolved on the incidence pairs of a domain.

    Attributes:
        alpha: (subdomain id, edge id) to alpha.
        beta: (subdomain id, edge id) to beta.
        gamma: (vertex id, from edge, to edge) to the transfer rate.
        delta: (vertex id, edge id) to delta.
        lam: (vertex id, edge id) to lambda.
    """

    alpha: dict[tuple[int, int], float]
    beta: dict[tuple[int, int], float]
    gamma: dict[tuple[int, int, int], float]
    delta: dict[tuple[int, int], float]
    lam: dict[tuple[int, int], float]

    def is_populated(self, k: int, edges: list[int]) -> bool:
        """True when the vertex carries a concentration (some delta or lambda nonzero)."""
        return any(
            self.delta.get((k, j), 0.0) > 0.0 or self.lam.get((k, j), 0.0) > 0.0 for j in edges
        )

    @classmethod
    def resolve(
        cls, domain: PartitionedDomain, coefficients: CouplingCoefficients
    ) -> CouplingTable:
        """Expand the configuration tables onto all incidence pairs.

        Unlisted pairs take the table default. Pairs with no default and no
        entry are left out; assembly reports them when it needs them.

        Raises:
            CoefficientError: If an entry names a pair that is not incident.
        """
        errors: list[str] = []
        prefix = "model.coefficients"

        subdomain_pairs = [
            (sub.id, j)
            for sub in domain.subdomains
            for j in sorted({j for j, _ in sub.boundary_loop})
        ]
        vertex_pairs = [
            (vertex.id, j)
            for vertex in domain.vertices
            for j, _ in edges_at_vertex(domain, vertex.id)
        ]
        transfer_keys = []
        for vertex in domain.vertices:
            incident = [j for j, _ in edges_at_vertex(domain, vertex.id)]
            transfer_keys += [(vertex.id, m, n) for m in incident for n in incident if m != n]

        alpha = _fill(coefficients.alpha.default, subdomain_pairs)
        beta = _fill(coefficients.beta.default, subdomain_pairs)
        gamma = _fill(coefficients.gamma.default, transfer_keys)
        delta = _fill(coefficients.delta.default, vertex_pairs)
        lam = _fill(coefficients.lambda_.default, vertex_pairs)

        valid_subdomain = set(subdomain_pairs)
        valid_vertex = set(vertex_pairs)
        valid_transfer = set(transfer_keys)

        for name, table, target in (
            ("alpha", coefficients.alpha, alpha),
            ("beta", coefficients.beta, beta),
        ):
            for n, entry in enumerate(table.entries):
                key = (entry.subdomain, entry.edge)
                if key not in valid_subdomain:
                    errors.append(
                        f"{prefix}.{name}.entries[{n}]: edge {entry.edge} is not adjacent "
                        f"to subdomain {entry.subdomain}"
                    )
                    continue
                target[key] = entry.value

        for name, vtable, vtarget in (
            ("delta", coefficients.delta, delta),
            ("lambda", coefficients.lambda_, lam),
        ):
            for n, ventry in enumerate(vtable.entries):
                key = (ventry.vertex, ventry.edge)
                if key not in valid_vertex:
                    errors.append(
                        f"{prefix}.{name}.entries[{n}]: vertex {ventry.vertex} is not "
                        f"incident to edge {ventry.edge}"
                    )
                    continue
                vtarget[key] = ventry.value

        for n, tentry in enumerate(coefficients.gamma.entries):
            tkey = (tentry.vertex, tentry.source, tentry.target)
            if tkey not in valid_transfer:
                errors.append(
                    f"{prefix}.gamma.entries[{n}]: edges {tentry.source} and {tentry.target} "
                    f"do not both meet at vertex {tentry.vertex}"
                )
                continue
            gamma[tkey] = tentry.value

        if errors:
            raise CoefficientError("\n".join(errors))

        return cls(alpha=alpha, beta=beta, gamma=gamma, delta=delta, lam=lam)


def check_assumptions(  # noqa: C901, PLR0912
    spec: ModelSpec,
    domain: PartitionedDomain,
    p: float | None = None,
    table: CouplingTable | None = None,
) -> list[Violation]:
    """Check the admissibility conditions of a model on a partition.

    Covers the reaction growth bounds, monotonicity of the power laws,
    positivity of alpha and beta, the populated/unpopulated split of delta and
    lambda, and the vertex balance delta + sum gamma_out >= sum gamma_in.

    Args:
        spec: Model to check.
        domain: Partition the coefficients live on.
        p: Growth index; defaults to the exponent of each flux law.
        table: Pre-resolved coefficients; resolved from ``spec`` when omitted.

    Returns:
        Violations with locations; empty when every condition holds.
    """
    violations: list[Violation] = []

    def add(kind: str, location: str, message: str) -> None:
        violations.append(Violation(kind=kind, location=location, message=message))

    p_sub = spec.subdomain_flux.exponent if p is None else p
    p_edge = spec.edge_flux.exponent if p is None else p

    q = spec.subdomain_reaction.growth_exponent
    q_bound = subdomain_growth_bound(p_sub)
    if not q < q_bound:
        add(
            "growth",
            "model.subdomainReaction",
            f"growth exponent {q:g} must be below {q_bound:g}",
        )

    r = spec.edge_reaction.growth_exponent
    r_bound = edge_growth_bound(p_edge)
    if not r < r_bound:
        add("growth", "model.edgeReaction", f"growth exponent {r:g} must be below {r_bound:g}")

    for location, law in (
        ("model.subdomainReaction", spec.subdomain_reaction),
        ("model.edgeReaction", spec.edge_reaction),
    ):
        if law.kind == ReactionKind.POWER and law.exponent <= 1.0:
            add("monotone", location, f"power exponent {law.exponent:g} must exceed 1")

    if table is None:
        table = CouplingTable.resolve(domain, spec.coefficients)

    for sub in domain.subdomains:
        for j in sorted({j for j, _ in sub.boundary_loop}):
            for name, values in (("alpha", table.alpha), ("beta", table.beta)):
                value = values.get((sub.id, j))
                location = f"subdomain {sub.id}, edge {j}"
                if value is None:
                    add("coefficient", location, f"{name} is missing")
                elif not value > 0.0:
                    add("coefficient", location, f"{name} must be positive, got {value:g}")

    for vertex in domain.vertices:
        k = vertex.id
        incident = [j for j, _ in edges_at_vertex(domain, k)]
        rates = [(table.delta.get((k, j)), table.lam.get((k, j))) for j in incident]
        if any(d is None or lm is None for d, lm in rates):
            add("coefficient", f"vertex {k}", "delta or lambda is missing")
            continue

        flat = [value for pair in rates for value in pair]
        if any(value > 0.0 for value in flat) and not all(value > 0.0 for value in flat):
            add(
                "population",
                f"vertex {k}",
                "delta and lambda must be all zero (unpopulated) or all positive",
            )

        for j in incident:
            outgoing = sum(table.gamma.get((k, j, m), 0.0) for m in incident if m != j)
            incoming = sum(table.gamma.get((k, m, j), 0.0) for m in incident if m != j)
            delta = table.delta[(k, j)]
            scale = max(abs(delta) + outgoing + incoming, 1.0)
            if delta + outgoing < incoming - 1e-14 * scale:
                add(
                    "balance",
                    f"vertex {k}, edge {j}",
                    f"delta + outgoing transfer {delta + outgoing:g} is below "
                    f"incoming transfer {incoming:g}",
                )

    for violation in violations:
        logger.debug("Assumption violated: %s", violation)

    return violations


def _fill(default: float | None, keys: list[_Key]) -> dict[_Key, float]:
    return {} if default is None else {key: float(default) for key in keys}
