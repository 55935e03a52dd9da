"""Proper and improper mixtures and their probabilistic equivalence.

A proper mixture blends pure sub-ensembles with statistical weights (optionally
realized as sub-ensemble counts N_k / N); an improper mixture is a subsystem's
reduced density operator from an entangled partner.  Both probability routes
are computed twice on every call (sub-ensemble sum vs trace rule, composite
trace vs reduced trace) and the internal identities are enforced, so a
disagreement signals an arithmetic bug, not a physics result.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hilbert import (
    DensityOperator,
    HilbertSpace,
    Projector,
    StateVector,
    NORM_TOL,
    partial_trace,
    pure_density,
    trace_probability,
)
from .rng import random_projector
from .schmidt import BipartiteState

__all__ = [
    "MixtureSpec",
    "mix",
    "proper_probability",
    "improper_probability",
    "proper_improper_equivalence",
    "purify",
]


@dataclass(frozen=True)
class MixtureSpec:
    """Pure components with statistical weights; optional integer counts must
    reproduce the weights as N_k / N."""

    components: tuple[tuple[StateVector, float], ...]
    counts: tuple[int, ...] | None = None

    def __post_init__(self):
        comps = tuple((s, float(w)) for s, w in self.components)
        if not comps:
            raise ValueError("a mixture needs at least one component")
        if any(w <= 0 for _, w in comps):
            raise ValueError("weights must be positive")
        total = sum(w for _, w in comps)
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"weights sum to {total!r}, expected 1")
        dim = comps[0][0].space.dim
        if any(s.space.dim != dim for s, _ in comps):
            raise ValueError("all components must share one space")
        if self.counts is not None:
            counts = tuple(int(n) for n in self.counts)
            if len(counts) != len(comps):
                raise ValueError("one count per component is required")
            if any(n <= 0 for n in counts):
                raise ValueError("counts must be positive integers")
            grand = sum(counts)
            for (_, w), n in zip(comps, counts):
                if abs(w - n / grand) > NORM_TOL:
                    raise ValueError(
                        f"count {n}/{grand} does not reproduce weight {w!r}"
                    )
            object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "components", comps)

    @property
    def space(self) -> HilbertSpace:
        return self.components[0][0].space


def mix(spec: MixtureSpec) -> DensityOperator:
    """The proper-mixture density operator ``sum_k w_k |phi_k><phi_k|``."""
    d = spec.space.dim
    rho = np.zeros((d, d), dtype=complex)
    for state, w in spec.components:
        rho += w * np.outer(state.amplitudes, state.amplitudes.conj())
    return DensityOperator(spec.space, rho)


def proper_probability(P: Projector, spec: MixtureSpec, tol: float = NORM_TOL) -> float:
    """Event probability in a proper mixture via the sub-ensemble sum
    ``sum_k w_k <phi_k|P|phi_k>``, verified on every call against the trace
    rule on the mixed density operator."""
    if P.space.dim != spec.space.dim:
        raise ValueError("projector and mixture spaces differ")
    by_components = 0.0
    for state, w in spec.components:
        amp = state.amplitudes
        by_components += w * float((amp.conj() @ (P.matrix @ amp)).real)
    by_trace = float(np.trace(P.matrix @ mix(spec).matrix).real)
    if abs(by_components - by_trace) > tol:
        raise ValueError(
            "sub-ensemble sum and trace rule disagree: "
            f"{by_components!r} vs {by_trace!r}"
        )
    return min(max(by_components, 0.0), 1.0)


def improper_probability(P1: Projector, psi12: BipartiteState, tol: float = NORM_TOL) -> float:
    """First-factor event probability in an entangled composite, computed both
    on the composite state and through the reduced density operator; the two
    must agree within ``tol``."""
    d1, d2 = psi12.dims
    if P1.space.dim != d1:
        raise ValueError(f"projector dim {P1.space.dim} does not match factor 1 ({d1})")
    vec = psi12.state.amplitudes
    lifted = np.kron(P1.matrix, np.eye(d2))
    on_composite = float((vec.conj() @ (lifted @ vec)).real)
    rho1 = partial_trace(pure_density(psi12.state), psi12.dims, keep=0)
    on_reduced = float(np.trace(P1.matrix @ rho1.matrix).real)
    if abs(on_composite - on_reduced) > tol:
        raise ValueError(
            "composite and partial-trace routes disagree: "
            f"{on_composite!r} vs {on_reduced!r}"
        )
    return min(max(on_reduced, 0.0), 1.0)


def proper_improper_equivalence(
    spec: MixtureSpec,
    psi12: BipartiteState,
    trials: int = 50,
    seed: int = 0,
    tol: float = 1e-10,
) -> float:
    """Max difference between proper and improper probabilities over random
    projectors of random rank.

    Requires the mixed density operator to equal the composite's reduced state
    (otherwise the comparison is meaningless and a ValueError is raised).
    """
    rho_mix = mix(spec)
    rho1 = partial_trace(pure_density(psi12.state), psi12.dims, keep=0)
    gap = np.linalg.norm(rho_mix.matrix - rho1.matrix)
    if gap > tol:
        raise ValueError(
            f"mixture does not match the reduced state (residual {gap:.3e}); "
            "proper/improper comparison is meaningless"
        )
    rng = np.random.default_rng(seed)
    space1 = HilbertSpace(psi12.d1)
    worst = 0.0
    for _ in range(trials):
        rank = int(rng.integers(1, space1.dim + 1))
        P = random_projector(space1, rank, rng)
        worst = max(worst, abs(proper_probability(P, spec) - improper_probability(P, psi12)))
    return worst


def purify(rho: DensityOperator, threshold: float = 1e-12) -> BipartiteState:
    """Canonical purification: ``sum_l sqrt(r_l) |l>_1 |l>_2`` over the
    eigenbasis of ``rho`` (eigenvalues below ``threshold`` dropped).  The
    partner factor has the same dimension; tracing it out recovers ``rho``."""
    values, vectors = np.linalg.eigh(rho.matrix)
    order = np.argsort(values)[::-1]
    d = rho.space.dim
    vec = np.zeros(d * d, dtype=complex)
    for idx in order:
        r = float(values[idx])
        if r < threshold:
            continue
        v = vectors[:, idx]
        vec += np.sqrt(r) * np.kron(v, v)
    vec /= np.linalg.norm(vec)
    composite = HilbertSpace(d * d, rho.space.label and f"{rho.space.label}+partner")
    return BipartiteState(StateVector(composite, vec), (d, d))
