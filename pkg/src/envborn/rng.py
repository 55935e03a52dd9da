"""Seeded random objects: unit vectors, unitaries, projectors, partitions.

Used by the verification routines (random eigenspace samples, random
projector trials) and throughout the test suite.  All generators take an
explicit ``numpy.random.Generator`` so that callers own reproducibility.
"""

from __future__ import annotations

import numpy as np

from .hilbert import (
    DensityOperator,
    HilbertSpace,
    Operator,
    Projector,
    StateVector,
    make_state,
    projector_from_span,
)

__all__ = [
    "random_unit_vector",
    "random_state",
    "random_unitary",
    "random_projector",
    "random_density",
    "random_orthogonal_partition",
]


def random_unit_vector(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-uniform unit vector via normalized complex Gaussian."""
    vec = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return vec / np.linalg.norm(vec)


def random_state(space: HilbertSpace, rng: np.random.Generator) -> StateVector:
    return make_state(space, random_unit_vector(space.dim, rng))


def random_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed unitary: QR of a complex Ginibre matrix with the
    R-diagonal phase fixed."""
    ginibre = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    q, r = np.linalg.qr(ginibre)
    phases = np.diagonal(r) / np.abs(np.diagonal(r))
    return q * phases


def random_projector(space: HilbertSpace, rank: int, rng: np.random.Generator) -> Projector:
    """Random rank-``rank`` orthogonal projector on ``space``."""
    if not 1 <= rank <= space.dim:
        raise ValueError(f"rank must be in [1, {space.dim}], got {rank}")
    u = random_unitary(space.dim, rng)
    mat = u[:, :rank] @ u[:, :rank].conj().T
    return Projector(Operator(space, mat))


def random_density(space: HilbertSpace, rng: np.random.Generator) -> DensityOperator:
    """Random full-rank density operator (normalized Wishart)."""
    d = space.dim
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    w = g @ g.conj().T
    return DensityOperator(space, w / np.trace(w).real)


def random_orthogonal_partition(
    space: HilbertSpace, parts: int, rng: np.random.Generator
) -> list[Projector]:
    """Split ``space`` into ``parts`` mutually orthogonal projectors of random
    ranks summing to the dimension (each part nonempty)."""
    d = space.dim
    if not 1 <= parts <= d:
        raise ValueError(f"parts must be in [1, {d}], got {parts}")
    cuts = np.sort(rng.choice(np.arange(1, d), size=parts - 1, replace=False))
    ranks = np.diff(np.concatenate(([0], cuts, [d])))
    u = random_unitary(d, rng)
    projectors = []
    start = 0
    for r in ranks:
        cols = u[:, start : start + r]
        projectors.append(Projector(Operator(space, cols @ cols.conj().T)))
        start += r
    return projectors
