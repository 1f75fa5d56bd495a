"""Block-cycle linearization of matrix products.

A product M_1 ... M_m of n x n matrices embeds into an mn x mn matrix
with M_a in block (a, a+1 mod m) and zeros elsewhere.  The m-th power of
that block cycle is block diagonal with the cyclic products, so its
eigenvalues are the product's eigenvalues with multiplicity m.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .linalg import NearSingularError, as_matrix, eigenvalues, resolvent


@dataclass(frozen=True)
class BlockCycle:
    """Ordered factors (M_1, ..., M_m), all n x n."""

    blocks: tuple

    def __post_init__(self):
        blocks = tuple(as_matrix(b) for b in self.blocks)
        if not blocks:
            raise ValueError("block cycle needs at least one factor")
        n = blocks[0].shape[0]
        for b in blocks:
            if b.shape != (n, n):
                raise ValueError("all blocks must be square with equal size")
        object.__setattr__(self, "blocks", blocks)

    @property
    def m(self) -> int:
        return len(self.blocks)

    @property
    def n(self) -> int:
        return self.blocks[0].shape[0]

    def product(self) -> np.ndarray:
        p = self.blocks[0]
        for b in self.blocks[1:]:
            p = p @ b
        return p


def materialize(bc: BlockCycle) -> np.ndarray:
    """The mn x mn cyclic-superdiagonal matrix; M_m lands in block (m, 1)."""
    m, n = bc.m, bc.n
    if m == 1:
        return bc.blocks[0].copy()
    out = np.zeros((m * n, m * n), dtype=complex)
    for a, block in enumerate(bc.blocks):
        b = (a + 1) % m
        out[a * n : (a + 1) * n, b * n : (b + 1) * n] = block
    return out


@dataclass(frozen=True)
class LinearizationReport:
    max_distance: float
    ok: bool


def verify_linearization(bc: BlockCycle, tol: float) -> LinearizationReport:
    """Check that eig(cycle^m) matches eig(product) with multiplicity m.

    Each eigenvalue of the product must absorb exactly m eigenvalues of
    the materialized cycle's m-th power.  Greedy nearest matching first;
    exact assignment as a fallback if the greedy max distance exceeds tol.
    """
    if bc.m * bc.n > 400:
        raise ValueError("verify_linearization is limited to mn <= 400")
    big = np.linalg.matrix_power(materialize(bc), bc.m)
    lam_big = eigenvalues(big).eigenvalues
    lam_p = eigenvalues(bc.product()).eigenvalues

    max_dist = _greedy_capacity_match(lam_p, lam_big, bc.m)
    if max_dist > tol:
        max_dist = _assignment_match(lam_p, lam_big, bc.m)
    return LinearizationReport(max_distance=max_dist, ok=max_dist <= tol)


def _greedy_capacity_match(targets, pool, capacity) -> float:
    pool = list(pool)
    worst = 0.0
    for lam in targets:
        for _ in range(capacity):
            dists = [abs(lam - w) for w in pool]
            j = int(np.argmin(dists))
            worst = max(worst, dists[j])
            pool.pop(j)
    return worst


def _assignment_match(targets, pool, capacity) -> float:
    # replicate each target eigenvalue m times and solve the square assignment
    expanded = np.repeat(np.asarray(targets), capacity)
    cost = np.abs(expanded[:, None] - np.asarray(pool)[None, :])
    rows, cols = linear_sum_assignment(cost)
    return float(cost[rows, cols].max())


def block_resolvent_11(p, z: complex, m: int) -> np.ndarray:
    """The (1,1) block of the cycle resolvent: z^{m-1} (P - z^m I)^{-1}."""
    p = as_matrix(p)
    try:
        return z ** (m - 1) * resolvent(p, z**m)
    except NearSingularError:
        raise NearSingularError(f"z^m = {z**m} is an eigenvalue of the product")
