"""Colored path-graph calculus for exact product-matrix moments.

Each term in the expansion of u* (Y/sqrt(n))^k v over the block-cycle
matrix Y corresponds to an m-colored k-path graph: a lattice path with
time coordinates 1..k+1 and height coordinates in [n], where edge t has
color ((a + t - 2) mod m) + 1 for start color a.  Graphs related by a
height permutation carry equal expectations, so exact moments reduce to
a sum over canonical representatives (restricted-growth sequences)
weighted by class sizes.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import prod

import numpy as np

from .ensembles import AtomVariable, moment

MAX_PATH_EDGES = 10
BRUTE_FORCE_GUARD = 10**7


@dataclass(frozen=True)
class PathGraph:
    """An m-colored k-path graph G^a(i_1, ..., i_{k+1})."""

    m: int
    start_color: int
    heights: tuple
    n_ambient: int

    def __post_init__(self):
        if self.m < 1:
            raise ValueError("need at least one color")
        if not 1 <= self.start_color <= self.m:
            raise ValueError("start color out of range")
        if len(self.heights) < 2:
            raise ValueError("a path graph needs at least one edge")
        if any(not 1 <= h <= self.n_ambient for h in self.heights):
            raise ValueError("heights must lie in [1, n_ambient]")
        object.__setattr__(self, "heights", tuple(int(h) for h in self.heights))

    @property
    def k(self) -> int:
        return len(self.heights) - 1

    def edge_color(self, t: int) -> int:
        """Color of edge t (1-based): start color advanced t-1 steps mod m."""
        return (self.start_color + t - 2) % self.m + 1

    def edge_span(self, t: int) -> tuple:
        """Ordered height pair (i_t, i_{t+1}) of edge t (1-based)."""
        return (self.heights[t - 1], self.heights[t])

    def edge_types(self) -> list:
        """'I' for edges ending at a fresh height, 'II' otherwise."""
        out = []
        for t in range(1, self.k + 1):
            seen = self.heights[:t]
            out.append("I" if self.heights[t] not in seen else "II")
        return out


def canonicalize(g: PathGraph) -> PathGraph:
    """Relabel heights in first-appearance order; idempotent."""
    relabel = {}
    new_heights = []
    for h in g.heights:
        if h not in relabel:
            relabel[h] = len(relabel) + 1
        new_heights.append(relabel[h])
    return PathGraph(g.m, g.start_color, tuple(new_heights), g.n_ambient)


def is_canonical(g: PathGraph) -> bool:
    return canonicalize(g).heights == g.heights


def height(g: PathGraph) -> int:
    """Number of distinct heights visited (max height of the canonical form)."""
    return len(set(g.heights))


def parallel_pairs(g: PathGraph) -> list:
    """Unordered edge pairs (s, t), s < t, with equal ordered spans."""
    spans = [g.edge_span(t) for t in range(1, g.k + 1)]
    return [
        (s + 1, t + 1)
        for s in range(len(spans))
        for t in range(s + 1, len(spans))
        if spans[s] == spans[t]
    ]


def class_size(h: int, n: int) -> int:
    """Graphs equivalent to a canonical graph of height h, in ambient [n].

    Injective relabelings of h distinct heights: the falling factorial
    n (n-1) ... (n-h+1).
    """
    out = 1
    for j in range(h):
        out *= n - j
    return max(out, 0)


@dataclass(frozen=True)
class CanonicalClass:
    representative: PathGraph
    h: int

    def size(self, n: int) -> int:
        return class_size(self.h, n)


def enumerate_canonical(m: int, k: int, start_color: int = 1, n_ambient: int | None = None):
    """All canonical classes for m colors and k edges.

    Canonical height sequences are exactly the restricted-growth strings
    of length k+1 starting at 1, so the count is the Bell number B(k+1),
    independent of m and the start color.
    """
    if k > MAX_PATH_EDGES:
        raise ValueError(f"k={k} exceeds the combinatorial guard {MAX_PATH_EDGES}")
    if n_ambient is None:
        n_ambient = k + 1
    classes = []

    def grow(seq, peak):
        if len(seq) == k + 1:
            g = PathGraph(m, start_color, tuple(seq), n_ambient)
            classes.append(CanonicalClass(g, peak))
            return
        for nxt in range(1, peak + 2):
            seq.append(nxt)
            grow(seq, max(peak, nxt))
            seq.pop()

    grow([1], 1)
    return classes


def expectation_contribution(g: PathGraph, atoms) -> complex:
    """Exact E[x_G] for the matrix-entry product encoded by the graph.

    Entries are grouped by (color, ordered span); distinct groups are
    independent, so the expectation factors into per-group moments
    E[xi_color^multiplicity] (entries appear unconjugated).
    """
    atoms = list(atoms)
    if len(atoms) != g.m:
        raise ValueError(f"need {g.m} atoms, got {len(atoms)}")
    groups = {}
    for t in range(1, g.k + 1):
        key = (g.edge_color(t), g.edge_span(t))
        groups[key] = groups.get(key, 0) + 1
    out = 1.0 + 0j
    for (color, _), mult in groups.items():
        out *= moment(atoms[color - 1], mult)
        if out == 0:
            return 0j
    return out


def _block_weights(vec, m: int, n: int):
    """Split an mn-vector into its m blocks of length n."""
    vec = np.asarray(vec, dtype=complex).reshape(-1)
    if len(vec) != m * n:
        raise ValueError(f"vector length {len(vec)} != m*n = {m * n}")
    return [vec[a * n : (a + 1) * n] for a in range(m)]


def exact_moment_bruteforce(u, v, atoms, n: int, m: int, k: int) -> complex:
    """E[u* (Y/sqrt(n))^k v] by full enumeration of index tuples.

    For each start block a the only nonzero block of Y^k is
    X_a X_{a+1} ... X_{a+k-1} (colors mod m), landing in block
    b = ((a + k - 1) mod m) + 1; every height tuple contributes its exact
    factored expectation.
    """
    atoms = list(atoms)
    if n ** (k + 1) * m > BRUTE_FORCE_GUARD:
        raise ValueError("brute-force guard exceeded")
    ublocks = _block_weights(u, m, n)
    vblocks = _block_weights(v, m, n)
    total = 0j
    scale = n ** (-k / 2.0)
    for a in range(1, m + 1):
        b = (a + k - 1) % m + 1
        ua = ublocks[a - 1]
        vb = vblocks[b - 1]
        if not np.any(ua) or not np.any(vb):
            continue
        for flat in range(n ** (k + 1)):
            heights = []
            rem = flat
            for _ in range(k + 1):
                heights.append(rem % n + 1)
                rem //= n
            g = PathGraph(m, a, tuple(heights), n)
            weight = np.conj(ua[heights[0] - 1]) * vb[heights[-1] - 1]
            if weight == 0:
                continue
            ex = expectation_contribution(g, atoms)
            if ex != 0:
                total += weight * ex
    return total * scale


class UnsupportedVectorStructure(ValueError):
    """class-sum closed form requires coordinate or uniform vectors."""


def _classify_vector(vec, m: int, n: int):
    """Return ("coordinate", block, index) or ("uniform", value) or raise."""
    blocks = _block_weights(vec, m, n)
    full = np.concatenate(blocks)
    nonzero = np.flatnonzero(full)
    if len(nonzero) == 1:
        idx = int(nonzero[0])
        return ("coordinate", idx // n + 1, idx % n + 1, full[idx])
    if np.allclose(full, full[0]) and full[0] != 0:
        return ("uniform", complex(full[0]))
    raise UnsupportedVectorStructure(
        "closed-form class sums need coordinate or uniform vectors; "
        "fall back to exact_moment_bruteforce"
    )


def _boundary_weight_sum(rep: PathGraph, h: int, n: int, ustruct, vstruct, a: int, b: int):
    """Sum of conj(u_{i1}) v_{i_{k+1}} over all members of a class.

    Members are injective relabelings of the h canonical heights into
    [n]; the canonical first height is always 1.
    """
    first = rep.heights[0]
    last = rep.heights[-1]
    if ustruct[0] == "uniform" and vstruct[0] == "uniform":
        return np.conj(ustruct[1]) * vstruct[1] * class_size(h, n)
    if ustruct[0] == "coordinate" and vstruct[0] == "coordinate":
        _, ublock, uidx, uval = ustruct
        _, vblock, vidx, vval = vstruct
        if ublock != a or vblock != b:
            return 0j
        weight = np.conj(uval) * vval
        if last == first:
            # sigma(first) = uidx and sigma(last) = vidx must agree
            if uidx != vidx:
                return 0j
            return weight * class_size(h - 1, n - 1)
        if uidx == vidx:
            return 0j
        return weight * class_size(h - 2, n - 2)
    # mixed coordinate/uniform: pin one endpoint, sum the other freely
    if ustruct[0] == "coordinate":
        _, ublock, _, uval = ustruct
        if ublock != a:
            return 0j
        pinned_last = last == first
        count = class_size(h - 1, n - 1)
        return np.conj(uval) * vstruct[1] * count * (1 if pinned_last else 1)
    _, vblock, _, vval = vstruct
    if vblock != b:
        return 0j
    return np.conj(ustruct[1]) * vval * class_size(h - 1, n - 1)


def exact_moment_by_classes(u, v, atoms, n: int, m: int, k: int) -> complex:
    """E[u* (Y/sqrt(n))^k v] summed over canonical equivalence classes.

    Equivalent graphs share an expectation, so each class contributes
    E[x_rep] times the boundary-weight sum over its members.  Closed-form
    boundary sums exist only for coordinate and uniform vectors; anything
    else falls back to the brute-force expansion.
    """
    atoms = list(atoms)
    if k > MAX_PATH_EDGES:
        raise ValueError(f"k={k} exceeds the combinatorial guard {MAX_PATH_EDGES}")
    try:
        ustruct = _classify_vector(u, m, n)
        vstruct = _classify_vector(v, m, n)
    except UnsupportedVectorStructure:
        return exact_moment_bruteforce(u, v, atoms, n, m, k)
    total = 0j
    scale = n ** (-k / 2.0)
    for a in range(1, m + 1):
        b = (a + k - 1) % m + 1
        for cls in enumerate_canonical(m, k, start_color=a, n_ambient=max(n, k + 1)):
            if cls.h > n:
                continue
            ex = expectation_contribution(cls.representative, atoms)
            if ex == 0:
                continue
            wsum = _boundary_weight_sum(cls.representative, cls.h, n, ustruct, vstruct, a, b)
            total += ex * wsum
    return total * scale


def unique_half_height_graph(m: int, k: int) -> PathGraph:
    """The single canonical graph with h = k/2 and perfectly paired edges.

    Enumerates all canonical graphs for even k, keeps those of height k/2
    in which every edge is parallel to exactly one other edge, and checks
    the survivor is G^1(1, 2, ..., k/2, 1, 2, ..., k/2, 1).
    """
    if k % 2 != 0 or not 2 <= k <= MAX_PATH_EDGES:
        raise ValueError("k must be even with 2 <= k <= 10")
    half = k // 2
    survivors = []
    for cls in enumerate_canonical(m, k):
        g = cls.representative
        if cls.h != half:
            continue
        counts = {}
        for t in range(1, g.k + 1):
            span = g.edge_span(t)
            counts[span] = counts.get(span, 0) + 1
        if all(c == 2 for c in counts.values()):
            survivors.append(g)
    expected = tuple(list(range(1, half + 1)) * 2 + [1])
    if len(survivors) != 1 or survivors[0].heights != expected:
        raise AssertionError(
            f"uniqueness violated for k={k}: found {[s.heights for s in survivors]}"
        )
    return survivors[0]
