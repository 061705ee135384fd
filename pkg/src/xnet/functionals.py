"""Edge-set length functionals, their families, and minimal spanning trees."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from itertools import product
from typing import Callable, Sequence

import numpy as np

from .errors import GuardError, StructuralError
from .metric import EUCLIDEAN, MetricKind, SemimetricVector, pair_index, pullback
from .tolerances import TAU_TIE
from .topology import BoundedTree, Network  # noqa: F401  (re-exported)

MAX_SPANNING_N = 8


@dataclass(frozen=True)
class EdgeFunctional:
    """``L_E(r) = sum of r_ij over the pairs ij in E`` (0-based indices)."""

    n: int
    edges: frozenset

    def __post_init__(self):
        norm = set()
        for e in self.edges:
            i, j = sorted(e)
            if i == j or not 0 <= i < j < self.n:
                raise StructuralError(f"edge {e} invalid for n={self.n}")
            norm.add((i, j))
        object.__setattr__(self, "edges", frozenset(norm))

    @classmethod
    def of(cls, n: int, *edges) -> "EdgeFunctional":
        return cls(n, frozenset(tuple(e) for e in edges))

    @property
    def indices(self) -> np.ndarray:
        return np.array(sorted(pair_index(i, j, self.n) for i, j in self.edges), dtype=int)

    def __call__(self, r: SemimetricVector) -> float:
        return eval_functional(self, r)

    def label(self) -> str:
        return ",".join(f"{i}-{j}" for i, j in sorted(self.edges))

    def __repr__(self):
        return f"L[{self.label()}]"


def eval_functional(F: EdgeFunctional, r: SemimetricVector) -> float:
    if F.n != r.n:
        raise StructuralError(f"functional on n={F.n} evaluated at semimetric on n={r.n}")
    if not F.edges:
        return 0.0
    return float(r.r[F.indices].sum())


@dataclass(frozen=True)
class Extrema:
    min_value: float
    i_min: frozenset
    max_value: float
    i_max: frozenset
    tie: float


def tie_band(values, tie: float = TAU_TIE) -> tuple[float, frozenset, float, frozenset]:
    """Min/max of ``values`` and the index sets within the relative tie band."""
    vals = np.asarray(values, dtype=float)
    if vals.size == 0:
        raise StructuralError("empty functional family")
    lo = float(vals.min())
    hi = float(vals.max())
    i_min = frozenset(np.flatnonzero(vals <= lo + tie * (abs(lo) + 1.0)).tolist())
    i_max = frozenset(np.flatnonzero(vals >= hi - tie * (abs(hi) + 1.0)).tolist())
    return lo, i_min, hi, i_max


def family_extrema(family: Sequence[Callable], r: SemimetricVector, tie: float = TAU_TIE) -> Extrema:
    """Minimum and maximum of a functional family with their index sets."""
    if len(family) == 0:
        raise StructuralError("empty functional family")
    if all(isinstance(F, EdgeFunctional) for F in family):
        if family[0].n != r.n:
            raise StructuralError("functional family and semimetric disagree on n")
        vals = incidence_matrix(family) @ r.r
    else:
        vals = [F(r) for F in family]
    return Extrema(*tie_band(vals, tie), tie)


def incidence_matrix(family: Sequence[EdgeFunctional]) -> np.ndarray:
    n = family[0].n
    m = n * (n - 1) // 2
    A = np.zeros((len(family), m))
    for row, F in enumerate(family):
        if F.n != n:
            raise StructuralError("mixed vertex counts in one family")
        A[row, F.indices] = 1.0
    return A


def prufer_decode(seq: Sequence[int], n: int) -> frozenset:
    degree = [1] * n
    for x in seq:
        degree[x] += 1
    edges = []
    for x in seq:
        leaf = min(i for i in range(n) if degree[i] == 1)
        edges.append((min(leaf, x), max(leaf, x)))
        degree[leaf] -= 1
        degree[x] -= 1
    u, v = (i for i in range(n) if degree[i] == 1)
    edges.append((u, v))
    return frozenset(edges)


@lru_cache(maxsize=None)
def _spanning_trees(n: int) -> tuple[EdgeFunctional, ...]:
    if n == 2:
        return (EdgeFunctional.of(2, (0, 1)),)
    return tuple(EdgeFunctional(n, prufer_decode(seq, n)) for seq in product(range(n), repeat=n - 2))


@lru_cache(maxsize=None)
def _spanning_incidence(n: int) -> np.ndarray:
    A = incidence_matrix(_spanning_trees(n))
    A.setflags(write=False)
    return A


def enumerate_spanning_trees(n: int) -> list[EdgeFunctional]:
    """All ``n^(n-2)`` labelled spanning trees of K_n, via Prufer sequences."""
    if not 2 <= n <= MAX_SPANNING_N:
        raise GuardError(f"spanning-tree enumeration supports 2 <= n <= {MAX_SPANNING_N}, got {n}")
    return list(_spanning_trees(n))


def kruskal(r: SemimetricVector) -> tuple[float, EdgeFunctional]:
    """Greedy minimal spanning tree of the complete graph weighted by ``r``."""
    n = r.n
    order = sorted(((r[i, j], i, j) for i in range(n) for j in range(i + 1, n)))
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    chosen = []
    total = 0.0
    for w, i, j in order:
        a, b = find(i), find(j)
        if a != b:
            parent[a] = b
            chosen.append((i, j))
            total += w
            if len(chosen) == n - 1:
                break
    return total, EdgeFunctional(n, frozenset(chosen))


@dataclass(frozen=True)
class MSTResult:
    length: float
    types: tuple[EdgeFunctional, ...]
    indices: tuple[int, ...]
    exhaustive: bool
    tie: float


def mst_of_semimetric(r: SemimetricVector, tie: float = TAU_TIE) -> MSTResult:
    n = r.n
    if n > MAX_SPANNING_N:
        length, tree = kruskal(r)
        return MSTResult(length, (tree,), (), False, tie)
    trees = _spanning_trees(n)
    vals = _spanning_incidence(n) @ r.r
    lo, i_min, _, _ = tie_band(vals, tie)
    idx = tuple(sorted(i_min))
    return MSTResult(lo, tuple(trees[i] for i in idx), idx, True, tie)


def mst(points, kind: MetricKind = EUCLIDEAN, tie: float = TAU_TIE) -> MSTResult:
    """Minimal spanning tree length and every tying tree type.

    Exhaustive over all spanning trees for ``n <= 8``; beyond that only the
    greedy tree is returned and ``exhaustive`` is False.
    """
    return mst_of_semimetric(pullback(points, kind), tie)


def spanning_network(points, F: EdgeFunctional, kind: MetricKind = EUCLIDEAN) -> Network:
    """A spanning tree drawn on the points, every vertex on the boundary."""
    pts = np.asarray(points, dtype=float)
    tree = BoundedTree.from_edges(sorted(F.edges), range(F.n), vertices=range(F.n))
    return Network(tree, {i: pts[i] for i in range(F.n)}, kind)
