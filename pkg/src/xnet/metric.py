"""Semimetric vectors, the rho_p distances and pullbacks of ambient metrics.

A semimetric on ``n`` points is stored as the flat vector of its
``m = n(n-1)/2`` off-diagonal values in lexicographic pair order
``(0,1), (0,2), ..., (0,n-1), (1,2), ..., (n-2,n-1)``.  Every module in
the package uses this layout.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations
from typing import Sequence

import numpy as np

from .errors import StructuralError
from .tolerances import TRIANGLE_SLACK


def n_from_m(m: int) -> int:
    """Vertex count for a vector of ``m`` pairwise distances."""
    n = int(round((1 + math.sqrt(1 + 8 * m)) / 2))
    if n < 2 or n * (n - 1) // 2 != m:
        raise StructuralError(f"{m} is not a triangular number n(n-1)/2 with n >= 2")
    return n


def pair_index(i: int, j: int, n: int) -> int:
    """Position of the unordered pair ``{i, j}`` in the lexicographic layout."""
    if i == j:
        raise StructuralError("pair_index needs two distinct vertices")
    if i > j:
        i, j = j, i
    if not 0 <= i < j < n:
        raise StructuralError(f"pair ({i}, {j}) out of range for n={n}")
    return i * n - i * (i + 1) // 2 + (j - i - 1)


def pairs(n: int) -> list[tuple[int, int]]:
    return list(combinations(range(n), 2))


@dataclass(frozen=True)
class MetricKind:
    """Selects the distance rho_p on R^k; ``p = 2`` is Euclidean."""

    p: float = 2.0

    def __post_init__(self):
        if not self.p > 1:
            raise StructuralError(f"rho_p needs p > 1, got {self.p}")


EUCLIDEAN = MetricKind(2.0)


@dataclass(frozen=True, eq=False)
class SemimetricVector:
    n: int
    r: np.ndarray = field(repr=False)

    def __post_init__(self):
        r = np.asarray(self.r, dtype=float).reshape(-1)
        if n_from_m(r.size) != self.n:
            raise StructuralError(
                f"semimetric on n={self.n} points needs {self.n * (self.n - 1) // 2} "
                f"entries, got {r.size}"
            )
        r.setflags(write=False)
        object.__setattr__(self, "r", r)

    @classmethod
    def from_values(cls, values: Sequence[float]) -> "SemimetricVector":
        values = np.asarray(values, dtype=float).reshape(-1)
        return cls(n_from_m(values.size), values)

    @classmethod
    def from_matrix(cls, matrix) -> "SemimetricVector":
        d = np.asarray(matrix, dtype=float)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise StructuralError("distance matrix must be square")
        n = d.shape[0]
        iu = np.triu_indices(n, 1)
        return cls(n, d[iu])

    def matrix(self) -> np.ndarray:
        d = np.zeros((self.n, self.n))
        iu = np.triu_indices(self.n, 1)
        d[iu] = self.r
        return d + d.T

    def __getitem__(self, ij: tuple[int, int]) -> float:
        i, j = ij
        if i == j:
            return 0.0
        return float(self.r[pair_index(i, j, self.n)])

    def __len__(self) -> int:
        return self.r.size

    def __eq__(self, other) -> bool:
        if not isinstance(other, SemimetricVector):
            return NotImplemented
        return self.n == other.n and np.array_equal(self.r, other.r)

    def __hash__(self) -> int:
        return hash((self.n, self.r.tobytes()))


@dataclass(frozen=True)
class ValidityReport:
    ok: bool
    negative: tuple[tuple[int, int], ...] = ()
    violated_triples: tuple[tuple[int, int, int], ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def validate_semimetric(r, slack: float = TRIANGLE_SLACK) -> ValidityReport:
    """Check non-negativity and every triangle inequality within ``slack``.

    ``r`` may be a :class:`SemimetricVector` or a flat sequence of values.
    Triples are reported 0-based as ``(i, j, k)`` with ``i < j < k``.
    """
    if not isinstance(r, SemimetricVector):
        r = SemimetricVector.from_values(r)
    d = r.matrix()
    n = r.n
    negative = tuple((i, j) for i, j in pairs(n) if d[i, j] < -slack)
    bad = []
    for i, j, k in combinations(range(n), 3):
        a, b, c = d[i, j], d[j, k], d[i, k]
        # each side bounded by the sum of the other two
        if a > b + c + slack or b > a + c + slack or c > a + b + slack:
            bad.append((i, j, k))
    return ValidityReport(not negative and not bad, negative, tuple(bad))


def rho_p(a, b, kind: MetricKind = EUCLIDEAN) -> float:
    """Distance ``(sum |a_i - b_i|^p)^(1/p)`` between two points."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise StructuralError(f"dimension mismatch: {a.shape} vs {b.shape}")
    diff = np.abs(a - b)
    if kind.p == 2:
        return float(math.sqrt(float(diff @ diff)))
    scale = float(diff.max(initial=0.0))
    if scale == 0.0:
        return 0.0
    # scaled to avoid overflow for large p
    return scale * float(np.sum((diff / scale) ** kind.p) ** (1.0 / kind.p))


def pairwise_distances(points, kind: MetricKind = EUCLIDEAN) -> np.ndarray:
    """Flat vector of rho_p distances in lexicographic pair order."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise StructuralError("points must be an (n, k) array")
    n = pts.shape[0]
    i, j = np.triu_indices(n, 1)
    diff = np.abs(pts[i] - pts[j])
    if kind.p == 2:
        return np.sqrt(np.einsum("ij,ij->i", diff, diff))
    return np.array([rho_p(pts[a], pts[b], kind) for a, b in zip(i, j)])


def pullback(points, kind: MetricKind = EUCLIDEAN) -> SemimetricVector:
    """The semimetric induced on the index set by an ambient point list."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] < 2:
        raise StructuralError("pullback needs at least two points of equal dimension")
    return SemimetricVector(pts.shape[0], pairwise_distances(pts, kind))


def diameter(points) -> float:
    pts = np.asarray(points, dtype=float)
    if len(pts) < 2:
        return 0.0
    return float(pairwise_distances(pts).max())
