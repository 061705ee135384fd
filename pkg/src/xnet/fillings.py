"""Fillings of finite semimetric spaces by weighted trees.

A weighted tree fills a space when the weight of the tree path between any
two boundary points is at least their distance.  The least total weight
over a fixed tree is a linear program; it is solved here through its dual

    maximise  sum_xy r_xy lambda_xy
    subject to  sum over pairs whose path uses e of lambda_xy  (= or <=) 1,
                lambda >= 0,

with equality for signed weights and ``<=`` for non-negative ones.  The
optimal edge weights are the dual multipliers of this program.

Boundary labels of a tree are matched to semimetric indices in sorted
order, so trees on labels ``0..n-1`` line up with the vector layout.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from itertools import combinations
from typing import Mapping, Sequence

import numpy as np

from .errors import GuardError, StructuralError
from .metric import SemimetricVector, pair_index, validate_semimetric
from .lp import solve_lp
from .tolerances import FILLING_SLACK, TAU_TIE
from .topology import BoundedTree, edge, edge_ends, enumerate_binary_trees, label_key

MF_MAX_N = 7
TOUR_MAX_N = 6
TOUR_MAX_K = 3


def boundary_order(tree: BoundedTree) -> tuple:
    return tuple(sorted(tree.boundary, key=label_key))


@dataclass(frozen=True, eq=False)
class WeightedTree:
    tree: BoundedTree
    weights: Mapping = field(repr=False)

    def __post_init__(self):
        w = {}
        for e, val in dict(self.weights).items():
            e = frozenset(e)
            if e not in self.tree.edges:
                raise StructuralError(f"weight given for non-edge {set(e)}")
            w[e] = val
        missing = self.tree.edges - set(w)
        if missing:
            raise StructuralError(f"no weight for edges {[set(e) for e in missing]}")
        object.__setattr__(self, "weights", w)

    def total(self):
        return sum(self.weights.values())


def tree_path_weight(wt: WeightedTree, x, y):
    """Signed weight of the unique tree path from ``x`` to ``y``."""
    for lab in (x, y):
        if lab not in wt.tree.vertices:
            raise StructuralError(f"label {lab!r} is not a vertex of the tree")
    if x == y:
        return 0
    return sum(wt.weights[e] for e in wt.tree.path(x, y))


def _check_space(tree: BoundedTree, r: SemimetricVector) -> tuple:
    order = boundary_order(tree)
    if len(order) != r.n:
        raise StructuralError(f"tree has {len(order)} boundary vertices, space has {r.n} points")
    return order


def is_generalized_filling(wt: WeightedTree, r: SemimetricVector, slack: float = FILLING_SLACK) -> bool:
    """Every pairwise distance is dominated by the weight of its tree path."""
    order = _check_space(wt.tree, r)
    for i, j in combinations(range(r.n), 2):
        if r.r[pair_index(i, j, r.n)] > float(tree_path_weight(wt, order[i], order[j])) + slack:
            return False
    return True


@lru_cache(maxsize=4096)
def _path_incidence(tree: BoundedTree) -> tuple[tuple, tuple[tuple[int, ...], ...]]:
    """Edge list and, per edge, the pair indices whose paths cross it."""
    order = boundary_order(tree)
    n = len(order)
    edges = sorted(tree.edges, key=lambda e: tuple(label_key(x) for x in edge_ends(e)))
    eidx = {e: k for k, e in enumerate(edges)}
    cross = [[] for _ in edges]
    for i, j in combinations(range(n), 2):
        for e in tree.path(order[i], order[j]):
            cross[eidx[e]].append(pair_index(i, j, n))
    return tuple(edges), tuple(tuple(c) for c in cross)


@dataclass(frozen=True, eq=False)
class FillingResult:
    weight: float
    exact: Fraction
    weights: WeightedTree
    signed: bool


def mpf(r: SemimetricVector, T: BoundedTree, signed: bool = False) -> FillingResult:
    """Least total weight of a (generalized, if ``signed``) filling of type ``T``."""
    if not isinstance(T, BoundedTree):
        raise StructuralError("fillings are computed over tree types only; a tree type always suffices")
    _check_space(T, r)
    edges, cross = _path_incidence(T)
    m = r.r.size
    A = [[0] * m for _ in edges]
    for k, cs in enumerate(cross):
        for p in cs:
            A[k][p] = 1
    res = solve_lp([Fraction(float(v)) for v in r.r], A, [1] * len(edges), ["=" if signed else "<="] * len(edges))
    if res.status != "optimal":
        raise StructuralError(f"filling program for this tree is {res.status}")
    omega = {e: res.duals[k] for k, e in enumerate(edges)}
    wt = WeightedTree(T, omega)
    return FillingResult(float(res.value), res.value, wt, signed)


@dataclass(frozen=True, eq=False)
class MFResult:
    weight: float
    exact: Fraction
    types: tuple[BoundedTree, ...]
    values: tuple[Fraction, ...] = field(repr=False)
    candidates: tuple[BoundedTree, ...] = field(repr=False)


@lru_cache(maxsize=None)
def _binary_types(n: int) -> tuple[BoundedTree, ...]:
    return tuple(enumerate_binary_trees(list(range(n))))


def mf(r: SemimetricVector, tie: float = TAU_TIE) -> MFResult:
    """Minimal filling weight: least generalized filling over all binary types."""
    n = r.n
    if not 2 <= n <= MF_MAX_N:
        raise GuardError(f"mf enumerates binary types for 2 <= n <= {MF_MAX_N}, got {n}")
    types = _binary_types(n)
    values = tuple(mpf(r, T, signed=True).exact for T in types)
    best = min(values)
    band = float(best) + tie * (abs(float(best)) + 1.0)
    chosen = tuple(T for T, v in zip(types, values) if float(v) <= band)
    return MFResult(float(best), best, chosen, values, types)


@dataclass(frozen=True)
class MultiCyclicOrder:
    """Cyclic word of length ``n k`` using each of ``n`` labels ``k`` times."""

    n: int
    k: int
    seq: tuple

    def __post_init__(self):
        seq = tuple(self.seq)
        object.__setattr__(self, "seq", seq)
        if self.k < 1 or len(seq) != self.n * self.k:
            raise StructuralError(f"order length {len(seq)} != n*k = {self.n * self.k}")
        counts = {}
        for x in seq:
            counts[x] = counts.get(x, 0) + 1
        if len(counts) != self.n or any(c != self.k for c in counts.values()):
            raise StructuralError("every label must occur exactly k times")
        L = len(seq)
        if any(seq[j] == seq[(j + 1) % L] for j in range(L)):
            raise StructuralError("consecutive positions of a multi cyclic order must differ")

    @classmethod
    def of(cls, seq: Sequence) -> "MultiCyclicOrder":
        seq = tuple(seq)
        n = len(set(seq))
        if n == 0 or len(seq) % n:
            raise StructuralError("labels occur unevenly")
        return cls(n, len(seq) // n, seq)

    def canonical(self) -> tuple:
        """Lexicographically least rotation, as a sequence of label keys order."""
        return _min_rotation(self.seq)

    def times(self, m: int) -> "MultiCyclicOrder":
        return MultiCyclicOrder(self.n, self.k * m, self.seq * m)


def _min_rotation(seq: tuple) -> tuple:
    L = len(seq)
    keyed = [label_key(x) for x in seq]
    best = min(range(L), key=lambda s: keyed[s:] + keyed[:s])
    return seq[best:] + seq[:best]


def multi_perimeter(r: SemimetricVector, order: MultiCyclicOrder, labels: Sequence | None = None, exact: bool = False):
    """``(1 / 2k)`` times the cyclic sum of distances along the order.

    ``labels`` lists the space's points in vector order; by default the
    sorted labels of the order are used.
    """
    labs = tuple(labels) if labels is not None else tuple(sorted(set(order.seq), key=label_key))
    if len(labs) != r.n or set(labs) != set(order.seq):
        raise StructuralError("order labels do not match the space")
    idx = {x: i for i, x in enumerate(labs)}
    L = len(order.seq)
    terms = []
    for j in range(L):
        a, b = idx[order.seq[j]], idx[order.seq[(j + 1) % L]]
        terms.append(r.r[pair_index(a, b, r.n)])
    if exact:
        return sum((Fraction(float(t)) for t in terms), Fraction(0)) / (2 * order.k)
    return float(sum(terms)) / (2 * order.k)


@lru_cache(maxsize=4096)
def _sides(tree: BoundedTree) -> tuple[frozenset, ...]:
    """Boundary part of one side of each edge split."""
    out = []
    for e in sorted(tree.edges, key=lambda e: tuple(label_key(x) for x in edge_ends(e))):
        side, _ = tree.split(e)
        out.append(frozenset(side & tree.boundary))
    return tuple(out)


def is_multi_tour(order: MultiCyclicOrder, tree: BoundedTree) -> bool:
    """Each edge split is left exactly ``k`` times from each side."""
    if set(order.seq) != set(tree.boundary):
        return False
    L = len(order.seq)
    for side in _sides(tree):
        exits = entries = 0
        for j in range(L):
            a, b = order.seq[j] in side, order.seq[(j + 1) % L] in side
            exits += a and not b
            entries += b and not a
        if exits != order.k or entries != order.k:
            return False
    return True


def enumerate_multi_tours(T: BoundedTree, k_max: int) -> list[MultiCyclicOrder]:
    """All multi-tours of ``T`` with multiplicity ``1..k_max``, up to rotation."""
    labels = boundary_order(T)
    n = len(labels)
    if n > TOUR_MAX_N or k_max > TOUR_MAX_K:
        raise GuardError(f"multi-tour enumeration needs n <= {TOUR_MAX_N} and k_max <= {TOUR_MAX_K}")
    if n < 2:
        raise StructuralError("multi-tours need at least two boundary labels")
    return [t for k in range(1, k_max + 1) for t in _tours(T, k)]


@lru_cache(maxsize=256)
def _tours(T: BoundedTree, k: int) -> tuple[MultiCyclicOrder, ...]:
    labels = boundary_order(T)
    n = len(labels)
    sides = [[lab in s for lab in labels] for s in _sides(T)]
    L = n * k
    remaining = [k] * n
    seq = [0]
    remaining[0] -= 1
    exits = [0] * len(sides)
    entries = [0] * len(sides)
    found = set()

    def step(a, b, sign):
        ok = True
        for s, inside in enumerate(sides):
            if inside[a] and not inside[b]:
                exits[s] += sign
                ok = ok and exits[s] <= k
            elif inside[b] and not inside[a]:
                entries[s] += sign
                ok = ok and entries[s] <= k
        return ok

    def dfs():
        if len(seq) == L:
            last, first = seq[-1], seq[0]
            if last == first:
                return
            ok = step(last, first, 1)
            if ok and all(x == k for x in exits) and all(x == k for x in entries):
                found.add(_min_rotation(tuple(labels[i] for i in seq)))
            step(last, first, -1)
            return
        prev = seq[-1]
        for b in range(n):
            if b == prev or not remaining[b]:
                continue
            ok = step(prev, b, 1)
            if ok:
                remaining[b] -= 1
                seq.append(b)
                dfs()
                seq.pop()
                remaining[b] += 1
            step(prev, b, -1)

    dfs()
    keyed = sorted(found, key=lambda s: [label_key(x) for x in s])
    return tuple(MultiCyclicOrder(n, k, s) for s in keyed)


def _is_multiple_of(seq: tuple, base: tuple) -> bool:
    if len(seq) % len(base):
        return False
    return _min_rotation(seq) == _min_rotation(base * (len(seq) // len(base)))


def _as_tour(seq: tuple, tree: BoundedTree) -> MultiCyclicOrder | None:
    labels = set(seq)
    if labels != set(tree.boundary):
        return None
    n = len(labels)
    if len(seq) % n:
        return None
    try:
        order = MultiCyclicOrder(n, len(seq) // n, seq)
    except StructuralError:
        return None
    return order if is_multi_tour(order, tree) else None


@dataclass(frozen=True)
class IrreducibilityReport:
    irreducible: bool
    witness_bound: int
    decomposition: tuple | None = None  # (m, first part, second part)

    def __bool__(self):
        return self.irreducible


def is_irreducible(t: MultiCyclicOrder, tree: BoundedTree, witness_bound: int = 2) -> IrreducibilityReport:
    """Search ``m t`` for ``m <= witness_bound`` for a non-trivial splitting.

    A sum of two multi-tours is the walk along one followed by the other,
    joined at a common boundary label; splitting ``m t`` at two positions
    carrying the same label therefore enumerates every decomposition.
    """
    if not is_multi_tour(t, tree):
        raise StructuralError("not a multi-tour of the given tree")
    base = t.seq
    for m in range(1, witness_bound + 1):
        seq = base * m
        L = len(seq)
        for i in range(L):
            for j in range(i + 1, L):
                if seq[i] != seq[j]:
                    continue
                a = seq[i:j]
                b = seq[j:] + seq[:i]
                if _is_multiple_of(a, base) and _is_multiple_of(b, base):
                    continue
                ta, tb = _as_tour(a, tree), _as_tour(b, tree)
                if ta is not None and tb is not None:
                    return IrreducibilityReport(False, witness_bound, (m, ta, tb))
    return IrreducibilityReport(True, witness_bound)


def tour_sum(a: MultiCyclicOrder, b: MultiCyclicOrder) -> MultiCyclicOrder:
    """Walk ``a`` then ``b``, spliced at the first label of ``a`` they share."""
    common = next(x for x in a.seq if x in set(b.seq))
    i = a.seq.index(common)
    j = b.seq.index(common)
    seq = a.seq[i:] + a.seq[:i] + b.seq[j:] + b.seq[:j]
    return MultiCyclicOrder(a.n, a.k + b.k, seq)


@dataclass(frozen=True, eq=False)
class EreminReport:
    status: str  # "equal" | "lp-greater"
    lp_value: Fraction
    max_perimeter: Fraction
    gap: Fraction
    k_max: int
    tour_count: int
    argmax: tuple[MultiCyclicOrder, ...]
    weak_duality_ok: bool
    violations: tuple[MultiCyclicOrder, ...] = ()


def eremin_check(r: SemimetricVector, T: BoundedTree, k_max: int = 2) -> EreminReport:
    """Compare the signed filling weight with the best multi-perimeter.

    Every multi-perimeter is a lower bound (each tree edge lies on exactly
    ``2k`` of the order's consecutive paths); the check reports whether the
    bound is attained with multiplicities up to ``k_max``.
    """
    lp = mpf(r, T, signed=True).exact
    tours = enumerate_multi_tours(T, k_max)
    labels = boundary_order(T)
    perims = [multi_perimeter(r, t, labels, exact=True) for t in tours]
    best = max(perims)
    bad = tuple(t for t, p in zip(tours, perims) if p > lp)
    status = "equal" if best == lp else ("lp-greater" if lp > best else "tour-greater")
    return EreminReport(
        status, lp, best, lp - best, k_max, len(tours),
        tuple(t for t, p in zip(tours, perims) if p == best), not bad, bad,
    )


def parse_distance_matrix(text: str, source: str = "<distance file>") -> SemimetricVector:
    """Read ``n`` then ``n`` rows of ``n`` reals; symmetric, zero diagonal, semimetric."""
    lines = [(no, ln.split("#", 1)[0].strip()) for no, ln in enumerate(text.splitlines(), 1)]
    lines = [(no, ln) for no, ln in lines if ln]
    if not lines:
        raise StructuralError(f"{source}: empty distance file")
    no, head = lines[0]
    try:
        n = int(head)
    except ValueError:
        raise StructuralError(f"{source}:{no}: first line must be the point count, got {head!r}") from None
    if n < 2:
        raise StructuralError(f"{source}:{no}: need at least two points")
    rows = lines[1:]
    if len(rows) != n:
        raise StructuralError(f"{source}: expected {n} matrix rows, found {len(rows)}")
    D = np.zeros((n, n))
    for i, (no, ln) in enumerate(rows):
        parts = ln.replace(",", " ").split()
        if len(parts) != n:
            raise StructuralError(f"{source}:{no}: row {i + 1} has {len(parts)} entries, expected {n}")
        try:
            D[i] = [float(p) for p in parts]
        except ValueError as exc:
            raise StructuralError(f"{source}:{no}: {exc}") from None
    if not np.all(np.isfinite(D)):
        raise StructuralError(f"{source}: non-finite entry")
    if np.any(np.diag(D) != 0):
        raise StructuralError(f"{source}: diagonal must be zero")
    bad = np.argwhere(D != D.T)
    if bad.size:
        i, j = bad[0]
        raise StructuralError(f"{source}: matrix not symmetric at row {i + 1}, column {j + 1}")
    r = SemimetricVector.from_matrix(D)
    rep = validate_semimetric(r)
    if not rep.ok:
        raise StructuralError(f"{source}: not a semimetric ({rep.negative} negative, triangle violations {list(rep.violated_triples)[:3]})")
    return r


def format_distance_matrix(r: SemimetricVector) -> str:
    D = r.matrix()
    lines = [str(r.n)] + [" ".join(f"{x:.12g}" for x in row) for row in D]
    return "\n".join(lines) + "\n"
