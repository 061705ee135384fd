"""Trees with boundary and the combinatorial operations on them.

Boundary vertices carry identity (they are the points being connected);
interior vertices are anonymous.  Two trees are considered the same type
when a boundary-preserving isomorphism maps one onto the other, which is
decided by comparing :func:`canonical_form` strings.
"""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from itertools import combinations, count, product
from typing import Hashable, Iterable, Mapping

import numpy as np

from .errors import GuardError, StructuralError
from .metric import EUCLIDEAN, MetricKind, rho_p
from .tolerances import EPS_DEG

Label = Hashable
Edge = frozenset

MAX_BINARY_ENUM = 10
MAX_SPLIT_BOUNDARY = 12


def label_key(x):
    """Deterministic sort key for heterogeneous vertex labels."""
    if isinstance(x, bool):
        return (2, repr(x))
    if isinstance(x, int):
        return (0, x, "")
    if isinstance(x, str):
        return (1, 0, x)
    return (2, repr(x))


def edge(u, v) -> Edge:
    if u == v:
        raise StructuralError(f"loop edge at {u!r}")
    return frozenset((u, v))


def edge_ends(e: Edge) -> tuple:
    u, v = sorted(e, key=label_key)
    return u, v


def double_factorial(k: int) -> int:
    return math.prod(range(k, 0, -2)) if k > 0 else 1


class Merged(tuple):
    """Label of a quotient vertex formed from several original vertices."""

    def __repr__(self):
        return "{" + ",".join(_name(x) for x in self) + "}"

    __str__ = __repr__


def _name(x) -> str:
    if isinstance(x, (int, str, Merged)):
        return str(x)
    return repr(x)


def _atoms(x) -> tuple:
    return tuple(x) if isinstance(x, Merged) else (x,)


def _merged(labels: Iterable) -> Merged:
    flat = {a for x in labels for a in _atoms(x)}
    return Merged(sorted(flat, key=label_key))


@dataclass(frozen=True, eq=False)
class BoundedTree:
    """A tree ``(V, E)`` with a designated boundary subset of ``V``.

    Vertices of degree 1 or 2 must be boundary.  Instances are immutable;
    equality is structural on labels, not isomorphism (use
    :func:`isomorphic` for that).
    """

    vertices: tuple
    edges: frozenset
    boundary: frozenset

    def __post_init__(self):
        verts = tuple(sorted(set(self.vertices), key=label_key))
        if len(verts) != len(self.vertices):
            raise StructuralError("duplicate vertex labels")
        edges = frozenset(frozenset(e) for e in self.edges)
        boundary = frozenset(self.boundary)
        object.__setattr__(self, "vertices", verts)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "boundary", boundary)
        vset = set(verts)
        for e in edges:
            if len(e) != 2 or not e <= vset:
                raise StructuralError(f"edge {set(e)} is not a pair of tree vertices")
        if not boundary <= vset:
            raise StructuralError("boundary must be a subset of the vertices")
        if verts and len(edges) != len(verts) - 1:
            raise StructuralError("a tree needs |E| = |V| - 1")
        if verts and not self._connected():
            raise StructuralError("tree is not connected")
        for v in verts:
            if 1 <= self.degree(v) <= 2 and v not in boundary:
                raise StructuralError(f"vertex {v!r} of degree {self.degree(v)} must be boundary")

    @classmethod
    def from_edges(cls, edges: Iterable[tuple], boundary: Iterable, vertices: Iterable = ()):
        edges = [edge(u, v) for u, v in edges]
        verts = set(vertices)
        for e in edges:
            verts |= e
        return cls(tuple(verts), frozenset(edges), frozenset(boundary))

    @cached_property
    def adjacency(self) -> Mapping[Label, tuple]:
        adj = defaultdict(list)
        for e in self.edges:
            u, v = tuple(e)
            adj[u].append(v)
            adj[v].append(u)
        return {v: tuple(sorted(adj[v], key=label_key)) for v in self.vertices}

    def degree(self, v) -> int:
        return len(self.adjacency[v])

    @property
    def interior(self) -> tuple:
        return tuple(v for v in self.vertices if v not in self.boundary)

    def edge_list(self) -> list[tuple]:
        return sorted((edge_ends(e) for e in self.edges), key=lambda p: (label_key(p[0]), label_key(p[1])))

    def _connected(self) -> bool:
        start = self.vertices[0]
        seen = {start}
        stack = [start]
        while stack:
            v = stack.pop()
            for w in self.adjacency[v]:
                if w not in seen:
                    seen.add(w)
                    stack.append(w)
        return len(seen) == len(self.vertices)

    def path(self, x, y) -> list[Edge]:
        """Edges of the unique path from ``x`` to ``y``."""
        if x not in self.adjacency or y not in self.adjacency:
            raise StructuralError(f"path endpoints {x!r}, {y!r} not in tree")
        parent = {x: None}
        stack = [x]
        while stack:
            v = stack.pop()
            if v == y:
                break
            for w in self.adjacency[v]:
                if w not in parent:
                    parent[w] = v
                    stack.append(w)
        out = []
        v = y
        while parent[v] is not None:
            out.append(edge(v, parent[v]))
            v = parent[v]
        return out[::-1]

    def split(self, e: Edge) -> tuple[frozenset, frozenset]:
        """Vertex sets of the two components of the tree minus ``e``."""
        u, v = tuple(e)
        side = {u}
        stack = [u]
        while stack:
            a = stack.pop()
            for b in self.adjacency[a]:
                if b not in side and not (a == u and b == v):
                    side.add(b)
                    stack.append(b)
        return frozenset(side), frozenset(self.vertices) - side

    def is_binary(self) -> bool:
        leaves = {v for v in self.vertices if self.degree(v) == 1}
        return all(self.degree(v) in (1, 3) for v in self.vertices) and leaves == set(self.boundary)

    def relabel(self, mapping: Mapping) -> "BoundedTree":
        m = lambda v: mapping.get(v, v)  # noqa: E731
        return BoundedTree(
            tuple(m(v) for v in self.vertices),
            frozenset(frozenset(m(v) for v in e) for e in self.edges),
            frozenset(m(v) for v in self.boundary),
        )

    def __repr__(self):
        return f"BoundedTree({canonical_form(self)})"


def canonical_form(tree: BoundedTree) -> str:
    """String invariant of the tree up to boundary-preserving isomorphism.

    Rooted at the least boundary label; interior vertices print as ``*``
    and children are sorted, so the string is independent of interior
    labels and of edge order.
    """
    if not tree.vertices:
        return "()"
    roots = sorted(tree.boundary, key=label_key) or sorted(tree.vertices, key=label_key)
    if not tree.boundary and len(tree.vertices) > 1:
        # no labelled vertex: fall back to the lexicographically least encoding
        return min(_encode(tree, r, None) for r in tree.vertices)
    return _encode(tree, roots[0], None)


def _encode(tree: BoundedTree, v, parent) -> str:
    name = _name(v) if v in tree.boundary else "*"
    kids = sorted(_encode(tree, w, v) for w in tree.adjacency[v] if w != parent)
    return name + ("(" + ",".join(kids) + ")" if kids else "")


def isomorphic(a: BoundedTree, b: BoundedTree) -> bool:
    return canonical_form(a) == canonical_form(b)


def _fresh(taken: set, count: int, prefix: str = "s") -> list[str]:
    out = []
    i = 0
    while len(out) < count:
        name = f"{prefix}{i}"
        if name not in taken:
            out.append(name)
        i += 1
    return out


def enumerate_binary_trees(boundary: Iterable, max_n: int = MAX_BINARY_ENUM) -> list[BoundedTree]:
    """All binary trees with the given leaf labels, one per isomorphism class.

    Leaves are inserted one at a time by subdividing every edge of each
    tree built so far, which visits each class exactly once and yields
    ``(2n-5)!!`` trees for ``n >= 3``.
    """
    labels = list(boundary)
    n = len(labels)
    if n < 2:
        raise StructuralError("binary trees need at least two boundary vertices")
    if len(set(labels)) != n:
        raise StructuralError("boundary labels must be distinct")
    if n > max_n:
        raise GuardError(f"refusing to enumerate {double_factorial(2 * n - 5)} binary trees (n={n} > {max_n})")
    if n == 2:
        return [BoundedTree.from_edges([(labels[0], labels[1])], labels)]
    names = _fresh(set(labels), n - 2)
    base = {edge(labels[i], names[0]) for i in range(3)}
    trees = [frozenset(base)]
    for k in range(3, n):
        s = names[k - 2]
        grown = []
        for edges in trees:
            for e in sorted(edges, key=lambda e: sorted(map(label_key, e))):
                u, v = tuple(e)
                grown.append((edges - {e}) | {edge(u, s), edge(s, v), edge(s, labels[k])})
        trees = grown
    return [BoundedTree(tuple(labels) + tuple(names), edges, frozenset(labels)) for edges in trees]


def quotient_with_map(tree: BoundedTree, contracted: Iterable) -> tuple[BoundedTree, dict]:
    """Factor ``tree`` over the edge family ``contracted``.

    Returns the quotient tree and the projection from old vertices to new
    labels.  A block that is a single vertex keeps its label; a block with
    exactly one boundary atom takes that label; otherwise the block is
    labelled by a :class:`Merged` tuple.
    """
    contracted = {frozenset(e) for e in contracted}
    missing = contracted - tree.edges
    if missing:
        raise StructuralError(f"contracted edges not in tree: {[sorted(e, key=label_key) for e in missing]}")
    parent = {v: v for v in tree.vertices}

    def find(v):
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for e in contracted:
        a, b = (find(x) for x in e)
        if a != b:
            parent[a] = b
    blocks = defaultdict(list)
    for v in tree.vertices:
        blocks[find(v)].append(v)

    proj = {}
    new_boundary = set()
    for members in blocks.values():
        if len(members) == 1:
            lab = members[0]
        else:
            atoms = {a for m in members if m in tree.boundary for a in _atoms(m)}
            if len(atoms) == 1:
                lab = next(iter(atoms))
            elif atoms:
                lab = Merged(sorted(atoms, key=label_key))
            else:
                lab = _merged(members)
        if any(m in tree.boundary for m in members):
            new_boundary.add(lab)
        for m in members:
            proj[m] = lab

    new_edges = {edge(proj[u], proj[v]) for u, v in (tuple(e) for e in tree.edges - contracted)}
    verts = set(proj.values())
    deg = defaultdict(int)
    for e in new_edges:
        for v in e:
            deg[v] += 1
    # low-degree blocks must be boundary in any bounded tree
    new_boundary |= {v for v in verts if 1 <= deg[v] <= 2}
    return BoundedTree(tuple(verts), frozenset(new_edges), frozenset(new_boundary)), proj


def quotient(tree: BoundedTree, contracted: Iterable) -> BoundedTree:
    return quotient_with_map(tree, contracted)[0]


def regular_components(tree: BoundedTree) -> list[BoundedTree]:
    """Cut the tree at every boundary vertex of degree two or more.

    Two edges fall in the same component exactly when they are joined
    through interior vertices.
    """
    if not tree.edges:
        return [tree]
    edges = tree.edge_list()
    index = {frozenset(e): i for i, e in enumerate(edges)}
    parent = list(range(len(edges)))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for v in tree.interior:
        inc = [index[edge(v, w)] for w in tree.adjacency[v]]
        for i in inc[1:]:
            a, b = find(inc[0]), find(i)
            if a != b:
                parent[a] = b
    groups = defaultdict(list)
    for i, e in enumerate(edges):
        groups[find(i)].append(e)
    out = []
    for group in groups.values():
        verts = {v for e in group for v in e}
        out.append(BoundedTree.from_edges(group, verts & tree.boundary))
    out.sort(key=lambda t: canonical_form(t))
    return out


def moustaches(tree: BoundedTree) -> list[tuple[tuple, tuple]]:
    """Pairs of edges meeting at an interior vertex and ending on the boundary."""
    if len(tree.boundary) < 3:
        return []
    out = []
    for v in tree.interior:
        ends = [w for w in tree.adjacency[v] if w in tree.boundary]
        for a, b in combinations(ends, 2):
            out.append(((v, a), (v, b)))
    return out


def binary_type(trace_tree: BoundedTree, max_boundary: int = MAX_SPLIT_BOUNDARY) -> list[tuple[BoundedTree, frozenset]]:
    """Binary trees that factor onto ``trace_tree``, each with its contracted set.

    Every vertex that is not already binary-compatible is replaced by a
    small binary gadget: an interior vertex of degree ``d >= 4`` by a binary
    tree on its ``d`` incident edges, a boundary vertex of degree ``d >= 2``
    by a binary tree on its ``d`` edges plus the vertex itself as a leaf.
    Gadget edges form the contracted set ``S_T``.
    """
    nb = len(trace_tree.boundary)
    if nb > max_boundary:
        raise GuardError(f"splitting enumeration limited to {max_boundary} boundary vertices, got {nb}")
    if trace_tree.is_binary():
        return [(trace_tree, frozenset())]

    taken = set(trace_tree.vertices)
    names = (f"s{i}" for i in count() if f"s{i}" not in taken)
    options: dict = {}
    for v in trace_tree.vertices:
        nbrs = trace_tree.adjacency[v]
        is_b = v in trace_tree.boundary
        if (is_b and len(nbrs) <= 1) or (not is_b and len(nbrs) == 3):
            continue
        ports = [("port", u) for u in nbrs] + ([("self",)] if is_b else [])
        gadgets = []
        for shape in enumerate_binary_trees(ports, max_n=max(len(ports), 3)):
            inner = {x: next(names) for x in shape.interior}
            attach, inner_edges = {}, set()
            for a, b in shape.edge_list():
                for x, y in ((a, b), (b, a)):
                    if x in inner and y in shape.boundary:
                        if y == ("self",):
                            inner_edges.add(edge(inner[x], v))
                        else:
                            attach[y[1]] = inner[x]
                if a in inner and b in inner:
                    inner_edges.add(edge(inner[a], inner[b]))
            gadgets.append((attach, frozenset(inner_edges)))
        options[v] = gadgets

    results = []
    seen = set()
    keys = sorted(options, key=label_key)
    for choice in product(*(options[k] for k in keys)):
        attach_of = dict(zip(keys, choice))
        edges, contracted = set(), set()
        for v, (attach, inner_edges) in attach_of.items():
            edges |= inner_edges
            contracted |= inner_edges
        for u, w in trace_tree.edge_list():
            a = attach_of[u][0][w] if u in attach_of else u
            b = attach_of[w][0][u] if w in attach_of else w
            edges.add(edge(a, b))
        t = BoundedTree.from_edges([tuple(e) for e in edges], trace_tree.boundary)
        key = canonical_form(t)
        if key not in seen:
            seen.add(key)
            results.append((t, frozenset(contracted)))
    return results


@dataclass(frozen=True, eq=False)
class Network:
    """A tree together with a position in R^k for every vertex."""

    tree: BoundedTree
    positions: Mapping = field(repr=False)
    kind: MetricKind = EUCLIDEAN

    def __post_init__(self):
        pos = {v: np.asarray(self.positions[v], dtype=float) for v in self.tree.vertices}
        dims = {p.shape for p in pos.values()}
        if len(dims) > 1:
            raise StructuralError("network positions must share one dimension")
        object.__setattr__(self, "positions", pos)

    @property
    def dimension(self) -> int:
        return next(iter(self.positions.values())).shape[0]

    def edge_length(self, e) -> float:
        u, v = tuple(e)
        return rho_p(self.positions[u], self.positions[v], self.kind)

    def edge_lengths(self) -> dict:
        return {e: self.edge_length(e) for e in self.tree.edges}

    def length(self) -> float:
        return float(sum(self.edge_length(e) for e in self.tree.edges))

    def boundary_diameter(self) -> float:
        pts = [self.positions[v] for v in self.tree.boundary]
        best = 0.0
        for a, b in combinations(pts, 2):
            best = max(best, rho_p(a, b, self.kind))
        return best

    def degenerate_edges(self, eps: float | None = None) -> frozenset:
        if eps is None:
            eps = EPS_DEG * self.boundary_diameter()
        return frozenset(e for e in self.tree.edges if self.edge_length(e) <= eps)


def trace(net: Network, eps: float | None = None) -> Network:
    """Quotient of a network over all of its degenerate edges."""
    degenerate = net.degenerate_edges(eps)
    if not degenerate:
        return net
    tree, proj = quotient_with_map(net.tree, degenerate)
    members = defaultdict(list)
    for v, lab in proj.items():
        members[lab].append(v)
    pos = {}
    for lab, ms in members.items():
        anchors = [m for m in ms if m in net.tree.boundary]
        if anchors:
            pos[lab] = net.positions[min(anchors, key=label_key)]
        else:
            pos[lab] = np.mean([net.positions[m] for m in ms], axis=0)
    return Network(tree, pos, net.kind)
