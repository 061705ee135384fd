"""Minimal parametric networks and Steiner minimal trees in Euclidean space.

Interior vertices of a fixed tree type are placed by minimising total edge
length, a convex but non-smooth function of their coordinates.  The solve
runs damped Newton on the smoothed lengths ``sqrt(|e|^2 + delta^2)`` while
``delta`` is driven from ``1e-3`` to ``1e-12`` times the boundary diameter,
then collapses edges that have shrunk below the degeneracy threshold and
polishes the remaining problem with Newton on the exact lengths.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Mapping, Sequence

import numpy as np

from .errors import GuardError, StructuralError
from .metric import EUCLIDEAN, diameter
from .tolerances import DEFAULT, Tolerances
from .topology import (
    BoundedTree,
    Network,
    canonical_form,
    enumerate_binary_trees,
    label_key,
    regular_components,
    trace,
)
from .variation import segment_hessian

TWO_PI_3 = 2 * math.pi / 3
SMOOTHING = (1e-3, 1e-5, 1e-7, 1e-9, 1e-11, 1e-12)
MAX_ITER = 10_000
COLLAPSE_FACTOR = 10.0
KKT_SLACK = 1e-9
SMT_MAX_N = 7


@dataclass(frozen=True)
class _Layout:
    tree: BoundedTree
    boundary: tuple
    interior: tuple
    eu: np.ndarray
    ev: np.ndarray
    C: np.ndarray  # edges x interior, signed incidence restricted to interior
    Cfull: np.ndarray  # edges x all vertices


@lru_cache(maxsize=4096)
def _layout(tree: BoundedTree) -> _Layout:
    boundary = tuple(sorted(tree.boundary, key=label_key))
    interior = tuple(sorted(tree.interior, key=label_key))
    order = boundary + interior
    idx = {v: i for i, v in enumerate(order)}
    edges = tree.edge_list()
    eu = np.array([idx[a] for a, _ in edges], dtype=int)
    ev = np.array([idx[b] for _, b in edges], dtype=int)
    nb, nv = len(boundary), len(order)
    Cfull = np.zeros((len(edges), nv))
    Cfull[np.arange(len(edges)), eu] += 1.0
    Cfull[np.arange(len(edges)), ev] -= 1.0
    return _Layout(tree, boundary, interior, eu, ev, Cfull[:, nb:].copy(), Cfull)


@dataclass(frozen=True, eq=False)
class ParametricSolveResult:
    network: Network
    length: float
    converged: bool
    iterations: int
    degenerate_edges: frozenset
    min_hessian_eigenvalue: float | None
    gradient_norm: float
    tolerances: Tolerances = field(default=DEFAULT, repr=False)

    @property
    def tree(self) -> BoundedTree:
        return self.network.tree

    @property
    def degenerate(self) -> bool:
        return bool(self.degenerate_edges)

    def trace(self) -> Network:
        if not self.degenerate_edges:
            return self.network
        # collapsed edges have exactly zero length after the polish
        return trace(self.network, eps=0.0)


def _minimize(C: np.ndarray, Bp: np.ndarray, Z: np.ndarray, delta: float, gtol: float,
              max_iter: int, xtol: float):
    """Damped Newton for ``sum_e sqrt(|C_e Z + Bp_e|^2 + delta^2)``.

    The first trial step is capped so that no edge vector moves by more
    than its current smoothed length; far from a collapse the objective
    is nearly linear along the edge and a full Newton step overshoots by
    a factor ``(|e| / delta)^2``.
    """
    ni, k = Z.shape
    eye = np.eye(k)[None]
    d = C @ Z + Bp
    s = np.sqrt(np.einsum("ij,ij->i", d, d) + delta * delta)
    f = float(s.sum())
    gn = math.inf
    for its in range(1, max_iter + 1):
        if not s.all():
            # a live edge reached zero length; the caller collapses it
            return Z, its, math.inf, False
        u = d / s[:, None]
        g = C.T @ u
        gn = float(np.linalg.norm(g))
        if gn <= gtol:
            return Z, its, gn, True
        He = (eye - np.einsum("ea,eb->eab", u, u)) / s[:, None, None]
        H = np.einsum("ei,ej,eab->iajb", C, C, He).reshape(ni * k, ni * k)
        gflat = g.reshape(-1)
        try:
            p = -np.linalg.solve(H, gflat)
        except np.linalg.LinAlgError:
            p = -np.linalg.lstsq(H, gflat, rcond=None)[0]
        slope = float(gflat @ p)
        if not slope < 0:
            p, slope = -gflat, -float(gflat @ gflat)
        P = p.reshape(Z.shape)
        dd = C @ P
        move = np.sqrt(np.einsum("ij,ij->i", dd, dd))
        with np.errstate(divide="ignore"):
            step = float(min(1.0, np.min(np.where(move > 0, s / move, np.inf))))
        while True:
            dn = d + step * dd
            sn = np.sqrt(np.einsum("ij,ij->i", dn, dn) + delta * delta)
            fn = float(sn.sum())
            if fn <= f + 1e-4 * step * slope:
                break
            step *= 0.5
            if step * float(np.max(np.abs(P))) < xtol:
                return Z, its, gn, False
        Z = Z + step * P
        d, s, f = dn, sn, fn
        if step * float(np.max(np.abs(P))) < xtol:
            if not s.all():
                return Z, its, math.inf, False
            u = d / s[:, None]
            gn = float(np.linalg.norm(C.T @ u))
            return Z, its, gn, gn <= gtol
    return Z, max_iter, gn, False


def _initial_interior(B, lay: _Layout) -> np.ndarray:
    """Fixed point of neighbour averaging: minimiser of the summed squared lengths."""
    nb = len(lay.boundary)
    Bpart = lay.Cfull[:, :nb] @ B
    L = lay.C.T @ lay.C
    return np.linalg.solve(L, -lay.C.T @ Bpart)


def _blocks(lay: _Layout, collapsed: set[int]):
    nv = lay.Cfull.shape[1]
    parent = list(range(nv))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for e in collapsed:
        a, b = find(int(lay.eu[e])), find(int(lay.ev[e]))
        if a != b:
            # keep boundary vertices (low indices) as representatives
            if a < b:
                parent[b] = a
            else:
                parent[a] = b
    return [find(i) for i in range(nv)]


def _polish(P, lay: _Layout, collapsed: set[int], scale: float, tol: Tolerances, max_iter=60):
    """Newton on exact lengths with collapsed edges contracted."""
    nb = len(lay.boundary)
    iters = 0
    gn = 0.0
    for _ in range(len(lay.eu) + 1):
        rep = _blocks(lay, collapsed)
        free = sorted({r for r in rep[nb:] if r >= nb})
        for i in range(nb, len(rep)):
            P[i] = P[rep[i]]
        if not free:
            return P, iters, 0.0, True
        col = {r: j for j, r in enumerate(free)}
        live = [e for e in range(len(lay.eu)) if e not in collapsed]
        C = np.zeros((len(live), len(free)))
        Bp = np.zeros((len(live), P.shape[1]))
        for row, e in enumerate(live):
            for end, sign in ((int(lay.eu[e]), 1.0), (int(lay.ev[e]), -1.0)):
                r = rep[end]
                if r in col:
                    C[row, col[r]] += sign
                else:
                    Bp[row] += sign * P[r]
        Z, its, gn, ok = _minimize(C, Bp, P[free].copy(), 0.0, 0.1 * tol.grad * scale, max_iter,
                                   1e-16 * scale)
        iters += its
        P[free] = Z
        for i in range(nb, len(rep)):
            P[i] = P[rep[i]]
        d = P[lay.eu] - P[lay.ev]
        lens = np.sqrt(np.einsum("ij,ij->i", d, d))
        newly = {e for e in live if lens[e] <= tol.deg * scale}
        if not newly:
            return P, iters, gn, gn <= tol.grad * scale
        collapsed |= newly
    return P, iters, gn, False


def _collapse_forces(P, lay: _Layout, collapsed: set[int]) -> float:
    """Largest subgradient norm that the collapsed edges must carry.

    Within a block of vertices merged by collapsed edges, the subgradient
    on a collapsed edge is forced: it balances the pull of the live edges
    on its far side.  The configuration is optimal for the block iff all
    of these have norm at most one.
    """
    if not collapsed:
        return 0.0
    nb = len(lay.boundary)
    d = P[lay.eu] - P[lay.ev]
    lens = np.sqrt(np.einsum("ij,ij->i", d, d))
    pull = np.zeros_like(P)
    for e in range(len(lay.eu)):
        if e in collapsed or lens[e] == 0.0:
            continue
        u = d[e] / lens[e]
        pull[lay.eu[e]] += u
        pull[lay.ev[e]] -= u
    adj: dict[int, list[tuple[int, int]]] = {}
    for e in collapsed:
        a, b = int(lay.eu[e]), int(lay.ev[e])
        adj.setdefault(a, []).append((b, e))
        adj.setdefault(b, []).append((a, e))
    worst = 0.0
    seen: set[int] = set()
    for root in sorted(adj):
        if root in seen:
            continue
        # root each block at its boundary vertex when it has one
        comp, stack = [], [root]
        seen.add(root)
        while stack:
            x = stack.pop()
            comp.append(x)
            for y, _ in adj[x]:
                if y not in seen:
                    seen.add(y)
                    stack.append(y)
        r0 = min(comp)
        order, parent, stack = [], {r0: (None, None)}, [r0]
        while stack:
            x = stack.pop()
            order.append(x)
            for y, e in adj[x]:
                if y not in parent:
                    parent[y] = (x, e)
                    stack.append(y)
        acc = {x: pull[x].copy() for x in comp}
        for x in reversed(order):
            par, e = parent[x]
            if par is None:
                continue
            if x < nb:
                # a boundary vertex below the root is pinned and absorbs any force
                continue
            worst = max(worst, float(np.linalg.norm(acc[x])))
            acc[par] += acc[x]
    return worst


def solve_mpn(G: BoundedTree, boundary_positions: Mapping, tol: Tolerances = DEFAULT) -> ParametricSolveResult:
    """Minimal parametric network of type ``G`` for fixed boundary positions."""
    lay = _layout(G)
    try:
        B = np.array([np.asarray(boundary_positions[v], dtype=float) for v in lay.boundary])
    except KeyError as exc:
        raise StructuralError(f"no position for boundary vertex {exc.args[0]!r}") from None
    if B.ndim != 2:
        raise StructuralError("boundary positions must share one dimension")
    scale = diameter(B)
    if scale == 0.0:
        scale = 1.0
    positions = {v: B[i] for i, v in enumerate(lay.boundary)}
    if not lay.interior:
        net = Network(G, positions, EUCLIDEAN)
        return ParametricSolveResult(net, net.length(), True, 0, frozenset(), None, 0.0, tol)

    Z = _initial_interior(B, lay)
    Bp = lay.Cfull[:, :len(lay.boundary)] @ B
    iterations = 0
    for stage, rel in enumerate(SMOOTHING):
        delta = rel * scale
        final = stage == len(SMOOTHING) - 1
        Z, its, _, _ = _minimize(lay.C, Bp, Z, delta, 1e-9, MAX_ITER, 1e-16 * scale)
        iterations += its
        P = np.vstack((B, Z))
        d = P[lay.eu] - P[lay.ev]
        lens = np.sqrt(np.einsum("ij,ij->i", d, d))
        # speculative collapse of short edges, kept only if certified optimal
        cut = tol.deg * scale if final else max(tol.deg * scale, COLLAPSE_FACTOR * delta)
        collapsed = {e for e in range(len(lens)) if lens[e] <= cut}
        P, its, gn, ok = _polish(P, lay, collapsed, scale, tol)
        iterations += its
        converged = ok and _collapse_forces(P, lay, collapsed) <= 1.0 + KKT_SLACK
        if converged or final:
            break

    for i, v in enumerate(lay.interior):
        positions[v] = P[len(lay.boundary) + i]
    net = Network(G, positions, EUCLIDEAN)
    edges = G.edge_list()
    degenerate = frozenset(frozenset(edges[e]) for e in collapsed)
    res = ParametricSolveResult(net, net.length(), converged, iterations, degenerate, None, gn, tol)
    if not degenerate:
        res = _with_eigenvalue(res)
    return res


def _with_eigenvalue(res: ParametricSolveResult) -> ParametricSolveResult:
    lam = float(np.linalg.eigvalsh(_interior_hessian(res)).min())
    return ParametricSolveResult(
        res.network, res.length, res.converged, res.iterations, res.degenerate_edges, lam,
        res.gradient_norm, res.tolerances,
    )


def _full_hessian(net: Network) -> tuple[np.ndarray, _Layout]:
    """Second derivatives of total length in all vertex coordinates.

    Each edge contributes its segment second-variation matrix, with the
    sign pattern ``+M`` on its own endpoint blocks and ``-M`` across.
    """
    lay = _layout(net.tree)
    order = lay.boundary + lay.interior
    P = np.array([net.positions[v] for v in order])
    k = P.shape[1]
    nv = len(order)
    H = np.zeros((nv * k, nv * k))
    for e in range(len(lay.eu)):
        a, b = int(lay.eu[e]), int(lay.ev[e])
        M = segment_hessian(P[a] - P[b])
        for x, sx in ((a, 1.0), (b, -1.0)):
            for y, sy in ((a, 1.0), (b, -1.0)):
                H[x * k:(x + 1) * k, y * k:(y + 1) * k] += sx * sy * M
    return H, lay


def _interior_hessian(res: ParametricSolveResult) -> np.ndarray:
    H, lay = _full_hessian(res.network)
    k = res.network.dimension
    nb = len(lay.boundary)
    return H[nb * k:, nb * k:]


def hessian_certificate(res: ParametricSolveResult) -> float:
    """Smallest eigenvalue of the interior-coordinate Hessian of total length."""
    if res.degenerate_edges:
        raise StructuralError("Hessian certificate needs a non-degenerate network")
    if not res.network.tree.interior:
        raise StructuralError("network has no interior vertices")
    return float(np.linalg.eigvalsh(_interior_hessian(res)).min())


def length_gradient(net: Network) -> np.ndarray:
    """Gradient of total length with respect to interior coordinates."""
    lay = _layout(net.tree)
    order = lay.boundary + lay.interior
    P = np.array([net.positions[v] for v in order])
    d = P[lay.eu] - P[lay.ev]
    s = np.sqrt(np.einsum("ij,ij->i", d, d))
    return lay.C.T @ (d / s[:, None])


@dataclass(frozen=True)
class InteriorMapProbe:
    jacobian_h: np.ndarray
    jacobian_h2: np.ndarray
    jacobian_ift: np.ndarray
    h: float
    ratio: float
    boundary: tuple
    interior: tuple


def _interior_array(res: ParametricSolveResult, lay: _Layout) -> np.ndarray:
    return np.concatenate([res.network.positions[v] for v in lay.interior])


def interior_map_probe(G: BoundedTree, boundary_positions: Mapping, h: float | None = None,
                       tol: Tolerances = DEFAULT) -> InteriorMapProbe:
    """Finite-difference Jacobian of interior positions w.r.t. boundary coordinates.

    Central differences at ``h`` and ``h/2`` are compared with the implicit
    function Jacobian ``-H_II^{-1} H_IB``; ``ratio`` is the error ratio
    between the two steps, close to 4 for a smooth map.
    """
    base = solve_mpn(G, boundary_positions, tol)
    if base.degenerate_edges:
        raise StructuralError("interior map is only smooth at non-degenerate solutions")
    if not base.converged:
        raise StructuralError("base solve did not converge")
    lay = _layout(G)
    k = base.network.dimension
    pos = {v: np.asarray(boundary_positions[v], dtype=float) for v in lay.boundary}
    scale = diameter(np.array(list(pos.values())))
    if h is None:
        h = 1e-2 * scale

    def column(b, a, step):
        plus = dict(pos)
        minus = dict(pos)
        plus[b] = pos[b].copy()
        minus[b] = pos[b].copy()
        plus[b][a] += step
        minus[b][a] -= step
        zp = _interior_array(solve_mpn(G, plus, tol), lay)
        zm = _interior_array(solve_mpn(G, minus, tol), lay)
        return (zp - zm) / (2 * step)

    cols = [(b, a) for b in lay.boundary for a in range(k)]
    J1 = np.column_stack([column(b, a, h) for b, a in cols])
    J2 = np.column_stack([column(b, a, h / 2) for b, a in cols])
    H, _ = _full_hessian(base.network)
    nb = len(lay.boundary)
    Jift = -np.linalg.solve(H[nb * k:, nb * k:], H[nb * k:, :nb * k])
    e1 = np.linalg.norm(J1 - Jift)
    e2 = np.linalg.norm(J2 - Jift)
    ratio = float(e1 / e2) if e2 > 0 else math.inf
    return InteriorMapProbe(J1, J2, Jift, h, ratio, lay.boundary, lay.interior)


@dataclass(frozen=True)
class AngleReport:
    ok: bool
    violations: tuple[str, ...]
    min_angle: float


def _angle(a, b) -> float:
    c = float(a @ b) / (np.linalg.norm(a) * np.linalg.norm(b))
    return math.acos(max(-1.0, min(1.0, c)))


def validate_trace_angles(trace_net: Network, tol: Tolerances = DEFAULT) -> AngleReport:
    """Check the local structure of a shortest-tree trace.

    Adjacent edges must meet at angles of at least 2pi/3, vertex degrees
    may not exceed three, and at degree-three vertices all angles must be
    2pi/3.  Violations are returned, never raised.
    """
    tree = trace_net.tree
    bad = []
    min_ang = math.pi
    for v in tree.vertices:
        nbrs = tree.adjacency[v]
        if len(nbrs) > 3:
            bad.append(f"vertex {v} has degree {len(nbrs)} > 3")
        if len(nbrs) < 2:
            continue
        vecs = [trace_net.positions[w] - trace_net.positions[v] for w in nbrs]
        if any(float(x @ x) == 0.0 for x in vecs):
            bad.append(f"vertex {v} has a degenerate edge")
            continue
        for i in range(len(vecs)):
            for j in range(i + 1, len(vecs)):
                ang = _angle(vecs[i], vecs[j])
                min_ang = min(min_ang, ang)
                if ang < TWO_PI_3 - tol.angle:
                    bad.append(f"angle {ang:.9f} < 2pi/3 at vertex {v} between {nbrs[i]} and {nbrs[j]}")
                elif len(nbrs) == 3 and abs(ang - TWO_PI_3) > tol.angle:
                    bad.append(f"angle {ang:.9f} != 2pi/3 at degree-3 vertex {v}")
    return AngleReport(not bad, tuple(bad), min_ang)


@lru_cache(maxsize=None)
def _binary_types(n: int) -> tuple[BoundedTree, ...]:
    return tuple(enumerate_binary_trees(list(range(n))))


def binary_types(n: int) -> tuple[BoundedTree, ...]:
    """Binary trees on boundary labels ``0..n-1``, in a fixed order."""
    return _binary_types(n)


@dataclass(frozen=True, eq=False)
class SMTResult:
    length: float
    minimizers: tuple  # of (BinaryTree, trace Network)
    type_indices: tuple[int, ...]
    solves: tuple[ParametricSolveResult, ...] = field(repr=False)
    angle_reports: tuple[AngleReport, ...] = field(repr=False)
    tolerances: Tolerances = field(default=DEFAULT, repr=False)

    def trace_types(self) -> list[str]:
        return sorted({canonical_form(tr.tree) for _, tr in self.minimizers})


def solve_all_types(points, tol: Tolerances = DEFAULT) -> list[ParametricSolveResult]:
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    pos = {i: pts[i] for i in range(n)}
    return [solve_mpn(T, pos, tol) for T in binary_types(n)]


def smt(points, tol: Tolerances = DEFAULT) -> SMTResult:
    """Steiner minimal tree by exhaustive search over binary types."""
    pts = np.asarray(points, dtype=float)
    n = len(pts)
    if not 3 <= n <= SMT_MAX_N:
        raise GuardError(f"smt enumerates binary types for 3 <= n <= {SMT_MAX_N}, got {n}")
    for i in range(n):
        for j in range(i + 1, n):
            if np.array_equal(pts[i], pts[j]):
                raise StructuralError(f"boundary points {i} and {j} coincide")
    solves = solve_all_types(pts, tol)
    lengths = np.array([s.length for s in solves])
    best = float(lengths.min())
    idx = tuple(int(i) for i in np.flatnonzero(lengths <= best + tol.tie * (abs(best) + 1.0)))
    mins = tuple((solves[i].tree, solves[i].trace()) for i in idx)
    reports = tuple(validate_trace_angles(tr, tol) for _, tr in mins)
    return SMTResult(best, mins, idx, tuple(solves), reports, tol)


@dataclass(frozen=True)
class StabilityVerdict:
    stable: bool
    reasons: tuple[str, ...]
    trace_type: str


def stability_of_trace(trace_net: Network, tol: Tolerances = DEFAULT) -> StabilityVerdict:
    """Regular components may meet only at degree-2 boundary vertices, at angles > 2pi/3."""
    tree = trace_net.tree
    reasons = []
    comps = regular_components(tree)
    if len(comps) > 1:
        for v in sorted(tree.boundary, key=label_key):
            nbrs = tree.adjacency[v]
            if len(nbrs) < 2:
                continue
            if len(nbrs) >= 3:
                reasons.append(f"components meet at boundary vertex {v} of degree {len(nbrs)}")
                continue
            a = trace_net.positions[nbrs[0]] - trace_net.positions[v]
            b = trace_net.positions[nbrs[1]] - trace_net.positions[v]
            ang = _angle(a, b)
            if not ang > TWO_PI_3 + tol.margin:
                reasons.append(f"meeting angle {ang:.12f} at vertex {v} not above 2pi/3 + margin")
    return StabilityVerdict(not reasons, tuple(reasons), canonical_form(tree))


def classify_stability(points, tol: Tolerances = DEFAULT, result: SMTResult | None = None) -> list[StabilityVerdict]:
    """Stability verdict for every distinct minimizing SMT trace."""
    res = result if result is not None else smt(points, tol)
    seen = {}
    for _, tr in res.minimizers:
        key = canonical_form(tr.tree)
        if key not in seen:
            seen[key] = stability_of_trace(tr, tol)
    return [seen[k] for k in sorted(seen)]


def hypothesis_label(points, tol: Tolerances = DEFAULT, result: SMTResult | None = None) -> str:
    """Which stabilization hypothesis the configuration satisfies.

    ``"non-degenerate"`` when every shortest tree is a full binary tree,
    ``"stable"`` when every shortest tree is stable, otherwise
    ``"outside theorem hypotheses"``.
    """
    res = result if result is not None else smt(points, tol)
    if all(not sol.degenerate_edges for sol in (res.solves[i] for i in res.type_indices)):
        return "non-degenerate"
    if all(v.stable for v in classify_stability(points, tol, res)):
        return "stable"
    return "outside theorem hypotheses"


def pollak_prediction(quad: Sequence) -> tuple[tuple[int, int], float, float]:
    """Side pair whose vertical angle at the diagonal crossing is least.

    ``quad`` lists a convex quadrangle's vertices in cyclic order.  Returns
    the pairing ``(0, 1)`` (trees joining 0-1 and 2-3 by moustaches) or
    ``(1, 2)``, together with both angles.
    """
    p = np.asarray(quad, dtype=float)
    d1 = p[2] - p[0]
    d2 = p[3] - p[1]
    A = np.column_stack((d1, -d2))
    s, _ = np.linalg.solve(A, p[1] - p[0])
    O = p[0] + s * d1
    a01 = _angle(p[0] - O, p[1] - O)
    a12 = _angle(p[1] - O, p[2] - O)
    return ((0, 1) if a01 < a12 else (1, 2)), a01, a12
