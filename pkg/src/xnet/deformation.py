"""One-parameter boundary deformations and the evolution of optimal types.

A scene moves each boundary point along a curve: a polynomial (analytic)
or a flat oscillation ``base + dir * exp(-(s/t)^2) * sin(1/t)`` that is
smooth but not analytic at ``t = 0``.  Along the scene, a family of
functionals (spanning trees, Steiner trace types, filling types) is
minimised at every sample, and the resulting index sets ``I_min(t)`` are
inspected for one-sided stabilization near ``t0``.

Sampling is dyadic toward ``t0`` (``t0 +- window * 2^-j``, ``j = 0..40``)
plus a uniform fill ``t0 +- window * k / N``; doubling ``N`` keeps every
earlier sample.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .errors import StructuralError
from .functionals import _spanning_incidence, _spanning_trees, tie_band
from .metric import EUCLIDEAN, MetricKind, diameter, pullback
from .steiner import binary_types, hypothesis_label, pollak_prediction, smt, solve_all_types
from .tolerances import DEFAULT, Tolerances
from .topology import canonical_form, moustaches

DYADIC_LEVELS = 40
MIN_RUN = 4
RESOLUTION = 1e-8
UNRESOLVED = "unresolved"
NOT_CONSTANT = "not constant at resolution"


@dataclass(frozen=True, eq=False)
class Polynomial:
    """``curve(t) = sum_j coeffs[j] t^j``."""

    coeffs: np.ndarray

    def __post_init__(self):
        c = np.atleast_2d(np.asarray(self.coeffs, dtype=float))
        if c.ndim != 2 or c.shape[0] < 1:
            raise StructuralError("polynomial curve needs at least one coefficient vector")
        object.__setattr__(self, "coeffs", c)

    @property
    def dimension(self) -> int:
        return self.coeffs.shape[1]

    def base(self) -> np.ndarray:
        return self.coeffs[0]

    def __call__(self, t: float) -> np.ndarray:
        out = np.zeros(self.dimension)
        for c in self.coeffs[::-1]:
            out = out * t + c
        return out

    def envelope(self, t: float) -> float | None:
        return None

    def to_dict(self) -> dict:
        return {"kind": "poly", "coeffs": self.coeffs.tolist()}


@dataclass(frozen=True, eq=False)
class OscillatorySmooth:
    """``base + direction * exp(-(flatness / t)^2) * sin(1 / t)`` for ``t > 0``.

    With ``flatness = 1`` the envelope drops below double precision for
    ``t < 0.04``; smaller values keep the oscillations visible at the
    sampled scales while leaving the curve flat (all derivatives zero) at 0.
    """

    base_point: np.ndarray
    direction: np.ndarray
    flatness: float = 1.0

    def __post_init__(self):
        b = np.asarray(self.base_point, dtype=float).reshape(-1)
        d = np.asarray(self.direction, dtype=float).reshape(-1)
        if b.shape != d.shape:
            raise StructuralError("oscillation base and direction must share one dimension")
        if not self.flatness > 0:
            raise StructuralError("flatness must be positive")
        object.__setattr__(self, "base_point", b)
        object.__setattr__(self, "direction", d)

    @property
    def dimension(self) -> int:
        return self.base_point.size

    def base(self) -> np.ndarray:
        return self.base_point

    def envelope(self, t: float) -> float:
        if t <= 0:
            return 0.0
        return float(np.linalg.norm(self.direction)) * math.exp(-((self.flatness / t) ** 2))

    def __call__(self, t: float) -> np.ndarray:
        if t <= 0:
            return self.base_point.copy()
        return self.base_point + self.direction * (math.exp(-((self.flatness / t) ** 2)) * math.sin(1.0 / t))

    def to_dict(self) -> dict:
        return {"kind": "osc", "base": self.base_point.tolist(), "dir": self.direction.tolist(),
                "flatness": self.flatness}


CurveSpec = Polynomial | OscillatorySmooth


def curve_from_dict(d: dict, where: str = "curve") -> CurveSpec:
    kind = d.get("kind")
    try:
        if kind == "poly":
            return Polynomial(d["coeffs"])
        if kind == "osc":
            return OscillatorySmooth(d["base"], d["dir"], float(d.get("flatness", 1.0)))
    except KeyError as exc:
        raise StructuralError(f"{where}: missing field {exc.args[0]!r}") from None
    raise StructuralError(f"{where}: unknown curve kind {kind!r}")


@dataclass(frozen=True, eq=False)
class DeformationScene:
    curves: tuple
    kind: MetricKind = EUCLIDEAN
    t0: float = 0.0
    window: float = 0.1
    samples: int = 64
    name: str = "custom"

    def __post_init__(self):
        curves = tuple(self.curves)
        object.__setattr__(self, "curves", curves)
        if len(curves) < 2:
            raise StructuralError("a scene needs at least two boundary points")
        dims = {c.dimension for c in curves}
        if len(dims) != 1:
            raise StructuralError("all curves must share one dimension")
        if not self.window > 0 or self.samples < 1:
            raise StructuralError("window must be positive and samples at least 1")
        pts = self.points(self.t0)
        for i in range(len(pts)):
            for j in range(i + 1, len(pts)):
                if np.array_equal(pts[i], pts[j]):
                    raise StructuralError(f"points {i} and {j} coincide at t0={self.t0}")

    @property
    def n(self) -> int:
        return len(self.curves)

    @property
    def dimension(self) -> int:
        return self.curves[0].dimension

    def points(self, t: float) -> np.ndarray:
        return np.array([c(t) for c in self.curves])

    def scale(self) -> float:
        return diameter(self.points(self.t0))

    def resolved(self, t: float) -> bool:
        """False where an oscillation is present but below float resolution."""
        floor = RESOLUTION * self.scale()
        for c in self.curves:
            env = c.envelope(t)
            if env is not None and t > 0 and env < floor:
                return False
        return True

    def with_samples(self, samples: int) -> "DeformationScene":
        return DeformationScene(self.curves, self.kind, self.t0, self.window, samples, self.name)

    def to_dict(self) -> dict:
        pts = self.points(self.t0)
        return {
            "name": self.name,
            "dimension": self.dimension,
            "metric": self.kind.p,
            "points": pts.tolist(),
            "curves": [c.to_dict() for c in self.curves],
            "t0": self.t0,
            "window": self.window,
            "samples": self.samples,
        }


def scene_from_dict(d: dict) -> DeformationScene:
    """Build a scene from its JSON form, validating dimensions and bases."""
    if "points" not in d:
        raise StructuralError("scene: missing field 'points'")
    pts = d["points"]
    k = d.get("dimension", len(pts[0]) if pts else 0)
    for i, p in enumerate(pts):
        if len(p) != k:
            raise StructuralError(f"scene: points[{i}] has dimension {len(p)}, expected {k}")
    curves_d = d.get("curves")
    if curves_d is None:
        curves = [Polynomial([p]) for p in pts]
    else:
        if len(curves_d) != len(pts):
            raise StructuralError(f"scene: {len(curves_d)} curves for {len(pts)} points")
        curves = [curve_from_dict(c, f"scene: curves[{i}]") for i, c in enumerate(curves_d)]
        for i, (c, p) in enumerate(zip(curves, pts)):
            if c.dimension != k:
                raise StructuralError(f"scene: curves[{i}] has dimension {c.dimension}, expected {k}")
            if not np.allclose(c.base(), p, rtol=0, atol=1e-12):
                raise StructuralError(f"scene: curves[{i}] does not start at points[{i}]")
    return DeformationScene(
        curves,
        MetricKind(float(d.get("metric", 2.0))),
        float(d.get("t0", 0.0)),
        float(d.get("window", 0.1)),
        int(d.get("samples", 64)),
        str(d.get("name", "custom")),
    )


def eval_scene(scene: DeformationScene, t: float):
    """Boundary points at ``t`` and their pullback semimetric."""
    pts = scene.points(t)
    return pts, pullback(pts, scene.kind)


# ---------------------------------------------------------------- families


class MSTFamily:
    """All spanning trees of the complete graph on the boundary."""

    name = "mst"

    def __init__(self, n: int):
        self.trees = _spanning_trees(n)
        self.A = _spanning_incidence(n)
        self.labels = tuple(F.label() for F in self.trees)

    def evaluate(self, scene: DeformationScene, pts):
        r = pullback(pts, scene.kind)
        return dict(zip(self.labels, (self.A @ r.r).tolist())), True


class SteinerFamily:
    """Minimal parametric networks of every binary type, grouped by trace type."""

    name = "smt"

    def __init__(self, n: int, tol: Tolerances = DEFAULT):
        self.tol = tol
        self.cache: dict = {}

    def evaluate(self, scene: DeformationScene, pts):
        key = pts.tobytes()
        if key not in self.cache:
            if scene.kind.p != 2:
                raise StructuralError("the Steiner family is Euclidean only")
            vals: dict = {}
            ok = True
            for sol in solve_all_types(pts, self.tol):
                ok = ok and sol.converged
                lab = canonical_form(sol.trace().tree)
                vals[lab] = min(vals.get(lab, math.inf), sol.length)
            self.cache[key] = (vals, ok)
        return self.cache[key]


class FillingFamily:
    """Generalized filling weight of every binary type."""

    name = "fill"

    def __init__(self, n: int):
        self.types = binary_types(n)
        self.labels = tuple(canonical_form(T) for T in self.types)
        self.cache: dict = {}

    def evaluate(self, scene: DeformationScene, pts):
        from .fillings import mpf

        key = pts.tobytes()
        if key not in self.cache:
            r = pullback(pts, scene.kind)
            self.cache[key] = ({lab: mpf(r, T, signed=True).weight for lab, T in zip(self.labels, self.types)}, True)
        return self.cache[key]


def make_family(name: str, n: int, tol: Tolerances = DEFAULT):
    if name == "mst":
        return MSTFamily(n)
    if name == "smt":
        return SteinerFamily(n, tol)
    if name == "fill":
        return FillingFamily(n)
    raise StructuralError(f"unknown family {name!r}; expected mst, smt or fill")


# ---------------------------------------------------------------- timelines


@dataclass(frozen=True)
class Sample:
    t: float
    value: float
    set: frozenset
    side: int  # -1 left, 0 at t0, +1 right
    level: int | None  # dyadic level j, or None for uniform fill
    flag: str | None  # None, "unresolved" or "nonconverged"


@dataclass(frozen=True, eq=False)
class TypeTimeline:
    samples: tuple[Sample, ...]
    family: str
    tie: float
    t0: float

    @property
    def grid(self) -> np.ndarray:
        return np.array([s.t for s in self.samples])

    @property
    def sets(self) -> list[frozenset]:
        return [s.set for s in self.samples]

    @property
    def values(self) -> np.ndarray:
        return np.array([s.value for s in self.samples])

    def base(self) -> Sample:
        return next(s for s in self.samples if s.side == 0)

    def side(self, sign: int) -> list[Sample]:
        return [s for s in self.samples if s.side == sign]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "L_min", "I_min"])
        for s in self.samples:
            w.writerow([f"{s.t:.12g}", f"{s.value:.12g}", ";".join(sorted(s.set))])
        return buf.getvalue()


def sample_grid(scene: DeformationScene, samples: int | None = None) -> list[tuple[float, int, int | None]]:
    """``(t, side, dyadic level)`` triples in increasing ``t``."""
    N = scene.samples if samples is None else samples
    t0, w = scene.t0, scene.window
    pts = {t0: (0, None)}
    for k in range(N, 0, -1):
        off = w * k / N
        pts.setdefault(t0 + off, (1, None))
        pts.setdefault(t0 - off, (-1, None))
    for j in range(DYADIC_LEVELS + 1):
        off = w * 2.0 ** -j
        pts[t0 + off] = (1, j)
        pts[t0 - off] = (-1, j)
    return [(t, side, lvl) for t, (side, lvl) in sorted(pts.items())]


def track_types(scene: DeformationScene, family, samples: int | None = None,
                tol: Tolerances = DEFAULT) -> TypeTimeline:
    """``I_min`` of ``family`` at every grid sample of the scene."""
    if isinstance(family, str):
        family = make_family(family, scene.n, tol)
    out = []
    for t, side, lvl in sample_grid(scene, samples):
        pts = scene.points(t)
        vals, ok = family.evaluate(scene, pts)
        labels = list(vals)
        lo, i_min, _, _ = tie_band([vals[k] for k in labels], tol.tie)
        flag = None
        if not scene.resolved(t):
            flag = UNRESOLVED
        elif not ok:
            flag = "nonconverged"
        out.append(Sample(t, lo, frozenset(labels[i] for i in i_min), side, lvl, flag))
    return TypeTimeline(tuple(out), family.name, tol.tie, scene.t0)


# ---------------------------------------------------------------- reports


@dataclass(frozen=True)
class TailResult:
    set: frozenset | str
    level: int | None  # coarsest dyadic level of the constant run
    run: int


@dataclass(frozen=True, eq=False)
class StabilizationReport:
    base_set: frozenset
    right: TailResult
    left: TailResult
    contained_in_base: bool | None
    flip_count_right: int
    flip_count_left: int
    flip_locations: tuple[float, ...]
    claim2_applicable: bool
    claim2_holds: bool | None
    window_constant: bool
    excluded: int
    tie: float

    @property
    def right_set(self):
        return self.right.set

    @property
    def left_set(self):
        return self.left.set

    @property
    def flip_count(self) -> int:
        return self.flip_count_right + self.flip_count_left

    def lines(self) -> list[str]:
        def fmt(s):
            return s if isinstance(s, str) else "{" + ", ".join(sorted(s)) + "}"

        return [
            f"base I_min: {fmt(self.base_set)}",
            f"right tail: {fmt(self.right.set)} (coarsest level {self.right.level}, run {self.right.run})",
            f"left tail: {fmt(self.left.set)} (coarsest level {self.left.level}, run {self.left.run})",
            f"tails contained in base: {self.contained_in_base}",
            f"flips right/left: {self.flip_count_right}/{self.flip_count_left}",
            f"claim-2 applicable: {self.claim2_applicable}, holds: {self.claim2_holds}",
            f"constant over window: {self.window_constant}",
            f"excluded samples: {self.excluded}",
        ]


def _tail(levels: list[Sample], min_run: int) -> TailResult:
    """Constant finest-scale tail of a dyadic sequence.

    Scanning from the finest level outward, the sets must shrink
    monotonically (the tie band makes them saturate to the base set at the
    finest scales) and then settle on a value held for ``min_run`` levels.
    A scan that meets an unresolved sample before settling gives up.
    """
    seq = sorted(levels, key=lambda s: -s.level)
    seq = [s for s in seq if s.flag != "nonconverged"]
    if not seq:
        return TailResult(NOT_CONSTANT, None, 0)
    result = TailResult(NOT_CONSTANT, None, 0)
    cur, run, coarsest = None, 0, None
    for s in seq:
        if s.flag == UNRESOLVED:
            return TailResult(NOT_CONSTANT, None, 0)
        if cur is None or s.set == cur:
            run += 1
            cur = s.set
            coarsest = s.level
        elif s.set <= cur:
            cur, run, coarsest = s.set, 1, s.level
        else:
            break
        if run >= min_run:
            result = TailResult(cur, coarsest, run)
    return result


def _flips(samples: list[Sample]) -> list[float]:
    """Changes of ``I_min`` along ``t`` whose sets are disjoint from the last reference."""
    out = []
    ref = None
    for s in samples:
        if s.flag is not None:
            continue
        if ref is None:
            ref = s.set
            continue
        if not (s.set & ref):
            out.append(s.t)
            ref = s.set
    return out


def stabilization_report(tl: TypeTimeline, base_set: frozenset | None = None,
                         min_run: int = MIN_RUN) -> StabilizationReport:
    base = tl.base().set if base_set is None else frozenset(base_set)
    right_samples = tl.side(1)
    left_samples = tl.side(-1)
    right = _tail([s for s in right_samples if s.level is not None], min_run)
    left = _tail([s for s in left_samples if s.level is not None], min_run)
    checks = [tail.set <= base for tail in (right, left) if tail.set != NOT_CONSTANT]
    contained = all(checks) if checks else None
    fr = _flips(right_samples)
    fl = _flips(left_samples[::-1])
    usable = [s for s in tl.samples if s.flag is None]
    window_constant = all(s.set == base for s in usable)
    applicable = right.set == base or left.set == base
    holds = None
    if applicable:
        # constancy where the tails were observed to be settled
        rad = []
        for tail in (right, left):
            if tail.set != NOT_CONSTANT and tail.level is not None:
                rad.append(2.0 ** -tail.level)
        lim = min(rad) if rad else 0.0
        win = max(abs(s.t - tl.t0) for s in tl.samples) or 1.0
        near = [s for s in usable if abs(s.t - tl.t0) <= lim * win * (1 + 1e-12)]
        holds = all(s.set == base for s in near)
    return StabilizationReport(
        base, right, left, contained, len(fr), len(fl), tuple(sorted(fl + fr)),
        applicable, holds, window_constant, sum(1 for s in tl.samples if s.flag), tl.tie,
    )


def right_flip_count(tl: TypeTimeline, upto: float | None = None) -> int:
    """Flips on ``(t0, t0 + upto]``."""
    lim = math.inf if upto is None else tl.t0 + upto * (1 + 1e-12)
    return len(_flips([s for s in tl.side(1) if s.t <= lim]))


# ---------------------------------------------------------------- scenarios

OSC_AMPLITUDE = 0.05
OSC_FLATNESS = 0.002


def scenario_library(name: str, samples: int = 4096) -> DeformationScene:
    """Named scenes.

    ``figure1``: points O, A at angle 2pi/3 from B = (1, 0), with B
    oscillating vertically.  ``figure2``: unit square whose vertex (1, 1)
    oscillates across the diagonal through it.  ``square-diagonal``: the
    same vertex moving analytically along that diagonal.
    ``square-transversal``: the vertex moving analytically across it.
    """
    c, s = math.cos(2 * math.pi / 3), math.sin(2 * math.pi / 3)
    if name == "figure1":
        curves = [
            Polynomial([[0.0, 0.0]]),
            Polynomial([[c, s]]),
            OscillatorySmooth([1.0, 0.0], [0.0, OSC_AMPLITUDE], OSC_FLATNESS),
        ]
        return DeformationScene(curves, EUCLIDEAN, 0.0, 0.1, samples, name)
    square = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]]
    fixed = [Polynomial([p]) for p in square]
    if name == "figure2":
        d = OSC_AMPLITUDE / math.sqrt(2)
        fixed[2] = OscillatorySmooth([1.0, 1.0], [d, -d], OSC_FLATNESS)
        return DeformationScene(fixed, EUCLIDEAN, 0.0, 0.1, samples, name)
    if name == "square-diagonal":
        fixed[2] = Polynomial([[1.0, 1.0], [1.0, 1.0]])
        return DeformationScene(fixed, EUCLIDEAN, 0.0, 0.1, min(samples, 64), name)
    if name == "square-transversal":
        fixed[2] = Polynomial([[1.0, 1.0], [1.0, -1.0]])
        return DeformationScene(fixed, EUCLIDEAN, 0.0, 0.1, min(samples, 64), name)
    raise StructuralError(
        f"unknown scenario {name!r}; known: figure1, figure2, square-diagonal, square-transversal"
    )


SCENARIOS = ("figure1", "figure2", "square-diagonal", "square-transversal")


def random_polynomial_scene(rng: np.random.Generator, n: int, degree: int, lattice: bool = False,
                            window: float = 0.5, samples: int = 32) -> DeformationScene:
    """Random planar scene; ``lattice`` bases create ties among optimal types."""
    while True:
        if lattice:
            base = rng.integers(0, 3, size=(n, 2)).astype(float)
        else:
            base = rng.uniform(-1, 1, size=(n, 2))
        if len({tuple(p) for p in base}) < n:
            continue
        curves = []
        for p in base:
            coeffs = [p] + [rng.normal(0, 1, 2) for _ in range(degree)]
            curves.append(Polynomial(coeffs))
        return DeformationScene(curves, EUCLIDEAN, 0.0, window, samples, "random")


def scene_hypothesis(scene: DeformationScene, tol: Tolerances = DEFAULT) -> str:
    """Which stabilization hypothesis the base configuration satisfies."""
    if scene.kind.p != 2 or not 3 <= scene.n <= 7:
        return "not applicable"
    return hypothesis_label(scene.points(scene.t0), tol)


# ---------------------------------------------------------------- Pollak


def quad_pairing(tree) -> tuple[int, int] | None:
    """``(0, 1)`` if the 4-leaf tree pairs {0,1}|{2,3}, ``(1, 2)`` for {1,2}|{0,3}."""
    pairs = set()
    for (v, a), (_, b) in moustaches(tree):
        pairs.add(frozenset((a, b)))
    if frozenset((0, 1)) in pairs or frozenset((2, 3)) in pairs:
        return (0, 1)
    if frozenset((1, 2)) in pairs or frozenset((0, 3)) in pairs:
        return (1, 2)
    return None


@dataclass(frozen=True)
class PollakCheck:
    applicable: bool
    predicted: tuple[int, int]
    observed: tuple[int, int] | None
    angles: tuple[float, float]
    agrees: bool


def pollak_check(quad: Sequence, margin: float = 1e-6, tol: Tolerances = DEFAULT) -> PollakCheck:
    """Compare the shortest binary type with the least-angle prediction.

    Applicable when both side-pairing types have non-degenerate minimal
    networks and the two vertical angles differ by more than ``margin``.
    """
    pts = np.asarray(quad, dtype=float)
    predicted, a01, a12 = pollak_prediction(pts)
    res = smt(pts, tol)
    by_pair = {}
    for sol in res.solves:
        pr = quad_pairing(sol.tree)
        if pr is not None:
            by_pair[pr] = sol
    applicable = (
        len(by_pair) == 2
        and all(not s.degenerate_edges and s.converged for s in by_pair.values())
        and abs(a01 - a12) > margin
    )
    best = min(by_pair.items(), key=lambda kv: kv[1].length)[0] if by_pair else None
    observed = best
    # the crossing-diagonals type can never be shortest for a convex quadrangle
    best_overall = res.solves[res.type_indices[0]]
    if quad_pairing(best_overall.tree) is None:
        observed = None
    return PollakCheck(applicable, predicted, observed, (a01, a12), observed == predicted)


def random_convex_quad(rng: np.random.Generator) -> np.ndarray:
    """Four points in convex position, listed counter-clockwise."""
    while True:
        ang = np.sort(rng.uniform(0, 2 * np.pi, 4))
        rad = rng.uniform(0.5, 1.5, 4)
        pts = np.column_stack((rad * np.cos(ang), rad * np.sin(ang)))
        # convex iff every consecutive turn is to the left
        ok = True
        for i in range(4):
            a, b, c = pts[i], pts[(i + 1) % 4], pts[(i + 2) % 4]
            cross = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
            if cross <= 1e-3:
                ok = False
        if ok:
            return pts
