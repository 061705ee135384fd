"""First and second variation of a segment's length under linear motion.

The segment ``A(t) B(t)`` with ``A(t) = A + u t`` and ``B(t) = B + v t`` has
length ``l(t) = |x + w t|`` where ``x = B - A`` and ``w = v - u``.  For the
two-parameter motion ``A(t) B(s)`` the length is ``|x + v s - u t|``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import SingularityError


@dataclass(frozen=True, eq=False)
class SegmentDeformation:
    A: np.ndarray
    B: np.ndarray
    u: np.ndarray
    v: np.ndarray

    def __post_init__(self):
        arrs = [np.asarray(getattr(self, k), dtype=float).reshape(-1) for k in "ABuv"]
        if len({a.shape for a in arrs}) != 1:
            raise ValueError("segment deformation vectors must share one dimension")
        for k, a in zip("ABuv", arrs):
            object.__setattr__(self, k, a)

    @property
    def x(self) -> np.ndarray:
        return self.B - self.A

    @property
    def w(self) -> np.ndarray:
        return self.v - self.u

    def length(self, t: float) -> float:
        y = self.x + self.w * t
        return math.sqrt(float(y @ y))

    def length2(self, s: float, t: float) -> float:
        y = self.x + self.v * s - self.u * t
        return math.sqrt(float(y @ y))


def length_derivatives_1param(d: SegmentDeformation, t: float = 0.0) -> tuple[float, float, float]:
    """``(l, l', l'')`` at ``t``; raises at a zero-length instant."""
    y = d.x + d.w * t
    yy = float(y @ y)
    if yy == 0.0:
        raise SingularityError(f"segment has zero length at t={t}")
    ell = math.sqrt(yy)
    w = d.w
    wy = float(w @ y)
    second = (float(w @ w) * yy - wy * wy) / ell**3
    # the Gram numerator is >= 0 exactly; clip rounding noise
    return ell, wy / ell, max(second, 0.0)


@dataclass(frozen=True)
class SecondVariation:
    dl_dt: float
    dl_ds: float
    d2l_dt2: float
    d2l_dsdt: float
    d2l_ds2: float


def length_partials_2param(d: SegmentDeformation) -> SecondVariation:
    """Partial derivatives of ``l(s, t) = |x + v s - u t|`` at ``(0, 0)``."""
    x, u, v = d.x, d.u, d.v
    xx = float(x @ x)
    if xx == 0.0:
        raise SingularityError("degenerate segment")
    nx = math.sqrt(xx)
    tau = x / nx
    xu, xv, uu, vv, uv = float(x @ u), float(x @ v), float(u @ u), float(v @ v), float(u @ v)
    n3 = nx**3
    return SecondVariation(
        dl_dt=-float(u @ tau),
        dl_ds=float(v @ tau),
        d2l_dt2=max(xx * uu - xu * xu, 0.0) / n3,
        d2l_dsdt=(xu * xv - xx * uv) / n3,
        d2l_ds2=max(xx * vv - xv * xv, 0.0) / n3,
    )


def gram_minors(d: SegmentDeformation) -> dict[str, float]:
    """The 2x2 Gram minors of ``{x, u, v}`` that appear as numerators above."""
    x, u, v = d.x, d.u, d.v
    G = np.array([[a @ b for b in (x, u, v)] for a in (x, u, v)], dtype=float)
    return {
        "xu": float(G[0, 0] * G[1, 1] - G[0, 1] ** 2),
        "xv": float(G[0, 0] * G[2, 2] - G[0, 2] ** 2),
        "mixed": float(G[0, 1] * G[0, 2] - G[0, 0] * G[1, 2]),
    }


def segment_hessian(x: np.ndarray) -> np.ndarray:
    """Matrix ``M`` with ``w^T M w = l''(0)`` for the segment ``x``.

    ``M = (|x|^2 I - x x^T) / |x|^3``; the quadratic form of the second
    variation in the relative velocity ``w`` of the endpoints.
    """
    x = np.asarray(x, dtype=float)
    xx = float(x @ x)
    if xx == 0.0:
        raise SingularityError("degenerate segment")
    nx = math.sqrt(xx)
    return (xx * np.eye(x.size) - np.outer(x, x)) / nx**3


def default_step(d: SegmentDeformation) -> float:
    """Step scaled to the segment's natural time scale ``|x| / |w|``."""
    nx = math.sqrt(float(d.x @ d.x))
    nw = math.sqrt(float(d.w @ d.w))
    scale = nx / nw if nw > 0 else max(1.0, nx)
    return 1e-2 * scale


@dataclass(frozen=True)
class FDEstimate:
    value_h: float
    value_h2: float
    h: float
    exact: float | None
    order: float | None


def _central(f, h: float, order: int) -> float:
    if order == 1:
        return (f(h) - f(-h)) / (2 * h)
    return (f(h) - 2 * f(0.0) + f(-h)) / (h * h)


def fd_oracle(d: SegmentDeformation, order: int, h: float | None = None) -> FDEstimate:
    """Central-difference estimate of ``l'(0)`` or ``l''(0)`` at ``h`` and ``h/2``.

    The empirical convergence order is ``log2(e_h / e_{h/2})`` measured
    against the closed-form derivative; it is None when both errors sit at
    rounding level.
    """
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    if h is None:
        h = default_step(d)
    x, w = d.x, d.w
    # the stencil must not cross a zero-length instant
    for t in (-h, 0.0, h):
        y = x + w * t
        if float(y @ y) == 0.0:
            raise SingularityError("finite-difference stencil crosses a degenerate segment")
    if float(w @ w) > 0:
        tc = -float(x @ w) / float(w @ w)
        if abs(tc) <= h and np.allclose(x + w * tc, 0.0, atol=1e-14 * (1 + math.sqrt(float(x @ x)))):
            raise SingularityError("finite-difference stencil crosses a degenerate segment")
    est_h = _central(d.length, h, order)
    est_h2 = _central(d.length, h / 2, order)
    exact = length_derivatives_1param(d, 0.0)[order]
    e1, e2 = abs(est_h - exact), abs(est_h2 - exact)
    floor = 64 * np.finfo(float).eps * max(1.0, d.length(0.0)) / h**order
    rate = math.log2(e1 / e2) if e1 > floor and e2 > 0 else None
    return FDEstimate(est_h, est_h2, h, exact, rate)


def fd_mixed_partial(d: SegmentDeformation, h: float = 1e-4) -> float:
    """Central-difference estimate of the mixed partial at ``(0, 0)``."""
    f = d.length2
    return (f(h, h) - f(h, -h) - f(-h, h) + f(-h, -h)) / (4 * h * h)
