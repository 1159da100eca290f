"""Epsilon-nets, coordinate quantizers, and convex hull certificates.

The L2-ball net is realized as a scaled axis grid (covering guarantee only,
no packing bound), which keeps quantization per-coordinate and therefore
serializable.  Hull membership is tested on a dense deterministic set of
directions, so a pass is approximate while a returned violation certificate
is exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product as _iter_product
from typing import Optional

import numpy as np
from scipy.optimize import lsq_linear

from .errors import NetSizeError, ValidationError

NET_SIZE_GUARD = 1_000_000_000
HULL_DIRECTION_SEED = 0x5EED_D1B5  # fixed so certificates are reproducible
HULL_MAX_DIM = 8
HULL_RESIDUAL_RTOL = 1e-8
_BISECT_ITERS = 14


@dataclass(frozen=True)
class Net:
    """A finite point set with its covering radius and metric tag."""

    points: np.ndarray
    radius: float
    metric: str  # "linf_cube" | "l2_ball" | "linf_simplex_embedding"

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValidationError("net points must have shape (N, d)")
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if self.radius <= 0.0:
            raise ValidationError("net radius must be positive")

    @property
    def size(self) -> int:
        return int(self.points.shape[0])


def _axis_centers(n_side: int) -> np.ndarray:
    # centers of n_side equal cells tiling [-1, 1]
    return -1.0 + (2.0 * np.arange(n_side) + 1.0) / n_side


def net_linf_cube(d: int, eps: float) -> Net:
    """Net of ``[-1, 1]^d`` under the sup norm: cube centers with side 2*eps.

    Size is ``ceil(1/eps)^d``; raises :class:`NetSizeError` beyond 1e9 points.
    """
    if d < 1:
        raise ValidationError("d must be >= 1")
    if not (0.0 < eps):
        raise ValidationError("eps must be positive")
    n_side = max(1, math.ceil(1.0 / eps))
    if n_side ** d > NET_SIZE_GUARD:
        raise NetSizeError(f"net would have {n_side}^{d} points")
    centers = _axis_centers(n_side)
    pts = np.array(list(_iter_product(centers, repeat=d)), dtype=float)
    return Net(points=pts.reshape(-1, d), radius=eps, metric="linf_cube")


def quantize_linf(x: np.ndarray, eps: float) -> tuple[np.ndarray, np.ndarray]:
    """Round each coordinate of ``x in [-1, 1]^d`` to its cube-center cell.

    Returns ``(indices, reconstruction)`` where indices are per-coordinate
    cell numbers in ``[0, ceil(1/eps))`` and the reconstruction is within
    ``eps`` of ``x`` in the sup norm.  Each index costs
    ``ceil(log2(ceil(1/eps)))`` bits.
    """
    x = np.asarray(x, dtype=float)
    if not (0.0 < eps):
        raise ValidationError("eps must be positive")
    if np.any(np.abs(x) > 1.0):
        raise ValidationError("quantize_linf input must lie in [-1, 1]^d")
    n_side = max(1, math.ceil(1.0 / eps))
    cell = 2.0 / n_side
    idx = np.clip(np.floor((x + 1.0) / cell).astype(np.int64), 0, n_side - 1)
    recon = -1.0 + (2.0 * idx + 1.0) / n_side
    return idx, recon


def net_l2_ball(d: int, eps: float, radius: float) -> Net:
    """Covering of the centered L2 ball of the given radius.

    Realized as an axis grid with per-coordinate spacing ``eps/sqrt(d)``
    (covering guarantee only).  Grid points farther than ``radius + eps``
    from the origin are pruned, which preserves the covering property.
    """
    if d < 1:
        raise ValidationError("d must be >= 1")
    if eps <= 0.0 or radius <= 0.0:
        raise ValidationError("eps and radius must be positive")
    if eps >= radius:
        return Net(points=np.zeros((1, d)), radius=eps, metric="l2_ball")
    n_side = math.ceil(radius * math.sqrt(d) / eps)
    if n_side ** d > NET_SIZE_GUARD:
        raise NetSizeError(f"net would have {n_side}^{d} points")
    centers = radius * _axis_centers(n_side)
    pts = np.array(list(_iter_product(centers, repeat=d)), dtype=float)
    pts = pts.reshape(-1, d)
    keep = np.linalg.norm(pts, axis=1) <= radius + eps
    return Net(points=pts[keep], radius=eps, metric="l2_ball")


def net_simplex(k: int, eps: float, size_guard: int = NET_SIZE_GUARD) -> Net:
    """Sup-norm net of the probability simplex on ``k`` outcomes.

    Points are integer compositions of ``N = ceil(1/eps)`` scaled by
    ``1/N``, so every weight vector is within ``eps`` per coordinate of a
    net point.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if eps <= 0.0:
        raise ValidationError("eps must be positive")
    n_steps = max(1, math.ceil(1.0 / eps))
    est_size = math.comb(n_steps + k - 1, k - 1)
    if est_size > size_guard:
        raise NetSizeError(f"simplex net would have {est_size} points")
    pts = []

    def rec(prefix, remaining, slots):
        if slots == 1:
            pts.append(prefix + [remaining])
            return
        for v in range(remaining + 1):
            rec(prefix + [v], remaining - v, slots - 1)

    rec([], n_steps, k)
    arr = np.asarray(pts, dtype=float) / n_steps
    return Net(points=arr, radius=eps, metric="linf_simplex_embedding")


def _hull_directions(d: int) -> np.ndarray:
    n_dirs = 10 * 3 ** d
    rng = np.random.default_rng(HULL_DIRECTION_SEED)
    dirs = rng.standard_normal((n_dirs, d))
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs


def hull_contains_ball(points: np.ndarray, rho: float
                       ) -> tuple[bool, Optional[np.ndarray]]:
    """Test ``rho * B_2 subseteq conv(points)`` on a dense direction set.

    Checks the support function ``max_i <y, t_i> >= rho`` over ``10 * 3^d``
    fixed pseudo-random unit directions.  A returned certificate (the first
    violating direction) is sound; a pass can miss shallow violations
    between tested directions.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[0] == 0:
        raise ValidationError("points must have shape (m, d) with m >= 1")
    d = pts.shape[1]
    if d > HULL_MAX_DIM:
        raise ValidationError(f"hull certification supports d <= {HULL_MAX_DIM}")
    if rho <= 0.0:
        raise ValidationError("rho must be positive")
    dirs = _hull_directions(d)
    support = (dirs @ pts.T).max(axis=1)
    bad = np.nonzero(support < rho)[0]
    if bad.size:
        return False, dirs[bad[0]].copy()
    return True, None


def solve_hull_coefficients(points: np.ndarray, target: np.ndarray,
                            rtol: float = HULL_RESIDUAL_RTOL
                            ) -> Optional[np.ndarray]:
    """Coefficients ``theta`` with ``sum theta_i t_i = target``, ``|theta|_inf <= 1``.

    Expresses ``target`` over the symmetric hull ``conv(points U -points)``.
    The sup norm of ``theta`` is (approximately) minimized by bisection on
    the box bound with a box-constrained least-squares feasibility
    subproblem at each step.  Returns ``None`` when no coefficient vector
    reproduces the target within ``rtol * (1 + |target|)``.
    """
    a = np.asarray(points, dtype=float).T  # (d, m)
    target = np.asarray(target, dtype=float)
    if a.ndim != 2 or target.ndim != 1 or a.shape[0] != target.shape[0]:
        raise ValidationError("points must be (m, d) and target (d,)")
    m = a.shape[1]
    tol = rtol * (1.0 + float(np.linalg.norm(target)))

    theta0, *_ = np.linalg.lstsq(a, target, rcond=None)
    if float(np.linalg.norm(a @ theta0 - target)) > tol:
        return None  # even the unconstrained least-squares residual misses
    hi = float(np.max(np.abs(theta0))) if m else 0.0
    if hi <= 1e-300:
        return np.zeros(m)
    best = theta0
    if hi > 1.0:
        res = lsq_linear(a, target, bounds=(-1.0, 1.0))
        if float(np.linalg.norm(a @ res.x - target)) > tol:
            return None
        best, hi = res.x, 1.0
    lo = 0.0
    for _ in range(_BISECT_ITERS):
        mid = 0.5 * (lo + hi)
        res = lsq_linear(a, target, bounds=(-mid, mid))
        if float(np.linalg.norm(a @ res.x - target)) <= tol:
            best, hi = res.x, mid
        else:
            lo = mid
    return best
