"""Gaussian and Gaussian-mixture models: validation, sampling, densities, JSON.

Covariance handling is eigendecomposition based throughout: the symmetric
square root ``sqrt_cov`` (not a Cholesky factor) is cached on construction
and used for sampling, so a draw is ``mean + sqrt_cov @ z`` with ``z``
standard normal.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional, Union

import numpy as np

from . import _kernels
from .errors import (
    DimensionMismatchError,
    SingularCovarianceError,
    ValidationError,
)
from .utils import as_generator

# relative symmetry tolerance and relative eigenvalue floor for covariances
COV_SYMMETRY_RTOL = 1e-10
COV_MIN_EIG_REL = 1e-12
# relative Frobenius tolerance for the cached square root
SQRT_CHECK_RTOL = 1e-8
# absolute tolerance on sum(weights) - 1
WEIGHT_SUM_ATOL = 1e-12


def _freeze(a: np.ndarray) -> np.ndarray:
    a.setflags(write=False)
    return a


def sqrt_spd(a: np.ndarray) -> np.ndarray:
    """Symmetric positive definite square root via eigendecomposition.

    Parameters
    ----------
    a : ndarray
        Symmetric positive definite matrix.

    Returns
    -------
    ndarray
        The unique SPD matrix ``b`` with ``b @ b == a``.
    """
    a = np.asarray(a, dtype=float)
    _check_spd_shape(a)
    eigvals, eigvecs = np.linalg.eigh(0.5 * (a + a.T))
    scale = float(np.max(np.abs(eigvals))) if eigvals.size else 0.0
    if scale <= 0.0 or float(eigvals.min()) < COV_MIN_EIG_REL * scale:
        raise SingularCovarianceError("matrix is not positive definite")
    return (eigvecs * np.sqrt(eigvals)) @ eigvecs.T


def _check_spd_shape(a: np.ndarray) -> None:
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise ValidationError("matrix has non-finite entries")
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale > 0.0 and float(np.max(np.abs(a - a.T))) > COV_SYMMETRY_RTOL * scale:
        raise ValidationError("matrix is not symmetric within tolerance")


class Gaussian:
    """Multivariate normal distribution with cached covariance factors.

    Parameters
    ----------
    mean : array_like
        Mean vector of length ``d``.
    cov : array_like
        Symmetric positive definite covariance, shape ``(d, d)``.
        Symmetry is enforced within a relative tolerance of 1e-10 and the
        input is symmetrized as ``(cov + cov.T) / 2``; any eigenvalue below
        ``1e-12 * ||cov||_2`` is rejected.

    Attributes
    ----------
    sqrt_cov : ndarray
        Symmetric square root of ``cov`` (eigendecomposition based).
    inv_cov : ndarray
        Inverse covariance.
    log_det_cov : float
        Log determinant of ``cov``.
    """

    __slots__ = ("mean", "cov", "sqrt_cov", "inv_cov", "log_det_cov",
                 "eigvals", "eigvecs", "_inv_sqrt")

    def __init__(self, mean, cov):
        mean = np.atleast_1d(np.asarray(mean, dtype=float))
        cov = np.asarray(cov, dtype=float)
        if mean.ndim != 1:
            raise ValidationError("mean must be a vector")
        if not np.all(np.isfinite(mean)):
            raise ValidationError("mean has non-finite entries")
        _check_spd_shape(cov)
        if cov.shape[0] != mean.shape[0]:
            raise DimensionMismatchError(
                f"mean has dim {mean.shape[0]} but cov is {cov.shape}")
        cov = 0.5 * (cov + cov.T)
        eigvals, eigvecs = np.linalg.eigh(cov)
        scale = float(np.max(np.abs(eigvals)))
        if scale <= 0.0 or float(eigvals.min()) < COV_MIN_EIG_REL * scale:
            raise SingularCovarianceError(
                "covariance eigenvalue below 1e-12 of the spectral norm")
        sqrt_cov = (eigvecs * np.sqrt(eigvals)) @ eigvecs.T
        err = np.linalg.norm(sqrt_cov @ sqrt_cov - cov)
        if err > SQRT_CHECK_RTOL * max(1.0, np.linalg.norm(cov)):
            raise SingularCovarianceError("square root check failed")
        self.mean = _freeze(mean)
        self.cov = _freeze(cov)
        self.sqrt_cov = _freeze(sqrt_cov)
        self.inv_cov = _freeze((eigvecs / eigvals) @ eigvecs.T)
        self.log_det_cov = float(np.sum(np.log(eigvals)))
        self.eigvals = _freeze(eigvals)
        self.eigvecs = _freeze(eigvecs)
        self._inv_sqrt = None

    @property
    def dim(self) -> int:
        return int(self.mean.shape[0])

    @property
    def inv_sqrt_cov(self) -> np.ndarray:
        """Inverse of the symmetric square root, computed lazily."""
        if self._inv_sqrt is None:
            self._inv_sqrt = _freeze(
                (self.eigvecs / np.sqrt(self.eigvals)) @ self.eigvecs.T)
        return self._inv_sqrt

    def log_density(self, x) -> Union[float, np.ndarray]:
        return log_density(self, x)

    def __repr__(self) -> str:
        return f"Gaussian(d={self.dim})"


class Mixture:
    """Finite mixture of Gaussians with validated weights.

    Weights must be nonnegative and sum to 1 within 1e-12; all components
    must share one dimension.
    """

    __slots__ = ("weights", "components")

    def __init__(self, weights, components):
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        components = list(components)
        if weights.ndim != 1 or len(components) != weights.shape[0]:
            raise ValidationError("need one weight per component")
        if weights.shape[0] == 0:
            raise ValidationError("mixture needs at least one component")
        if np.any(weights < 0.0) or not np.all(np.isfinite(weights)):
            raise ValidationError("weights must be finite and nonnegative")
        if abs(float(weights.sum()) - 1.0) > WEIGHT_SUM_ATOL:
            raise ValidationError("weights must sum to 1 within 1e-12")
        dims = {c.dim for c in components}
        if not all(isinstance(c, Gaussian) for c in components):
            raise ValidationError("components must be Gaussian")
        if len(dims) != 1:
            raise DimensionMismatchError("components have mixed dimensions")
        self.weights = _freeze(weights)
        self.components = tuple(components)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    @property
    def n_components(self) -> int:
        return len(self.components)

    def log_density(self, x) -> Union[float, np.ndarray]:
        return log_density(self, x)

    def __repr__(self) -> str:
        return f"Mixture(k={self.n_components}, d={self.dim})"


Distribution = Union[Gaussian, Mixture]


@dataclass(frozen=True)
class LabeledSample:
    """A batch of sample points with optional per-point component labels."""

    points: np.ndarray
    labels: Optional[np.ndarray] = None

    def __post_init__(self):
        pts = np.asarray(self.points, dtype=float)
        if pts.ndim != 2:
            raise ValidationError("points must have shape (n, d)")
        object.__setattr__(self, "points", _freeze(pts))
        if self.labels is not None:
            lab = np.asarray(self.labels, dtype=np.int64)
            if lab.shape != (pts.shape[0],):
                raise ValidationError("labels must have shape (n,)")
            object.__setattr__(self, "labels", _freeze(lab))

    @property
    def n(self) -> int:
        return int(self.points.shape[0])

    @property
    def dim(self) -> int:
        return int(self.points.shape[1])


def sample(dist: Distribution, n: int, seed) -> LabeledSample:
    """Draw ``n`` points from ``dist``.

    Gaussian draws are ``mean + sqrt_cov @ z``; mixture draws carry the
    component index of each point in ``labels``.
    """
    if n < 0:
        raise ValidationError("n must be nonnegative")
    rng = as_generator(seed)
    if isinstance(dist, Gaussian):
        z = rng.standard_normal((n, dist.dim))
        return LabeledSample(points=dist.mean + z @ dist.sqrt_cov)
    if isinstance(dist, Mixture):
        k = dist.n_components
        labels = rng.choice(k, size=n, p=dist.weights)
        z = rng.standard_normal((n, dist.dim))
        pts = np.empty((n, dist.dim))
        for c in range(k):
            mask = labels == c
            if np.any(mask):
                comp = dist.components[c]
                pts[mask] = comp.mean + z[mask] @ comp.sqrt_cov
        return LabeledSample(points=pts, labels=labels)
    raise ValidationError(f"cannot sample from {type(dist).__name__}")


def _as_batch(dist: Distribution, x) -> tuple[np.ndarray, bool]:
    x = np.asarray(x, dtype=float)
    if x.ndim == 1:
        if x.shape[0] != dist.dim:
            raise DimensionMismatchError(
                f"point has dim {x.shape[0]}, distribution has dim {dist.dim}")
        return x[None, :], True
    if x.ndim == 2:
        if x.shape[1] != dist.dim:
            raise DimensionMismatchError(
                f"points have dim {x.shape[1]}, distribution has dim {dist.dim}")
        return x, False
    raise ValidationError("x must be a vector (d,) or a batch (n, d)")


def log_density(dist: Distribution, x) -> Union[float, np.ndarray]:
    """Log density of ``dist`` at ``x`` (a vector) or at a batch of rows."""
    pts, single = _as_batch(dist, x)
    pts = np.ascontiguousarray(pts)
    if isinstance(dist, Gaussian):
        out = _kernels.gauss_logpdf(pts, dist.mean, dist.inv_cov, dist.log_det_cov)
    elif isinstance(dist, Mixture):
        keep = [i for i, w in enumerate(dist.weights) if w > 0.0]
        means = np.ascontiguousarray([dist.components[i].mean for i in keep])
        inv_covs = np.ascontiguousarray([dist.components[i].inv_cov for i in keep])
        log_dets = np.ascontiguousarray([dist.components[i].log_det_cov for i in keep])
        log_w = np.log(np.asarray([dist.weights[i] for i in keep]))
        out = _kernels.mixture_logpdf(pts, means, inv_covs, log_dets, log_w)
    else:
        raise ValidationError(f"cannot evaluate {type(dist).__name__}")
    return float(out[0]) if single else out


def density(dist: Distribution, x) -> Union[float, np.ndarray]:
    """Density of ``dist`` at ``x``; exp of :func:`log_density`."""
    return np.exp(log_density(dist, x))


# ---------------------------------------------------------------------------
# JSON serialization


def dist_to_json(dist: Distribution) -> dict:
    """Plain-dict JSON form: row-major nested lists for matrices."""
    if isinstance(dist, Gaussian):
        return {
            "type": "gaussian",
            "mean": [float(v) for v in dist.mean],
            "cov": [[float(v) for v in row] for row in dist.cov],
        }
    if isinstance(dist, Mixture):
        return {
            "type": "mixture",
            "weights": [float(w) for w in dist.weights],
            "components": [dist_to_json(c) for c in dist.components],
        }
    raise ValidationError(f"cannot serialize {type(dist).__name__}")


def dist_from_json(obj: dict) -> Distribution:
    """Parse and validate the JSON form produced by :func:`dist_to_json`."""
    if not isinstance(obj, dict):
        raise ValidationError("distribution JSON must be an object")
    kind = obj.get("type")
    if kind == "gaussian":
        if "mean" not in obj or "cov" not in obj:
            raise ValidationError("gaussian JSON needs 'mean' and 'cov'")
        mean = np.asarray(obj["mean"], dtype=float)
        cov = np.asarray(obj["cov"], dtype=float)
        if cov.ndim != 2:
            raise ValidationError("'cov' must be a row-major nested list")
        return Gaussian(mean, cov)
    if kind == "mixture":
        if "weights" not in obj or "components" not in obj:
            raise ValidationError("mixture JSON needs 'weights' and 'components'")
        comps = [dist_from_json(c) for c in obj["components"]]
        if not all(isinstance(c, Gaussian) for c in comps):
            raise ValidationError("mixture components must be gaussians")
        return Mixture(obj["weights"], comps)
    raise ValidationError(f"unknown distribution type {kind!r}")


def dist_dumps(dist: Distribution) -> str:
    return json.dumps(dist_to_json(dist))


def dist_loads(text: str) -> Distribution:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError(f"invalid distribution JSON: {exc}") from exc
    return dist_from_json(obj)
