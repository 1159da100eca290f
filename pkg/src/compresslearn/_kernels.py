"""Hot numerical kernels with numba-accelerated and pure-numpy twins.

Every public function here dispatches to an ``@njit`` implementation when
numba is importable, and to a vectorized numpy twin otherwise.  Setting the
environment variable ``COMPRESSLEARN_NO_NUMBA=1`` forces the numpy path even
when numba is installed.  Run ``python -m compresslearn.benchmarks`` to
compare the two backends.

Integer-valued kernels return bit-identical results on both backends.  The
float kernels may differ in the last ulp because summation order differs;
callers must not rely on cross-backend bitwise identity.
"""

from __future__ import annotations

import math
import os

import numpy as np

try:
    from numba import njit

    HAS_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAS_NUMBA = False

    def njit(*args, **kwargs):  # type: ignore[misc]
        def wrap(fn):
            return fn

        if args and callable(args[0]):
            return args[0]
        return wrap


def _env_disabled() -> bool:
    return os.environ.get("COMPRESSLEARN_NO_NUMBA", "").strip() not in ("", "0", "false", "False")


USE_NUMBA = HAS_NUMBA and not _env_disabled()


def backend_name() -> str:
    """Name of the active kernel backend, ``"numba"`` or ``"numpy"``."""
    return "numba" if USE_NUMBA else "numpy"


# ---------------------------------------------------------------------------
# Gaussian log-density


def gauss_logpdf_np(points: np.ndarray, mean: np.ndarray, inv_cov: np.ndarray,
                    log_det: float) -> np.ndarray:
    y = points - mean
    quad = np.einsum("ij,jk,ik->i", y, inv_cov, y)
    d = points.shape[1]
    return -0.5 * (d * math.log(2.0 * math.pi) + log_det + quad)


@njit(cache=True)
def gauss_logpdf_nb(points, mean, inv_cov, log_det):  # pragma: no cover - jitted
    n, d = points.shape
    out = np.empty(n)
    const = -0.5 * (d * math.log(2.0 * math.pi) + log_det)
    for i in range(n):
        quad = 0.0
        for j in range(d):
            row = 0.0
            for k in range(d):
                row += inv_cov[j, k] * (points[i, k] - mean[k])
            quad += (points[i, j] - mean[j]) * row
        out[i] = const - 0.5 * quad
    return out


def gauss_logpdf(points, mean, inv_cov, log_det):
    """Batched log-density of ``N(mean, cov)`` given ``inv_cov`` and ``log_det``."""
    if USE_NUMBA:
        return gauss_logpdf_nb(points, mean, inv_cov, float(log_det))
    return gauss_logpdf_np(points, mean, inv_cov, float(log_det))


# ---------------------------------------------------------------------------
# Mixture log-density (log-sum-exp over components)


def mixture_logpdf_np(points, means, inv_covs, log_dets, log_weights):
    n = points.shape[0]
    k = means.shape[0]
    comp = np.empty((k, n))
    for c in range(k):
        comp[c] = log_weights[c] + gauss_logpdf_np(points, means[c], inv_covs[c], log_dets[c])
    top = comp.max(axis=0)
    out = top + np.log(np.sum(np.exp(comp - top), axis=0))
    return out


@njit(cache=True)
def mixture_logpdf_nb(points, means, inv_covs, log_dets, log_weights):  # pragma: no cover
    n, d = points.shape
    k = means.shape[0]
    out = np.empty(n)
    base = -0.5 * d * math.log(2.0 * math.pi)
    for i in range(n):
        top = -1e300
        vals = np.empty(k)
        for c in range(k):
            quad = 0.0
            for j in range(d):
                row = 0.0
                for t in range(d):
                    row += inv_covs[c, j, t] * (points[i, t] - means[c, t])
                quad += (points[i, j] - means[c, j]) * row
            v = log_weights[c] + base - 0.5 * (log_dets[c] + quad)
            vals[c] = v
            if v > top:
                top = v
        acc = 0.0
        for c in range(k):
            acc += math.exp(vals[c] - top)
        out[i] = top + math.log(acc)
    return out


def mixture_logpdf(points, means, inv_covs, log_dets, log_weights):
    """Batched mixture log-density; zero-weight components must be pre-dropped."""
    if USE_NUMBA:
        return mixture_logpdf_nb(points, means, inv_covs, log_dets, log_weights)
    return mixture_logpdf_np(points, means, inv_covs, log_dets, log_weights)


# ---------------------------------------------------------------------------
# Hamming distance screen for greedy code construction


def hamming_at_least_np(words: np.ndarray, cand: np.ndarray, dmin: int) -> bool:
    if words.shape[0] == 0:
        return True
    return bool(np.min(np.sum(words != cand, axis=1)) >= dmin)


@njit(cache=True)
def hamming_at_least_nb(words, cand, dmin):  # pragma: no cover - jitted
    n, k = words.shape
    for i in range(n):
        dist = 0
        for j in range(k):
            if words[i, j] != cand[j]:
                dist += 1
        if dist < dmin:
            return False
    return True


def hamming_at_least(words, cand, dmin):
    """True iff ``cand`` is at Hamming distance >= dmin from every row of ``words``."""
    if USE_NUMBA:
        if words.shape[0] == 0:
            return True
        return bool(hamming_at_least_nb(words, cand, int(dmin)))
    return hamming_at_least_np(words, cand, int(dmin))


# ---------------------------------------------------------------------------
# First occupant per cell (interval pairing in the constant-size 1-D scheme)


def first_occupants_np(cells: np.ndarray, n_cells: int) -> np.ndarray:
    out = np.full(n_cells, -1, dtype=np.int64)
    valid = (cells >= 0) & (cells < n_cells)
    idx = np.nonzero(valid)[0]
    # reversed scatter keeps the lowest sample index per cell
    out[cells[idx[::-1]]] = idx[::-1]
    return out


@njit(cache=True)
def first_occupants_nb(cells, n_cells):  # pragma: no cover - jitted
    out = np.full(n_cells, -1, dtype=np.int64)
    for i in range(cells.shape[0]):
        c = cells[i]
        if 0 <= c < n_cells and out[c] < 0:
            out[c] = i
    return out


def first_occupants(cells, n_cells):
    """Index of the first sample landing in each cell, -1 for empty cells."""
    cells = np.ascontiguousarray(cells, dtype=np.int64)
    if USE_NUMBA:
        return first_occupants_nb(cells, int(n_cells))
    return first_occupants_np(cells, int(n_cells))


# ---------------------------------------------------------------------------
# Pairwise empirical winner fractions for candidate selection


def pairwise_greater_fraction_np(values: np.ndarray) -> np.ndarray:
    m, n = values.shape
    out = np.zeros((m, m))
    block = max(1, int(2e7) // max(n, 1))
    for lo in range(0, m, block):
        hi = min(m, lo + block)
        cmp = values[lo:hi, None, :] > values[None, :, :]
        out[lo:hi] = cmp.mean(axis=2)
    return out


@njit(cache=True)
def pairwise_greater_fraction_nb(values):  # pragma: no cover - jitted
    m, n = values.shape
    out = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            ci = 0
            cj = 0
            for t in range(n):
                if values[i, t] > values[j, t]:
                    ci += 1
                elif values[j, t] > values[i, t]:
                    cj += 1
            out[i, j] = ci / n
            out[j, i] = cj / n
    return out


def pairwise_greater_fraction(values):
    """For rows i, j: fraction of columns where ``values[i] > values[j]``.

    Ties count for neither side (strict inequality) on both backends, and
    the diagonal is zero.
    """
    values = np.ascontiguousarray(values)
    if USE_NUMBA:
        return pairwise_greater_fraction_nb(values)
    return pairwise_greater_fraction_np(values)
