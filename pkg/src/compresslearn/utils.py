"""Small shared helpers: RNG coercion and random SPD matrices."""

from __future__ import annotations

import numpy as np

from .errors import ValidationError


def as_generator(seed) -> np.random.Generator:
    """Coerce ``seed`` into a ``numpy.random.Generator``.

    Parameters
    ----------
    seed : int or numpy.random.Generator
        An integer seed, or an existing generator (returned unchanged).
    """
    if isinstance(seed, np.random.Generator):
        return seed
    if seed is None:
        raise ValidationError("seed must be an int or a numpy Generator")
    return np.random.default_rng(int(seed))


def random_spd(d: int, seed, cond_max: float = 1e2, scale: float = 1.0) -> np.ndarray:
    """Random SPD matrix with log-uniform spectrum and Haar-random basis.

    The spectrum is drawn log-uniformly over ``[scale/sqrt(cond_max),
    scale*sqrt(cond_max)]`` so the condition number never exceeds
    ``cond_max``.
    """
    if d < 1:
        raise ValidationError("d must be >= 1")
    rng = as_generator(seed)
    half = np.log10(cond_max) / 2.0
    eig = scale * 10.0 ** rng.uniform(-half, half, size=d)
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    a = (q * eig) @ q.T
    return 0.5 * (a + a.T)
