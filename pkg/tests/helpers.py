"""Shared test utilities."""

import numpy as np

from compresslearn import LabeledSample
from compresslearn.compression import CompressionMessage


def encode_with_retries(codec, target, samp, eps):
    """Encode over disjoint batches until one accepts; remap refs globally.

    Returns the remapped message or None when every batch fails.
    """
    m_b = codec.spec.m_samples(eps)
    for b in range(samp.n // m_b):
        sl = slice(b * m_b, (b + 1) * m_b)
        labels = None if samp.labels is None else samp.labels[sl]
        out = codec.encode(target, LabeledSample(samp.points[sl], labels), eps)
        if out.ok:
            return CompressionMessage(
                out.message.scheme_id,
                out.message.sample_refs + b * m_b,
                out.message.bits)
    return None


def spd_with_condition(d: int, cond: float, rng) -> np.ndarray:
    """Random SPD matrix with exactly the requested condition number."""
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    q = q * np.sign(np.diag(r))
    if d == 1:
        return np.array([[1.0]])
    eigs = np.exp(np.linspace(0.0, np.log(cond), d))
    return (q * eigs) @ q.T
