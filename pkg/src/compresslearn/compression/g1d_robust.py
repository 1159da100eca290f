"""Constant-size contamination-robust compression of a 1-D Gaussian.

Four raw sample points and a single bit suffice.  The encoder partitions
``[mu - 2*sigma, mu + 2*sigma)`` into ``4M`` cells of width ``eps * sigma``
(``M = ceil(1/eps)``) and looks for occupied cell pairs:

* variance, preferred rule (bit 0): cells ``i`` and ``i + M`` for
  ``i in {M+1..2M}``, one scale apart, so ``|y1 - y2|`` is within
  ``eps * sigma`` of ``sigma``;
* variance, fallback rule (bit 1): cells ``i`` and ``i + 3M`` for
  ``i in {1..M}``, three scales apart, so ``|y1 - y2| / 3`` estimates
  ``sigma`` within ``eps * sigma / 3``;
* mean: cells ``i`` and ``4M - i + 1`` for ``i in {1..2M}``, mirror images
  about the mean, so ``(x1 + x2) / 2`` is within ``eps * sigma / 2`` of
  ``mu``.

Lowest cell index and lowest sample index win every tie, which makes the
encoder deterministic.  The scheme tolerates L1 contamination up to 0.773.
"""

from __future__ import annotations

import math

import numpy as np

from .._kernels import first_occupants
from ..errors import DecodingError, ValidationError
from ..gaussmodels import Gaussian, LabeledSample
from .message import SCHEME_G1D_ROBUST, CompressionMessage
from .scheme import Codec, EncodeOutcome, SchemeSpec

M_MULT_DEFAULT = 60.0
ROBUSTNESS_L1 = 0.773
_TAU = 4
_T_BITS = 1


def _check_eps(eps: float) -> None:
    if not (0.0 < eps <= 1.0):
        raise ValidationError("eps must lie in (0, 1]")


def m_samples_robust(eps: float, m_mult: float = M_MULT_DEFAULT) -> int:
    _check_eps(eps)
    return math.ceil(m_mult / eps)


def decode_g1d_robust(x1: float, x2: float, y1: float, y2: float,
                      b: int) -> Gaussian:
    """Decoder map: mean ``(x1+x2)/2``; variance ``|y1-y2|^2``, divided by 9
    when the fallback bit is set."""
    if b not in (0, 1):
        raise ValidationError("b must be 0 or 1")
    spread = abs(y1 - y2)
    if spread <= 0.0:
        raise DecodingError("decoded scale is not positive")
    sd = spread / 3.0 if b == 1 else spread
    return Gaussian([(x1 + x2) / 2.0], [[sd * sd]])


def encode_g1d_robust(target: Gaussian, sample: LabeledSample, eps: float,
                      m_mult: float = M_MULT_DEFAULT) -> EncodeOutcome:
    """Pick one mean pair and one variance pair of occupied cells."""
    _check_eps(eps)
    if not isinstance(target, Gaussian) or target.dim != 1:
        raise ValidationError("this scheme encodes one-dimensional Gaussians")
    m_need = m_samples_robust(eps, m_mult)
    if sample.n < m_need or sample.dim != 1:
        raise ValidationError(f"need at least {m_need} one-dimensional points")
    sigma = math.sqrt(float(target.cov[0, 0]))
    mu = float(target.mean[0])
    big_m = math.ceil(1.0 / eps)
    n_cells = 4 * big_m
    pts = sample.points[:m_need, 0]
    cell_width = eps * sigma
    left = mu - 2.0 * sigma
    # 1-based cell ids 1..4M inside the window; everything else is discarded
    raw = np.floor((pts - left) / cell_width).astype(np.int64)
    raw[(pts < left) | (raw >= n_cells)] = -1
    first = first_occupants(raw, n_cells)  # first sample index per 0-based cell

    def occ(cell_1based: int) -> int:
        return int(first[cell_1based - 1])

    var_pair = None
    for i in range(big_m + 1, 2 * big_m + 1):
        if occ(i) >= 0 and occ(i + big_m) >= 0:
            var_pair = (occ(i), occ(i + big_m), 0)
            break
    if var_pair is None:
        for i in range(1, big_m + 1):
            if occ(i) >= 0 and occ(i + 3 * big_m) >= 0:
                var_pair = (occ(i), occ(i + 3 * big_m), 1)
                break
    if var_pair is None:
        return EncodeOutcome.failure("no occupied variance cell pair")
    mean_pair = None
    for i in range(1, 2 * big_m + 1):
        if occ(i) >= 0 and occ(n_cells - i + 1) >= 0:
            mean_pair = (occ(i), occ(n_cells - i + 1))
            break
    if mean_pair is None:
        return EncodeOutcome.failure("no occupied mean cell pair")
    iy1, iy2, b = var_pair
    refs = np.asarray([mean_pair[0], mean_pair[1], iy1, iy2])
    msg = CompressionMessage.checked(
        SCHEME_G1D_ROBUST, refs, np.asarray([b], dtype=np.uint8),
        max_refs=_TAU, max_bits=_T_BITS)
    return EncodeOutcome.success(msg)


def decode_g1d_robust_message(message: CompressionMessage, points: np.ndarray,
                              eps: float) -> Gaussian:
    _check_eps(eps)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 1:
        raise ValidationError("points must have shape (n, 1)")
    if message.n_refs != _TAU or message.n_bits != _T_BITS:
        raise DecodingError("expected 4 references and 1 bit")
    if message.sample_refs.max() >= pts.shape[0]:
        raise DecodingError("sample reference out of range")
    x1, x2, y1, y2 = (float(pts[r, 0]) for r in message.sample_refs)
    return decode_g1d_robust(x1, x2, y1, y2, int(message.bits[0]))


def g1d_robust_codec(m_mult: float = M_MULT_DEFAULT) -> Codec:
    """Codec wrapper: 4 references, 1 bit, m = ceil(m_mult/eps) samples."""
    spec = SchemeSpec(
        name="g1d_robust",
        tau=lambda eps: _TAU,
        t_bits=lambda eps: _T_BITS,
        m_samples=lambda eps: m_samples_robust(eps, m_mult),
        robustness=ROBUSTNESS_L1,
    )
    return Codec(
        spec=spec,
        scheme_id=SCHEME_G1D_ROBUST,
        encode=lambda target, sample, eps: encode_g1d_robust(target, sample,
                                                             eps, m_mult),
        decode=decode_g1d_robust_message,
        payload_count=lambda eps: 2,
        payload_by_index=lambda eps, idx: np.asarray([int(idx) & 1],
                                                     dtype=np.uint8),
        random_payload=lambda eps, rng: np.asarray([int(rng.integers(2))],
                                                   dtype=np.uint8),
    )
