"""Three-reference compression of a one-dimensional Gaussian.

The encoder forwards three raw sample points.  The scaled difference of the
first two carries the scale: with ``g = (g1 - g2) / sqrt(2)`` the ratio
``sigma / g`` is quantized on a symmetric grid over ``[-1/c_low, 1/c_low]``.
The third point anchors the mean through the standardized offset
``(mu - g3) / sigma`` quantized over ``[-c_high, c_high]``.  Encoding fails
when ``|g|`` falls outside ``(c_low * sigma, c_high * sigma)`` or the third
point is farther than ``c_high * sigma`` from the mean; both events together
occur with probability below 0.03.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DecodingError, ValidationError
from ..gaussmodels import Gaussian, LabeledSample
from .grids import SymmetricGrid
from .message import SCHEME_G1D, BitReader, BitWriter, CompressionMessage
from .scheme import Codec, EncodeOutcome, SchemeSpec

C_LOW_DEFAULT = 0.0125
C_HIGH_DEFAULT = 2.6
_TAU = 3
_M_SAMPLES = 3


def scale_ratio_grid(eps: float, c_low: float = C_LOW_DEFAULT,
                     c_high: float = C_HIGH_DEFAULT) -> SymmetricGrid:
    """Grid for sigma/g: spacing ``eps / (2 * c_high^2)`` out to ``1/c_low``."""
    return SymmetricGrid.from_bound(1.0 / c_low, eps / (2.0 * c_high * c_high))


def mean_offset_grid(eps: float, c_high: float = C_HIGH_DEFAULT) -> SymmetricGrid:
    """Grid for the standardized mean offset: spacing ``eps/2`` out to ``c_high``."""
    return SymmetricGrid.from_bound(c_high, eps / 2.0)


def _check_eps(eps: float) -> None:
    if not (0.0 < eps <= 1.0):
        raise ValidationError("eps must lie in (0, 1]")


def _sigma_mu(target: Gaussian) -> tuple[float, float]:
    if not isinstance(target, Gaussian) or target.dim != 1:
        raise ValidationError("this scheme encodes one-dimensional Gaussians")
    return math.sqrt(float(target.cov[0, 0])), float(target.mean[0])


def t_bits_g1d(eps: float, c_low: float = C_LOW_DEFAULT,
               c_high: float = C_HIGH_DEFAULT) -> int:
    return (scale_ratio_grid(eps, c_low, c_high).index_width
            + mean_offset_grid(eps, c_high).index_width)


def encode_g1d(target: Gaussian, sample: LabeledSample, eps: float,
               c_low: float = C_LOW_DEFAULT,
               c_high: float = C_HIGH_DEFAULT) -> EncodeOutcome:
    """Encode a 1-D Gaussian from its first three sample points.

    Returns a failed outcome (never raises) when the sample realization
    misses the encoder's acceptance events.
    """
    _check_eps(eps)
    sigma, mu = _sigma_mu(target)
    if sample.n < _M_SAMPLES or sample.dim != 1:
        raise ValidationError("need at least 3 one-dimensional sample points")
    g1, g2, g3 = (float(v) for v in sample.points[:3, 0])
    g = (g1 - g2) / math.sqrt(2.0)
    if not (c_low * sigma < abs(g) < c_high * sigma):
        return EncodeOutcome.failure("scale difference outside (c_low, c_high) band")
    if abs(g3 - mu) > c_high * sigma:
        return EncodeOutcome.failure("anchor point too far from the mean")
    ratio_grid = scale_ratio_grid(eps, c_low, c_high)
    offset_grid = mean_offset_grid(eps, c_high)
    lam_idx = ratio_grid.quantize(sigma / g)
    eta_idx = offset_grid.quantize((mu - g3) / sigma)
    writer = BitWriter()
    writer.write_uint(ratio_grid.to_offset(lam_idx), ratio_grid.index_width)
    writer.write_uint(offset_grid.to_offset(eta_idx), offset_grid.index_width)
    msg = CompressionMessage.checked(
        SCHEME_G1D, np.arange(3), writer.getvalue(),
        max_refs=_TAU, max_bits=t_bits_g1d(eps, c_low, c_high))
    return EncodeOutcome.success(msg)


def decode_g1d(message: CompressionMessage, points: np.ndarray, eps: float,
               c_low: float = C_LOW_DEFAULT,
               c_high: float = C_HIGH_DEFAULT) -> Gaussian:
    """Deterministically rebuild the Gaussian from three referenced points."""
    _check_eps(eps)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 1:
        raise ValidationError("points must have shape (n, 1)")
    if message.n_refs != _TAU:
        raise DecodingError(f"expected {_TAU} references, got {message.n_refs}")
    if message.sample_refs.max() >= pts.shape[0]:
        raise DecodingError("sample reference out of range")
    g1, g2, g3 = (float(pts[r, 0]) for r in message.sample_refs)
    ratio_grid = scale_ratio_grid(eps, c_low, c_high)
    offset_grid = mean_offset_grid(eps, c_high)
    if message.n_bits != ratio_grid.index_width + offset_grid.index_width:
        raise DecodingError("payload has the wrong number of bits")
    reader = BitReader(message.bits)
    try:
        lam = ratio_grid.value(ratio_grid.from_offset(
            reader.read_uint(ratio_grid.index_width)))
        eta = offset_grid.value(offset_grid.from_offset(
            reader.read_uint(offset_grid.index_width)))
    except ValidationError as exc:
        raise DecodingError(f"malformed payload: {exc}") from exc
    sigma_hat = lam * (g1 - g2) / math.sqrt(2.0)
    if sigma_hat <= 0.0:
        raise DecodingError("decoded scale is not positive")
    mu_hat = g3 + sigma_hat * eta
    return Gaussian([mu_hat], [[sigma_hat * sigma_hat]])


def g1d_codec(c_low: float = C_LOW_DEFAULT,
              c_high: float = C_HIGH_DEFAULT) -> Codec:
    """Codec wrapper: tau = 3 references, O(log(1/eps)) bits, m = 3 samples."""

    def payload_count(eps: float) -> int:
        return (scale_ratio_grid(eps, c_low, c_high).n_points
                * mean_offset_grid(eps, c_high).n_points)

    def payload_by_index(eps: float, idx: int) -> np.ndarray:
        ratio_grid = scale_ratio_grid(eps, c_low, c_high)
        offset_grid = mean_offset_grid(eps, c_high)
        lam_off, eta_off = divmod(int(idx), offset_grid.n_points)
        if not (0 <= lam_off < ratio_grid.n_points):
            raise ValidationError("payload index out of range")
        writer = BitWriter()
        writer.write_uint(lam_off, ratio_grid.index_width)
        writer.write_uint(eta_off, offset_grid.index_width)
        return writer.getvalue()

    def random_payload(eps: float, rng: np.random.Generator) -> np.ndarray:
        ratio_grid = scale_ratio_grid(eps, c_low, c_high)
        offset_grid = mean_offset_grid(eps, c_high)
        writer = BitWriter()
        writer.write_uint(int(rng.integers(ratio_grid.n_points)),
                          ratio_grid.index_width)
        writer.write_uint(int(rng.integers(offset_grid.n_points)),
                          offset_grid.index_width)
        return writer.getvalue()

    spec = SchemeSpec(
        name="g1d",
        tau=lambda eps: _TAU,
        t_bits=lambda eps: t_bits_g1d(eps, c_low, c_high),
        m_samples=lambda eps: _M_SAMPLES,
        robustness=0.0,
    )
    return Codec(
        spec=spec,
        scheme_id=SCHEME_G1D,
        encode=lambda target, sample, eps: encode_g1d(target, sample, eps,
                                                      c_low, c_high),
        decode=lambda msg, pts, eps: decode_g1d(msg, pts, eps, c_low, c_high),
        payload_count=payload_count,
        payload_by_index=payload_by_index,
        random_payload=random_payload,
    )
