"""Contamination-robust compression of a d-dimensional Gaussian.

The encoder whitens consecutive sample differences,
``Y_i = S^-1 (X_{2i} - X_{2i-1}) / sqrt(2)`` with ``S`` the symmetric
square root of the covariance, keeps the ``Y_i`` with norm at most
``4 * sqrt(d)``, and writes each scaled eigenvector direction
``w_j / c_hull`` (norm ``1 / c_hull``, the certified hull radius) as a
bounded combination of the kept vectors.  The decoder only ever sees raw
sample differences, so the quantized combination coefficients reconstruct
``v_j = sqrt(e_j) w_j`` from the referenced points alone and the
covariance returns as ``sum_j v_j v_j^T``.

The mean rides on one anchor point: the first of the two leading samples
whose whitened offset has norm at most ``4 * sqrt(d)`` is expressed as
``mu + sum_j lam_j v_j`` in the eigenbasis, and the ``lam_j`` are
quantized on a per-coordinate grid whose L2 rounding error is at most
``eps / (3d)``.

The scheme tolerates L1 contamination up to 2/3: both the hull event and
the anchor event survive per-sample total variation 1/3 from the truth.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import DecodingError, SingularCovarianceError, ValidationError
from ..gaussmodels import Gaussian, LabeledSample
from ..nets import solve_hull_coefficients
from .grids import SymmetricGrid
from .message import SCHEME_GD, BitReader, BitWriter, CompressionMessage
from .scheme import Codec, EncodeOutcome, SchemeSpec

ROBUSTNESS_L1 = 2.0 / 3.0
_RIDGE_REL = 1e-10


@dataclass(frozen=True)
class GdConfig:
    """Constants of the d-dimensional scheme.

    ``c_hull`` scales the hull targets (certified radius ``1 / c_hull``)
    and ``m_mult`` scales the number of difference pairs
    ``m = ceil(m_mult * d * (1 + ln d))``.
    """

    c_hull: float = 20.0
    m_mult: float = 40.0

    def __post_init__(self):
        if self.c_hull <= 0.0 or self.m_mult <= 0.0:
            raise ValidationError("c_hull and m_mult must be positive")


DEFAULT_GD_CONFIG = GdConfig()


def n_pairs(d: int, config: GdConfig = DEFAULT_GD_CONFIG) -> int:
    if d < 1:
        raise ValidationError("d must be >= 1")
    return math.ceil(config.m_mult * d * (1.0 + math.log(d)))


def m_samples_gd(d: int, config: GdConfig = DEFAULT_GD_CONFIG) -> int:
    return 2 * n_pairs(d, config)


def coefficient_grid(eps: float, d: int,
                     config: GdConfig = DEFAULT_GD_CONFIG) -> SymmetricGrid:
    """Grid for hull coefficients: spacing ``eps / (96 c_hull m d^3)`` on [-1, 1]."""
    m = n_pairs(d, config)
    step = eps / (96.0 * config.c_hull * m * d ** 3)
    return SymmetricGrid.from_bound(1.0, step)


def anchor_grid(eps: float, d: int) -> SymmetricGrid:
    """Per-coordinate grid for the anchor coefficients on ``[-4 sqrt(d), 4 sqrt(d)]``.

    Spacing ``2 eps / (3 d sqrt(d))`` makes the L2 rounding error of the
    full coefficient vector at most ``eps / (3d)``.
    """
    step = 2.0 * eps / (3.0 * d * math.sqrt(d))
    return SymmetricGrid.from_bound(4.0 * math.sqrt(d), step)


def t_bits_gd(eps: float, d: int, config: GdConfig = DEFAULT_GD_CONFIG) -> int:
    m = n_pairs(d, config)
    return d * m * coefficient_grid(eps, d, config).index_width \
        + d * anchor_grid(eps, d).index_width


def tau_gd(d: int, config: GdConfig = DEFAULT_GD_CONFIG) -> int:
    # all 2m difference points plus the anchor reference
    return 2 * n_pairs(d, config) + 1


def _check_eps(eps: float) -> None:
    if not (0.0 < eps <= 1.0):
        raise ValidationError("eps must lie in (0, 1]")


def encode_gd(target: Gaussian, sample: LabeledSample, eps: float,
              config: GdConfig = DEFAULT_GD_CONFIG) -> EncodeOutcome:
    """Encode a d-dimensional Gaussian from ``2m`` samples plus an anchor.

    Fails (never raises) when some scaled eigenvector direction falls
    outside the symmetric hull of the kept whitened differences, or when
    both anchor candidates have whitened norm above ``4 sqrt(d)``.
    """
    _check_eps(eps)
    if not isinstance(target, Gaussian):
        raise ValidationError("this scheme encodes Gaussians")
    d = target.dim
    m = n_pairs(d, config)
    if sample.dim != d:
        raise ValidationError("sample dimension does not match the target")
    if sample.n < 2 * m:
        raise ValidationError(f"need at least {2 * m} sample points")
    pts = sample.points[:2 * m]
    inv_sqrt = target.inv_sqrt_cov
    diffs = pts[1::2] - pts[0::2]              # (m, d), raw differences
    whitened = (diffs @ inv_sqrt) / math.sqrt(2.0)
    norms = np.linalg.norm(whitened, axis=1)
    keep = norms <= 4.0 * math.sqrt(d)
    if not np.any(keep):
        return EncodeOutcome.failure("all whitened differences filtered out")
    kept = whitened[keep]
    keep_idx = np.nonzero(keep)[0]

    # eigenvectors of the covariance carry the targets w_j / c_hull
    eigvecs = target.eigvecs
    theta = np.zeros((d, m))
    for j in range(d):
        sol = solve_hull_coefficients(kept, eigvecs[:, j] / config.c_hull)
        if sol is None:
            return EncodeOutcome.failure(
                f"eigen direction {j} escapes the difference hull")
        theta[j, keep_idx] = sol

    # anchor: first of the two leading points with a tame whitened offset
    anchor_ref = -1
    for cand in (0, 1):
        z = inv_sqrt @ (pts[cand] - target.mean)
        if np.linalg.norm(z) <= 4.0 * math.sqrt(d):
            anchor_ref = cand
            lam = eigvecs.T @ z  # coefficients in the eigenbasis
            break
    if anchor_ref < 0:
        return EncodeOutcome.failure("both anchor candidates are outliers")

    cgrid = coefficient_grid(eps, d, config)
    agrid = anchor_grid(eps, d)
    writer = BitWriter()
    for j in range(d):
        for i in range(m):
            writer.write_uint(cgrid.to_offset(cgrid.quantize(theta[j, i])),
                              cgrid.index_width)
    for j in range(d):
        writer.write_uint(agrid.to_offset(agrid.quantize(float(lam[j]))),
                          agrid.index_width)
    refs = np.concatenate([np.arange(2 * m), [anchor_ref]])
    msg = CompressionMessage.checked(
        SCHEME_GD, refs, writer.getvalue(),
        max_refs=tau_gd(d, config), max_bits=t_bits_gd(eps, d, config))
    return EncodeOutcome.success(msg)


@dataclass(frozen=True)
class GdDecoded:
    """Decoded Gaussian plus the reconstructed factor vectors.

    ``scaled_vectors`` rows are the reconstructed ``v_j`` whose outer
    products sum to the covariance; ``anchor_coeffs`` are the decoded
    anchor coefficients.
    """

    gaussian: Gaussian
    scaled_vectors: np.ndarray
    anchor_coeffs: np.ndarray


def decode_gd_detailed(message: CompressionMessage, points: np.ndarray,
                       eps: float,
                       config: GdConfig = DEFAULT_GD_CONFIG) -> GdDecoded:
    """Decode and also expose the per-direction reconstruction."""
    _check_eps(eps)
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2:
        raise ValidationError("points must have shape (n, d)")
    d = pts.shape[1]
    if message.n_refs < 3 or message.n_refs % 2 == 0:
        raise DecodingError("reference count must be odd and at least 3")
    m = (message.n_refs - 1) // 2
    if message.sample_refs.max() >= pts.shape[0]:
        raise DecodingError("sample reference out of range")
    cgrid = coefficient_grid(eps, d, config)
    agrid = anchor_grid(eps, d)
    expect_bits = d * m * cgrid.index_width + d * agrid.index_width
    if message.n_bits != expect_bits:
        raise DecodingError("payload has the wrong number of bits")
    pair_refs = message.sample_refs[:2 * m]
    diffs = pts[pair_refs[1::2]] - pts[pair_refs[0::2]]
    reader = BitReader(message.bits)
    try:
        theta = np.empty((d, m))
        for j in range(d):
            for i in range(m):
                theta[j, i] = cgrid.value(cgrid.from_offset(
                    reader.read_uint(cgrid.index_width)))
        lam = np.empty(d)
        for j in range(d):
            lam[j] = agrid.value(agrid.from_offset(
                reader.read_uint(agrid.index_width)))
    except ValidationError as exc:
        raise DecodingError(f"malformed payload: {exc}") from exc
    vecs = (config.c_hull / math.sqrt(2.0)) * (theta @ diffs)  # rows v_j
    cov = vecs.T @ vecs
    cov = 0.5 * (cov + cov.T)
    mean = pts[message.sample_refs[-1]] - lam @ vecs
    try:
        gauss = Gaussian(mean, cov)
    except SingularCovarianceError:
        ridge = _RIDGE_REL * float(np.trace(cov)) / d
        if ridge <= 0.0:
            raise DecodingError("reconstructed covariance is singular")
        try:
            gauss = Gaussian(mean, cov + ridge * np.eye(d))
        except SingularCovarianceError as exc:
            raise DecodingError("covariance repair failed") from exc
    return GdDecoded(gaussian=gauss, scaled_vectors=vecs, anchor_coeffs=lam)


def decode_gd(message: CompressionMessage, points: np.ndarray, eps: float,
              config: GdConfig = DEFAULT_GD_CONFIG) -> Gaussian:
    return decode_gd_detailed(message, points, eps, config).gaussian


def gd_codec(d: int, config: GdConfig = DEFAULT_GD_CONFIG) -> Codec:
    """Codec wrapper for fixed dimension ``d``."""
    m = n_pairs(d, config)

    def payload_count(eps: float) -> int:
        cgrid = coefficient_grid(eps, d, config)
        agrid = anchor_grid(eps, d)
        return cgrid.n_points ** (d * m) * agrid.n_points ** d

    def payload_by_index(eps: float, idx: int) -> np.ndarray:
        cgrid = coefficient_grid(eps, d, config)
        agrid = anchor_grid(eps, d)
        idx = int(idx)
        writer = BitWriter()
        digits = []
        for _ in range(d * m):
            idx, digit = divmod(idx, cgrid.n_points)
            digits.append((digit, cgrid.index_width))
        for _ in range(d):
            idx, digit = divmod(idx, agrid.n_points)
            digits.append((digit, agrid.index_width))
        if idx:
            raise ValidationError("payload index out of range")
        for digit, width in digits:
            writer.write_uint(digit, width)
        return writer.getvalue()

    def random_payload(eps: float, rng: np.random.Generator) -> np.ndarray:
        cgrid = coefficient_grid(eps, d, config)
        agrid = anchor_grid(eps, d)
        writer = BitWriter()
        for digit in rng.integers(cgrid.n_points, size=d * m):
            writer.write_uint(int(digit), cgrid.index_width)
        for digit in rng.integers(agrid.n_points, size=d):
            writer.write_uint(int(digit), agrid.index_width)
        return writer.getvalue()

    spec = SchemeSpec(
        name=f"gd[d={d}]",
        tau=lambda eps: tau_gd(d, config),
        t_bits=lambda eps: t_bits_gd(eps, d, config),
        m_samples=lambda eps: m_samples_gd(d, config),
        robustness=ROBUSTNESS_L1,
    )
    return Codec(
        spec=spec,
        scheme_id=SCHEME_GD,
        encode=lambda target, sample, eps: encode_gd(target, sample, eps, config),
        decode=lambda msg, pts, eps: decode_gd(msg, pts, eps, config),
        payload_count=payload_count,
        payload_by_index=payload_by_index,
        random_payload=random_payload,
    )
