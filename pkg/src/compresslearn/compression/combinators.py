"""Combinators that lift a base codec to products and mixtures.

Both combinators boost the base encoder by retrying on disjoint sample
batches.  The base encoder self-verifies (it knows the target and reports
failure), so per-slot failure probability shrinks geometrically with the
number of batches and a union bound over slots keeps the composite
failure probability at most 1/3.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import DecodingError, ValidationError
from ..gaussmodels import Gaussian, LabeledSample, Mixture
from .message import (SCHEME_MIXTURE, SCHEME_PRODUCT, BitReader, BitWriter,
                      CompressionMessage)
from .scheme import Codec, EncodeOutcome, SchemeSpec

# negligible mixture weight: at most eps / (NEGLIGIBLE_DIV * k)
NEGLIGIBLE_DIV = 6.0
_DIAG_OFF_RTOL = 1e-12


def _diag_or_raise(cov: np.ndarray) -> np.ndarray:
    diag = np.diag(cov)
    off = cov - np.diag(diag)
    if np.abs(off).max(initial=0.0) > _DIAG_OFF_RTOL * max(1.0, diag.max()):
        raise ValidationError("product codec requires a diagonal covariance")
    return diag


def compose_product(base: Codec, d: int) -> Codec:
    """Codec for d-dimensional axis-aligned Gaussians built from a 1-D codec.

    Each marginal is encoded to accuracy ``eps / d`` so the total variation
    of the product telescopes to at most ``eps``.  All marginals share the
    same sample rows; marginal ``j`` reads column ``j``.  A marginal that
    fails a batch retries on the next of ``ceil(log3(3d))`` disjoint
    batches.
    """
    if d < 1:
        raise ValidationError("d must be >= 1")
    n_batches = math.ceil(math.log(3 * d) / math.log(3.0))

    def sub_eps(eps: float) -> float:
        if not (0.0 < eps <= 1.0):
            raise ValidationError("eps must lie in (0, 1]")
        return eps / d

    def m_samples(eps: float) -> int:
        return n_batches * base.spec.m_samples(sub_eps(eps))

    def encode(target, samp: LabeledSample, eps: float) -> EncodeOutcome:
        if not isinstance(target, Gaussian):
            raise ValidationError("product codec encodes Gaussians")
        if target.dim != d or samp.dim != d:
            raise ValidationError(f"target and sample must have dimension {d}")
        variances = _diag_or_raise(target.cov)
        e = sub_eps(eps)
        m_base = base.spec.m_samples(e)
        if samp.n < n_batches * m_base:
            raise ValidationError(
                f"need at least {n_batches * m_base} sample points")
        all_refs = []
        all_bits = []
        for j in range(d):
            marginal = Gaussian([target.mean[j]], [[variances[j]]])
            outcome = None
            for b in range(n_batches):
                start = b * m_base
                batch = LabeledSample(samp.points[start:start + m_base, j:j + 1])
                outcome = base.encode(marginal, batch, e)
                if outcome.ok:
                    all_refs.append(outcome.message.sample_refs + start)
                    all_bits.append(outcome.message.bits)
                    break
            if outcome is None or not outcome.ok:
                return EncodeOutcome.failure(
                    f"marginal {j} failed all {n_batches} batches: "
                    f"{outcome.reason if outcome else 'no batch'}")
        msg = CompressionMessage.checked(
            SCHEME_PRODUCT, np.concatenate(all_refs),
            np.concatenate(all_bits),
            max_refs=d * base.spec.tau(e), max_bits=d * base.spec.t_bits(e))
        return EncodeOutcome.success(msg)

    def decode(message: CompressionMessage, points: np.ndarray,
               eps: float) -> Gaussian:
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != d:
            raise ValidationError(f"points must have shape (n, {d})")
        e = sub_eps(eps)
        tau_b = base.spec.tau(e)
        t_b = base.spec.t_bits(e)
        if message.n_refs != d * tau_b:
            raise DecodingError("reference count does not match the layout")
        if message.n_bits != d * t_b:
            raise DecodingError("payload size does not match the layout")
        mean = np.empty(d)
        var = np.empty(d)
        for j in range(d):
            sub = CompressionMessage(
                base.scheme_id,
                message.sample_refs[j * tau_b:(j + 1) * tau_b],
                message.bits[j * t_b:(j + 1) * t_b])
            gauss = base.decode(sub, pts[:, j:j + 1], e)
            mean[j] = gauss.mean[0]
            var[j] = gauss.cov[0, 0]
        return Gaussian(mean, np.diag(var))

    def payload_count(eps: float) -> int:
        return base.payload_count(sub_eps(eps)) ** d

    def payload_by_index(eps: float, idx: int) -> np.ndarray:
        e = sub_eps(eps)
        count = base.payload_count(e)
        idx = int(idx)
        blocks = []
        for _ in range(d):
            idx, digit = divmod(idx, count)
            blocks.append(base.payload_by_index(e, digit))
        if idx:
            raise ValidationError("payload index out of range")
        return np.concatenate(blocks)

    def random_payload(eps: float, rng: np.random.Generator) -> np.ndarray:
        e = sub_eps(eps)
        return np.concatenate([base.random_payload(e, rng) for _ in range(d)])

    spec = SchemeSpec(
        name=f"product[{base.name}]^{d}",
        tau=lambda eps: d * base.spec.tau(sub_eps(eps)),
        t_bits=lambda eps: d * base.spec.t_bits(sub_eps(eps)),
        m_samples=m_samples,
        robustness=base.spec.robustness,
    )
    return Codec(spec=spec, scheme_id=SCHEME_PRODUCT, encode=encode,
                 decode=decode, payload_count=payload_count,
                 payload_by_index=payload_by_index,
                 random_payload=random_payload)


def weight_grid_points(eps: float, k: int) -> int:
    """Number of grid points for one mixture weight on ``[0, 1]``."""
    if not (0.0 < eps <= 1.0):
        raise ValidationError("eps must lie in (0, 1]")
    if k < 1:
        raise ValidationError("k must be >= 1")
    return math.ceil(3 * k / eps)


def _weight_bits(n_w: int) -> int:
    return max(1, (n_w - 1).bit_length())


def compose_mixture(base: Codec, k: int) -> Codec:
    """Codec for k-component mixtures of what the base codec encodes.

    Components are encoded to accuracy ``eps / 3`` and weights on a grid
    of ``ceil(3k / eps)`` points, which together keep the mixture within
    ``eps`` in total variation.  Components with true weight at most
    ``eps / (6k)`` are negligible: they get filler references (row 0) and
    all-zero payloads, which never decode to a valid distribution, and the
    decoder substitutes a standard Gaussian for them.  Their weight error
    is already inside the grid budget.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")

    def sub_eps(eps: float) -> float:
        if not (0.0 < eps <= 1.0):
            raise ValidationError("eps must lie in (0, 1]")
        return eps / 3.0

    def t_bits(eps: float) -> int:
        n_w = weight_grid_points(eps, k)
        return k * _weight_bits(n_w) + k * base.spec.t_bits(sub_eps(eps))

    def m_samples(eps: float) -> int:
        mult = math.ceil(48.0 * k * math.log(6.0 * k) / eps)
        return mult * base.spec.m_samples(sub_eps(eps))

    def encode(target, samp: LabeledSample, eps: float) -> EncodeOutcome:
        if not isinstance(target, Mixture):
            raise ValidationError("mixture codec encodes mixtures")
        if target.n_components > k:
            raise ValidationError(f"target has more than {k} components")
        if samp.labels is None:
            raise ValidationError("mixture encoding needs labeled samples")
        e = sub_eps(eps)
        m_base = base.spec.m_samples(e)
        tau_b = base.spec.tau(e)
        t_b = base.spec.t_bits(e)
        n_w = weight_grid_points(eps, k)
        w_bits = _weight_bits(n_w)
        negligible = eps / (NEGLIGIBLE_DIV * k)
        writer = BitWriter()
        for i in range(k):
            w = target.weights[i] if i < target.n_components else 0.0
            writer.write_uint(min(n_w - 1, int(round(w * (n_w - 1)))), w_bits)
        all_refs = []
        payload = []
        for i in range(k):
            if i >= target.n_components or target.weights[i] <= negligible:
                all_refs.append(np.zeros(tau_b, dtype=np.int64))
                payload.append(np.zeros(t_b, dtype=np.uint8))
                continue
            rows = np.nonzero(samp.labels == i)[0]
            outcome = None
            for b in range(len(rows) // m_base):
                chunk = rows[b * m_base:(b + 1) * m_base]
                batch = LabeledSample(samp.points[chunk])
                outcome = base.encode(target.components[i], batch, e)
                if outcome.ok:
                    all_refs.append(chunk[outcome.message.sample_refs])
                    payload.append(outcome.message.bits)
                    break
            if outcome is None or not outcome.ok:
                return EncodeOutcome.failure(
                    f"component {i} exhausted its sample batches: "
                    f"{outcome.reason if outcome else 'too few labeled points'}")
        msg = CompressionMessage.checked(
            SCHEME_MIXTURE, np.concatenate(all_refs),
            np.concatenate([writer.getvalue()] + payload),
            max_refs=k * tau_b, max_bits=t_bits(eps))
        return EncodeOutcome.success(msg)

    def decode(message: CompressionMessage, points: np.ndarray,
               eps: float) -> Mixture:
        pts = np.asarray(points, dtype=float)
        if pts.ndim != 2:
            raise ValidationError("points must have shape (n, d)")
        d = pts.shape[1]
        e = sub_eps(eps)
        tau_b = base.spec.tau(e)
        t_b = base.spec.t_bits(e)
        n_w = weight_grid_points(eps, k)
        w_bits = _weight_bits(n_w)
        if message.n_refs != k * tau_b:
            raise DecodingError("reference count does not match the layout")
        if message.n_bits != k * w_bits + k * t_b:
            raise DecodingError("payload size does not match the layout")
        reader = BitReader(message.bits)
        weights = np.array([reader.read_uint(w_bits) for _ in range(k)],
                           dtype=float) / (n_w - 1)
        comps = []
        offset = k * w_bits
        for i in range(k):
            sub = CompressionMessage(
                base.scheme_id,
                message.sample_refs[i * tau_b:(i + 1) * tau_b],
                message.bits[offset + i * t_b:offset + (i + 1) * t_b])
            try:
                comps.append(base.decode(sub, pts, e))
            except DecodingError:
                # filler or junk payload: deterministic placeholder
                comps.append(Gaussian(np.zeros(d), np.eye(d)))
        total = weights.sum()
        if total > 0.0:
            weights = weights / total
        else:
            weights = np.full(k, 1.0 / k)
        return Mixture(weights, comps)

    def payload_count(eps: float) -> int:
        n_w = weight_grid_points(eps, k)
        return n_w ** k * base.payload_count(sub_eps(eps)) ** k

    def payload_by_index(eps: float, idx: int) -> np.ndarray:
        e = sub_eps(eps)
        n_w = weight_grid_points(eps, k)
        w_bits = _weight_bits(n_w)
        count = base.payload_count(e)
        idx = int(idx)
        writer = BitWriter()
        for _ in range(k):
            idx, digit = divmod(idx, n_w)
            writer.write_uint(digit, w_bits)
        blocks = [writer.getvalue()]
        for _ in range(k):
            idx, digit = divmod(idx, count)
            blocks.append(base.payload_by_index(e, digit))
        if idx:
            raise ValidationError("payload index out of range")
        return np.concatenate(blocks)

    def random_payload(eps: float, rng: np.random.Generator) -> np.ndarray:
        e = sub_eps(eps)
        n_w = weight_grid_points(eps, k)
        w_bits = _weight_bits(n_w)
        writer = BitWriter()
        for digit in rng.integers(n_w, size=k):
            writer.write_uint(int(digit), w_bits)
        blocks = [writer.getvalue()]
        blocks.extend(base.random_payload(e, rng) for _ in range(k))
        return np.concatenate(blocks)

    spec = SchemeSpec(
        name=f"mixture[{base.name}]x{k}",
        tau=lambda eps: k * base.spec.tau(sub_eps(eps)),
        t_bits=t_bits,
        m_samples=m_samples,
        # contamination tolerance does not compose through mixtures here
        robustness=0.0,
    )
    return Codec(spec=spec, scheme_id=SCHEME_MIXTURE, encode=encode,
                 decode=decode, payload_count=payload_count,
                 payload_by_index=payload_by_index,
                 random_payload=random_payload)
