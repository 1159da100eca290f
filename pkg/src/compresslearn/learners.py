"""Learning algorithms built on the compression codecs.

``select_candidate`` runs a Scheffe tournament over a finite candidate
list.  ``learn_from_compression`` turns any codec into a learner by
enumerating (or sampling) candidate messages, decoding them against a
held sample prefix, and selecting on a fresh holdout.
``learn_gaussian_efficient`` is the polynomial-time single-Gaussian
estimator, and ``learn_mixture_agnostic`` assembles mixture candidates
from per-component messages of the contamination-robust codec.
"""

from __future__ import annotations

import hashlib
import itertools
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy.special import ndtr

from ._kernels import pairwise_greater_fraction
from .compression import CompressionMessage, Codec, gd_codec
from .errors import DecodingError, ValidationError
from .gaussmodels import Gaussian, LabeledSample, Mixture, log_density, sample
from .nets import Net, net_simplex
from .utils import as_generator

Distribution = Union[Gaussian, Mixture]

SCHEFFE_MC_POOL = 5000      # MC draws per candidate for d > 1 region masses
SCHEFFE_GRID_POINTS = 8193  # shared quadrature grid for 1-D mixtures
SCHEFFE_GRID_SIGMAS = 10.0
EFFICIENT_SAMPLE_CONST = 8.0
# enumeration runs at eps/6 and selection at eps/16 so the tournament's
# 3*opt + 4*eps_sel guarantee lands within eps overall
ENUM_ACCURACY_DIV = 6.0
SELECT_ACCURACY_DIV = 16.0
AGNOSTIC_COMPONENT_DIV = 10.0
AGNOSTIC_SELECT_DIV = 40.0


def holdout_size(n_candidates: int, eps: float, delta: float) -> int:
    """Points needed to select among ``n_candidates`` at accuracy ``eps``.

    The tournament's union bound over candidate pairs needs
    ``ceil(ln(3 M^2 / delta) / (2 eps^2))`` holdout points for the
    3*opt + 4*eps guarantee to hold with probability ``1 - delta/3``.
    """
    if n_candidates < 1:
        raise ValidationError("need at least one candidate")
    if not (0.0 < eps < 1.0) or not (0.0 < delta < 1.0):
        raise ValidationError("eps and delta must lie in (0, 1)")
    return math.ceil(math.log(3.0 * n_candidates ** 2 / delta)
                     / (2.0 * eps ** 2))


@dataclass(frozen=True)
class CandidateSet:
    """Candidate distributions plus per-candidate provenance tags."""

    candidates: tuple
    provenance: tuple

    def __post_init__(self):
        if len(self.candidates) == 0:
            raise ValidationError("candidate set must be nonempty")
        if len(self.provenance) != len(self.candidates):
            raise ValidationError("need one provenance entry per candidate")
        dims = {c.dim for c in self.candidates}
        if len(dims) != 1:
            raise ValidationError("candidates must share one dimension")

    def __len__(self) -> int:
        return len(self.candidates)


@dataclass(frozen=True)
class SelectionResult:
    """Tournament outcome: winning index, per-candidate wins, holdout size."""

    index: int
    scheffe_wins: np.ndarray
    n_holdout: int
    strategy: str


def _region_intervals(gi: Gaussian, gj: Gaussian) -> list:
    """Intervals where the 1-D density of ``gi`` strictly exceeds ``gj``'s.

    The log-density difference is a quadratic; its sign pattern is one of
    emptyset, an interval, a half line, its complement, or all of R.
    """
    mi, si2 = float(gi.mean[0]), float(gi.cov[0, 0])
    mj, sj2 = float(gj.mean[0]), float(gj.cov[0, 0])
    inf = math.inf
    a = 0.5 / sj2 - 0.5 / si2
    b = mi / si2 - mj / sj2
    c = mj * mj / (2.0 * sj2) - mi * mi / (2.0 * si2) \
        + 0.5 * math.log(sj2 / si2)
    if a == 0.0:
        if b == 0.0:
            return [(-inf, inf)] if c > 0.0 else []
        root = -c / b
        return [(root, inf)] if b > 0.0 else [(-inf, root)]
    disc = b * b - 4.0 * a * c
    if disc <= 0.0:
        return [(-inf, inf)] if a > 0.0 else []
    sq = math.sqrt(disc)
    r1, r2 = sorted(((-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)))
    if a > 0.0:
        return [(-inf, r1), (r2, inf)]
    return [(r1, r2)]


def _gauss_interval_mass(g: Gaussian, intervals: list) -> float:
    mu = float(g.mean[0])
    sd = math.sqrt(float(g.cov[0, 0]))
    total = 0.0
    for lo, hi in intervals:
        total += float(ndtr((hi - mu) / sd)) - float(ndtr((lo - mu) / sd))
    return min(1.0, max(0.0, total))


def _shared_grid(cands: Sequence[Distribution]) -> np.ndarray:
    lo = math.inf
    hi = -math.inf
    for c in cands:
        comps = c.components if isinstance(c, Mixture) else (c,)
        for g in comps:
            sd = math.sqrt(float(g.cov[0, 0]))
            lo = min(lo, float(g.mean[0]) - SCHEFFE_GRID_SIGMAS * sd)
            hi = max(hi, float(g.mean[0]) + SCHEFFE_GRID_SIGMAS * sd)
    return np.linspace(lo, hi, SCHEFFE_GRID_POINTS)


def _fingerprint(dist: Distribution) -> bytes:
    """Content hash so MC pools are invariant under candidate reordering."""
    h = hashlib.blake2b(digest_size=16)
    if isinstance(dist, Gaussian):
        h.update(b"G")
        h.update(np.int64(dist.dim).tobytes())
        h.update(dist.mean.tobytes())
        h.update(dist.cov.tobytes())
    else:
        h.update(b"M")
        h.update(np.int64(dist.n_components).tobytes())
        h.update(dist.weights.tobytes())
        for comp in dist.components:
            h.update(_fingerprint(comp))
    return h.digest()


def _pool_seed(dist: Distribution, salt: int) -> int:
    h = hashlib.blake2b(digest_size=8)
    h.update(_fingerprint(dist))
    h.update(int(salt).to_bytes(8, "little", signed=False))
    return int.from_bytes(h.digest(), "little")


def select_candidate(cands, holdout: LabeledSample, eps: float, seed=0,
                     n_pool: int = SCHEFFE_MC_POOL) -> SelectionResult:
    """Pick the candidate whose density best matches the holdout sample.

    For every candidate pair (i, j) with i < j the comparison region is
    ``{x : f_i(x) > f_j(x)}``.  The pair's winner is the candidate whose
    own probability of the region is closer to the empirical holdout mass
    (ties go to the lower index), and the result is the candidate with the
    most wins.  Region probabilities are closed-form for 1-D Gaussians,
    shared-grid quadrature when 1-D mixtures are present, and per-candidate
    MC pools of ``n_pool`` draws above one dimension.  ``eps`` is the
    selection accuracy the holdout was sized for (advisory here; see
    :func:`holdout_size`).
    """
    if isinstance(cands, CandidateSet):
        cands = cands.candidates
    cands = list(cands)
    if not cands:
        raise ValidationError("candidate list must be nonempty")
    dims = {c.dim for c in cands}
    if len(dims) != 1:
        raise ValidationError("candidates must share one dimension")
    d = dims.pop()
    if holdout.dim != d:
        raise ValidationError("holdout dimension does not match candidates")
    if holdout.n < 1:
        raise ValidationError("holdout must be nonempty")
    if not (0.0 < eps < 1.0):
        raise ValidationError("eps must lie in (0, 1)")
    m_cands = len(cands)

    ld_hold = np.stack([np.atleast_1d(log_density(c, holdout.points))
                        for c in cands])
    emp = pairwise_greater_fraction(ld_hold)

    all_gauss_1d = d == 1 and all(isinstance(c, Gaussian) for c in cands)
    if all_gauss_1d:
        strategy = "closed_form_1d"
    elif d == 1:
        strategy = "grid_1d"
    else:
        strategy = "mc_pools"

    if strategy == "grid_1d":
        grid = _shared_grid(cands)
        dx = grid[1] - grid[0]
        weights = np.full(grid.shape, dx)
        weights[0] = weights[-1] = 0.5 * dx
        ld_grid = np.stack([np.atleast_1d(log_density(c, grid[:, None]))
                            for c in cands])
        dens_w = np.exp(ld_grid) * weights
    elif strategy == "mc_pools":
        salt = int(as_generator(seed).integers(1 << 62))
        # prob_own[i, j] = mass candidate i assigns to {f_i > f_j},
        # estimated from candidate i's own pool
        prob_own = np.zeros((m_cands, m_cands))
        for i, cand in enumerate(cands):
            pool = sample(cand, n_pool, _pool_seed(cand, salt)).points
            ld = np.stack([np.atleast_1d(log_density(c, pool))
                           for c in cands])
            prob_own[i] = (ld[i][None, :] > ld).mean(axis=1)

    wins = np.zeros(m_cands, dtype=np.int64)
    for i in range(m_cands):
        for j in range(i + 1, m_cands):
            if strategy == "closed_form_1d":
                region = _region_intervals(cands[i], cands[j])
                p_i = _gauss_interval_mass(cands[i], region)
                p_j = _gauss_interval_mass(cands[j], region)
            elif strategy == "grid_1d":
                mask = ld_grid[i] > ld_grid[j]
                p_i = min(1.0, float(dens_w[i][mask].sum()))
                p_j = min(1.0, float(dens_w[j][mask].sum()))
            else:
                p_i = prob_own[i, j]
                # complement of {f_j > f_i} under f_j; ties between distinct
                # densities have measure zero
                p_j = 1.0 - prob_own[j, i]
            p_hat = emp[i, j]
            if abs(p_i - p_hat) <= abs(p_j - p_hat):
                wins[i] += 1
            else:
                wins[j] += 1
    index = int(np.argmax(wins))  # argmax takes the lowest index on ties
    return SelectionResult(index=index, scheffe_wins=wins,
                           n_holdout=holdout.n, strategy=strategy)


@dataclass(frozen=True)
class LearnResult:
    """A learned distribution plus how its candidate set was formed.

    ``candidate_space`` is the exact size of the full message space (a
    Python int; it can be astronomically large), ``candidate_count`` the
    number of decoded candidates that entered the tournament, and
    ``budget_capped`` records that uniform message sampling replaced
    exhaustive enumeration, which voids the 3*opt + eps guarantee.
    """

    estimate: Distribution
    selection: SelectionResult
    candidate_count: int
    candidate_space: int
    budget_capped: bool
    enumeration: str


def _boost_rounds(delta: float, arms: int = 2) -> int:
    # disjoint-batch retries drive failure below delta/arms
    return math.ceil(math.log(arms / delta) / math.log(3.0))


def compression_sample_size(codec: Codec, eps: float, delta: float,
                            budget: int) -> int:
    """Upper bound on the points :func:`learn_from_compression` consumes."""
    n_enc = codec.spec.m_samples(eps / ENUM_ACCURACY_DIV) * _boost_rounds(delta)
    return n_enc + holdout_size(budget, eps / SELECT_ACCURACY_DIV, delta / 2.0)


def learn_from_compression(codec: Codec, samp: LabeledSample, eps: float,
                           delta: float, budget: int, seed,
                           extra_messages: Sequence[CompressionMessage] = ()
                           ) -> LearnResult:
    """Learn a distribution by decoding candidate messages and selecting.

    Candidate messages are all reference tuples into the first
    ``m(eps/6) * ceil(log3(2/delta))`` sample points crossed with all
    payloads.  When that space exceeds ``budget`` (minus any planted
    ``extra_messages``, which are decoded first), a uniform random subset
    of messages is drawn instead and the result is flagged
    ``budget_capped``.  Selection runs on a fresh holdout slice at
    accuracy ``eps/16``.  Messages that fail to decode are dropped.
    """
    if not (0.0 < eps <= 1.0) or not (0.0 < delta < 1.0):
        raise ValidationError("eps must be in (0, 1] and delta in (0, 1)")
    if budget < 1:
        raise ValidationError("budget must be at least 1")
    extras = list(extra_messages)
    if len(extras) > budget:
        raise ValidationError("extra messages exceed the budget")
    e_enum = eps / ENUM_ACCURACY_DIV
    e_sel = eps / SELECT_ACCURACY_DIV
    rng = as_generator(seed)
    n_enc = codec.spec.m_samples(e_enum) * _boost_rounds(delta)
    tau = codec.spec.tau(e_enum)
    space = n_enc ** tau * codec.payload_count(e_enum)
    n_fill = budget - len(extras)
    capped = space > n_fill

    messages = extras.copy()
    provenance = ["extra"] * len(extras)
    if capped:
        for _ in range(n_fill):
            refs = rng.integers(n_enc, size=tau)
            messages.append(CompressionMessage(
                codec.scheme_id, refs, codec.random_payload(e_enum, rng)))
            provenance.append("sampled")
    else:
        payloads = [codec.payload_by_index(e_enum, p)
                    for p in range(codec.payload_count(e_enum))]
        for refs in itertools.product(range(n_enc), repeat=tau):
            refs = np.asarray(refs, dtype=np.int64)
            for payload in payloads:
                messages.append(CompressionMessage(codec.scheme_id, refs,
                                                   payload))
                provenance.append("enumerated")

    enc_points = samp.points[:n_enc]
    if samp.n < n_enc:
        raise ValidationError(f"need at least {n_enc} encoding points")
    decoded = []
    tags = []
    for msg, tag in zip(messages, provenance):
        try:
            decoded.append(codec.decode(msg, enc_points, e_enum))
        except DecodingError:
            continue
        tags.append(tag)
    if not decoded:
        raise ValidationError("no candidate message decoded to a distribution")
    cand_set = CandidateSet(tuple(decoded), tuple(tags))

    n_hold = holdout_size(len(decoded), e_sel, delta / 2.0)
    if samp.n < n_enc + n_hold:
        raise ValidationError(
            f"need at least {n_enc + n_hold} points for this budget")
    holdout = LabeledSample(samp.points[n_enc:n_enc + n_hold])
    sel = select_candidate(cand_set, holdout, e_sel, rng)
    return LearnResult(
        estimate=decoded[sel.index], selection=sel,
        candidate_count=len(decoded), candidate_space=space,
        budget_capped=capped,
        enumeration="sampled" if capped else "exhaustive")


def efficient_sample_size(d: int, eps: float, delta: float,
                          c: float = EFFICIENT_SAMPLE_CONST) -> int:
    """Even sample size ``2m`` for :func:`learn_gaussian_efficient`."""
    if d < 1:
        raise ValidationError("d must be >= 1")
    if not (0.0 < eps < 1.0) or not (0.0 < delta < 1.0):
        raise ValidationError("eps and delta must lie in (0, 1)")
    return 2 * math.ceil(c * (d * d + d * math.log(1.0 / delta)) / eps ** 2)


def learn_gaussian_efficient(samp: LabeledSample,
                             d: Optional[int] = None) -> Gaussian:
    """Moment estimator: sample mean plus difference-pair covariance.

    With ``2m`` points, the mean is averaged over the first ``m`` and the
    covariance is ``(1/2m) * sum of (v_{2i} - v_{2i-1}) outer products``
    over all ``m`` consecutive pairs; pairing cancels the unknown mean.
    Raises when the pair count cannot produce a full-rank covariance or the
    draw happens to be degenerate.
    """
    if d is None:
        d = samp.dim
    elif d != samp.dim:
        raise ValidationError("d does not match the sample dimension")
    if samp.n % 2 != 0 or samp.n < 2 * (d + 1):
        raise ValidationError(
            f"need an even sample of at least {2 * (d + 1)} points")
    m = samp.n // 2
    mean = samp.points[:m].mean(axis=0)
    diffs = samp.points[1::2] - samp.points[0::2]
    cov = diffs.T @ diffs / (2.0 * m)
    return Gaussian(mean, cov)


def agnostic_component_codec(d: int) -> Codec:
    """The contamination-robust base codec the mixture learner composes."""
    return gd_codec(d)


def agnostic_main_size(k: int, d: int, eps: float, delta: float) -> int:
    """Main-phase sample count for :func:`learn_mixture_agnostic`.

    Sized so every component of weight at least ``eps/(10k)`` receives
    several disjoint encoding batches with high probability.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    m_base = agnostic_component_codec(d).spec.m_samples(
        eps / AGNOSTIC_COMPONENT_DIV)
    mult = math.ceil(160.0 * k * math.log(3.0 * k / delta) / eps)
    return mult * m_base


def agnostic_sample_size(k: int, d: int, eps: float, delta: float,
                         budget: int) -> int:
    """Upper bound on the points :func:`learn_mixture_agnostic` consumes."""
    return agnostic_main_size(k, d, eps, delta) + holdout_size(
        budget, eps / AGNOSTIC_SELECT_DIV, delta / 2.0)


def _nearest_net_weights(net: Net, weights: np.ndarray) -> np.ndarray:
    gaps = np.abs(net.points - weights[None, :]).max(axis=1)
    return net.points[int(np.argmin(gaps))]


def _oracle_candidate(base: Codec, oracle: Mixture, pts: np.ndarray,
                      labels: np.ndarray, k: int, e_comp: float,
                      net: Net, d: int) -> Mixture:
    """Assemble the candidate an exhaustive enumeration would contain.

    Encodes each non-negligible component of the known target from its own
    labeled points (retrying over disjoint batches) and snaps the true
    weights to the weight net.  Components that stay unencoded get the
    standard-Gaussian placeholder, mirroring the decoder's convention.
    """
    m_base = base.spec.m_samples(e_comp)
    comps = []
    for i in range(k):
        decoded = None
        weight = oracle.weights[i] if i < oracle.n_components else 0.0
        if weight > net.radius:
            rows = np.nonzero(labels == i)[0]
            for b in range(len(rows) // m_base):
                chunk = rows[b * m_base:(b + 1) * m_base]
                outcome = base.encode(oracle.components[i],
                                      LabeledSample(pts[chunk]), e_comp)
                if outcome.ok:
                    msg = CompressionMessage(
                        base.scheme_id,
                        chunk[outcome.message.sample_refs],
                        outcome.message.bits)
                    decoded = base.decode(msg, pts, e_comp)
                    break
        comps.append(decoded if decoded is not None
                     else Gaussian(np.zeros(d), np.eye(d)))
    padded = np.zeros(k)
    padded[:oracle.n_components] = oracle.weights
    return Mixture(_nearest_net_weights(net, padded), comps)


def learn_mixture_agnostic(samp: LabeledSample, k: int, eps: float,
                           delta: float, budget: int, seed,
                           oracle_target: Optional[Mixture] = None
                           ) -> LearnResult:
    """Learn a k-component mixture from labeled samples, tolerating junk.

    Candidates are mixtures assembled from a weight-net point plus one
    message of the robust per-component codec per slot, drawn uniformly at
    random (the full space always dwarfs any practical budget, so this
    learner is budget-capped by construction).  ``oracle_target`` is a test
    hook standing in for exhaustiveness: when set, the candidate an actual
    encoder run would produce is planted at index 0 and counts against the
    budget.  Against a target within L1 distance rho of some k-component
    mixture, the aimed-for selection error is ``6 rho / r + eps`` with the
    base codec's contamination radius ``r``.
    """
    if k < 1:
        raise ValidationError("k must be >= 1")
    if not (0.0 < eps <= 1.0) or not (0.0 < delta < 1.0):
        raise ValidationError("eps must be in (0, 1] and delta in (0, 1)")
    if budget < 1:
        raise ValidationError("budget must be at least 1")
    if samp.labels is None:
        raise ValidationError("agnostic mixture learning needs labels")
    d = samp.dim
    base = agnostic_component_codec(d)
    e_comp = eps / AGNOSTIC_COMPONENT_DIV
    e_sel = eps / AGNOSTIC_SELECT_DIV
    rng = as_generator(seed)
    n_main = agnostic_main_size(k, d, eps, delta)
    if samp.n < n_main:
        raise ValidationError(f"need at least {n_main} main-phase points")
    pts = samp.points[:n_main]
    labels = samp.labels[:n_main]
    net = net_simplex(k, eps / (AGNOSTIC_COMPONENT_DIV * k))
    tau_b = base.spec.tau(e_comp)

    decoded = []
    tags = []
    if oracle_target is not None:
        if not isinstance(oracle_target, Mixture) \
                or oracle_target.n_components > k or oracle_target.dim != d:
            raise ValidationError(
                "oracle target must be a mixture of at most k components")
        decoded.append(_oracle_candidate(base, oracle_target, pts, labels,
                                         k, e_comp, net, d))
        tags.append("oracle")
    n_fill = budget - len(decoded)
    for _ in range(n_fill):
        weights = net.points[int(rng.integers(net.size))]
        comps = []
        for _slot in range(k):
            msg = CompressionMessage(base.scheme_id,
                                     rng.integers(n_main, size=tau_b),
                                     base.random_payload(e_comp, rng))
            try:
                comps.append(base.decode(msg, pts, e_comp))
            except DecodingError:
                comps.append(Gaussian(np.zeros(d), np.eye(d)))
        decoded.append(Mixture(weights, comps))
        tags.append("random")
    cand_set = CandidateSet(tuple(decoded), tuple(tags))

    n_hold = holdout_size(len(decoded), e_sel, delta / 2.0)
    if samp.n < n_main + n_hold:
        raise ValidationError(
            f"need at least {n_main + n_hold} points for this budget")
    holdout = LabeledSample(samp.points[n_main:n_main + n_hold])
    sel = select_candidate(cand_set, holdout, e_sel, rng)
    space = net.size * (n_main ** tau_b * base.payload_count(e_comp)) ** k
    return LearnResult(
        estimate=decoded[sel.index], selection=sel,
        candidate_count=len(decoded), candidate_space=space,
        budget_capped=True, enumeration="sampled")
