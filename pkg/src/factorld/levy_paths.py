"""Compound Poisson factor processes on the unit interval.

The process is

    S_n(t) = sum_j n EL_j F_j(t) + sum_i eps_i(t),

where ``F(t)`` is a d-dimensional compound Poisson process of rate
``lambda_F`` whose jump vectors have i.i.d. coordinates, and the ``eps_i``
are i.i.d. compound Poisson processes of rate ``lambda_eps``. The ``n``
idiosyncratic streams are simulated as one merged stream of rate
``n * lambda_eps`` with uniformly assigned origin tags. Paths are kept as
time-ordered event lists, so the terminal value, the supremum and the
largest jump are all exact.

At the critical scaling ``lambda_n = n**theta_F`` the normalized marginal
``gamma_n P(S_n(t) > lambda_n x)`` converges to ``m_t(x, inf)``, with
``1/gamma_n = d lambda_F P(|Z| > lambda_n / n)``.
"""

from dataclasses import dataclass
import math

import numpy as np

from . import _rng, kernels
from .cond_mc import (
    CHUNK_WORDS,
    TailEstimate,
    _Draws,
    conditional_terms,
    map_blocks,
    segment_draw_stats,
)
from .errors import RegimeError, ValidationError
from .ld_approx import AxisIID, critical_exponents, mu_value
from .rv_dist import RegVarDist, sv_ratio_limit

__all__ = [
    "LevyFactorSpec",
    "Factor",
    "Idio",
    "Event",
    "PathSample",
    "MarginalTailEstimate",
    "OneJumpSummary",
    "critical_lambda",
    "gamma_n",
    "sample_path",
    "sample_paths",
    "sample_marginal",
    "sample_factor_level",
    "limit_measure_terms",
    "limit_measure_mt",
    "estimate_marginal_tail",
    "estimate_marginal_tail_many",
    "one_jump_diagnostic",
]

FACTOR = 0
IDIO = 1

# stratum keys for the one-jump sampler
_BIG, _SMALL = 1, 2


@dataclass(frozen=True)
class LevyFactorSpec:
    d: int
    lambda_F: float
    lambda_eps: float
    jump_F: RegVarDist
    jump_eps: RegVarDist
    loading_mean: tuple

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValidationError(f"number of factors must be a positive integer, got {self.d}", "d")
        for name in ("lambda_F", "lambda_eps"):
            v = getattr(self, name)
            if not (v > 0 and math.isfinite(v)):
                raise ValidationError(f"jump intensity must be positive and finite, got {v}", name)
        el = tuple(float(v) for v in self.loading_mean)
        if len(el) != self.d:
            raise ValidationError(f"loading mean has length {len(el)}, expected d={self.d}", "loading_mean")
        if not any(v != 0 for v in el):
            raise ValidationError("mean loading vector must be nonzero", "loading_mean")
        object.__setattr__(self, "loading_mean", el)
        aF, aE = self.jump_F.alpha, self.jump_eps.alpha
        if not aE > 2:
            raise ValidationError(f"idiosyncratic tail index must exceed 2, got {aE}", "jump_eps.alpha")
        if not aF > aE:
            raise ValidationError(
                f"factor tail index must exceed the idiosyncratic one (alpha_F > alpha_eps > 2), got {aF} <= {aE}",
                "jump_F.alpha",
            )

    @property
    def theta_F(self):
        return critical_exponents(self.jump_F.alpha, self.jump_eps.alpha).theta_F


@dataclass(frozen=True)
class Factor:
    j: int


@dataclass(frozen=True)
class Idio:
    i: int


@dataclass(frozen=True)
class Event:
    time: float
    size: float
    origin: object


@dataclass(frozen=True)
class PathSample:
    events: list
    terminal: float
    supremum: float


def critical_lambda(spec, n):
    return float(n) ** spec.theta_F


def gamma_n(spec, n, lambda_n=None):
    """``1 / (d lambda_F P(|Z| > lambda_n / n))``."""
    lam = critical_lambda(spec, n) if lambda_n is None else float(lambda_n)
    return 1.0 / (spec.d * spec.lambda_F * float(spec.jump_F.abs_tail(lam / n)))


# ---------------------------------------------------------------- sampling


def _check_n(n):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    return int(n)


def _check_t(t):
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError(f"t must lie in [0, 1], got {t}")
    return t


def _offsets(counts):
    return np.concatenate(([0], np.cumsum(counts))).astype(np.int64)


def _factor_jumps(spec, gf, total):
    """``total`` jump vectors, shape (total, d), row-major from one stream."""
    u = _rng.open_uniform(gf, total * spec.d).reshape(total, spec.d)
    return spec.jump_F.quantile(u)


def _draws_block(spec, n, t, seed, block, count):
    """Per-iteration reductions of the time-t marginal as a random-sum model."""
    gc = _rng.stream(seed, block, _rng.COUNTS)
    gf = _rng.stream(seed, block, _rng.FACTORS)
    ge = _rng.stream(seed, block, _rng.IDIO)
    n_fac = gc.poisson(spec.lambda_F * t, count)
    n_idio = gc.poisson(n * spec.lambda_eps * t, count)
    d = spec.d
    scale = n * np.asarray(spec.loading_mean)

    z = _factor_jumps(spec, gf, int(n_fac.sum()))
    off_f = _offsets(n_fac)
    fac = [np.empty((count, d)) for _ in range(3)]
    for j in range(d):
        hs, hm, last = kernels.segment_stats(scale[j] * z[:, j], off_f)
        fac[0][:, j], fac[1][:, j], fac[2][:, j] = hs, hm, last

    # idiosyncratic words are read in iteration order, chunked to bound memory
    ends = np.cumsum(n_idio)
    parts = [[], [], []]
    start = 0
    while start < count:
        base = ends[start - 1] if start else 0
        stop = max(start + 1, int(np.searchsorted(ends, base + CHUNK_WORDS, side="right")))
        stop = min(stop, count)
        off = _offsets(n_idio[start:stop])
        bits = _rng.raw_bits(ge, int(off[-1]))
        for acc, arr in zip(parts, segment_draw_stats(spec.jump_eps, bits, off)):
            acc.append(arr)
        start = stop
    idio = [np.concatenate(p) for p in parts]
    return _Draws(
        idio_head_sum=idio[0],
        idio_head_max=idio[1],
        idio_last=idio[2],
        n_idio=n_idio,
        fac_head_sum=fac[0],
        fac_head_max=fac[1],
        fac_last=fac[2],
        fac_scale=np.tile(scale, (count, 1)),
        fac_count=n_fac,
    )


def sample_marginal(spec, n, t=1.0, size=10_000, seed=0, workers=1):
    """Direct draws of ``S_n(t)`` as a compound sum, without event times."""
    n, t = _check_n(n), _check_t(t)

    def run(block, count):
        idio_total, _, cls_total, _, _ = _draws_block(spec, n, t, seed, block, count).totals()
        return idio_total + cls_total.sum(axis=1)

    return np.concatenate(map_blocks(run, int(size), workers))


def sample_factor_level(spec, size, seed=0, t=1.0):
    """Draws of the factor vector ``F(t)``, shape (size, d)."""
    t = _check_t(t)
    out = []
    for block, count in _rng.blocks(int(size)):
        gc = _rng.stream(seed, block, _rng.COUNTS)
        gf = _rng.stream(seed, block, _rng.FACTORS)
        n_fac = gc.poisson(spec.lambda_F * t, count)
        z = _factor_jumps(spec, gf, int(n_fac.sum()))
        sums = np.zeros((count, spec.d))
        owner = np.repeat(np.arange(count), n_fac)
        np.add.at(sums, owner, z)
        out.append(sums)
    return np.concatenate(out)


@dataclass
class _PathBatch:
    """Time-ordered events of ``count`` paths, concatenated."""

    offsets: np.ndarray
    times: np.ndarray
    sizes: np.ndarray
    kind: np.ndarray
    tag: np.ndarray
    terminal: np.ndarray
    supremum: np.ndarray
    argmax: np.ndarray


def _assemble(count, fac_owner, fac_sizes, fac_tag, idio_owner, idio_sizes, idio_tag, gt):
    owner = np.concatenate((fac_owner, idio_owner))
    times = _rng.open_uniform(gt, owner.size)
    sizes = np.concatenate((fac_sizes, idio_sizes))
    kind = np.concatenate((np.full(fac_owner.size, FACTOR, dtype=np.int8), np.full(idio_owner.size, IDIO, dtype=np.int8)))
    tag = np.concatenate((fac_tag, idio_tag)).astype(np.int64)
    order = np.lexsort((times, owner))
    offsets = _offsets(np.bincount(owner, minlength=count))
    sizes = sizes[order]
    terminal, sup, argmax = kernels.path_stats(sizes, offsets)
    return _PathBatch(offsets, times[order], sizes, kind[order], tag[order], terminal, sup, argmax)


def _factor_events(spec, n, z):
    contrib = n * np.asarray(spec.loading_mean) * z
    return contrib.sum(axis=1), np.argmax(np.abs(contrib), axis=1)


def _plain_batch(spec, n, seed, block, count):
    # counts and jump values match _draws_block at t = 1 for the same seed
    gc = _rng.stream(seed, block, _rng.COUNTS)
    gf = _rng.stream(seed, block, _rng.FACTORS)
    ge = _rng.stream(seed, block, _rng.IDIO)
    n_fac = gc.poisson(spec.lambda_F, count)
    n_idio = gc.poisson(n * spec.lambda_eps, count)
    fac_sizes, fac_tag = _factor_events(spec, n, _factor_jumps(spec, gf, int(n_fac.sum())))
    idio_sizes = spec.jump_eps.quantile(_rng.open_uniform(ge, int(n_idio.sum())))
    idio_tag = _rng.stream(seed, block, _rng.TAGS).integers(0, n, idio_sizes.size)
    return _assemble(
        count,
        np.repeat(np.arange(count), n_fac), fac_sizes, fac_tag,
        np.repeat(np.arange(count), n_idio), idio_sizes, idio_tag,
        _rng.stream(seed, block, _rng.TIMES),
    )


def sample_paths(spec, n, paths, seed=0, workers=1):
    """Event lists of ``paths`` independent paths on [0, 1], batched per block."""
    n = _check_n(n)
    return map_blocks(lambda b, c: _plain_batch(spec, n, seed, b, c), int(paths), workers)


def sample_path(spec, n, seed=0):
    """One exact path; it equals ``sample_paths(spec, n, 1, seed)``."""
    batch = _plain_batch(spec, _check_n(n), seed, 0, 1)
    events = [
        Event(float(tm), float(sz), Factor(int(tg)) if k == FACTOR else Idio(int(tg)))
        for tm, sz, k, tg in zip(batch.times, batch.sizes, batch.kind, batch.tag)
    ]
    return PathSample(events=events, terminal=float(batch.terminal[0]), supremum=float(batch.supremum[0]))


# ---------------------------------------------------------------- limits


def limit_measure_terms(spec, t, x):
    """Factor and idiosyncratic parts of ``m_t(x, inf)``; both are linear in ``t``."""
    t = _check_t(t)
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    fd, ed = spec.jump_F, spec.jump_eps
    th = critical_exponents(fd.alpha, ed.alpha)
    C = sv_ratio_limit(ed.sv, fd.sv, th.theta_F, th.theta_eps)
    if math.isinf(C):
        raise RegimeError("idiosyncratic slowly varying factor outgrows the factor one; no finite limit")
    # tail constants are normalized away by gamma_n
    mu = mu_value(AxisIID(spec.loading_mean, fd.alpha, fd.p))
    a_F = mu / spec.d * x ** -fd.alpha
    a_eps = ed.p * spec.lambda_eps / (spec.d * spec.lambda_F) * C * x ** -ed.alpha
    return t * a_F, t * a_eps


def limit_measure_mt(spec, t, x):
    """``m_t(x, inf) = t * m_1(x, inf)``."""
    a_F, a_eps = limit_measure_terms(spec, 1.0, x)
    return _check_t(t) * (a_F + a_eps)


@dataclass(frozen=True)
class MarginalTailEstimate:
    """``gamma_n P(S_n(t) > lambda_n x)`` with the raw tail estimate behind it."""

    value: float
    std_error: float
    raw: TailEstimate
    gamma_n: float
    lambda_n: float
    t: float
    x: float


def estimate_marginal_tail_many(spec, n, t, xs, iters=10_000, seed=0, workers=1, lambda_n=None):
    """Conditional Monte Carlo estimates of the normalized marginal tail at several ``x``.

    ``lambda_n`` defaults to the critical scaling ``n**theta_F``. Given the
    event counts the marginal is a factor model with a random number of
    summands, so conditioning on the largest one stays exact. All ``x``
    share one set of draws.
    """
    n, t = _check_n(n), _check_t(t)
    xs = [float(x) for x in xs]
    if not xs or any(not x > 0 for x in xs):
        raise ValueError("need at least one x, all positive")
    lam = critical_lambda(spec, n) if lambda_n is None else float(lambda_n)

    def run(block, count):
        draws = _draws_block(spec, n, t, seed, block, count)
        return [sum(conditional_terms(draws, lam * x, spec.jump_eps, spec.jump_F)) for x in xs]

    results = map_blocks(run, int(iters), workers)
    g = gamma_n(spec, n, lam)
    out = []
    for i, x in enumerate(xs):
        raw = TailEstimate.from_samples(np.concatenate([r[i] for r in results]), seed)
        out.append(MarginalTailEstimate(g * raw.value, g * raw.std_error, raw, g, lam, t, x))
    return out


def estimate_marginal_tail(spec, n, t, x, iters=10_000, seed=0, workers=1, lambda_n=None):
    """Estimate of ``gamma_n P(S_n(t) > lambda_n x)``; see :func:`estimate_marginal_tail_many`."""
    return estimate_marginal_tail_many(spec, n, t, [x], iters, seed, workers, lambda_n)[0]


# ---------------------------------------------------------------- one jump


def _ztp(gen, mu, size):
    """Poisson(mu) conditioned to be at least one."""
    from scipy import stats

    v = _rng.open_uniform(gen, size) * -math.expm1(-mu)
    return stats.poisson.isf(v, mu).astype(np.int64)


def _conditional_abs(dist, q, u, big):
    """Modulus draws conditioned on exceeding (``big``) or not the level of tail ``q``."""
    v = np.where(big, q * u, q + (1.0 - q) * u)
    return dist.abs_quantile(v)


@dataclass(frozen=True)
class _Strata:
    a: float
    z_a: float
    q_F: float  # per coordinate
    q_eps: float
    big_F: float  # per factor event
    rate_big_F: float
    rate_big_eps: float
    rate_small_F: float
    rate_small_eps: float

    @property
    def rate_big(self):
        return self.rate_big_F + self.rate_big_eps


def _strata(spec, n, a):
    z_a = a / (n * sum(abs(v) for v in spec.loading_mean))
    q_F = float(spec.jump_F.abs_tail(z_a))
    q_eps = float(spec.jump_eps.abs_tail(a))
    big_F = -math.expm1(spec.d * math.log1p(-q_F)) if q_F < 1 else 1.0
    return _Strata(
        a=a, z_a=z_a, q_F=q_F, q_eps=q_eps, big_F=big_F,
        rate_big_F=spec.lambda_F * big_F,
        rate_big_eps=n * spec.lambda_eps * q_eps,
        rate_small_F=spec.lambda_F * (1.0 - big_F),
        rate_small_eps=n * spec.lambda_eps * (1.0 - q_eps),
    )


def _strat_factor_jumps(spec, st, gen, big_count, small_count):
    """Jump vectors for big events (some coordinate beyond z_a) then small ones."""
    d = spec.d
    dist = spec.jump_F
    u = _rng.open_uniform(gen, (big_count + small_count, 2 * d + 1))
    big_mask = np.zeros((big_count + small_count, d), dtype=bool)
    small_mask = np.ones_like(big_mask)
    if big_count:
        # the first coordinate beyond z_a is k with P(k) proportional to (1-q)**k q
        k_probs = (1.0 - st.q_F) ** np.arange(d) * st.q_F / st.big_F
        k = np.minimum(np.searchsorted(np.cumsum(k_probs), u[:big_count, -1] * k_probs.sum(), side="right"), d - 1)
        cols = np.arange(d)
        big_mask[:big_count] = cols == k[:, None]
        small_mask[:big_count] = cols < k[:, None]
    free = ~(big_mask | small_mask)
    r = np.where(
        free,
        dist.abs_quantile(u[:, :d]),
        _conditional_abs(dist, st.q_F, u[:, :d], big_mask),
    )
    return np.where(u[:, d: 2 * d] < dist.p, r, -r)


def _strat_batch(spec, n, st, seed, block, count, stratum):
    gc = _rng.stream(seed, block, _rng.COUNTS, stratum)
    gf = _rng.stream(seed, block, _rng.FACTORS, stratum)
    ge = _rng.stream(seed, block, _rng.IDIO, stratum)
    gtag = _rng.stream(seed, block, _rng.TAGS, stratum)
    if stratum == _BIG:
        k = _ztp(gc, st.rate_big, count)
        big_f = gc.binomial(k, st.rate_big_F / st.rate_big)
        big_e = k - big_f
    else:
        big_f = big_e = np.zeros(count, dtype=np.int64)
    small_f = gc.poisson(st.rate_small_F, count)
    small_e = gc.poisson(st.rate_small_eps, count)

    nb, ns = int(big_f.sum()), int(small_f.sum())
    fac_sizes, fac_tag = _factor_events(spec, n, _strat_factor_jumps(spec, st, gf, nb, ns))
    fac_owner = np.concatenate((np.repeat(np.arange(count), big_f), np.repeat(np.arange(count), small_f)))

    mb, ms = int(big_e.sum()), int(small_e.sum())
    ue = _rng.open_uniform(ge, (mb + ms, 2))
    is_big = np.arange(mb + ms) < mb
    r = _conditional_abs(spec.jump_eps, st.q_eps, ue[:, 0], is_big)
    idio_sizes = np.where(ue[:, 1] < spec.jump_eps.p, r, -r)
    idio_owner = np.concatenate((np.repeat(np.arange(count), big_e), np.repeat(np.arange(count), small_e)))
    idio_tag = gtag.integers(0, n, mb + ms)
    return _assemble(
        count, fac_owner, fac_sizes, fac_tag, idio_owner, idio_sizes, idio_tag,
        _rng.stream(seed, block, _rng.TIMES, stratum),
    )


@dataclass(frozen=True)
class OneJumpSummary:
    """Exceedance-conditional statistics of the largest jump.

    ``ratios`` holds (largest jump)/(supremum) for every exceeding path and
    ``weights`` the probability weight each one carries; with plain sampling
    all weights are equal. ``factor_share`` is the weighted fraction of
    exceedances whose largest jump came from a factor event.
    """

    threshold: float
    paths: int
    exceedances: int
    exceedance_probability: float
    ratios: np.ndarray
    weights: np.ndarray
    factor_origin: np.ndarray
    stratified: bool

    @property
    def factor_share(self):
        if self.exceedances == 0:
            return math.nan
        return float(np.sum(self.weights * self.factor_origin) / np.sum(self.weights))

    @property
    def idio_share(self):
        return 1.0 - self.factor_share if self.exceedances else math.nan

    def concentration(self, level=0.9):
        """Weighted fraction of exceedances with ratio at least ``level``."""
        if self.exceedances == 0:
            return math.nan
        return float(np.sum(self.weights * (self.ratios >= level)) / np.sum(self.weights))

    def quantiles(self, qs):
        """Weighted quantiles of the ratio distribution (lower inverse CDF)."""
        qs = np.atleast_1d(np.asarray(qs, dtype=float))
        if self.exceedances == 0:
            return np.full(qs.shape, math.nan)
        order = np.argsort(self.ratios, kind="stable")
        cdf = np.cumsum(self.weights[order])
        cdf /= cdf[-1]
        idx = np.minimum(np.searchsorted(cdf, qs, side="left"), cdf.size - 1)
        return self.ratios[order][idx]

    @property
    def median(self):
        return float(self.quantiles(0.5)[0])


def _exceedances(batches, threshold):
    ratios, origin = [], []
    for bt in batches:
        hit = (bt.supremum > threshold) & (bt.argmax >= 0)
        idx = bt.argmax[hit]
        ratios.append(bt.sizes[idx] / bt.supremum[hit])
        origin.append(bt.kind[idx] == FACTOR)
    return np.concatenate(ratios), np.concatenate(origin)


def one_jump_diagnostic(spec, n, threshold, paths=100_000, seed=0, workers=1, small_share=0.1):
    """Largest-jump statistics over paths whose supremum exceeds ``threshold``.

    For a positive threshold the paths are stratified on whether any single
    event is larger than ``a = threshold / 2``: the stratum with such an event
    is sampled exactly by conditioning, and ``small_share`` of the paths go
    to the complementary stratum. Weights make every reported statistic an
    estimate under the original path law. A non-positive threshold uses plain
    sampling. Paths with no events never count as exceedances.
    """
    n = _check_n(n)
    paths = int(paths)
    if paths < 1:
        raise ValueError("paths must be a positive integer")
    threshold = float(threshold)
    if threshold <= 0:
        batches = map_blocks(lambda b, c: _plain_batch(spec, n, seed, b, c), paths, workers)
        ratios, origin = _exceedances(batches, threshold)
        weights = np.full(ratios.size, 1.0 / paths)
        return OneJumpSummary(threshold, paths, ratios.size, ratios.size / paths, ratios, weights, origin, False)

    if not 0 < small_share < 1:
        raise ValueError("small_share must lie in (0, 1)")
    st = _strata(spec, n, threshold / 2.0)
    p_big = -math.expm1(-st.rate_big)
    n_small = max(1, int(round(paths * small_share)))
    n_big = paths - n_small
    if n_big < 1:
        raise ValueError("need at least two paths for the stratified sampler")
    parts = []
    for stratum, count, mass in ((_BIG, n_big, p_big), (_SMALL, n_small, 1.0 - p_big)):
        batches = map_blocks(lambda b, c, s=stratum: _strat_batch(spec, n, st, seed, b, c, s), count, workers)
        r, o = _exceedances(batches, threshold)
        parts.append((r, o, np.full(r.size, mass / count)))
    ratios = np.concatenate([p[0] for p in parts])
    origin = np.concatenate([p[1] for p in parts])
    weights = np.concatenate([p[2] for p in parts])
    return OneJumpSummary(threshold, paths, ratios.size, float(weights.sum()), ratios, weights, origin, True)
