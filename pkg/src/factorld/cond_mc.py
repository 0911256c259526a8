"""Rare-event estimation of ``P(S_n > x)`` by conditioning on the largest term.

With ``M`` the largest of the ``n + d`` summands, continuity gives

    P(S_n > x) = sum over summands k of P(S_n > x, M = X_k).

For the exchangeable idiosyncratic terms all ``n`` probabilities are equal,
and each is the expectation of ``F_eps(max(x - rest, max of rest))`` with
``rest`` the other summands. Each factor term ``S^L_{n,j} F_j`` is handled
the same way given the loadings, using the factor's exact tail. Every
iteration reuses a single joint draw for all of these conditional terms.

Iterations are grouped into fixed blocks with their own random streams.
Blocks can run on any number of threads; per-iteration values are merged in
block order and summed exactly, so results never depend on the worker count.
"""

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
import math

import numpy as np

from . import _rng, kernels
from .errors import RegimeError
from .factor_model import CHUNK_WORDS, Deterministic, _column_sums_from
from .ld_approx import ld_tail_approx

__all__ = [
    "TailEstimate",
    "RatioEstimate",
    "CompareRow",
    "estimate_tail_cmc",
    "estimate_tail_cmc_many",
    "estimate_tail_naive",
    "estimate_tail_naive_many",
    "cmc_samples",
    "cmc_term_estimates",
    "naive_attribution",
    "compare_table",
    "light_tail_ratio",
    "light_tail_check",
]

DEFAULT_ITERS = 10_000


@dataclass(frozen=True)
class TailEstimate:
    value: float
    std_error: float
    iters: int
    seed: int
    ci95: tuple

    @classmethod
    def from_samples(cls, z, seed):
        mean, se = _mean_se(z)
        return cls._build(mean, se, z.size, seed)

    @classmethod
    def from_indicators(cls, hits, iters, seed):
        mean = hits / iters
        se = math.sqrt(mean * (1.0 - mean) / iters)
        return cls._build(mean, se, iters, seed)

    @classmethod
    def _build(cls, mean, se, iters, seed):
        mean = min(max(mean, 0.0), 1.0)
        lo = max(mean - 1.96 * se, 0.0)
        hi = min(mean + 1.96 * se, 1.0)
        return cls(value=mean, std_error=se, iters=int(iters), seed=int(seed), ci95=(lo, hi))

    @property
    def relative_error(self):
        return self.std_error / self.value if self.value > 0 else math.inf


@dataclass(frozen=True)
class RatioEstimate:
    value: float
    std_error: float
    iters: int
    seed: int


@dataclass(frozen=True)
class CompareRow:
    n: int
    x: float
    lambda_n: float
    ld_value: float
    cmc: TailEstimate

    @property
    def ratio(self):
        return self.cmc.value / self.ld_value if self.ld_value > 0 else math.nan


def _mean_se(z):
    iters = z.size
    mean = math.fsum(z) / iters
    if iters < 2:
        return mean, 0.0
    var = math.fsum((z - mean) ** 2) / (iters - 1)
    return mean, math.sqrt(var / iters)


def map_blocks(fn, iters, workers=1):
    """Run ``fn(block, count)`` over the fixed block partition, in block order."""
    jobs = list(_rng.blocks(iters))
    if workers is None or workers <= 1 or len(jobs) == 1:
        return [fn(b, c) for b, c in jobs]
    with ThreadPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(lambda job: fn(*job), jobs))


def segment_draw_stats(dist, bits, offsets):
    """Draw ``dist`` from raw words and reduce per segment (sum/max w/o last, last)."""
    scale = dist.pareto_scale
    if scale is not None:
        return kernels.pareto_segment_stats(bits, offsets, dist.alpha, scale, dist.p)
    values = dist.quantile(_rng.bits_to_uniform(bits))
    return kernels.segment_stats(values, offsets)


def prob_scaled_exceeds(dist, scale, v):
    """``P(scale * X > v)`` elementwise; entries with ``scale == 0`` are meaningless."""
    with np.errstate(divide="ignore", invalid="ignore"):
        r = v / np.where(scale == 0, 1.0, scale)
    return np.where(scale > 0, dist.tail(r), dist.cdf(r))


@dataclass
class _Draws:
    """Per-iteration reductions of one block of joint draws.

    Idiosyncratic part: ``n_idio`` terms summarized by the sum and max of all
    but the last, plus the last. Factor part: one class per coordinate ``j``,
    each with ``count`` exchangeable terms ``scale * F`` summarized the same
    way.
    """

    idio_head_sum: np.ndarray
    idio_head_max: np.ndarray
    idio_last: np.ndarray
    n_idio: np.ndarray
    fac_head_sum: np.ndarray  # (m, d)
    fac_head_max: np.ndarray
    fac_last: np.ndarray
    fac_scale: np.ndarray
    fac_count: np.ndarray  # (m,)

    def totals(self):
        has_idio = self.n_idio > 0
        idio_total = np.where(has_idio, self.idio_head_sum + self.idio_last, 0.0)
        idio_max = np.where(has_idio, np.maximum(self.idio_head_max, self.idio_last), -np.inf)
        active = (self.fac_count[:, None] > 0) & (self.fac_scale != 0)
        cls_total = np.where(active, self.fac_head_sum + self.fac_last, 0.0)
        cls_max = np.where(active, np.maximum(self.fac_head_max, self.fac_last), -np.inf)
        return idio_total, idio_max, cls_total, cls_max, active


def conditional_terms(draws, x, idio_dist, factor_dist):
    """Per-iteration conditional estimator split into (idiosyncratic, factor) parts."""
    idio_total, idio_max, cls_total, cls_max, active = draws.totals()
    m, d = cls_total.shape
    fac_total = cls_total.sum(axis=1)
    has_idio = draws.n_idio > 0

    rest = draws.idio_head_sum + fac_total
    top = np.maximum(draws.idio_head_max, cls_max.max(axis=1, initial=-np.inf))
    z_idio = np.where(has_idio, draws.n_idio * idio_dist.tail(np.maximum(x - rest, top)), 0.0)

    z_fac = np.zeros(m)
    if d:
        others_total = cls_total @ (np.ones((d, d)) - np.eye(d))
        order = np.argsort(-cls_max, axis=1, kind="stable")
        first = np.take_along_axis(cls_max, order[:, :1], axis=1)[:, 0]
        second = np.take_along_axis(cls_max, order[:, 1:2], axis=1)[:, 0] if d > 1 else np.full(m, -np.inf)
        for j in range(d):
            others_max = np.where(order[:, 0] == j, second, first)
            rest_j = idio_total + others_total[:, j] + draws.fac_head_sum[:, j]
            top_j = np.maximum(np.maximum(idio_max, others_max), draws.fac_head_max[:, j])
            p = prob_scaled_exceeds(factor_dist, draws.fac_scale[:, j], np.maximum(x - rest_j, top_j))
            z_fac += np.where(active[:, j], draws.fac_count * p, 0.0)
    return z_idio, z_fac


def _static_block(spec, n, seed, block, count):
    gl = _rng.stream(seed, block, _rng.LOADINGS)
    gf = _rng.stream(seed, block, _rng.FACTORS)
    ge = _rng.stream(seed, block, _rng.IDIO)
    loadings = spec.loading_spec
    d = spec.d
    words_per_iter = n if isinstance(loadings, Deterministic) else n * (d + 1)
    rows = max(1, CHUNK_WORDS // words_per_iter)
    sums, factors, hs, hm, last = [], [], [], [], []
    done = 0
    while done < count:
        r = min(rows, count - done)
        if isinstance(loadings, Deterministic):
            sums.append(np.tile(n * loadings.mean, (r, 1)))
        else:
            sums.append(np.stack([_column_sums_from(loadings, n, gl) for _ in range(r)]))
        factors.append(spec.factor_dist.quantile(_rng.open_uniform(gf, (r, d))))
        bits = _rng.raw_bits(ge, r * n)
        stats = segment_draw_stats(spec.idio_dist, bits, np.arange(r + 1, dtype=np.int64) * n)
        hs.append(stats[0])
        hm.append(stats[1])
        last.append(stats[2])
        done += r
    sums = np.concatenate(sums)
    factors = np.concatenate(factors)
    return _Draws(
        idio_head_sum=np.concatenate(hs),
        idio_head_max=np.concatenate(hm),
        idio_last=np.concatenate(last),
        n_idio=np.full(count, n),
        fac_head_sum=np.zeros((count, d)),
        fac_head_max=np.full((count, d), -np.inf),
        fac_last=sums * factors,
        fac_scale=sums,
        fac_count=np.ones(count, dtype=np.int64),
    )


def _check_args(n, iters, seed):
    if int(n) != n or n < 1:
        raise ValueError(f"n must be a positive integer, got {n}")
    if int(iters) != iters or iters < 1:
        raise ValueError(f"iters must be a positive integer, got {iters}")
    _rng.make_seed_sequence(seed)


def _cmc_blocks(spec, n, xs, iters, seed, workers):
    xs = [float(x) for x in xs]
    if any(not x > 0 for x in xs):
        raise ValueError("conditional estimator needs x > 0")

    def run(block, count):
        draws = _static_block(spec, n, seed, block, count)
        return [conditional_terms(draws, x, spec.idio_dist, spec.factor_dist) for x in xs]

    return map_blocks(run, iters, workers), xs


def cmc_samples(spec, n, xs, iters=DEFAULT_ITERS, seed=0, workers=1):
    """Per-iteration conditional estimator values, one array per threshold."""
    _check_args(n, iters, seed)
    results, xs = _cmc_blocks(spec, int(n), xs, int(iters), seed, workers)
    return [np.concatenate([blk[i][0] + blk[i][1] for blk in results]) for i in range(len(xs))]


def estimate_tail_cmc_many(spec, n, xs, iters=DEFAULT_ITERS, seed=0, workers=1):
    """Conditional estimates of ``P(S_n > x)`` for several ``x`` from shared draws."""
    return [TailEstimate.from_samples(z, seed) for z in cmc_samples(spec, n, xs, iters, seed, workers)]


def estimate_tail_cmc(spec, n, x, iters=DEFAULT_ITERS, seed=0, workers=1):
    return estimate_tail_cmc_many(spec, n, [x], iters, seed, workers)[0]


def cmc_term_estimates(spec, n, x, iters=DEFAULT_ITERS, seed=0, workers=1):
    """Estimates of ``P(S_n > x, M is idiosyncratic)`` and ``P(S_n > x, M is a factor term)``."""
    _check_args(n, iters, seed)
    results, _ = _cmc_blocks(spec, int(n), [x], int(iters), seed, workers)
    za = np.concatenate([blk[0][0] for blk in results])
    zb = np.concatenate([blk[0][1] for blk in results])
    return TailEstimate.from_samples(za, seed), TailEstimate.from_samples(zb, seed)


def _naive_block_totals(spec, n, seed, block, count):
    draws = _static_block(spec, n, seed, block, count)
    idio_total, idio_max, cls_total, cls_max, _ = draws.totals()
    return idio_total + cls_total.sum(axis=1), idio_max, cls_max.max(axis=1, initial=-np.inf)


def estimate_tail_naive_many(spec, n, xs, iters=DEFAULT_ITERS, seed=0, workers=1):
    """Indicator-mean estimates of ``P(S_n > x)``; shares draws across ``x``."""
    _check_args(n, iters, seed)
    xs = [float(x) for x in xs]

    def run(block, count):
        total, _, _ = _naive_block_totals(spec, int(n), seed, block, count)
        return [int(np.count_nonzero(total > x)) for x in xs]

    results = map_blocks(run, int(iters), workers)
    return [TailEstimate.from_indicators(sum(r[i] for r in results), int(iters), seed) for i in range(len(xs))]


def estimate_tail_naive(spec, n, x, iters=DEFAULT_ITERS, seed=0, workers=1):
    return estimate_tail_naive_many(spec, n, [x], iters, seed, workers)[0]


def naive_attribution(spec, n, x, iters=DEFAULT_ITERS, seed=0, workers=1):
    """Indicator estimates of ``P(S_n > x, M idiosyncratic)`` and ``P(S_n > x, M factor)``."""
    _check_args(n, iters, seed)

    def run(block, count):
        total, idio_max, fac_max = _naive_block_totals(spec, int(n), seed, block, count)
        hit = total > x
        return int(np.count_nonzero(hit & (idio_max > fac_max))), int(np.count_nonzero(hit & (idio_max <= fac_max)))

    results = map_blocks(run, int(iters), workers)
    a = sum(r[0] for r in results)
    b = sum(r[1] for r in results)
    return TailEstimate.from_indicators(a, int(iters), seed), TailEstimate.from_indicators(b, int(iters), seed)


def compare_table(spec, mu, n_list, x_list, lambda_exponent, iters=DEFAULT_ITERS, seed=0, workers=1):
    """Approximation vs conditional estimate of ``P(S_n > n**gamma * x)`` on a grid.

    Rows are ordered by ``x`` first, then ``n``. All cells share ``seed``; for
    a given ``n`` the thresholds reuse one set of draws.
    """
    n_list = [int(n) for n in n_list]
    x_list = [float(x) for x in x_list]
    if not n_list or not x_list:
        raise ValueError("n_list and x_list must both be nonempty")
    by_n = {}
    for n in n_list:
        lam = float(n) ** lambda_exponent
        ests = estimate_tail_cmc_many(spec, n, [lam * x for x in x_list], iters, seed, workers)
        by_n[n] = (lam, ests)
    rows = []
    for i, x in enumerate(x_list):
        for n in n_list:
            lam, ests = by_n[n]
            rows.append(CompareRow(n, x, lam, ld_tail_approx(spec, mu, n, lam, x), ests[i]))
    return rows


def light_tail_ratio(factor, idio_dist, n, level, iters=100_000, seed=0, workers=1):
    """Estimate ``P(n X + sum eps_i > level) / (n P(eps > level))``.

    ``factor`` is a frozen ``scipy.stats`` distribution of a positive,
    light-tailed ``X``. Only the idiosyncratic terms are conditioned on: the
    largest of them, given everything else, has an exact tail.
    """
    _check_args(n, iters, seed)
    n = int(n)
    if factor.support()[0] < 0:
        raise ValueError("light-tailed factor must be nonnegative")
    denom = n * float(idio_dist.tail(level))
    if not denom > 0:
        raise ValueError("level lies beyond the idiosyncratic support; ratio undefined")

    def run(block, count):
        gf = _rng.stream(seed, block, _rng.FACTORS)
        ge = _rng.stream(seed, block, _rng.IDIO)
        rows = max(1, CHUNK_WORDS // n)
        out = []
        done = 0
        while done < count:
            r = min(rows, count - done)
            X = factor.ppf(_rng.open_uniform(gf, r))
            hs, hm, _ = segment_draw_stats(idio_dist, _rng.raw_bits(ge, r * n), np.arange(r + 1, dtype=np.int64) * n)
            out.append(n * idio_dist.tail(np.maximum(level - n * X - hs, hm)) / denom)
            done += r
        return np.concatenate(out)

    z = np.concatenate(map_blocks(run, int(iters), workers))
    mean, se = _mean_se(z)
    return RatioEstimate(mean, se, z.size, int(seed))


def light_tail_check(factor, idio_dist, n, lambda_exponent, iters=100_000, seed=0, workers=1):
    """:func:`light_tail_ratio` at ``level = n**lambda_exponent``; tends to 1 when the exponent exceeds 1."""
    if not lambda_exponent > 1:
        raise RegimeError("lambda_n / n must diverge: need lambda_exponent > 1")
    return light_tail_ratio(factor, idio_dist, n, float(n) ** lambda_exponent, iters, seed, workers)
