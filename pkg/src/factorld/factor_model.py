"""Static heavy-tailed factor model and its sum decomposition.

The model is ``R_i = sum_j L_ij F_j + eps_i`` for ``i = 1..n`` with i.i.d.
loading rows, i.i.d. factors and i.i.d. idiosyncratic terms, all mutually
independent. Summing over ``i`` gives

    S_n = sum_j S^L_{n,j} F_j + sum_i eps_i,   S^L_{n,j} = sum_i L_ij.

Draws are taken from labeled streams (see ``_rng``): loadings, factors and
idiosyncratic terms never share a stream, so changing ``n`` leaves the factor
draws untouched.
"""

from dataclasses import dataclass
import math
from typing import Union

import numpy as np

from . import _rng
from .errors import ValidationError
from .rv_dist import RegVarDist

__all__ = [
    "Deterministic",
    "BoundedIID",
    "FactorModelSpec",
    "SumSample",
    "column_sums",
    "sample_sum",
]

# raw words per chunk when drawing large blocks
CHUNK_WORDS = 1 << 22


def _as_tuple(values, name):
    try:
        out = tuple(float(v) for v in values)
    except TypeError:
        raise ValidationError("expected a sequence of numbers", name) from None
    if not out:
        raise ValidationError("must not be empty", name)
    if not all(math.isfinite(v) for v in out):
        raise ValidationError("entries must be finite", name)
    return out


@dataclass(frozen=True)
class Deterministic:
    """Every loading row equals ``values``."""

    values: tuple

    def __post_init__(self):
        object.__setattr__(self, "values", _as_tuple(self.values, "loadings.values"))

    @property
    def d(self):
        return len(self.values)

    @property
    def mean(self):
        return np.array(self.values)

    @property
    def exchangeable(self):
        return len(set(self.values)) == 1


@dataclass(frozen=True)
class BoundedIID:
    """Loading rows with independent coordinates ``L_j ~ Uniform[low_j, high_j]``."""

    low: tuple
    high: tuple

    def __post_init__(self):
        low = _as_tuple(self.low, "loadings.low")
        high = _as_tuple(self.high, "loadings.high")
        if len(low) != len(high):
            raise ValidationError("low and high must have the same length", "loadings")
        if any(h <= lo for lo, h in zip(low, high)):
            raise ValidationError("each interval needs high > low", "loadings")
        object.__setattr__(self, "low", low)
        object.__setattr__(self, "high", high)

    @property
    def d(self):
        return len(self.low)

    @property
    def mean(self):
        return (np.array(self.low) + np.array(self.high)) / 2.0

    @property
    def exchangeable(self):
        return len(set(self.low)) == 1 and len(set(self.high)) == 1

    def draw_rows(self, gen, rows):
        u = _rng.open_uniform(gen, (rows, self.d))
        low = np.array(self.low)
        return low + (np.array(self.high) - low) * u


LoadingSpec = Union[Deterministic, BoundedIID]


@dataclass(frozen=True)
class FactorModelSpec:
    d: int
    factor_dist: RegVarDist
    idio_dist: RegVarDist
    loading_spec: LoadingSpec

    def __post_init__(self):
        if int(self.d) != self.d or self.d < 1:
            raise ValidationError(f"number of factors must be a positive integer, got {self.d}", "d")
        if not self.factor_dist.alpha > 2:
            raise ValidationError(
                f"factor tail index violates the large-deviation bound alpha_F > 2, got {self.factor_dist.alpha}",
                "factor.alpha",
            )
        if not self.idio_dist.alpha > 2:
            raise ValidationError(
                f"idiosyncratic tail index violates the large-deviation bound alpha_eps > 2, got {self.idio_dist.alpha}",
                "idio.alpha",
            )
        if not isinstance(self.loading_spec, (Deterministic, BoundedIID)):
            raise ValidationError("loadings must be Deterministic or BoundedIID", "loadings")
        if self.loading_spec.d != self.d:
            raise ValidationError(
                f"loading vector has length {self.loading_spec.d}, expected d={self.d}", "loadings"
            )
        if not np.any(self.loading_spec.mean != 0):
            raise ValidationError("mean loading vector must be nonzero", "loadings")

    @property
    def mean_loadings(self):
        return self.loading_spec.mean


@dataclass(frozen=True)
class SumSample:
    s_n: float
    factor_terms: np.ndarray
    idio_terms: np.ndarray
    column_sums: np.ndarray


def _column_sums_from(loadings, n, gen):
    if isinstance(loadings, Deterministic):
        return n * loadings.mean
    rows = max(1, CHUNK_WORDS // loadings.d)
    partial = []
    done = 0
    while done < n:
        r = min(rows, n - done)
        partial.append(loadings.draw_rows(gen, r).sum(axis=0))
        done += r
    return np.array([math.fsum(col) for col in zip(*partial)])


def column_sums(loadings, n, gen):
    """``S^L_{n,j}`` for each factor, drawing loading rows from ``gen``.

    Deterministic loadings give ``n * values`` without touching ``gen``. Rows
    are consumed in order, so the sums for ``n1 + n2`` rows equal the sums
    for the first ``n1`` rows plus those of the next ``n2``.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    return _column_sums_from(loadings, int(n), gen)


def sample_sum(spec, n, seed=0):
    """One joint draw of ``(Lambda_n, F, eps)`` and the resulting decomposition.

    ``seed`` is an integer or ``numpy.random.SeedSequence``; the draw matches
    the first iteration of block 0 in the Monte Carlo estimators.
    """
    if n < 1:
        raise ValueError("n must be a positive integer")
    n = int(n)
    sums = column_sums(spec.loading_spec, n, _rng.stream(seed, 0, _rng.LOADINGS))
    factors = spec.factor_dist.quantile(_rng.open_uniform(_rng.stream(seed, 0, _rng.FACTORS), spec.d))
    idio = spec.idio_dist.quantile(_rng.open_uniform(_rng.stream(seed, 0, _rng.IDIO), n))
    factor_terms = sums * factors
    s_n = math.fsum(np.concatenate([factor_terms, idio]))
    return SumSample(s_n=s_n, factor_terms=factor_terms, idio_terms=idio, column_sums=sums)
