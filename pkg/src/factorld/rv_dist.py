"""Regularly varying distributions on the real line.

A :class:`RegVarDist` is the law of ``S * R`` where ``R = |X|`` has tail
``P(R > r) = L(r) * r**-alpha`` beyond its support minimum, and the sign
``S`` is ``+1`` with probability ``p``. Both tails therefore share one index,
and ``p`` is the tail balance. The slowly varying factor ``L`` is held
symbolically so that limits of ratios can be taken in closed form.
"""

from dataclasses import dataclass, field
import math
from typing import Callable, Union

import numpy as np

from ._rng import open_uniform
from .errors import ValidationError

__all__ = [
    "Constant",
    "ConvergentTo",
    "LogSV",
    "RegVarDist",
    "pareto",
    "tail",
    "quantile_sample",
    "sv_ratio_limit",
    "hill_estimate",
]


@dataclass(frozen=True)
class Constant:
    """L(x) = c."""

    c: float = 1.0

    def __post_init__(self):
        if not self.c > 0:
            raise ValidationError(f"constant must be positive, got {self.c}", "sv.c")

    def __call__(self, x):
        return np.full_like(np.asarray(x, dtype=float), self.c)

    @property
    def limit(self):
        return self.c


@dataclass(frozen=True)
class ConvergentTo:
    """L(x) = func(x) with func(x) -> c. ``func`` must accept numpy arrays."""

    c: float
    func: Callable = field(compare=False)

    def __post_init__(self):
        if not self.c > 0:
            raise ValidationError(f"limit must be positive, got {self.c}", "sv.c")

    def __call__(self, x):
        return np.asarray(self.func(np.asarray(x, dtype=float)), dtype=float)

    @property
    def limit(self):
        return self.c


@dataclass(frozen=True)
class LogSV:
    """L(x) = a * log(x) + b."""

    a: float
    b: float

    def __post_init__(self):
        if self.a < 0:
            raise ValidationError(f"log coefficient must be >= 0, got {self.a}", "sv.a")
        # keeps L(x) > 0 for every x > 1
        if self.b < 0 or (self.b == 0 and self.a == 0):
            raise ValidationError(
                f"need b > 0, or b = 0 with a > 0, for L to stay positive; got a={self.a}, b={self.b}", "sv.b"
            )

    def __call__(self, x):
        return self.a * np.log(np.asarray(x, dtype=float)) + self.b

    @property
    def limit(self):
        return math.inf if self.a > 0 else self.b


SlowlyVarying = Union[Constant, ConvergentTo, LogSV]


def _is_constant(sv):
    return isinstance(sv, Constant) or (isinstance(sv, LogSV) and sv.a == 0)


def _constant_value(sv):
    return sv.c if isinstance(sv, Constant) else sv.b


@dataclass(frozen=True)
class RegVarDist:
    """Two-sided regularly varying law with a symbolic slowly varying factor.

    ``support_min`` is derived: it is the point where ``L(r) r**-alpha``
    reaches one, so the modulus has no atom. With ``sv=Constant(c)`` this is
    the Pareto scale ``c**(1/alpha)``.
    """

    alpha: float
    p: float = 1.0
    sv: SlowlyVarying = Constant(1.0)
    support_min: float = field(init=False, compare=False)

    def __post_init__(self):
        if not (self.alpha > 0 and math.isfinite(self.alpha)):
            raise ValidationError(f"tail index must be positive, got {self.alpha}", "alpha")
        if not 0.0 <= self.p <= 1.0:
            raise ValidationError(f"tail balance must lie in [0, 1], got {self.p}", "p")
        object.__setattr__(self, "support_min", self._find_support_min())

    def _find_support_min(self):
        if _is_constant(self.sv):
            return _constant_value(self.sv) ** (1.0 / self.alpha)
        if not float(self.sv(1.0)) >= 1.0:
            raise ValidationError(
                "L(1) must be >= 1 so that the modulus has no atom at its support minimum", "sv"
            )
        g = lambda lx: math.log(float(self.sv(math.exp(lx)))) - self.alpha * lx
        hi = 1.0
        while g(hi) > 0:
            hi *= 2.0
            if hi > 700:
                raise ValidationError("tail L(x) x^-alpha never drops below 1", "sv")
        from scipy import optimize

        lx0 = optimize.brentq(g, 0.0, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps)
        grid = np.exp(np.linspace(lx0, lx0 + 50.0, 2001))
        vals = self.sv(grid) * grid ** -self.alpha
        if np.any(np.diff(vals) > 1e-15 * vals[:-1]):
            raise ValidationError("tail L(x) x^-alpha must be nonincreasing beyond its support", "sv")
        return math.exp(lx0)

    @property
    def one_sided(self):
        return self.p == 1.0

    @property
    def pareto_scale(self):
        """Scale of the Pareto modulus when L is constant, else None."""
        return self.support_min if _is_constant(self.sv) else None

    @property
    def sv_constant(self):
        """Limiting constant of L; infinite for a growing log factor."""
        return self.sv.limit

    def abs_tail(self, r):
        """P(|X| > r)."""
        r = np.asarray(r, dtype=float)
        xm = self.support_min
        with np.errstate(divide="ignore", invalid="ignore"):
            if _is_constant(self.sv):
                out = (np.maximum(r, xm) / xm) ** -self.alpha
            else:
                rr = np.maximum(r, xm)
                out = self.sv(rr) * rr ** -self.alpha
        out = np.where(r <= xm, 1.0, out)
        return out[()] if out.ndim == 0 else out

    def _abs_cdf(self, r):
        # 1 - abs_tail without cancellation near the support minimum
        r = np.asarray(r, dtype=float)
        xm = self.support_min
        rr = np.maximum(r, xm)
        if _is_constant(self.sv):
            out = -np.expm1(-self.alpha * np.log(rr / xm))
        else:
            out = 1.0 - self.sv(rr) * rr ** -self.alpha
        return np.where(r <= xm, 0.0, out)

    def tail(self, x):
        """P(X > x) for any real x."""
        x = np.asarray(x, dtype=float)
        xm = self.support_min
        p = self.p
        right = p * self.abs_tail(np.maximum(x, xm))
        left = 1.0 - (1.0 - p) * self.abs_tail(np.maximum(-x, xm))
        out = np.where(x >= xm, right, np.where(x >= -xm, p, left))
        return out[()] if out.ndim == 0 else out

    def cdf(self, x):
        """P(X <= x)."""
        x = np.asarray(x, dtype=float)
        xm = self.support_min
        p = self.p
        right = (1.0 - p) + p * self._abs_cdf(np.maximum(x, xm))
        left = (1.0 - p) * self.abs_tail(np.maximum(-x, xm))
        out = np.where(x >= xm, right, np.where(x >= -xm, 1.0 - p, left))
        return out[()] if out.ndim == 0 else out

    def abs_quantile(self, v):
        """The modulus level r with P(|X| > r) = v, for v in (0, 1]."""
        v = np.asarray(v, dtype=float)
        return self._abs_quantile_log(np.log(v))

    def _abs_quantile_log(self, log_v):
        xm = self.support_min
        if _is_constant(self.sv):
            return xm * np.exp(-log_v / self.alpha)
        return self._solve_abs_quantile(log_v)

    def _solve_abs_quantile(self, log_v):
        # bisection in log r; log tail is monotone beyond support_min
        log_v = np.atleast_1d(np.asarray(log_v, dtype=float))
        lo = np.full_like(log_v, math.log(self.support_min))
        hi = lo - log_v / self.alpha + 1.0
        log_tail = lambda lr: np.log(self.sv(np.exp(lr))) - self.alpha * lr
        for _ in range(200):
            bad = log_tail(hi) > log_v
            if not bad.any():
                break
            hi = np.where(bad, hi + (hi - lo), hi)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            above = log_tail(mid) > log_v
            lo = np.where(above, mid, lo)
            hi = np.where(above, hi, mid)
        return np.exp(0.5 * (lo + hi))

    def quantile(self, u):
        """Inverse of :meth:`cdf` on (0, 1)."""
        u = np.asarray(u, dtype=float)
        if np.any((u <= 0) | (u >= 1)) or np.any(np.isnan(u)):
            raise ValueError("quantile argument must lie strictly inside (0, 1)")
        p = self.p
        with np.errstate(divide="ignore", invalid="ignore"):
            log_right = np.log1p(-u) - math.log(p) if p > 0 else np.full_like(u, np.nan)
            log_left = np.log(u) - math.log1p(-p) if p < 1 else np.full_like(u, np.nan)
            left_mask = u < 1.0 - p
            r = self._abs_quantile_log(np.where(left_mask, log_left, log_right))
        out = np.where(left_mask, -r, r)
        return out[()] if out.ndim == 0 else out

    def sample(self, gen, size):
        """Exact draws by inverse transform from a numpy Generator."""
        return self.quantile(open_uniform(gen, size))


def pareto(alpha, p=1.0, scale=1.0):
    """Pareto modulus ``P(|X| > r) = (r/scale)**-alpha`` for r >= scale."""
    if not scale > 0:
        raise ValidationError(f"scale must be positive, got {scale}", "scale")
    return RegVarDist(alpha=alpha, p=p, sv=Constant(scale ** alpha))


def tail(dist, x):
    return dist.tail(x)


def quantile_sample(dist, u):
    if not 0.0 < u < 1.0:
        raise ValueError(f"u must lie strictly inside (0, 1), got {u}")
    return float(dist.quantile(u))


def _as_log(sv):
    """(a, b) with L ~ a log x + b; ConvergentTo counts as its constant."""
    if isinstance(sv, LogSV):
        return sv.a, sv.b
    return 0.0, sv.limit


def sv_ratio_limit(sv_eps, sv_F, theta_F, theta_eps):
    """Limit of ``L_eps(n**theta_F) / L_F(n**theta_eps)`` as n grows.

    Returns a float in [0, inf].
    """
    if not theta_F > 1 or not theta_eps > 0:
        raise ValueError("need theta_F > 1 and theta_eps > 0")
    a2, b2 = _as_log(sv_eps)
    a1, b1 = _as_log(sv_F)
    if a1 > 0 and a2 > 0:
        return (a2 * theta_F) / (a1 * theta_eps)
    if a2 > 0:
        return math.inf
    if a1 > 0:
        return 0.0
    return b2 / b1


def hill_estimate(samples, k):
    """Hill estimator of the tail index from the k largest of ``|samples|``."""
    x = np.abs(np.asarray(samples, dtype=float))
    x = x[x > 0]
    k = int(k)
    if k < 1:
        raise ValueError("k must be a positive integer")
    if x.size < k + 1:
        raise ValueError(f"need more than k={k} positive samples, got {x.size}")
    top = np.sort(np.partition(x, x.size - k - 1)[x.size - k - 1:])
    logs = np.log(top[1:]) - np.log(top[0])
    total = logs.sum()
    if not total > 0:
        raise ValueError("no tail variation among the top order statistics")
    return k / total
