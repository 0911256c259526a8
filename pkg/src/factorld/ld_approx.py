"""Closed-form large-deviation approximations for factor-model sums.

With factor tail index ``alpha_F`` and idiosyncratic index ``alpha_eps`` the
tail ``P(S_n > lambda_n x)`` is governed by the factor part when
``lambda_n`` grows slower than ``n**theta_F``, by the idiosyncratic part when
it grows faster, and by both at the critical rate, where
``theta_F = (alpha_F - 1) / (alpha_F - alpha_eps)``. When the factor is at
least as light as the idiosyncratic term the factor part always dominates.

Scaling sequences are restricted to the polynomial family
``lambda_n = n**gamma``, for which these comparisons are decidable.
"""

from dataclasses import dataclass
import math
import warnings
from typing import Union

import numpy as np

from .errors import RegimeError
from .rv_dist import LogSV, sv_ratio_limit

__all__ = [
    "FactorDominated",
    "IdioDominated",
    "Mixed",
    "CriticalExponents",
    "AxisIID",
    "UserScalar",
    "critical_exponents",
    "classify_regime",
    "log_balance",
    "mu_value",
    "ld_terms",
    "ld_tail_approx",
]

_EXP_RTOL = 1e-12


@dataclass(frozen=True)
class FactorDominated:
    pass


@dataclass(frozen=True)
class IdioDominated:
    pass


@dataclass(frozen=True)
class Mixed:
    C: float

    def __post_init__(self):
        if not (0 <= self.C < math.inf):
            raise ValueError(f"mixed regime needs a finite nonnegative C, got {self.C}")


Regime = Union[FactorDominated, IdioDominated, Mixed]


@dataclass(frozen=True)
class CriticalExponents:
    theta_F: float
    theta_eps: float


def critical_exponents(alpha_F, alpha_eps):
    if not alpha_F > alpha_eps:
        raise RegimeError(
            f"critical exponents need alpha_F > alpha_eps (got {alpha_F}, {alpha_eps}); "
            "with alpha_F <= alpha_eps the factor part dominates for every lambda_n >> n"
        )
    if not alpha_eps > 2:
        raise RegimeError(f"idiosyncratic tail index must exceed 2, got {alpha_eps}")
    theta_F = (alpha_F - 1.0) / (alpha_F - alpha_eps)
    return CriticalExponents(theta_F=theta_F, theta_eps=theta_F - 1.0)


def classify_regime(alpha_F, alpha_eps, lambda_exponent, C=1.0):
    """Which part of the sum drives ``P(S_n > n**lambda_exponent * x)``."""
    if not lambda_exponent > 1:
        raise RegimeError(
            f"lambda_n = n**{lambda_exponent} is outside the large-deviation region: "
            "need sqrt(n log n) / lambda_n -> 0, i.e. an exponent above 1 here"
        )
    if alpha_F <= alpha_eps:
        return FactorDominated()
    theta_F = critical_exponents(alpha_F, alpha_eps).theta_F
    if math.isclose(lambda_exponent, theta_F, rel_tol=_EXP_RTOL, abs_tol=0.0):
        return Mixed(C) if C < math.inf else IdioDominated()
    if lambda_exponent > theta_F:
        return IdioDominated()
    return FactorDominated()


def log_balance(alpha_F, alpha_eps, lambda_exponent, n):
    """``log(n * lambda_n**-alpha_eps / (lambda_n/n)**-alpha_F)`` for ``lambda_n = n**gamma``.

    Zero at the critical exponent; its sign tells which term of the
    approximation wins as ``n`` grows.
    """
    g = lambda_exponent
    return math.log(n) * (1.0 - g * alpha_eps + alpha_F * (g - 1.0))


@dataclass(frozen=True)
class AxisIID:
    """Independent factors: the limit measure lives on the coordinate axes.

    ``p`` is the factors' tail balance; coordinates with negative mean
    loading pick up the left tail.
    """

    EL: tuple
    alpha_F: float
    p: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "EL", tuple(float(v) for v in self.EL))

    @classmethod
    def from_spec(cls, spec):
        return cls(tuple(spec.mean_loadings), spec.factor_dist.alpha, spec.factor_dist.p)


@dataclass(frozen=True)
class UserScalar:
    value: float

    def __post_init__(self):
        if not self.value >= 0:
            raise ValueError(f"mu value must be nonnegative, got {self.value}")


def mu_value(mu):
    """Mass of ``{y : EL . y > 1}`` under the factors' limit measure.

    For axis-concentrated mass with unit tail per axis, coordinate ``j``
    contributes ``P(EL_j F_j > t) / t**-alpha -> |EL_j|**alpha`` times the
    relevant tail weight.
    """
    if isinstance(mu, UserScalar):
        return float(mu.value)
    el = np.asarray(mu.EL, dtype=float)
    pos = el[el > 0]
    neg = -el[el < 0]
    value = mu.p * float(np.sum(pos ** mu.alpha_F)) + (1.0 - mu.p) * float(np.sum(neg ** mu.alpha_F))
    if value == 0.0:
        warnings.warn("mean loading direction carries no factor tail mass; mu value is 0", RuntimeWarning)
    return value


def _sv_level(dist, y):
    sv = dist.sv
    if isinstance(sv, LogSV):
        return float(sv(y))
    return sv.limit


def ld_terms(spec, mu, n, lambda_n, x):
    """The factor and idiosyncratic terms of the approximation, separately."""
    if not x > 0:
        raise ValueError(f"x must be positive, got {x}")
    if not lambda_n > 0 or n < 1:
        raise ValueError("need n >= 1 and lambda_n > 0")
    fd, ed = spec.factor_dist, spec.idio_dist
    if isinstance(mu, AxisIID) and mu.alpha_F != fd.alpha:
        raise ValueError("mu tail index does not match the factor distribution")
    y_F = lambda_n * x / n
    y_eps = lambda_n * x
    a_F = mu_value(mu) * _sv_level(fd, y_F) * y_F ** -fd.alpha
    a_eps = n * ed.p * _sv_level(ed, y_eps) * y_eps ** -ed.alpha
    return a_F, a_eps


def ld_tail_approx(spec, mu, n, lambda_n, x):
    """Approximate ``P(S_n > lambda_n x)`` by the sum of both tail terms.

    With constant slowly varying factors both terms are always kept: the
    non-dominant one vanishes relative to the other outside the critical
    scaling. Otherwise the regime is classified from the slowly varying
    limit and only the dominant term(s) are returned.
    """
    a_F, a_eps = ld_terms(spec, mu, n, lambda_n, x)
    fd, ed = spec.factor_dist, spec.idio_dist
    constant = not isinstance(fd.sv, LogSV) and not isinstance(ed.sv, LogSV)
    if constant or n == 1:
        return a_F + a_eps
    gamma = math.log(lambda_n) / math.log(n)
    if fd.alpha > ed.alpha:
        th = critical_exponents(fd.alpha, ed.alpha)
        C = sv_ratio_limit(ed.sv, fd.sv, th.theta_F, th.theta_eps)
    else:
        C = 1.0
    regime = classify_regime(fd.alpha, ed.alpha, gamma, C)
    if isinstance(regime, FactorDominated):
        return a_F
    if isinstance(regime, IdioDominated):
        return a_eps
    return a_F + a_eps
