"""The three bivariate families: CDFs, exact samplers, pair expectations.

Supported families and parameter domains:

* ``normal`` - bivariate standard normal with correlation t, t in (-1, 1).
  Sampled as X = Z1, Y = t*Z1 + sqrt(1-t^2)*Z2.
* ``fgm`` - Farlie-Gumbel-Morgenstern copula on the unit square,
  F(x, y) = xy + t(x-x^2)(y-y^2), t in [-1, 1].  Sampled by conditional
  inversion: the quadratic F(y|x) = y + a(y-y^2) = u with a = t(1-2x)
  has the stable root y = 2u / ((1+a) + sqrt((1+a)^2 - 4au)).
* ``pareto`` - bivariate Pareto,
  F(x, y) = 1 - (1+x)^-t - (1+y)^-t + (1+x+y)^-t, x, y > 0, t > 0.
  Sampled by marginal plus conditional inversion:
  X = U1^(-1/t) - 1, Y = (1+X) * (U2^(-1/(t+1)) - 1), which follows from
  the conditional CDF F(y|x) = 1 - ((1+x)/(1+x+y))^(t+1).

``pair_expectation_closed(family, t_i, t_j)`` returns the pairwise
dominance probability p_ij = P(X_j <= X_i, Y_j <= Y_i) for independent
draws (X_i, Y_i) ~ family(t_i) and (X_j, Y_j) ~ family(t_j); the Monte
Carlo oracle ``pair_prob_mc`` estimates the same probability by direct
simulation, so the two can be cross-checked without any bivariate normal
CDF evaluation.

All functions are pure; FamilySpec is immutable.  A random Generator must
not be shared across threads while sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ParamDomainError, UnsupportedFamilyOperation

_KINDS = ("normal", "fgm", "pareto")

# arguments of arcsin may exceed 1 by at most this much before being an error
_ARCSIN_CLAMP = 1e-12

# below this |a| the FGM conditional is uniform to working precision
_FGM_LINEAR_EPS = 1e-12


class BivariatePoint(NamedTuple):
    x: float
    y: float


class PairProbEstimate(NamedTuple):
    estimate: float
    se: float
    reps: int


@dataclass(frozen=True)
class FamilySpec:
    """One of the three bivariate families, identified by ``kind``."""

    kind: str

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ParamDomainError(f"unknown family {self.kind!r}; choose from {_KINDS}")

    @property
    def domain_description(self) -> str:
        return {
            "normal": "t in (-1, 1)",
            "fgm": "t in [-1, 1]",
            "pareto": "t in (0, inf)",
        }[self.kind]

    def param_ok(self, t: float) -> bool:
        if not math.isfinite(t):
            return False
        if self.kind == "normal":
            return -1.0 < t < 1.0
        if self.kind == "fgm":
            return -1.0 <= t <= 1.0
        return t > 0.0

    def validate_param(self, t: float, index: int | None = None) -> float:
        if not self.param_ok(t):
            raise ParamDomainError(
                f"{self.kind} parameter t={t!r} outside {self.domain_description}", index=index
            )
        return float(t)

    def validate_params(self, ts: np.ndarray) -> np.ndarray:
        """Validate a whole parameter sequence; reports the first bad 1-based index."""
        ts = np.asarray(ts, dtype=np.float64)
        ok = np.isfinite(ts)
        if self.kind == "normal":
            ok &= (ts > -1.0) & (ts < 1.0)
        elif self.kind == "fgm":
            ok &= (ts >= -1.0) & (ts <= 1.0)
        else:
            ok &= ts > 0.0
        if not ok.all():
            bad = int(np.argmin(ok))
            raise ParamDomainError(
                f"{self.kind} parameter t={float(ts[bad])!r} outside {self.domain_description}",
                index=bad + 1,
            )
        return ts


NORMAL = FamilySpec("normal")
FGM = FamilySpec("fgm")
PARETO = FamilySpec("pareto")


def by_name(name: str) -> FamilySpec:
    return FamilySpec(name)


def cdf(family: FamilySpec, t: float, point: BivariatePoint | tuple[float, float]) -> float:
    """Joint CDF F_t(x, y) for the fgm and pareto families.

    The bivariate normal CDF is intentionally unsupported; normal-family
    checks go through the pair-probability form instead.

    Parameters
    ----------
    family : FamilySpec
    t : float
        Dependence parameter, inside the family domain.
    point : (x, y)
        Evaluation point inside the family support.

    Returns
    -------
    float
        Probability in [0, 1], nondecreasing in each coordinate.
    """
    t = family.validate_param(t)
    x, y = float(point[0]), float(point[1])
    if family.kind == "normal":
        raise UnsupportedFamilyOperation(
            "bivariate normal CDF is not provided; use pair_prob_mc for probability checks"
        )
    if family.kind == "fgm":
        if not (0.0 <= x <= 1.0 and 0.0 <= y <= 1.0):
            raise ParamDomainError(f"fgm support is the unit square, got ({x}, {y})")
        return x * y + t * (x - x * x) * (y - y * y)
    if not (x >= 0.0 and y >= 0.0):
        raise ParamDomainError(f"pareto support is x, y >= 0, got ({x}, {y})")
    return 1.0 - (1.0 + x) ** -t - (1.0 + y) ** -t + (1.0 + x + y) ** -t


def marginal_cdf(family: FamilySpec, t: float, values: np.ndarray) -> np.ndarray:
    """Analytic one-dimensional marginal CDF of either coordinate.

    Standard normal for ``normal``, uniform on (0,1) for ``fgm``,
    1 - (1+x)^-t for ``pareto``.  Used by the sampler goodness-of-fit
    checks.
    """
    t = family.validate_param(t)
    v = np.asarray(values, dtype=np.float64)
    if family.kind == "normal":
        from scipy.special import ndtr

        return ndtr(v)
    if family.kind == "fgm":
        return np.clip(v, 0.0, 1.0)
    return 1.0 - (1.0 + np.maximum(v, 0.0)) ** -t


def fgm_conditional_cdf(t: float, x: float, y: np.ndarray) -> np.ndarray:
    """Conditional CDF F(y | x) = y + t(1-2x)(y - y^2) of the fgm copula."""
    FGM.validate_param(t)
    a = t * (1.0 - 2.0 * float(x))
    y = np.asarray(y, dtype=np.float64)
    return y + a * (y - y * y)


def fgm_invert_conditional(a: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Solve y + a(y - y^2) = u for y in [0, 1], elementwise.

    Stable form of the quadratic root ((1+a) - sqrt((1+a)^2 - 4au)) / (2a):
    multiplying by the conjugate removes the cancellation near a = 0.
    """
    a = np.asarray(a, dtype=np.float64)
    u = np.asarray(u, dtype=np.float64)
    disc = (1.0 + a) ** 2 - 4.0 * a * u
    y = 2.0 * u / ((1.0 + a) + np.sqrt(disc))
    return np.where(np.abs(a) < _FGM_LINEAR_EPS, u, y)


def sample_many(family: FamilySpec, ts: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Draw one point from family(t) for each t in ``ts``.

    Parameters
    ----------
    ts : array of shape (n,)
        Dependence parameters, one per draw, all inside the family domain.
    rng : numpy.random.Generator
        Consumed in a fixed order: one (n, 2) block of standard normals
        (``normal``) or uniforms (``fgm``, ``pareto``), row k feeding
        draw k.  This makes vectorized and pointwise sampling produce
        identical streams.

    Returns
    -------
    ndarray of shape (n, 2)
        Column 0 holds the x coordinates, column 1 the y coordinates.
    """
    ts = family.validate_params(ts)
    n = ts.size
    if family.kind == "normal":
        z = rng.standard_normal((n, 2))
        x = z[:, 0]
        y = ts * z[:, 0] + np.sqrt(1.0 - ts * ts) * z[:, 1]
        return np.column_stack([x, y])
    u = rng.random((n, 2))
    if family.kind == "fgm":
        x = u[:, 0]
        y = fgm_invert_conditional(ts * (1.0 - 2.0 * x), u[:, 1])
        return np.column_stack([x, y])
    x = u[:, 0] ** (-1.0 / ts) - 1.0
    y = (1.0 + x) * (u[:, 1] ** (-1.0 / (ts + 1.0)) - 1.0)
    return np.column_stack([x, y])


def sample(family: FamilySpec, t: float, rng: np.random.Generator) -> BivariatePoint:
    """Draw a single exact point from family(t)."""
    pt = sample_many(family, np.array([t], dtype=np.float64), rng)[0]
    return BivariatePoint(float(pt[0]), float(pt[1]))


def pair_expectation_closed(family: FamilySpec, t_i: float, t_j: float) -> float:
    """Closed-form p_ij = P(X_j <= X_i, Y_j <= Y_i) for independent draws.

    (X_i, Y_i) ~ family(t_i) and (X_j, Y_j) ~ family(t_j).  Formulas:

    * normal: arcsin((t_i+t_j)/2) / (2 pi) + 1/4
    * fgm:    1/4 + (t_i+t_j) / 36
    * pareto: (t_j^2 + t_j) / ((t_i+t_j) (t_i+t_j+1))

    The normal and fgm values are symmetric in (t_i, t_j); the pareto one
    is not, its numerator carries the parameter of the dominated draw.
    """
    t_i = family.validate_param(t_i)
    t_j = family.validate_param(t_j)
    if family.kind == "normal":
        arg = (t_i + t_j) / 2.0
        if abs(arg) > 1.0:
            if abs(arg) > 1.0 + _ARCSIN_CLAMP:
                raise ParamDomainError(f"arcsin argument {arg!r} outside [-1, 1]")
            arg = math.copysign(1.0, arg)
        return math.asin(arg) / (2.0 * math.pi) + 0.25
    if family.kind == "fgm":
        return 0.25 + (t_i + t_j) / 36.0
    s = t_i + t_j
    return (t_j * t_j + t_j) / (s * (s + 1.0))


def pair_prob_mc(
    family: FamilySpec,
    t_i: float,
    t_j: float,
    reps: int,
    rng: np.random.Generator,
) -> PairProbEstimate:
    """Monte Carlo estimate of P(X_j <= X_i, Y_j <= Y_i).

    Draws ``reps`` independent pairs, (X_i, Y_i) ~ family(t_i) and
    (X_j, Y_j) ~ family(t_j), and reports the hit fraction with its
    binomial standard error sqrt(p(1-p)/reps).  This is the oracle that
    validates ``pair_expectation_closed`` for every family, including the
    normal one whose joint CDF is not implemented.
    """
    if reps < 1000:
        raise ValueError("pair_prob_mc needs reps >= 1000")
    t_i = family.validate_param(t_i)
    t_j = family.validate_param(t_j)
    hits = 0
    remaining = reps
    block = 1_000_000
    while remaining > 0:
        m = min(block, remaining)
        pi = sample_many(family, np.full(m, t_i), rng)
        pj = sample_many(family, np.full(m, t_j), rng)
        hits += int(np.count_nonzero((pj[:, 0] <= pi[:, 0]) & (pj[:, 1] <= pi[:, 1])))
        remaining -= m
    p = hits / reps
    return PairProbEstimate(p, math.sqrt(p * (1.0 - p) / reps), reps)
