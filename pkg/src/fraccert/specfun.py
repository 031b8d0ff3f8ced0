"""Gamma function and the real-axis Gauss hypergeometric function 2F1.

Evaluation strategy for F(a, b; c; z), z < 1:

* terminating parameters (a or b a nonpositive integer) are summed exactly;
* |z| <= 1/2 uses the defining power series;
* z < -1/2 is mapped into (0, 1) by Pfaff's transformation;
* z in (1/2, 1) uses the analytic continuation around z = 1, including the
  logarithmic formulas when c - a - b is an integer.

The argument is called ``z`` throughout so that it is never confused with the
fractional order ``s`` used elsewhere in the package.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

from scipy.special import digamma

SERIES_RTOL = 1e-15
MAX_TERMS = 100_000
# |c - a - b - m| below this is treated as the integer m in the continuation formulas
INTEGER_SNAP = 1e-9
# tie tolerance when classifying the behaviour of F as z -> 1
REGIME_TIE = 1e-12

EULER_GAMMA = 0.5772156649015329


class PoleError(ValueError):
    """Raised when a Gamma argument (or the parameter c) is a nonpositive integer."""


class DomainError(ValueError):
    """Raised for hypergeometric arguments z >= 1."""


class ConvergenceError(ArithmeticError):
    """Raised when a series does not reach the requested tolerance."""


def _is_nonpositive_integer(x: float) -> bool:
    return x <= 0 and float(x).is_integer()


def gamma_fn(x: float) -> float:
    """Gamma function on the real line, raising ``PoleError`` at 0, -1, -2, ..."""
    if _is_nonpositive_integer(x):
        raise PoleError(f"Gamma has a pole at {x!r}")
    return math.gamma(x)


def rgamma(x: float) -> float:
    """Reciprocal Gamma function; entire, so it vanishes at the poles of Gamma."""
    if _is_nonpositive_integer(x):
        return 0.0
    if x > 171.0:
        return 0.0
    if abs(x) < 1e-8:
        return x * (1.0 + EULER_GAMMA * x)
    return 1.0 / math.gamma(x)


def pochhammer(a: float, n: int) -> float:
    out = 1.0
    for k in range(n):
        out *= a + k
    return out


@dataclass(frozen=True)
class HypParams:
    a: float
    b: float
    c: float
    z: float

    def __post_init__(self):
        if _is_nonpositive_integer(self.c):
            raise PoleError(f"c = {self.c!r} is a nonpositive integer")
        if not self.z < 1.0:
            raise DomainError(f"z = {self.z!r} must be < 1")

    def evaluate(self) -> float:
        return hyp2f1(self.a, self.b, self.c, self.z)


def _snap(x: float) -> float:
    n = round(x)
    if n <= 0 and x != n and abs(x - n) < 1e-15 * (1.0 + abs(n)):
        return float(n)
    return x


def _power_series(a, b, c, z, rtol=SERIES_RTOL, max_terms=MAX_TERMS):
    term = 1.0
    total = 1.0
    small = 0
    for n in range(max_terms):
        term *= (a + n) * (b + n) / ((c + n) * (n + 1.0)) * z
        total += term
        if term == 0.0:
            return total
        if abs(term) <= rtol * abs(total):
            small += 1
            if small == 2:
                return total
        else:
            small = 0
    raise ConvergenceError(
        f"2F1 series for (a, b, c, z) = ({a}, {b}, {c}, {z}) did not converge "
        f"in {max_terms} terms"
    )


def _terminating(a, b, c, z):
    n = int(round(-a)) if _is_nonpositive_integer(a) else int(round(-b))
    term = 1.0
    total = 1.0
    for k in range(n):
        term *= (a + k) * (b + k) / ((c + k) * (k + 1.0)) * z
        total += term
    return total


def _log_series(a, b, m, y, rtol=SERIES_RTOL, max_terms=MAX_TERMS):
    """sum_n (a+m)_n (b+m)_n / (n! (n+m)!) y^n [ln y - psi(n+1) - psi(n+m+1) + psi(a+n+m) + psi(b+n+m)]."""
    log_y = math.log(y)
    coef = 1.0 / math.factorial(m)
    total = 0.0
    small = 0
    for n in range(max_terms):
        if n > 0:
            coef *= (a + m + n - 1) * (b + m + n - 1) / (n * (n + m)) * y
        bracket = (
            log_y
            - digamma(n + 1.0)
            - digamma(n + m + 1.0)
            + digamma(a + n + m)
            + digamma(b + n + m)
        )
        term = coef * bracket
        total += term
        if coef == 0.0:
            return total
        if abs(term) <= rtol * abs(total):
            small += 1
            if small == 2:
                return total
        else:
            small = 0
    raise ConvergenceError("logarithmic continuation series did not converge")


def _near_one(a, b, c, z):
    """F(a, b; c; z) for 1/2 < z < 1 via the connection formulas around z = 1."""
    y = 1.0 - z
    d = c - a - b
    m = round(d)
    if abs(d - m) > INTEGER_SNAP:
        first = gamma_fn(c) * gamma_fn(d) * rgamma(c - a) * rgamma(c - b)
        second = gamma_fn(c) * gamma_fn(-d) * rgamma(a) * rgamma(b)
        out = 0.0
        if first != 0.0:
            out += first * _power_series(a, b, 1.0 - d, y)
        if second != 0.0:
            out += second * y**d * _power_series(c - a, c - b, d + 1.0, y)
        return out
    m = int(m)
    if m < 0:
        # Euler's transformation flips the sign of c - a - b
        return y ** float(m) * _near_one(c - a, c - b, c, z)
    c = a + b + m
    finite = 0.0
    if m > 0:
        pref = math.gamma(m) * gamma_fn(c) * rgamma(a + m) * rgamma(b + m)
        term = 1.0
        for n in range(m):
            if n > 0:
                term *= (a + n - 1) * (b + n - 1) / (n * (n - m)) * y
            finite += term
        finite *= pref
    log_part = (-1.0) ** m * y**m * gamma_fn(c) * rgamma(a) * rgamma(b)
    if log_part == 0.0:
        return finite
    return finite - log_part * _log_series(a, b, m, y)


def hyp2f1(a: float, b: float, c: float, z: float) -> float:
    """Gauss hypergeometric function F(a, b; c; z) for real parameters and z < 1."""
    a, b, c, z = float(a), float(b), float(c), float(z)
    HypParams(a, b, c, z)
    # parameters a hair away from a nonpositive integer overflow digamma in
    # the logarithmic branch; the snap changes F by O(1e-15)
    a, b = _snap(a), _snap(b)
    if z == 0.0:
        return 1.0
    if _is_nonpositive_integer(a) or _is_nonpositive_integer(b):
        return _terminating(a, b, c, z)
    if abs(z) <= 0.5:
        return _power_series(a, b, c, z)
    if z < 0.0:
        w = z / (z - 1.0)
        return (1.0 - z) ** (-b) * hyp2f1(c - a, b, c, w)
    return _near_one(a, b, c, z)


@dataclass(frozen=True)
class PfaffImage:
    params: HypParams
    prefactor: float

    def evaluate(self) -> float:
        return self.prefactor * self.params.evaluate()


def pfaff_transform(p: HypParams) -> PfaffImage:
    """Map F(a, b; c; -r^2) to (1 + r^2)^(-b) F(c - a, b; c; r^2 / (1 + r^2))."""
    if p.z > 0:
        raise DomainError("pfaff_transform expects z = -r^2 <= 0")
    r2 = -p.z
    image = HypParams(p.c - p.a, p.b, p.c, r2 / (1.0 + r2))
    return PfaffImage(image, (1.0 + r2) ** (-p.b))


class Regime(enum.Enum):
    FINITE_LIMIT = "finite"
    LOG_DIVERGENT = "log"
    POWER_DIVERGENT = "power"


@dataclass(frozen=True)
class LimitClass:
    regime: Regime
    constant: float
    exponent: float

    def normalizer(self, z: float) -> float:
        """The factor F(z) is divided by before taking z -> 1-."""
        if self.regime is Regime.FINITE_LIMIT:
            return 1.0
        if self.regime is Regime.LOG_DIVERGENT:
            return -math.log1p(-z)
        return (1.0 - z) ** self.exponent


def limit_classify(a: float, b: float, c: float) -> LimitClass:
    """Behaviour of F(a, b; c; z) as z -> 1- (Gauss / logarithmic / power regimes)."""
    d = c - a - b
    if abs(d) <= REGIME_TIE:
        const = gamma_fn(a + b) / (gamma_fn(a) * gamma_fn(b))
        return LimitClass(Regime.LOG_DIVERGENT, const, 0.0)
    if d > 0:
        const = gamma_fn(c) * gamma_fn(d) / (gamma_fn(c - a) * gamma_fn(c - b))
        return LimitClass(Regime.FINITE_LIMIT, const, d)
    const = gamma_fn(c) * gamma_fn(-d) / (gamma_fn(a) * gamma_fn(b))
    return LimitClass(Regime.POWER_DIVERGENT, const, d)
