"""Supersolution certificates for weighted uniqueness classes.

For phi(x, t) = exp(-lambda t) psi(|x|), psi = (1 + |x|^2)^(-beta/2), the
parabolic certificate asks that

    -(-Delta)^s phi + rho d_t phi = exp(-lambda t) [-(-Delta)^s psi - lambda rho psi] < 0,

and the elliptic one that (-Delta)^s psi + p rho c psi > 0.  The density only
enters through its lower bound, so a passing certificate covers every density
satisfying that bound.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import integrate

from .fraclap import FracOrder, calibrate_radial_constant, neg_flap_psi
from .specfun import HypParams, LimitClass, gamma_fn, limit_classify

TIE = 1e-12
MARGIN = 1e-8
EPS_FRACTION = 0.1
GRID_NODES = 40
COMPARISON_SAMPLES = 64
MAX_DOUBLINGS = 40


class CaseLabel(enum.Enum):
    I = "I"
    II = "II"
    III = "III"
    IV = "IV"
    NONE = "NONE"


class ThresholdError(ValueError):
    pass


class RadiusTooSmallError(ThresholdError):
    """The asymptotic comparison fails at the requested R_epsilon."""


@dataclass(frozen=True)
class DensityModel:
    """Lower-bound data for the density rho.

    Without ``log_correction`` the bound is K (1 + |x|^2)^(-alpha/2); with it,
    K (1 + |x|^2)^(-alpha/2) log(1 + |x|^2), which is meant for alpha = 2s.
    ``rho`` is an optional pointwise density; by default the bound itself
    (shifted by K (1 + |x|^2)^(-alpha/2) in the log case so that it stays positive).
    """

    K: float = 1.0
    alpha: float = 0.0
    log_correction: bool = False
    rho: Callable[[np.ndarray], np.ndarray] | None = None

    def __post_init__(self):
        if not self.K > 0:
            raise ValueError(f"density constant K = {self.K} must be positive")

    def lower_bound(self, r) -> np.ndarray:
        r2 = np.square(np.asarray(r, dtype=float))
        base = self.K * (1.0 + r2) ** (-self.alpha / 2.0)
        if self.log_correction:
            return base * np.log1p(r2)
        return base

    def __call__(self, r) -> np.ndarray:
        if self.rho is not None:
            return np.asarray(self.rho(np.asarray(r, dtype=float)), dtype=float)
        r2 = np.square(np.asarray(r, dtype=float))
        base = self.K * (1.0 + r2) ** (-self.alpha / 2.0)
        if self.log_correction:
            return base * (1.0 + np.log1p(r2))
        return base


@dataclass(frozen=True)
class ProblemSpec:
    fo: FracOrder
    density: DensityModel
    beta: float
    p: float = 1.0
    T: float | None = None
    c0: float | None = None

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"weight exponent beta = {self.beta} must be positive")
        if self.p < 1:
            raise ValueError(f"Lebesgue exponent p = {self.p} must be >= 1")
        if (self.T is None) == (self.c0 is None):
            raise ValueError("set exactly one of the parabolic horizon T or the elliptic floor c0")
        if self.T is not None and not self.T > 0:
            raise ValueError("horizon T must be positive")
        if self.c0 is not None and not self.c0 > 0:
            raise ValueError("elliptic floor c0 must be positive")
        if self.density.log_correction and abs(self.density.alpha - 2 * self.fo.s) > TIE:
            raise ValueError("the log-corrected density is defined for alpha = 2s")

    @property
    def parabolic(self) -> bool:
        return self.T is not None


def classify(spec: ProblemSpec) -> CaseLabel:
    N, s = spec.fo.N, spec.fo.s
    beta, alpha = spec.beta, spec.density.alpha
    if beta <= N - 2 * s + TIE:
        return CaseLabel.I
    if abs(beta - N) <= TIE:
        if alpha < 2 * s - TIE or spec.density.log_correction:
            return CaseLabel.III
        return CaseLabel.NONE
    if beta < N:
        return CaseLabel.II if alpha <= 2 * s + TIE else CaseLabel.NONE
    if alpha + beta <= 2 * s + N + TIE:
        return CaseLabel.IV
    return CaseLabel.NONE


def _pfaff_parameters(beta: float, fo: FracOrder) -> tuple[float, float, float]:
    return -fo.s, beta / 2.0 + fo.s, fo.N / 2.0


def regime_constant(spec: ProblemSpec) -> float:
    """The positive constant C1, C2 or C3 governing the far field of -(-Delta)^s psi."""
    case = classify(spec)
    N, s, beta = spec.fo.N, spec.fo.s, spec.beta
    if case is CaseLabel.II:
        return -gamma_fn(N / 2) * gamma_fn((N - beta) / 2) / (
            gamma_fn(N / 2 + s) * gamma_fn((N - beta) / 2 - s)
        )
    if case is CaseLabel.III:
        return -gamma_fn(beta / 2) / (gamma_fn(-s) * gamma_fn(beta / 2 + s))
    if case is CaseLabel.IV:
        return -gamma_fn(N / 2) * gamma_fn((beta - N) / 2) / (
            gamma_fn(-s) * gamma_fn(beta / 2 + s)
        )
    raise ThresholdError(f"no regime constant for case {case.value}")


def regime_limit(spec: ProblemSpec) -> LimitClass:
    """Limit class of the Pfaff image F(-s, beta/2 + s; N/2; z), z -> 1-."""
    return limit_classify(*_pfaff_parameters(spec.beta, spec.fo))


def _normalized_far_field(spec: ProblemSpec, r: np.ndarray) -> np.ndarray:
    """-F(c-a, b; c; z) divided by the regime normalizer, z = r^2 / (1 + r^2)."""
    a, b, c = _pfaff_parameters(spec.beta, spec.fo)
    lim = regime_limit(spec)
    out = []
    for ri in np.atleast_1d(r):
        z = ri * ri / (1.0 + ri * ri)
        val = HypParams(a, b, c, z).evaluate()
        out.append(-val / lim.normalizer(z))
    return np.array(out)


def comparison_holds(spec: ProblemSpec, eps: float, R: float) -> bool:
    """Asymptotic comparison with margin eps/2 on 64 radii in [R, 8R]."""
    C = regime_constant(spec)
    r = np.geomspace(R, 8 * R, COMPARISON_SAMPLES)
    return bool(np.all(_normalized_far_field(spec, r) <= C + eps / 2.0))


def find_R_epsilon(spec: ProblemSpec, eps: float, start: float = 2.0) -> float:
    R = start
    for _ in range(MAX_DOUBLINGS):
        if comparison_holds(spec, eps, R):
            return R
        R *= 2.0
    raise RadiusTooSmallError(f"no R_epsilon up to {R:.3g} for eps = {eps:.3g}")


def max_abs_flap_psi(spec: ProblemSpec, R: float, nodes: int = 201) -> float:
    """M_{eps,beta}: max of |(-Delta)^s psi| over the closed ball of radius R."""
    r = np.concatenate([np.linspace(0.0, 1.0, 21), np.linspace(1.0, R, nodes)[1:]])
    return float(np.max(np.abs(neg_flap_psi(spec.beta, spec.fo, r))))


def _log_sup(R: float, kappa: float) -> float:
    """sup over x >= 1 + R^2 of x^-kappa log x."""
    x0 = 1.0 + R * R
    if kappa <= 0:
        return math.inf
    if math.log(x0) >= 1.0 / kappa:
        return x0 ** (-kappa) * math.log(x0)
    return 1.0 / (kappa * math.e)


@dataclass
class Thresholds:
    case: CaseLabel
    epsilon: float
    R_epsilon: float
    C_regime: float
    C_check: float
    M: float
    outer: float
    inner: float

    @property
    def value(self) -> float:
        """lambda_min; the elliptic threshold for p c0 K is K times this."""
        return max(self.outer, self.inner)


def compute_thresholds(
    spec: ProblemSpec, epsilon: float | None = None, R_epsilon: float | None = None
) -> Thresholds:
    case = classify(spec)
    if case is CaseLabel.NONE:
        raise ThresholdError("parameters fall in no certified case")
    if case is CaseLabel.I:
        return Thresholds(case, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0)
    fo, K = spec.fo, spec.density.K
    alpha, beta = spec.density.alpha, spec.beta
    C = regime_constant(spec)
    eps = EPS_FRACTION * C if epsilon is None else epsilon
    if not eps > 0:
        raise ThresholdError("epsilon must be positive")
    if R_epsilon is None:
        R = find_R_epsilon(spec, eps)
    else:
        R = R_epsilon
        if not R > 1:
            raise ThresholdError("R_epsilon must exceed 1")
        if not comparison_holds(spec, eps, R):
            raise RadiusTooSmallError(
                f"asymptotic comparison fails at R_epsilon = {R} with margin eps/2"
            )
    C_check = calibrate_radial_constant(float(beta), fo).constant
    M = max_abs_flap_psi(spec, R)
    outer = (C + eps) * C_check / K
    # smallest value of (1 + r^2)^(-(alpha+beta)/2) on the ball of radius R
    decay = (1.0 + R * R) ** (-(alpha + beta) / 2.0) if alpha + beta >= 0 else 1.0
    inner = M / (K * decay)
    if case is CaseLabel.III:
        if spec.density.log_correction:
            inner = 1.0 / (K * fo.s * math.e)
        else:
            outer *= _log_sup(R, (2 * fo.s - alpha) / 2.0)
    return Thresholds(case, eps, R, C, C_check, M, outer, inner)


def lambda_threshold(
    spec: ProblemSpec, epsilon: float | None = None, R_epsilon: float | None = None
) -> float:
    return compute_thresholds(spec, epsilon, R_epsilon).value


@dataclass
class CertificateReport:
    kind: str
    case_label: CaseLabel
    epsilon: float
    R_epsilon: float
    constants: dict
    threshold: float
    parameter: float
    radii: np.ndarray = field(repr=False)
    times: np.ndarray = field(repr=False)
    residuals: np.ndarray = field(repr=False)
    scales: np.ndarray = field(repr=False)
    comparability_C: float = math.nan
    comparability_ok: bool = True
    minimal_parameter: float = math.nan
    verdict: bool = False
    # residual / scale per radius; the positive time factor cancels, so this
    # stays finite when exp(-lambda t) underflows
    scaled: np.ndarray = field(default=None, repr=False)

    @property
    def worst_scaled_residual(self) -> float:
        """max of residual/scale (parabolic, must be < -margin) or min (elliptic)."""
        return float(np.max(self.scaled) if self.kind == "parabolic" else np.min(self.scaled))

    def summary(self) -> dict:
        return {
            "kind": self.kind,
            "case": self.case_label.value,
            "epsilon": self.epsilon,
            "R_epsilon": self.R_epsilon,
            "constants": self.constants,
            "threshold": self.threshold,
            "parameter": self.parameter,
            "minimal_parameter": self.minimal_parameter,
            "worst_scaled_residual": self.worst_scaled_residual,
            "comparability_C": self.comparability_C,
            "comparability_ok": self.comparability_ok,
            "verdict": "pass" if self.verdict else "fail",
        }


def default_radii(R_epsilon: float, nodes: int = GRID_NODES) -> np.ndarray:
    R = max(R_epsilon, 2.0)
    return np.concatenate([[0.0], np.geomspace(1e-2, 10.0 * R, nodes - 1)])


def psi(beta: float, r) -> np.ndarray:
    return (1.0 + np.square(np.asarray(r, dtype=float))) ** (-beta / 2.0)


def _try_thresholds(spec):
    try:
        return compute_thresholds(spec)
    except ThresholdError:
        return None


def _constants(th: Thresholds | None) -> dict:
    if th is None:
        return {}
    return {"C_regime": th.C_regime, "C_check": th.C_check, "M": th.M,
            "outer": th.outer, "inner": th.inner}


def verify_parabolic(
    spec: ProblemSpec, lam: float, radii=None, times=None, thresholds: Thresholds | None = None
) -> CertificateReport:
    """Grid check of -(-Delta)^s phi + rho d_t phi < 0 for phi = exp(-lam t) psi."""
    if not spec.parabolic:
        raise ValueError("verify_parabolic needs a parabolic spec (T set)")
    case = classify(spec)
    th = thresholds if thresholds is not None else _try_thresholds(spec)
    R = th.R_epsilon if th is not None else 2.0
    r = default_radii(R) if radii is None else np.asarray(radii, dtype=float)
    t = np.array([0.0, spec.T / 2, spec.T]) if times is None else np.asarray(times, dtype=float)
    beta = spec.beta
    lap = neg_flap_psi(beta, spec.fo, r)
    w = psi(beta, r)
    core = lap - lam * spec.density.lower_bound(r) * w
    decay = np.exp(-lam * t)[:, None]
    residuals = decay * core[None, :]
    scales = decay * w[None, :]
    # phi + |grad phi| <= C psi with C = 1 + beta/2, since r/(1+r^2) <= 1/2
    C_cmp = 1.0 + beta / 2.0
    grad = beta * r * (1.0 + r * r) ** (-beta / 2.0 - 1.0)
    ratio = (decay * (w + grad)[None, :]) / w[None, :]
    cmp_ok = bool(np.all(ratio <= C_cmp * (1 + 1e-12)))
    threshold = th.value if th is not None else math.inf
    strict = bool(np.all(core <= -MARGIN * w))
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(lap > 0, lap / (spec.density.lower_bound(r) * w), 0.0)
    verdict = (
        case is not CaseLabel.NONE and math.isfinite(threshold) and strict and cmp_ok and lam > 0
    )
    return CertificateReport(
        "parabolic", case,
        th.epsilon if th else math.nan, th.R_epsilon if th else math.nan,
        _constants(th), threshold, lam, r, t, residuals, scales,
        C_cmp, cmp_ok, float(np.max(need)), verdict, core / w,
    )


def verify_elliptic(
    spec: ProblemSpec, radii=None, thresholds: Thresholds | None = None
) -> CertificateReport:
    """Grid check of (-Delta)^s psi + p rho c psi > 0 with rho c >= K(...) c0."""
    if spec.parabolic:
        raise ValueError("verify_elliptic needs an elliptic spec (c0 set)")
    case = classify(spec)
    th = thresholds if thresholds is not None else _try_thresholds(spec)
    R = th.R_epsilon if th is not None else 2.0
    r = default_radii(R) if radii is None else np.asarray(radii, dtype=float)
    beta, K = spec.beta, spec.density.K
    flap = -neg_flap_psi(beta, spec.fo, r)
    w = psi(beta, r)
    lb = spec.density.lower_bound(r)
    residuals = flap + spec.p * spec.c0 * lb * w
    scales = w
    with np.errstate(divide="ignore", invalid="ignore"):
        need = np.where(flap < 0, -flap / (lb / K * w), 0.0)
    threshold = K * th.value if th is not None else math.inf
    strict = bool(np.all(residuals >= MARGIN * scales))
    verdict = case is not CaseLabel.NONE and math.isfinite(threshold) and strict
    return CertificateReport(
        "elliptic", case,
        th.epsilon if th else math.nan, th.R_epsilon if th else math.nan,
        _constants(th), threshold, spec.p * spec.c0 * K, r, np.zeros(1),
        residuals[None, :], scales[None, :], math.nan, True, float(np.max(need)), verdict,
        residuals / w,
    )


@dataclass
class MembershipResult:
    member: bool
    exponent: float
    scan_slope: float
    scan_agrees: bool


def growth_membership(sigma: float, spec: ProblemSpec) -> MembershipResult:
    """Is (1 + |x|^2)^(sigma/2) in L^1 for the weight with beta = N + 2s - alpha?"""
    N, s, alpha = spec.fo.N, spec.fo.s, spec.density.alpha
    if not alpha < 2 * s:
        raise ValueError("growth membership needs alpha < 2s")
    beta = N + 2 * s - alpha
    member = sigma < 2 * s - alpha
    # radial integrand r^{N-1} (1+r^2)^{(sigma-beta)/2}: slope of decade increments
    decades = np.arange(2, 9)
    incr = []
    for k in decades:
        val, _ = integrate.quad(
            lambda u: math.exp(N * u) * (1.0 + math.exp(2 * u)) ** ((sigma - beta) / 2.0),
            k * math.log(10.0), (k + 1) * math.log(10.0),
        )
        incr.append(val)
    slope = float(np.polyfit(decades * math.log(10.0), np.log(incr), 1)[0])
    return MembershipResult(member, sigma - beta + N, slope, (slope < -1e-3) == member)
