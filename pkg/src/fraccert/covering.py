"""Covering of R^N x R^N used to bound the cutoff remainder, and the Riesz potential.

The remainder integrand

    f_R(x, y) = C_{N,s} |u(x)| |phi(x) - phi(y)| |gamma_R(x) - gamma_R(y)| / |x - y|^{N+2s}

vanishes on the region C, so integrating it over A1..A5 bounds
I(R) = int |u| |B(phi, gamma_R)| dx.  For N = 1 the region integrals are nested
adaptive quadratures; for N >= 2 they are Monte Carlo estimates.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy import integrate
from scipy.interpolate import CubicSpline
from scipy.special import roots_legendre

from .fraclap import (
    CutoffFamily,
    Decay,
    FracOrder,
    ScalarField,
    bilinear_form,
    cutoff_flap,
    cutoff_profile,
    flap_pv,
    normalization_constant,
)
from .specfun import gamma_fn

REGIONS = ("A1", "A2", "A3", "A4", "A5")
MC_SAMPLES = 1_000_000
QUAD_RTOL = 1e-7


def _quad(f, a, b, points=None, epsabs=0.0, epsrel=QUAD_RTOL, limit=200):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if math.isinf(b):
            return integrate.quad(f, a, b, epsabs=epsabs, epsrel=epsrel, limit=limit)
        return integrate.quad(f, a, b, points=points, epsabs=epsabs, epsrel=epsrel, limit=limit)


def _piecewise(f, a, b, breaks, **kw) -> float:
    """int_a^b f split at the breakpoints (b may be infinite)."""
    cuts = sorted({a, b, *[p for p in breaks if a < p < b]})
    total = 0.0
    for lo, hi in zip(cuts[:-1], cuts[1:]):
        total += _quad(f, lo, hi, **kw)[0]
    return total


# radial ranges (|x| range, |y| range) with open/closed ends immaterial for integrals
def region_bounds(label: str, R: float) -> tuple[tuple[float, float], tuple[float, float]]:
    return {
        "A1": ((R / 2, math.inf), (0.0, R / 8)),
        "A2": ((0.0, R / 8), (R / 2, math.inf)),
        "A3": ((2 * R, math.inf), (R / 8, R)),
        "A4": ((R / 8, R), (2 * R, math.inf)),
        "A5": ((R / 8, 2 * R), (R / 8, 2 * R)),
    }[label]


def region_membership(x, y, R: float) -> set[str]:
    if not R > 0:
        raise ValueError("covering scale R must be positive")
    ax = float(np.linalg.norm(np.atleast_1d(x)))
    ay = float(np.linalg.norm(np.atleast_1d(y)))
    out = set()
    if ax > R / 2 and ay <= R / 8:
        out.add("A1")
    if ax <= R / 8 and ay > R / 2:
        out.add("A2")
    if ax >= 2 * R and R / 8 < ay < R:
        out.add("A3")
    if R / 8 < ax < R and ay >= 2 * R:
        out.add("A4")
    if R / 8 < ax < 2 * R and R / 8 < ay < 2 * R:
        out.add("A5")
    if (ax <= R / 2 and ay <= R / 2) or (ax >= R and ay >= R):
        out.add("C")
    return out


def _scalar_cutoff(r: float, R: float) -> float:
    return float(cutoff_profile(np.array([abs(r) / R]))[0])


@dataclass
class RemainderResult:
    R: float
    regions: dict
    total: float
    cutoff_term: float
    std_errors: dict = field(default_factory=dict)

    @property
    def region_sum(self) -> float:
        return float(sum(self.regions.values()))


def _integrand_1d(u: ScalarField, phi: ScalarField, R: float, fo: FracOrder):
    cns = normalization_constant(fo)
    expo = 1.0 + 2.0 * fo.s
    uf = lambda x: abs(float(u(np.array([x]))))
    pf = lambda x: float(phi(np.array([x])))

    def f(y, x, ux, px, gx):
        d = abs(x - y)
        if d == 0.0:
            return 0.0
        return cns * ux * abs(px - pf(y)) * abs(gx - _scalar_cutoff(y, R)) / d**expo

    return f, uf, pf


def _region_1d(label, u, phi, R, fo) -> float:
    """2 * [int_{x in X+} int_{y in Y+ u Y-} f], using the symmetry f(x,y) = f(-x,-y)."""
    f, uf, pf = _integrand_1d(u, phi, R, fo)
    (xa, xb), (ya, yb) = region_bounds(label, R)
    feats = [R / 2, R]

    def inner(x):
        ux = uf(x)
        if ux == 0.0:
            return 0.0
        px, gx = pf(x), _scalar_cutoff(x, R)
        g = lambda y: f(y, x, ux, px, gx)
        pos = _piecewise(g, ya, yb, feats + [x])
        neg = _piecewise(lambda y: g(-y), ya, yb, feats + [-x])
        return pos + neg

    return 2.0 * _piecewise(inner, xa, xb, feats + [R / 8, 2 * R])


def _sample_radius(rng, lo, hi, N, n, tail_power):
    """Radii with density ~ r^{N-1} on [lo, hi], or a Pareto tail when hi is infinite."""
    u = rng.random(n)
    if math.isinf(hi):
        r = lo * u ** (-1.0 / tail_power)
        pdf = tail_power * lo**tail_power * r ** (-tail_power - 1.0)
    else:
        r = (lo**N + u * (hi**N - lo**N)) ** (1.0 / N)
        pdf = N * r ** (N - 1) / (hi**N - lo**N)
    return r, pdf


def _sample_points(rng, lo, hi, N, n, tail_power):
    r, pdf_r = _sample_radius(rng, max(lo, 1e-12), hi, N, n, tail_power)
    d = rng.standard_normal((n, N))
    d /= np.linalg.norm(d, axis=1, keepdims=True)
    area = 2.0 * math.pi ** (N / 2) / math.gamma(N / 2)
    # density with respect to Lebesgue measure on R^N
    pdf = pdf_r / (area * r ** (N - 1))
    return r[:, None] * d, pdf


def _region_mc(label, u, phi, R, fo, n, rng) -> tuple[float, float]:
    N = fo.N
    (xa, xb), (ya, yb) = region_bounds(label, R)
    x, px = _sample_points(rng, xa, xb, N, n, tail_power=1.0)
    y, py = _sample_points(rng, ya, yb, N, n, tail_power=2.0 * fo.s)
    d = np.linalg.norm(x - y, axis=1)
    gx = cutoff_profile(np.linalg.norm(x, axis=1) / R)
    gy = cutoff_profile(np.linalg.norm(y, axis=1) / R)
    with np.errstate(divide="ignore", invalid="ignore"):
        val = (
            normalization_constant(fo)
            * np.abs(u(x))
            * np.abs(phi(x) - phi(y))
            * np.abs(gx - gy)
            / d ** (N + 2 * fo.s)
        )
    val = np.where(d > 0, val, 0.0) / (px * py)
    return float(np.mean(val)), float(np.std(val) / math.sqrt(n))


def cutoff_term(u: ScalarField, phi: ScalarField, R: float, fo: FracOrder) -> float:
    """int |u| phi |(-Delta)^s gamma_R| dx (N = 1), from the unit-scale profile."""
    if fo.N != 1:
        raise NotImplementedError("cutoff term quadrature is implemented for N = 1")
    unit = CutoffFamily(1.0)
    xi = np.concatenate([np.linspace(0.0, 3.0, 301), np.geomspace(3.0, 200.0, 200)[1:]])
    g = np.array([cutoff_flap(unit, [v], fo, tol=1e-10) for v in xi])
    table = CubicSpline(xi, g)
    # beyond the table, (-Delta)^s gamma = -C int gamma / |x|^{1+2s} to leading order
    mass = 2.0 * integrate.quad(lambda r: _scalar_cutoff(r, 1.0), 0.0, 1.0, points=[0.5])[0]
    far = -normalization_constant(fo) * mass

    def lap(x):
        a = abs(x) / R
        v = float(table(a)) if a <= xi[-1] else far * a ** (-1.0 - 2 * fo.s)
        return R ** (-2 * fo.s) * v

    f = lambda x: abs(float(u(np.array([x])))) * float(phi(np.array([x]))) * abs(lap(x))
    return 2.0 * _piecewise(f, 0.0, math.inf, [R / 2, R, 200 * R])


def total_remainder(u, phi, R, fo, tol=1e-9) -> float:
    """I(R) = int |u(x)| |B(phi, gamma_R)(x)| dx for even 1-D data."""
    gam = CutoffFamily(R).field()

    def f(x):
        ux = abs(float(u(np.array([x]))))
        if ux == 0.0:
            return 0.0
        return ux * abs(bilinear_form(phi, gam, [x], fo, tol=tol).value)

    return 2.0 * _piecewise(f, 0.0, math.inf, [R / 8, R / 2, R, 2 * R], epsrel=1e-6)


def remainder_integral(
    u: ScalarField,
    phi: ScalarField,
    R: float,
    fo: FracOrder,
    tau: float = 1.0,
    samples: int = MC_SAMPLES,
    seed: int = 0,
) -> RemainderResult:
    """Region integrals I^{A_k}(R), I(R) and the cutoff term, for time-independent u.

    Time enters only as the factor tau = length of the time interval.
    """
    if fo.N == 1:
        regions = {k: tau * _region_1d(k, u, phi, R, fo) for k in REGIONS}
        total = tau * total_remainder(u, phi, R, fo)
        cterm = tau * cutoff_term(u, phi, R, fo)
        return RemainderResult(R, regions, total, cterm)
    regions, errs = {}, {}
    for i, k in enumerate(REGIONS):
        rng = np.random.default_rng([seed, i, int(R * 1000)])
        v, e = _region_mc(k, u, phi, R, fo, samples, rng)
        regions[k], errs[k] = tau * v, tau * e
    return RemainderResult(R, regions, math.nan, math.nan, errs)


class DegenerateFitError(ValueError):
    pass


def decay_rate_fit(values) -> float:
    """Least-squares slope of log I against log R."""
    data = np.asarray(values, dtype=float)
    if data.ndim != 2 or data.shape[0] < 4:
        raise DegenerateFitError("need at least four (R, I) pairs")
    R, I = data[:, 0], data[:, 1]
    if np.any(R <= 0) or np.any(~np.isfinite(I)) or np.any(I <= 0):
        raise DegenerateFitError("values must be positive and finite")
    return float(np.polyfit(np.log(R), np.log(I), 1)[0])


# ---------------------------------------------------------------------------
# Riesz potential

def riesz_constant_classical(fo: FracOrder) -> float:
    """Gamma(N/2 - s) / (4^s pi^{N/2} Gamma(s)); used as a cross-check."""
    N, s = fo.N, fo.s
    return gamma_fn(N / 2 - s) / (4**s * math.pi ** (N / 2) * gamma_fn(s))


def bump(center: float = 0.0, width: float = 1.0, height: float = 1.0) -> ScalarField:
    """Smooth nonnegative bump supported on [center - width, center + width]."""

    def f(x):
        x = np.asarray(x, dtype=float)
        z = (x[..., 0] - center) / width
        out = np.zeros(z.shape)
        inside = np.abs(z) < 1
        out[inside] = height * np.exp(1.0 - 1.0 / (1.0 - z[inside] ** 2))
        return out

    return ScalarField(
        f, 1, Decay.COMPACT, support_radius=abs(center) + width, sup_bound=height,
        features=(abs(center - width), abs(center + width)),
    )


@dataclass
class RieszPotential:
    """phi = k |x|^{2s-N} * F for a 1-D bump F, with k calibrated against (-Delta)^s phi = F."""

    F: ScalarField
    fo: FracOrder
    lo: float
    hi: float
    k: float = 1.0
    table_step: float = 0.005
    _spline: CubicSpline | None = field(default=None, repr=False)
    _slope: CubicSpline | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.fo.N != 1:
            raise NotImplementedError("the Riesz construction is implemented for N = 1")
        if not self.fo.N > 2 * self.fo.s:
            raise ValueError("the Riesz kernel needs N > 2s")
        t, w = roots_legendre(96)
        self._nodes = 0.5 * (self.hi - self.lo) * (t + 1.0) + self.lo
        self._weights = 0.5 * (self.hi - self.lo) * w * self.F(self._nodes[:, None])
        pad = 3.0
        grid = np.arange(self.lo - pad, self.hi + pad + self.table_step / 2, self.table_step)
        vals = np.array([self._direct(x) for x in grid])
        self._spline = CubicSpline(grid, vals)
        self._slope = self._spline.derivative()
        self._table_lo, self._table_hi = grid[0], grid[-1]

    def _direct(self, x: float) -> float:
        """int F(y) |x - y|^{2s-1} dy with the endpoint singularity as a quadrature weight."""
        e = 2 * self.fo.s - 1.0
        Ff = lambda y: float(self.F(np.array([y])))
        total = 0.0
        if x > self.lo:
            b = min(x, self.hi)
            total += _quad_alg(Ff, self.lo, b, x, e, right=True)
        if x < self.hi:
            a = max(x, self.lo)
            total += _quad_alg(Ff, a, self.hi, x, e, right=False)
        return total

    def _far(self, x: np.ndarray) -> np.ndarray:
        e = 2 * self.fo.s - 1.0
        d = np.abs(x[..., None] - self._nodes)
        return np.sum(self._weights * d**e, axis=-1)

    def unscaled(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = (x >= self._table_lo) & (x <= self._table_hi)
        out = np.empty_like(x)
        out[inside] = self._spline(x[inside])
        if np.any(~inside):
            out[~inside] = self._far(x[~inside])
        return out

    def __call__(self, x) -> np.ndarray:
        return self.k * self.unscaled(x)

    def gradient(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        inside = (x >= self._table_lo) & (x <= self._table_hi)
        out = np.empty_like(x)
        out[inside] = self._slope(x[inside])
        if np.any(~inside):
            e = 2 * self.fo.s - 1.0
            d = x[~inside][:, None] - self._nodes
            out[~inside] = np.sum(self._weights * e * np.sign(d) * np.abs(d) ** (e - 1), axis=-1)
        return self.k * out

    def field(self, scale: float | None = None) -> ScalarField:
        k = self.k if scale is None else scale
        return ScalarField(
            lambda x: k * self.unscaled(np.asarray(x)[..., 0]),
            1, Decay.POWER, decay_exponent=1.0 - 2 * self.fo.s,
            features=(abs(self.lo), abs(self.hi)),
        )


def _quad_alg(f, a, b, x, e, right):
    """int_a^b f(y) |x - y|^e dy where x is the endpoint b (right) or a (left)."""
    if b <= a:
        return 0.0
    wvar = (0.0, e) if right else (e, 0.0)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", integrate.IntegrationWarning)
        if (right and x == b) or (not right and x == a):
            return integrate.quad(f, a, b, weight="alg", wvar=wvar, epsabs=1e-14, limit=200)[0]
        return integrate.quad(lambda y: f(y) * abs(x - y) ** e, a, b, epsabs=1e-14, limit=200)[0]


@dataclass
class RieszReport:
    potential: RieszPotential
    k_calibrated: float
    k_classical: float
    residual: float
    C0: float
    C1: float
    far_field: dict
    positive: bool


def riesz_potential(
    F: ScalarField, fo: FracOrder, support: tuple[float, float] = (-1.0, 1.0), tol: float = 1e-9
) -> RieszReport:
    """Build phi = I_{2s} * F, calibrate k_{N,s} and verify the inversion by quadrature."""
    if not fo.N > 2 * fo.s:
        raise ValueError(f"Riesz potential needs N > 2s, got N = {fo.N}, s = {fo.s}")
    pot = RieszPotential(F, fo, *support)
    lo, hi = support
    xs = np.linspace(lo - 1.0, hi + 1.0, 41)
    unscaled = pot.field(1.0)
    L = np.array([flap_pv(unscaled, [x], fo, tol=tol).value for x in xs])
    Fx = F(xs[:, None])
    k = float(np.dot(L, Fx) / np.dot(L, L))
    pot.k = k
    residual = float(np.max(np.abs(k * L - Fx)) / np.max(np.abs(Fx)))
    r = np.concatenate([np.linspace(-5, 5, 201), np.geomspace(5, 1e3, 100), -np.geomspace(5, 1e3, 100)])
    comp = (pot(r) + np.abs(pot.gradient(r))) * (1.0 + np.abs(r) ** (fo.N - 2 * fo.s))
    massF = _quad(lambda y: float(F(np.array([y]))), lo, hi)[0]
    far = {float(x): float(pot(np.array([x]))[0] * x ** (fo.N - 2 * fo.s) / (k * massF)) for x in (20.0, 40.0)}
    positive = bool(np.all(pot(np.linspace(-50, 50, 1001)) > 0))
    return RieszReport(pot, k, riesz_constant_classical(fo), residual,
                       float(np.min(comp)), float(np.max(comp)), far, positive)


# ---------------------------------------------------------------------------
# scaled sup-ratio

@dataclass
class SigmaWindow:
    beta_range: tuple[float, float]
    sigma_upper: float
    hypothesis_ok: bool
    body_ok: bool

    @property
    def flagged(self) -> bool:
        """The hypothesis line and the condition used in the estimates disagree."""
        return self.hypothesis_ok != self.body_ok


class ParameterError(ValueError):
    pass


def sigma_window(N: int, s: float, alpha: float, beta: float) -> SigmaWindow:
    """Admissible sigma for the scaled bound, with density (1 + |x|^2)^(-alpha/2).

    In the exponent convention (1 + |x|^2)^(-a) the conditions read a < s,
    N - 2s + 2a < beta < N and sigma < min(beta - N + 2s - 2a, 2s - 2a, beta, 2s);
    here a = alpha/2.
    """
    a = alpha / 2.0
    lo = max(N - 2 * s + 2 * a, 0.0)
    upper = min(beta - N + 2 * s - 2 * a, 2 * s - 2 * a, beta, 2 * s)
    return SigmaWindow((lo, float(N)), upper, a < s and N > -2 * s + a, N - 2 * s + 2 * a > 0)


@dataclass
class Lemma42Report:
    R_list: list
    sup_ratios: list
    variation: float
    farfield_constants: list
    window: SigmaWindow
    passed: bool


def lemma42_check(
    riesz: RieszReport,
    density,
    R_list,
    sigma: float,
    beta: float,
    max_variation: float = 5.0,
    xs=None,
    tol: float = 1e-8,
) -> Lemma42Report:
    """sup_x R^sigma [|phi (-Delta)^s gamma_R| + |B(phi, gamma_R)|] / (rho phi) per R."""
    fo = riesz.potential.fo
    win = sigma_window(fo.N, fo.s, density.alpha, beta)
    if not (win.beta_range[0] < beta < win.beta_range[1]) or not 0 < sigma < win.sigma_upper:
        raise ParameterError(
            f"sigma = {sigma} or beta = {beta} outside the admissible window {win}"
        )
    phi_field = riesz.potential.field()
    sups, farc = [], []
    for R in R_list:
        cf = CutoffFamily(R)
        pts = np.concatenate([[0.0], np.geomspace(0.05, 50.0 * R, 60)]) if xs is None else np.asarray(xs)
        ratios, far = [], []
        for x in pts:
            phx = float(riesz.potential(np.array([x]))[0])
            lap = cutoff_flap(cf, [x], fo, tol=tol)
            B = bilinear_form(phi_field, cf.field(), [x], fo, tol=tol).value
            rho = float(density.lower_bound(x))
            ratios.append(R**sigma * (abs(phx * lap) + abs(B)) / (rho * phx))
            far.append(R**sigma * abs(lap) * (1.0 + abs(x) ** (2 * fo.s - sigma)))
        sups.append(float(max(ratios)))
        farc.append(float(max(far)))
    variation = max(sups) / min(sups)
    return Lemma42Report(list(R_list), sups, variation, farc, win, variation <= max_variation)
