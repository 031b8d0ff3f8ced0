"""Forward solver for rho(x) u_t + (-Delta)^s u = 0 on a periodic box.

rho = 1 is advanced exactly in Fourier space.  For variable rho the equation
u_t = -rho^{-1} (-Delta)^s u is split as -a (-Delta)^s u (treated exactly, with
a = min 1/rho) plus the remainder -(1/rho - a)(-Delta)^s u, integrated by the
second-order exponential Runge-Kutta scheme ETD2RK.  For constant rho the
remainder vanishes and the step is exact again.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .fraclap import FracOrder
from .grids import PeriodicGrid
from .heatkernel import BoxTooSmallError, KernelProfile, convolution_solution

STEP_SAFETY = 0.5


class StabilityError(ValueError):
    """The time step violates dt <= 0.5 rho_min / lambda_max."""


class NumericalError(ArithmeticError):
    pass


@dataclass
class EvolutionState:
    u: np.ndarray
    t: float
    step: int
    diagnostics: dict = field(default_factory=dict)


@dataclass
class Trajectory:
    grid: PeriodicGrid
    fo: FracOrder
    states: list

    @property
    def times(self) -> np.ndarray:
        return np.array([st.t for st in self.states])

    @property
    def fields(self) -> np.ndarray:
        return np.stack([st.u for st in self.states])

    @property
    def final(self) -> np.ndarray:
        return self.states[-1].u


def max_eigenvalue(grid: PeriodicGrid, fo: FracOrder) -> float:
    """(pi M / L)^{2s}, an upper bound for |xi|^{2s} on the grid in one axis."""
    return (math.pi * grid.M / grid.L) ** (2 * fo.s)


def stable_step(grid: PeriodicGrid, fo: FracOrder, rho_min: float) -> float:
    return STEP_SAFETY * rho_min / max_eigenvalue(grid, fo)


def _phi1(z):
    small = np.abs(z) < 1e-4
    zs = np.where(small, 1.0, z)
    return np.where(small, 1.0 + z / 2 + z * z / 6, np.expm1(zs) / zs)


def _phi2(z):
    small = np.abs(z) < 1e-3
    zs = np.where(small, 1.0, z)
    return np.where(small, 0.5 + z / 6 + z * z / 24, (np.expm1(zs) - zs) / (zs * zs))


def _diagnostics(u: np.ndarray, grid: PeriodicGrid) -> dict:
    return {"mass": grid.integrate(u), "l2": grid.integrate(u * u)}


def evolve(
    u0: np.ndarray,
    grid: PeriodicGrid,
    fo: FracOrder,
    T: float,
    dt: float,
    rho: Callable[[np.ndarray], np.ndarray] | None = None,
    record_every: int = 1,
    wrap_tol: float | None = None,
) -> Trajectory:
    """March from 0 to T; ``rho`` maps grid points (..., N) to densities (None means 1)."""
    if grid.M & (grid.M - 1):
        raise ValueError("solver grids need a power-of-two resolution")
    if u0.shape != grid.shape:
        raise ValueError("u0 does not match the grid")
    if not (T >= 0 and dt > 0):
        raise ValueError("need T >= 0 and dt > 0")
    sym = grid.wavenumber_norm ** (2 * fo.s)
    if rho is None:
        inv = None
        rho_min = 1.0
    else:
        dens = np.asarray(rho(grid.points), dtype=float)
        if np.any(dens <= 0) or not np.all(np.isfinite(dens)):
            raise ValueError("density must be positive and finite on the grid")
        inv = 1.0 / dens
        rho_min = float(dens.min())
        if np.ptp(inv) == 0.0:
            sym = sym * inv.flat[0]
            inv = None
        elif dt > stable_step(grid, fo, rho_min) * (1 + 1e-12):
            raise StabilityError(
                f"dt = {dt:.3e} exceeds the stable step {stable_step(grid, fo, rho_min):.3e}"
            )
    if wrap_tol is not None:
        _check_wrap(u0, grid, fo, T / rho_min, wrap_tol)

    n_steps = int(math.ceil(T / dt - 1e-12)) if T > 0 else 0
    states = [EvolutionState(u0.copy(), 0.0, 0, _diagnostics(u0, grid))]
    v = np.fft.fftn(u0)
    t = 0.0
    for n in range(1, n_steps + 1):
        h = min(dt, T - t)
        if inv is None:
            v = np.exp(-h * sym) * v
        else:
            v = _etd2rk_step(v, h, sym, inv)
        t = n * dt if n < n_steps else T
        if n % record_every == 0 or n == n_steps:
            u = np.real(np.fft.ifftn(v))
            if not np.all(np.isfinite(u)):
                raise NumericalError(f"non-finite values at step {n}")
            states.append(EvolutionState(u, t, n, _diagnostics(u, grid)))
    return Trajectory(grid, fo, states)


def _etd2rk_step(v, h, sym, inv):
    a = float(inv.min())
    c = -a * sym * h
    E = np.exp(c)
    p1, p2 = h * _phi1(c), h * _phi2(c)
    extra = inv - a

    def nonlin(w):
        lap = np.real(np.fft.ifftn(sym * w))
        return np.fft.fftn(-extra * lap)

    Nu = nonlin(v)
    stage = E * v + p1 * Nu
    return stage + p2 * (nonlin(stage) - Nu)


def _check_wrap(u0, grid, fo, t_eff, tol):
    mask = np.abs(u0) > 0
    if np.any(grid.radius[mask] > grid.L / 2):
        raise BoxTooSmallError("initial data must be supported in the middle half of the box")
    if t_eff == 0:
        return
    kp = KernelProfile(fo)
    lam = t_eff ** (1.0 / (2 * fo.s))
    lost = kp.tail_mass(grid.L / 2 / lam)
    if lost > tol:
        raise BoxTooSmallError(f"wrap-around mass {lost:.2e} exceeds {tol:.1e}")


def _psi(grid: PeriodicGrid, beta: float) -> np.ndarray:
    return (1.0 + grid.radius**2) ** (-beta / 2.0)


def weighted_lp_norm(u, grid: PeriodicGrid, beta: float, p: float = 1.0, times=None) -> float:
    """int |u|^p psi dx for one field, or the space-time version (trapezoid in t)."""
    if p < 1 or beta <= 0:
        raise ValueError("need p >= 1 and beta > 0")
    w = _psi(grid, beta)
    u = np.asarray(u, dtype=float)
    if u.shape == grid.shape:
        return grid.integrate(np.abs(u) ** p * w)
    if times is None:
        raise ValueError("a trajectory norm needs the sample times")
    per_time = np.array([grid.integrate(np.abs(ui) ** p * w) for ui in u])
    return float(np.trapezoid(per_time, np.asarray(times, dtype=float)))


def energy_monitor(
    traj: Trajectory,
    rho: Callable[[np.ndarray], np.ndarray] | None = None,
    phi: Callable[[np.ndarray, float], np.ndarray] | None = None,
    p: float = 2.0,
) -> np.ndarray:
    """E(t) = int rho |u|^p phi(., t) dx along the trajectory."""
    grid = traj.grid
    dens = np.ones(grid.shape) if rho is None else np.asarray(rho(grid.points), dtype=float)
    out = []
    for st in traj.states:
        w = np.ones(grid.shape) if phi is None else np.asarray(phi(grid.points, st.t))
        out.append(grid.integrate(dens * np.abs(st.u) ** p * w))
    return np.array(out)


def convolution_crosscheck(
    u0: np.ndarray, grid: PeriodicGrid, t: float, fo: FracOrder,
    kp: KernelProfile | None = None, tail_tol: float = 1e-6,
) -> float:
    """sup |evolve(u0)(t) - (p(., t) * u0)| / sup |p(., t) * u0| for rho = 1."""
    if t == 0:
        return 0.0
    kp = KernelProfile(fo) if kp is None else kp
    conv = convolution_solution(u0, t, kp, grid, tail_tol=tail_tol)
    ev = evolve(u0, grid, fo, t, t).final
    return float(np.max(np.abs(ev - conv)) / np.max(np.abs(conv)))
