"""Periodic tensor grids on the box [-L, L)^N."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class PeriodicGrid:
    N: int
    M: int
    L: float

    def __post_init__(self):
        if self.N < 1:
            raise ValueError("grid dimension must be >= 1")
        if self.M < 2 or self.M % 2:
            raise ValueError("grid needs an even number of samples per axis")
        if self.L <= 0:
            raise ValueError("box half-width must be positive")

    @property
    def dx(self) -> float:
        return 2.0 * self.L / self.M

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.M,) * self.N

    @property
    def cell_volume(self) -> float:
        return self.dx**self.N

    @cached_property
    def axis(self) -> np.ndarray:
        return -self.L + self.dx * np.arange(self.M)

    @cached_property
    def points(self) -> np.ndarray:
        """Array of shape (M, ..., M, N) with the coordinates of every node."""
        mesh = np.meshgrid(*([self.axis] * self.N), indexing="ij")
        return np.stack(mesh, axis=-1)

    @cached_property
    def radius(self) -> np.ndarray:
        return np.sqrt(np.sum(self.points**2, axis=-1))

    @cached_property
    def wavenumber_norm(self) -> np.ndarray:
        """|xi| on the FFT layout of this grid."""
        k = 2.0 * np.pi * np.fft.fftfreq(self.M, d=self.dx)
        mesh = np.meshgrid(*([k] * self.N), indexing="ij")
        return np.sqrt(sum(m**2 for m in mesh))

    def integrate(self, values: np.ndarray) -> float:
        return float(np.sum(values) * self.cell_volume)

    def sample(self, field) -> np.ndarray:
        return np.asarray(field(self.points), dtype=float)
