"""Uniform space-time grids shared by residual scans and the FD solver."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid over [x_lo, x_hi] x [t0, t1].

    ``nt`` is only used by residual scans (it defaults to ``nx``); ``safety``
    is the time-step safety factor of the FD solver.
    """

    x_lo: float
    x_hi: float
    nx: int
    t0: float
    t1: float
    nt: int | None = None
    safety: float = 0.9

    def __post_init__(self):
        if not self.x_lo < self.x_hi:
            raise ValueError("need x_lo < x_hi")
        if not self.t0 < self.t1:
            raise ValueError("need t0 < t1")
        if self.nx < 8:
            raise ValueError("need nx >= 8")
        if self.nt is not None and self.nt < 1:
            raise ValueError("need nt >= 1")
        if not 0 < self.safety <= 1:
            raise ValueError("safety must lie in (0, 1]")

    @property
    def n_time(self) -> int:
        return self.nx if self.nt is None else self.nt

    @property
    def dx(self) -> float:
        return (self.x_hi - self.x_lo) / (self.nx - 1)

    def x_nodes(self) -> np.ndarray:
        return np.linspace(self.x_lo, self.x_hi, self.nx)

    def t_nodes(self) -> np.ndarray:
        return np.linspace(self.t0, self.t1, self.n_time)

    def mesh(self):
        """(T, X) arrays of shape (n_time, nx)."""
        return np.meshgrid(self.t_nodes(), self.x_nodes(), indexing="ij")

    def with_nx(self, nx: int) -> "GridSpec":
        return replace(self, nx=nx)
