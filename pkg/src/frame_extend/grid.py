"""Sample grids and frequency windows for Fourier extension on a box.

The spatial grid is ``n_r`` equispaced points per dimension on
``[-T, T)^D``; the frequency window holds ``n_lambda`` centered integer
frequencies per dimension. All enumerations are row-major.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np


@dataclass(frozen=True)
class GridSpec:
    """Grid sizes and bounding box.

    Parameters
    ----------
    n_r : int
        Samples per dimension.
    n_lambda : int
        Frequencies per dimension, at most ``n_r``.
    dim : int
        Spatial dimension.
    half_width : float
        The box is ``[-half_width, half_width]^dim``.
    """

    n_r: int
    n_lambda: int
    dim: int = 2
    half_width: float = 2.0

    def __post_init__(self):
        for name in ("n_r", "n_lambda", "dim"):
            v = getattr(self, name)
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        if self.n_lambda > self.n_r:
            raise ValueError(
                f"n_lambda={self.n_lambda} exceeds n_r={self.n_r}; the FFT grid "
                "must contain the frequency window"
            )
        if not self.half_width > 0:
            raise ValueError(f"half_width must be positive, got {self.half_width!r}")

    @property
    def N_R(self) -> int:
        return self.n_r**self.dim

    @property
    def N_lambda(self) -> int:
        return self.n_lambda**self.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n_r,) * self.dim

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_width / self.n_r

    def to_unit(self, x):
        """Map physical coordinates in the box to unit-box coordinates."""
        return (np.asarray(x, dtype=float) + self.half_width) / (2.0 * self.half_width)


def window_1d(n: int) -> np.ndarray:
    """Centered integer frequencies: ``-(n-1)/2..(n-1)/2`` (odd), ``-n/2..n/2-1`` (even)."""
    return np.arange(n) - n // 2


def build_spatial_grid(spec: GridSpec) -> tuple[np.ndarray, np.ndarray]:
    """Enumerate the full sample grid.

    Returns
    -------
    indices : ndarray of int, shape (N_R, dim)
    coords : ndarray of float, shape (N_R, dim)
        ``-T + 2T k / n_r`` per component.
    """
    axes = [np.arange(spec.n_r)] * spec.dim
    idx = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.dim)
    coords = -spec.half_width + spec.spacing * idx
    return idx, coords


def build_freq_window(spec: GridSpec) -> np.ndarray:
    """Frequency multi-indices of the window, shape (N_lambda, dim), lexicographic."""
    axes = [window_1d(spec.n_lambda)] * spec.dim
    return np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, spec.dim)


def flat_index(k: Sequence[int], spec: GridSpec) -> int:
    k = tuple(int(v) for v in k)
    if len(k) != spec.dim:
        raise ValueError(f"expected {spec.dim} components, got {len(k)}")
    if any(v < 0 or v >= spec.n_r for v in k):
        raise IndexError(f"multi-index {k} outside grid of size {spec.n_r}")
    return int(np.ravel_multi_index(k, spec.shape))


def unflatten(i: int, spec: GridSpec) -> tuple[int, ...]:
    if not 0 <= i < spec.N_R:
        raise IndexError(f"flat index {i} outside [0, {spec.N_R})")
    return tuple(int(v) for v in np.unravel_index(int(i), spec.shape))
