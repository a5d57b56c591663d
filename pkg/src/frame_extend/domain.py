"""Spatial domains and their rasterization onto the sample grid."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .grid import GridSpec, build_spatial_grid


class EmptyMaskError(ValueError):
    pass


class MaskFormatError(ValueError):
    pass


@dataclass(frozen=True)
class Domain:
    """A region given by a vectorized membership predicate.

    ``predicate`` takes an array of points with shape ``(..., dim)`` and
    returns a boolean array of shape ``(...)``. Points on the boundary
    count as inside.
    """

    name: str
    predicate: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    dim: int = 2

    def contains(self, points) -> np.ndarray:
        return np.asarray(self.predicate(np.asarray(points, dtype=float)), dtype=bool)


def square(half_side: float = 1.0) -> Domain:
    return Domain("square", lambda p: np.max(np.abs(p), axis=-1) <= half_side)


def diamond(half_diagonal: float = math.sqrt(2.0)) -> Domain:
    return Domain("diamond", lambda p: np.abs(p[..., 0]) + np.abs(p[..., 1]) <= half_diagonal)


def disk(radius: float = 2.0 / math.sqrt(math.pi), name: str = "disk") -> Domain:
    return Domain(name, lambda p: p[..., 0] ** 2 + p[..., 1] ** 2 <= radius**2)


def ring(outer: float = math.sqrt(4.0 / math.pi + 0.25), inner: float = 0.5) -> Domain:
    def pred(p):
        r2 = p[..., 0] ** 2 + p[..., 1] ** 2
        return (r2 <= outer**2) & (r2 >= inner**2)

    return Domain("ring", pred)


def star_radius(theta) -> np.ndarray:
    """Polar boundary of the eight-pointed star, piecewise over 45 degree sectors."""
    t = np.degrees(np.asarray(theta, dtype=float)) % 360.0
    sector = np.floor(t / 45.0).astype(int)
    shift = np.where(sector % 2 == 0, -22.5, 22.5)
    a = np.radians(t + shift)
    b = np.radians(2.0 * t + 2.0 * shift)
    return 1.449**2 / (np.abs(np.cos(a)) + np.abs(np.sin(a)) + 2.0 * np.sqrt(np.abs(np.sin(b)) / 2.0))


def star() -> Domain:
    def pred(p):
        x, y = p[..., 0], p[..., 1]
        return np.hypot(x, y) <= star_radius(np.arctan2(y, x))

    return Domain("star", pred)


def implicit(predicate: Callable[[np.ndarray], np.ndarray], name: str = "implicit", dim: int = 2) -> Domain:
    return Domain(name, predicate, dim)


BUILTIN_DOMAINS: dict[str, Callable[[], Domain]] = {
    "square": square,
    "diamond": diamond,
    "disk": disk,
    "ring": ring,
    "star": star,
    "unit_disk": lambda: disk(1.0, name="unit_disk"),
}

# the five equal-area test shapes
TEST_SHAPES = ("square", "diamond", "disk", "ring", "star")


def builtin_domain(name: str) -> Domain:
    try:
        return BUILTIN_DOMAINS[name]()
    except KeyError:
        raise ValueError(f"unknown domain {name!r}; choose from {sorted(BUILTIN_DOMAINS)}") from None


@dataclass(frozen=True, eq=False)
class DomainMask:
    """Grid points of ``spec`` that fall inside a domain.

    ``inside`` is a flat boolean array over the full grid (row-major) and
    ``samples`` the ascending flat indices where it is true.
    """

    spec: GridSpec
    inside: np.ndarray
    samples: np.ndarray = field(init=False)

    def __post_init__(self):
        inside = np.asarray(self.inside, dtype=bool).ravel()
        if inside.size != self.spec.N_R:
            raise ValueError(f"mask has {inside.size} cells, grid has {self.spec.N_R}")
        inside.setflags(write=False)
        samples = np.flatnonzero(inside)
        samples.setflags(write=False)
        object.__setattr__(self, "inside", inside)
        object.__setattr__(self, "samples", samples)
        if samples.size == 0:
            raise EmptyMaskError("empty mask: no grid point lies inside the domain")
        if samples.size < self.spec.N_lambda:
            warnings.warn(
                f"N_omega={samples.size} < N_lambda={self.spec.N_lambda}: "
                "the least squares problem is underdetermined",
                stacklevel=3,
            )

    @property
    def N_omega(self) -> int:
        return int(self.samples.size)

    @property
    def grid(self) -> np.ndarray:
        """``inside`` reshaped to the grid shape."""
        return self.inside.reshape(self.spec.shape)

    def coords(self) -> np.ndarray:
        """Physical coordinates of the sample points, shape (N_omega, dim)."""
        _, coords = build_spatial_grid(self.spec)
        return coords[self.samples]


def rasterize(domain: Domain, spec: GridSpec) -> DomainMask:
    _, coords = build_spatial_grid(spec)
    return DomainMask(spec, domain.contains(coords))


def mask_domain(mask: DomainMask, name: str = "mask") -> Domain:
    """Domain whose predicate is nearest-grid-cell membership in ``mask``.

    Used to sample points "inside" a raster mask that has no analytic shape.
    """
    spec = mask.spec
    grid = mask.grid

    def pred(p):
        k = np.rint((p + spec.half_width) / spec.spacing).astype(int)
        ok = np.all((k >= 0) & (k < spec.n_r), axis=-1)
        k = np.clip(k, 0, spec.n_r - 1)
        return ok & grid[tuple(np.moveaxis(k, -1, 0))]

    return Domain(name, pred, spec.dim)


def save_mask(mask: DomainMask, path) -> None:
    """Write ``MASK n n`` followed by ``n`` rows of 0/1 characters."""
    if mask.spec.dim != 2:
        raise ValueError("mask files are two-dimensional")
    n = mask.spec.n_r
    rows = ["".join("1" if v else "0" for v in row) for row in mask.grid]
    Path(path).write_text(f"MASK {n} {n}\n" + "\n".join(rows) + "\n")


def load_mask(path, spec: GridSpec) -> DomainMask:
    if spec.dim != 2:
        raise ValueError("mask files are two-dimensional")
    lines = Path(path).read_text().split()
    if len(lines) < 3 or lines[0] != "MASK":
        raise MaskFormatError(f"{path}: missing 'MASK n n' header")
    try:
        rows_n, cols_n = int(lines[1]), int(lines[2])
    except ValueError:
        raise MaskFormatError(f"{path}: malformed header") from None
    body = lines[3:]
    if (rows_n, cols_n) != (spec.n_r, spec.n_r):
        raise MaskFormatError(f"{path}: header says {rows_n}x{cols_n}, grid is {spec.n_r}x{spec.n_r}")
    if len(body) != rows_n:
        raise MaskFormatError(f"{path}: expected {rows_n} rows, found {len(body)}")
    grid = np.zeros((rows_n, cols_n), dtype=bool)
    for i, row in enumerate(body):
        if len(row) != cols_n or set(row) - {"0", "1"}:
            raise MaskFormatError(f"{path}: row {i} must be {cols_n} characters of 0/1")
        grid[i] = np.frombuffer(row.encode(), dtype=np.uint8) == ord("1")
    return DomainMask(spec, grid.ravel())
