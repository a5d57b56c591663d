"""Digital topology of 2D grid masks.

Chessboard distance layers, boundary counts, connected components and
holes, the layer-size inequality ``|S_{i+1}| <= |S_i| - 4 (c - h)``, and a
box-counting estimate of the boundary dimension.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from scipy import ndimage

from .domain import Domain, DomainMask, rasterize
from .grid import GridSpec

_EIGHT = np.ones((3, 3), dtype=bool)
_FOUR = ndimage.generate_binary_structure(2, 1)


def _require_2d(mask: DomainMask) -> None:
    if mask.spec.dim != 2:
        raise ValueError("topology routines are two-dimensional")


def chessboard_distance(grid: np.ndarray) -> np.ndarray:
    """L-infinity distance from each cell to the nearest exterior cell.

    Cells beyond the grid border count as exterior. Exterior cells get 0.
    """
    padded = np.pad(np.asarray(grid, dtype=bool), 1)
    dist = ndimage.distance_transform_cdt(padded, metric="chessboard")
    return dist[1:-1, 1:-1].astype(np.int64)


def _count_holes(grid: np.ndarray) -> int:
    labels, n_bg = ndimage.label(~grid, structure=_FOUR)
    border = np.concatenate([labels[0], labels[-1], labels[:, 0], labels[:, -1]])
    return n_bg - np.unique(border[border > 0]).size


def components_and_holes(mask: DomainMask) -> tuple[int, int]:
    """Count 8-connected components of the mask and 4-connected holes.

    A hole is a component of the complement that does not touch the grid
    border.
    """
    _require_2d(mask)
    grid = mask.grid
    _, c = ndimage.label(grid, structure=_EIGHT)
    return int(c), int(_count_holes(grid))


@dataclass
class LayerDecomposition:
    """Sizes of the distance layers ``S_i`` (``sizes[0]`` is ``|S_1|``)."""

    distance: np.ndarray = field(repr=False)
    sizes: list[int]
    reduced_sizes: list[int]
    components: int
    holes: int

    @property
    def n_boundary(self) -> int:
        return self.sizes[0] if self.sizes else 0

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["i", "size"])
            for i, s in enumerate(self.sizes, start=1):
                w.writerow([i, s])


def distance_layers(mask: DomainMask) -> LayerDecomposition:
    """Chessboard distance layers of the mask.

    ``reduced_sizes[i-1]`` counts the points of ``S_i`` with no neighbour in
    ``S_{i+1}``.
    """
    _require_2d(mask)
    dist = chessboard_distance(mask.grid)
    top = int(dist.max())
    sizes = np.bincount(dist.ravel(), minlength=top + 1)[1:].tolist()
    neigh_max = ndimage.maximum_filter(np.pad(dist, 1), footprint=_EIGHT, mode="constant")[1:-1, 1:-1]
    reduced = [int(np.count_nonzero((dist == i) & (neigh_max <= i))) for i in range(1, top + 1)]
    c, h = components_and_holes(mask)
    return LayerDecomposition(dist, [int(s) for s in sizes], reduced, c, h)


def distance_recurrence_holds(distance: np.ndarray) -> bool:
    """Check ``d(k) = min over the 8 neighbours of d + 1`` at every inside cell."""
    padded = np.pad(distance, 1)
    foot = _EIGHT.copy()
    foot[1, 1] = False
    nmin = ndimage.minimum_filter(padded, footprint=foot, mode="constant", cval=0)[1:-1, 1:-1]
    inside = distance > 0
    return bool(np.all(distance[inside] == nmin[inside] + 1))


def boundary_count(mask: DomainMask) -> int:
    """``N_dOmega``: points of the mask with an exterior 8-neighbour."""
    return int(np.count_nonzero(chessboard_distance(mask.grid) == 1))


@dataclass
class LayerBoundReport:
    components: int
    holes: int
    sizes: list[int]
    violations: list[tuple[int, int, int]]
    per_component: bool = False

    @property
    def holds(self) -> bool:
        return not self.violations


def verify_layer_bound(mask: DomainMask, per_component: bool = False) -> LayerBoundReport:
    """Check ``|S_{i+1}| <= |S_i| - 4 (c - h)`` for consecutive non-empty layers.

    By default ``c`` and ``h`` count all components and holes of the mask.
    With ``per_component=True`` the drop at step ``i`` only counts the
    components that still have points at distance ``i + 1`` (and their
    holes); a component that ends at depth ``i``, such as an isolated
    pixel, then contributes nothing. Violations are reported as
    ``(i, |S_i|, |S_{i+1}|)``.
    """
    layers = distance_layers(mask)
    s = layers.sizes
    if per_component:
        labels, c = ndimage.label(mask.grid, structure=_EIGHT)
        depth = ndimage.maximum(layers.distance, labels, index=np.arange(1, c + 1))
        holes = [_count_holes(labels == j) for j in range(1, c + 1)]
        drops = [4 * sum(1 - h for d, h in zip(depth, holes) if d >= i + 1) for i in range(1, len(s))]
    else:
        drops = [4 * (layers.components - layers.holes)] * (len(s) - 1)
    bad = [(i + 1, s[i], s[i + 1]) for i in range(len(s) - 1) if s[i + 1] > s[i] - drops[i]]
    return LayerBoundReport(layers.components, layers.holes, s, bad, per_component)


def loglog_slope(x: Sequence[float], y: Sequence[float]) -> float:
    """Least-squares slope of ``log y`` against ``log x``."""
    slope, _ = np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)
    return float(slope)


def boundary_dimension_estimate(domain: Domain, n_list: Sequence[int], half_width: float = 2.0) -> float:
    """Box-counting slope of ``N_dOmega(n)`` versus grid resolution ``n``."""
    if len(n_list) < 3:
        raise ValueError("need at least 3 resolutions for a slope estimate")
    counts = [boundary_count(rasterize(domain, GridSpec(n, 1, 2, half_width))) for n in n_list]
    return loglog_slope(n_list, counts)
