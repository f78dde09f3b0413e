"""2-D occupancy costmaps, footprint collision costing and procedural worlds.

Maps are uint8 grids: 255 is lethal, 0 free, 1..254 an exponential inflation
band around obstacles. Grids are stored row-major with row 0 at the minimum
y edge; PGM export flips rows so the file origin is top-left as usual.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache
from typing import NamedTuple

import numpy as np
import shapely
from scipy import ndimage
from shapely.geometry import Point, Polygon

from . import _kernels as K
from .vehicle import State

__all__ = [
    "Costmap", "FeasibilityError", "Footprint", "FootprintCost", "ObstacleSet",
    "SensorModel", "ClutterSpec", "footprint_cost", "generate_cluttered",
    "is_goal_reached", "rasterize", "visible_costmap",
]

LETHAL = 255


class FeasibilityError(RuntimeError):
    """Obstacle rejection sampling exhausted its attempt budget."""


@dataclass(frozen=True)
class ObstacleSet:
    """Circles as (cx, cy, r) triples plus simple polygons as (k, 2) arrays."""
    circles: tuple = ()
    polygons: tuple = ()

    def __post_init__(self):
        circles = tuple((float(c[0]), float(c[1]), float(c[2])) for c in self.circles)
        for _, _, r in circles:
            if not r > 0.0:
                raise ValueError("circle radius must be positive")
        polys = []
        for p in self.polygons:
            a = np.asarray(p, dtype=np.float64)
            if a.ndim != 2 or a.shape[1] != 2 or a.shape[0] < 3:
                raise ValueError("polygon must be a (k>=3, 2) vertex array")
            if not np.isfinite(a).all():
                raise ValueError("polygon vertices must be finite")
            a.setflags(write=False)
            polys.append(a)
        object.__setattr__(self, "circles", circles)
        object.__setattr__(self, "polygons", tuple(polys))

    def to_dict(self) -> dict:
        return {
            "circles": [list(c) for c in self.circles],
            "polygons": [p.tolist() for p in self.polygons],
        }

    @staticmethod
    def from_dict(d: dict) -> "ObstacleSet":
        return ObstacleSet(tuple(tuple(c) for c in d.get("circles", [])),
                           tuple(np.asarray(p) for p in d.get("polygons", [])))


@dataclass(frozen=True)
class Footprint:
    """Robot footprint: a disc of given radius or a polygon in body frame."""
    kind: str = "disc"
    radius: float = 0.25
    vertices: np.ndarray | None = None

    def __post_init__(self):
        if self.kind == "disc":
            if not self.radius > 0.0:
                raise ValueError("disc radius must be positive")
        elif self.kind == "polygon":
            v = np.asarray(self.vertices, dtype=np.float64)
            if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 3:
                raise ValueError("polygon footprint needs a (k>=3, 2) array")
            if not np.isfinite(v).all():
                raise ValueError("footprint vertices must be finite")
            v.setflags(write=False)
            object.__setattr__(self, "vertices", v)
        else:
            raise ValueError(f"unknown footprint kind: {self.kind!r}")


@dataclass(frozen=True)
class SensorModel:
    """Range-limited omnidirectional visibility (no occlusion ray-casting)."""
    range_m: float = 10.0

    def __post_init__(self):
        if not self.range_m > 0.0:
            raise ValueError("sensor range must be positive")


@dataclass(frozen=True)
class Costmap:
    cells: np.ndarray = field(repr=False)
    resolution: float
    origin: tuple  # (x, y) of the minimum corner

    def __post_init__(self):
        c = np.ascontiguousarray(self.cells, dtype=np.uint8)
        if c.ndim != 2:
            raise ValueError("cells must be a 2-D array")
        if not self.resolution > 0.0:
            raise ValueError("resolution must be positive")
        c.setflags(write=False)
        object.__setattr__(self, "cells", c)
        object.__setattr__(self, "origin", (float(self.origin[0]), float(self.origin[1])))

    @property
    def shape(self):
        return self.cells.shape

    @property
    def extent(self):
        """(xmin, ymin, xmax, ymax) covered by the grid."""
        ny, nx = self.cells.shape
        x0, y0 = self.origin
        return (x0, y0, x0 + nx * self.resolution, y0 + ny * self.resolution)

    def cell_index(self, x: float, y: float):
        """(ix, iy) of the cell containing (x, y); may be out of range."""
        ix = int(math.floor((x - self.origin[0]) / self.resolution))
        iy = int(math.floor((y - self.origin[1]) / self.resolution))
        return ix, iy

    def cell_centers(self):
        """Meshgrid arrays (X, Y) of all cell centers."""
        ny, nx = self.cells.shape
        xs = self.origin[0] + (np.arange(nx) + 0.5) * self.resolution
        ys = self.origin[1] + (np.arange(ny) + 0.5) * self.resolution
        return np.meshgrid(xs, ys)

    def to_pgm(self, path):
        """Binary 8-bit PGM, row-major, origin top-left."""
        ny, nx = self.cells.shape
        with open(path, "wb") as f:
            f.write(f"P5\n{nx} {ny}\n255\n".encode("ascii"))
            f.write(np.flipud(self.cells).tobytes())


class FootprintCost(NamedTuple):
    collided: bool
    cost: float


@lru_cache(maxsize=64)
def _disc_offsets(radius: float, resolution: float) -> np.ndarray:
    """Integer cell offsets whose centers lie within radius of the anchor
    cell center. Always contains (0, 0)."""
    r = int(math.ceil(radius / resolution))
    offs = [(0, 0)]
    for dx in range(-r, r + 1):
        for dy in range(-r, r + 1):
            if dx == 0 and dy == 0:
                continue
            if math.hypot(dx, dy) * resolution <= radius:
                offs.append((dx, dy))
    return np.ascontiguousarray(np.array(offs, dtype=np.int64))


def footprint_cost(costmap: Costmap, state: State, footprint: Footprint) -> FootprintCost:
    """Worst sampled cell under the footprint, normalized to [0, 1].

    Sampled cells are those whose centers fall inside the footprint (discs
    are anchored at the cell containing the state). A lethal sample or any
    part of the footprint leaving the map counts as a collision.
    """
    if footprint.kind == "disc":
        offs = _disc_offsets(footprint.radius, costmap.resolution)
        c = K.k_footprint_disc(costmap.cells, costmap.origin[0], costmap.origin[1],
                               costmap.resolution, offs, state.x, state.y)
        if c < 0.0:
            return FootprintCost(True, 0.0)
        return FootprintCost(False, float(c))

    rot = np.array([[math.cos(state.theta), -math.sin(state.theta)],
                    [math.sin(state.theta), math.cos(state.theta)]])
    verts = footprint.vertices @ rot.T + np.array([state.x, state.y])
    xmin, ymin, xmax, ymax = costmap.extent
    if (verts[:, 0].min() < xmin or verts[:, 0].max() > xmax
            or verts[:, 1].min() < ymin or verts[:, 1].max() > ymax):
        return FootprintCost(True, 0.0)
    poly = Polygon(verts)
    res = costmap.resolution
    ix0 = int(math.floor((verts[:, 0].min() - xmin) / res))
    ix1 = int(math.floor((verts[:, 0].max() - xmin) / res))
    iy0 = int(math.floor((verts[:, 1].min() - ymin) / res))
    iy1 = int(math.floor((verts[:, 1].max() - ymin) / res))
    xs = xmin + (np.arange(ix0, ix1 + 1) + 0.5) * res
    ys = ymin + (np.arange(iy0, iy1 + 1) + 0.5) * res
    gx, gy = np.meshgrid(xs, ys)
    inside = shapely.contains_xy(poly, gx.ravel(), gy.ravel()).reshape(gx.shape)
    iys, ixs = np.nonzero(inside)
    if len(ixs) == 0:
        ix, iy = costmap.cell_index(state.x, state.y)
        samples = costmap.cells[iy:iy + 1, ix:ix + 1]
    else:
        samples = costmap.cells[iys + iy0, ixs + ix0]
    if (samples == LETHAL).any():
        return FootprintCost(True, 0.0)
    return FootprintCost(False, float(samples.max(initial=0) / 255.0))


def rasterize(obstacles: ObstacleSet, bounds, resolution: float,
              inflation_radius: float = 0.2, inflation_decay: float = 10.0) -> Costmap:
    """Rasterize obstacles onto a grid with an exponential inflation band.

    A cell is lethal iff its center lies inside an obstacle. Non-lethal
    cells within ``inflation_radius`` of a lethal cell get
    round(254 * exp(-inflation_decay * d)) with d the center-to-center
    distance in meters; everything farther is 0.
    """
    xmin, ymin, xmax, ymax = (float(b) for b in bounds)
    if not (xmax > xmin and ymax > ymin):
        raise ValueError("bounds must have positive extent")
    if not resolution > 0.0:
        raise ValueError("resolution must be positive")
    if inflation_radius < 0.0 or inflation_decay < 0.0:
        raise ValueError("inflation parameters must be non-negative")
    nx = int(round((xmax - xmin) / resolution))
    ny = int(round((ymax - ymin) / resolution))
    if nx < 1 or ny < 1:
        raise ValueError("bounds too small for the given resolution")

    xs = xmin + (np.arange(nx) + 0.5) * resolution
    ys = ymin + (np.arange(ny) + 0.5) * resolution
    gx, gy = np.meshgrid(xs, ys)
    lethal = np.zeros((ny, nx), dtype=bool)
    for cx, cy, r in obstacles.circles:
        lethal |= (gx - cx) ** 2 + (gy - cy) ** 2 <= r * r
    for verts in obstacles.polygons:
        poly = Polygon(verts)
        shapely.prepare(poly)
        lethal |= shapely.contains_xy(poly, gx.ravel(), gy.ravel()).reshape(ny, nx)

    cells = np.zeros((ny, nx), dtype=np.uint8)
    cells[lethal] = LETHAL
    if inflation_radius > 0.0 and lethal.any():
        d = ndimage.distance_transform_edt(~lethal) * resolution
        band = ~lethal & (d <= inflation_radius)
        cells[band] = np.round(254.0 * np.exp(-inflation_decay * d[band])).astype(np.uint8)
    return Costmap(cells, resolution, (xmin, ymin))


def visible_costmap(full: Costmap, pose: State, sensor: SensorModel) -> Costmap:
    """Range-limited view: cells beyond the sensor radius read as free.

    Unknown space is treated optimistically (zero cost); there is no
    occlusion model.
    """
    gx, gy = full.cell_centers()
    near = (gx - pose.x) ** 2 + (gy - pose.y) ** 2 <= sensor.range_m ** 2
    cells = np.where(near, full.cells, np.uint8(0))
    return Costmap(cells, full.resolution, full.origin)


def is_goal_reached(state: State, goal, tolerance: float) -> bool:
    """True iff the position lies within the closed goal ball."""
    if not tolerance > 0.0:
        raise ValueError("tolerance must be positive")
    dx = float(goal[0]) - state.x
    dy = float(goal[1]) - state.y
    return bool(np.sqrt(dx * dx + dy * dy) <= tolerance)


# ---------------------------------------------------------------------------
# procedural environments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ClutterSpec:
    """Parameters for seeded obstacle generation.

    ``keepout`` points (start, goals, ...) are kept at least
    ``min_clearance`` away from every obstacle.
    """
    bounds: tuple
    n_obstacles: int
    kind: str = "circle"  # "circle" | "concave"
    min_clearance: float = 1.0
    keepout: tuple = ()
    size_range: tuple = (0.4, 1.2)

    def __post_init__(self):
        if self.kind not in ("circle", "concave"):
            raise ValueError(f"unknown obstacle kind: {self.kind!r}")
        if self.n_obstacles < 0:
            raise ValueError("n_obstacles must be >= 0")
        if not self.min_clearance >= 0.0:
            raise ValueError("min_clearance must be >= 0")
        lo, hi = self.size_range
        if not 0.0 < lo <= hi:
            raise ValueError("size_range must satisfy 0 < lo <= hi")
        object.__setattr__(self, "bounds", tuple(float(b) for b in self.bounds))
        object.__setattr__(self, "keepout",
                           tuple((float(p[0]), float(p[1])) for p in self.keepout))

    def to_dict(self) -> dict:
        return {"bounds": list(self.bounds), "n_obstacles": self.n_obstacles,
                "kind": self.kind, "min_clearance": self.min_clearance,
                "keepout": [list(p) for p in self.keepout],
                "size_range": list(self.size_range)}

    @staticmethod
    def from_dict(d: dict) -> "ClutterSpec":
        return ClutterSpec(tuple(d["bounds"]), int(d["n_obstacles"]),
                           d.get("kind", "circle"),
                           float(d.get("min_clearance", 1.0)),
                           tuple(tuple(p) for p in d.get("keepout", [])),
                           tuple(d.get("size_range", (0.4, 1.2))))


def _star_polygon(rng: np.random.Generator, cx: float, cy: float,
                  r_outer: float) -> np.ndarray:
    """Simple star-shaped polygon with one vertex pulled inward (a notch)."""
    k = int(rng.integers(5, 9))
    base = 2.0 * np.pi * np.arange(k) / k
    ang = base + rng.uniform(-0.3, 0.3, k) * (2.0 * np.pi / k) + rng.uniform(0.0, 2.0 * np.pi)
    radii = r_outer * rng.uniform(0.55, 1.0, k)
    radii[int(rng.integers(0, k))] *= rng.uniform(0.12, 0.28)
    return np.c_[cx + radii * np.cos(ang), cy + radii * np.sin(ang)]


def _has_reflex(verts: np.ndarray) -> bool:
    v = verts
    n = len(v)
    area2 = 0.0
    crosses = np.empty(n)
    for i in range(n):
        a, b, c = v[i - 1], v[i], v[(i + 1) % n]
        crosses[i] = (b[0] - a[0]) * (c[1] - b[1]) - (b[1] - a[1]) * (c[0] - b[0])
        area2 += a[0] * b[1] - b[0] * a[1]
    if area2 < 0.0:  # clockwise: reflex vertices have positive cross
        crosses = -crosses
    return bool((crosses < 0.0).any())


def generate_cluttered(seed: int, spec: ClutterSpec) -> ObstacleSet:
    """Seeded rejection sampling of circles or concave (notched) polygons.

    Raises FeasibilityError when 10^4 attempts cannot place all obstacles
    while honoring the keepout clearances.
    """
    rng = np.random.default_rng(np.random.SeedSequence([int(seed) & (2**64 - 1), 0x0b5]))
    xmin, ymin, xmax, ymax = spec.bounds
    circles: list = []
    polygons: list = []
    attempts = 0
    while len(circles) + len(polygons) < spec.n_obstacles:
        attempts += 1
        if attempts > 10_000:
            raise FeasibilityError(
                f"could not place {spec.n_obstacles} obstacles in 10^4 attempts")
        size = rng.uniform(*spec.size_range)
        cx = rng.uniform(xmin + size, xmax - size)
        cy = rng.uniform(ymin + size, ymax - size)
        if spec.kind == "circle":
            ok = all(math.hypot(cx - px, cy - py) >= size + spec.min_clearance
                     for px, py in spec.keepout)
            if ok:
                circles.append((cx, cy, size))
        else:
            verts = _star_polygon(rng, cx, cy, size)
            if not _has_reflex(verts):
                continue
            poly = Polygon(verts)
            if not poly.is_valid:
                continue
            ok = all(poly.distance(Point(px, py)) >= spec.min_clearance
                     for px, py in spec.keepout)
            if ok:
                polygons.append(verts)
    return ObstacleSet(tuple(circles), tuple(polygons))
