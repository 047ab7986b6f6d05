"""Continuous ground-truth outdoor world.

The heightfield is an analytic composition (plane + Gaussian bumps +
tanh-smoothed step edges) so slopes and topple conditions are exactly
computable. Surface material is a list of regions with a default class
filling the gaps; vegetation instances are vertical cylinders with a
per-kind lidar intensity band.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from . import kernels

__all__ = [
    "SurfaceClass",
    "SURFACE_TABLE",
    "VegetationKind",
    "VegetationInstance",
    "Disk",
    "Polygon",
    "RigidObstacle",
    "TerrainWorld",
    "height_at",
    "surface_at",
    "vegetation_at",
]

GROUND_INTENSITY = 10.0
OBSTACLE_INTENSITY = 88.0

# Per-meter probability that a lidar ray penetrates pliable matter.
PENETRATION = {"TallGrass": 0.5, "Bush": 0.15, "Tree": 0.0}


@dataclass(frozen=True)
class SurfaceClass:
    """Material coefficients governing vibration, slip and surface cost."""

    name: str
    vibration_gain: float
    slip_ratio: float
    traction_cost: float

    def __post_init__(self):
        if not 0 <= self.slip_ratio < 1:
            raise ValueError("slip_ratio must lie in [0, 1)")
        if self.vibration_gain < 0 or not 0 <= self.traction_cost <= 100:
            raise ValueError("bad surface coefficients")


# Defaults preserve the qualitative ordering smooth < grassy < granular.
SURFACE_TABLE = {
    "Asphalt": SurfaceClass("Asphalt", 0.05, 0.02, 5.0),
    "Concrete": SurfaceClass("Concrete", 0.08, 0.03, 8.0),
    "Grass": SurfaceClass("Grass", 0.2, 0.08, 20.0),
    "Mulch": SurfaceClass("Mulch", 0.35, 0.15, 35.0),
    "Mud": SurfaceClass("Mud", 0.5, 0.45, 60.0),
    "Sand": SurfaceClass("Sand", 0.6, 0.35, 65.0),
    "Rocks": SurfaceClass("Rocks", 0.9, 0.25, 80.0),
}

GRANULAR = ("Sand", "Mud", "Rocks")


class VegetationKind(str, enum.Enum):
    TallGrass = "TallGrass"
    Bush = "Bush"
    Tree = "Tree"


@dataclass(frozen=True)
class VegetationInstance:
    """Vertical cylinder of vegetation. Trees are rigid; tall grass yields."""

    kind: VegetationKind
    position: tuple
    radius: float
    height: float
    pliable: bool
    lidar_intensity: float

    def __post_init__(self):
        kind = VegetationKind(self.kind)
        object.__setattr__(self, "kind", kind)
        object.__setattr__(self, "position", (float(self.position[0]), float(self.position[1])))
        if self.radius <= 0 or self.height <= 0:
            raise ValueError("radius and height must be > 0")
        if kind is VegetationKind.Tree and self.pliable:
            raise ValueError("a Tree is never pliable")
        if kind is VegetationKind.TallGrass and not self.pliable:
            raise ValueError("TallGrass is always pliable")
        if self.pliable:
            if not 40 <= self.lidar_intensity <= 70:
                raise ValueError("pliable vegetation intensity must lie in [40, 70]")
        elif kind is VegetationKind.Tree:
            if not 80 <= self.lidar_intensity <= 100:
                raise ValueError("tree intensity must lie in [80, 100]")

    @property
    def p_penetrate(self):
        return PENETRATION[self.kind.value]


def tall_grass(x, y, radius=0.45, height=1.1, intensity=50.0):
    return VegetationInstance(VegetationKind.TallGrass, (x, y), radius, height, True, intensity)


def bush(x, y, radius=0.6, height=1.0, intensity=62.0):
    return VegetationInstance(VegetationKind.Bush, (x, y), radius, height, True, intensity)


def tree(x, y, radius=0.3, height=4.0, intensity=90.0):
    return VegetationInstance(VegetationKind.Tree, (x, y), radius, height, False, intensity)


@dataclass(frozen=True)
class Disk:
    cx: float
    cy: float
    radius: float

    def contains(self, x, y):
        return (x - self.cx) ** 2 + (y - self.cy) ** 2 <= self.radius ** 2

    def contains_many(self, xs, ys):
        return (xs - self.cx) ** 2 + (ys - self.cy) ** 2 <= self.radius ** 2


@dataclass(frozen=True)
class Polygon:
    """Convex polygon, vertices counter-clockwise."""

    vertices: tuple

    def __post_init__(self):
        verts = tuple((float(x), float(y)) for x, y in self.vertices)
        if len(verts) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        object.__setattr__(self, "vertices", verts)

    @classmethod
    def rect(cls, xmin, ymin, xmax, ymax):
        return cls(((xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)))

    def contains(self, x, y):
        verts = self.vertices
        n = len(verts)
        for i in range(n):
            x1, y1 = verts[i]
            x2, y2 = verts[(i + 1) % n]
            if (x2 - x1) * (y - y1) - (y2 - y1) * (x - x1) < 0:
                return False
        return True

    def contains_many(self, xs, ys):
        inside = np.ones(np.shape(xs), dtype=bool)
        n = len(self.vertices)
        for i in range(n):
            x1, y1 = self.vertices[i]
            x2, y2 = self.vertices[(i + 1) % n]
            cross = (x2 - x1) * (ys - y1) - (y2 - y1) * (xs - x1)
            inside &= cross >= 0
        return inside


@dataclass(frozen=True)
class RigidObstacle:
    """Rock or wall segment modelled as a vertical cylinder."""

    position: tuple
    radius: float
    height: float


@dataclass(frozen=True)
class TerrainWorld:
    """Immutable world: heightfield parameters, materials, vegetation.

    slope is (base, dh/dx, dh/dy); bumps rows are (cx, cy, amp, sigma);
    steps rows are (nx, ny, offset, amp, width) describing a smoothed
    step amp * 0.5 * (1 + tanh((n . p - offset) / width)).
    """

    bounds: tuple  # (xmin, xmax, ymin, ymax)
    seed: int = 0
    slope: tuple = (0.0, 0.0, 0.0)
    bumps: tuple = ()
    steps: tuple = ()
    regions: tuple = ()  # ((shape, class_name), ...) later entries win
    vegetation: tuple = ()
    obstacles: tuple = ()
    default_surface: str = "Grass"
    surface_table: dict = field(default_factory=lambda: dict(SURFACE_TABLE))
    challenge_regions: tuple = ()  # shapes a straight crossing must meet

    def __post_init__(self):
        xmin, xmax, ymin, ymax = self.bounds
        if not (xmax > xmin and ymax > ymin):
            raise ValueError("degenerate bounds")
        for _, name in self.regions:
            if name not in self.surface_table:
                raise ValueError(f"unknown surface class {name!r}")
        object.__setattr__(self, "bumps", tuple(tuple(map(float, b)) for b in self.bumps))
        object.__setattr__(self, "steps", tuple(tuple(map(float, s)) for s in self.steps))

    # --- packed arrays for the kernels ---------------------------------

    def packed(self):
        cache = getattr(self, "_packed", None)
        if cache is None:
            slope = np.array(self.slope, dtype=np.float64)
            bumps = np.array(self.bumps, dtype=np.float64).reshape(-1, 4)
            steps = np.array(self.steps, dtype=np.float64).reshape(-1, 5)

            def base_at(x, y):
                return float(kernels.ref.heightfield(
                    np.array([x]), np.array([y]), slope, bumps, steps)[0])

            cyls = []
            for veg in self.vegetation:
                base = base_at(veg.position[0], veg.position[1])
                cyls.append((veg.position[0], veg.position[1], veg.radius,
                             base, base + veg.height, veg.lidar_intensity,
                             veg.p_penetrate))
            for ob in self.obstacles:
                base = base_at(ob.position[0], ob.position[1])
                cyls.append((ob.position[0], ob.position[1], ob.radius,
                             base, base + ob.height, OBSTACLE_INTENSITY, 0.0))
            cyls = np.array(cyls, dtype=np.float64).reshape(-1, 7)
            cache = (slope, bumps, steps, cyls, self._height_upper_bound(slope, bumps, steps))
            object.__setattr__(self, "_packed", cache)
        return cache

    def obstacle_arrays(self):
        """(positions (O,2), radius (O,)) of rigid obstacles, cached."""
        cache = getattr(self, "_obs_arrays", None)
        if cache is None:
            if self.obstacles:
                pos = np.array([o.position for o in self.obstacles])
                rad = np.array([o.radius for o in self.obstacles])
            else:
                pos = np.zeros((0, 2))
                rad = np.zeros(0)
            cache = (pos, rad)
            object.__setattr__(self, "_obs_arrays", cache)
        return cache

    def veg_arrays(self):
        """(positions (V,2), radius (V,), pliable (V,), tree (V,)) cached."""
        cache = getattr(self, "_veg_arrays", None)
        if cache is None:
            if self.vegetation:
                pos = np.array([v.position for v in self.vegetation])
                rad = np.array([v.radius for v in self.vegetation])
                pli = np.array([v.pliable for v in self.vegetation], dtype=bool)
                tr = np.array([v.kind is VegetationKind.Tree for v in self.vegetation], dtype=bool)
            else:
                pos = np.zeros((0, 2))
                rad = np.zeros(0)
                pli = np.zeros(0, dtype=bool)
                tr = np.zeros(0, dtype=bool)
            cache = (pos, rad, pli, tr)
            object.__setattr__(self, "_veg_arrays", cache)
        return cache

    def _height_upper_bound(self, slope, bumps, steps):
        xmin, xmax, ymin, ymax = self.bounds
        corners = [slope[0] + slope[1] * x + slope[2] * y
                   for x in (xmin, xmax) for y in (ymin, ymax)]
        h = max(corners)
        if bumps.size:
            h += float(np.sum(np.abs(bumps[:, 2])))
        if steps.size:
            h += float(np.sum(np.maximum(steps[:, 3], 0.0)))
        return h + 1e-9


def height_at(world, x, y):
    """Exact heightfield value; out-of-bounds points clamp to the border."""
    xmin, xmax, ymin, ymax = world.bounds
    x = min(max(x, xmin), xmax)
    y = min(max(y, ymin), ymax)
    slope, bumps, steps, _, _ = world.packed()
    return float(kernels.heightfield(
        np.array([x]), np.array([y]), slope, bumps, steps)[0])


def heights_at(world, xs, ys):
    """Vectorized heightfield over arrays (no bounds clamping)."""
    slope, bumps, steps, _, _ = world.packed()
    shape = np.shape(xs)
    xs = np.ascontiguousarray(np.ravel(xs), dtype=np.float64)
    ys = np.ascontiguousarray(np.ravel(ys), dtype=np.float64)
    return kernels.heightfield(xs, ys, slope, bumps, steps).reshape(shape)


def surface_at(world, x, y):
    """Material at a point: the last-listed containing region wins."""
    name = world.default_surface
    for shape, cls_name in world.regions:
        if shape.contains(x, y):
            name = cls_name
    return world.surface_table[name]


def surfaces_at(world, xs, ys):
    """Vectorized surface lookup; returns an array of class names."""
    names = np.full(np.shape(xs), world.default_surface, dtype=object)
    for shape, cls_name in world.regions:
        names[shape.contains_many(xs, ys)] = cls_name
    return names


def vegetation_at(world, x, y):
    """Nearest instance whose disk contains the point, else None.

    Distance ties keep the earlier-listed instance.
    """
    pos, rad, _, _ = world.veg_arrays()
    if pos.shape[0] == 0:
        return None
    d = (pos[:, 0] - x) ** 2 + (pos[:, 1] - y) ** 2
    containing = d <= rad ** 2
    if not np.any(containing):
        return None
    d = np.where(containing, d, np.inf)
    return world.vegetation[int(np.argmin(d))]


def inside_pliable(world, x, y):
    """Whether the point lies inside any pliable vegetation disk."""
    pos, rad, pli, _ = world.veg_arrays()
    if pos.shape[0] == 0:
        return False
    d = (pos[:, 0] - x) ** 2 + (pos[:, 1] - y) ** 2
    return bool(np.any(pli & (d <= rad ** 2)))


def terrain_slope(world, x, y, eps=0.05):
    """Finite-difference slope magnitude of the heightfield, m per m."""
    hx = (height_at(world, x + eps, y) - height_at(world, x - eps, y)) / (2 * eps)
    hy = (height_at(world, x, y + eps) - height_at(world, x, y - eps)) / (2 * eps)
    return float(np.hypot(hx, hy))
