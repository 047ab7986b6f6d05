"""Analytic stand-ins for the four perception modules.

Each proxy reads world ground truth (plus seeded noise) but honors the
same output contract a trained model would: elevation, surface and
vegetation cost maps in [0, 100] on the shared grid, a boolean
occupancy map, and a gait recommendation for legged robots. The
interfaces are shaped so a learned model could replace any proxy.
"""

import enum
from dataclasses import dataclass

import numpy as np

from .gridmap import GridMap, gradient_map
from .switching import PerceptionModuleId
from .world import surfaces_at

__all__ = [
    "Gait",
    "PerceptionOutputs",
    "elevation_cost_map",
    "surface_cost_map",
    "gait_recommendation",
    "vegetation_cost_map",
    "occupancy_map",
    "compute_outputs",
    "check_outputs_match_decision",
]

VEG_BASE_COST = {"TallGrass": 10.0, "Bush": 50.0, "Tree": 100.0}
SURFACE_NOISE_STD = 5.0
CONFIDENCE_FLOOR = 0.6
COST_EXPONENT = 1.5


class Gait(enum.Enum):
    """Legged locomotion modes trading speed for stability."""

    Trot = ("Trot", 1.0, 1.0, 2.5)
    Amble = ("Amble", 0.7, 0.7, 1.8)
    StableSlow = ("StableSlow", 0.45, 0.4, 1.2)

    def __init__(self, label, max_speed, roughness, frequency):
        self.label = label
        self.max_speed = max_speed
        self.roughness = roughness
        self.frequency = frequency


@dataclass(frozen=True)
class PerceptionOutputs:
    """Cost maps for the active modules plus occupancy and gait.

    A cost map is present exactly when its module is active; occupancy
    is always present; gait is present when the legged surface module
    runs.
    """

    occupancy: GridMap
    elevation_cost: GridMap = None
    surface_cost: GridMap = None
    vegetation_cost: GridMap = None
    gait: Gait = None


def elevation_cost_map(E, pose, goal, g_max, exponent=COST_EXPONENT):
    """Stability cost from elevation gradients.

    cost = 100 * clamp((g / g_max) ** exponent); a gradient at or past
    the robot's climb/topple limit saturates at 100. pose and goal are
    part of the interface for a trained replacement and do not enter
    the analytic formula. A map without a valid 3 x 3 gradient region
    comes back all-invalid and the planner ignores the term.
    """
    g = gradient_map(E)
    ratio = np.clip(g.values / g_max, 0.0, 1.0)
    cost = 100.0 * np.power(ratio, exponent)
    return GridMap(E.size_n, E.resolution, E.center, cost, g.valid)


def surface_cost_map(world, pose, grid, noise_seed):
    """Traction-cost prior per cell plus seeded Gaussian model error.

    Granular cells on sloped ground cost extra (loose material sheds
    grip on an incline); flat ground carries exactly the table value
    plus noise.
    """
    from .world import GRANULAR, heights_at

    center = (pose[0], pose[1])
    half = grid.size_n * grid.resolution / 2.0
    idx = np.arange(grid.size_n)
    xs = center[0] - half + (idx + 0.5) * grid.resolution
    ys = center[1] - half + (idx + 0.5) * grid.resolution
    xg, yg = np.meshgrid(xs, ys)
    names = surfaces_at(world, xg, yg)
    cost = np.zeros_like(xg)
    granular = np.zeros(xg.shape, dtype=bool)
    for name, sc in world.surface_table.items():
        hit = names == name
        cost[hit] = sc.traction_cost
        if name in GRANULAR:
            granular |= hit
    if np.any(granular):
        eps = 0.5 * grid.resolution
        hxp = heights_at(world, xg + eps, yg)
        hxm = heights_at(world, xg - eps, yg)
        hyp = heights_at(world, xg, yg + eps)
        hym = heights_at(world, xg, yg - eps)
        slope = np.hypot(hxp - hxm, hyp - hym) / (2.0 * eps)
        cost = np.where(granular, cost * (1.0 + 0.8 * np.minimum(slope, 1.0)), cost)
    rng = np.random.default_rng((int(noise_seed), 0x5C05))
    cost = np.clip(cost + rng.normal(0.0, SURFACE_NOISE_STD, cost.shape), 0.0, 100.0)
    valid = np.ones_like(cost, dtype=bool)
    return GridMap(grid.size_n, grid.resolution, center, cost, valid)


def gait_recommendation(q_surf, surface_class, tau_surf):
    """Pick the gait for the sensed roughness and the surface underfoot."""
    name = surface_class.name
    if q_surf > 2.0 * tau_surf or name in ("Rocks", "Mud"):
        return Gait.StableSlow
    if q_surf > tau_surf or name in ("Sand", "Mulch"):
        return Gait.Amble
    return Gait.Trot


def _nearest_vegetation_grid(world, xg, yg):
    """Index of the nearest containing instance per cell, -1 where none."""
    best_idx = np.full(xg.shape, -1, dtype=np.int64)
    best_d = np.full(xg.shape, np.inf)
    for i, veg in enumerate(world.vegetation):
        dx = xg - veg.position[0]
        dy = yg - veg.position[1]
        d = dx * dx + dy * dy
        hit = (d <= veg.radius ** 2) & (d < best_d)
        best_idx[hit] = i
        best_d[hit] = d[hit]
    return best_idx


def vegetation_cost_map(world, cloud, E, pose, grid, classifier_seed,
                        misclassification_rate=0.1, sensor_height=0.75):
    """Vegetation-aware cost from a simulated imperfect classifier.

    Per vegetated cell the true kind survives with probability
    1 - misclassification_rate, else one of the other kinds is drawn;
    confidence is uniform in [0.6, 1.0] but drops to the floor when the
    vegetation overtops the sensor. cost = base(kind) * (2 - confidence),
    clamped to 100; bare cells cost 0.
    """
    center = (pose[0], pose[1])
    half = grid.size_n * grid.resolution / 2.0
    idx = np.arange(grid.size_n)
    xs = center[0] - half + (idx + 0.5) * grid.resolution
    ys = center[1] - half + (idx + 0.5) * grid.resolution
    xg, yg = np.meshgrid(xs, ys)
    veg_idx = _nearest_vegetation_grid(world, xg, yg)

    cost = np.zeros(xg.shape)
    rows, cols = np.nonzero(veg_idx >= 0)  # row-major order, deterministic
    rng = np.random.default_rng((int(classifier_seed), 0xE1))
    kinds = ("TallGrass", "Bush", "Tree")
    u_mis = rng.random(rows.shape[0])
    u_other = rng.random(rows.shape[0])
    u_conf = rng.uniform(CONFIDENCE_FLOOR, 1.0, rows.shape[0])
    for k in range(rows.shape[0]):
        veg = world.vegetation[veg_idx[rows[k], cols[k]]]
        true_kind = veg.kind.value
        if u_mis[k] < misclassification_rate:
            others = [kk for kk in kinds if kk != true_kind]
            kind = others[int(u_other[k] * len(others)) % len(others)]
        else:
            kind = true_kind
        conf = CONFIDENCE_FLOOR if veg.height > sensor_height else u_conf[k]
        cost[rows[k], cols[k]] = min(100.0, VEG_BASE_COST[kind] * (2.0 - conf))
    valid = np.ones(xg.shape, dtype=bool)
    return GridMap(grid.size_n, grid.resolution, center, cost, valid)


def occupancy_map(world, cloud, decision, pose, grid):
    """Boolean no-go grid. Trees, bushes and rigid obstacles always
    block; tall grass blocks only while the vegetation module is off
    (without it, grass-height returns look like obstacles)."""
    center = (pose[0], pose[1])
    n = grid.size_n
    res = grid.resolution
    x0 = center[0] - n * res / 2.0
    y0 = center[1] - n * res / 2.0
    idx = np.arange(n)
    xs = x0 + (idx + 0.5) * res
    ys = y0 + (idx + 0.5) * res
    occ = np.zeros((n, n), dtype=bool)
    vern_on = PerceptionModuleId.Vern in decision
    pad = 0.5 * res

    def stamp(cx, cy, radius):
        r = radius + pad
        c_lo = max(int(np.floor((cx - r - x0) / res)), 0)
        c_hi = min(int(np.floor((cx + r - x0) / res)) + 1, n)
        r_lo = max(int(np.floor((cy - r - y0) / res)), 0)
        r_hi = min(int(np.floor((cy + r - y0) / res)) + 1, n)
        if c_lo >= c_hi or r_lo >= r_hi:
            return
        dx = xs[c_lo:c_hi] - cx
        dy = ys[r_lo:r_hi] - cy
        occ[r_lo:r_hi, c_lo:c_hi] |= (dy[:, None] ** 2 + dx[None, :] ** 2) <= r * r

    for veg in world.vegetation:
        if veg.kind.value == "TallGrass" and vern_on:
            continue
        stamp(veg.position[0], veg.position[1], veg.radius)
    for ob in world.obstacles:
        stamp(ob.position[0], ob.position[1], ob.radius)
    valid = np.ones((n, n), dtype=bool)
    return GridMap(n, res, center, occ.astype(np.float64), valid)


def compute_outputs(world, cloud, E_ground, pose, goal, decision, grid, robot,
                    tau_surf, q_surf, tick_seed, misclassification_rate=0.1,
                    prev_gait=None):
    """Run the active proxies and assemble PerceptionOutputs.

    E_ground is the terrain-return elevation map (vegetation filtered
    out), the input both the stability cost and its gradients rely on.
    """
    elev = surf = vegc = None
    gait = None
    if PerceptionModuleId.Terp in decision:
        # climb limit expressed in this grid's gradient units
        if grid.elev_mode == "fixed":
            g_max = robot.climb_slope_limit * grid.resolution * grid.units_per_meter
        else:
            g_max = robot.max_climb_gradient
        elev = elevation_cost_map(E_ground, pose, goal, g_max)
    if PerceptionModuleId.TerraPn in decision or PerceptionModuleId.ProNav in decision:
        surf = surface_cost_map(world, pose, grid, tick_seed)
    if PerceptionModuleId.ProNav in decision:
        from .world import surface_at

        gait = gait_recommendation(q_surf, surface_at(world, pose[0], pose[1]), tau_surf)
    if PerceptionModuleId.Vern in decision:
        vegc = vegetation_cost_map(world, cloud, E_ground, pose, grid, tick_seed,
                                   misclassification_rate, robot.sensor_height)
    occ = occupancy_map(world, cloud, decision, pose, grid)
    return PerceptionOutputs(occupancy=occ, elevation_cost=elev,
                             surface_cost=surf, vegetation_cost=vegc, gait=gait)


def check_outputs_match_decision(outputs, decision):
    """True when map presence mirrors the active module set exactly."""
    want_elev = PerceptionModuleId.Terp in decision
    want_surf = (PerceptionModuleId.TerraPn in decision
                 or PerceptionModuleId.ProNav in decision)
    want_veg = PerceptionModuleId.Vern in decision
    return ((outputs.elevation_cost is not None) == want_elev
            and (outputs.surface_cost is not None) == want_surf
            and (outputs.vegetation_cost is not None) == want_veg
            and outputs.occupancy is not None)
