"""Built-in scenario worlds and fixture terrains.

Each builder returns a world plus start/goal whose dominant challenges
match one benchmark setting: pliable grass on asphalt, granular dunes,
rocks with trees, terraced slopes with mulch, a slope-to-concrete
transition, and a lawn/tall-grass/pavement sequence. Patch placement
jitters with the seed; the inventory (counts per class and kind) is a
pure function of the scenario id.
"""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .world import (
    Disk,
    Polygon,
    RigidObstacle,
    SurfaceClass,
    TerrainWorld,
    tall_grass,
    tree,
)

__all__ = [
    "ScenarioSetup",
    "build_scenario",
    "scenario_inventory",
    "inventory_checksum",
    "world_to_config",
    "world_from_config",
    "make_gait_fixture",
    "make_step_fixture",
    "SCENARIO_ROBOT_KINDS",
]

BOUNDS = (-5.0, 23.0, -9.0, 9.0)
START = (0.0, 0.0, 0.0)
GOAL_X = 16.5

SCENARIO_ROBOT_KINDS = {1: "Wheeled", 2: "Wheeled", 3: "Legged",
                        4: "Legged", 5: "Legged", 6: "Legged"}


@dataclass(frozen=True)
class ScenarioSetup:
    world: TerrainWorld
    start: tuple  # (x, y, yaw)
    goal: tuple  # (x, y)
    robot_kind: str
    scenario_id: int = 0


def _grass_fill(rng, xmin, xmax, ymin, ymax, spacing=0.8, radius=0.45):
    """Dense tall-grass fill of a rectangle; count depends on geometry only."""
    xs = np.arange(xmin + radius, xmax - radius + 1e-9, spacing)
    ys = np.arange(ymin + radius, ymax - radius + 1e-9, spacing)
    out = []
    for gx in xs:
        for gy in ys:
            jx = rng.uniform(-0.18, 0.18)
            jy = rng.uniform(-0.18, 0.18)
            h = rng.uniform(1.0, 1.3)
            out.append(tall_grass(float(gx + jx), float(gy + jy), radius=radius, height=float(h)))
    return out


def _bump_row(rng, x, y_positions, amp, sigma, jitter=0.3):
    return [(float(x + rng.uniform(-jitter, jitter)),
             float(y + rng.uniform(-jitter, jitter)),
             float(amp * rng.uniform(0.9, 1.1)), float(sigma))
            for y in y_positions]


def _perimeter_walls(bounds, spacing=1.2, radius=0.5, height=2.0):
    """Rock wall closing the arena so detours cannot leave the bounds."""
    xmin, xmax, ymin, ymax = bounds
    walls = []
    xs = np.arange(xmin, xmax + 1e-9, spacing)
    ys = np.arange(ymin, ymax + 1e-9, spacing)
    for x in xs:
        walls.append(RigidObstacle((float(x), ymin), radius, height))
        walls.append(RigidObstacle((float(x), ymax), radius, height))
    for y in ys[1:-1]:
        walls.append(RigidObstacle((xmin, float(y)), radius, height))
        walls.append(RigidObstacle((xmax, float(y)), radius, height))
    return tuple(walls)


def build_scenario(scenario_id, seed=0):
    """Construct one of the six built-in scenario analogues."""
    if scenario_id not in SCENARIO_ROBOT_KINDS:
        raise ValueError(f"unknown scenario id {scenario_id!r} (expected 1..6)")
    rng = np.random.default_rng((int(seed), int(scenario_id), 0xC0FFEE))
    builder = _BUILDERS[scenario_id]
    world, start, goal = builder(rng, seed)
    return ScenarioSetup(world, start, goal, SCENARIO_ROBOT_KINDS[scenario_id], scenario_id)


def _scenario_1(rng, seed):
    """Asphalt plain with a pliable tall-grass wall; gap at the north end.

    A surface-only planner treats the grass as an obstacle wall and must
    detour through the gap; reading pliability lets a robot drive
    straight through.
    """
    jx = rng.uniform(-0.5, 0.5)
    band = (6.0 + jx, 9.0 + jx, -9.0, 5.5)
    regions = (
        (Polygon.rect(*_rect(BOUNDS)), "Asphalt"),
        (Polygon.rect(band[0], band[2], band[1], band[3]), "Grass"),
    )
    veg = _grass_fill(rng, band[0] + 0.1, band[1] - 0.1, band[2] + 0.4, band[3] - 0.1,
                      spacing=0.75)
    world = TerrainWorld(
        bounds=BOUNDS, seed=seed, regions=regions, vegetation=tuple(veg),
        obstacles=_perimeter_walls(BOUNDS), default_surface="Asphalt",
        challenge_regions=(Polygon.rect(band[0], band[2], band[1], band[3]),),
    )
    goal = (GOAL_X, float(rng.uniform(-0.8, 0.8)))
    return world, START, goal


def _scenario_2(rng, seed):
    """Granular dune belts separated by narrow grassy interdune flats.

    Each belt carries a row of dune bumps whose faces exceed the
    wheeled climb limit; the alternating surface cost is what lets a
    surface-aware planner modulate its speed across the belts.
    """
    belts = ((2.5, 6.5), (7.5, 10.0), (11.0, 13.5))
    regions = [(Polygon.rect(*_rect(BOUNDS)), "Grass")]
    for (xa, xb) in belts:
        regions.append((Polygon.rect(xa, -9.0, xb, 9.0), "Sand"))
    # rolling dunes across the route: steep enough to slip on, gentle
    # enough to drive over
    bumps = []
    for x, y_off in ((5.5, 0.0), (8.5, 1.5), (11.5, -1.5)):
        ys = np.arange(-7.0, 7.1, 3.0) + y_off
        bumps += _bump_row(rng, x, ys, amp=0.42, sigma=0.95, jitter=0.2)
    # steep mounds off the corridor keep the unevenness signal high
    for x in (5.0, 7.5, 10.0, 12.5):
        for ysign in (-1.0, 1.0):
            bumps.append((float(x + rng.uniform(-0.3, 0.3)),
                          float(ysign * rng.uniform(4.2, 5.2)),
                          float(1.3 * rng.uniform(0.95, 1.05)), 0.42))
    world = TerrainWorld(
        bounds=BOUNDS, seed=seed, regions=tuple(regions), bumps=tuple(bumps),
        obstacles=_perimeter_walls(BOUNDS),
        challenge_regions=tuple(Polygon.rect(xa, -9.0, xb, 9.0) for xa, xb in belts),
    )
    goal = (GOAL_X, float(rng.uniform(-0.8, 0.8)))
    return world, START, goal


def _scenario_3(rng, seed):
    """Flat rocks band, then a full-width pliable grass wall with trees."""
    jr = rng.uniform(-0.4, 0.4)
    rocks = Polygon.rect(3.5 + jr, -9.0, 8.0 + jr, 9.0)
    regions = (
        (Polygon.rect(*_rect(BOUNDS)), "Grass"),
        (rocks, "Rocks"),
    )
    gband = (10.5, 13.5, -9.0, 9.0)
    veg = _grass_fill(rng, gband[0] + 0.1, gband[1] - 0.1, gband[2] + 0.4, gband[3] - 0.4,
                      spacing=0.8)
    for ty in (-6.5, -4.0, 3.8, 6.2, -7.8):
        tx = 11.0 + rng.uniform(0.0, 1.6)
        veg.append(tree(float(tx), float(ty + rng.uniform(-0.35, 0.35))))
    world = TerrainWorld(
        bounds=BOUNDS, seed=seed, regions=regions, vegetation=tuple(veg),
        obstacles=_perimeter_walls(BOUNDS),
        challenge_regions=(rocks, Polygon.rect(gband[0], gband[2], gband[1], gband[3])),
    )
    goal = (GOAL_X, float(rng.uniform(-0.8, 0.8)))
    return world, START, goal


def _scenario_4(rng, seed):
    """Terraced mulch slope; the only gentle line runs through tall grass."""
    regions = (
        (Polygon.rect(*_rect(BOUNDS)), "Mulch"),
        (Polygon.rect(4.0, -3.0, 13.0, 3.0), "Grass"),
    )
    gband = (6.0, 10.0, -9.0, 9.0)
    veg = _grass_fill(rng, gband[0] + 0.1, gband[1] - 0.1, gband[2] + 0.4, gband[3] - 0.4,
                      spacing=0.8)
    # gentle full-width terraces, passable by any robot
    steps = ((1.0, 0.0, 5.0, 0.3, 0.6), (1.0, 0.0, 9.0, 0.3, 0.6))
    # steep ridge bumps off the corridor; inside the band they punish
    # wandering away from the centre line
    bumps = []
    for x in (6.8, 9.2):
        bumps += _bump_row(rng, x, (-6.8, -5.0, -3.3, 3.3, 5.0, 6.8), amp=1.3, sigma=0.45)
    world = TerrainWorld(
        bounds=BOUNDS, seed=seed, regions=regions, vegetation=tuple(veg),
        steps=steps, bumps=tuple(bumps), obstacles=_perimeter_walls(BOUNDS),
        challenge_regions=(Polygon.rect(gband[0], gband[2], gband[1], gband[3]),),
    )
    goal = (GOAL_X, float(rng.uniform(-0.6, 0.6)))
    return world, START, goal


def _scenario_5(rng, seed):
    """Scenario-4 style slope section that exits onto flat concrete."""
    regions = (
        (Polygon.rect(*_rect(BOUNDS)), "Mulch"),
        (Polygon.rect(3.0, -2.5, 9.5, 2.5), "Grass"),
        (Polygon.rect(10.0, -9.0, 23.0, 9.0), "Concrete"),
    )
    gband = (4.5, 8.0, -9.0, 9.0)
    veg = _grass_fill(rng, gband[0] + 0.1, gband[1] - 0.1, gband[2] + 0.4, gband[3] - 0.4,
                      spacing=0.8)
    steps = ((1.0, 0.0, 3.5, 0.3, 0.6), (1.0, 0.0, 8.8, -0.3, 0.6))
    bumps = []
    bumps += _bump_row(rng, 5.6, (-6.8, -5.0, -3.4, 3.4, 5.0, 6.8), amp=1.3, sigma=0.45)
    world = TerrainWorld(
        bounds=BOUNDS, seed=seed, regions=regions, vegetation=tuple(veg),
        steps=steps, bumps=tuple(bumps), obstacles=_perimeter_walls(BOUNDS),
        challenge_regions=(Polygon.rect(gband[0], gband[2], gband[1], gband[3]),),
    )
    goal = (GOAL_X, float(rng.uniform(-0.6, 0.6)))
    return world, START, goal


def _scenario_6(rng, seed):
    """Flat lawn, a tall pliable grass belt, then concrete pavement."""
    jx = rng.uniform(-0.4, 0.4)
    gband = (6.0 + jx, 9.5 + jx, -9.0, 9.0)
    regions = (
        (Polygon.rect(*_rect(BOUNDS)), "Grass"),
        (Polygon.rect(10.0, -9.0, 23.0, 9.0), "Concrete"),
    )
    veg = _grass_fill(rng, gband[0] + 0.1, gband[1] - 0.1, gband[2] + 0.4, gband[3] - 0.4,
                      spacing=0.75)
    world = TerrainWorld(
        bounds=BOUNDS, seed=seed, regions=regions, vegetation=tuple(veg),
        obstacles=_perimeter_walls(BOUNDS),
        challenge_regions=(Polygon.rect(gband[0], gband[2], gband[1], gband[3]),),
    )
    goal = (GOAL_X, float(rng.uniform(-0.8, 0.8)))
    return world, START, goal


_BUILDERS = {1: _scenario_1, 2: _scenario_2, 3: _scenario_3,
             4: _scenario_4, 5: _scenario_5, 6: _scenario_6}


def _rect(bounds):
    xmin, xmax, ymin, ymax = bounds
    return xmin, ymin, xmax, ymax


# ---------------------------------------------------------------------------
# fixtures used by behaviour tests


def make_gait_fixture(seed=0):
    """Lawn, then tall grass over a muddy strip, then concrete.

    The mud under the grass forces the most stable gait while crossing;
    the concrete stretch afterwards should trot.
    """
    rng = np.random.default_rng((int(seed), 99, 0xC0FFEE))
    regions = (
        (Polygon.rect(*_rect(BOUNDS)), "Grass"),
        (Polygon.rect(5.0, -9.0, 9.0, 9.0), "Mud"),
        (Polygon.rect(9.0, -9.0, 23.0, 9.0), "Concrete"),
    )
    veg = _grass_fill(rng, 5.3, 8.7, -8.0, 8.0, spacing=0.8)
    world = TerrainWorld(
        bounds=BOUNDS, seed=seed, regions=regions, vegetation=tuple(veg),
        obstacles=_perimeter_walls(BOUNDS),
        challenge_regions=(Polygon.rect(5.0, -9.0, 9.0, 9.0),),
    )
    return ScenarioSetup(world, START, (16.0, 0.0), "Legged", 0)


def make_step_fixture(seed=0):
    """Flat grass world cut by one full-width ledge.

    The ledge face slope sits between the wheeled and legged climb
    limits, so a legged robot crosses and a wheeled one stalls.
    """
    world = TerrainWorld(
        bounds=BOUNDS, seed=seed,
        regions=((Polygon.rect(*_rect(BOUNDS)), "Grass"),),
        steps=((1.0, 0.0, 6.0, 0.5, 0.5),),
        challenge_regions=(Polygon.rect(4.5, -9.0, 7.5, 9.0),),
    )
    return ScenarioSetup(world, START, (12.0, 0.0), "Legged", 0)


# ---------------------------------------------------------------------------
# inventory and config round trip


def scenario_inventory(world):
    """Counts of regions per class, vegetation per kind, and features."""
    inv = {"regions": {}, "vegetation": {}, "obstacles": len(world.obstacles),
           "bumps": len(world.bumps), "steps": len(world.steps)}
    for _, name in world.regions:
        inv["regions"][name] = inv["regions"].get(name, 0) + 1
    for veg in world.vegetation:
        k = veg.kind.value
        inv["vegetation"][k] = inv["vegetation"].get(k, 0) + 1
    return inv


def inventory_checksum(world):
    blob = json.dumps(scenario_inventory(world), sort_keys=True)
    return hashlib.sha256(blob.encode()).hexdigest()


def _shape_to_config(shape):
    if isinstance(shape, Disk):
        return {"type": "disk", "cx": shape.cx, "cy": shape.cy, "radius": shape.radius}
    return {"type": "polygon", "vertices": [list(v) for v in shape.vertices]}


def _shape_from_config(rec):
    if rec["type"] == "disk":
        return Disk(rec["cx"], rec["cy"], rec["radius"])
    if rec["type"] == "polygon":
        return Polygon(tuple(tuple(v) for v in rec["vertices"]))
    raise ValueError(f"unknown shape type {rec['type']!r}")


def world_to_config(setup):
    """Serialize a ScenarioSetup to a declarative, editable document."""
    w = setup.world
    return {
        "format": "scenenav-world-v1",
        "bounds": list(w.bounds),
        "seed": w.seed,
        "slope": list(w.slope),
        "bumps": [list(b) for b in w.bumps],
        "steps": [list(s) for s in w.steps],
        "default_surface": w.default_surface,
        "surface_table": {
            name: {"vibration_gain": sc.vibration_gain, "slip_ratio": sc.slip_ratio,
                   "traction_cost": sc.traction_cost}
            for name, sc in w.surface_table.items()
        },
        "regions": [{"shape": _shape_to_config(s), "surface": name} for s, name in w.regions],
        "vegetation": [
            {"kind": v.kind.value, "position": list(v.position), "radius": v.radius,
             "height": v.height, "pliable": v.pliable, "lidar_intensity": v.lidar_intensity}
            for v in w.vegetation
        ],
        "obstacles": [
            {"position": list(o.position), "radius": o.radius, "height": o.height}
            for o in w.obstacles
        ],
        "challenge_regions": [_shape_to_config(s) for s in w.challenge_regions],
        "start": list(setup.start),
        "goal": list(setup.goal),
        "robot_kind": setup.robot_kind,
        "scenario_id": setup.scenario_id,
    }


def world_from_config(cfg):
    """Inverse of world_to_config."""
    if cfg.get("format") != "scenenav-world-v1":
        raise ValueError("not a scenenav world config")
    from .world import VegetationInstance, VegetationKind

    table = {
        name: SurfaceClass(name, rec["vibration_gain"], rec["slip_ratio"], rec["traction_cost"])
        for name, rec in cfg["surface_table"].items()
    }
    world = TerrainWorld(
        bounds=tuple(cfg["bounds"]),
        seed=int(cfg["seed"]),
        slope=tuple(cfg["slope"]),
        bumps=tuple(tuple(b) for b in cfg["bumps"]),
        steps=tuple(tuple(s) for s in cfg["steps"]),
        regions=tuple((_shape_from_config(r["shape"]), r["surface"]) for r in cfg["regions"]),
        vegetation=tuple(
            VegetationInstance(VegetationKind(v["kind"]), tuple(v["position"]), v["radius"],
                               v["height"], v["pliable"], v["lidar_intensity"])
            for v in cfg["vegetation"]
        ),
        obstacles=tuple(
            RigidObstacle(tuple(o["position"]), o["radius"], o["height"])
            for o in cfg["obstacles"]
        ),
        default_surface=cfg["default_surface"],
        surface_table=table,
        challenge_regions=tuple(_shape_from_config(s) for s in cfg["challenge_regions"]),
    )
    return ScenarioSetup(world, tuple(cfg["start"]), tuple(cfg["goal"]),
                         cfg["robot_kind"], int(cfg.get("scenario_id", 0)))
