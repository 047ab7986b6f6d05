"""Extended dynamic-window planner.

Velocities reachable within one acceleration window are sampled on a
grid, rolled out as constant-(v, w) unicycle arcs, and scored with a
weighted objective that blends goal heading, obstacle clearance,
forward speed, and whichever traversability cost maps are active.
The argmax command wins, with a fixed deterministic tie-break.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from . import kernels
from .gridmap import bilinear_sample
from .switching import PerceptionModuleId

__all__ = [
    "VelocityCommand",
    "Weights",
    "VelocityWindow",
    "Trajectory",
    "PlannerConfig",
    "PlanResult",
    "dynamic_window",
    "rollout",
    "objective",
    "plan",
    "plan_ex",
    "occupancy_edt",
]


@dataclass(frozen=True)
class VelocityCommand:
    v: float
    omega: float


@dataclass(frozen=True)
class Weights:
    """Objective weights: heading, clearance, speed, elevation, vegetation."""

    alpha: float = 1.0
    beta: float = 0.6
    gamma: float = 0.3
    delta: float = 0.8
    theta: float = 0.8

    def __post_init__(self):
        if min(self.alpha, self.beta, self.gamma, self.delta, self.theta) < 0:
            raise ValueError("weights must be nonnegative")

    def scaled(self, c):
        return Weights(self.alpha * c, self.beta * c, self.gamma * c,
                       self.delta * c, self.theta * c)


@dataclass(frozen=True)
class VelocityWindow:
    v_range: tuple
    w_range: tuple
    nv: int
    nw: int

    def __post_init__(self):
        if self.nv < 2 or self.nw < 2:
            raise ValueError("sample grid must be at least 2 x 2")

    def samples(self):
        """Paired (vs, ws) arrays; index iv * nw + iw, v-major ascending."""
        vs = np.linspace(self.v_range[0], self.v_range[1], self.nv)
        ws = np.linspace(self.w_range[0], self.w_range[1], self.nw)
        return np.repeat(vs, self.nw), np.tile(ws, self.nv)


@dataclass(frozen=True)
class Trajectory:
    """Constant-command arc: rows (x, y, yaw, t), starting at t = 0."""

    poses: np.ndarray

    def __post_init__(self):
        poses = np.ascontiguousarray(self.poses, dtype=np.float64)
        poses.setflags(write=False)
        object.__setattr__(self, "poses", poses)


@dataclass(frozen=True)
class PlannerConfig:
    weights: Weights = field(default_factory=Weights)
    nv: int = 11
    nw: int = 21
    horizon: float = 2.0
    dt: float = 0.1
    dt_window: float = 0.25
    clearance_cap: float = 1.5
    near_goal_dist: float = 1.0


@dataclass(frozen=True)
class PlanResult:
    command: VelocityCommand
    recovery: bool
    window: VelocityWindow
    scores: np.ndarray
    best_index: int


def dynamic_window(current, limits, dt_window, nv=11, nw=21, gait=None):
    """Reachable velocity box around the current command.

    No reverse: the linear range floors at zero. For a legged robot the
    gait's max-speed multiplier shrinks the top speed before windowing.
    """
    v_max = limits.v_max * (gait.max_speed if gait is not None else 1.0)
    v_lo = max(0.0, current.v - limits.a_v * dt_window)
    v_hi = min(v_max, current.v + limits.a_v * dt_window)
    v_lo = min(v_lo, v_hi)
    w_hi = min(limits.omega_max, current.omega + limits.a_omega * dt_window)
    w_lo = max(-limits.omega_max, current.omega - limits.a_omega * dt_window)
    return VelocityWindow((v_lo, v_hi), (w_lo, w_hi), nv, nw)


def rollout(state, command, horizon, dt):
    """Forward-integrate the unicycle under a constant command."""
    n = int(round(horizon / dt))
    poses = np.empty((n + 1, 4))
    x, y, yaw = state.x, state.y, state.yaw
    poses[0] = (x, y, yaw, 0.0)
    for k in range(1, n + 1):
        x = x + command.v * math.cos(yaw) * dt
        y = y + command.v * math.sin(yaw) * dt
        yaw = yaw + command.omega * dt
        poses[k] = (x, y, yaw, k * dt)
    return Trajectory(poses)


def occupancy_edt(occupancy):
    """Distance (m) from each cell center to the nearest occupied cell."""
    occ = occupancy.values != 0.0
    if not np.any(occ):
        return np.full(occ.shape, np.inf)
    return ndimage.distance_transform_edt(~occ, sampling=occupancy.resolution)


def _actives(outputs, decision):
    surf_on = ((PerceptionModuleId.TerraPn in decision or PerceptionModuleId.ProNav in decision)
               and outputs.surface_cost is not None)
    elev_on = PerceptionModuleId.Terp in decision and outputs.elevation_cost is not None
    veg_on = PerceptionModuleId.Vern in decision and outputs.vegetation_cost is not None
    return surf_on, elev_on, veg_on


def objective(command, trajectory, outputs, goal, weights, decision,
              limits, config=None, edt=None):
    """Score one rolled-out command; -inf when the arc is in collision.

    Heading rewards alignment with the goal at the arc end (progress by
    distance once the goal is within reach); clearance saturates at the
    cap; cost maps average along the arc; inactive modules contribute
    their neutral term value so they cannot move the argmax.
    """
    cfg = config or PlannerConfig()
    occ = outputs.occupancy
    if edt is None:
        edt = occupancy_edt(occ)
    surf_on, elev_on, veg_on = _actives(outputs, decision)
    n = occ.size_n
    res = occ.resolution
    x0, y0 = occ.x0, occ.y0

    min_clear = np.inf
    sums = {"s": 0.0, "e": 0.0, "g": 0.0}
    cnts = {"s": 0, "e": 0, "g": 0}
    poses = trajectory.poses
    for k in range(1, poses.shape[0]):
        x, y = poses[k, 0], poses[k, 1]
        col = int(math.floor((x - x0) / res))
        row = int(math.floor((y - y0) / res))
        if 0 <= col < n and 0 <= row < n:
            if occ.values[row, col] != 0.0:
                return -np.inf
            d = edt[row, col]
            if d < limits.footprint_radius:
                return -np.inf
            min_clear = min(min_clear, d)
        else:
            min_clear = min(min_clear, cfg.clearance_cap)
        if surf_on:
            val = bilinear_sample(outputs.surface_cost, x, y)
            if val is not None:
                sums["s"] += val
                cnts["s"] += 1
        if elev_on:
            val = bilinear_sample(outputs.elevation_cost, x, y)
            if val is not None:
                sums["e"] += val
                cnts["e"] += 1
        if veg_on:
            val = bilinear_sample(outputs.vegetation_cost, x, y)
            if val is not None:
                sums["g"] += val
                cnts["g"] += 1

    xe, ye, yawe = poses[-1, 0], poses[-1, 1], poses[-1, 2]
    d_start = math.hypot(goal[0] - poses[0, 0], goal[1] - poses[0, 1])
    if d_start < cfg.near_goal_dist:
        head = 1.0 - min(math.hypot(goal[0] - xe, goal[1] - ye), 1.0)
    else:
        err = math.atan2(goal[1] - ye, goal[0] - xe) - yawe
        err = math.atan2(math.sin(err), math.cos(err))
        head = 1.0 - abs(err) / math.pi
    obs = min(min_clear / cfg.clearance_cap, 1.0)
    vel = command.v / limits.v_max
    surface = (sums["s"] / cnts["s"]) / 100.0 if surf_on and cnts["s"] > 0 else 0.0
    elevation = 1.0 - (sums["e"] / cnts["e"]) / 100.0 if elev_on and cnts["e"] > 0 else 1.0
    vegterm = 1.0 - (sums["g"] / cnts["g"]) / 100.0 if veg_on and cnts["g"] > 0 else 1.0
    w = weights
    return (w.alpha * head * (1.0 - surface) + w.beta * obs + w.gamma * vel
            + w.delta * elevation + w.theta * vegterm)


_DUMMY_VALS = np.zeros((1, 1))
_DUMMY_OK = np.zeros((1, 1), dtype=bool)


@dataclass(frozen=True)
class PlanContext:
    """Kernel-ready arrays derived from PerceptionOutputs, reusable
    across plan ticks until the next perception update."""

    occ_u8: np.ndarray
    edt: np.ndarray


def build_context(outputs, edt=None):
    occ = outputs.occupancy
    if edt is None:
        edt = occupancy_edt(occ)
    return PlanContext(
        np.ascontiguousarray((occ.values != 0.0).astype(np.uint8)),
        np.ascontiguousarray(np.where(np.isfinite(edt), edt, 1e30)),
    )


def plan_ex(state, goal, outputs, decision, limits, config, gait=None, ctx=None):
    """Evaluate the full sample grid and return the argmax with context."""
    window = dynamic_window(VelocityCommand(state.v, state.omega), limits,
                            config.dt_window, config.nv, config.nw, gait)
    vs, ws = window.samples()
    occ = outputs.occupancy
    if ctx is None:
        ctx = build_context(outputs)
    surf_on, elev_on, veg_on = _actives(outputs, decision)

    def arrs(m, on):
        if not on:
            return _DUMMY_VALS, _DUMMY_OK
        return m.values, m.valid

    sv, sk = arrs(outputs.surface_cost, surf_on)
    ev, ek = arrs(outputs.elevation_cost, elev_on)
    gv, gk = arrs(outputs.vegetation_cost, veg_on)

    d_start = math.hypot(goal[0] - state.x, goal[1] - state.y)
    nsteps = int(round(config.horizon / config.dt))
    w = config.weights
    scores = kernels.score_samples(
        vs, ws, state.x, state.y, state.yaw, goal[0], goal[1], limits.v_max,
        nsteps, config.dt, limits.footprint_radius, config.clearance_cap,
        ctx.occ_u8, ctx.edt,
        occ.resolution, occ.x0, occ.y0, occ.size_n,
        sv, sk, surf_on, ev, ek, elev_on, gv, gk, veg_on,
        w.alpha, w.beta, w.gamma, w.delta, w.theta,
        d_start < config.near_goal_dist)

    best = -1
    for i in range(scores.shape[0]):
        if not np.isfinite(scores[i]):
            continue
        if best < 0:
            best = i
            continue
        if scores[i] > scores[best]:
            best = i
        elif scores[i] == scores[best]:
            if vs[i] > vs[best]:
                best = i
            elif vs[i] == vs[best] and abs(ws[i]) < abs(ws[best]):
                best = i
    if best < 0:
        return PlanResult(VelocityCommand(0.0, limits.omega_max / 2.0), True,
                          window, scores, -1)
    return PlanResult(VelocityCommand(float(vs[best]), float(ws[best])), False,
                      window, scores, best)


def plan(state, goal, outputs, decision, limits, config=None, gait=None, ctx=None):
    """Best command on the sampled window (see plan_ex for details)."""
    return plan_ex(state, goal, outputs, decision, limits,
                   config or PlannerConfig(), gait, ctx).command
