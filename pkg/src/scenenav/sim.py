"""Closed-loop episode simulation and navigation metrics.

The loop runs sense -> switch -> perceive -> plan -> act at 10 Hz with
sensing and arbitration at 1 Hz. Truth dynamics apply surface slip
(growing with speed on loose ground), halt on over-limit gradients,
and set the robot attitude from the terrain under the footprint.
Episodes are bit-deterministic given (world, config, seed).
"""

import json
import math
from collections import deque
from dataclasses import dataclass, field, replace

import numpy as np

from .gridmap import GridMap
from .perception import Gait, compute_outputs
from .planner import PlannerConfig, VelocityCommand, build_context, plan_ex
from .sensors import (
    GridParams,
    ImuWindow,
    JointWindow,
    LidarParams,
    OdomPose,
    imu_baseline,
    elevation_map_from_cloud,
    intensity_map_from_cloud,
    simulate_imu,
    simulate_imu_batch,
    simulate_joints,
    simulate_joints_batch,
    simulate_lidar,
    simulate_odometry,
    terrain_points,
    vibration_gain_at,
)
from .switching import (
    HysteresisFilter,
    PerceptionModuleId,
    SceneMetrics,
    SwitchDecision,
    Thresholds,
    pliability_metric,
    surface_metric,
    unevenness_metric,
)
from .world import (
    GRANULAR,
    SURFACE_TABLE,
    TerrainWorld,
    Polygon,
    height_at,
    heights_at,
    surface_at,
)

__all__ = [
    "RobotState",
    "RobotSpec",
    "WHEELED_ROBOT",
    "LEGGED_ROBOT",
    "SimConfig",
    "Metrics",
    "EpisodeLog",
    "METHODS",
    "step",
    "run_episode",
    "compute_metrics",
    "calibrate_tau_surf",
    "slip_effective",
]

# Reference scale tying gradient map units to physical slope: the
# default 4 m elevation span maps to [0, 100], i.e. 25 units per meter,
# at the default 0.25 m cell size.
MAP_UNITS_PER_METER = 25.0
REF_RESOLUTION = 0.25

METHODS = ("adventr", "terp_only", "terrapn_only", "pronav_only", "vern_only", "naive")

# seed stream tags
_S_LIDAR = 1
_S_IMU = 2
_S_JOINT = 3
_S_STEP = 4
_S_PERC = 5


_MASK64 = (1 << 64) - 1


def derive_seed(*parts):
    """Stable integer sub-seed for a named stream (splitmix-style mix)."""
    x = 0x9E3779B97F4A7C15
    for p in parts:
        x = (x ^ (int(p) & _MASK64)) * 0xBF58476D1CE4E5B9 & _MASK64
        x = (x ^ (x >> 30)) * 0x94D049BB133111EB & _MASK64
        x ^= x >> 31
    return x >> 1


@dataclass(frozen=True)
class RobotState:
    x: float
    y: float
    yaw: float
    roll: float = 0.0
    pitch: float = 0.0
    v: float = 0.0
    omega: float = 0.0
    kind: str = "Wheeled"
    gait: Gait = None


@dataclass(frozen=True)
class RobotSpec:
    """Platform limits. max_climb_gradient is in map-units per cell at
    the reference scale (divide by 6.25 for physical rise over run)."""

    kind: str
    v_max: float
    omega_max: float
    a_v: float
    a_omega: float
    footprint_radius: float
    topple_limit: float
    max_climb_gradient: float
    sensor_height: float
    pose_noise_gain: float

    @property
    def climb_slope_limit(self):
        return self.max_climb_gradient / (MAP_UNITS_PER_METER * REF_RESOLUTION)


WHEELED_ROBOT = RobotSpec("Wheeled", v_max=1.0, omega_max=1.5, a_v=1.2, a_omega=3.0,
                          footprint_radius=0.45, topple_limit=0.42,
                          max_climb_gradient=1.75, sensor_height=0.8,
                          pose_noise_gain=0.04)
LEGGED_ROBOT = RobotSpec("Legged", v_max=1.2, omega_max=1.8, a_v=1.4, a_omega=3.2,
                         footprint_radius=0.35, topple_limit=0.6,
                         max_climb_gradient=4.7, sensor_height=0.7,
                         pose_noise_gain=0.08)


@dataclass(frozen=True)
class SimConfig:
    dt: float = 0.1
    max_time: float = 120.0
    sense_every: int = 10  # control ticks between sensing/arbitration
    switch_hold: int = 3  # consecutive 1 Hz evaluations before a change
    imu_per_tick: int = 5  # 50 Hz proprioception
    window_len: int = 64
    goal_radius: float = 1.0
    entrapment_ratio: float = 0.1
    entrapment_ticks: int = 30
    stall_ticks: int = 8  # near-zero commands before an escape starts
    stall_rotate_ticks: int = 6  # escape phase 1: rotate in place
    stall_commit_ticks: int = 12  # escape phase 2: drive out straight
    misclassification_rate: float = 0.1
    lidar: LidarParams = field(default_factory=lambda: LidarParams(n_azimuth=180, n_rings=10))
    grid: GridParams = field(default_factory=lambda: GridParams(elev_mode="fixed"))
    planner: PlannerConfig = field(default_factory=PlannerConfig)
    thresholds: Thresholds = None  # tau_surf calibrated when None


@dataclass(frozen=True)
class Metrics:
    success: bool
    mean_velocity: float
    instability_cost: float
    elevation_gradient: float


@dataclass
class TickRecord:
    t: float
    state: RobotState
    odom: OdomPose
    command: VelocityCommand
    metrics: SceneMetrics
    decision: SwitchDecision
    imu: np.ndarray
    height: float
    gait: Gait = None
    recovery: bool = False

    def to_record(self):
        return {
            "t": self.t,
            "state": [self.state.x, self.state.y, self.state.yaw, self.state.roll,
                      self.state.pitch, self.state.v, self.state.omega],
            "odom": [self.odom.x, self.odom.y, self.odom.yaw],
            "command": [self.command.v, self.command.omega],
            "metrics": [self.metrics.q_uneven, self.metrics.q_surf,
                        self.metrics.q_pliable, self.metrics.vertical_gradient_present],
            "active": [m.value for m in self.decision.active],
            "imu": [float(v) for v in self.imu],
            "height": self.height,
            "gait": self.gait.label if self.gait else None,
            "recovery": self.recovery,
        }


@dataclass
class EpisodeLog:
    ticks: list
    outcome: str
    start: tuple
    goal: tuple
    robot_kind: str
    method: str
    seed: int
    dt: float

    def elapsed(self):
        return max(len(self.ticks) - 1, 0) * self.dt

    def path_length(self):
        total = 0.0
        for a, b in zip(self.ticks, self.ticks[1:]):
            total += math.hypot(b.state.x - a.state.x, b.state.y - a.state.y)
        return total

    def final_distance(self):
        if not self.ticks:
            return math.hypot(self.goal[0] - self.start[0], self.goal[1] - self.start[1])
        last = self.ticks[-1].state
        return math.hypot(self.goal[0] - last.x, self.goal[1] - last.y)

    def odometry_drift(self):
        if not self.ticks:
            return 0.0
        last = self.ticks[-1]
        return math.hypot(last.odom.x - last.state.x, last.odom.y - last.state.y)

    def gait_trace(self):
        return [(tk.t, tk.gait.label if tk.gait else None) for tk in self.ticks]

    def to_jsonl(self):
        head = {
            "format": "scenenav-log-v1",
            "outcome": self.outcome,
            "start": list(self.start),
            "goal": list(self.goal),
            "robot_kind": self.robot_kind,
            "method": self.method,
            "seed": self.seed,
            "dt": self.dt,
            "n_ticks": len(self.ticks),
        }
        lines = [json.dumps(head, sort_keys=True)]
        lines += [json.dumps(tk.to_record(), sort_keys=True) for tk in self.ticks]
        return "\n".join(lines) + "\n"


def slip_effective(surface, v, v_max, kind, slope=0.0):
    """Commanded-speed and slope dependent slip; the table value applies
    at top speed on flat ground.

    Slip grows superlinearly with speed (loose ground sheds grip under
    higher wheel torque) and with terrain slope on granular surfaces,
    so crossing a sandy ridge slowly loses markedly less distance.
    Legged platforms halve slip on granular ground (feet hold where
    wheels spin).
    """
    r = min(1.0, abs(v) / v_max)
    f = 0.35 + 0.65 * r * r
    s = surface.slip_ratio * f
    if surface.name in GRANULAR:
        s *= 1.0 + 1.5 * min(slope, 0.6)
        if kind == "Legged":
            s *= 0.5
    return min(s, 0.92)


def step(world, state, command, robot, dt, seed=0):
    """Advance truth dynamics one tick.

    Slip scales the commanded speed; a lookahead gradient past the
    climb limit halts forward progress for the tick; roll and pitch
    come from the terrain under the footprint plus vibration-coupled
    jitter (zero at rest).
    """
    eps = 0.08
    hp = heights_at(world, np.array([state.x + eps, state.x - eps, state.x, state.x]),
                    np.array([state.y, state.y, state.y + eps, state.y - eps]))
    slope_here = math.hypot(hp[0] - hp[1], hp[2] - hp[3]) / (2.0 * eps)
    surf = surface_at(world, state.x, state.y)
    s = slip_effective(surf, command.v, robot.v_max, robot.kind, slope_here)
    v_eff = command.v * (1.0 - s)
    cos_y = math.cos(state.yaw)
    sin_y = math.sin(state.yaw)
    if v_eff > 0.0:
        dist = v_eff * dt
        nx = state.x + dist * cos_y
        ny = state.y + dist * sin_y
        hp = heights_at(world, np.array([nx + eps, nx - eps, nx, nx]),
                        np.array([ny, ny, ny + eps, ny - eps]))
        gmag = math.hypot(hp[0] - hp[1], hp[2] - hp[3]) / (2.0 * eps)
        if gmag > robot.climb_slope_limit:
            v_eff = 0.0
    x = state.x + v_eff * cos_y * dt
    y = state.y + v_eff * sin_y * dt
    yaw = state.yaw + command.omega * dt

    r = robot.footprint_radius
    cy = math.cos(yaw)
    sy = math.sin(yaw)
    px = np.array([x + r * cy, x - r * cy, x - r * sy, x + r * sy])
    py = np.array([y + r * sy, y - r * sy, y + r * cy, y - r * cy])
    hf, hb, hl, hr = heights_at(world, px, py)
    pitch = math.atan2(hf - hb, 2.0 * r)
    roll = math.atan2(hl - hr, 2.0 * r)

    rough = state.gait.roughness if (robot.kind == "Legged" and state.gait) else 1.0
    std = robot.pose_noise_gain * vibration_gain_at(world, x, y) * abs(v_eff) * rough
    if std > 0.0:
        rng = np.random.default_rng((int(seed), 0x57E9))
        jitter = rng.normal(0.0, std, 2)
        roll += jitter[0]
        pitch += jitter[1]
    return replace(state, x=x, y=y, yaw=yaw, roll=roll, pitch=pitch,
                   v=command.v, omega=command.omega)


def _straight_clear(state, v, ctx, occ, robot, margin=0.15, lookahead=1.0, dt=0.1):
    """Whether a straight drive stays off occupied cells for lookahead s.

    margin widens the footprint check so escape runs keep distance from
    ragged obstacle boundaries; a negative margin checks occupancy only.
    """
    n = occ.size_n
    res = occ.resolution
    cos_y = math.cos(state.yaw)
    sin_y = math.sin(state.yaw)
    steps = max(int(round(lookahead / dt)), 1)
    for k in range(1, steps + 1):
        x = state.x + v * cos_y * k * dt
        y = state.y + v * sin_y * k * dt
        col = int(math.floor((x - occ.x0) / res))
        row = int(math.floor((y - occ.y0) / res))
        if 0 <= col < n and 0 <= row < n:
            if ctx.occ_u8[row, col]:
                return False
            if margin >= 0.0 and ctx.edt[row, col] < robot.footprint_radius + margin:
                return False
    return True


def _collision(world, state, robot):
    pos, rad, _, tr = world.veg_arrays()
    if pos.shape[0]:
        d2 = (pos[:, 0] - state.x) ** 2 + (pos[:, 1] - state.y) ** 2
        if np.any(tr & (d2 < (rad + robot.footprint_radius) ** 2)):
            return True
    opos, orad = world.obstacle_arrays()
    if opos.shape[0]:
        d2 = (opos[:, 0] - state.x) ** 2 + (opos[:, 1] - state.y) ** 2
        if np.any(d2 < (orad + robot.footprint_radius) ** 2):
            return True
    return False


_CAL_WORLD = {}


def calibrate_tau_surf(robot, config, reference_surface="Grass"):
    """Roughness threshold from a 2 s flat-ground reference rollout.

    Simulates the robot-kind proprioception stream on the default
    surface at half speed and returns three times the measured
    roughness metric, giving tau_surf the units of the active channel.
    """
    key = reference_surface
    world = _CAL_WORLD.get(key)
    if world is None:
        world = TerrainWorld(bounds=(-5.0, 5.0, -5.0, 5.0),
                             regions=((Polygon.rect(-5, -5, 5, 5), reference_surface),),
                             default_surface=reference_surface)
        _CAL_WORLD[key] = world
    state = RobotState(0.0, 0.0, 0.0, kind=robot.kind, gait=Gait.Trot)
    v = 0.5 * robot.v_max
    rows = []
    for k in range(config.window_len):
        seed = derive_seed(0xCA11, k)
        if robot.kind == "Wheeled":
            rows.append(simulate_imu(world, state, (v, 0.0), 0.02, seed))
        else:
            rows.append(simulate_joints(world, state, (v, 0.0), Gait.Trot, 0.02, seed, step=k))
    return 3.0 * surface_metric(np.array(rows))


_GAIT_ORDER = {Gait.Trot: 0, Gait.Amble: 1, Gait.StableSlow: 2}

_FIXED_DECISIONS = {
    "terp_only": (PerceptionModuleId.Terp,),
    "terrapn_only": (PerceptionModuleId.TerraPn,),
    "pronav_only": (PerceptionModuleId.ProNav,),
    "vern_only": (PerceptionModuleId.Vern,),
    "naive": (),
}


def check_method(method, robot_kind):
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    if method == "terrapn_only" and robot_kind != "Wheeled":
        raise ValueError("terrapn_only requires a Wheeled robot")
    if method == "pronav_only" and robot_kind != "Legged":
        raise ValueError("pronav_only requires a Legged robot")


def run_episode(world, start, goal, robot, config=None, seed=0, method="adventr"):
    """Run one episode to termination and return its log."""
    config = config or SimConfig()
    check_method(method, robot.kind)
    thresholds = config.thresholds
    if thresholds is None:
        thresholds = Thresholds(tau_surf=calibrate_tau_surf(robot, config))

    legged = robot.kind == "Legged"
    gait = Gait.Trot if legged else None
    state = RobotState(start[0], start[1], start[2], kind=robot.kind, gait=gait)
    # initial attitude from the terrain
    state = step(world, state, VelocityCommand(0.0, 0.0), robot, config.dt,
                 derive_seed(seed, _S_STEP, 0))
    state = replace(state, x=start[0], y=start[1], yaw=start[2], v=0.0, omega=0.0)
    odom = OdomPose(start[0], start[1], start[2])

    hyst = HysteresisFilter(robot.kind, config.switch_hold)
    imu_buf = deque(maxlen=config.window_len)
    joint_buf = deque(maxlen=config.window_len)
    imu_dt = config.dt / config.imu_per_tick

    decision = None
    outputs = None
    ctx = None
    metrics_now = None
    gait_hold = 0
    slow_ticks = 0
    stall = 0
    rotate_left = 0
    commit_left = 0
    escape_round = 0
    last_disp = np.inf
    # ticks for one full turn at the recovery rate
    _full_turn = int(math.ceil(2.0 * math.pi / (robot.omega_max / 2.0 * config.dt)))
    ticks = []
    outcome = "Timeout"
    n_ticks = int(round(config.max_time / config.dt))

    for tick in range(n_ticks):
        t = tick * config.dt
        pose = (state.x, state.y, state.yaw)

        if tick % config.sense_every == 0 or outputs is None:
            cloud = simulate_lidar(world, pose, config.lidar,
                                   seed=derive_seed(seed, _S_LIDAR, tick))
            z_ref = height_at(world, state.x, state.y)
            E_full = elevation_map_from_cloud(cloud, pose, config.grid, z_ref=z_ref)
            E_ground = elevation_map_from_cloud(cloud, pose, config.grid,
                                                cloud_filter=terrain_points, z_ref=z_ref)
            D = intensity_map_from_cloud(cloud, pose, config.grid)

            if legged:
                window = np.array(joint_buf) if len(joint_buf) >= 8 else None
            else:
                window = np.array(imu_buf) if len(imu_buf) >= 8 else None
            q_surf = surface_metric(window) if window is not None else 0.0
            q_uneven = unevenness_metric(E_ground)
            q_pliable, vertical = pliability_metric(D, E_full, thresholds.tau_vertical,
                                                    thresholds.pliable_band)
            metrics_now = SceneMetrics(q_uneven, q_surf, q_pliable, vertical)

            if method == "adventr":
                decision = hyst.update(metrics_now, thresholds)
            else:
                decision = SwitchDecision(_FIXED_DECISIONS[method])

            outputs = compute_outputs(world, cloud, E_ground, pose, goal, decision,
                                      config.grid, robot, thresholds.tau_surf, q_surf,
                                      derive_seed(seed, _S_PERC, tick),
                                      config.misclassification_rate, prev_gait=gait)
            ctx = build_context(outputs)

            if legged:
                rec = outputs.gait
                if rec is not None:
                    if _GAIT_ORDER[rec] > _GAIT_ORDER[gait]:
                        gait = rec
                        gait_hold = config.switch_hold
                    elif rec == gait:
                        gait_hold = config.switch_hold
                    elif gait_hold > 0:
                        gait_hold -= 1
                    else:
                        gait = rec
                state = replace(state, gait=gait)

        result = plan_ex(state, goal, outputs, decision, robot, config.planner,
                         gait=gait if legged else None, ctx=ctx)
        command = result.command
        recovery = result.recovery

        # escape maneuver when the planner has wedged itself against a
        # hard wall (near-zero commands far from the goal): rotate until
        # a straight exit is clear, then commit forward out of the
        # attraction basin
        goal_dist = math.hypot(goal[0] - state.x, goal[1] - state.y)
        v_out = 0.6 * robot.v_max
        # consecutive failed rotations relax the clearance requirement
        margin = (0.2, 0.0)[min(escape_round, 1)]
        if rotate_left > 0:
            straight_ok = _straight_clear(state, v_out, ctx, outputs.occupancy,
                                          robot, margin)
            if straight_ok and rotate_left <= _full_turn - config.stall_rotate_ticks:
                rotate_left = 0
                commit_left = config.stall_commit_ticks
                command = VelocityCommand(v_out, 0.0)
            else:
                command = VelocityCommand(0.0, robot.omega_max / 2.0)
                rotate_left -= 1
                if rotate_left == 0:
                    escape_round += 1
                    rotate_left = _full_turn
            recovery = True
        elif commit_left > 0:
            if _straight_clear(state, v_out, ctx, outputs.occupancy, robot, margin):
                command = VelocityCommand(v_out, 0.0)
                recovery = True
                commit_left -= 1
            else:
                commit_left = 0
        elif ((command.v < 0.05 * robot.v_max or last_disp < 0.05 * robot.v_max * config.dt)
              and goal_dist > config.goal_radius + 0.5):
            stall += 1
            if stall >= config.stall_ticks:
                rotate_left = _full_turn
                escape_round = 0
                stall = 0
        else:
            stall = 0
            escape_round = 0

        rough = gait.roughness if legged else 1.0
        gain_here = vibration_gain_at(world, state.x, state.y)
        sinking = surface_at(world, state.x, state.y).name in GRANULAR
        imu_rows = simulate_imu_batch(world, state, (command.v, command.omega), imu_dt,
                                      derive_seed(seed, _S_IMU, tick),
                                      config.imu_per_tick, rough, gain=gain_here)
        imu_buf.extend(imu_rows)
        imu = imu_rows[-1]
        if legged:
            joint_buf.extend(simulate_joints_batch(
                world, state, (command.v, command.omega), gait, imu_dt,
                derive_seed(seed, _S_JOINT, tick), config.imu_per_tick,
                step0=tick * config.imu_per_tick, gain=gain_here, sinking=sinking))

        ticks.append(TickRecord(t, state, odom, command, metrics_now, decision, imu,
                                height_at(world, state.x, state.y), gait, recovery))

        new_state = step(world, state, command, robot, config.dt,
                         derive_seed(seed, _S_STEP, tick + 1))
        odom = simulate_odometry(odom, (command.v, command.omega), config.dt)
        disp = math.hypot(new_state.x - state.x, new_state.y - state.y)
        last_disp = disp
        if command.v > 0.05 and disp / config.dt < config.entrapment_ratio * command.v:
            slow_ticks += 1
        else:
            slow_ticks = 0
        state = new_state

        if math.hypot(goal[0] - state.x, goal[1] - state.y) < config.goal_radius:
            outcome = "Success"
            break
        if _collision(world, state, robot):
            outcome = "Collision"
            break
        if abs(state.roll) > robot.topple_limit or abs(state.pitch) > robot.topple_limit:
            outcome = "Topple"
            break
        if slow_ticks >= config.entrapment_ticks:
            outcome = "Entrapment"
            break

    ticks.append(TickRecord(len(ticks) * config.dt, state, odom,
                            VelocityCommand(0.0, 0.0), metrics_now, decision,
                            np.zeros(6), height_at(world, state.x, state.y), gait, False))
    return EpisodeLog(ticks, outcome, tuple(start), tuple(goal), robot.kind,
                      method, int(seed), config.dt)


def compute_metrics(log):
    """Summary metrics from a finished episode log.

    mean_velocity is true path length over elapsed time; instability
    accumulates the norm of IMU deviation from the attitude baseline;
    elevation_gradient sums absolute height changes along the path,
    converted to map units at the reference scale.
    """
    elapsed = log.elapsed()
    if elapsed <= 0:
        return Metrics(log.outcome == "Success", 0.0, 0.0, 0.0)
    path = log.path_length()
    instability = 0.0
    elev = 0.0
    for a, b in zip(log.ticks, log.ticks[1:]):
        base = imu_baseline(a.state.roll, a.state.pitch, a.command.omega)
        instability += float(np.linalg.norm(a.imu[:3] - base[:3])) * log.dt
        elev += abs(b.height - a.height) * MAP_UNITS_PER_METER
    return Metrics(log.outcome == "Success", path / elapsed, instability, elev)
