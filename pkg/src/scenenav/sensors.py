"""Simulated sensor streams: lidar, IMU, joint feedback, odometry.

Everything is a pure function of (world, state, command, seed), so
repeated simulation is bit-identical and parallel episode runs match
serial ones. Lidar rays are cast against the analytic ground and the
vegetation/obstacle cylinders; pliable matter attenuates rays with a
per-meter penetration probability, which is what produces the
intermediate-intensity signature of tall grass.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import kernels
from .gridmap import GridMap, map_from_points, normalize
from .world import GROUND_INTENSITY, GRANULAR, height_at, inside_pliable, surface_at

__all__ = [
    "LidarParams",
    "GridParams",
    "PointCloud",
    "ImuWindow",
    "JointWindow",
    "OdomPose",
    "simulate_lidar",
    "elevation_map_from_cloud",
    "intensity_map_from_cloud",
    "terrain_points",
    "simulate_imu",
    "simulate_joints",
    "simulate_odometry",
    "vibration_gain_at",
]

GRAVITY = 9.81

# Extra vibration while pushing through pliable vegetation (stalk drag).
VEG_DRAG_GAIN = 0.15

N_JOINTS = 12


@dataclass(frozen=True)
class LidarParams:
    n_azimuth: int = 360
    n_rings: int = 16
    max_range: float = 12.0
    z_noise_std: float = 0.01
    sensor_height: float = 0.75
    elev_lo_deg: float = -24.0
    elev_hi_deg: float = 4.0
    march_step: float = 0.15
    seed: int = 0


@dataclass(frozen=True)
class GridParams:
    size_n: int = 61
    resolution: float = 0.25
    # elevation normalization: per-frame min/max by default, or a fixed
    # z band around the reference height (robot base) in 'fixed' mode
    elev_mode: str = "per_frame"
    elev_lo: float = -0.5
    elev_hi: float = 1.5

    @property
    def units_per_meter(self):
        """Map units per meter of height in 'fixed' mode."""
        return 100.0 / (self.elev_hi - self.elev_lo)


@dataclass(frozen=True)
class PointCloud:
    """World-frame returns, one row (x, y, z, intensity) per hit."""

    points: np.ndarray
    stamp: float = 0.0

    def __post_init__(self):
        pts = np.ascontiguousarray(self.points, dtype=np.float64).reshape(-1, 4)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)

    def to_record(self):
        return {"stamp": self.stamp, "points": [[float(v) for v in row] for row in self.points]}

    @classmethod
    def from_record(cls, rec):
        return cls(np.array(rec["points"], dtype=np.float64).reshape(-1, 4), rec["stamp"])


def _window_cls_post_init(self):
    samples = np.ascontiguousarray(self.samples, dtype=np.float64)
    if samples.ndim != 2 or samples.shape[0] < 8:
        raise ValueError("window needs at least 8 rows")
    if not np.all(np.isfinite(samples)):
        raise ValueError("window entries must be finite")
    samples.setflags(write=False)
    object.__setattr__(self, "samples", samples)


@dataclass(frozen=True)
class ImuWindow:
    """M x 6 recent IMU history: 3 accelerations, 3 angular rates."""

    samples: np.ndarray
    rate: float = 50.0
    stamp: float = 0.0

    __post_init__ = _window_cls_post_init


@dataclass(frozen=True)
class JointWindow:
    """M x K recent joint positions and force proxies."""

    samples: np.ndarray
    rate: float = 50.0
    stamp: float = 0.0

    __post_init__ = _window_cls_post_init


@dataclass(frozen=True)
class OdomPose:
    """Dead-reckoned pose: integrates commanded velocity, so it drifts
    from the true pose by exactly the slip the surface stole."""

    x: float = 0.0
    y: float = 0.0
    yaw: float = 0.0


# ---------------------------------------------------------------------------
# lidar


def simulate_lidar(world, pose, params, seed=None):
    """Cast one lidar sweep from the robot pose; returns a PointCloud.

    pose is (x, y, yaw). One uniform draw per ray drives the pliable
    attenuation sampling; Gaussian z-noise (clipped at 3 sigma) is added
    to every return.
    """
    x, y, yaw = pose[0], pose[1], pose[2]
    seed = params.seed if seed is None else seed
    slope, bumps, steps, cyls, h_max = world.packed()

    az = yaw + 2.0 * np.pi * np.arange(params.n_azimuth) / params.n_azimuth
    el = np.deg2rad(np.linspace(params.elev_lo_deg, params.elev_hi_deg, params.n_rings))
    azg, elg = np.meshgrid(az, el)
    dirs = np.stack([
        (np.cos(azg) * np.cos(elg)).ravel(),
        (np.sin(azg) * np.cos(elg)).ravel(),
        np.sin(elg).ravel(),
    ], axis=1)
    dirs = np.ascontiguousarray(dirs)
    n_rays = dirs.shape[0]

    origin = np.array([x, y, height_at(world, x, y) + params.sensor_height])
    rng = np.random.default_rng((int(seed), 0x11DA5))
    u = rng.random(n_rays)
    z_noise = rng.normal(0.0, 1.0, n_rays) * params.z_noise_std
    z_noise = np.clip(z_noise, -3.0 * params.z_noise_std, 3.0 * params.z_noise_std)

    if cyls.shape[0]:
        reach = np.hypot(cyls[:, 0] - x, cyls[:, 1] - y) - cyls[:, 2]
        cyls = np.ascontiguousarray(cyls[reach <= params.max_range])
    pts, kind = kernels.raycast(origin, dirs, u, cyls, slope, bumps, steps,
                                params.max_range, params.march_step, h_max,
                                GROUND_INTENSITY)
    hit = kind >= 0
    out = pts[hit].copy()
    out[:, 2] += z_noise[hit]
    return PointCloud(out, stamp=0.0)


def terrain_points(cloud):
    """Ground-classified subset of a cloud (terrain returns only).

    Returns carry the exact ground reflectance constant, so intensity
    identifies them; this mirrors the usual ground-segmentation step in
    front of terrain mapping.
    """
    sel = cloud.points[:, 3] == GROUND_INTENSITY
    return PointCloud(cloud.points[sel], cloud.stamp)


def elevation_map_from_cloud(cloud, pose, grid, cloud_filter=None, z_ref=0.0):
    """Robot-centric elevation map in [0, 100] (max-z binning).

    cloud_filter, when given, selects the points to bin (e.g. terrain
    returns only). In 'fixed' mode the normalization band rides on
    z_ref, typically the robot's base height.
    """
    src = cloud if cloud_filter is None else cloud_filter(cloud)
    m = map_from_points(src.points, grid.size_n, grid.resolution,
                        (pose[0], pose[1]), "max_z")
    if grid.elev_mode == "per_frame":
        if np.any(m.valid):
            lo = float(np.min(m.values[m.valid]))
            hi = float(np.max(m.values[m.valid]))
        else:
            lo, hi = 0.0, 0.0
    elif grid.elev_mode == "fixed":
        lo, hi = z_ref + grid.elev_lo, z_ref + grid.elev_hi
    else:
        raise ValueError(f"unknown elev_mode {grid.elev_mode!r}")
    return normalize(m, lo, hi)


def intensity_map_from_cloud(cloud, pose, grid):
    """Robot-centric mean-reflectance map; values are already [0, 100]."""
    return map_from_points(cloud.points, grid.size_n, grid.resolution,
                           (pose[0], pose[1]), "mean_intensity")


# ---------------------------------------------------------------------------
# proprioception


def vibration_gain_at(world, x, y):
    """Surface vibration gain plus stalk drag inside pliable vegetation."""
    gain = surface_at(world, x, y).vibration_gain
    if inside_pliable(world, x, y):
        gain += VEG_DRAG_GAIN
    return gain


def imu_baseline(roll, pitch, omega):
    """Accelerometer/gyro reading for a motionless robot at this attitude."""
    return np.array([
        -GRAVITY * math.sin(pitch),
        GRAVITY * math.sin(roll) * math.cos(pitch),
        GRAVITY * math.cos(roll) * math.cos(pitch),
        0.0,
        0.0,
        omega,
    ])


def simulate_imu(world, state, command, dt, seed, roughness=1.0, gain=None):
    """One 6-vector IMU sample. Zero speed reproduces the baseline exactly.

    Noise std scales with vibration_gain(surface) * |v|; a stable legged
    gait damps it through the roughness multiplier. gain short-circuits
    the surface lookup when the caller already knows it.
    """
    base = imu_baseline(state.roll, state.pitch, command[1])
    if gain is None:
        gain = vibration_gain_at(world, state.x, state.y)
    s = gain * abs(command[0]) * roughness
    stds = np.array([s, s, 1.6 * s, 0.4 * s, 0.4 * s, 0.2 * s])
    rng = np.random.default_rng((int(seed), 0x1101))
    return base + rng.normal(0.0, 1.0, 6) * stds


def simulate_joints(world, state, command, gait, dt, seed, step=0, gain=None,
                    sinking=None):
    """One 12-vector joint sample: 8 positions, 4 leg-force proxies.

    gait supplies .frequency (Hz) and .roughness; granular surfaces add
    a slow sinking oscillation on the force channels.
    """
    t = step * dt
    sample = np.empty(N_JOINTS)
    for j in range(8):
        sample[j] = 0.05 * math.sin(2.0 * math.pi * gait.frequency * t + j * math.pi / 6.0)
    if sinking is None:
        sinking = surface_at(world, state.x, state.y).name in GRANULAR
    for j in range(8, N_JOINTS):
        sample[j] = 0.5 + 0.05 * math.sin(2.0 * math.pi * gait.frequency * t + j)
        if sinking:
            sample[j] += 0.12 * math.sin(2.0 * math.pi * 0.3 * t + j)
    if gain is None:
        gain = vibration_gain_at(world, state.x, state.y)
    s = gain * abs(command[0]) * gait.roughness
    rng = np.random.default_rng((int(seed), 0x2202))
    noise = rng.normal(0.0, 1.0, N_JOINTS)
    noise[:8] *= 0.5 * s
    noise[8:] *= s
    return sample + noise


def simulate_imu_batch(world, state, command, dt, seed, n, roughness=1.0, gain=None):
    """n consecutive IMU samples from one seeded stream (loop-rate twin
    of simulate_imu; same model, one draw call)."""
    base = imu_baseline(state.roll, state.pitch, command[1])
    if gain is None:
        gain = vibration_gain_at(world, state.x, state.y)
    s = gain * abs(command[0]) * roughness
    stds = np.array([s, s, 1.6 * s, 0.4 * s, 0.4 * s, 0.2 * s])
    rng = np.random.default_rng((int(seed), 0x1101))
    return base[None, :] + rng.normal(0.0, 1.0, (n, 6)) * stds[None, :]


def simulate_joints_batch(world, state, command, gait, dt, seed, n, step0=0,
                          gain=None, sinking=None):
    """n consecutive joint samples from one seeded stream."""
    t = (step0 + np.arange(n)) * dt
    out = np.empty((n, N_JOINTS))
    for j in range(8):
        out[:, j] = 0.05 * np.sin(2.0 * np.pi * gait.frequency * t + j * np.pi / 6.0)
    if sinking is None:
        sinking = surface_at(world, state.x, state.y).name in GRANULAR
    for j in range(8, N_JOINTS):
        out[:, j] = 0.5 + 0.05 * np.sin(2.0 * np.pi * gait.frequency * t + j)
        if sinking:
            out[:, j] += 0.12 * np.sin(2.0 * np.pi * 0.3 * t + j)
    if gain is None:
        gain = vibration_gain_at(world, state.x, state.y)
    s = gain * abs(command[0]) * gait.roughness
    rng = np.random.default_rng((int(seed), 0x2202))
    noise = rng.normal(0.0, 1.0, (n, N_JOINTS))
    noise[:, :8] *= 0.5 * s
    noise[:, 8:] *= s
    return out + noise


def simulate_odometry(prev, command, dt):
    """Integrate the commanded velocity (slip-blind dead reckoning)."""
    v, omega = command
    return OdomPose(
        prev.x + v * math.cos(prev.yaw) * dt,
        prev.y + v * math.sin(prev.yaw) * dt,
        prev.yaw + omega * dt,
    )
