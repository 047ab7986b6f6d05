"""Deterministic 2.5D outdoor-navigation simulator.

Terrain-aware perception switching with an extended dynamic-window
planner, exercised end to end on analytic desk-scale worlds.
"""

from .gridmap import (
    GridMap,
    bilinear_sample,
    gradient_map,
    map_from_points,
    normalize,
    value_histogram_fraction,
)
from .perception import Gait, PerceptionOutputs, compute_outputs
from .planner import PlannerConfig, VelocityCommand, Weights, dynamic_window, objective, plan, rollout
from .scenarios import ScenarioSetup, build_scenario, make_gait_fixture, make_step_fixture
from .sensors import GridParams, LidarParams, PointCloud, simulate_lidar
from .sim import (
    LEGGED_ROBOT,
    WHEELED_ROBOT,
    EpisodeLog,
    Metrics,
    RobotSpec,
    RobotState,
    SimConfig,
    compute_metrics,
    run_episode,
)
from .switching import (
    PerceptionModuleId,
    SceneMetrics,
    SwitchDecision,
    Thresholds,
    pca_top2_variances,
    select_modules,
    surface_metric,
    unevenness_metric,
)
from .world import SurfaceClass, TerrainWorld, VegetationInstance, height_at, surface_at

__version__ = "0.1.0"
