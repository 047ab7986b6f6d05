"""Scene metrics and perception-module arbitration.

Three scalar metrics summarize the robot's surroundings: terrain
unevenness from the elevation-gradient range, surface roughness from
the top-2 PCA variances of recent IMU or joint data, and vegetation
pliability from the share of intermediate lidar intensities. At most
two perception modules run at a time, picked by fixed priority
vegetation > unevenness > surface, filtered by robot kind.
"""

import enum
from dataclasses import dataclass, field

import numpy as np

from .gridmap import gradient_map, value_histogram_fraction

__all__ = [
    "SceneMetrics",
    "Thresholds",
    "PerceptionModuleId",
    "SwitchDecision",
    "PcaResult",
    "unevenness_metric",
    "pca_top2_variances",
    "surface_metric",
    "pliability_metric",
    "select_modules",
    "select_from_triggers",
    "HysteresisFilter",
]

PLIABLE_BAND = (40.0, 70.0)


class PerceptionModuleId(str, enum.Enum):
    Terp = "Terp"  # elevation-aware cost map
    TerraPn = "TerraPn"  # surface cost map, wheeled
    ProNav = "ProNav"  # surface cost map + gait, legged
    Vern = "Vern"  # vegetation cost map


@dataclass(frozen=True)
class SceneMetrics:
    q_uneven: float
    q_surf: float
    q_pliable: float
    vertical_gradient_present: bool

    def __post_init__(self):
        if not (0 <= self.q_uneven <= 1 and 0 <= self.q_pliable <= 1):
            raise ValueError("q_uneven and q_pliable must lie in [0, 1]")
        if not (np.isfinite(self.q_surf) and self.q_surf >= 0):
            raise ValueError("q_surf must be finite and >= 0")


@dataclass(frozen=True)
class Thresholds:
    tau_uneven: float = 0.15
    tau_surf: float = 1.0  # calibrated at startup; units follow the window
    tau_pliable: float = 0.05
    tau_vertical: float = 20.0  # map-units per cell
    pliable_band: tuple = PLIABLE_BAND


@dataclass(frozen=True)
class SwitchDecision:
    """Ordered set of at most two active modules plus trigger reasons."""

    active: tuple
    reason: dict = field(default_factory=dict)

    def __post_init__(self):
        active = tuple(PerceptionModuleId(m) for m in self.active)
        if len(active) > 2:
            raise ValueError("at most two perception modules may be active")
        if PerceptionModuleId.TerraPn in active and PerceptionModuleId.ProNav in active:
            raise ValueError("TerraPn and ProNav are mutually exclusive")
        object.__setattr__(self, "active", active)

    def __contains__(self, module):
        return PerceptionModuleId(module) in self.active


@dataclass(frozen=True)
class PcaResult:
    sigma1_sq: float
    sigma2_sq: float


def unevenness_metric(E, info=None):
    """Gradient range of the elevation map over 100, clamped to [0, 1].

    A flat map and a uniform ramp both give 0 (constant gradient field).
    Maps without enough valid structure give 0 and set info['degenerate'].
    """
    g = gradient_map(E)
    n_valid = int(np.count_nonzero(g.valid))
    if n_valid == 0:
        if info is not None:
            info["degenerate"] = True
        return 0.0
    if info is not None:
        info["degenerate"] = False
    sel = g.values[g.valid]
    q = (float(np.max(sel)) - float(np.min(sel))) / 100.0
    return min(max(q, 0.0), 1.0)


def pca_top2_variances(window):
    """Variances along the two leading principal components.

    Columns are mean-centered; the covariance uses the population
    normalization (divide by M). Accepts a raw M x d array or any
    object with a .samples matrix.
    """
    data = np.asarray(getattr(window, "samples", window), dtype=np.float64)
    m, d = data.shape
    if d < 2 or m < d:
        raise ValueError("window must be M x d with M >= d >= 2")
    if not np.all(np.isfinite(data)):
        raise ValueError("window entries must be finite")
    centered = data - data.mean(axis=0)
    cov = centered.T @ centered / m
    eig = np.linalg.eigvalsh(cov)
    s1 = max(float(eig[-1]), 0.0)
    s2 = max(float(eig[-2]), 0.0)
    return PcaResult(s1, s2)


def surface_metric(window):
    """Root-sum of the top-2 PCA variances; large on granular ground."""
    pca = pca_top2_variances(window)
    return float(np.sqrt(pca.sigma1_sq + pca.sigma2_sq))


def pliability_metric(D, E, tau_vertical=Thresholds.tau_vertical, band=PLIABLE_BAND):
    """(q_pliable, vertical_gradient_present).

    q_pliable is the fraction of valid intensity cells inside the
    intermediate band; the vertical-gradient flag reports whether the
    elevation map holds a gradient at least tau_vertical anywhere
    (vegetation tops raise the map locally).
    """
    q = value_histogram_fraction(D, band[0], band[1])
    g = gradient_map(E)
    present = bool(np.any(g.valid) and float(np.max(g.values[g.valid])) >= tau_vertical)
    return q, present


def triggers_from_metrics(metrics, thresholds):
    """(vegetation, unevenness, surface) trigger booleans."""
    veg = metrics.q_pliable > thresholds.tau_pliable and metrics.vertical_gradient_present
    uneven = metrics.q_uneven > thresholds.tau_uneven
    surf = metrics.q_surf > thresholds.tau_surf
    return veg, uneven, surf


def select_from_triggers(veg, uneven, surf, robot_kind):
    """Priority pick: vegetation > unevenness > surface, at most two.

    With nothing triggered, the robot-kind surface module runs alone
    (the cheapest safe default).
    """
    if robot_kind not in ("Wheeled", "Legged"):
        raise ValueError(f"unknown robot kind {robot_kind!r}")
    surface_mod = (PerceptionModuleId.TerraPn if robot_kind == "Wheeled"
                   else PerceptionModuleId.ProNav)
    candidates = []
    reason = {}
    if veg:
        candidates.append(PerceptionModuleId.Vern)
        reason[PerceptionModuleId.Vern] = "q_pliable+vertical_gradient"
    if uneven:
        candidates.append(PerceptionModuleId.Terp)
        reason[PerceptionModuleId.Terp] = "q_uneven"
    if surf:
        candidates.append(surface_mod)
        reason[surface_mod] = "q_surf"
    if not candidates:
        candidates = [surface_mod]
        reason[surface_mod] = "fallback"
    active = tuple(candidates[:2])
    return SwitchDecision(active, {m: r for m, r in reason.items() if m in active})


def select_modules(metrics, thresholds, robot_kind):
    """Arbitrate which perception modules run for these scene metrics."""
    veg, uneven, surf = triggers_from_metrics(metrics, thresholds)
    return select_from_triggers(veg, uneven, surf, robot_kind)


class HysteresisFilter:
    """Debounces the three trigger booleans across evaluation ticks.

    A trigger must hold its new value for ``hold`` consecutive
    evaluations before the committed decision changes; the first
    evaluation commits immediately. Confined to one episode's loop.
    """

    def __init__(self, robot_kind, hold=3):
        self.robot_kind = robot_kind
        self.hold = hold
        self._committed = None
        self._pending = None
        self._streak = 0

    def update(self, metrics, thresholds):
        raw = triggers_from_metrics(metrics, thresholds)
        if self._committed is None:
            self._committed = raw
            self._pending = raw
            self._streak = self.hold
        elif raw == self._committed:
            self._pending = raw
            self._streak = self.hold
        elif raw == self._pending:
            self._streak += 1
            if self._streak >= self.hold:
                self._committed = raw
        else:
            self._pending = raw
            self._streak = 1
        return select_from_triggers(*self._committed, self.robot_kind)
