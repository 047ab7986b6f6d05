"""Robot-centric square grid maps.

A GridMap is an odd-sized N x N value grid with a validity mask, placed
in the world frame by its center and resolution. Elevation, intensity
and all derived cost maps share this one container; cells that were
never observed are invalid and excluded from every statistic.
"""

from dataclasses import dataclass, field

import numpy as np

from . import kernels

__all__ = [
    "GridMap",
    "map_from_points",
    "gradient_map",
    "normalize",
    "bilinear_sample",
    "value_histogram_fraction",
]


@dataclass(frozen=True)
class GridMap:
    """Square value grid. values[row, col]; row follows +y, col follows +x.

    Invalid cells are stored as 0.0 so that serialization round-trips
    bit-exactly; their values carry no meaning.
    """

    size_n: int
    resolution: float
    center: tuple
    values: np.ndarray = field(repr=False)
    valid: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.size_n < 3 or self.size_n % 2 == 0:
            raise ValueError(f"size_n must be odd and >= 3, got {self.size_n}")
        if not self.resolution > 0:
            raise ValueError(f"resolution must be > 0, got {self.resolution}")
        values = np.ascontiguousarray(self.values, dtype=np.float64)
        valid = np.ascontiguousarray(self.valid, dtype=bool)
        if values.shape != (self.size_n, self.size_n) or valid.shape != values.shape:
            raise ValueError("values/valid must be size_n x size_n")
        values = np.where(valid, values, 0.0)
        if not np.all(np.isfinite(values[valid])):
            raise ValueError("valid cells must hold finite values")
        values.setflags(write=False)
        valid.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "valid", valid)
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))

    # --- geometry -----------------------------------------------------

    @property
    def x0(self):
        """World x of the grid's lower-left corner (cell edge)."""
        return self.center[0] - self.size_n * self.resolution / 2.0

    @property
    def y0(self):
        return self.center[1] - self.size_n * self.resolution / 2.0

    @property
    def extent(self):
        """(xmin, xmax, ymin, ymax) of the covered area."""
        side = self.size_n * self.resolution
        return (self.x0, self.x0 + side, self.y0, self.y0 + side)

    def cell_of(self, x, y):
        """(row, col) containing the world point, or None if outside."""
        col = int(np.floor((x - self.x0) / self.resolution))
        row = int(np.floor((y - self.y0) / self.resolution))
        if 0 <= row < self.size_n and 0 <= col < self.size_n:
            return row, col
        return None

    def cell_center(self, row, col):
        return (self.x0 + (col + 0.5) * self.resolution,
                self.y0 + (row + 0.5) * self.resolution)

    def cell_centers(self):
        """Meshgrid arrays (xs, ys) of all cell centers, shape (N, N)."""
        idx = np.arange(self.size_n)
        xs = self.x0 + (idx + 0.5) * self.resolution
        ys = self.y0 + (idx + 0.5) * self.resolution
        return np.meshgrid(xs, ys)

    def with_values(self, values, valid=None):
        return GridMap(self.size_n, self.resolution, self.center, values,
                       self.valid if valid is None else valid)

    # --- serialization ------------------------------------------------

    def to_record(self):
        """Self-describing dict; floats survive a JSON round trip exactly."""
        return {
            "size_n": self.size_n,
            "resolution": self.resolution,
            "center": [self.center[0], self.center[1]],
            "values": [float(v) for v in self.values.ravel()],
            "valid": [bool(v) for v in self.valid.ravel()],
        }

    @classmethod
    def from_record(cls, rec):
        n = int(rec["size_n"])
        values = np.array(rec["values"], dtype=np.float64).reshape(n, n)
        valid = np.array(rec["valid"], dtype=bool).reshape(n, n)
        return cls(n, float(rec["resolution"]), tuple(rec["center"]), values, valid)


# Aliases used through the pipeline for readability. An elevation or
# intensity map is a GridMap whose valid values lie in [0, 100].
ElevationMap = GridMap
IntensityMap = GridMap
GradientMap = GridMap
CostMap = GridMap


def map_from_points(points, size_n, resolution, center, reducer, tally=None):
    """Bin (x, y, z, intensity) points into a grid.

    reducer 'max_z' keeps the maximum z per cell; 'mean_intensity'
    averages intensities. Points with any non-finite coordinate are
    rejected; points outside the extent are dropped. When a dict is
    passed as ``tally`` it receives counts {binned, rejected_nonfinite,
    outside}.
    """
    if reducer not in ("max_z", "mean_intensity"):
        raise ValueError(f"unknown reducer {reducer!r}")
    pts = np.asarray(points, dtype=np.float64)
    if pts.size == 0:
        pts = pts.reshape(0, 4)
    if pts.ndim != 2 or pts.shape[1] != 4:
        raise ValueError("points must be (n, 4): x, y, z, intensity")

    finite = np.all(np.isfinite(pts), axis=1)
    n_bad = int(np.count_nonzero(~finite))
    pts = pts[finite]

    x0 = center[0] - size_n * resolution / 2.0
    y0 = center[1] - size_n * resolution / 2.0
    cols = np.floor((pts[:, 0] - x0) / resolution).astype(np.int64)
    rows = np.floor((pts[:, 1] - y0) / resolution).astype(np.int64)
    inside = (cols >= 0) & (cols < size_n) & (rows >= 0) & (rows < size_n)
    n_out = int(np.count_nonzero(~inside))
    rows = rows[inside]
    cols = cols[inside]

    if reducer == "max_z":
        acc, cnt = kernels.scatter_max(rows, cols, np.ascontiguousarray(pts[inside, 2]), size_n)
        valid = cnt > 0
        values = np.where(valid, acc, 0.0)
    else:
        acc, cnt = kernels.scatter_sum(rows, cols, np.ascontiguousarray(pts[inside, 3]), size_n)
        valid = cnt > 0
        values = np.where(valid, acc / np.maximum(cnt, 1), 0.0)

    if tally is not None:
        tally["binned"] = int(rows.shape[0])
        tally["rejected_nonfinite"] = n_bad
        tally["outside"] = n_out
    return GridMap(size_n, resolution, center, values, valid)


def gradient_map(m):
    """Gradient magnitude per cell, in map-units per cell.

    Central differences on interior cells, one-sided toward valid
    neighbours at boundaries or next to invalid cells. Cells with no
    valid neighbour on either axis come out invalid.
    """
    g, gvalid = kernels.gradient(m.values, m.valid)
    return GridMap(m.size_n, m.resolution, m.center, g, gvalid)


def normalize(m, lo, hi):
    """Linearly map [lo, hi] to [0, 100], clamping. hi == lo maps to 0."""
    if hi < lo:
        raise ValueError("normalize requires hi >= lo")
    if hi == lo:
        values = np.zeros_like(m.values)
    else:
        values = np.clip((m.values - lo) / (hi - lo) * 100.0, 0.0, 100.0)
    return m.with_values(values)


def bilinear_sample(m, x, y):
    """Sample the map at a world point; None when nothing valid nearby.

    Bilinear over the four surrounding cells when all are valid, else
    the nearest valid one of them; exact cell values at cell centers.
    """
    xmin, xmax, ymin, ymax = m.extent
    if not (xmin <= x < xmax and ymin <= y < ymax):
        return None
    fx = (x - m.x0) / m.resolution - 0.5
    fy = (y - m.y0) / m.resolution - 0.5
    c0 = int(np.floor(fx))
    r0 = int(np.floor(fy))
    wx = fx - c0
    wy = fy - r0
    n = m.size_n

    corners = ((r0, c0), (r0, c0 + 1), (r0 + 1, c0), (r0 + 1, c0 + 1))
    weights = ((1 - wx) * (1 - wy), wx * (1 - wy), (1 - wx) * wy, wx * wy)
    vals = []
    oks = []
    for (r, c) in corners:
        good = 0 <= r < n and 0 <= c < n
        vals.append(m.values[r, c] if good else 0.0)
        oks.append(good and bool(m.valid[r, c]))
    if all(oks):
        return float(vals[0] * weights[0] + vals[1] * weights[1]
                     + vals[2] * weights[2] + vals[3] * weights[3])
    best = None
    best_d = np.inf
    for i, (r, c) in enumerate(corners):
        if not oks[i]:
            continue
        ccx, ccy = m.cell_center(r, c)
        d = (x - ccx) ** 2 + (y - ccy) ** 2
        if d < best_d:
            best_d = d
            best = vals[i]
    return None if best is None else float(best)


def value_histogram_fraction(m, lo, hi):
    """Fraction of valid cells with lo <= value <= hi; 0 with none valid."""
    if lo > hi:
        raise ValueError("band requires lo <= hi")
    n_valid = int(np.count_nonzero(m.valid))
    if n_valid == 0:
        return 0.0
    sel = m.values[m.valid]
    n_in = int(np.count_nonzero((sel >= lo) & (sel <= hi)))
    return n_in / n_valid
