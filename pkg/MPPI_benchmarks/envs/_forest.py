"""
MPPI BENCHMARKS - ENVS - FOREST

Cylindrical obstacle forests on a jittered grid.
"""

__all__ = [
    'generate_forest',
    'InfeasibleForestError',
    'load_forest',
    'ObstacleForest',
    'save_forest'
]

from dataclasses import dataclass
from typing import Optional, Tuple

import json
import numpy as np
import os

# Minimum free distance between a cylinder surface and the start/goal points
CLEARANCE: float = 1.5

# Uniform jitter of a cylinder inside its cell, as a fraction of the cell size
JITTER: float = 0.4

Bounds = Tuple[float, float, float, float]
Point = Tuple[float, float]


class InfeasibleForestError(ValueError):
    """
    Forest bounds cannot hold the requested layout.
    """


@dataclass(frozen=True)
class ObstacleForest(object):
    """
    Vertical cylinders of radius ``radii`` centered at ``centers`` (M x 2).
    """
    centers: 'np.ndarray'
    radii: 'np.ndarray'
    spacing: float
    bounds: Bounds
    start: Point
    goal: Point

    def __post_init__(self) -> None:
        c = np.array(self.centers, dtype=float).reshape(-1, 2)
        r = np.array(self.radii, dtype=float)
        if r.ndim == 0:
            r = np.full(c.shape[0], float(r))
        assert r.shape == (c.shape[0],), 'one radius per cylinder is required'
        assert np.all(r > 0), 'radii must be positive'
        c.flags.writeable = False
        r.flags.writeable = False
        object.__setattr__(self, 'centers', c)
        object.__setattr__(self, 'radii', r)
        object.__setattr__(self, 'start', (float(self.start[0]), float(self.start[1])))
        object.__setattr__(self, 'goal', (float(self.goal[0]), float(self.goal[1])))

    def __len__(self) -> int:
        return self.centers.shape[0]

    def signed_distances(self, xy: 'np.ndarray') -> 'np.ndarray':
        """
        Distance from each point to every cylinder surface, negative inside.

        :param xy: Points (..., 2)
        :return: Distances (..., M)
        """
        xy = np.asarray(xy, dtype=float)
        diff = xy[..., None, :] - self.centers
        return np.hypot(diff[..., 0], diff[..., 1]) - self.radii

    def nearest_distance(self, xy: 'np.ndarray') -> 'np.ndarray':
        """
        Distance to the closest cylinder surface, floored at 0, infinite without cylinders.

        :param xy: Points (..., 2)
        :return: Distances (...)
        """
        xy = np.asarray(xy, dtype=float)
        if len(self) == 0:
            return np.full(xy.shape[:-1], np.inf)
        return np.maximum(np.min(self.signed_distances(xy), axis=-1), 0.0)

    def collides(self, xy: 'np.ndarray') -> 'np.ndarray':
        """
        True where a point lies inside or on a cylinder.
        """
        xy = np.asarray(xy, dtype=float)
        if len(self) == 0:
            return np.zeros(xy.shape[:-1], dtype=bool)
        return np.any(self.signed_distances(xy) <= 0.0, axis=-1)

    def to_list(self):
        return [{'x': float(c[0]), 'y': float(c[1]), 'radius': float(r)} for c, r in zip(self.centers, self.radii)]


def generate_forest(
        mean_spacing: float,
        bounds: Bounds = (0.0, 20.0, 0.0, 20.0),
        seed: int = 0,
        radius: float = 0.5,
        start: Optional[Point] = None,
        goal: Optional[Point] = None
) -> ObstacleForest:
    """
    Places one cylinder per grid cell of size ``mean_spacing`` with uniform
    jitter of ±40% of the cell, then removes cylinders closer than 1.5 m to the
    start or goal point. Start and goal default to 1 m inside the left and
    right edges at mid height.

    :param mean_spacing: Cell size (m)
    :param bounds: (x_min, x_max, y_min, y_max)
    :param seed: Random seed
    :param radius: Cylinder radius
    :param start: Start point
    :param goal: Goal point
    :return: Forest
    """
    x_min, x_max, y_min, y_max = (float(b) for b in bounds)
    if not mean_spacing > 0 or not radius > 0:
        raise InfeasibleForestError('spacing and radius must be positive')
    width, height = x_max - x_min, y_max - y_min
    if width < mean_spacing or height < mean_spacing:
        raise InfeasibleForestError(f'bounds {bounds} cannot hold one {mean_spacing} m cell')
    y_mid = 0.5 * (y_min + y_max)
    start = (x_min + 1.0, y_mid) if start is None else start
    goal = (x_max - 1.0, y_mid) if goal is None else goal
    for name, pt in (('start', start), ('goal', goal)):
        if not (x_min <= pt[0] <= x_max and y_min <= pt[1] <= y_max):
            raise InfeasibleForestError(f'{name} point {pt} is outside the bounds {bounds}')

    nx, ny = int(width // mean_spacing), int(height // mean_spacing)
    ix, iy = np.meshgrid(np.arange(nx), np.arange(ny), indexing='ij')
    grid = np.stack([x_min + (ix.ravel() + 0.5) * mean_spacing, y_min + (iy.ravel() + 0.5) * mean_spacing], axis=1)
    rng = np.random.default_rng(seed)
    centers = grid + rng.uniform(-JITTER * mean_spacing, JITTER * mean_spacing, size=grid.shape)

    keep = np.ones(centers.shape[0], dtype=bool)
    for pt in (start, goal):
        keep &= np.hypot(centers[:, 0] - pt[0], centers[:, 1] - pt[1]) - radius >= CLEARANCE
    return ObstacleForest(centers=centers[keep], radii=np.full(int(keep.sum()), radius), spacing=mean_spacing,
                         bounds=(x_min, x_max, y_min, y_max), start=start, goal=goal)


def save_forest(forest: ObstacleForest, path: str) -> str:
    """
    Writes the forest as a JSON list of {x, y, radius}.

    :param forest: Forest
    :param path: Output file
    :return: Path written
    """
    folder = os.path.dirname(path)
    if folder != '':
        os.makedirs(folder, exist_ok=True)
    with open(path, 'w', encoding='utf-8') as f:
        json.dump(forest.to_list(), f, indent=2)
    return path


def load_forest(
        path: str,
        bounds: Bounds = (0.0, 20.0, 0.0, 20.0),
        start: Optional[Point] = None,
        goal: Optional[Point] = None,
        spacing: float = float('nan')
) -> ObstacleForest:
    """
    Reads a forest written by :func:`save_forest`. The file holds only the
    cylinders, so the layout is given again.

    :param path: File
    :param bounds: (x_min, x_max, y_min, y_max)
    :param start: Start point
    :param goal: Goal point
    :param spacing: Spacing the forest was generated with
    :return: Forest
    """
    assert os.path.isfile(path), f'forest file <{path}> does not exist'
    with open(path, 'r', encoding='utf-8') as f:
        data = json.load(f)
    assert isinstance(data, list), 'forest file must hold a list of cylinders'
    centers = np.array([[c['x'], c['y']] for c in data], dtype=float).reshape(-1, 2)
    radii = np.array([c['radius'] for c in data], dtype=float)
    y_mid = 0.5 * (bounds[2] + bounds[3])
    return ObstacleForest(centers=centers, radii=radii, spacing=spacing, bounds=tuple(bounds),
                          start=(bounds[0] + 1.0, y_mid) if start is None else start,
                          goal=(bounds[1] - 1.0, y_mid) if goal is None else goal)
