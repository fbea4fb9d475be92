#
# Self-calibration of the laser/mirror timing by exhaustive search of the
# registration hypothesis (m, k) that minimises the vertical gradient.
#
# The azimuth sequence is fixed, so re-gridding the ranges under
# (m, k) is equivalent to re-gridding the azimuths: both views pair range
# sample m + i with design cell i.
#

import logging
from dataclasses import dataclass, replace

import numpy as np

from mvglidar.errors import (InvariantError, HypothesisOutOfRangeError,
                             NoSignalError, CalibrationFailedError)
from mvglidar.scan.geometry import design_angles, polar_to_cartesian, PolarPoint
from mvglidar.calib.cost import reshape_frame, mvg_cost, _tv_terms

try:
    from mvglidar.calib import _fast_cost
except ImportError:
    # Source checkout without a built extension
    _fast_cost = None

logger = logging.getLogger(__name__)

COSTS = ('mvg', 'mvg_raw', 'tv')


@dataclass(frozen=True)
class SearchSpec(object):
    """
    Bounds and acceptance rules of the (m, k) grid search.

    Parameters
    ----------
    m_range : tuple of int
        Inclusive (0, m_max) interval of start offsets in pulses.
    k_range : tuple of int
        Inclusive (k_min, k_max) interval of pulses per row.
    min_valid_pairs : int
        A hypothesis scoring fewer valid pairs is inadmissible.
    degeneracy_ratio : float
        Relative gap to the runner-up below which a result is flagged.
    k_probe_frames : int
        Leading frames used to estimate k before drift tracking; 0 (the
        default) probes every frame of the stream.
    """

    m_range: tuple
    k_range: tuple
    min_valid_pairs: int = 1
    degeneracy_ratio: float = 0.01
    k_probe_frames: int = 0

    def __post_init__(self):
        object.__setattr__(self, 'm_range', tuple(int(v) for v in self.m_range))
        object.__setattr__(self, 'k_range', tuple(int(v) for v in self.k_range))
        m0, m1 = self.m_range
        k0, k1 = self.k_range
        if m0 < 0 or m1 < m0:
            raise InvariantError('m_range', "need 0 <= m_min <= m_max, got %r" % (self.m_range,))
        if k0 < 2 or k1 < k0:
            raise InvariantError('k_range', "need 2 <= k_min <= k_max, got %r" % (self.k_range,))
        if self.min_valid_pairs < 1:
            raise InvariantError('min_valid_pairs', "must be >= 1")
        if not self.degeneracy_ratio >= 0:
            raise InvariantError('degeneracy_ratio', "must be >= 0")
        if self.k_probe_frames < 0:
            raise InvariantError('k_probe_frames', "must be >= 0")

    @classmethod
    def around(cls, pattern, m_max=49, k_halfwidth=5, **kwargs):
        """Search ``[0, m_max]`` and ``k_design +- k_halfwidth``."""
        k0 = max(2, pattern.k_design - k_halfwidth)
        return cls((0, m_max), (k0, pattern.k_design + k_halfwidth), **kwargs)

    @property
    def ms(self):
        return np.arange(self.m_range[0], self.m_range[1] + 1)

    @property
    def ks(self):
        return np.arange(self.k_range[0], self.k_range[1] + 1)


@dataclass(eq=False)
class CostSurface(object):
    """
    Cost of every hypothesis of a search grid.

    ``cost[i, j]`` belongs to ``(ms[i], ks[j])``; inadmissible cells hold NaN.
    ``total`` keeps the unnormalised sums.
    """

    ms: np.ndarray
    ks: np.ndarray
    cost: np.ndarray
    valid_pairs: np.ndarray
    total: np.ndarray = None

    @property
    def admissible(self):
        return np.isfinite(self.cost)

    def cell(self, m, k):
        """(cost, valid_pairs) of hypothesis (m, k)."""
        i = int(np.searchsorted(self.ms, m))
        j = int(np.searchsorted(self.ks, k))
        if i >= len(self.ms) or self.ms[i] != m or j >= len(self.ks) or self.ks[j] != k:
            raise KeyError((m, k))
        return float(self.cost[i, j]), int(self.valid_pairs[i, j])

    def best_index(self):
        """
        Index of the admissible minimum.

        Cells are scanned m-major, so ties go to the smallest m and then the
        smallest k.
        """
        if not self.admissible.any():
            raise CalibrationFailedError("no admissible hypothesis in the search grid")
        return np.unravel_index(np.nanargmin(self.cost), self.cost.shape)

    def runner_up(self, index):
        """Smallest admissible cost outside the 8-neighbourhood of ``index``."""
        i, j = index
        masked = self.cost.copy()
        masked[max(0, i - 1):i + 2, max(0, j - 1):j + 2] = np.nan
        if not np.isfinite(masked).any():
            return None
        return float(np.nanmin(masked))


@dataclass(eq=False)
class CalibrationResult(object):
    """Recovered registration of one frame; ``t_s = delta_t * m_star``."""

    m_star: int
    k_star: int
    t_s: float
    cost_surface: CostSurface
    degenerate: bool
    cost: float
    gap: float


def _surface_sums_numpy(frame, ms, ks, serpentine, cost):
    total = np.zeros((len(ms), len(ks)))
    pairs = np.zeros((len(ms), len(ks)), dtype=np.int64)
    for i, m in enumerate(ms):
        for j, k in enumerate(ks):
            try:
                grid = reshape_frame(frame, m, k, serpentine)
                if cost == 'tv':
                    total[i, j], pairs[i, j] = _tv_terms(grid)
                else:
                    total[i, j], pairs[i, j] = mvg_cost(grid, normalize=False)
            except (HypothesisOutOfRangeError, NoSignalError):
                pass
    return total, pairs


def cost_surface(frame, search, serpentine, cost='mvg'):
    """
    Evaluate a cost over the whole search grid.

    Parameters
    ----------
    frame : np.ndarray
        One frame of ranges, NaN for invalid echoes.
    search : SearchSpec
    serpentine : bool
    cost : {'mvg', 'mvg_raw', 'tv'}
        Normalised MVG (default), raw MVG sum, or mean total variation.

    Returns
    -------
    surface : CostSurface
    """
    if cost not in COSTS:
        raise ValueError("unknown cost %r, expected one of %s" % (cost, ', '.join(COSTS)))

    frame = np.ascontiguousarray(frame, dtype=np.float64)
    ms = search.ms
    ks = search.ks

    if cost != 'tv' and _fast_cost is not None:
        total, pairs = _fast_cost._mvg_surface(frame, ms.astype(np.intp), ks.astype(np.intp),
                                               bool(serpentine))
    else:
        total, pairs = _surface_sums_numpy(frame, ms, ks, serpentine, cost)

    ok = (pairs >= search.min_valid_pairs) & (pairs > 0)
    with np.errstate(divide='ignore', invalid='ignore'):
        if cost == 'mvg_raw':
            values = total.copy()
        else:
            values = total / pairs
    values[~ok] = np.nan

    return CostSurface(ms, ks, values, pairs, total)


def _relative_gap(best, runner):
    if runner is None:
        return np.inf
    if best == 0:
        return 0.0 if runner == 0 else np.inf
    return (runner - best) / best


def calibrate_frame(frame, search, pattern, cost='mvg'):
    """
    Recover the start offset m and the pulses per row k of one frame.

    Parameters
    ----------
    frame : np.ndarray
    search : SearchSpec
    pattern : ScanPattern
        Supplies the pulse interval and the scan direction mode.
    cost : {'mvg', 'mvg_raw', 'tv'}

    Returns
    -------
    result : CalibrationResult

    Raises
    ------
    CalibrationFailedError
        If every hypothesis is inadmissible.
    """
    frame = np.asarray(frame, dtype=np.float64)
    if frame.shape[0] < 2 * search.k_range[0]:
        raise HypothesisOutOfRangeError("frame of %d pulses is shorter than two rows of %d"
                                        % (frame.shape[0], search.k_range[0]))
    if search.k_range[1] > frame.shape[0]:
        raise InvariantError('k_range', "k_max=%d exceeds the frame length %d"
                             % (search.k_range[1], frame.shape[0]))

    surface = cost_surface(frame, search, pattern.serpentine, cost)
    i, j = surface.best_index()
    best = float(surface.cost[i, j])
    gap = _relative_gap(best, surface.runner_up((i, j)))

    m_star = int(surface.ms[i])
    k_star = int(surface.ks[j])
    degenerate = bool(gap < search.degeneracy_ratio)

    logger.debug("Calibrated frame: m*=%d k*=%d J=%.6g gap=%.3g", m_star, k_star, best, gap)
    if degenerate:
        logger.warning("Degenerate cost surface: relative gap %.3g below %.3g",
                       gap, search.degeneracy_ratio)

    return CalibrationResult(m_star, k_star, pattern.delta_t * m_star, surface,
                             degenerate, best, gap)


def fix_k(search, k):
    """Copy of ``search`` restricted to a single k."""
    return replace(search, k_range=(k, k))


def reconstruct_point_cloud(frame, m, k, pattern):
    """
    Point cloud of one frame registered under (m, k).

    Grid cell (r, c) is paired with the design azimuth of row r and column c
    of a k-column raster spanning the pattern's angular extents. Invalid
    cells, and rows past the last raster row, are omitted.

    Returns
    -------
    points : np.ndarray([n, 3])
    """
    grid = reshape_frame(frame, m, k, pattern.serpentine)
    rows = min(grid.rows_used, pattern.rows)
    values = grid.values[:rows]

    theta, phi = design_angles(pattern, k)
    th, ph = np.meshgrid(theta, phi[:rows])
    valid = np.isfinite(values)

    p = polar_to_cartesian(PolarPoint(th[valid], ph[valid], values[valid]))
    return np.stack([p.x, p.y, p.z], axis=-1).reshape(-1, 3)
