"""Registration of a frame under a hypothesis (m, k) and its gradient costs."""

from dataclasses import dataclass

import numpy as np

from mvglidar.errors import HypothesisOutOfRangeError, NoSignalError


@dataclass(frozen=True, eq=False)
class FrameGrid(object):
    """
    One frame's ranges laid out as a (rows_used, k) image.

    Row r holds samples ``m + r*k .. m + (r+1)*k - 1``; odd rows are reversed
    for serpentine scans so that column c always maps to the same theta.
    Invalid echoes are NaN.
    """

    values: np.ndarray
    m: int
    k: int
    serpentine: bool

    @property
    def rows_used(self):
        return self.values.shape[0]


def reshape_frame(frame, m, k, serpentine=False):
    """
    Register ``frame`` under the hypothesis (m, k).

    The first ``m`` samples and any trailing partial row are dropped.

    Raises
    ------
    HypothesisOutOfRangeError
        If ``m`` or ``k`` do not fit the frame.
    """
    frame = np.asarray(frame, dtype=np.float64)
    n = frame.shape[0]
    if not 0 <= m < n:
        raise HypothesisOutOfRangeError("m=%d outside [0, %d)" % (m, n))
    if not 2 <= k <= n - m:
        raise HypothesisOutOfRangeError("k=%d outside [2, %d]" % (k, n - m))

    rows = (n - m) // k
    values = frame[m:m + rows * k].reshape(rows, k).copy()
    if serpentine:
        values[1::2] = values[1::2, ::-1]

    return FrameGrid(values, int(m), int(k), bool(serpentine))


def mvg_cost(grid, normalize=True):
    """
    Minimum Vertical Gradient cost of a registered frame.

    Sums ``|grid[r+1, c] - grid[r, c]|`` over every vertical pair whose two
    cells are valid.

    Parameters
    ----------
    grid : FrameGrid
    normalize : bool
        Divide by the number of valid pairs (default). When False the raw sum
        is returned, which favours hypotheses with fewer pairs.

    Returns
    -------
    cost : float
    valid_pairs : int

    Raises
    ------
    NoSignalError
        If the grid has no valid vertical pair.
    """
    v = grid.values
    if v.shape[0] < 2:
        raise NoSignalError("grid has %d row(s), need >= 2" % v.shape[0])

    d = np.abs(v[1:] - v[:-1])
    valid = np.isfinite(d)
    pairs = int(np.count_nonzero(valid))
    if pairs == 0:
        raise NoSignalError("no valid vertical pairs")

    total = float(d[valid].sum())
    if normalize:
        return total / pairs, pairs
    return total, pairs


def _tv_terms(grid):
    """Sum and count of the valid forward-difference gradient magnitudes."""
    v = grid.values
    if v.shape[0] < 2 or v.shape[1] < 2:
        raise NoSignalError("grid of shape %r has no neighbourhoods" % (v.shape,))

    dx = v[:-1, 1:] - v[:-1, :-1]
    dy = v[1:, :-1] - v[:-1, :-1]
    mag = np.sqrt(dx**2 + dy**2)
    valid = np.isfinite(mag)
    count = int(np.count_nonzero(valid))
    if count == 0:
        raise NoSignalError("no valid neighbourhoods")

    return float(mag[valid].sum()), count


def tv_cost(grid):
    """
    Mean isotropic total variation with forward differences.

    Used to compare the vertical-only prior against the full gradient.

    Raises
    ------
    NoSignalError
        If no 2x2 neighbourhood is fully valid.
    """
    total, count = _tv_terms(grid)
    return total / count
