#
# Frame drift: when the laser and mirror frame periods differ the start
# offset m changes from frame to frame. The drift per frame is the mean
# absolute change of the per-frame offsets,
#
#     T_e = dT / (n - 1) * sum_j |m(j+1) - m(j)|
#
# with n - 1 replaced by the frame span when frames had to be left out. It
# cannot tell the direction of the drift, so a least-squares slope of
# the offset track is reported next to it.
#

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from mvglidar.errors import CalibrationFailedError, DriftEstimationFailedError
from mvglidar.calib.calibrate import calibrate_frame, fix_k

logger = logging.getLogger(__name__)


@dataclass(eq=False)
class DriftEstimate(object):
    """
    Parameters
    ----------
    t_e : float
        Mean absolute offset change per frame, seconds.
    m_track : np.ndarray
        Recovered start offset of each processed frame, pulses.
    signed_slope : float
        Least-squares slope of ``m_track * delta_t`` against the frame index,
        seconds per frame.
    frames : np.ndarray
        Frame indices of ``m_track``.
    k_star : int, optional
        Pulses per row the track was computed with.
    excluded : list
        Frames whose calibration failed.
    """

    t_e: float
    m_track: np.ndarray
    signed_slope: float
    frames: np.ndarray
    k_star: int = None
    excluded: list = field(default_factory=list)

    def mirror_frame_period(self, frame_period_laser):
        """Actual mirror frame period implied by the signed drift."""
        return frame_period_laser + self.signed_slope


def estimate_drift(m_track, delta_t, frames=None):
    """
    Drift of an explicit offset track.

    Parameters
    ----------
    m_track : array_like of int
    delta_t : float
        Pulse interval in seconds.
    frames : array_like of int, optional
        Frame index of each entry, strictly increasing, defaults to ``0 .. n-1``.
        The summed offset changes are divided by the frame span
        ``frames[-1] - frames[0]``.

    Returns
    -------
    estimate : DriftEstimate
    """
    m_track = np.asarray(m_track, dtype=np.int64)
    n = len(m_track)
    if n < 2:
        raise DriftEstimationFailedError("need at least 2 frames, got %d" % n)
    frames = np.arange(n) if frames is None else np.asarray(frames, dtype=np.int64)
    if len(frames) != n or np.any(np.diff(frames) < 1):
        raise DriftEstimationFailedError("frame indices must be strictly increasing, got %s"
                                         % frames.tolist())
    span = int(frames[-1] - frames[0])

    # a step across excluded frames covers more than one frame period
    steps = int(np.abs(np.diff(m_track)).sum())
    t_e = delta_t * steps / span
    slope = float(stats.linregress(frames, m_track * delta_t).slope)

    return DriftEstimate(t_e, m_track, slope, frames)


def modal_k(k_stars):
    """Most frequent k, ties to the smallest."""
    values, counts = np.unique(np.asarray(k_stars), return_counts=True)
    return int(values[np.argmax(counts)])


def track_offsets(stream, search, pattern, cost='mvg'):
    """
    Per-frame start offsets and the frame drift of a multi-frame stream.

    A first pass estimates k on every frame, or on the first
    ``search.k_probe_frames`` frames when that is non-zero, and freezes it to
    the modal value; every frame is then calibrated for m only.
    Frames whose calibration fails are logged and excluded.

    Returns
    -------
    estimate : DriftEstimate

    Raises
    ------
    DriftEstimationFailedError
        If fewer than two frames survive.
    """
    n = stream.n_frames
    if n < 2:
        raise DriftEstimationFailedError("need at least 2 frames, got %d" % n)

    n_probe = n if search.k_probe_frames == 0 else min(n, search.k_probe_frames)
    k_stars = []
    for j in range(n_probe):
        try:
            k_stars.append(calibrate_frame(stream[j], search, pattern, cost).k_star)
        except CalibrationFailedError as e:
            logger.warning("Frame %d: k probe failed (%s)", j, e)
    if not k_stars:
        raise DriftEstimationFailedError("k could not be estimated on any probe frame")

    k_star = modal_k(k_stars)
    logger.info("Pulses per row frozen to k=%d from %d probe frame(s)", k_star, len(k_stars))

    fixed = fix_k(search, k_star)
    m_track = []
    frames = []
    excluded = []
    for j in range(n):
        try:
            m_track.append(calibrate_frame(stream[j], fixed, pattern, cost).m_star)
            frames.append(j)
        except CalibrationFailedError as e:
            logger.warning("Frame %d excluded from drift estimate (%s)", j, e)
            excluded.append(j)
        if (j + 1) % 10 == 0:
            logger.debug("Tracked %d/%d frames", j + 1, n)

    if len(m_track) < 2:
        raise DriftEstimationFailedError("only %d frame(s) survived calibration" % len(m_track))

    estimate = estimate_drift(m_track, stream.delta_t, frames)
    estimate.k_star = k_star
    estimate.excluded = excluded

    logger.info("Drift T_e=%.6g s over %d frames (signed slope %.6g s/frame)",
                estimate.t_e, len(m_track), estimate.signed_slope)
    return estimate
