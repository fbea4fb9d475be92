#
# Scan simulator: ray-casts a scene along the mirror's actual pointing and
# pairs the resulting ranges with the laser's pulse clock.
#
# The laser fires pulses_per_frame pulses per frame. The mirror starts its
# raster o(j) pulses after the laser frame starts, o(j) = round(m_start +
# drift * j), and spends k_true pulses on each row. Pulses outside the raster
# (before the start, or after the last row) fall in the mirror's reset phase
# and return an invalid echo (NaN).
#

import logging
from dataclasses import dataclass

import numpy as np

from mvglidar.errors import InvariantError
from mvglidar.scan.geometry import design_angles, design_azimuth_sequence

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class MisalignmentSpec(object):
    """
    Ground-truth timing misalignment between laser and mirror.

    Parameters
    ----------
    m_start : int
        Pulses the laser fires before the mirror starts its raster at frame 0.
    drift_pulses_per_frame : float
        Per-frame accumulation of the start offset, in pulses.
    k_true : int
        Actual pulses per mirror row.
    """

    m_start: int = 0
    drift_pulses_per_frame: float = 0.0
    k_true: int = None

    def __post_init__(self):
        if int(self.m_start) != self.m_start or self.m_start < 0:
            raise InvariantError('m_start', "must be an integer >= 0, got %r" % (self.m_start,))
        if self.k_true is not None and (int(self.k_true) != self.k_true or self.k_true < 2):
            raise InvariantError('k_true', "must be an integer >= 2, got %r" % (self.k_true,))

    @classmethod
    def aligned(cls, pattern):
        """No offset, no drift, ``k_true == k_design``."""
        return cls(0, 0.0, pattern.k_design)

    def resolve_k(self, pattern):
        return pattern.k_design if self.k_true is None else int(self.k_true)


@dataclass(frozen=True)
class NoiseSpec(object):
    """
    Range noise and dropouts applied to simulated samples.

    The per-sample standard deviation is
    ``sqrt(range_sigma**2 + (range_sigma_rel * range)**2)``.
    """

    range_sigma: float = 0.0
    range_sigma_rel: float = 0.02
    dropout_prob: float = 0.01
    rng_seed: int = 0

    def __post_init__(self):
        if not self.range_sigma >= 0:
            raise InvariantError('range_sigma', "must be >= 0")
        if not self.range_sigma_rel >= 0:
            raise InvariantError('range_sigma_rel', "must be >= 0")
        if not 0 <= self.dropout_prob < 1:
            raise InvariantError('dropout_prob', "must lie in [0, 1)")
        if int(self.rng_seed) != self.rng_seed or not 0 <= self.rng_seed < 2**64:
            raise InvariantError('rng_seed', "must be an unsigned 64-bit integer")

    @classmethod
    def none(cls, rng_seed=0):
        """Noiseless simulation."""
        return cls(0.0, 0.0, 0.0, rng_seed)

    @property
    def is_noiseless(self):
        return self.range_sigma == 0 and self.range_sigma_rel == 0 and self.dropout_prob == 0


class RangeStream(object):
    """
    Periodic sequence of measured ranges, one row per frame.

    Parameters
    ----------
    frames : np.ndarray([n_frames, pulses_per_frame])
        Ranges in metres, NaN for invalid echoes.
    delta_t : float
        Pulse interval in seconds.
    """

    def __init__(self, frames, delta_t):
        frames = np.asarray(frames, dtype=np.float64)
        if frames.ndim != 2:
            raise InvariantError('frames', "expected a 2D array, got shape %r" % (frames.shape,))
        if np.any(frames < 0):
            raise InvariantError('frames', "ranges must be >= 0 or invalid")
        if not delta_t > 0:
            raise InvariantError('delta_t', "must be positive")
        self.frames = frames
        self.delta_t = float(delta_t)

    @property
    def n_frames(self):
        return self.frames.shape[0]

    @property
    def pulses_per_frame(self):
        return self.frames.shape[1]

    def __len__(self):
        return self.n_frames

    def __getitem__(self, j):
        return self.frames[j]

    def equals(self, other):
        """Bit-identical comparison, invalid echoes compare equal."""
        return (self.delta_t == other.delta_t
                and self.frames.shape == other.frames.shape
                and np.array_equal(self.frames, other.frames, equal_nan=True))


def frame_offset(spec, frame_index):
    """Integer start offset of the mirror raster at frame ``frame_index``."""
    return int(np.floor(spec.m_start + spec.drift_pulses_per_frame * frame_index + 0.5))


def offset_schedule(spec, n_frames):
    """Injected offsets of frames ``0 .. n_frames - 1``."""
    return np.array([frame_offset(spec, j) for j in range(n_frames)], dtype=np.int64)


def mirror_pointing(pattern, spec, frame_index, pulse_index):
    """
    Actual mirror azimuth when the laser fires ``pulse_index`` of a frame.

    Returns
    -------
    pointing : tuple of float or None
        ``(theta, phi)``, or None while the mirror is resetting.
    """
    if not 0 <= pulse_index < pattern.pulses_per_frame:
        raise IndexError("pulse index %d outside [0, %d)" % (pulse_index, pattern.pulses_per_frame))

    k_true = spec.resolve_k(pattern)
    q = pulse_index - frame_offset(spec, frame_index)
    if q < 0 or q >= pattern.rows * k_true:
        return None

    row, col = divmod(q, k_true)
    if pattern.serpentine and row % 2 == 1:
        col = k_true - 1 - col
    theta, phi = design_angles(pattern, k_true)

    return (float(theta[col]), float(phi[row]))


def _frame_seed(rng_seed, frame_index):
    return int(rng_seed) ^ int(frame_index)


def _apply_noise(frame, noise, frame_index):
    rng = np.random.default_rng(_frame_seed(noise.rng_seed, frame_index))

    valid = np.isfinite(frame)
    sigma = np.sqrt(noise.range_sigma**2 + (noise.range_sigma_rel * np.where(valid, frame, 0.0))**2)
    jitter = rng.normal(0.0, 1.0, frame.shape) * sigma
    drop = rng.random(frame.shape) < noise.dropout_prob

    out = np.clip(frame + jitter, 0.0, None)
    out[drop] = np.nan
    return out


def simulate_frames(scene, pattern, spec, noise, n_frames):
    """
    Simulate ``n_frames`` frames of ranges paired with the laser pulse clock.

    Parameters
    ----------
    scene : Scene
    pattern : ScanPattern
    spec : MisalignmentSpec
    noise : NoiseSpec
        Each frame draws from its own generator seeded with
        ``rng_seed ^ frame_index``.
    n_frames : int

    Returns
    -------
    stream : RangeStream
    """
    if n_frames < 1:
        raise InvariantError('n_frames', "must be >= 1, got %r" % (n_frames,))

    k_true = spec.resolve_k(pattern)
    ppf = pattern.pulses_per_frame
    n_cells = pattern.rows * k_true

    # The scene is static, so the mirror's raster image is cast once
    path = design_azimuth_sequence(pattern, k_true)
    raster = scene.ray_range(path.theta, path.phi)

    pulses = np.arange(ppf)
    frames = np.full((n_frames, ppf), np.nan)
    for j in range(n_frames):
        q = pulses - frame_offset(spec, j)
        on = (q >= 0) & (q < n_cells)
        frames[j, on] = raster[q[on]]
        if not noise.is_noiseless:
            frames[j] = _apply_noise(frames[j], noise, j)

    logger.debug("Simulated %d frames of %d pulses (k_true=%d, m_start=%d, drift=%g)",
                 n_frames, ppf, k_true, spec.m_start, spec.drift_pulses_per_frame)

    return RangeStream(frames, pattern.delta_t)
