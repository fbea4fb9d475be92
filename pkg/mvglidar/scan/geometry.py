#
# Measurement and projection model of a MEMS LiDAR.
#
# The projection is the tangent-plane model used throughout the package:
#
#     z = R / sqrt(1 + tan^2(theta) + tan^2(phi))
#     y = z * tan(phi)
#     x = z * tan(theta)
#
# It is not the usual spherical parametrisation: theta and phi are the
# angles of the ray projected on the xz and yz planes. phi increases with the
# raster row index.
#

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy import linalg

from mvglidar.errors import (InvariantError, InvalidIntervalError,
                             SingularityError, BehindSensorError)

SPEED_OF_LIGHT = 2.99792458e8

_HALF_PI = np.pi / 2


class PolarPoint(NamedTuple):
    """Sensor polar coordinates. Fields may be scalars or equal-shape arrays."""
    theta: float
    phi: float
    range: float


class CartesianPoint(NamedTuple):
    """Sensor Cartesian coordinates (metres), z along the boresight."""
    x: float
    y: float
    z: float


@dataclass(frozen=True)
class ScanPattern(object):
    """
    Design-time description of the raster scan.

    Parameters
    ----------
    rows : int
        Number of raster rows per frame.
    k_design : int
        Design number of laser pulses per row.
    theta_range : tuple of float
        (min, max) horizontal azimuth in radians.
    phi_range : tuple of float
        (min, max) vertical azimuth in radians.
    delta_t : float
        Laser pulse interval in seconds.
    serpentine : bool
        Alternate rows are traversed in opposite directions.
    frame_period_laser : float, optional
        Seconds per laser frame, defaults to ``rows * k_design * delta_t``.
    """

    rows: int
    k_design: int
    theta_range: tuple
    phi_range: tuple
    delta_t: float
    serpentine: bool = True
    frame_period_laser: float = None

    def __post_init__(self):
        # Frozen dataclass, so normalise through object.__setattr__
        object.__setattr__(self, 'theta_range', tuple(float(v) for v in self.theta_range))
        object.__setattr__(self, 'phi_range', tuple(float(v) for v in self.phi_range))
        if self.frame_period_laser is None:
            object.__setattr__(self, 'frame_period_laser',
                               self.rows * self.k_design * self.delta_t)

        if int(self.rows) != self.rows or self.rows < 2:
            raise InvariantError('rows', "must be an integer >= 2, got %r" % (self.rows,))
        if int(self.k_design) != self.k_design or self.k_design < 2:
            raise InvariantError('k_design', "must be an integer >= 2, got %r" % (self.k_design,))

        for name in ('theta_range', 'phi_range'):
            lo_hi = getattr(self, name)
            if len(lo_hi) != 2:
                raise InvariantError(name, "must be a (min, max) pair")
            lo, hi = lo_hi
            if not lo < hi:
                raise InvariantError(name, "min must be below max, got %r" % (lo_hi,))
            if max(abs(lo), abs(hi)) >= _HALF_PI:
                raise InvariantError(name, "magnitudes must stay below pi/2")

        if not self.delta_t > 0:
            raise InvariantError('delta_t', "must be positive, got %r" % (self.delta_t,))

        raster_time = self.rows * self.k_design * self.delta_t
        if self.frame_period_laser < raster_time * (1 - 1e-12):
            raise InvariantError('frame_period_laser',
                                 "%g s is shorter than one design raster (%g s)"
                                 % (self.frame_period_laser, raster_time))

    @property
    def pulses_per_frame(self):
        """Number of laser pulses fired per laser frame."""
        return int(round(self.frame_period_laser / self.delta_t))


class AzimuthSequence(object):
    """
    Ordered (theta, phi) pairs of one frame, one per pulse index.

    Parameters
    ----------
    theta, phi : np.ndarray
        Flat arrays of length ``rows * k``.
    rows, k : int
        Raster shape the sequence was generated for.
    """

    def __init__(self, theta, phi, rows, k):
        self.theta = theta
        self.phi = phi
        self.rows = rows
        self.k = k

    def __len__(self):
        return len(self.theta)

    def __getitem__(self, i):
        return (float(self.theta[i]), float(self.phi[i]))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def as_grid(self):
        """Return (theta, phi) reshaped to (rows, k) in traversal order."""
        return self.theta.reshape(self.rows, self.k), self.phi.reshape(self.rows, self.k)


def range_from_tof(t_transmit, t_echo, c=SPEED_OF_LIGHT):
    """
    Time-of-flight range, ``c * (t_echo - t_transmit) / 2``.

    Raises
    ------
    InvalidIntervalError
        If the echo precedes the transmission.
    """
    if not c > 0:
        raise ValueError("speed of light must be positive, got %r" % (c,))
    dt = np.asarray(t_echo, dtype=np.float64) - np.asarray(t_transmit, dtype=np.float64)
    if np.any(dt < 0):
        raise InvalidIntervalError("echo time precedes transmit time")

    r = c * dt / 2
    return float(r) if np.ndim(r) == 0 else r


def _check_azimuth(theta, phi):
    if np.any(np.abs(theta) >= _HALF_PI) or np.any(np.abs(phi) >= _HALF_PI):
        raise SingularityError("azimuth magnitude must be below pi/2")


def polar_to_cartesian(p):
    """
    Project a PolarPoint to Cartesian coordinates.

    Works element-wise when the fields of ``p`` are arrays.

    Parameters
    ----------
    p : PolarPoint

    Returns
    -------
    point : CartesianPoint
    """
    theta = np.asarray(p.theta, dtype=np.float64)
    phi = np.asarray(p.phi, dtype=np.float64)
    r = np.asarray(p.range, dtype=np.float64)
    _check_azimuth(theta, phi)

    tt = np.tan(theta)
    tp = np.tan(phi)
    z = r / np.sqrt(1 + tt**2 + tp**2)

    return CartesianPoint(z * tt, z * tp, z)


def cartesian_to_polar(p):
    """
    Inverse of :func:`polar_to_cartesian`.

    Raises
    ------
    BehindSensorError
        If any z is not strictly positive.
    """
    x = np.asarray(p.x, dtype=np.float64)
    y = np.asarray(p.y, dtype=np.float64)
    z = np.asarray(p.z, dtype=np.float64)
    if np.any(z <= 0):
        raise BehindSensorError("z must be positive")

    return PolarPoint(np.arctan(x / z), np.arctan(y / z), np.sqrt(x**2 + y**2 + z**2))


def design_angles(pattern, k=None):
    """Return the (k,) theta values and the (rows,) phi values of the raster."""
    k = pattern.k_design if k is None else k
    theta = np.linspace(pattern.theta_range[0], pattern.theta_range[1], k)
    phi = np.linspace(pattern.phi_range[0], pattern.phi_range[1], pattern.rows)
    return theta, phi


def design_azimuth_sequence(pattern, k=None):
    """
    Design azimuths in pulse order for one frame.

    Parameters
    ----------
    pattern : ScanPattern
    k : int, optional
        Pulses per row, defaults to ``pattern.k_design``. The simulator passes
        the true value to obtain the mirror's actual path.

    Returns
    -------
    seq : AzimuthSequence
        ``rows * k`` pairs; theta reversed on odd rows for serpentine scans.
    """
    k = pattern.k_design if k is None else k
    theta, phi = design_angles(pattern, k)

    theta_grid = np.tile(theta, (pattern.rows, 1))
    if pattern.serpentine:
        theta_grid[1::2] = theta_grid[1::2, ::-1]
    phi_grid = np.repeat(phi[:, np.newaxis], k, axis=1)

    return AzimuthSequence(theta_grid.ravel(), phi_grid.ravel(), pattern.rows, k)


def fit_plane(points):
    """
    Least-squares plane through a point cloud.

    Parameters
    ----------
    points : np.ndarray([n, 3])

    Returns
    -------
    normal : np.ndarray([3])
        Unit normal, oriented so that its z component is non-negative.
    offset : float
        Signed offset, ``normal . x = offset`` on the plane.
    rms : float
        Root-mean-square point-to-plane distance.
    """
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] < 3:
        raise ValueError("need at least 3 points to fit a plane")

    centroid = points.mean(axis=0)
    _, _, vt = linalg.svd(points - centroid, full_matrices=False)
    normal = vt[-1]
    if normal[2] < 0:
        normal = -normal
    offset = float(np.dot(normal, centroid))

    return normal, offset, plane_rms_residual(points, normal, offset)


def plane_rms_residual(points, normal, offset):
    """RMS distance of ``points`` to the plane ``normal . x = offset``."""
    points = np.asarray(points, dtype=np.float64)
    if points.shape[0] == 0:
        return 0.0
    normal = np.asarray(normal, dtype=np.float64)
    norm = np.linalg.norm(normal)
    d = (points.dot(normal) - offset) / norm
    return float(np.sqrt(np.mean(d**2)))
