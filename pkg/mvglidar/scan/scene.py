"""Synthetic scenes and ray casting along the tangent-plane direction model."""

from dataclasses import dataclass, field

import numpy as np

from mvglidar.errors import InvariantError
from mvglidar.scan.geometry import _check_azimuth


@dataclass(frozen=True)
class Plane(object):
    """Infinite plane ``normal . x = offset``; ``normal`` must be unit length."""

    normal: tuple
    offset: float

    def __post_init__(self):
        normal = tuple(float(v) for v in self.normal)
        object.__setattr__(self, 'normal', normal)
        object.__setattr__(self, 'offset', float(self.offset))
        if len(normal) != 3:
            raise InvariantError('normal', "needs 3 components")
        if abs(np.linalg.norm(normal) - 1.0) > 1e-9:
            raise InvariantError('normal', "must be unit length, |n| = %r" % np.linalg.norm(normal))

    def intersect(self, d):
        """Ray parameter t of the hit for directions ``d`` (n, 3), inf on miss."""
        denom = d.dot(np.asarray(self.normal))
        with np.errstate(divide='ignore', invalid='ignore'):
            t = self.offset / denom
        t[~(t > 0) | ~np.isfinite(t)] = np.inf
        return t


@dataclass(frozen=True)
class Box(object):
    """Axis aligned box given by its minimum and maximum corners."""

    min: tuple
    max: tuple

    def __post_init__(self):
        lo = tuple(float(v) for v in self.min)
        hi = tuple(float(v) for v in self.max)
        object.__setattr__(self, 'min', lo)
        object.__setattr__(self, 'max', hi)
        if len(lo) != 3 or len(hi) != 3:
            raise InvariantError('box', "corners need 3 components")
        if not all(a < b for a, b in zip(lo, hi)):
            raise InvariantError('box', "min corner must be below max corner on every axis")

    def intersect(self, d):
        """Slab test from the origin; nearest positive t, inf on miss."""
        lo = np.asarray(self.min)
        hi = np.asarray(self.max)
        with np.errstate(divide='ignore', invalid='ignore'):
            inv = 1.0 / d
            t1 = lo * inv
            t2 = hi * inv
        tmin = np.minimum(t1, t2)
        tmax = np.maximum(t1, t2)

        # Zero direction component: inside the slab means unbounded, else miss
        flat = d == 0
        inside = (lo <= 0) & (0 <= hi)
        tmin = np.where(flat, np.where(inside, -np.inf, np.inf), tmin)
        tmax = np.where(flat, np.where(inside, np.inf, -np.inf), tmax)

        t_near = tmin.max(axis=1)
        t_far = tmax.min(axis=1)

        hit = t_far >= np.maximum(t_near, 0)
        t = np.where(t_near > 0, t_near, t_far)
        t[~hit | ~(t > 0)] = np.inf
        return t


@dataclass(frozen=True)
class Scene(object):
    """
    Static scene made of planes and boxes.

    Parameters
    ----------
    primitives : tuple
        Plane and Box instances.
    background_range : float, optional
        Range returned by rays that hit nothing; invalid echo (NaN) when None.
    """

    primitives: tuple = field(default_factory=tuple)
    background_range: float = None

    def __post_init__(self):
        object.__setattr__(self, 'primitives', tuple(self.primitives))
        if self.background_range is not None and not self.background_range >= 0:
            raise InvariantError('background_range', "must be >= 0")

    def _cast(self, theta, phi):
        theta = np.asarray(theta, dtype=np.float64)
        phi = np.asarray(phi, dtype=np.float64)
        _check_azimuth(theta, phi)
        theta, phi = np.broadcast_arrays(theta, phi)
        shape = theta.shape

        d = np.stack([np.tan(theta).ravel(), np.tan(phi).ravel(),
                      np.ones(theta.size)], axis=1)

        t_best = np.full(theta.size, np.inf)
        index = np.full(theta.size, -1, dtype=np.int64)
        for pi, prim in enumerate(self.primitives):
            t = prim.intersect(d)
            closer = t < t_best
            t_best[closer] = t[closer]
            index[closer] = pi

        return d, t_best, index, shape

    def hit_index(self, theta, phi):
        """Index of the primitive each ray hits first, -1 for a miss."""
        _, _, index, shape = self._cast(theta, phi)
        return index.reshape(shape)

    def ray_range(self, theta, phi):
        """
        Distance to the first hit along the ray of direction (tan theta, tan phi, 1).

        Parameters
        ----------
        theta, phi : float or np.ndarray
            Azimuths in radians, broadcast against each other.

        Returns
        -------
        r : float or np.ndarray
            Euclidean distance; ``background_range`` on a miss, or NaN when
            the scene has no background.
        """
        d, t, _, shape = self._cast(theta, phi)
        r = t * np.linalg.norm(d, axis=1)

        miss = ~np.isfinite(r)
        background = np.nan if self.background_range is None else self.background_range
        r[miss] = background

        r = r.reshape(shape)
        return float(r) if r.ndim == 0 else r


def ray_range(scene, theta, phi):
    """Functional form of :meth:`Scene.ray_range`."""
    return scene.ray_range(theta, phi)


def scene_from_dict(d):
    """
    Build a Scene from its parsed config section.

    Expected keys: ``background_range`` (optional) and ``primitives``, a list
    of ``{type: plane, normal, offset}`` or ``{type: box, min, max}``.
    """
    primitives = []
    for pi, prim in enumerate(d.get('primitives') or []):
        kind = prim.get('type')
        needed = {'plane': ('normal', 'offset'), 'box': ('min', 'max')}.get(kind, ())
        for key in needed:
            if key not in prim:
                raise InvariantError('primitives[%d].%s' % (pi, key), "is required")
        if kind == 'plane':
            primitives.append(Plane(prim['normal'], prim['offset']))
        elif kind == 'box':
            primitives.append(Box(prim['min'], prim['max']))
        else:
            raise InvariantError('primitives[%d].type' % pi,
                                 "unknown primitive type %r" % (kind,))

    return Scene(tuple(primitives), d.get('background_range'))
