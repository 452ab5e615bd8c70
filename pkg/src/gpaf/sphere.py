"""Geometry of the unit-area sphere.

Points are unit 3-vectors and every distance is the central angle in
[0, pi]. The physical radius of the area-one sphere, 1/(2*sqrt(pi)),
never enters any computation: kernels, integrals and cap measures are
all functions of the central angle alone, so unit vectors carry the
whole geometry.
"""

from __future__ import annotations

import numpy as np

__all__ = [
    "sample_uniform",
    "angular_distance",
    "angular_distances",
    "cap_area",
    "is_unit",
]


def sample_uniform(rng: np.random.Generator, size: int | None = None) -> np.ndarray:
    """Draw points uniformly on the sphere.

    Uses the exact, branch-free construction: the z-coordinate is
    uniform on [-1, 1] and the azimuth uniform on [0, 2*pi). Returns a
    single (3,) unit vector, or an (size, 3) array when ``size`` is
    given.
    """
    n = 1 if size is None else int(size)
    z = rng.uniform(-1.0, 1.0, n)
    phi = rng.uniform(0.0, 2.0 * np.pi, n)
    s = np.sqrt(np.maximum(0.0, 1.0 - z * z))
    pts = np.stack((s * np.cos(phi), s * np.sin(phi), z), axis=1)
    if size is None:
        return pts[0]
    return pts


def angular_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Central angle between two unit vectors, clamped into [0, pi].

    The dot product is clipped into [-1, 1] before the inverse cosine so
    numerically identical or antipodal points cannot produce NaN.
    """
    return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))


def angular_distances(points: np.ndarray, u: np.ndarray) -> np.ndarray:
    """Central angles from each row of ``points`` (shape (k, 3)) to ``u``."""
    return np.arccos(np.clip(points @ u, -1.0, 1.0))


def cap_area(rho) -> float | np.ndarray:
    """Measure of a spherical cap of angular radius ``rho`` on the unit-area sphere.

    Equals (1 - cos(rho)) / 2, so ``cap_area(0) == 0``,
    ``cap_area(pi/2) == 0.5`` and ``cap_area(pi) == 1``. For small rho
    the measure behaves like rho**2 / 4.
    """
    r = np.asarray(rho, dtype=float)
    if np.any(r < 0.0) or np.any(r > np.pi):
        raise ValueError("cap radius must lie in [0, pi]")
    a = 0.5 * (1.0 - np.cos(r))
    if np.ndim(rho) == 0:
        return float(a)
    return a


def is_unit(p: np.ndarray, tol: float = 1e-12) -> bool:
    """True when ``p`` has Euclidean norm 1 within ``tol``."""
    return abs(float(np.linalg.norm(p)) - 1.0) <= tol
