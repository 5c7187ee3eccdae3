"""Analytic terrain scenes: a flat base plane plus step, rock, outcrop and slope features."""

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Optional, Tuple

import numpy as np

from config import (
    DEFAULT_SOIL_FRICTION,
    DEFAULT_OBSTACLE_FRICTION,
    DEFAULT_OUTCROP_LENGTH,
    DEFAULT_OUTCROP_MAX_HEIGHT,
    DEFAULT_OUTCROP_WIDTH,
    DEFAULT_OUTCROP_TAPER,
    OUTCROP_WAVELENGTHS,
    OUTCROP_SCAN_RESOLUTION,
)

# Stand-in for infinity in polyline vertices, m
_FAR = 1.0e3
_UP = np.array([0.0, 0.0, 1.0])
# Sampling step for the outcrop contact slice, m
_SLICE_RESOLUTION = 1e-3


@dataclass(frozen=True)
class SurfaceHit:
    """Deepest point of a terrain surface inside a wheel sphere."""
    penetration: float
    point: np.ndarray
    normal: np.ndarray
    on_feature: bool


def _sphere_vs_polyline(center, radius, vertices, feature_segments, height_at) -> Optional[SurfaceHit]:
    """Closest-point contact between a sphere and an x-z polyline spanning all y."""
    cx, cy, cz = center
    a = vertices[:-1]
    b = vertices[1:]
    ab = b - a
    c = np.array([cx, cz])
    t = np.clip(np.einsum('ij,ij->i', c - a, ab) / np.einsum('ij,ij->i', ab, ab), 0.0, 1.0)
    closest = a + t[:, None] * ab
    diff = c - closest
    dist_sq = np.einsum('ij,ij->i', diff, diff)
    idx = int(np.argmin(dist_sq))
    dist = math.sqrt(dist_sq[idx])
    if dist > 0.0:
        nx, nz = diff[idx] / dist
    else:
        nx, nz = 0.0, 1.0
    inside = cz < height_at(cx)
    if inside:
        # Centre buried below the surface: push out through the nearest face
        penetration = radius + dist
        nx, nz = -nx, -nz
    else:
        penetration = radius - dist
    if penetration <= 0.0:
        return None
    px, pz = closest[idx]
    return SurfaceHit(
        penetration=penetration,
        point=np.array([px, cy, pz]),
        normal=np.array([nx, 0.0, nz]),
        on_feature=idx in feature_segments,
    )


@dataclass(frozen=True)
class Step:
    """Full-width step: ground level before face_x, `height` after it."""
    face_x: float
    height: float
    friction: float = DEFAULT_OBSTACLE_FRICTION

    def __post_init__(self):
        if self.height <= 0:
            raise ValueError("Step height must be positive")
        if self.friction < 0:
            raise ValueError("Friction coefficient must not be negative")

    @property
    def start_x(self) -> float:
        return self.face_x

    @property
    def end_x(self) -> float:
        return self.face_x

    def footprint(self):
        return (self.face_x, math.inf, -math.inf, math.inf)

    def height_at(self, x, y):
        return np.where(np.asarray(x) >= self.face_x, self.height, 0.0)

    def gradient_at(self, x, y):
        zeros = np.zeros_like(np.asarray(x, dtype=float))
        return zeros, zeros

    def surface_contact(self, center, radius) -> Optional[SurfaceHit]:
        cx, _, cz = center
        # Ahead of the face or above the top only the base plane can be touched
        if cx + radius < self.face_x or cz - radius >= self.height:
            return None
        vertices = np.array([
            [self.face_x - _FAR, 0.0],
            [self.face_x, 0.0],
            [self.face_x, self.height],
            [self.face_x + _FAR, self.height],
        ])
        return _sphere_vs_polyline(center, radius, vertices, (1, 2),
                                   lambda x: float(self.height_at(x, 0.0)))


@dataclass(frozen=True)
class Slope:
    """Full-width ramp of `length` along the incline, followed by a plateau."""
    start_x: float
    length: float
    angle: float
    friction: float = DEFAULT_SOIL_FRICTION

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("Slope length must be positive")
        if not (0 < self.angle < math.pi / 2):
            raise ValueError("Slope angle must be between 0 and 90 degrees")
        if self.friction < 0:
            raise ValueError("Friction coefficient must not be negative")

    @property
    def rise(self) -> float:
        return self.length * math.sin(self.angle)

    @property
    def crest_x(self) -> float:
        return self.start_x + self.length * math.cos(self.angle)

    @property
    def end_x(self) -> float:
        return self.crest_x

    def footprint(self):
        return (self.start_x, math.inf, -math.inf, math.inf)

    def height_at(self, x, y):
        x = np.asarray(x, dtype=float)
        ramp = (x - self.start_x) * math.tan(self.angle)
        return np.clip(ramp, 0.0, self.rise)

    def gradient_at(self, x, y):
        x = np.asarray(x, dtype=float)
        on_ramp = (x >= self.start_x) & (x < self.crest_x)
        gx = np.where(on_ramp, math.tan(self.angle), 0.0)
        return gx, np.zeros_like(gx)

    def surface_contact(self, center, radius) -> Optional[SurfaceHit]:
        cx, _, cz = center
        if cx + radius < self.start_x or cz - radius >= self.rise:
            return None
        vertices = np.array([
            [self.start_x - _FAR, 0.0],
            [self.start_x, 0.0],
            [self.crest_x, self.rise],
            [self.crest_x + _FAR, self.rise],
        ])
        return _sphere_vs_polyline(center, radius, vertices, (1, 2),
                                   lambda x: float(self.height_at(x, 0.0)))


@dataclass(frozen=True)
class Hemisphere:
    """Hemispherical rock resting on the base plane."""
    center_x: float
    center_y: float
    radius: float
    friction: float = DEFAULT_OBSTACLE_FRICTION

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("Rock radius must be positive")
        if self.friction < 0:
            raise ValueError("Friction coefficient must not be negative")

    @property
    def start_x(self) -> float:
        return self.center_x - self.radius

    @property
    def end_x(self) -> float:
        return self.center_x + self.radius

    def footprint(self):
        r = self.radius
        return (self.center_x - r, self.center_x + r, self.center_y - r, self.center_y + r)

    def height_at(self, x, y):
        dx = np.asarray(x, dtype=float) - self.center_x
        dy = np.asarray(y, dtype=float) - self.center_y
        return np.sqrt(np.maximum(self.radius ** 2 - dx * dx - dy * dy, 0.0))

    def gradient_at(self, x, y):
        dx = np.asarray(x, dtype=float) - self.center_x
        dy = np.asarray(y, dtype=float) - self.center_y
        # Floor keeps the rim finite; the cap meets the ground at a vertical tangent
        h = np.maximum(self.height_at(x, y), 1e-3 * self.radius)
        inside = dx * dx + dy * dy < self.radius ** 2
        return np.where(inside, -dx / h, 0.0), np.where(inside, -dy / h, 0.0)

    def surface_contact(self, center, radius) -> Optional[SurfaceHit]:
        offset = np.asarray(center, dtype=float) - np.array([self.center_x, self.center_y, 0.0])
        dist = float(np.linalg.norm(offset))
        penetration = self.radius + radius - dist
        if penetration <= 0.0 or dist == 0.0:
            return None
        normal = offset / dist
        return SurfaceHit(
            penetration=penetration,
            point=np.array([self.center_x, self.center_y, 0.0]) + self.radius * normal,
            normal=normal,
            on_feature=True,
        )


@lru_cache(maxsize=64)
def _outcrop_basis(seed: int, length: float):
    """Seed-derived phases and the peak of the unscaled profile on the scan grid."""
    rng = np.random.default_rng(seed)
    phases = rng.uniform(0.0, 2.0 * math.pi, size=len(OUTCROP_WAVELENGTHS))
    grid = outcrop_scan_grid(length)
    peak = float(np.max(_raw_outcrop(grid, phases, length)))
    return phases, peak


def _raw_outcrop(x, phases, length):
    wavenumbers = 2.0 * math.pi / np.asarray(OUTCROP_WAVELENGTHS)
    waves = np.sin(np.multiply.outer(x, wavenumbers) + phases).sum(axis=-1)
    return np.abs(waves) * np.sin(math.pi * x / length)


def outcrop_scan_grid(length: float) -> np.ndarray:
    """The 1 mm grid on which the outcrop maximum is pinned."""
    count = int(round(length / OUTCROP_SCAN_RESOLUTION)) + 1
    return np.linspace(0.0, length, count)


def outcrop_profile(seed: int, x_local, length: float = DEFAULT_OUTCROP_LENGTH,
                    max_height: float = DEFAULT_OUTCROP_MAX_HEIGHT):
    """Height of the outcrop profile at x_local (0 <= x_local <= length).

    Six sinusoids with seed-derived phases, full-wave rectified, windowed to zero at
    both ends and scaled so the peak equals max_height. Zero outside the feature.
    """
    x = np.asarray(x_local, dtype=float)
    phases, peak = _outcrop_basis(int(seed), float(length))
    inside = (x >= 0.0) & (x <= length)
    clipped = np.clip(x, 0.0, length)
    height = np.where(inside, _raw_outcrop(clipped, phases, length) * (max_height / peak), 0.0)
    if height.ndim == 0:
        return float(height)
    return height


@dataclass(frozen=True)
class Outcrop:
    """Bumpy exposed bedrock band along x, centred laterally on center_y."""
    start_x: float
    length: float = DEFAULT_OUTCROP_LENGTH
    max_height: float = DEFAULT_OUTCROP_MAX_HEIGHT
    seed: int = 0
    center_y: float = 0.0
    width: float = DEFAULT_OUTCROP_WIDTH
    taper: float = DEFAULT_OUTCROP_TAPER
    friction: float = DEFAULT_OBSTACLE_FRICTION

    def __post_init__(self):
        if self.length <= 0:
            raise ValueError("Outcrop length must be positive")
        if self.max_height <= 0:
            raise ValueError("Outcrop height must be positive")
        if self.width <= 0 or not (0 <= self.taper <= self.width / 2):
            raise ValueError("Outcrop taper must fit inside half its width")
        if self.friction < 0:
            raise ValueError("Friction coefficient must not be negative")

    @property
    def end_x(self) -> float:
        return self.start_x + self.length

    def footprint(self):
        half = self.width / 2
        return (self.start_x, self.end_x, self.center_y - half, self.center_y + half)

    def lateral_scale(self, y):
        """1 across the band core, cosine taper to 0 at the band edges."""
        dy = np.abs(np.asarray(y, dtype=float) - self.center_y)
        half = self.width / 2
        core = half - self.taper
        if self.taper == 0:
            return np.where(dy <= half, 1.0, 0.0)
        ramp = 0.5 * (1.0 + np.cos(math.pi * np.clip((dy - core) / self.taper, 0.0, 1.0)))
        return np.where(dy <= core, 1.0, np.where(dy <= half, ramp, 0.0))

    def height_at(self, x, y):
        x_local = np.asarray(x, dtype=float) - self.start_x
        profile = outcrop_profile(self.seed, x_local, self.length, self.max_height)
        return profile * self.lateral_scale(y)

    def gradient_at(self, x, y, eps: float = 1e-5):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gx = (self.height_at(x + eps, y) - self.height_at(x - eps, y)) / (2 * eps)
        gy = (self.height_at(x, y + eps) - self.height_at(x, y - eps)) / (2 * eps)
        return gx, gy

    def surface_contact(self, center, radius) -> Optional[SurfaceHit]:
        """Deepest point of the x-z slice through the wheel centre.

        One contact per wheel; lateral slopes of the band are not resolved.
        """
        cx, cy, cz = center
        if cx + radius < self.start_x or cx - radius > self.end_x:
            return None
        if abs(cy - self.center_y) >= self.width / 2:
            return None
        count = int(round(2 * radius / _SLICE_RESOLUTION)) + 1
        xs = np.linspace(cx - radius, cx + radius, count)
        hs = self.height_at(xs, cy)
        dist_sq = (xs - cx) ** 2 + (hs - cz) ** 2
        j = int(np.argmin(dist_sq))
        dist = math.sqrt(dist_sq[j])
        penetration = radius - dist
        if penetration <= 0.0 or dist == 0.0:
            return None
        return SurfaceHit(
            penetration=penetration,
            point=np.array([xs[j], cy, hs[j]]),
            normal=np.array([cx - xs[j], 0.0, cz - hs[j]]) / dist,
            on_feature=bool(hs[j] > 0.0),
        )


def _intervals_overlap(a_min, a_max, b_min, b_max) -> bool:
    return a_min < b_max and b_min < a_max


@dataclass(frozen=True)
class TerrainScene:
    """Flat base plane at height 0 plus an ordered tuple of non-overlapping features.

    Immutable after construction, so one scene can be shared by parallel runs.
    """
    features: Tuple = ()
    soil_friction: float = DEFAULT_SOIL_FRICTION

    def __post_init__(self):
        """Validate friction and feature footprints."""
        object.__setattr__(self, 'features', tuple(self.features))
        if self.soil_friction < 0:
            raise ValueError("Soil friction must not be negative")
        boxes = [f.footprint() for f in self.features]
        for i in range(len(boxes)):
            for j in range(i + 1, len(boxes)):
                a, b = boxes[i], boxes[j]
                if _intervals_overlap(a[0], a[1], b[0], b[1]) and _intervals_overlap(a[2], a[3], b[2], b[3]):
                    raise ValueError(
                        f"Terrain features {i} and {j} overlap in footprint"
                    )

    @property
    def primary_feature(self):
        return self.features[0] if self.features else None

    def height(self, x, y):
        """Terrain height: the base plane raised by the tallest covering feature."""
        h = np.zeros(np.broadcast(np.asarray(x, dtype=float), np.asarray(y, dtype=float)).shape)
        for feature in self.features:
            h = np.maximum(h, feature.height_at(x, y))
        return h

    def surface_contact(self, center, radius):
        """Deepest surface hit within a wheel sphere and the friction that applies to it.

        Returns (hit, friction) or (None, 0.0) when nothing penetrates.
        """
        cx, cy, cz = center
        best = None
        friction = 0.0
        base_pen = radius - cz
        if base_pen > 0.0:
            best = SurfaceHit(base_pen, np.array([cx, cy, 0.0]), _UP.copy(), False)
            friction = self.soil_friction
        for feature in self.features:
            hit = feature.surface_contact(center, radius)
            if hit is not None and (best is None or hit.penetration > best.penetration):
                best = hit
                friction = feature.friction if hit.on_feature else self.soil_friction
        return best, friction


def terrain_height(scene: TerrainScene, x: float, y: float):
    """Height of the terrain at (x, y) and the unit surface normal there."""
    height = 0.0
    gx = gy = 0.0
    for feature in scene.features:
        h = float(feature.height_at(x, y))
        if h > height:
            height = h
            fgx, fgy = feature.gradient_at(x, y)
            gx, gy = float(fgx), float(fgy)
    normal = np.array([-gx, -gy, 1.0])
    return height, normal / np.linalg.norm(normal)
