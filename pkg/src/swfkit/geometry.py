"""Directions on the sphere, octahedron subdivision meshes and loudspeaker layouts.

Convention: azimuth counter-clockwise from the front (+x), so +90 deg is the
left (+y); elevation positive upwards (+z).
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
from scipy.spatial import ConvexHull

from .errors import BoundsError, ConfigurationError

MAX_LEVEL = 6

# sha256 of the shipped direction tables (regenerate with scripts/derive_grids.py)
LAYOUT_SHA256 = {
    "octahedron": "e76e17188319efee5837b228f1aa0d3bd723b9d113d694d88b3d1c917e682ca1",
    "tdesign24": "b4dcc29193fd15345825e8202e1df3a98dbb5e506385f3fbcf66ac2ebe5ebd4a",
    "lebedev50": "4c1afae8b0f76bbc162d9c61bbed3aadcc42be15f5ac7efa273d510ab747f521",
}

# Ambisonic order each layout is driven with, and the SWF level it is fed from.
LAYOUT_ORDER = {"octahedron": 1, "tdesign24": 3, "lebedev50": 5}
LAYOUT_SWF_LEVEL = {"octahedron": 0, "tdesign24": 1, "lebedev50": 2}


@dataclass(frozen=True)
class Direction:
    """A direction in degrees (azimuth in [-180, 360), elevation in [-90, 90])."""

    azimuth: float
    elevation: float

    def __post_init__(self):
        if not -180.0 <= self.azimuth < 360.0:
            raise ValueError(f"azimuth {self.azimuth} outside [-180, 360)")
        if not -90.0 <= self.elevation <= 90.0:
            raise ValueError(f"elevation {self.elevation} outside [-90, 90]")

    @property
    def vector(self) -> np.ndarray:
        return sph_to_cart(self.azimuth, self.elevation)

    @classmethod
    def from_vector(cls, v) -> "Direction":
        az, el = cart_to_sph(np.asarray(v, dtype=float))
        return cls(float(az), float(el))

    def __str__(self):
        return f"({self.azimuth:g}, {self.elevation:g})"


def sph_to_cart(azimuth, elevation) -> np.ndarray:
    """Degrees to unit vectors; broadcasts, last axis has length 3."""
    az = np.radians(np.asarray(azimuth, dtype=float))
    el = np.radians(np.asarray(elevation, dtype=float))
    ce = np.cos(el)
    v = np.stack([ce * np.cos(az), ce * np.sin(az), np.sin(el)], axis=-1)
    return v / np.linalg.norm(v, axis=-1, keepdims=True)


def cart_to_sph(v):
    """Unit (or non-zero) vectors to (azimuth, elevation) in degrees, azimuth in (-180, 180]."""
    v = np.asarray(v, dtype=float)
    v = v / np.linalg.norm(v, axis=-1, keepdims=True)
    az = np.degrees(np.arctan2(v[..., 1], v[..., 0]))
    el = np.degrees(np.arcsin(np.clip(v[..., 2], -1.0, 1.0)))
    return az, el


def angular_distance(u, v) -> np.ndarray:
    """Great-circle angle in degrees between unit vectors (broadcasting)."""
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    cross = np.linalg.norm(np.cross(u, v), axis=-1)
    dot = np.sum(u * v, axis=-1)
    return np.degrees(np.arctan2(cross, dot))


def fibonacci_sphere(n: int) -> np.ndarray:
    """Near-uniform spiral point set of n unit vectors."""
    i = np.arange(n) + 0.5
    z = 1.0 - 2.0 * i / n
    phi = np.pi * (1.0 + 5.0**0.5) * i
    r = np.sqrt(1.0 - z * z)
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def triangle_solid_angles(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    """Solid angle of each spherical triangle (Van Oosterom & Strackee)."""
    a, b, c = (vertices[triangles[:, k]] for k in range(3))
    num = np.abs(np.einsum("ij,ij->i", a, np.cross(b, c)))
    den = 1.0 + np.einsum("ij,ij->i", a, b) + np.einsum("ij,ij->i", b, c) + np.einsum("ij,ij->i", c, a)
    return 2.0 * np.arctan2(num, den)


def _frozen(a, dtype):
    a = np.array(a, dtype=dtype)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TriMesh:
    """Closed triangle mesh on the unit sphere.

    ``parents[j]`` holds the two coarse vertex indices of the edge whose
    midpoint became vertex ``n_coarse + j``; it is empty for the seed mesh.
    """

    vertices: np.ndarray
    triangles: np.ndarray
    parents: np.ndarray
    n_coarse: int

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    def edges(self) -> np.ndarray:
        return unique_edges(self.triangles)

    def euler_characteristic(self) -> int:
        return self.n_vertices - len(self.edges()) + len(self.triangles)


@dataclass(frozen=True)
class TriMeshHierarchy:
    """Nested meshes; level k's vertices are the first V(k) vertices of level k+1."""

    levels: tuple

    @property
    def max_level(self) -> int:
        return len(self.levels) - 1

    @property
    def finest(self) -> TriMesh:
        return self.levels[-1]

    def vertex_counts(self) -> list:
        return [m.n_vertices for m in self.levels]


def unique_edges(triangles: np.ndarray) -> np.ndarray:
    """Sorted (i < j) edges in order of first appearance in the triangle list."""
    e = np.concatenate([triangles[:, [0, 1]], triangles[:, [1, 2]], triangles[:, [2, 0]]], axis=0)
    # interleave so edges appear triangle by triangle
    e = e.reshape(3, -1, 2).transpose(1, 0, 2).reshape(-1, 2)
    e = np.sort(e, axis=1)
    _, first = np.unique(e, axis=0, return_index=True)
    return e[np.sort(first)]


OCTAHEDRON_VERTICES = np.array(
    [[1, 0, 0], [-1, 0, 0], [0, 1, 0], [0, -1, 0], [0, 0, 1], [0, 0, -1]], dtype=float
)
# outward (counter-clockwise seen from outside) faces
OCTAHEDRON_TRIANGLES = np.array(
    [[0, 2, 4], [2, 1, 4], [1, 3, 4], [3, 0, 4], [2, 0, 5], [1, 2, 5], [3, 1, 5], [0, 3, 5]]
)


def subdivide(mesh: TriMesh) -> TriMesh:
    """One 1-to-4 split with edge midpoints pushed back onto the sphere."""
    edges = mesh.edges()
    nv = mesh.n_vertices
    mid = mesh.vertices[edges[:, 0]] + mesh.vertices[edges[:, 1]]
    mid /= np.linalg.norm(mid, axis=1, keepdims=True)
    index = {(int(a), int(b)): nv + k for k, (a, b) in enumerate(edges)}

    def m(a, b):
        return index[(a, b) if a < b else (b, a)]

    tris = []
    for a, b, c in mesh.triangles.tolist():
        ab, bc, ca = m(a, b), m(b, c), m(c, a)
        tris += [[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]
    return TriMesh(
        vertices=_frozen(np.vstack([mesh.vertices, mid]), float),
        triangles=_frozen(tris, np.int64),
        parents=_frozen(edges, np.int64),
        n_coarse=nv,
    )


def build_octahedron_hierarchy(max_level: int) -> TriMeshHierarchy:
    """Octahedron plus ``max_level`` rounds of midpoint subdivision (6, 18, 66, ... vertices)."""
    if not isinstance(max_level, (int, np.integer)) or not 0 <= max_level <= MAX_LEVEL:
        raise BoundsError(f"max_level must be an integer in [0, {MAX_LEVEL}], got {max_level!r}")
    mesh = TriMesh(
        vertices=_frozen(OCTAHEDRON_VERTICES, float),
        triangles=_frozen(OCTAHEDRON_TRIANGLES, np.int64),
        parents=_frozen(np.zeros((0, 2)), np.int64),
        n_coarse=0,
    )
    levels = [mesh]
    for _ in range(max_level):
        levels.append(subdivide(levels[-1]))
    return TriMeshHierarchy(tuple(levels))


def barycentric_weights(vertices, triangles, points, return_all=False):
    """Locate each point in a closed spherical triangulation.

    Each point is centrally projected onto the plane of a candidate triangle;
    the planar barycentric coordinates of the projection are clipped at zero
    and renormalised. A point belongs to the lowest-indexed triangle whose cone
    contains it (within rounding).

    Returns ``(triangle_ids, weights)`` with weights of shape (n, 3).
    """
    points = np.atleast_2d(np.asarray(points, dtype=float))
    corners = vertices[triangles]  # (T, 3 corners, 3 xyz)
    inv = np.linalg.inv(np.transpose(corners, (0, 2, 1)))  # maps xyz -> corner coefficients
    lam = np.einsum("tij,pj->pti", inv, points)  # (P, T, 3)
    total = lam.sum(axis=2)
    with np.errstate(divide="ignore", invalid="ignore"):
        bary = lam / total[..., None]
    score = np.where(total > 0, bary.min(axis=2), -np.inf)
    inside = score >= -1e-12
    tri = np.where(inside.any(axis=1), inside.argmax(axis=1), score.argmax(axis=1))
    w = bary[np.arange(len(points)), tri]
    w = np.where(w < 1e-12, 0.0, w)
    w /= w.sum(axis=1, keepdims=True)
    return tri, w


def locate_triangle(mesh: TriMesh, d) -> tuple:
    """Triangle containing direction ``d`` and its three non-negative weights."""
    v = d.vector if isinstance(d, Direction) else np.asarray(d, dtype=float)
    tri, w = barycentric_weights(mesh.vertices, mesh.triangles, v[None, :])
    return int(tri[0]), w[0]


@dataclass(frozen=True)
class LoudspeakerLayout:
    name: str
    directions: tuple
    vectors: np.ndarray = field(repr=False)
    triangles: np.ndarray = field(repr=False)

    def __len__(self):
        return len(self.directions)

    @property
    def order(self) -> int:
        """Ambisonic order this layout is driven with."""
        try:
            return LAYOUT_ORDER[self.name]
        except KeyError:
            raise ConfigurationError(f"no designated ambisonic order for layout {self.name!r}") from None

    @property
    def mesh(self) -> TriMesh:
        return TriMesh(self.vectors, self.triangles, _frozen(np.zeros((0, 2)), np.int64), 0)

    def azimuths(self) -> np.ndarray:
        return np.array([d.azimuth for d in self.directions])

    def elevations(self) -> np.ndarray:
        return np.array([d.elevation for d in self.directions])


def hull_triangles(vectors: np.ndarray) -> np.ndarray:
    """Convex-hull triangulation with outward orientation."""
    hull = ConvexHull(vectors)
    tris = hull.simplices.copy()
    a, b, c = (vectors[tris[:, k]] for k in range(3))
    flip = np.einsum("ij,ij->i", np.cross(b - a, c - a), a + b + c) < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]
    return tris


def read_direction_table(path) -> np.ndarray:
    """Parse an 'azimuth elevation' text table (degrees, '#' comments)."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.split("#", 1)[0].strip()
        if line:
            az, el = (float(t) for t in line.split()[:2])
            rows.append((az, el))
    return np.array(rows, dtype=float)


def layout_from_directions(name: str, az_el) -> LoudspeakerLayout:
    az_el = np.asarray(az_el, dtype=float)
    az = np.where(az_el[:, 0] == 0.0, 0.0, az_el[:, 0])  # drop signed zeros
    dirs = tuple(Direction(float(a), float(e)) for a, e in zip(az, az_el[:, 1]))
    vecs = _frozen(sph_to_cart(az, az_el[:, 1]), float)
    sep = angular_distance(vecs[:, None, :], vecs[None, :, :])
    np.fill_diagonal(sep, np.inf)
    if sep.min() <= 0.1:
        raise ConfigurationError(f"layout {name!r} has coincident directions")
    return LoudspeakerLayout(name, dirs, vecs, _frozen(hull_triangles(vecs), np.int64))


def load_layout(name: str) -> LoudspeakerLayout:
    """One of the shipped layouts: 'octahedron', 'tdesign24' or 'lebedev50'."""
    if name not in LAYOUT_SHA256:
        raise ConfigurationError(f"unknown layout {name!r}; expected one of {sorted(LAYOUT_SHA256)}")
    raw = resources.files("swfkit.data").joinpath(f"{name}.txt").read_bytes()
    if hashlib.sha256(raw).hexdigest() != LAYOUT_SHA256[name]:
        raise ConfigurationError(f"checksum mismatch for shipped layout table {name!r}")
    with resources.as_file(resources.files("swfkit.data").joinpath(f"{name}.txt")) as p:
        return layout_from_directions(name, read_direction_table(p))


_LEBEDEV50_CLASS_WEIGHTS = {
    "a1": 4.0 / 315.0,
    "a2": 64.0 / 2835.0,
    "a3": 27.0 / 1280.0,
    "b1": 14641.0 / 725760.0,
}


def quadrature_weights(layout: LoudspeakerLayout) -> np.ndarray:
    """Quadrature weights (summing to 1) for the shipped grids."""
    n = len(layout)
    if layout.name in ("octahedron", "tdesign24"):
        return np.full(n, 1.0 / n)
    if layout.name != "lebedev50":
        raise ConfigurationError(f"no quadrature rule for layout {layout.name!r}")
    w = np.empty(n)
    for i, v in enumerate(np.abs(layout.vectors)):
        zeros = int(np.sum(v < 1e-9))
        if zeros == 2:
            w[i] = _LEBEDEV50_CLASS_WEIGHTS["a1"]
        elif zeros == 1:
            w[i] = _LEBEDEV50_CLASS_WEIGHTS["a2"]
        elif np.ptp(v) < 1e-9:
            w[i] = _LEBEDEV50_CLASS_WEIGHTS["a3"]
        else:
            w[i] = _LEBEDEV50_CLASS_WEIGHTS["b1"]
    return w


EVALUATION_POSITIONS = (
    (0, 0), (30, 0), (90, 0), (135, 0), (180, 0),
    (0, 45), (0, 90), (0, 135), (45, 45), (135, 45),
)


def direction_from_table(az, el) -> Direction:
    """Direction from a table entry; elevations past the zenith continue over the top."""
    if el > 90:
        az, el = (az + 180) % 360, 180 - el
    return Direction(float(az), float(el))


def evaluation_directions() -> list:
    """The ten evaluation positions; (0, 135) is read as azimuth 180, elevation 45."""
    return [direction_from_table(az, el) for az, el in EVALUATION_POSITIONS]
