"""Spherical wavelet framework: lifting-scheme wavelets on the subdivided octahedron.

Signals live on mesh vertices (first axis = vertex). One analysis step maps
level k to level k-1. The vertices inherited from level k-1 are the "even"
set, the edge midpoints added at level k the "odd" set. Every filter is a
short sequence of lifting (and diagonal scaling) steps, so synthesis undoes
analysis exactly whatever the weights are.

Two filters are provided:

``AveragingLifting`` (default)
    update first: coarse = (even + 1/2 * sum of incident odd values) / (1 + deg/2),
    then predict: detail = odd - mean of the two parent coarse values.
    A coarse vertex absorbs half of every new vertex on its incident edges, so
    sources away from coarse vertices survive truncation, while a source sitting
    on a coarse vertex stays on that vertex alone.

``PredictUpdateLifting``
    predict first: detail = odd - mean of the two parent even values,
    then update: coarse = even + 1/(2 deg) * sum of incident details.
    Leaks a vertex source into its coarse neighbours once details are dropped.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import sparse

from .errors import BoundsError, ConfigurationError, ShapeError
from .geometry import (
    LAYOUT_SWF_LEVEL,
    Direction,
    LoudspeakerLayout,
    TriMeshHierarchy,
    barycentric_weights,
    locate_triangle,
)
from .signals import DEFAULT_SAMPLE_RATE, MultichannelSignal

DEFAULT_FINEST_LEVEL = 2


def _edge_operators(mesh):
    """Sparse parent-mean predictor P (odd x even) and incidence A (even x odd)."""
    n_even, n_odd = mesh.n_coarse, mesh.n_vertices - mesh.n_coarse
    rows = np.repeat(np.arange(n_odd), 2)
    cols = mesh.parents.ravel()
    predict = sparse.csr_matrix((np.full(2 * n_odd, 0.5), (rows, cols)), shape=(n_odd, n_even))
    incidence = sparse.csr_matrix((np.ones(2 * n_odd), (cols, rows)), shape=(n_even, n_odd))
    deg = np.asarray(incidence.sum(axis=1)).ravel()
    return predict, incidence, deg


class _Step:
    def __init__(self, forward, inverse):
        self.forward = forward
        self.inverse = inverse


class AveragingLifting:
    name = "averaging"

    def operators(self, mesh):
        predict, incidence, deg = _edge_operators(mesh)
        share = 0.5 * incidence
        norm = 1.0 / (1.0 + 0.5 * deg)

        def forward(even, odd):
            coarse = _scale(norm, even + share @ odd)
            return coarse, odd - predict @ coarse

        def inverse(coarse, detail):
            odd = detail + predict @ coarse
            return _scale(1.0 / norm, coarse) - share @ odd, odd

        return _Step(forward, inverse)


class PredictUpdateLifting:
    name = "predict-update"

    def operators(self, mesh):
        predict, incidence, deg = _edge_operators(mesh)
        update = sparse.diags(1.0 / (2.0 * deg)) @ incidence

        def forward(even, odd):
            detail = odd - predict @ even
            return even + update @ detail, detail

        def inverse(coarse, detail):
            even = coarse - update @ detail
            return even, detail + predict @ even

        return _Step(forward, inverse)


LIFTING_FILTERS = {f.name: f for f in (AveragingLifting, PredictUpdateLifting)}


def _scale(w, x):
    return w.reshape((-1,) + (1,) * (np.ndim(x) - 1)) * x


@dataclass(frozen=True)
class WaveletCoeffs:
    """Scaling values on the level-0 vertices and detail values per finer level.

    ``details[k-1]`` belongs to the vertices introduced at level k.
    """

    scaling: np.ndarray
    details: tuple

    @property
    def max_level(self) -> int:
        return len(self.details)

    def count(self) -> int:
        return len(self.scaling) + sum(len(d) for d in self.details)

    def to_rows(self):
        """(level, vertex index, value) triples; vertex indices are those of the finest mesh."""
        if np.ndim(self.scaling) != 1:
            raise ShapeError("CSV dump supports single-sample coefficients only")
        rows = [(0, i, float(v)) for i, v in enumerate(self.scaling)]
        offset = len(self.scaling)
        for k, d in enumerate(self.details, start=1):
            rows += [(k, offset + i, float(v)) for i, v in enumerate(d)]
            offset += len(d)
        return rows

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["level", "vertex", "value"])
            w.writerows(self.to_rows())


class SwfTransform:
    """Forward/inverse lifting transform over a fixed hierarchy."""

    def __init__(self, hierarchy: TriMeshHierarchy, lifting=None):
        self.hierarchy = hierarchy
        if isinstance(lifting, str):
            if lifting not in LIFTING_FILTERS:
                raise ConfigurationError(f"unknown lifting filter {lifting!r}; expected one of {sorted(LIFTING_FILTERS)}")
            lifting = LIFTING_FILTERS[lifting]()
        self.lifting = lifting or AveragingLifting()
        # ops[k] maps between level k and k-1, k >= 1
        self._ops = [None] + [self.lifting.operators(m) for m in hierarchy.levels[1:]]

    def analysis(self, x) -> WaveletCoeffs:
        x = np.asarray(x, dtype=float)
        if x.shape[0] != self.hierarchy.finest.n_vertices:
            raise ShapeError(
                f"expected {self.hierarchy.finest.n_vertices} vertex rows, got {x.shape[0]}"
            )
        details = []
        cur = x
        for k in range(self.hierarchy.max_level, 0, -1):
            n_even = self.hierarchy.levels[k].n_coarse
            cur, d = self._ops[k].forward(cur[:n_even], cur[n_even:])
            details.append(d)
        return WaveletCoeffs(cur.copy(), tuple(reversed(details)))

    def synthesis(self, c: WaveletCoeffs, target_level: int):
        if not 0 <= target_level <= self.hierarchy.max_level or target_level > c.max_level:
            raise BoundsError(f"target level {target_level} outside [0, {self.hierarchy.max_level}]")
        cur = np.asarray(c.scaling, dtype=float)
        for k in range(1, target_level + 1):
            even, odd = self._ops[k].inverse(cur, np.asarray(c.details[k - 1], dtype=float))
            cur = np.concatenate([even, odd], axis=0)
        return cur


def swf_encode(h: TriMeshHierarchy, d, s, sample_rate: int = DEFAULT_SAMPLE_RATE) -> MultichannelSignal:
    """Pan a mono signal onto the finest mesh with barycentric amplitude gains."""
    s = np.asarray(s, dtype=float).ravel()
    tri, w = locate_triangle(h.finest, d)
    out = np.zeros((h.finest.n_vertices, s.size))
    out[h.finest.triangles[tri]] = np.outer(w, s)
    return MultichannelSignal(out, sample_rate)


def encode_gains(h: TriMeshHierarchy, d) -> np.ndarray:
    """Finest-level vertex gains for a unit source at ``d``."""
    tri, w = locate_triangle(h.finest, d)
    g = np.zeros(h.finest.n_vertices)
    g[h.finest.triangles[tri]] = w
    return g


def swf_analysis(h: TriMeshHierarchy, vertex_signals, lifting=None) -> WaveletCoeffs:
    data = vertex_signals.data if isinstance(vertex_signals, MultichannelSignal) else vertex_signals
    return SwfTransform(h, lifting).analysis(data)


def swf_synthesis(h: TriMeshHierarchy, c: WaveletCoeffs, target_level: int,
                  sample_rate: int = DEFAULT_SAMPLE_RATE, lifting=None):
    out = SwfTransform(h, lifting).synthesis(c, target_level)
    return MultichannelSignal(out, sample_rate) if out.ndim == 2 else out


def swf_truncate(c: WaveletCoeffs, level: int) -> WaveletCoeffs:
    """Zero every detail band above ``level``; coefficient count is unchanged."""
    if not 0 <= level <= c.max_level:
        raise BoundsError(f"level {level} outside [0, {c.max_level}]")
    details = tuple(d if k <= level else np.zeros_like(d) for k, d in enumerate(c.details, start=1))
    return WaveletCoeffs(c.scaling, details)


def remap_matrix(vertices: np.ndarray, layout: LoudspeakerLayout) -> np.ndarray:
    """(L, V) barycentric gains of each mesh vertex over the layout triangulation (columns sum to 1)."""
    tri, w = barycentric_weights(layout.vectors, layout.triangles, vertices)
    r = np.zeros((len(layout), len(vertices)))
    cols = np.repeat(np.arange(len(vertices)), 3)
    np.add.at(r, (layout.triangles[tri].ravel(), cols), w.ravel())
    return r


class SwfRenderer:
    """Encoder + transform + layout remap, precomputed for one layout."""

    def __init__(self, layout: LoudspeakerLayout, finest_level: int = DEFAULT_FINEST_LEVEL, hierarchy=None, lifting=None):
        from .geometry import build_octahedron_hierarchy

        if layout.name not in LAYOUT_SWF_LEVEL:
            raise ConfigurationError(f"SWF rendering is not defined for layout {layout.name!r}")
        self.layout = layout
        self.hierarchy = hierarchy or build_octahedron_hierarchy(finest_level)
        self.level = LAYOUT_SWF_LEVEL[layout.name]
        if self.level > self.hierarchy.max_level:
            raise ConfigurationError(
                f"layout {layout.name!r} needs a level-{self.level} mesh, hierarchy stops at {self.hierarchy.max_level}"
            )
        self.transform = SwfTransform(self.hierarchy, lifting)
        self.remap = remap_matrix(self.hierarchy.levels[self.level].vertices, layout)

    def gains(self, d) -> np.ndarray:
        """Loudspeaker gains for a unit source at ``d`` (frequency independent)."""
        c = self.transform.analysis(encode_gains(self.hierarchy, d))
        return self.remap @ self.transform.synthesis(c, self.level)

    def render(self, d, s, sample_rate: int = DEFAULT_SAMPLE_RATE) -> MultichannelSignal:
        s = np.asarray(s, dtype=float).ravel()
        return MultichannelSignal(np.outer(self.gains(d), s), sample_rate)


def swf_render(h: TriMeshHierarchy, d, s, layout: LoudspeakerLayout,
               sample_rate: int = DEFAULT_SAMPLE_RATE, lifting=None) -> MultichannelSignal:
    """Encode at the finest level, analyse, synthesise at the layout's level, remap to loudspeakers."""
    return SwfRenderer(layout, hierarchy=h, lifting=lifting).render(d, s, sample_rate)
