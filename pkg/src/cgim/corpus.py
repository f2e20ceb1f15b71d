"""Deterministic synthetic disk meshes for tests and evaluation."""

from __future__ import annotations

import numpy as np
from scipy.spatial import Delaunay

from .mesh import Mesh

KINDS = ("fan", "grid", "delaunay-disk", "bumpy-disk")

# (kind, size) pairs of the standard evaluation corpus; each is run with SEEDS
STANDARD = (
    ("fan", 3), ("fan", 40),
    ("grid", 3), ("grid", 12), ("grid", 30),
    ("delaunay-disk", 30), ("delaunay-disk", 300), ("delaunay-disk", 1000),
    ("bumpy-disk", 100), ("bumpy-disk", 5000),
)
SEEDS = (0, 1, 2, 3, 4)


def _ccw(points: np.ndarray, faces: np.ndarray) -> np.ndarray:
    p = points[:, :2]
    a, b, c = p[faces[:, 0]], p[faces[:, 1]], p[faces[:, 2]]
    area = (b[:, 0] - a[:, 0]) * (c[:, 1] - a[:, 1]) - (b[:, 1] - a[:, 1]) * (c[:, 0] - a[:, 0])
    faces = faces.copy()
    flip = area < 0
    faces[flip] = faces[flip][:, [0, 2, 1]]
    return faces


def fan(n: int, seed: int = 0) -> Mesh:
    """Center vertex plus ``n`` rim vertices on a 270 degree arc, ``n - 1`` faces."""
    rng = np.random.default_rng(seed)
    ang = np.linspace(0.0, 1.5 * np.pi, n)
    rad = 1.0 + 0.2 * rng.uniform(-1.0, 1.0, n)
    rim = np.column_stack([rad * np.cos(ang), rad * np.sin(ang), 0.1 * rng.uniform(-1.0, 1.0, n)])
    verts = np.vstack([[0.0, 0.0, 0.0], rim])
    faces = np.array([[0, i, i + 1] for i in range(1, n)], dtype=np.int64)
    return Mesh(verts, faces)


def grid(n: int, seed: int = 0) -> Mesh:
    """``n x n`` vertices on the unit square; seeded jitter and diagonal choice."""
    rng = np.random.default_rng(seed)
    xs, ys = np.meshgrid(np.linspace(0.0, 1.0, n), np.linspace(0.0, 1.0, n))
    pts = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(n * n)])
    if n > 2 and seed:
        h = 1.0 / (n - 1)
        inner = (xs.ravel() > 0) & (xs.ravel() < 1) & (ys.ravel() > 0) & (ys.ravel() < 1)
        pts[inner, :2] += rng.uniform(-0.2 * h, 0.2 * h, (int(inner.sum()), 2))
    faces = []
    flips = rng.integers(0, 2, (n - 1) * (n - 1)) if seed else np.zeros((n - 1) ** 2, dtype=int)
    for r in range(n - 1):
        for c in range(n - 1):
            a, b = r * n + c, r * n + c + 1
            d, e = (r + 1) * n + c, (r + 1) * n + c + 1
            if flips[r * (n - 1) + c]:
                faces += [[a, b, d], [b, e, d]]
            else:
                faces += [[a, b, e], [a, e, d]]
    faces = _ccw(pts, np.array(faces, dtype=np.int64))
    return Mesh(pts, faces)


def _disk_points(size: int, rng: np.random.Generator) -> np.ndarray:
    m = max(6, int(round(2.0 * np.sqrt(np.pi * size))))
    m = min(m, size)
    t = np.linspace(0.0, 2.0 * np.pi, m, endpoint=False)
    rim = np.column_stack([np.cos(t), np.sin(t)])
    inner_n = size - m
    if inner_n <= 0:
        return rim
    # jittered hexagonal lattice, trimmed to the requested count
    spacing = np.sqrt(2.0 * np.pi * 0.85 ** 2 / (np.sqrt(3.0) * inner_n))
    k = int(np.ceil(1.0 / spacing)) + 2
    ii, jj = np.meshgrid(np.arange(-k, k + 1), np.arange(-k, k + 1))
    lat = np.column_stack([(ii + 0.5 * (jj % 2)).ravel() * spacing,
                           jj.ravel() * spacing * np.sqrt(3.0) / 2.0])
    lat += rng.uniform(-0.2 * spacing, 0.2 * spacing, lat.shape)
    r = np.linalg.norm(lat, axis=1)
    lat = lat[r < 1.0 - 0.6 * max(spacing, 2 * np.pi / m)]
    order = np.argsort(np.linalg.norm(lat, axis=1), kind="stable")
    lat = lat[order[:inner_n]]
    return np.vstack([rim, lat])


def delaunay_disk(size: int, seed: int = 0, bumpy: bool = False) -> Mesh:
    """Delaunay triangulation of about ``size`` points filling the unit disk."""
    rng = np.random.default_rng(seed)
    xy = _disk_points(size, rng)
    tri = Delaunay(xy)
    z = np.zeros(len(xy))
    if bumpy:
        ph = rng.uniform(0.0, 2.0 * np.pi, 2)
        z = 0.25 * np.sin(3.0 * xy[:, 0] + ph[0]) * np.cos(2.0 * xy[:, 1] + ph[1])
    pts = np.column_stack([xy, z])
    faces = _ccw(pts, tri.simplices.astype(np.int64))
    return Mesh(pts, faces)


def gen_corpus(kind: str, size: int, seed: int = 0) -> Mesh:
    """Build one corpus mesh; ``size`` is rim count, grid side, or vertex count."""
    if kind not in KINDS:
        raise ValueError("unknown corpus kind %r (choose from %s)" % (kind, ", ".join(KINDS)))
    if size < 3:
        raise ValueError("size must be at least 3")
    if kind == "fan":
        return fan(size, seed)
    if kind == "grid":
        return grid(size, seed)
    return delaunay_disk(size, seed, bumpy=(kind == "bumpy-disk"))


def standard_corpus(max_size: int | None = None):
    """Yield ``(name, mesh)`` for the standard corpus, optionally size-capped."""
    for kind, size in STANDARD:
        if max_size is not None and size > max_size:
            continue
        for seed in SEEDS:
            yield "%s-%d-s%d" % (kind, size, seed), gen_corpus(kind, size, seed)
