"""Distortion measures between an original mesh and its reconstruction."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass

import numpy as np
from scipy.spatial import cKDTree

from .codec import error_bound as _bound_from_range
from .mesh import Mesh

PSNR_CAP_DB = 200.0
DEFAULT_SAMPLES_PER_FACE = 16
_CHUNK = 1 << 18


def closest_point_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray, c: np.ndarray) -> np.ndarray:
    """Exact distance from points ``p`` to triangles ``(a, b, c)``, row by row.

    Voronoi-region decomposition of the triangle (vertex, edge and face
    regions); degenerate triangles fall back to their edges.
    """
    p, a, b, c = (np.asarray(x, dtype=np.float64) for x in (p, a, b, c))
    ab, ac, ap = b - a, c - a, p - a
    d1 = np.einsum("ij,ij->i", ab, ap)
    d2 = np.einsum("ij,ij->i", ac, ap)
    bp = p - b
    d3 = np.einsum("ij,ij->i", ab, bp)
    d4 = np.einsum("ij,ij->i", ac, bp)
    cp = p - c
    d5 = np.einsum("ij,ij->i", ab, cp)
    d6 = np.einsum("ij,ij->i", ac, cp)
    va = d3 * d6 - d5 * d4
    vb = d5 * d2 - d1 * d6
    vc = d1 * d4 - d3 * d2

    q = np.empty_like(p)
    done = np.zeros(len(p), dtype=bool)

    def take(mask, value):
        m = mask & ~done
        q[m] = value[m] if value.ndim == 2 else value
        done[m] = True

    take((d1 <= 0) & (d2 <= 0), a)
    take((d3 >= 0) & (d4 <= d3), b)
    take((d6 >= 0) & (d5 <= d6), c)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = d1 / (d1 - d3)
        take((vc <= 0) & (d1 >= 0) & (d3 <= 0), a + t[:, None] * ab)
        t = d2 / (d2 - d6)
        take((vb <= 0) & (d2 >= 0) & (d6 <= 0), a + t[:, None] * ac)
        t = (d4 - d3) / ((d4 - d3) + (d5 - d6))
        take((va <= 0) & (d4 - d3 >= 0) & (d5 - d6 >= 0), b + t[:, None] * (c - b))
        denom = va + vb + vc
        v, w = vb / denom, vc / denom
        inside = a + v[:, None] * ab + w[:, None] * ac
    ok = ~done & np.isfinite(inside).all(axis=1)
    q[ok] = inside[ok]
    done |= ok
    # 0/0 parameters on collapsed edges leave non-finite points behind
    done &= np.isfinite(q).all(axis=1)
    dist = np.linalg.norm(p - q, axis=1)
    if not done.all():
        # degenerate leftovers: nearest point on the three edges
        rest = ~done
        dist[rest] = np.min([_segment_distance(p[rest], u[rest], w_[rest])
                             for u, w_ in ((a, b), (b, c), (c, a))], axis=0)
    return dist


def _segment_distance(p, a, b):
    ab = b - a
    L = np.einsum("ij,ij->i", ab, ab)
    with np.errstate(divide="ignore", invalid="ignore"):
        t = np.where(L > 0, np.einsum("ij,ij->i", p - a, ab) / L, 0.0)
    t = np.clip(t, 0.0, 1.0)
    return np.linalg.norm(p - (a + t[:, None] * ab), axis=1)


def sample_surface(mesh: Mesh, samples_per_face: int = DEFAULT_SAMPLES_PER_FACE) -> np.ndarray:
    """Stratified surface samples plus every vertex.

    Each face is cut into ``n * n`` congruent sub-triangles,
    ``n = ceil(sqrt(samples_per_face))``, and their centroids are used.
    """
    if samples_per_face < 1:
        raise ValueError("samples_per_face must be at least 1")
    n = math.ceil(math.sqrt(samples_per_face))
    bary = []
    for i in range(n):
        for j in range(n - i):
            bary.append(((i + 1 / 3) / n, (j + 1 / 3) / n))
            if i + j < n - 1:
                bary.append(((i + 2 / 3) / n, (j + 2 / 3) / n))
    bary = np.array(bary)
    w = np.column_stack([1.0 - bary.sum(axis=1), bary])
    tri = mesh.vertices[mesh.faces]  # (m, 3, 3)
    pts = np.einsum("sk,mkd->msd", w, tri).reshape(-1, 3)
    return np.vstack([pts, mesh.vertices])


def point_mesh_distance(points: np.ndarray, mesh: Mesh, k: int = 8) -> np.ndarray:
    """Exact distance from each point to the nearest face of ``mesh``.

    Faces are binned by circumradius about their centroid (doubling bins)
    so that the pruning bound ``|p - centroid| - radius`` stays tight; per
    bin the candidate count grows until no unexamined face can be closer.
    """
    points = np.asarray(points, dtype=np.float64)
    if not mesh.n_faces:
        if not mesh.n_vertices:
            return np.full(len(points), np.inf)
        return cKDTree(mesh.vertices).query(points)[0]
    tri = mesh.vertices[mesh.faces]
    cen = tri.mean(axis=1)
    rad = np.linalg.norm(tri - cen[:, None, :], axis=2).max(axis=1)
    best = np.full(len(points), np.inf)
    floor = float(rad[rad > 0].min()) if (rad > 0).any() else 1.0
    bins = np.floor(np.log2(np.maximum(rad, floor) / floor)).astype(np.int64)
    for g in np.unique(bins).tolist():
        faces = np.flatnonzero(bins == g)
        rmax = float(rad[faces].max())
        tree = cKDTree(cen[faces])
        pending = np.arange(len(points))
        done_k, kk = 0, k
        while len(pending):
            kk = min(kk, len(faces))
            dc, idx = tree.query(points[pending], k=kk)
            dc, idx = dc.reshape(len(pending), kk), idx.reshape(len(pending), kk)
            # only the candidates not examined in earlier rounds
            rows = np.repeat(pending, kk - done_k)
            f = faces[idx[:, done_k:].ravel()]
            d = np.empty(len(rows))
            for s in range(0, len(rows), _CHUNK):
                e = s + _CHUNK
                d[s:e] = closest_point_distance(points[rows[s:e]], tri[f[s:e], 0],
                                                tri[f[s:e], 1], tri[f[s:e], 2])
            np.minimum.at(best, rows, d)
            if kk == len(faces):
                break
            # faces beyond the kk-th centroid are at least dc[:, -1] - rmax away
            pending = pending[best[pending] > dc[:, -1] - rmax]
            done_k, kk = kk, kk * 4
    return best


def hausdorff(mesh_a: Mesh, mesh_b: Mesh,
              samples_per_face: int = DEFAULT_SAMPLES_PER_FACE) -> tuple[float, float]:
    """Symmetric sampled Hausdorff distance as ``(max, rms)``.

    Samples of each mesh are measured against the other mesh's surface and
    both directions are pooled.
    """
    if not mesh_a.n_vertices or not mesh_b.n_vertices:
        raise ValueError("hausdorff needs two nonempty meshes")
    if (np.array_equal(mesh_a.vertices, mesh_b.vertices)
            and np.array_equal(mesh_a.faces, mesh_b.faces)):
        # same surface; skip the round-off of re-projecting samples
        return 0.0, 0.0
    d_ab = point_mesh_distance(sample_surface(mesh_a, samples_per_face), mesh_b)
    d_ba = point_mesh_distance(sample_surface(mesh_b, samples_per_face), mesh_a)
    d = np.concatenate([d_ab, d_ba])
    return float(d.max()), float(np.sqrt(np.mean(d * d)))


def bbox_diagonal(mesh: Mesh) -> float:
    v = mesh.vertices
    return float(np.linalg.norm(v.max(axis=0) - v.min(axis=0)))


def psnr_from_rms(diagonal: float, rms: float) -> float:
    if rms <= 0.0:
        return PSNR_CAP_DB
    return min(PSNR_CAP_DB, 20.0 * math.log10(diagonal / rms))


def psnr(mesh_a: Mesh, mesh_b: Mesh, samples_per_face: int = DEFAULT_SAMPLES_PER_FACE) -> float:
    """``20 log10(diag / rms)`` with ``diag`` the bounding-box diagonal of ``mesh_a``.

    Identical meshes give the cap of 200 dB.
    """
    _, rms = hausdorff(mesh_a, mesh_b, samples_per_face)
    return psnr_from_rms(bbox_diagonal(mesh_a), rms)


def error_bound(mesh: Mesh, b: int) -> float:
    """Largest displacement quantization to ``b`` bits can cause."""
    if b < 1:
        raise ValueError("bit depth must be positive")
    rng = float(mesh.vertices.max() - mesh.vertices.min())
    if rng <= 0.0:
        raise ValueError("degenerate coordinate range")
    return _bound_from_range(rng, b)


def nearest_vertex_map(original: Mesh, recon: Mesh) -> np.ndarray:
    """For each reconstructed vertex, the index of the closest original vertex."""
    if not recon.n_vertices:
        return np.zeros(0, dtype=np.int64)
    return cKDTree(original.vertices).query(recon.vertices)[1].astype(np.int64)


def edge_set_diff(original: Mesh, recon: Mesh, vertex_map=None) -> tuple[int, int]:
    """``(missing, extra)`` edge counts after mapping ``recon`` onto ``original``.

    Reconstructed edges whose ends map to the same original vertex count
    as extra.
    """
    if vertex_map is None:
        vertex_map = nearest_vertex_map(original, recon)
    vertex_map = np.asarray(vertex_map, dtype=np.int64)
    mapped = set()
    for a, b in recon.edges.tolist():
        u, w = int(vertex_map[a]), int(vertex_map[b])
        mapped.add((min(u, w), max(u, w)))
    ref = original.edge_keys
    return len(ref - mapped), len(mapped - ref)


@dataclass(frozen=True)
class ErrorReport:
    hausdorff_max: float
    hausdorff_rms: float
    psnr: float
    missing_edges: int
    extra_edges: int
    bound: float | None = None

    def to_dict(self) -> dict:
        d = asdict(self)
        return {
            "hausdorffMax": d["hausdorff_max"],
            "hausdorffRms": d["hausdorff_rms"],
            "psnr": d["psnr"],
            "edgeSetDiff": {"missing": d["missing_edges"], "extra": d["extra_edges"]},
            "bound": d["bound"],
        }


def evaluate(original: Mesh, recon: Mesh, b: int | None = None,
             samples_per_face: int = DEFAULT_SAMPLES_PER_FACE) -> ErrorReport:
    """All distortion measures of ``recon`` against ``original`` in one report."""
    hmax, hrms = hausdorff(original, recon, samples_per_face)
    missing, extra = edge_set_diff(original, recon)
    return ErrorReport(
        hausdorff_max=hmax,
        hausdorff_rms=hrms,
        psnr=psnr_from_rms(bbox_diagonal(original), hrms),
        missing_edges=missing,
        extra_edges=extra,
        bound=error_bound(original, b) if b is not None else None,
    )
