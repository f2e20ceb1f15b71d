"""Mesh recovery from a possibly degraded pixel array by category clustering.

Each row is split into ``x_i + 1`` contiguous categories at its largest
neighbor color jumps; columns likewise. Row categories are then merged
top to bottom into the closest category of the row above, and every
resulting global category becomes one vertex.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .codec import CgimArray, CgimFormatError, CgimHeader, _round_half_away, decode_vertex
from .levels import matrix_edge_keys
from .mesh import Mesh


def row_distances(A: CgimArray) -> np.ndarray:
    """``(r1, r2 - 1)`` Euclidean color distance of horizontally adjacent pixels."""
    px = A.pixels.astype(np.float64)
    return np.sqrt(((px[:, 1:] - px[:, :-1]) ** 2).sum(axis=2))


def col_distances(A: CgimArray) -> np.ndarray:
    """``(r1 - 1, r2)`` Euclidean color distance of vertically adjacent pixels."""
    px = A.pixels.astype(np.float64)
    return np.sqrt(((px[1:] - px[:-1]) ** 2).sum(axis=2))


def _split(d: np.ndarray, cuts: int) -> np.ndarray:
    """Labels ``0..cuts`` for ``len(d) + 1`` items, cutting at the largest gaps.

    Ties go to the smaller index, which also places forced cuts at the
    first zero-distance gaps.
    """
    if cuts > len(d):
        raise CgimFormatError("%d cuts requested but only %d gaps exist" % (cuts, len(d)))
    idx = np.arange(len(d))
    chosen = np.lexsort((idx, -d))[:cuts]
    step = np.zeros(len(d) + 1, dtype=np.int64)
    step[np.sort(chosen) + 1] = 1
    return np.cumsum(step)


def cluster_rows(A: CgimArray, H: CgimHeader) -> np.ndarray:
    """``(r1, r2)`` labels: the row category of every pixel within its row."""
    if len(H.row_runs) != A.shape[0]:
        raise CgimFormatError("row run counts do not match the array")
    d = row_distances(A)
    return np.stack([_split(d[i], H.row_runs[i]) for i in range(A.shape[0])])


def cluster_cols(A: CgimArray, H: CgimHeader) -> np.ndarray:
    """``(r1, r2)`` labels: the column category of every pixel within its column."""
    if len(H.col_runs) != A.shape[1]:
        raise CgimFormatError("column run counts do not match the array")
    d = col_distances(A)
    return np.stack([_split(d[:, j], H.col_runs[j]) for j in range(A.shape[1])], axis=1)


def category_distance(i: int, k: int, t: int, rows: np.ndarray, cols: np.ndarray,
                      d_col: np.ndarray) -> float:
    """Distance between category ``k`` of row ``i`` and category ``t`` of row ``i + 1``.

    Infinite when the two share no column, or when every shared column
    crosses a column-category boundary. Otherwise the mean vertical color
    distance over the shared columns that stay inside one column category.
    """
    shared = (rows[i] == k) & (rows[i + 1] == t)
    if not shared.any():
        return np.inf
    xi = shared & (cols[i] == cols[i + 1])
    if not xi.any():
        return np.inf
    return float(d_col[i][xi].mean())


@dataclass(frozen=True)
class GlobalCategories:
    """Global category id of every pixel plus the mean pixel of each category."""

    labels: np.ndarray
    means: np.ndarray

    @property
    def count(self) -> int:
        return len(self.means)


def _row_pair_distances(i, rows, cols, d_col):
    """All finite ``D(k, t)`` between rows ``i`` and ``i + 1`` as a dict."""
    k, t = rows[i], rows[i + 1]
    inside = cols[i] == cols[i + 1]
    nt = int(t.max()) + 1
    key = k * nt + t
    total = np.bincount(key[inside], weights=d_col[i][inside], minlength=key.max() + 1)
    count = np.bincount(key[inside], minlength=key.max() + 1)
    out = {}
    for kk in np.flatnonzero(count).tolist():
        out[divmod(kk, nt)] = total[kk] / count[kk]
    return out


def merge_categories(rows: np.ndarray, cols: np.ndarray, d_col: np.ndarray,
                     pixels: np.ndarray | None = None) -> GlobalCategories:
    """Merge row categories top to bottom into global categories.

    A category of row ``i + 1`` joins the category of row ``i`` with the
    smallest finite distance (smaller index on ties) or starts a new one.
    Global ids are numbered in order of first appearance.
    """
    r1, r2 = rows.shape
    labels = np.empty((r1, r2), dtype=np.int64)
    gid = {}
    next_id = 0
    for k in range(int(rows[0].max()) + 1):
        gid[k] = next_id
        next_id += 1
    labels[0] = [gid[k] for k in rows[0].tolist()]
    for i in range(r1 - 1):
        dist = _row_pair_distances(i, rows, cols, d_col)
        best: dict[int, tuple] = {}
        for (k, t), d in sorted(dist.items()):
            if t not in best or d < best[t][0]:
                best[t] = (d, k)
        new = {}
        for t in range(int(rows[i + 1].max()) + 1):
            if t in best:
                new[t] = gid[best[t][1]]
            else:
                new[t] = next_id
                next_id += 1
        gid = new
        labels[i + 1] = [gid[t] for t in rows[i + 1].tolist()]
    means = np.zeros((next_id, 3))
    if pixels is not None:
        flat = labels.ravel()
        n = np.bincount(flat, minlength=next_id).astype(np.float64)
        for c in range(3):
            means[:, c] = np.bincount(flat, weights=pixels[..., c].ravel().astype(np.float64),
                                      minlength=next_id) / n
    return GlobalCategories(labels, means)


def grid_mesh(labels: np.ndarray, vertices: np.ndarray) -> Mesh:
    """Mesh whose connectivity is induced by an id grid.

    Each pair of cells ``(T_j, T_j+1, B_j)``, ``(T_j+1, B_j+1, B_j)`` yields
    a face unless two of its ids coincide; induced edges without any face
    are kept as extra edges.
    """
    g = np.asarray(labels, dtype=np.int64)
    tl, tr = g[:-1, :-1].ravel(), g[:-1, 1:].ravel()
    bl, br = g[1:, :-1].ravel(), g[1:, 1:].ravel()
    faces = np.concatenate([np.stack([tl, bl, tr], axis=1), np.stack([tr, bl, br], axis=1)])
    ok = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
    faces = faces[ok]
    if len(faces):
        _, first = np.unique(np.sort(faces, axis=1), axis=0, return_index=True)
        faces = faces[np.sort(first)]
    n = len(vertices)
    induced = matrix_edge_keys(g, n)
    covered = np.zeros(0, dtype=np.int64)
    if len(faces):
        fe = np.sort(np.concatenate([faces[:, [0, 1]], faces[:, [1, 2]], faces[:, [0, 2]]]), axis=1)
        covered = np.unique(fe[:, 0] * n + fe[:, 1])
    extra = np.setdiff1d(induced, covered)
    return Mesh(vertices, faces, extra_edges=np.stack([extra // n, extra % n], axis=1))


def reconstruct_lossy(A: CgimArray, H: CgimHeader) -> Mesh:
    """Cluster a (possibly degraded) array back into a mesh.

    Vertex ids follow the first row-major appearance of each category;
    positions decode the rounded mean pixel of the category.
    """
    H.validate()
    if A.shape != (H.r1, H.r2):
        raise CgimFormatError("array shape %s does not match header %dx%d" % (A.shape, H.r1, H.r2))
    rows = cluster_rows(A, H)
    cols = cluster_cols(A, H)
    cats = merge_categories(rows, cols, col_distances(A), A.pixels)
    px = np.clip(_round_half_away(cats.means), 0, H.maxval)
    return grid_mesh(cats.labels, decode_vertex(px, H))
