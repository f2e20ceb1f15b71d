"""Tutte embedding of a triangulated disk onto the unit square."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.sparse.linalg import spsolve

from .mesh import Mesh

RESIDUAL_TOL = 1e-10

# counterclockwise walk around the square starting at the top-left corner
_SQUARE_CCW = np.array([[0.0, 1.0], [0.0, 0.0], [1.0, 0.0], [1.0, 1.0]])


class ParametrizationError(RuntimeError):
    pass


@dataclass(frozen=True)
class Parametrization:
    """Per-vertex ``uv`` in ``[0, 1]^2`` plus the pinned corners.

    ``corners`` is ``(top_left, top_right, bottom_right, bottom_left)``;
    for a three-vertex boundary the last entry is ``-1``.
    """

    uv: np.ndarray
    corners: tuple
    boundary_loop: tuple

    def residual(self, mesh: Mesh) -> float:
        """Max norm of ``uv(v) - mean(uv(N(v)))`` over interior vertices."""
        boundary = set(self.boundary_loop)
        worst = 0.0
        for v in range(mesh.n_vertices):
            if v in boundary:
                continue
            nb = list(mesh.adjacency[v])
            worst = max(worst, float(np.abs(self.uv[v] - self.uv[nb].mean(axis=0)).max()))
        return worst


def _boundary_positions(mesh: Mesh, loop: list[int], corners) -> tuple[dict, tuple]:
    pts = mesh.vertices[loop]
    n = len(loop)
    if n == 3:
        pos = {loop[0]: (0.0, 1.0), loop[1]: (0.5, 0.0), loop[2]: (1.0, 1.0)}
        return pos, (loop[0], loop[2], loop[1], -1)

    seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    total = cum[-1]

    if corners is not None:
        tl, tr, br, bl = corners
        try:
            walk = [loop.index(c) for c in (tl, bl, br, tr)]
        except ValueError as exc:
            raise ParametrizationError("corner is not a boundary vertex") from exc
        shift = walk[0]
        walk = [(w - shift) % n for w in walk]
        if not walk[0] < walk[1] < walk[2] < walk[3]:
            raise ParametrizationError("corners are not in boundary order")
        loop = loop[shift:] + loop[:shift]
        pts = mesh.vertices[loop]
        seg = np.linalg.norm(np.roll(pts, -1, axis=0) - pts, axis=1)
        cum = np.concatenate([[0.0], np.cumsum(seg)])
        total = cum[-1]
        idx = walk
    else:
        # quarter points by chord length, kept distinct and increasing
        idx = [0]
        for k in (1, 2, 3):
            target = total * k / 4.0
            i = int(np.argmin(np.abs(cum[:n] - target)))
            i = min(max(i, idx[-1] + 1), n - (4 - k))
            idx.append(i)

    pos = {}
    for k in range(4):
        a, b = idx[k], (idx[k + 1] if k < 3 else n)
        start, end = _SQUARE_CCW[k], _SQUARE_CCW[(k + 1) % 4]
        length = cum[b] - cum[a]
        for i in range(a, b):
            t = (cum[i] - cum[a]) / length if length > 0 else (i - a) / (b - a)
            p = start + t * (end - start)
            # the top edge gets the literal ordinate 1
            if k == 3:
                p[1] = 1.0
            pos[loop[i]] = (float(p[0]), float(p[1]))
    corner_ids = (loop[idx[0]], loop[idx[3]], loop[idx[2]], loop[idx[1]])
    return pos, corner_ids


def tutte_parametrize(mesh: Mesh, corners=None) -> Parametrization:
    """Uniform-weight Tutte embedding with the boundary pinned to the square.

    Parameters
    ----------
    mesh : Mesh
        A triangulated disk (see :func:`cgim.mesh.validate_topology`).
    corners : tuple of int, optional
        ``(top_left, top_right, bottom_right, bottom_left)`` boundary vertex
        ids. By default the boundary loop is cut into four arcs of roughly
        equal chord length, starting at its smallest vertex id.
    """
    loops = mesh.boundary_loops
    if len(loops) != 1:
        raise ParametrizationError("expected one boundary loop, found %d" % len(loops))
    loop = list(loops[0])
    pos, corner_ids = _boundary_positions(mesh, loop, corners)

    n = mesh.n_vertices
    uv = np.zeros((n, 2))
    for v, p in pos.items():
        uv[v] = p
    interior = np.array([v for v in range(n) if v not in pos], dtype=np.int64)
    if len(interior):
        col = -np.ones(n, dtype=np.int64)
        col[interior] = np.arange(len(interior))
        rows, cols, vals = [], [], []
        rhs = np.zeros((len(interior), 2))
        for r, v in enumerate(interior.tolist()):
            nb = mesh.adjacency[v]
            rows.append(r)
            cols.append(r)
            vals.append(float(len(nb)))
            for w in nb:
                if col[w] >= 0:
                    rows.append(r)
                    cols.append(int(col[w]))
                    vals.append(-1.0)
                else:
                    rhs[r] += uv[w]
        A = sparse.csc_matrix((vals, (rows, cols)), shape=(len(interior),) * 2)
        try:
            sol = spsolve(A, rhs)
        except RuntimeError as exc:
            raise ParametrizationError("singular Tutte system") from exc
        sol = np.asarray(sol).reshape(len(interior), 2)
        if not np.isfinite(sol).all():
            raise ParametrizationError("singular Tutte system")
        uv[interior] = sol

    uv.setflags(write=False)
    param = Parametrization(uv=uv, corners=tuple(corner_ids), boundary_loop=tuple(loop))
    if len(interior):
        res = param.residual(mesh)
        if res > RESIDUAL_TOL:
            raise ParametrizationError("Tutte residual %.3g above %.0e" % (res, RESIDUAL_TOL))
    return param


def initial_level(param: Parametrization) -> list[int]:
    """All vertices with ordinate exactly one, sorted by abscissa."""
    uv = param.uv
    top = np.flatnonzero(uv[:, 1] == 1.0)
    if len(top) < 2:
        raise ParametrizationError("fewer than two vertices on the top edge")
    order = top[np.argsort(uv[top, 0], kind="stable")]
    xs = uv[order, 0]
    if np.any(np.diff(xs) <= 0):
        raise ParametrizationError("top-edge abscissas are not strictly increasing")
    if xs[0] != 0.0 or xs[-1] != 1.0:
        raise ParametrizationError("top edge does not span [0, 1]")
    return [int(v) for v in order]
