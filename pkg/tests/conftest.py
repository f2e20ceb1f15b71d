"""Shared mesh fixtures."""

from __future__ import annotations

import numpy as np
import pytest

from cgim.mesh import Mesh

LETTERS = "ABCDEFGHIJKL"

# Twelve-vertex disk whose top boundary row is A..E; the neighbor lists of
# that row are N(A)=[F,G], N(B)=[G], N(C)=[G,F,H], N(D)=[H,I,J], N(E)=[J,K],
# and L sits inside the triangle I, J, K.
_LETTER_FACES = ["AGB", "BGC", "CGF", "AFG", "CFH", "CHD", "DHI", "DIJ", "DJE",
                 "EJK", "IJL", "JKL", "ILK"]
_LETTER_POS = {
    "A": (0, 3), "B": (1, 3), "C": (2, 3), "D": (3, 3), "E": (4, 3),
    "F": (0, 0), "G": (1, 2.2), "H": (2, 0), "I": (3, 0), "J": (3.6, 1.8),
    "K": (4, 0), "L": (3.6, 0.8),
}


def ccw_mesh(vertices, faces) -> Mesh:
    """Mesh with each face flipped, if needed, to be counterclockwise in xy."""
    v = np.asarray(vertices, dtype=np.float64)
    out = []
    for a, b, c in faces:
        pa, pb, pc = v[a], v[b], v[c]
        cross = (pb[0] - pa[0]) * (pc[1] - pa[1]) - (pb[1] - pa[1]) * (pc[0] - pa[0])
        out.append((a, b, c) if cross > 0 else (a, c, b))
    return Mesh(v, out)


def letter_mesh() -> Mesh:
    ix = {c: i for i, c in enumerate(LETTERS)}
    verts = [[*_LETTER_POS[c], 0.0] for c in LETTERS]
    return ccw_mesh(verts, [[ix[c] for c in f] for f in _LETTER_FACES])


@pytest.fixture
def walk_mesh() -> Mesh:
    return letter_mesh()


@pytest.fixture
def walk_corners():
    ix = {c: i for i, c in enumerate(LETTERS)}
    return ix["A"], ix["E"], ix["K"], ix["F"]


@pytest.fixture
def triangle() -> Mesh:
    return Mesh([[0, 0, 0], [1, 0, 0], [0, 1, 0]], [[0, 1, 2]])


@pytest.fixture
def tetrahedron() -> Mesh:
    v = [[0, 0, 0], [1, 0, 0], [0, 1, 0], [0, 0, 1]]
    return Mesh(v, [[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]])


def level_fixture():
    """Eleven-element level whose 8th and 10th entries are one vertex.

    Vertex ids equal the 1-based positions except position 10, which holds
    vertex 8. Besides the path edges the graph has strays 2-4, 2-5 and 6-8.
    """
    Q = [1, 2, 3, 4, 5, 6, 7, 8, 9, 8, 11]
    mesh = Mesh(np.zeros((12, 3)), [(2, 3, 4), (2, 4, 5), (6, 7, 8)],
                extra_edges=[(1, 2), (5, 6), (8, 9), (8, 11)])
    return Q, mesh


def hub_mesh(spokes: int = 12, rings: int = 3) -> Mesh:
    """Polar grid around one high-degree center vertex, cut open along a ray.

    The cut makes the disk a 300 degree sector, so the center keeps
    ``spokes`` rim-ward neighbors and sits on the boundary.
    """
    ang = np.linspace(0.0, 5.0 * np.pi / 3.0, spokes)
    verts = [[0.0, 0.0, 0.0]]
    for r in range(1, rings + 1):
        for a in ang:
            verts.append([r * np.cos(a), r * np.sin(a), 0.05 * np.sin(3 * a) * r])
    idx = lambda r, s: 1 + (r - 1) * spokes + s  # noqa: E731
    faces = [(0, idx(1, s), idx(1, s + 1)) for s in range(spokes - 1)]
    for r in range(1, rings):
        for s in range(spokes - 1):
            a, b = idx(r, s), idx(r, s + 1)
            c, d = idx(r + 1, s), idx(r + 1, s + 1)
            faces += [(a, c, d), (a, d, b)]
    return ccw_mesh(verts, faces)
