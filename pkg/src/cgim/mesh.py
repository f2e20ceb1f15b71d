"""Indexed triangle meshes: storage, OBJ/OFF I/O, adjacency and topology checks.

Only open genus-zero meshes (triangulated disks) are accepted by the
encoder, but :class:`Mesh` itself stores anything with triangular faces so
that lossy reconstructions with broken connectivity can still be written
out and measured.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

logger = logging.getLogger(__name__)


class MeshFormatError(ValueError):
    """Raised when a mesh file cannot be parsed."""


class Mesh:
    """Triangle mesh with lazily derived adjacency.

    Parameters
    ----------
    vertices : array_like
        ``(n, 3)`` float coordinates.
    faces : array_like
        ``(m, 3)`` integer vertex ids, counterclockwise seen from outside.
    extra_edges : array_like, optional
        ``(k, 2)`` edges not carried by any face. Lossy reconstructions can
        produce them; they join :attr:`edges` but not the face-based
        topology queries.

    The arrays are copied and frozen; a mesh never changes after
    construction so derived data can be cached.
    """

    def __init__(self, vertices, faces, extra_edges=None):
        v = np.array(vertices, dtype=np.float64).reshape(-1, 3)
        f = np.array(faces, dtype=np.int64).reshape(-1, 3)
        if f.size and (f.min() < 0 or f.max() >= len(v)):
            raise ValueError("face references a vertex id outside [0, %d)" % len(v))
        x = np.zeros((0, 2), dtype=np.int64) if extra_edges is None else \
            np.array(extra_edges, dtype=np.int64).reshape(-1, 2)
        if x.size and (x.min() < 0 or x.max() >= len(v)):
            raise ValueError("edge references a vertex id outside [0, %d)" % len(v))
        for a in (v, f, x):
            a.setflags(write=False)
        self.vertices = v
        self.faces = f
        self.extra_edges = x

    def __repr__(self):
        return "Mesh(|V|=%d, |E|=%d, |F|=%d)" % (self.n_vertices, len(self.edges), self.n_faces)

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @cached_property
    def edges(self) -> np.ndarray:
        """Sorted ``(k, 2)`` array of unordered edges ``(a, b)`` with ``a < b``."""
        f = self.faces
        e = np.concatenate([f[:, [0, 1]], f[:, [1, 2]], f[:, [2, 0]], self.extra_edges])
        e = e[e[:, 0] != e[:, 1]]
        if not len(e):
            return np.zeros((0, 2), dtype=np.int64)
        e.sort(axis=1)
        return np.unique(e, axis=0)

    @cached_property
    def edge_keys(self) -> frozenset:
        return frozenset(map(tuple, self.edges.tolist()))

    @cached_property
    def adjacency(self) -> list[frozenset]:
        adj = [set() for _ in range(self.n_vertices)]
        for a, b in self.edges.tolist():
            adj[a].add(b)
            adj[b].add(a)
        return [frozenset(s) for s in adj]

    def adjacent(self, a: int, b: int) -> bool:
        return b in self.adjacency[a]

    @cached_property
    def boundary_edges(self) -> list[tuple[int, int]]:
        """Directed edges owned by exactly one face, in face orientation."""
        count: dict[tuple[int, int], int] = {}
        directed = []
        for a, b, c in self.faces.tolist():
            for u, w in ((a, b), (b, c), (c, a)):
                key = (u, w) if u < w else (w, u)
                count[key] = count.get(key, 0) + 1
                directed.append((u, w))
        return [(u, w) for u, w in directed if count[(min(u, w), max(u, w))] == 1]

    @cached_property
    def boundary_loops(self) -> list[list[int]]:
        """Boundary loops following face orientation (interior on the left).

        Walks are deterministic: each loop starts at its smallest vertex id.
        Branching boundary vertices (pinches) split loops arbitrarily but
        reproducibly; :func:`validate_topology` reports them separately.
        """
        succ: dict[int, list[int]] = {}
        for u, w in self.boundary_edges:
            succ.setdefault(u, []).append(w)
        for lst in succ.values():
            lst.sort()
        loops = []
        remaining = sum(len(s) for s in succ.values())
        while remaining:
            start = min(u for u, s in succ.items() if s)
            loop = [start]
            cur = succ[start].pop(0)
            remaining -= 1
            while cur != start:
                loop.append(cur)
                if not succ.get(cur):
                    break
                cur = succ[cur].pop(0)
                remaining -= 1
            loops.append(loop)
        return loops

    @cached_property
    def boundary_vertices(self) -> frozenset:
        return frozenset(u for u, _ in self.boundary_edges)

    @cached_property
    def _corner_next(self) -> list[dict[int, int]]:
        # corner_next[v][a] = b  <=>  face (v, a, b) in ccw order
        nxt: list[dict[int, int]] = [dict() for _ in range(self.n_vertices)]
        for a, b, c in self.faces.tolist():
            nxt[a][b] = c
            nxt[b][c] = a
            nxt[c][a] = b
        return nxt

    def neighbors(self, v: int) -> list[int]:
        """Neighbors of ``v`` in counterclockwise order.

        Interior vertices start at their smallest neighbor id; boundary
        vertices list the open fan from one boundary edge to the other.
        """
        if not 0 <= v < self.n_vertices:
            raise IndexError("vertex id %d out of range" % v)
        nxt = self._corner_next[v]
        if not nxt:
            return sorted(self.adjacency[v])
        targets = set(nxt.values())
        starts = [a for a in nxt if a not in targets]
        start = min(starts) if starts else min(nxt)
        order = [start]
        seen = {start}
        cur = start
        while cur in nxt:
            cur = nxt[cur]
            if cur in seen:
                break
            seen.add(cur)
            order.append(cur)
        # pinched or inconsistent fans: append what the walk missed
        order.extend(sorted(self.adjacency[v] - seen))
        return order


def neighbors(mesh: Mesh, v: int) -> list[int]:
    return mesh.neighbors(v)


@dataclass
class ValidationReport:
    """Outcome of :func:`validate_topology`; ``ok`` iff no violations."""

    violations: list[str] = field(default_factory=list)
    euler_characteristic: int = 0
    boundary_loops: int = 0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        return {
            "ok": self.ok,
            "violations": list(self.violations),
            "eulerCharacteristic": self.euler_characteristic,
            "boundaryLoops": self.boundary_loops,
        }


def validate_topology(mesh: Mesh) -> ValidationReport:
    """Check that ``mesh`` is a consistently oriented triangulated disk."""
    report = ValidationReport()
    f = mesh.faces
    if not len(f):
        report.violations.append("mesh has no faces")
        return report
    bad = (f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])
    if bad.any():
        report.violations.append("degenerate face: %d faces repeat a vertex" % int(bad.sum()))
        return report

    directed: dict[tuple[int, int], int] = {}
    undirected: dict[tuple[int, int], int] = {}
    for a, b, c in f.tolist():
        for u, w in ((a, b), (b, c), (c, a)):
            directed[(u, w)] = directed.get((u, w), 0) + 1
            key = (min(u, w), max(u, w))
            undirected[key] = undirected.get(key, 0) + 1
    over = [e for e, n in undirected.items() if n > 2]
    if over:
        report.violations.append("non-manifold edge: %d edges shared by more than two faces" % len(over))
    flipped = [e for e, n in directed.items() if n > 1]
    if flipped:
        report.violations.append("inconsistent orientation: %d directed edges used twice" % len(flipped))

    used = np.zeros(mesh.n_vertices, dtype=bool)
    used[f.ravel()] = True
    if not used.all():
        report.violations.append("isolated vertices: %d vertices belong to no face" % int((~used).sum()))

    # vertex manifoldness: faces around each vertex must form one fan
    pinched = 0
    for v, nxt in enumerate(mesh._corner_next):
        if not nxt:
            continue
        targets = set(nxt.values())
        starts = [a for a in nxt if a not in targets]
        if len(starts) > 1:
            pinched += 1
            continue
        cur = starts[0] if starts else next(iter(nxt))
        seen = {cur}
        while cur in nxt:
            cur = nxt[cur]
            if cur in seen:
                break
            seen.add(cur)
        if len(seen) != len(mesh.adjacency[v]):
            pinched += 1
    if pinched:
        report.violations.append("non-manifold vertex: %d vertices with more than one face fan" % pinched)

    loops = mesh.boundary_loops
    report.boundary_loops = len(loops)
    if len(loops) != 1:
        report.violations.append("boundary must be exactly one closed loop, found %d" % len(loops))

    chi = mesh.n_vertices - len(mesh.edges) + mesh.n_faces
    report.euler_characteristic = int(chi)
    if chi != 1:
        report.violations.append("Euler characteristic %d != 1 (not a disk)" % chi)
    return report


def _parse_index(token: str, n: int, lineno: int) -> int:
    head = token.split("/")[0]
    try:
        i = int(head)
    except ValueError as exc:
        raise MeshFormatError("line %d: bad face index %r" % (lineno, token)) from exc
    i = i - 1 if i > 0 else n + i
    if not 0 <= i < n:
        raise MeshFormatError("line %d: dangling vertex reference %s" % (lineno, head))
    return i


def _read_obj(text: str) -> Mesh:
    verts, faces, face_lines, line_lines = [], [], [], []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        if parts[0] == "v":
            if len(parts) < 4:
                raise MeshFormatError("line %d: vertex needs 3 coordinates" % lineno)
            try:
                verts.append([float(x) for x in parts[1:4]])
            except ValueError as exc:
                raise MeshFormatError("line %d: bad coordinate" % lineno) from exc
        elif parts[0] == "f":
            if len(parts) != 4:
                raise MeshFormatError("line %d: non-triangular face" % lineno)
            face_lines.append((lineno, parts[1:]))
        elif parts[0] == "l":
            line_lines.append((lineno, parts[1:]))
    for lineno, toks in face_lines:
        faces.append([_parse_index(t, len(verts), lineno) for t in toks])
    extra = []
    for lineno, toks in line_lines:
        ids = [_parse_index(t, len(verts), lineno) for t in toks]
        extra += list(zip(ids, ids[1:]))
    return Mesh(np.array(verts).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3),
                extra_edges=extra or None)


def _read_off(text: str) -> Mesh:
    tokens_by_line = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].strip()
        if line:
            tokens_by_line.append(line.split())
    if not tokens_by_line or not tokens_by_line[0][0].endswith("OFF"):
        raise MeshFormatError("OFF header missing")
    head = tokens_by_line[0][1:]
    rest = tokens_by_line[1:]
    if not head:
        head, rest = rest[0], rest[1:]
    try:
        nv, nf = int(head[0]), int(head[1])
        verts = [[float(x) for x in rest[i][:3]] for i in range(nv)]
    except (ValueError, IndexError) as exc:
        raise MeshFormatError("malformed OFF vertex block") from exc
    faces = []
    for k in range(nf):
        try:
            row = [int(x) for x in rest[nv + k]]
        except (ValueError, IndexError) as exc:
            raise MeshFormatError("malformed OFF face block") from exc
        if row[0] != 3:
            raise MeshFormatError("face %d: non-triangular face" % k)
        ids = row[1:4]
        if any(not 0 <= i < nv for i in ids):
            raise MeshFormatError("face %d: dangling vertex reference" % k)
        faces.append(ids)
    return Mesh(np.array(verts).reshape(-1, 3), np.array(faces, dtype=np.int64).reshape(-1, 3))


def load_mesh(path) -> Mesh:
    """Read an OBJ or OFF file (chosen by extension, OBJ otherwise)."""
    path = Path(path)
    text = path.read_text(encoding="utf-8")
    if path.suffix.lower() == ".off":
        return _read_off(text)
    return _read_obj(text)


def save_mesh(mesh: Mesh, path, uv=None) -> None:
    """Write ``mesh`` as OBJ with round-trip exact coordinates.

    If ``uv`` is given, ``vt`` lines are emitted and faces reference them
    with the same index as the vertex.
    """
    lines = ["# cgim mesh |V|=%d |F|=%d" % (mesh.n_vertices, mesh.n_faces)]
    lines += ["v %r %r %r" % tuple(p) for p in mesh.vertices.tolist()]
    if uv is not None:
        lines += ["vt %r %r" % tuple(t) for t in np.asarray(uv, dtype=float).tolist()]
        lines += ["f %d/%d %d/%d %d/%d" % (a + 1, a + 1, b + 1, b + 1, c + 1, c + 1)
                  for a, b, c in mesh.faces.tolist()]
    else:
        lines += ["f %d %d %d" % (a + 1, b + 1, c + 1) for a, b, c in mesh.faces.tolist()]
    lines += ["l %d %d" % (a + 1, b + 1) for a, b in mesh.extra_edges.tolist()]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
