"""Build V-matrices that are connectivity-preserving to a triangulated disk.

The level sweep starts at the top edge of the Tutte embedding and grows
one level per iteration from the unvisited neighbors of the previous one
(candidate level, components, irregular pairs, proper sublevels). Each
iteration produces a strip, a pair of equal-length rows whose induced
triangles must be faces of the mesh not yet covered. A proposed strip that
fails this check is shrunk (fewer components, then single-vertex fans,
then ears along the front) so the result is connectivity-preserving by
construction; the final set comparison is kept as a guard.
"""

from __future__ import annotations

import bisect
import logging
from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from .levels import (
    align1,
    align2,
    build_candidate,
    components,
    dedup_runs,
    edge_set_induced,
    irregular_pairs,
    matrix_edge_keys,
    proper_sublevel,
)
from .mesh import Mesh
from .parametrize import Parametrization, initial_level

logger = logging.getLogger(__name__)

DEFAULT_ALPHA = 5


class StratifyError(RuntimeError):
    """The level sweep could not make progress."""


class ConnectivityError(RuntimeError):
    """A V-matrix failed the vertex-set/edge-set comparison."""


@dataclass
class VMatrix:
    """``r1 x r2`` grid of vertex ids."""

    grid: np.ndarray

    def __post_init__(self):
        self.grid = np.ascontiguousarray(self.grid, dtype=np.int64)
        self.grid.setflags(write=False)

    @property
    def r1(self) -> int:
        return self.grid.shape[0]

    @property
    def r2(self) -> int:
        return self.grid.shape[1]

    def row_runs(self) -> list[int]:
        """Per row: number of distinct-element runs minus one."""
        g = self.grid
        return [int(np.count_nonzero(g[i, 1:] != g[i, :-1])) for i in range(self.r1)]

    def col_runs(self) -> list[int]:
        g = self.grid
        return [int(np.count_nonzero(g[1:, j] != g[:-1, j])) for j in range(self.r2)]

    def to_text(self) -> str:
        return "\n".join(" ".join(str(v) for v in row) for row in self.grid.tolist()) + "\n"


@dataclass
class StratifyState:
    """Levels and the per-strip rows the sweep produced.

    ``minus[i]`` is row ``i`` as seen from the strip above it, ``plus[i]``
    as seen from the strip below; ``star`` holds the aligned rows.
    """

    levels: list = field(default_factory=list)
    minus: list = field(default_factory=list)
    plus: list = field(default_factory=list)
    star: list = field(default_factory=list)
    candidates: list = field(default_factory=list)
    fallbacks: dict = field(default_factory=dict)

    def to_text(self) -> str:
        out = []
        for i, lv in enumerate(self.levels):
            out.append("L%d: %s" % (i + 1, " ".join(map(str, lv))))
        return "\n".join(out) + "\n"


def connectivity_diff(grid: np.ndarray, mesh: Mesh) -> tuple[set, set, set, set]:
    """Missing/extra vertices and edges of a grid against ``mesh``."""
    n = mesh.n_vertices
    keys = matrix_edge_keys(grid, n)
    got_e = set(zip((keys // n).tolist(), (keys % n).tolist()))
    want_e = set(mesh.edge_keys)
    got_v = set(np.unique(grid).tolist())
    want_v = set(range(n))
    return want_v - got_v, got_v - want_v, want_e - got_e, got_e - want_e


def is_connectivity_preserving(grid: np.ndarray, mesh: Mesh) -> bool:
    return not any(connectivity_diff(grid, mesh))


class _Sweep:
    """Mutable bookkeeping of the level sweep: visited set and uncovered faces."""

    def __init__(self, mesh: Mesh):
        self.mesh = mesh
        self.remaining = set(tuple(sorted(f)) for f in mesh.faces.tolist())
        self.face_count = np.zeros(mesh.n_vertices, dtype=np.int64)
        for f in self.remaining:
            for v in f:
                self.face_count[v] += 1
        self.visited: set = set()

    def check(self, L: list, top: list, bottom: list):
        """Return the faces covered by strip ``(top, bottom)`` if it is legal."""
        if len(top) != len(bottom) or dedup_runs(top) != L:
            return None
        L_new = dedup_runs(bottom)
        if len(set(L_new)) != len(L_new):
            return None
        edges = self.mesh.edge_keys
        if not edge_set_induced(top, bottom) <= edges:
            return None
        faces = set()
        for j in range(len(top) - 1):
            for tri in ((top[j], top[j + 1], bottom[j]), (top[j + 1], bottom[j + 1], bottom[j])):
                if len(set(tri)) == 3:
                    key = tuple(sorted(tri))
                    if key not in self.remaining:
                        return None
                    faces.add(key)
        if not faces:
            return None
        left = set(L) - set(L_new)
        if left:
            drop = {}
            for f in faces:
                for v in f:
                    drop[v] = drop.get(v, 0) + 1
            for v in left:
                if self.face_count[v] != drop.get(v, 0):
                    return None
        return faces

    def commit(self, faces, L_new):
        for f in faces:
            self.remaining.discard(f)
            for v in f:
                self.face_count[v] -= 1
        self.visited.update(L_new)


def _anchor(mesh: Mesh, pos: dict, comp: list):
    first = [pos[w] for w in mesh.adjacency[comp[0]] if w in pos]
    last = [pos[w] for w in mesh.adjacency[comp[-1]] if w in pos]
    if not first or not last:
        return None
    return min(first), max(last)


def _assemble(mesh: Mesh, L: list, comps: list, truncate: bool):
    """Combine components with the previous level into ``(L_new, top, bottom)``.

    Segments of ``L`` between consecutive components are carried over. With
    ``truncate``, a leading (trailing) copy of ``L`` is dropped when the
    first (last) new element is a boundary vertex adjacent to ``L[0]``
    (``L[-1]``).
    """
    pos = {v: k for k, v in enumerate(L)}
    anchors = []
    for c in comps:
        a = _anchor(mesh, pos, c)
        if a is None or a[0] > a[1]:
            return None
        anchors.append(a)
    for (_, kp), (km, _) in zip(anchors, anchors[1:]):
        if kp > km:
            return None
    head = L[:anchors[0][0] + 1]
    tail = L[anchors[-1][1]:]
    new_parts, top_parts, bot_parts = [], [], []
    for idx, (c, (km, kp)) in enumerate(zip(comps, anchors)):
        try:
            p, q = align1(L[km:kp + 1], c, mesh)
        except ValueError:
            return None
        new_parts.append(list(c))
        top_parts.append(p)
        bot_parts.append(q)
        if idx + 1 < len(comps):
            gap = L[kp:anchors[idx + 1][0] + 1]
            new_parts.append(gap)
            top_parts.append(gap)
            bot_parts.append(gap)
    boundary = mesh.boundary_vertices
    q0, qn = comps[0][0], comps[-1][-1]
    drop_head = truncate and q0 in boundary and mesh.adjacent(q0, L[0])
    drop_tail = truncate and qn in boundary and mesh.adjacent(qn, L[-1])
    pre = [] if drop_head else head
    post = [] if drop_tail else tail
    L_new = dedup_runs(pre + sum(new_parts, []) + post)
    top = pre + sum(top_parts, []) + post
    bottom = pre + sum(bot_parts, []) + post
    # a column equal to its left neighbor adds nothing to the strip
    keep = [0] + [j for j in range(1, len(top)) if (top[j], bottom[j]) != (top[j - 1], bottom[j - 1])]
    top = [top[j] for j in keep]
    bottom = [bottom[j] for j in keep]
    return L_new, top, bottom


def _try(sweep: _Sweep, L: list, comps: list):
    comps = [c for c in comps if c]
    if not comps:
        return None
    for truncate in (True, False):
        built = _assemble(sweep.mesh, L, comps, truncate)
        if built is None:
            continue
        L_new, top, bottom = built
        faces = sweep.check(L, top, bottom)
        if faces is not None:
            return L_new, top, bottom, faces
    return None


def _alpha_filter(mesh: Mesh, L: list, comp: list, alpha: int) -> list:
    Ls = set(L)
    cs = set(comp)
    keep = {v for v in comp if len(mesh.adjacency[v] & Ls) >= alpha}
    for v in Ls:
        nb = [w for w in comp if mesh.adjacent(v, w)]
        if len(mesh.adjacency[v] & cs) >= alpha:
            keep.update((nb[0], nb[-1]))
    if not keep:
        return comp
    return [w for w in comp if w in keep]


def _propose(mesh: Mesh, uv: np.ndarray, L: list, visited, alpha, state: StratifyState):
    """Candidate ``Q`` plus repaired component lists, filtered first when ``alpha`` is set."""
    Q = build_candidate(mesh, uv, L, visited)
    state.candidates.append(Q)
    proper, filtered = [], []
    for comp in components(Q, mesh):
        elems = list(comp.elements)
        pairs = irregular_pairs(elems, mesh) if len(elems) >= 3 else []
        if pairs:
            elems = proper_sublevel(elems, mesh, pairs)
            proper.extend(elems)
            filtered.extend(elems)
        else:
            proper.extend(elems)
            if alpha is not None:
                filtered.extend(_alpha_filter(mesh, L, elems, alpha))
    options = [_repair(mesh, L, proper)]
    if alpha is not None:
        options.insert(0, _repair(mesh, L, filtered))
    return Q, options


def _repair(mesh: Mesh, L: list, chosen: list) -> list:
    """Drop later copies of repeated vertices and components whose anchor
    ranges in ``L`` are empty or run backwards past the previous one."""
    seen = set()
    uniq = []
    for v in chosen:
        if v not in seen:
            seen.add(v)
            uniq.append(v)
    pos = {v: k for k, v in enumerate(L)}
    out = []
    last = -1
    for comp in components(uniq, mesh):
        a = _anchor(mesh, pos, comp.elements)
        if a is None or a[0] > a[1] or a[0] < last:
            continue
        out.append(list(comp.elements))
        last = a[1]
    return out


def _step(sweep: _Sweep, uv, L, alpha, state: StratifyState):
    mesh = sweep.mesh
    Q, options = _propose(mesh, uv, L, sweep.visited, alpha, state)
    for comps in options:
        got = _try(sweep, L, comps)
        if got is not None:
            return got, "proposal"
    comps = options[-1]

    accepted = []
    for c in comps:
        trial = _try(sweep, L, accepted + [c])
        if trial is not None:
            accepted.append(c)
    if accepted:
        return _try(sweep, L, accepted), "subset"

    accepted = []
    for q in Q:
        trial = _try(sweep, L, accepted + [[q]])
        if trial is not None:
            accepted.append([q])
    if accepted:
        return _try(sweep, L, accepted), "fan"

    for k in range(1, len(L) - 1):
        bottom = L[:k] + [L[k - 1]] + L[k + 1:]
        faces = sweep.check(L, L, bottom)
        if faces is not None:
            return (dedup_runs(bottom), list(L), bottom, faces), "ear"
    return None, None


def stratify(mesh: Mesh, param: Parametrization, alpha=None) -> StratifyState:
    """Run the level sweep; returns levels and per-strip rows (unaligned)."""
    state = StratifyState()
    sweep = _Sweep(mesh)
    uv = param.uv
    L = initial_level(param)
    state.levels.append(L)
    sweep.visited.update(L)
    state.minus.append(None)
    while sweep.remaining:
        got, how = _step(sweep, uv, L, alpha, state)
        if got is None:
            raise StratifyError(
                "no legal strip below level %d (%d faces left): %s"
                % (len(state.levels), len(sweep.remaining), " ".join(map(str, L)))
            )
        L_new, top, bottom, faces = got
        state.fallbacks[how] = state.fallbacks.get(how, 0) + 1
        sweep.commit(faces, L_new)
        state.plus.append(top)
        state.minus.append(bottom)
        state.levels.append(L_new)
        L = L_new
    state.plus.append(None)
    if len(sweep.visited) != mesh.n_vertices:
        raise StratifyError("sweep finished with %d unvisited vertices"
                            % (mesh.n_vertices - len(sweep.visited)))
    logger.debug("stratify: %d levels, steps %s", len(state.levels), state.fallbacks)
    return state


def align_all_levels(state: StratifyState) -> list[list[int]]:
    """Equalize every row seen from both of its strips; returns aligned rows."""
    minus = [None if m is None else list(m) for m in state.minus]
    plus = [None if p is None else list(p) for p in state.plus]
    r1 = len(state.levels)
    for i in range(1, r1 - 1):
        plus[i], minus[i + 1] = align2(minus[i], plus[i], minus[i + 1])
    star = [None] * r1
    star[r1 - 2] = plus[r1 - 2]
    star[r1 - 1] = minus[r1 - 1]
    for i in range(r1 - 3, -1, -1):
        _, plus[i] = align2(plus[i + 1], minus[i + 1], plus[i])
        star[i] = plus[i]
    state.star = star
    return star


def _single_component(mask: np.ndarray) -> bool:
    _, n = ndimage.label(mask)
    return n <= 1


def _vertex_boxes(grid: np.ndarray) -> dict:
    """Bounding box ``(r0, r1, c0, c1)`` of every vertex's cells."""
    boxes: dict = {}
    rr, cc = np.indices(grid.shape)
    flat = grid.ravel()
    order = np.argsort(flat, kind="stable")
    vals, starts = np.unique(flat[order], return_index=True)
    ends = np.append(starts[1:], len(flat))
    r, c = rr.ravel()[order], cc.ravel()[order]
    for v, a, b in zip(vals.tolist(), starts.tolist(), ends.tolist()):
        boxes[v] = (int(r[a:b].min()), int(r[a:b].max()), int(c[a:b].min()), int(c[a:b].max()))
    return boxes


def _pair_keys(a: np.ndarray, b: np.ndarray, n: int) -> set:
    return set(matrix_edge_keys(np.stack([a, b]), n).tolist())


def removable_row(grid: np.ndarray, i: int, mesh: Mesh) -> bool:
    """Whether deleting interior row ``i`` keeps the induced edge set equal to E."""
    grid = np.asarray(grid)
    if not 1 <= i <= grid.shape[0] - 2:
        raise IndexError("row %d is not an interior row of a %d-row matrix" % (i, grid.shape[0]))
    n = mesh.n_vertices
    keys = matrix_edge_keys(np.delete(grid, i, axis=0), n)
    target = np.unique(mesh.edges[:, 0] * n + mesh.edges[:, 1])
    return np.array_equal(keys, target)


def removable_column(grid: np.ndarray, j: int, mesh: Mesh) -> bool:
    return removable_row(np.asarray(grid).T, j, mesh)


def _remove_rows(grid: np.ndarray, mesh: Mesh) -> np.ndarray:
    """Greedy top-to-bottom deletion of removable interior rows.

    Besides the edge-set test, a deletion must keep every vertex's cells
    4-connected so the cluster phase can still identify repeated copies.
    """
    n = mesh.n_vertices
    edges = set((mesh.edges[:, 0] * n + mesh.edges[:, 1]).tolist())
    rows = [grid[i].copy() for i in range(grid.shape[0])]
    pair = [_pair_keys(rows[k], rows[k + 1], n) for k in range(len(rows) - 1)]
    count: dict[int, int] = {}
    for s in pair:
        for e in s:
            count[e] = count.get(e, 0) + 1
    boxes = _vertex_boxes(grid)
    kept = list(range(len(rows)))  # original index of each surviving row
    i = 1
    while i < len(rows) - 1:
        A, B = pair[i - 1], pair[i]
        C = _pair_keys(rows[i - 1], rows[i + 1], n)
        ok = C <= edges
        if ok:
            for e in A | B:
                if count[e] - (e in A) - (e in B) + (e in C) <= 0:
                    ok = False
                    break
        if ok:
            # only vertices with cells in row i can lose connectivity
            trial_kept = kept[:i] + kept[i + 1:]
            for v in np.unique(rows[i]).tolist():
                r0, r1, c0, c1 = boxes[v]
                a = bisect.bisect_left(trial_kept, r0)
                b = bisect.bisect_right(trial_kept, r1)
                if b - a <= 1:
                    continue
                window = grid[trial_kept[a:b], c0:c1 + 1] == v
                if not _single_component(window):
                    ok = False
                    break
        if ok:
            for e in A:
                count[e] -= 1
            for e in B:
                count[e] -= 1
            for e in C:
                count[e] = count.get(e, 0) + 1
            del rows[i]
            del kept[i]
            pair[i - 1:i + 1] = [C]
        else:
            i += 1
    return np.stack(rows)


def _check(grid: np.ndarray, mesh: Mesh) -> None:
    mv, xv, me, xe = connectivity_diff(grid, mesh)
    if mv or xv or me or xe:
        raise ConnectivityError(
            "V-matrix is not connectivity-preserving: missing vertices %d, extra vertices %d, "
            "missing edges %s, extra edges %s" % (len(mv), len(xv), sorted(me)[:10], sorted(xe)[:10])
        )


def _assemble_matrix(mesh: Mesh, param: Parametrization, alpha):
    state = stratify(mesh, param, alpha=alpha)
    star = align_all_levels(state)
    widths = {len(r) for r in star}
    if len(widths) != 1:
        raise ConnectivityError("aligned rows differ in length: %s" % sorted(widths))
    grid = np.array(star, dtype=np.int64)
    _check(grid, mesh)
    return grid, state


def isomatrix_baseline(mesh: Mesh, param: Parametrization) -> tuple[VMatrix, StratifyState]:
    """V-matrix from the plain level sweep."""
    grid, state = _assemble_matrix(mesh, param, None)
    return VMatrix(grid), state


def isomatrix_modified(mesh: Mesh, param: Parametrization,
                       alpha: int = DEFAULT_ALPHA) -> tuple[VMatrix, StratifyState]:
    """Smaller V-matrix: high-degree regrouping plus row/column elimination."""
    if alpha < 2:
        raise ValueError("alpha must be at least 2")
    grid, state = _assemble_matrix(mesh, param, alpha)
    grid = _remove_rows(grid, mesh)
    grid = _remove_rows(grid.T, mesh).T
    _check(grid, mesh)
    return VMatrix(grid), state
