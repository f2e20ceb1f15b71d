"""Combinatorial primitives on levels: ordered vertex tuples, repeats allowed.

Indices are 0-based throughout. A level is a plain list of vertex ids.
"""

from __future__ import annotations

import math
from collections import Counter
from itertools import groupby
from typing import NamedTuple, Sequence

import numpy as np

from .mesh import Mesh


class Component(NamedTuple):
    """Maximal run ``Q[start:stop]`` of consecutively adjacent elements."""

    start: int
    stop: int
    elements: tuple


class IrregularPair(NamedTuple):
    i: int
    j: int
    kind: str  # "equal" (q_i == q_j) or "adjacent" (q_i ~ q_j)


def dedup_runs(level: Sequence[int]) -> list[int]:
    """Collapse adjacent repeats: ``[a, a, b, a] -> [a, b, a]``."""
    out: list[int] = []
    for v in level:
        if not out or out[-1] != v:
            out.append(v)
    return out


def edge_set_induced(top: Sequence[int], bottom: Sequence[int]) -> set[tuple[int, int]]:
    """Unordered edges of the strip between two equal-length levels.

    Horizontal pairs of both levels, vertical pairs and the slash
    ``top[j + 1]``-``bottom[j]``; pairs with equal ends are dropped.
    """
    if len(top) != len(bottom):
        raise ValueError("levels differ in length: %d != %d" % (len(top), len(bottom)))
    out = set()
    n = len(top)
    for j in range(n):
        pairs = [(top[j], bottom[j])]
        if j + 1 < n:
            pairs += [(top[j], top[j + 1]), (bottom[j], bottom[j + 1]), (top[j + 1], bottom[j])]
        for a, b in pairs:
            if a != b:
                out.add((a, b) if a < b else (b, a))
    return out


def matrix_edge_keys(grid: np.ndarray, n: int) -> np.ndarray:
    """Sorted unique keys ``a * n + b`` (``a < b``) of a V-matrix's induced edges."""
    grid = np.asarray(grid, dtype=np.int64)
    if grid.shape[0] < 2:
        return np.zeros(0, dtype=np.int64)
    a = np.concatenate([grid[:, :-1].ravel(), grid[:-1, :].ravel(), grid[:-1, 1:].ravel()])
    b = np.concatenate([grid[:, 1:].ravel(), grid[1:, :].ravel(), grid[1:, :-1].ravel()])
    keep = a != b
    a, b = a[keep], b[keep]
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    return np.unique(lo * n + hi)


def components(Q: Sequence[int], mesh: Mesh) -> list[Component]:
    """Split ``Q`` into maximal runs whose neighbors are mesh-adjacent."""
    out = []
    start = 0
    for k in range(1, len(Q) + 1):
        if k == len(Q) or not mesh.adjacent(Q[k - 1], Q[k]):
            out.append(Component(start, k, tuple(Q[start:k])))
            start = k
    return out


def _flank(Q: Sequence[int], i: int) -> set:
    # neighbors that fall off either end of Q are simply absent
    return {Q[k] for k in (i - 1, i + 1) if 0 <= k < len(Q)}


def irregular_pairs(Qc: Sequence[int], mesh: Mesh) -> list[IrregularPair]:
    """All ``(i, j)``, ``i <= j - 2``, with ``Qc[i] == Qc[j]`` or a stray adjacency.

    The adjacency case excludes pairs where either end equals an element
    next to the other; at the ends of ``Qc`` only the inner neighbor counts.
    """
    n = len(Qc)
    out = []
    for i in range(n - 2):
        for j in range(i + 2, n):
            a, b = Qc[i], Qc[j]
            if a == b:
                out.append(IrregularPair(i, j, "equal"))
            elif mesh.adjacent(a, b) and a not in _flank(Qc, j) and b not in _flank(Qc, i):
                out.append(IrregularPair(i, j, "adjacent"))
    return out


def _pair_ends(Qc: Sequence[int], pairs: Sequence[IrregularPair]):
    equal_ends = set()
    adjacent = []
    for p in pairs:
        if p.kind == "equal":
            equal_ends.add(Qc[p.i])
        else:
            adjacent.append((Qc[p.i], Qc[p.j]))
    return equal_ends, adjacent


def is_proper_sublevel(Qc: Sequence[int], indices: Sequence[int], mesh: Mesh,
                       pairs: Sequence[IrregularPair] | None = None) -> bool:
    """Properness of the sublevel ``[Qc[k] for k in indices]``.

    No component of the sublevel may hold an end vertex of an ``equal``
    pair, nor both end vertices of one ``adjacent`` pair.
    """
    if list(indices) != sorted(set(indices)):
        return False
    if pairs is None:
        pairs = irregular_pairs(Qc, mesh)
    equal_ends, adjacent = _pair_ends(Qc, pairs)
    sub = [Qc[k] for k in indices]
    for comp in components(sub, mesh):
        members = set(comp.elements)
        if members & equal_ends:
            return False
        for a, b in adjacent:
            if a in members and b in members:
                return False
    return True


def proper_sublevel(Qc: Sequence[int], mesh: Mesh,
                    pairs: Sequence[IrregularPair] | None = None) -> list[int]:
    """Greedy left-to-right proper sublevel of a component.

    An element is kept unless adding it would break properness of the
    component it lands in. Returns the kept elements (possibly empty when
    every element is a repeated vertex).
    """
    if pairs is None:
        pairs = irregular_pairs(Qc, mesh)
    equal_ends, adjacent = _pair_ends(Qc, pairs)
    partners: dict[int, set] = {}
    for a, b in adjacent:
        partners.setdefault(a, set()).add(b)
        partners.setdefault(b, set()).add(a)
    kept: list[int] = []
    current: set = set()
    for q in Qc:
        if q in equal_ends:
            continue
        joins = bool(kept) and mesh.adjacent(kept[-1], q)
        group = current if joins else set()
        if partners.get(q, set()) & group:
            continue
        kept.append(q)
        current = group | {q}
    return kept


def _angle_from(ref: np.ndarray, vec: np.ndarray) -> float:
    a = math.atan2(vec[1], vec[0]) - math.atan2(ref[1], ref[0])
    a %= 2.0 * math.pi
    return a


def order_neighbors(mesh: Mesh, uv: np.ndarray, L_prev: Sequence[int], j: int,
                    visited) -> list[int]:
    """Unvisited neighbors of ``L_prev[j]`` sorted counterclockwise.

    Angles are measured from the direction towards ``L_prev[j - 1]``; for
    ``j == 0`` the reference direction is the position vector of the vertex
    itself.
    """
    v = L_prev[j]
    cand = [q for q in mesh.adjacency[v] if q not in visited]
    if not cand:
        return []
    ref = uv[v] if j == 0 else uv[L_prev[j - 1]] - uv[v]
    if not np.any(ref):
        ref = np.array([0.0, 1.0])
    keyed = sorted((_angle_from(ref, uv[q] - uv[v]), q) for q in cand)
    return [q for _, q in keyed]


def build_candidate(mesh: Mesh, uv: np.ndarray, L_prev: Sequence[int], visited) -> list[int]:
    """Concatenate the ordered neighbor sets and collapse adjacent repeats."""
    Q: list[int] = []
    for j in range(len(L_prev)):
        Q.extend(order_neighbors(mesh, uv, L_prev, j, visited))
    return dedup_runs(Q)


def align1(L1: Sequence[int], L2: Sequence[int], mesh: Mesh) -> tuple[list[int], list[int]]:
    """Replicate elements so the slash-direction strip between two levels closes.

    ``L1[0]`` repeats once per neighbor in ``L2`` and later elements once
    fewer; symmetrically for ``L2`` with its last element taking the full
    count. Every element appears at least once.
    """
    if not L1 or not L2:
        raise ValueError("align1 needs nonempty levels")
    s1, s2 = set(L1), set(L2)
    out1: list[int] = []
    for i, v in enumerate(L1):
        d = len(mesh.adjacency[v] & s2) - (0 if i == 0 else 1)
        out1.extend([v] * max(1, d))
    out2: list[int] = []
    last = len(L2) - 1
    for i, w in enumerate(L2):
        d = len(mesh.adjacency[w] & s1) - (0 if i == last else 1)
        out2.extend([w] * max(1, d))
    if len(out1) != len(out2):
        raise ValueError("align1 output lengths differ: %d != %d" % (len(out1), len(out2)))
    return out1, out2


def _distinct_in_order(seq: Sequence[int]) -> list[int]:
    seen = set()
    out = []
    for v in seq:
        if v not in seen:
            seen.add(v)
            out.append(v)
    return out


def _align2_slow(L1, L2: list, L3: list) -> tuple[list[int], list[int]]:
    for v in _distinct_in_order(L1):
        d = L1.count(v) - L2.count(v)
        if d < 1:
            continue
        where = [k for k, x in enumerate(L2) if x == v]
        if not where:
            raise ValueError("vertex %d missing from the level it must be aligned in" % v)
        a1, a2 = where[0], where[-1]
        ws = _distinct_in_order(L3[a1:a2 + 1])
        L2[a2 + 1:a2 + 1] = [v] * d
        j = 0
        while d >= 1:
            w = ws[j]
            pos = a1 + max(k for k, x in enumerate(L3[a1:a2 + 1]) if x == w)
            L3.insert(pos + 1, w)
            a2 += 1
            d -= 1
            j = (j + 1) % len(ws)
    return L2, L3


def align2(L1: Sequence[int], L2: Sequence[int], L3: Sequence[int]) -> tuple[list[int], list[int]]:
    """Raise multiplicities in ``L2`` to those of ``L1``, balancing ``L3``.

    For each distinct ``v`` of ``L1`` with surplus ``d`` over ``L2``, ``d``
    copies of ``v`` join its run in ``L2`` and ``d`` elements are added to
    ``L3``, cycling through the distinct elements of ``L3`` under that run,
    each next to its own run.
    """
    L2 = list(L2)
    L3 = list(L3)
    need = Counter(L1)
    have = Counter(L2)
    for v in need:
        if need[v] > have[v] and not have[v]:
            raise ValueError("vertex %d missing from the level it must be aligned in" % v)
    runs = [(v, len(list(g))) for v, g in groupby(L2)]
    if len(runs) != len(have):
        # some vertex occupies several runs; take the general route
        return _align2_slow(L1, L2, L3)
    out2: list[int] = []
    out3: list[int] = []
    at = 0
    for v, n in runs:
        seg = L3[at:at + n]
        at += n
        d = need[v] - n
        if d < 1:
            out2.extend([v] * n)
            out3.extend(seg)
            continue
        out2.extend([v] * (n + d))
        ws = _distinct_in_order(seg)
        q, r = divmod(d, len(ws))
        extra = {w: q + (1 if k < r else 0) for k, w in enumerate(ws)}
        last = {w: k for k, w in enumerate(seg)}
        for k, w in enumerate(seg):
            out3.append(w)
            if last[w] == k:
                out3.extend([w] * extra[w])
    out3.extend(L3[at:])
    return out2, out3
