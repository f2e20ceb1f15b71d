import itertools
import math

import numpy as np
import pytest
from conftest import LETTERS, level_fixture

from cgim.levels import (
    _align2_slow,
    align1,
    align2,
    build_candidate,
    components,
    dedup_runs,
    edge_set_induced,
    irregular_pairs,
    is_proper_sublevel,
    matrix_edge_keys,
    order_neighbors,
    proper_sublevel,
)
from cgim.mesh import Mesh
from cgim.parametrize import initial_level, tutte_parametrize


def graph(n, edges):
    return Mesh(np.zeros((n, 3)), np.zeros((0, 3)), extra_edges=edges)


def chain(n, extra=()):
    return graph(n + 1, [(i, i + 1) for i in range(1, n)] + list(extra))


# ------------------------------------------------------------ induced edges

def test_induced_strip_with_repeat():
    a, b, c = 0, 1, 2
    assert edge_set_induced([a, b], [c, c]) == {(0, 1), (0, 2), (1, 2)}


def test_induced_all_degenerate():
    assert edge_set_induced([4, 4], [4, 4]) == set()


def test_induced_matches_brute_force():
    rng = np.random.default_rng(7)
    for _ in range(200):
        top = rng.integers(0, 6, 5).tolist()
        bot = rng.integers(0, 6, 5).tolist()
        want = set()
        for j in range(5):
            cand = [(top[j], bot[j])]
            if j < 4:
                cand += [(top[j], top[j + 1]), (bot[j], bot[j + 1]), (top[j + 1], bot[j])]
            want |= {tuple(sorted(p)) for p in cand if p[0] != p[1]}
        assert edge_set_induced(top, bot) == want
        keys = matrix_edge_keys(np.array([top, bot]), 6)
        assert {divmod(int(k), 6) for k in keys} == want


def test_induced_length_mismatch():
    with pytest.raises(ValueError):
        edge_set_induced([1, 2], [3])


# ------------------------------------------------------------ components

def test_components_split_on_missing_adjacency():
    m = graph(4, [(0, 1), (2, 3)])
    comps = components([0, 1, 2, 3], m)
    assert [c.elements for c in comps] == [(0, 1), (2, 3)]
    assert [(c.start, c.stop) for c in comps] == [(0, 2), (2, 4)]


def test_components_chain_is_one():
    m = chain(6)
    assert [c.elements for c in components([1, 2, 3, 4, 5, 6], m)] == [(1, 2, 3, 4, 5, 6)]


def test_components_two_singletons(walk_mesh):
    G, J = LETTERS.index("G"), LETTERS.index("J")
    assert [c.elements for c in components([G, J], walk_mesh)] == [(G,), (J,)]


# ------------------------------------------------------------ irregular pairs

CAPTION_PAIRS = {(2, 4), (2, 5), (6, 8), (6, 10), (8, 10)}


def one_based(pairs):
    return {(p.i + 1, p.j + 1) for p in pairs}


def test_level_fixture_shared_vertex_pairs():
    Q, m = level_fixture()
    pairs = irregular_pairs(Q, m)
    assert one_based(pairs) == CAPTION_PAIRS
    assert {(p.i + 1, p.j + 1) for p in pairs if p.kind == "equal"} == {(8, 10)}


def test_level_fixture_distinct_vertex_pairs():
    # the same pairs, with eleven distinct vertices and explicit stray edges
    Q = list(range(1, 12))
    m = chain(11, [(2, 4), (2, 5), (6, 8), (6, 10), (8, 10)])
    assert one_based(irregular_pairs(Q, m)) == CAPTION_PAIRS


def test_pure_chain_has_no_pairs():
    assert irregular_pairs(list(range(1, 9)), chain(8)) == []


def test_repeated_vertex_found_by_brute_force():
    rng = np.random.default_rng(3)
    for _ in range(50):
        n = 7
        Q = rng.integers(0, 5, n).tolist()
        Q = dedup_runs(Q)
        m = graph(5, [])
        want = {(i, j) for i in range(len(Q)) for j in range(i + 2, len(Q)) if Q[i] == Q[j]}
        assert {(p.i, p.j) for p in irregular_pairs(Q, m)} == want


def test_end_neighbor_reading():
    # q1 ~ q4 with q1 at the left end: only q2 flanks q1
    m = chain(4, [(1, 4)])
    assert one_based(irregular_pairs([1, 2, 3, 4], m)) == {(1, 4)}
    # q4 repeats q2, which sits right next to q1, so (1, 4) is not stray
    m = chain(3)
    assert one_based(irregular_pairs([1, 2, 3, 2], m)) == {(2, 4)}


# ------------------------------------------------------------ properness

@pytest.mark.parametrize("sub, ok", [
    ([1, 2, 3, 6, 7, 9], True),
    ([3, 4, 5, 6, 7, 9], True),
    ([1, 2, 3, 4], False),
    ([3, 4, 5, 6, 7, 8], False),
])
def test_level_fixture_properness(sub, ok):
    Q, m = level_fixture()
    assert is_proper_sublevel(Q, [k - 1 for k in sub], m) is ok
    Q2 = list(range(1, 12))
    m2 = chain(11, [(2, 4), (2, 5), (6, 8), (6, 10), (8, 10)])
    assert is_proper_sublevel(Q2, [k - 1 for k in sub], m2) is ok


def test_proper_sublevel_without_pairs_is_identity():
    Q = [1, 2, 3, 4, 5]
    assert proper_sublevel(Q, chain(5)) == Q


def test_proper_sublevel_is_proper():
    Q, m = level_fixture()
    sub = proper_sublevel(Q, m)
    idx, k = [], 0
    for v in sub:
        while Q[k] != v:
            k += 1
        idx.append(k)
        k += 1
    assert is_proper_sublevel(Q, idx, m)
    assert 8 not in sub


def test_unsorted_indices_are_not_a_sublevel():
    Q, m = level_fixture()
    assert not is_proper_sublevel(Q, [2, 1], m)


# ------------------------------------------------------------ ordering

def _walk_param(mesh, corners):
    return tutte_parametrize(mesh, corners=corners)


def test_candidate_level(walk_mesh, walk_corners):
    p = _walk_param(walk_mesh, walk_corners)
    L1 = initial_level(p)
    assert "".join(LETTERS[v] for v in L1) == "ABCDE"
    Q = build_candidate(walk_mesh, p.uv, L1, set(L1))
    assert "".join(LETTERS[v] for v in Q) == "FGFHIJK"
    per = ["".join(LETTERS[v] for v in order_neighbors(walk_mesh, p.uv, L1, j, set(L1)))
           for j in range(5)]
    assert per == ["FG", "G", "GFH", "HIJ", "JK"]


def test_order_neighbors_matches_atan2(walk_mesh, walk_corners):
    p = _walk_param(walk_mesh, walk_corners)
    L1 = initial_level(p)
    for j in range(1, len(L1)):
        v = L1[j]
        ref = p.uv[L1[j - 1]] - p.uv[v]
        cand = [q for q in walk_mesh.adjacency[v] if q not in set(L1)]
        ang = {q: (math.atan2(*(p.uv[q] - p.uv[v])[::-1]) - math.atan2(ref[1], ref[0])) % (2 * math.pi)
               for q in cand}
        assert order_neighbors(walk_mesh, p.uv, L1, j, set(L1)) == sorted(cand, key=ang.get)
        assert len(set(ang.values())) == len(ang)


def test_order_neighbors_all_visited(walk_mesh, walk_corners):
    p = _walk_param(walk_mesh, walk_corners)
    everything = set(range(walk_mesh.n_vertices))
    assert order_neighbors(walk_mesh, p.uv, [0, 1], 1, everything) == []
    assert build_candidate(walk_mesh, p.uv, [0, 1], everything) == []


def test_dedup_runs_oracle():
    rng = np.random.default_rng(11)
    for _ in range(100):
        seq = rng.integers(0, 4, 12).tolist()
        want = [k for k, _ in itertools.groupby(seq)]
        assert dedup_runs(seq) == want


# ------------------------------------------------------------ align1

def test_align1_single():
    m = graph(2, [(0, 1)])
    assert align1([0], [1], m) == ([0], [1])


def test_align1_two_by_three():
    v1, v2, w1, w2, w3 = range(5)
    m = graph(5, [(v1, w1), (v1, w2), (v2, w2), (v2, w3), (v1, v2), (w1, w2), (w2, w3)])
    assert align1([v1, v2], [w1, w2, w3], m) == ([v1, v1, v2], [w1, w2, w3])


def test_align1_fan_into_one():
    A, B, C, G = range(4)
    m = graph(4, [(A, G), (B, G), (C, G), (A, B), (B, C)])
    assert align1([A, B, C], [G], m) == ([A, B, C], [G, G, G])


def test_align1_strip_preserves_edges():
    A, B, C, G = range(4)
    m = graph(4, [(A, G), (B, G), (C, G), (A, B), (B, C)])
    top, bot = align1([A, B, C], [G], m)
    assert edge_set_induced(top, bot) == m.edge_keys


# ------------------------------------------------------------ align2

def test_align2_no_surplus():
    L1, L2, L3 = [1, 2, 3], [1, 2, 2, 3], [5, 6, 7, 8]
    assert align2(L1, L2, L3) == (L2, L3)


def test_align2_cycles_balancing_elements():
    v, w1, w2 = 1, 5, 6
    assert align2([v] * 4, [v, v], [w1, w2]) == ([v] * 4, [w1, w1, w2, w2])
    assert align2([v] * 5, [v, v], [w1, w2]) == ([v] * 5, [w1, w1, w1, w2, w2])


def test_align2_equal_multisets_unchanged():
    L = [3, 3, 4, 5, 5]
    assert align2(list(L), list(L), [7, 8, 8, 9, 9]) == (L, [7, 8, 8, 9, 9])


def test_align2_missing_vertex():
    with pytest.raises(ValueError):
        align2([1, 2], [1, 1], [4, 4])


def test_align2_fast_matches_slow():
    rng = np.random.default_rng(5)
    for _ in range(300):
        runs = rng.integers(1, 4, 5)
        L2 = [v for v, n in enumerate(runs.tolist()) for _ in range(n)]
        L3 = dedup_runs(rng.integers(10, 16, len(L2) * 2).tolist())[:len(L2)]
        L3 += [20] * (len(L2) - len(L3))
        need = runs + rng.integers(0, 3, 5)
        L1 = [v for v, n in enumerate(need.tolist()) for _ in range(n)]
        assert align2(L1, L2, L3) == _align2_slow(L1, list(L2), list(L3))
