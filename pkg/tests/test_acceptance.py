"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run alone with ``pytest tests/test_acceptance.py -v``.  The corpus-wide
criteria share one cached build of every V-matrix.
"""

import functools
import time

import numpy as np
import pytest
from conftest import LETTERS, hub_mesh, level_fixture

from cgim.cli import main
from cgim.cluster import reconstruct_lossy
from cgim.codec import CgimArray, encode_cgim, error_bound, reconstruct_lossless
from cgim.corpus import gen_corpus, standard_corpus
from cgim.isomatrix import connectivity_diff, isomatrix_baseline, isomatrix_modified
from cgim.levels import build_candidate, components, edge_set_induced, irregular_pairs, \
    is_proper_sublevel
from cgim.mesh import Mesh
from cgim.metrics import hausdorff
from cgim.parametrize import initial_level, tutte_parametrize
from cgim.pipeline import rate_distortion

# sampled Hausdorff density used by criteria 2 and 8
SAMPLES_PER_FACE = 4


@functools.lru_cache(maxsize=None)
def corpus():
    """``(name, mesh, baseline, modified)`` for every standard corpus mesh."""
    out = []
    for name, m in standard_corpus():
        p = tutte_parametrize(m)
        out.append((name, m, isomatrix_baseline(m, p)[0], isomatrix_modified(m, p, 5)[0]))
    return out


def report(capsys, number, ok, detail):
    with capsys.disabled():
        print("\ncriterion %d: %s  %s" % (number, "PASS" if ok else "FAIL", detail))
    assert ok, detail


def brute_force_diff(grid, mesh):
    rows = np.asarray(grid).tolist()
    edges = set()
    for top, bot in zip(rows, rows[1:]):
        edges |= edge_set_induced(top, bot)
    verts = {v for r in rows for v in r}
    want = set(mesh.edge_keys)
    return len(verts ^ set(range(mesh.n_vertices))) + len(edges ^ want)


def first_appearance(grid):
    order = {}
    for v in np.asarray(grid).ravel().tolist():
        order.setdefault(v, len(order))
    return order


def mapped_edges(mesh, order):
    return {tuple(sorted((order[a], order[b]))) for a, b in mesh.edge_keys}


@pytest.mark.slow
def test_criterion_1_connectivity(capsys):
    t0 = time.perf_counter()
    bad = []
    for name, m, B, M in corpus():
        for label, V in (("baseline", B), ("modified", M)):
            if brute_force_diff(V.grid, m):
                bad.append("%s/%s" % (name, label))
    n = len(corpus())
    elapsed = time.perf_counter() - t0
    ok = not bad and n >= 40 and elapsed < 300
    report(capsys, 1, ok, "%d meshes x 2 variants, %d discrepant, %.0fs %s"
           % (n, len(bad), elapsed, bad[:5]))


@pytest.mark.slow
def test_criterion_2_error_bound(capsys):
    bad = []
    worst = 0.0
    for name, m, _, M in corpus():
        order = first_appearance(M.grid)
        perm = np.array(sorted(order, key=order.get))
        for b in (8, 16):
            A, H = encode_cgim(M, m, b)
            recon = reconstruct_lossless(A, H)
            bound = error_bound(H.coord_max - H.coord_min, b)
            if recon.n_vertices != m.n_vertices or set(recon.edge_keys) != mapped_edges(m, order):
                bad.append("%s/b%d connectivity" % (name, b))
                continue
            disp = np.linalg.norm(recon.vertices - m.vertices[perm], axis=1).max()
            hmax, _ = hausdorff(m, recon, samples_per_face=SAMPLES_PER_FACE)
            worst = max(worst, disp / bound, hmax / bound)
            if disp > bound or hmax > bound + 1e-9:
                bad.append("%s/b%d disp=%.3g haus=%.3g bound=%.3g" % (name, b, disp, hmax, bound))
    report(capsys, 2, not bad, "%d violations, worst ratio to bound %.3f %s"
           % (len(bad), worst, bad[:5]))


def test_criterion_3_walkthrough(capsys, walk_mesh, walk_corners):
    p = tutte_parametrize(walk_mesh, corners=walk_corners)
    name = lambda seq: "".join(LETTERS[v] for v in seq)  # noqa: E731
    L1 = initial_level(p)
    Q = build_candidate(walk_mesh, p.uv, L1, set(L1))
    comps = components(Q, walk_mesh)
    pairs = sorted((pr.i + 1, pr.j + 1) for pr in irregular_pairs(Q, walk_mesh))
    V, _ = isomatrix_baseline(walk_mesh, p)
    preserving = brute_force_diff(V.grid, walk_mesh) == 0
    printed = ["ABCDDDE", "AGCDJJE", "AGCDJLE", "FFHIIKK"]
    ix = {c: i for i, c in enumerate(LETTERS)}
    _, _, missing, extra = connectivity_diff([[ix[c] for c in r] for r in printed], walk_mesh)
    ok = (name(L1) == "ABCDE" and name(Q) == "FGFHIJK" and len(comps) == 1
          and pairs == [(1, 3), (5, 7)] and preserving)
    report(capsys, 3, ok, "L1=%s Q=%s pairs=%s preserving=%s; printed matrix differs by "
           "missing %s extra %s" % (name(L1), name(Q), pairs, preserving,
                                    sorted(name(e) for e in missing),
                                    sorted(name(e) for e in extra)))


def test_criterion_4_level_fixture(capsys):
    Q, m = level_fixture()
    pairs = {(pr.i + 1, pr.j + 1) for pr in irregular_pairs(Q, m)}
    verdicts = {tuple(s): is_proper_sublevel(Q, [k - 1 for k in s], m)
                for s in ([1, 2, 3, 6, 7, 9], [3, 4, 5, 6, 7, 9], [1, 2, 3, 4], [3, 4, 5, 6, 7, 8])}
    ok = (pairs == {(2, 4), (2, 5), (6, 8), (6, 10), (8, 10)}
          and list(verdicts.values()) == [True, True, False, False])
    report(capsys, 4, ok, "pairs=%s proper=%s" % (sorted(pairs), verdicts))


@pytest.mark.slow
def test_criterion_5_zero_noise_clusters(capsys):
    bad = []
    runs = 0
    for name, m, B, M in corpus():
        for label, V in (("baseline", B), ("modified", M)):
            for b in (8, 16):
                A, H = encode_cgim(V, m, b)
                lossy, exact = reconstruct_lossy(A, H), reconstruct_lossless(A, H)
                runs += 1
                if not (np.array_equal(lossy.vertices, exact.vertices)
                        and np.array_equal(lossy.faces, exact.faces)
                        and lossy.edge_keys == exact.edge_keys):
                    bad.append("%s/%s/b%d" % (name, label, b))
    report(capsys, 5, not bad, "%d runs, %d differ %s" % (runs, len(bad), bad[:5]))


def min_boundary_distance(grid, pixels):
    px = pixels.astype(float)
    d = []
    hor = grid[:, 1:] != grid[:, :-1]
    ver = grid[1:] != grid[:-1]
    if hor.any():
        d.append(np.linalg.norm(px[:, 1:] - px[:, :-1], axis=2)[hor].min())
    if ver.any():
        d.append(np.linalg.norm(px[1:] - px[:-1], axis=2)[ver].min())
    return min(d)


def plant_noise(A, radius, rng):
    """Per-pixel integer offsets of Euclidean norm strictly below ``radius``."""
    shape = A.pixels.shape
    direction = rng.normal(size=shape)
    direction /= np.linalg.norm(direction, axis=2, keepdims=True)
    # rounding adds at most sqrt(3)/2 < 1, so draw radii below radius - 1
    r = rng.uniform(0, radius - 1, shape[:2])[..., None]
    noise = np.rint(direction * r).astype(np.int64)
    assert np.linalg.norm(noise, axis=2).max() < radius
    out = np.clip(A.pixels.astype(np.int64) + noise, 0, (1 << A.b) - 1)
    return CgimArray(out, A.b)


def test_criterion_6_noise_robustness(capsys):
    rng = np.random.default_rng(2024)
    fixtures = [(k, s, seed) for k, s in (("fan", 40), ("grid", 12), ("delaunay-disk", 30),
                                          ("delaunay-disk", 300), ("bumpy-disk", 100))
                for seed in range(5)]
    bad = []
    tried = 0
    for kind, size, seed in fixtures:
        m = gen_corpus(kind, size, seed)
        p = tutte_parametrize(m)
        V = isomatrix_modified(m, p, 5)[0]
        A, H = encode_cgim(V, m, 16)
        dmin = min_boundary_distance(V.grid, A.pixels)
        # each pixel moves by less than dmin/4, so every pairwise distance
        # changes by less than dmin/2
        radius = dmin / 4
        if radius <= 1:
            continue
        tried += 1
        noisy = plant_noise(A, radius, rng)
        recon = reconstruct_lossy(noisy, H)
        order = first_appearance(V.grid)
        if recon.n_vertices != m.n_vertices or set(recon.edge_keys) != mapped_edges(m, order):
            bad.append("%s-%d-s%d" % (kind, size, seed))
    report(capsys, 6, tried >= 20 and not bad, "%d fixtures, %d failures %s"
           % (tried, len(bad), bad))


@pytest.mark.slow
def test_criterion_7_modified_resolution(capsys):
    rows = corpus()
    smaller = sum(M.r1 * M.r2 <= B.r1 * B.r2 for _, _, B, M in rows)
    share = smaller / len(rows)
    hub = hub_mesh(12, 3)
    p = tutte_parametrize(hub)
    Bh, Mh = isomatrix_baseline(hub, p)[0], isomatrix_modified(hub, p, 5)[0]
    ok = share >= 0.9 and Mh.r2 < Bh.r2
    report(capsys, 7, ok, "modified <= baseline on %d/%d (%.0f%%); hub r2 %d -> %d"
           % (smaller, len(rows), 100 * share, Bh.r2, Mh.r2))


def test_criterion_8_rate_distortion(capsys):
    t0 = time.perf_counter()
    sweep = ["quantize:6", "quantize:4", "quantize:2", "quantize:0"]
    notes, ok = [], True
    for kind, size, seed in (("delaunay-disk", 1000, 0), ("bumpy-disk", 100, 1), ("grid", 30, 2)):
        rows = rate_distortion(gen_corpus(kind, size, seed), sweep,
                               samples_per_face=SAMPLES_PER_FACE)
        psnr = [r["psnrDb"] for r in rows]
        size_ = [r["fileBytes"] for r in rows]
        inversions = sum(b < a for a, b in zip(psnr, psnr[1:]))
        good = inversions <= 1 and all(b >= a for a, b in zip(size_, size_[1:]))
        ok &= good
        notes.append("%s-%d psnr=%s bytes=%s" % (kind, size, [round(x, 1) for x in psnr], size_))
    elapsed = time.perf_counter() - t0
    ok &= elapsed < 120
    report(capsys, 8, ok, "%.0fs; %s" % (elapsed, "; ".join(notes)))


def test_criterion_9_determinism(capsys, tmp_path):
    from cgim.mesh import save_mesh

    src = tmp_path / "in.obj"
    save_mesh(gen_corpus("bumpy-disk", 300, 4), src)
    outputs = []
    for run in ("a", "b"):
        d = tmp_path / run
        gen = d / "gen.obj"
        cmds = [
            ["gen-corpus", "--kind", "delaunay-disk", "--size", "200", "--seed", "7", "-o", gen],
            ["encode", "-i", src, "-o", d / "c"],
            ["decode", "-i", d / "c", "-o", d / "exact.obj"],
            ["compress", "-i", d / "c", "-o", d / "q", "--codec", "quantize:3"],
            ["decode", "-i", d / "q", "-o", d / "lossy.obj", "--lossy"],
            ["evaluate", "-i", src, "-o", d / "rd.csv", "--samples-per-face", "2"],
        ]
        for argv in cmds:
            assert main([str(a) for a in argv]) == 0
        capsys.readouterr()
        files = [gen, d / "c" / "pixels.ppm", d / "c" / "header.json", d / "exact.obj",
                 d / "q" / "pixels.ppm", d / "lossy.obj", d / "rd.csv"]
        outputs.append([f.read_bytes() for f in files])
    same = [x == y for x, y in zip(*outputs)]
    report(capsys, 9, all(same), "%d/%d artifacts byte-identical" % (sum(same), len(same)))
