"""Top-level acceptance checks, one per shipped guarantee.

Each test prints exactly one ``criterion N: pass`` or ``criterion N: FAIL``
line so a log scrape can tally the whole contract at a glance.  The heavy
decay experiment (criterion 6) shells out to the command line so its working
set is returned to the OS when the child exits.
"""
from __future__ import annotations

import json
import subprocess
import sys
import time

import numpy as np

import _oracle
from _zoo import tiny_zoo
from swalk import classify as cl
from swalk import complexes as cx
from swalk import homology as hm
from swalk import measure as ms
from swalk import walk as wk


def _verdict(n: int, ok: bool) -> bool:
    print(f"criterion {n}: {'pass' if ok else 'FAIL'}")
    return ok


# -- 1: unitarity ---------------------------------------------------------------

def test_criterion_1_unitarity():
    t_start = time.monotonic()
    cases = [
        (cx.build_two_triangles(), "uniform"),
        (cx.build_grid_patch(4), "p13"),
        (cx.build_cylinder_with_tetrahedron(5, 8), "grover"),
    ]
    worst_pair = 0.0
    worst_coin = 0.0
    worst_face = 0.0
    for K, scheme in cases:
        if scheme == "uniform":
            w = wk.weight_uniform(K)
        elif scheme == "p13":
            w = wk.weight_lower_upper(K, 1.0 / 3.0)
        else:
            w = wk.weight_grover(K)
        op = wk.build_U(K, w)
        B = K.n_basis
        rng = np.random.default_rng(20_186)
        for _ in range(100):
            f = _oracle.random_unit_state(rng, B)
            g = _oracle.random_unit_state(rng, B)
            lhs = np.vdot(op.apply(f), op.apply(g))
            rhs = np.vdot(f, g)
            worst_pair = max(worst_pair, abs(lhs - rhs))
        C = wk.coin_operator(K, w).toarray()
        worst_coin = max(worst_coin, np.abs(C @ C - np.eye(B)).max())
        d0 = wk.face_operator(K, w, 0).toarray()
        gram = d0 @ d0.conj().T
        worst_face = max(worst_face, np.abs(gram - np.eye(gram.shape[0])).max())
    elapsed = time.monotonic() - t_start
    ok = worst_pair <= 1e-12 and worst_coin <= 1e-12 and worst_face <= 1e-12 and elapsed < 10.0
    assert _verdict(1, ok), (worst_pair, worst_coin, worst_face, elapsed)


# -- 2: dense-oracle equivalence --------------------------------------------------

def test_criterion_2_dense_equivalence():
    t_start = time.monotonic()
    worst = 0.0
    checked = 0
    for name, K in tiny_zoo():
        assert K.n_basis <= 60, name
        weights = [wk.weight_grover(K), wk.weight_random(K, seed=11)]
        if K.max_coface_degree <= 2:
            weights.append(wk.weight_uniform(K))
        if K.labels is not None and set(K.labels[:, 2].tolist()) == {0, 1}:
            weights.append(wk.weight_lower_upper(K, 1.0 / 3.0))
        for word in _oracle.WORDS:
            perm = wk.PermutationSpec.from_word(word)
            for w in weights:
                dense = _oracle.dense_walk_matrix(K.tri_vertices, w.values, word)
                sparse = wk.build_U(K, w, perm).matrix.toarray()
                worst = max(worst, np.abs(sparse - dense).max())
                checked += 1
    elapsed = time.monotonic() - t_start
    ok = worst <= 1e-14 and checked >= 8 * 6 * 2 and elapsed < 5.0
    assert _verdict(2, ok), (worst, checked, elapsed)


# -- 3: non-interactive walks ------------------------------------------------------

def test_criterion_3_noninteractive():
    ok = True
    for K in (cx.build_grid_patch(12), cx.build_cylinder(6, 12)):
        op = wk.build_U(K, wk.weight_uniform(K))
        m = op.matrix
        one_per_row = bool((np.diff(m.indptr) == 1).all())
        one_per_col = bool(
            (np.bincount(m.indices, minlength=K.n_basis) == 1).all()
        )
        ok = ok and cl.is_noninteractive(op) and one_per_row and one_per_col
        ok = ok and m.nnz == K.n_basis
    assert _verdict(3, ok)


# -- 4: probability conservation ----------------------------------------------------

def test_criterion_4_norm_conservation():
    K = cx.build_cylinder(10, 2000)
    op = wk.build_U(K, wk.weight_lower_upper(K, 1.0 / 3.0))
    f0 = wk.initial_state_symmetric(K, K.triangle_of_label(5, 1000, 0))
    worst = 0.0

    def cb(m: int, f: np.ndarray) -> None:
        nonlocal worst
        total = float(np.vdot(f, f).real)
        worst = max(worst, abs(total - 1.0))

    wk.evolve(op, f0, 2000, callback=cb)
    assert _verdict(4, worst <= 1e-9), worst


# -- 5: spreading rates ---------------------------------------------------------------

def test_criterion_5_spreading_rates():
    runs = []

    K = cx.build_grid_patch(506)
    op = wk.build_U(K, wk.weight_lower_upper(K, 1.0 / 3.0))
    f0 = wk.initial_state_symmetric(K, K.triangle_of_label(253, 253, 0))
    runs.append((op, f0, 0.01671))

    K = cx.build_cylinder(10, 1010)
    t0 = K.triangle_of_label(5, 505, 0)
    runs.append((wk.build_U(K, wk.weight_uniform(K)), wk.initial_state_symmetric(K, t0), 0.05545))
    runs.append(
        (wk.build_U(K, wk.weight_lower_upper(K, 1.0 / 3.0)), wk.initial_state_symmetric(K, t0), 0.02941)
    )

    measured = []
    ok = True
    for op, f0, target in runs:
        rows = ms.radial_variance(op, f0, 500, mode="standard", record_at=[500])
        rate = rows[0, 2]
        measured.append(rate)
        ok = ok and abs(rate - target) <= 0.15 * target
    assert _verdict(5, ok), measured


# -- 6: localization dichotomy ----------------------------------------------------------

def _timeavg_ratio(K, w, start_label, targets):
    op = wk.build_U(K, w)
    f0 = wk.initial_state_symmetric(K, K.triangle_of_label(*start_label))
    tris = [K.triangle_of_label(*lab) for lab in targets]
    out = ms.time_averaged_probability(op, f0, 2000, tris, record_at=[500, 2000])
    return out[500], out[2000]


def _grid_decay_ratio(tmp_path) -> float:
    """2000-step grid decay in a child process; the big operator dies with it."""
    out_dir = tmp_path / "grid_decay"
    proc = subprocess.run(
        [
            sys.executable, "-m", "swalk", "run",
            "--complex", "grid", "--N", "2006",
            "--weight", "lower_upper", "--p", "0.3333333333333333",
            "--initial", "symmetric",
            "--steps", "2000", "--snapshots", "500",
            "--observables", "timeavg",
            "--out-dir", str(out_dir),
        ],
        capture_output=True,
        text=True,
        timeout=1800,
    )
    assert proc.returncode == 0, proc.stderr
    avg = {}
    for line in (out_dir / "timeavg.csv").read_text().splitlines()[1:]:
        T, label, v = line.split(",")
        if label == "1003:1003:0":
            avg[int(T)] = float(v)
    return avg[2000] / avg[500]


def test_criterion_6_localization(tmp_path):
    # (a) the walk that localizes: start-cell average stays positive
    K = cx.build_cylinder(10, 2000)
    a500, a2000 = _timeavg_ratio(K, wk.weight_uniform(K), (5, 1000, 0), [(5, 1000, 0)])
    ok_a = a2000[0] >= 1e-3 and a2000[0] / a500[0] >= 0.8

    # (b) the walks that spread: start-cell average decays
    K = cx.build_moebius(10, 2000)
    b500, b2000 = _timeavg_ratio(K, wk.weight_moebius(K), (5, 1000, 0), [(5, 1000, 0)])
    ratio_moebius = b2000[0] / b500[0]
    ratio_grid = _grid_decay_ratio(tmp_path)
    ok_b = ratio_moebius <= 0.6 and ratio_grid <= 0.6

    # (c) trapping at an attached cell, passage elsewhere
    K = cx.build_cylinder_with_tetrahedron(10, 2000)
    c500, c2000 = _timeavg_ratio(
        K, wk.weight_grover(K), (5, 1000, 0), [(5, 1000, 0), (0, 1000, 0)]
    )
    ok_c = c2000[0] >= 1e-3 and (c2000[1] / c500[1]) <= 0.6

    ok = ok_a and ok_b and ok_c
    assert _verdict(6, ok), {
        "start_avg": (a500[0], a2000[0]),
        "moebius_ratio": ratio_moebius,
        "grid_ratio": ratio_grid,
        "on_cell": c2000[0],
        "off_ratio": c2000[1] / c500[1],
    }


# -- 7: topology -----------------------------------------------------------------------

def test_criterion_7_topology():
    t_start = time.monotonic()
    builds = [
        (cx.build_grid_patch(20), (1, 0, 0), True),
        (cx.build_cylinder(20, 20), (1, 1, 0), True),
        (cx.build_cylinder_with_tetrahedron(20, 20), (1, 1, 1), None),
        (cx.build_moebius(20, 20), (1, 1, 0), False),
    ]
    ok = True
    for K, expected, orient in builds:
        b = hm.betti_numbers(K)
        ok = ok and (b.b0, b.b1, b.b2) == expected
        d1 = hm.boundary_matrix(K, 1)
        d2 = hm.boundary_matrix(K, 2)
        ok = ok and (d1 @ d2).count_nonzero() == 0
        chi = hm.euler_characteristic(K)
        ok = ok and chi == b.b0 - b.b1 + b.b2
        if orient is not None:
            ok = ok and cx.check_orientability(K).orientable is orient
    elapsed = time.monotonic() - t_start
    ok = ok and elapsed < 30.0
    assert _verdict(7, ok), elapsed


# -- 8: classifier fidelity ---------------------------------------------------------------

def test_criterion_8_classifier():
    K = cx.build_tether_example()
    perm = wk.PermutationSpec.from_word("acb")
    struct = cl.tethered_check(K, perm, sigma0=0)
    ok = struct.verdict == "tethered" and bool(struct.anchors) and struct.anchors <= {1, 2}

    reached_tris = set(np.flatnonzero(struct.reached.reshape(-1, 6).any(axis=1)).tolist())
    for seed in range(10):
        op = wk.build_U(K, wk.weight_random(K, seed=seed), perm=perm)
        trace = cl.numeric_tether_probe(op, sigma0=0, m_max=12)
        seen = set()
        for sup in trace:
            seen.update((sup // 6).tolist())
        ok = ok and seen <= reached_tris
        ok = ok and all(
            v in K.tri_vertices[t] for t in seen for v in struct.anchors
        )

    Kg = cx.build_grid_patch(6)
    t0 = Kg.triangle_of_label(3, 3, 0)
    res = cl.tethered_check(Kg, wk.PermutationSpec.cyclic(), sigma0=6 * t0)
    ok = ok and res.verdict == "movable"
    assert _verdict(8, ok)


# -- 9: wavefront geometry -----------------------------------------------------------------

def test_criterion_9_wavefront_geometry():
    N = 126
    i0 = j0 = N // 2
    K = cx.build_grid_patch(N)
    op = wk.build_U(K, wk.weight_lower_upper(K, 1.0 / 3.0))
    t0 = K.triangle_of_label(i0, j0, 0)
    labels = K.labels

    def run120(f0: np.ndarray) -> np.ndarray:
        f = f0
        for _ in range(120):
            f = op.apply(f)
        return f

    # (a) symmetric start: the measured support maps onto itself under the
    # 120-degree label rotation about the start cell
    mu = ms.finding_probability(K, run120(wk.initial_state_symmetric(K, t0)), check_norm=False)
    sup = {tuple(map(int, labels[t])) for t in np.flatnonzero(mu > 1e-12)}

    def rot(lab: tuple[int, int, int]) -> tuple[int, int, int]:
        i, j, k = lab
        if k == 0:
            return (2 * i0 + j0 - i - j, i - i0 + j0, 0)
        return (2 * i0 + j0 - i - j - 1, i - i0 + j0, 1)

    once = {rot(lab) for lab in sup}
    twice = {rot(lab) for lab in once}
    ok_a = once == sup and twice == sup and len(sup) > 1000

    # (b) one-orientation start: support fits the triangle spanned by one
    # family of lattice lines, scaled to the wavefront
    vi, vj = np.divmod(np.arange(K.n_vertices), N + 1)

    def extents(tris: np.ndarray) -> tuple[int, int, int]:
        vids = K.tri_vertices[tris].ravel()
        di = vi[vids] - i0
        dj = vj[vids] - j0
        return (
            int((dj - di).max()),
            int((-di - 2 * dj).max()),
            int((2 * di + dj).max()),
        )

    f0 = np.zeros(K.n_basis)
    f0[6 * t0] = 1.0
    mu_one = ms.finding_probability(K, run120(f0), check_norm=False)
    ext_one = extents(np.flatnonzero(mu_one > 0.0))
    ok_b = all(e <= 63 for e in ext_one) and all(e >= 57 for e in ext_one)

    # a two-orientation swap start must overflow that triangle: the bound is
    # a real constraint, not slack
    mu_ctl = ms.finding_probability(
        K, run120(wk.initial_state_pair_swap(K, t0)), check_norm=False
    )
    ext_ctl = extents(np.flatnonzero(mu_ctl > 0.0))
    ok_ctl = min(ext_ctl) > 63

    ok = ok_a and ok_b and ok_ctl
    assert _verdict(9, ok), (len(sup), ext_one, ext_ctl)
