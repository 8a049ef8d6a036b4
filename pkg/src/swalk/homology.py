"""Boundary matrices and Betti numbers over the rationals.

Simplex orientation is fixed by increasing vertex order, so the boundary of
a triangle {a < b < c} is +|bc| - |ac| + |ab| and the boundary of an edge
{u < v} is +v - u.  Ranks are computed by exact fraction-free integer
elimination; no floating point enters the computation.
"""

from __future__ import annotations

from dataclasses import dataclass
from math import gcd

import numpy as np
from scipy.sparse import csc_matrix

from .complexes import SimplicialComplex2D

__all__ = [
    "BettiVector",
    "boundary_matrix",
    "betti_numbers",
    "betti_from_simplices",
    "euler_characteristic",
    "integer_rank",
]


@dataclass(frozen=True)
class BettiVector:
    b0: int
    b1: int
    b2: int

    def __iter__(self):
        return iter((self.b0, self.b1, self.b2))


def _boundary_1(n_vertices: int, edges: np.ndarray) -> csc_matrix:
    E = len(edges)
    data = np.empty(2 * E, dtype=np.int64)
    rows = np.empty(2 * E, dtype=np.int64)
    cols = np.repeat(np.arange(E, dtype=np.int64), 2)
    rows[0::2] = edges[:, 0]
    rows[1::2] = edges[:, 1]
    data[0::2] = -1
    data[1::2] = 1
    return csc_matrix((data, (rows, cols)), shape=(n_vertices, E))


def _boundary_2(edge_lookup, edges: np.ndarray, triangles: np.ndarray) -> csc_matrix:
    T = len(triangles)
    srt = np.sort(triangles, axis=1)
    rows = np.empty(3 * T, dtype=np.int64)
    data = np.empty(3 * T, dtype=np.int64)
    cols = np.repeat(np.arange(T, dtype=np.int64), 3)
    for t, (a, b, c) in enumerate(srt):
        rows[3 * t] = edge_lookup(b, c)
        rows[3 * t + 1] = edge_lookup(a, c)
        rows[3 * t + 2] = edge_lookup(a, b)
    data[0::3] = 1
    data[1::3] = -1
    data[2::3] = 1
    return csc_matrix((data, (rows, cols)), shape=(len(edges), T))


def boundary_matrix(K: SimplicialComplex2D, k: int) -> csc_matrix:
    """Integer boundary matrix of dimension k (1 or 2)."""
    if k == 1:
        return _boundary_1(K.n_vertices, K.edges)
    if k == 2:
        return _boundary_2(K.edge_id, K.edges, K.tri_vertices)
    raise ValueError(f"k must be 1 or 2, got {k}")


def integer_rank(mat: csc_matrix) -> int:
    """Exact rank over the rationals via fraction-free row elimination.

    Rows are kept as sparse integer dicts; pivots prefer entries of absolute
    value 1 so that entries stay small (boundary matrices are close to
    totally unimodular), and rows are gcd-reduced after each update.
    """
    coo = mat.tocoo()
    row_map: dict[int, dict[int, int]] = {}
    for r, c, v in zip(coo.row, coo.col, coo.data):
        if v:
            row_map.setdefault(int(r), {})[int(c)] = row_map.get(int(r), {}).get(int(c), 0) + int(v)
    rows = [dict((c, v) for c, v in d.items() if v) for d in row_map.values()]
    rows = [r for r in rows if r]

    rank = 0
    while rows:
        best_idx = None
        best_key = None
        for idx, r in enumerate(rows):
            has_unit = any(v == 1 or v == -1 for v in r.values())
            key = (0 if has_unit else 1, len(r))
            if best_key is None or key < best_key:
                best_key = key
                best_idx = idx
                if key == (0, 1):
                    break
        pivot_row = rows.pop(best_idx)
        col, pval = min(pivot_row.items(), key=lambda kv: (abs(kv[1]) != 1, kv[0]))
        rank += 1

        remaining = []
        for r in rows:
            a = r.get(col)
            if a is None:
                remaining.append(r)
                continue
            out: dict[int, int] = {}
            for c, v in r.items():
                out[c] = v * pval
            for c, v in pivot_row.items():
                nv = out.get(c, 0) - v * a
                if nv:
                    out[c] = nv
                elif c in out:
                    del out[c]
            if out:
                g = 0
                for v in out.values():
                    g = gcd(g, abs(v))
                    if g == 1:
                        break
                if g > 1:
                    out = {c: v // g for c, v in out.items()}
                remaining.append(out)
        rows = remaining
    return rank


def betti_from_simplices(
    n_vertices: int, edges: np.ndarray, triangles: np.ndarray
) -> BettiVector:
    """Betti numbers of an arbitrary (vertices, edges, triangles) collection.

    Accepts complexes the 2-dimensional builders cannot express, e.g. a bare
    edge cycle with no triangles.
    """
    edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
    triangles = np.asarray(triangles, dtype=np.int64).reshape(-1, 3)
    E, T = len(edges), len(triangles)

    d1 = _boundary_1(n_vertices, edges)
    r1 = integer_rank(d1) if E else 0
    if T:
        key_of = {(int(u), int(v)): e for e, (u, v) in enumerate(edges)}

        def lookup(u: int, v: int) -> int:
            return key_of[(u, v)] if u < v else key_of[(v, u)]

        d2 = _boundary_2(lookup, edges, triangles)
        r2 = integer_rank(d2)
    else:
        r2 = 0

    b0 = n_vertices - r1
    b1 = E - r1 - r2
    b2 = T - r2
    return BettiVector(b0, b1, b2)


def betti_numbers(K: SimplicialComplex2D) -> BettiVector:
    """Betti numbers (b0, b1, b2) of the complex over the rationals."""
    r1 = integer_rank(boundary_matrix(K, 1)) if K.n_edges else 0
    r2 = integer_rank(boundary_matrix(K, 2)) if K.n_triangles else 0
    b0 = K.n_vertices - r1
    b1 = K.n_edges - r1 - r2
    b2 = K.n_triangles - r2
    return BettiVector(b0, b1, b2)


def euler_characteristic(K: SimplicialComplex2D) -> int:
    return K.n_vertices - K.n_edges + K.n_triangles
