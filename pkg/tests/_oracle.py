"""Independent reference constructions used to cross-check the package.

Everything in here is deliberately written from the bare definitions with
dense matrices and exact Fraction arithmetic, sharing no code path with the
library internals it checks.
"""
from __future__ import annotations

from fractions import Fraction

import numpy as np

# the six vertex orderings of a triangle, indexed like the library's l
WORDS = ["abc", "bca", "cab", "acb", "cba", "bac"]
_POS = {"a": 0, "b": 1, "c": 2}


def directed_tuple(tri: tuple[int, int, int], l: int) -> tuple[int, int, int]:
    """Vertex tuple of orientation l for a canonical triangle (a, b, c)."""
    return tuple(tri[_POS[ch]] for ch in WORDS[l])


def apply_word(tup: tuple[int, int, int], word: str) -> tuple[int, int, int]:
    """Positional vertex permutation: word 'bca' sends (x0,x1,x2) to (x1,x2,x0)."""
    return tuple(tup[_POS[ch]] for ch in word)


def zero_face(tup: tuple[int, int, int]) -> tuple[int, int]:
    """Directed edge left after deleting the first vertex."""
    return (tup[1], tup[2])


def basis_tuples(tri_vertices) -> list[tuple[int, int, int]]:
    out = []
    for tri in tri_vertices:
        tri = tuple(int(v) for v in tri)
        out.extend(directed_tuple(tri, l) for l in range(6))
    return out


def dense_walk_matrix(tri_vertices, values, word: str) -> np.ndarray:
    """U = S_pi (2 d0* d0 - I) assembled entry by entry from the definitions."""
    tuples = basis_tuples(tri_vertices)
    B = len(tuples)
    index = {tup: n for n, tup in enumerate(tuples)}
    values = np.asarray(values)
    dtype = np.complex128 if np.iscomplexobj(values) else np.float64

    # weighted 0-face map: d0 delta_sigma = conj(w(sigma)) delta_{edge}
    edges = sorted({zero_face(t) for t in tuples})
    e_row = {e: i for i, e in enumerate(edges)}
    d0 = np.zeros((len(edges), B), dtype=dtype)
    for n, tup in enumerate(tuples):
        d0[e_row[zero_face(tup)], n] = np.conj(values[n])

    C = 2.0 * d0.conj().T @ d0 - np.eye(B, dtype=dtype)

    S = np.zeros((B, B), dtype=dtype)
    for n, tup in enumerate(tuples):
        S[index[apply_word(tup, word)], n] = 1.0
    return S @ C


def dense_face_matrix(tri_vertices, values, i: int) -> np.ndarray:
    """Weighted face map d_i: delete vertex i of each directed tuple."""
    tuples = basis_tuples(tri_vertices)
    values = np.asarray(values)
    dtype = np.complex128 if np.iscomplexobj(values) else np.float64
    edges = sorted({(t[(i + 1) % 3], t[(i + 2) % 3]) for t in tuples})
    e_row = {e: k for k, e in enumerate(edges)}
    d = np.zeros((len(edges), len(tuples)), dtype=dtype)
    for n, tup in enumerate(tuples):
        d[e_row[(tup[(i + 1) % 3], tup[(i + 2) % 3])], n] = np.conj(values[n])
    return d


# -- exact homology ------------------------------------------------------------

def _rank_fraction(rows: list[list[Fraction]]) -> int:
    """Gaussian elimination over Q, no pivoting subtleties, no overflow."""
    if not rows:
        return 0
    rows = [row[:] for row in rows]
    ncols = len(rows[0])
    rank = 0
    col = 0
    for col in range(ncols):
        piv = next((r for r in range(rank, len(rows)) if rows[r][col] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        prow = rows[rank]
        inv = Fraction(1, 1) / prow[col]
        for r in range(rank + 1, len(rows)):
            f = rows[r][col] * inv
            if f:
                rows[r] = [x - f * y for x, y in zip(rows[r], prow)]
        rank += 1
        if rank == len(rows):
            break
    return rank


def betti_exact(n_vertices: int, triangles) -> tuple[int, int, int]:
    """Betti numbers over Q from scratch: simplices, boundaries, ranks."""
    tris = [tuple(sorted(int(v) for v in t)) for t in triangles]
    edge_set = set()
    for a, b, c in tris:
        edge_set.update([(a, b), (a, c), (b, c)])
    edges = sorted(edge_set)
    e_idx = {e: i for i, e in enumerate(edges)}

    d1 = [[Fraction(0)] * len(edges) for _ in range(n_vertices)]
    for j, (u, v) in enumerate(edges):
        d1[u][j] -= 1
        d1[v][j] += 1
    d2 = [[Fraction(0)] * len(tris) for _ in range(len(edges))]
    for j, (a, b, c) in enumerate(tris):
        d2[e_idx[(b, c)]][j] += 1
        d2[e_idx[(a, c)]][j] -= 1
        d2[e_idx[(a, b)]][j] += 1

    r1 = _rank_fraction(d1)
    r2 = _rank_fraction(d2)
    b0 = n_vertices - r1
    b1 = len(edges) - r1 - r2
    b2 = len(tris) - r2
    return b0, b1, b2


def orientable_brute(tri_vertices) -> bool:
    """Try all sign assignments; feasible only for a handful of triangles."""
    tris = [tuple(sorted(int(v) for v in t)) for t in tri_vertices]
    T = len(tris)
    assert T <= 14, "brute force orientability is exponential"
    # induced direction of each edge under +1 orientation (a,b,c): ab, bc, ca
    induced = []
    for a, b, c in tris:
        induced.append([((a, b), +1), ((b, c), +1), ((a, c), -1)])
    for mask in range(1 << T):
        seen: dict[tuple[int, int], int] = {}
        ok = True
        for t in range(T):
            s = 1 if mask & (1 << t) else -1
            for e, d in induced[t]:
                d = d * s
                if e in seen and seen[e] == d:
                    ok = False
                    break
                seen[e] = d
            if not ok:
                break
        if ok:
            return True
    return False


def random_unit_state(rng: np.random.Generator, n: int, complex_valued: bool = True):
    if complex_valued:
        f = rng.standard_normal(n) + 1j * rng.standard_normal(n)
    else:
        f = rng.standard_normal(n)
    return f / np.linalg.norm(f)
