"""Structural classifiers: non-interactive walks and tethered permutations.

``is_noninteractive`` is an exact sparsity check on the assembled operator.
``tethered_check`` decides, for generic weights, whether a permutation can
ever move amplitude off the simplices containing some fixed vertex: it
propagates the walk's structural support (every coefficient that is not
forced to vanish treated as nonzero) and tracks which vertices stay common
to every support reached.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .complexes import SimplicialComplex2D
from .walk import PermutationSpec, WalkOperator, _directed_groups, apply

__all__ = [
    "TetherResult",
    "is_noninteractive",
    "tethered_check",
    "numeric_tether_probe",
]


def is_noninteractive(op: WalkOperator) -> bool:
    """True iff every column of U has exactly one stored nonzero entry.

    Then every power of U maps basis vectors to scalar multiples of basis
    vectors; a column with two or more entries witnesses interaction after a
    single step.  Exact: suppressed reflections are pruned at build time.
    """
    mat = op.matrix
    if mat.nnz != mat.shape[0]:
        return False
    counts = np.bincount(mat.indices, minlength=mat.shape[1])
    return bool((counts == 1).all())


@dataclass(frozen=True)
class TetherResult:
    verdict: str  # "tethered" | "movable" | "inconclusive"
    anchors: frozenset[int]
    stabilized_at: int | None
    steps: int
    reached: np.ndarray  # bool per basis index

    def __repr__(self) -> str:
        return (
            f"TetherResult(verdict={self.verdict!r}, anchors={sorted(self.anchors)}, "
            f"stabilized_at={self.stabilized_at}, steps={self.steps})"
        )


def _adjacency(K: SimplicialComplex2D):
    from scipy.sparse import coo_matrix

    rows, cols = [], []
    for e in np.flatnonzero(K.edge_degrees >= 2):
        tris = K.edge_cofaces(e)
        for a in tris:
            for b in tris:
                if a != b:
                    rows.append(int(a))
                    cols.append(int(b))
    T = K.n_triangles
    return coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(T, T)).tocsr()


def _diameter_estimate(K: SimplicialComplex2D) -> int:
    """Double-sweep BFS bound on the triangle-adjacency diameter."""
    from scipy.sparse.csgraph import dijkstra

    if K.n_triangles <= 1:
        return 1
    adj = _adjacency(K)
    d = dijkstra(adj, unweighted=True, indices=0, directed=False)
    finite = np.isfinite(d)
    far = int(np.argmax(np.where(finite, d, -1)))
    d2 = dijkstra(adj, unweighted=True, indices=far, directed=False)
    diam = d2[np.isfinite(d2)].max()
    return max(1, int(diam))


def default_m_max(K: SimplicialComplex2D) -> int:
    return min(10_000, 4 * _diameter_estimate(K))


def tethered_check(
    K: SimplicialComplex2D,
    perm: PermutationSpec,
    sigma0: int,
    m_max: int | None = None,
) -> TetherResult:
    """Generic-weight reachability from the directed triangle ``sigma0``.

    One structural step sends a basis index to the permutation images of its
    whole facet group (reflection included: for generic weights no
    coefficient is forced to zero).  The verdict is ``movable`` once no
    vertex of sigma0's triangle lies in every reached support, ``tethered``
    once the reached set stabilizes with some anchor vertex remaining, and
    ``inconclusive`` if m_max passes first.
    """
    if m_max is None:
        m_max = default_m_max(K)
    if m_max < 1:
        raise ValueError("m_max must be >= 1")
    B = K.n_basis
    sigma0 = int(sigma0)
    if not 0 <= sigma0 < B:
        raise ValueError(f"basis index {sigma0} out of range")

    order, starts, sizes, group_id = _directed_groups(K)
    pi = perm.basis_permutation(B)

    reached = np.zeros(B, dtype=bool)
    reached[sigma0] = True
    anchors = set(int(v) for v in K.tri_vertices[sigma0 // 6])
    frontier = np.array([sigma0], dtype=np.int64)

    for step in range(1, m_max + 1):
        g = np.unique(group_id[frontier])
        gsz = sizes[g]
        total = int(gsz.sum())
        cum = np.cumsum(gsz)
        intra = np.arange(total, dtype=np.int64) - np.repeat(cum - gsz, gsz)
        members = order[np.repeat(starts[g], gsz) + intra]
        images = pi[members]
        new = np.unique(images[~reached[images]])
        if new.size == 0:
            return TetherResult("tethered", frozenset(anchors), step, step, reached)
        reached[new] = True
        new_tris = np.unique(new // 6)
        tv = K.tri_vertices[new_tris]
        anchors = {v for v in anchors if bool((tv == v).any(axis=1).all())}
        if not anchors:
            return TetherResult("movable", frozenset(), None, step, reached)
        frontier = new

    return TetherResult("inconclusive", frozenset(anchors), None, m_max, reached)


def numeric_tether_probe(
    op: WalkOperator, sigma0: int, m_max: int, tol: float = 1e-12
) -> list[np.ndarray]:
    """Support trace of an actual run from the basis vector ``sigma0``.

    Returns the list of basis-index supports at steps 0..m_max; used to
    corroborate a structural verdict on one concrete weight.
    """
    B = op.n_basis
    f = np.zeros(B, dtype=op.dtype)
    f[int(sigma0)] = 1.0
    trace = [np.flatnonzero(np.abs(f) > tol)]
    buf = np.empty_like(f)
    for _ in range(m_max):
        apply(op, f, out=buf)
        f, buf = buf, f
        trace.append(np.flatnonzero(np.abs(f) > tol))
    return trace
