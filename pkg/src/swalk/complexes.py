"""Admissible 2-dimensional simplicial complexes and their standard builders.

A complex is stored as a flat array of triangles, each given as an ordered
triple of vertex ids.  The stored order of each triangle is its canonical
directed representative; the six directed versions of triangle ``t`` are
indexed ``n = 6*t + l`` where ``l`` selects a rotation/reflection of the
canonical order (see ``ROTATIONS``).  Edges, coface incidence, boundary
edges and the maximal coface degree are derived once at construction time.

Builders cover a square grid patch, a cylinder (x-periodic strip), a
cylinder with a tetrahedron glued onto one lower triangle, a Moebius band
(x-identification with a y-flip), and two small fixed complexes used for
operator-level checks.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

__all__ = [
    "ROTATIONS",
    "SimplicialComplex2D",
    "AdmissibilityReport",
    "OrientabilityResult",
    "face_map",
    "rotation_of_tuple",
    "build_grid_patch",
    "build_cylinder",
    "build_cylinder_with_tetrahedron",
    "build_moebius",
    "build_two_triangles",
    "build_tether_example",
]

# Rotation table: row l gives the positions of the canonical vertices in the
# l-th directed version of a triangle.  Rows 0..2 are the cyclic rotations of
# the canonical order, rows 3..5 the cyclic rotations of the reversed order.
ROTATIONS = np.array(
    [
        [0, 1, 2],
        [1, 2, 0],
        [2, 0, 1],
        [0, 2, 1],
        [2, 1, 0],
        [1, 0, 2],
    ],
    dtype=np.int64,
)


def face_map(simplex: tuple[int, ...], i: int) -> tuple[int, ...]:
    """Directed face: delete vertex i and rotate, [a0..an] -> [a_{i+1}..a_{i-1}]."""
    n = len(simplex)
    if not 0 <= i < n:
        raise ValueError(f"face index {i} out of range for simplex of length {n}")
    return tuple(simplex[(i + 1 + j) % n] for j in range(n - 1))


def rotation_of_tuple(canonical: tuple[int, int, int], directed: tuple[int, int, int]) -> int:
    """Return l such that applying ROTATIONS[l] to the canonical order yields `directed`."""
    for l in range(6):
        if tuple(canonical[p] for p in ROTATIONS[l]) == tuple(directed):
            return l
    raise ValueError(f"{directed} is not an ordering of {canonical}")


@dataclass(frozen=True)
class AdmissibilityReport:
    strongly_connected: bool
    every_facet_has_coface: bool
    max_coface_degree: int


@dataclass(frozen=True)
class OrientabilityResult:
    orientable: bool
    skipped_edges: np.ndarray  # edge ids with coface degree >= 3

    def __bool__(self) -> bool:
        return self.orientable


class SimplicialComplex2D:
    """Pure 2-dimensional complex with directed-triangle basis indexing.

    Parameters
    ----------
    tri_vertices : (T, 3) integer array
        Canonical directed vertex order of every triangle.
    coords : (V, 2) float array
        Planar embedding of the vertices.
    labels : (T, 3) integer array, optional
        Grid label (i, j, k) per triangle; k in {0, 1} for lower/upper grid
        triangles, {2, 3, 4} for the three added tetrahedron faces.
    kind : str
        Builder tag ("grid", "cylinder", ...); "custom" for direct use.
    x_period : float, optional
        Fundamental-domain width for x-periodic complexes; used to unwrap
        triangle corner coordinates when computing representative points.

    The instance is immutable after construction and safe to share between
    threads.
    """

    def __init__(
        self,
        tri_vertices: np.ndarray,
        coords: np.ndarray,
        labels: np.ndarray | None = None,
        kind: str = "custom",
        x_period: float | None = None,
        dims: tuple[int, int] | None = None,
        attach: tuple[int, int] | None = None,
    ):
        tri_vertices = np.ascontiguousarray(tri_vertices, dtype=np.int64)
        coords = np.ascontiguousarray(coords, dtype=np.float64)
        if tri_vertices.ndim != 2 or tri_vertices.shape[1] != 3:
            raise ValueError("tri_vertices must have shape (T, 3)")
        if coords.ndim != 2 or coords.shape[1] != 2:
            raise ValueError("coords must have shape (V, 2)")
        if tri_vertices.size and (tri_vertices.min() < 0 or tri_vertices.max() >= len(coords)):
            raise ValueError("triangle vertex id out of range")
        same = (
            (tri_vertices[:, 0] == tri_vertices[:, 1])
            | (tri_vertices[:, 1] == tri_vertices[:, 2])
            | (tri_vertices[:, 0] == tri_vertices[:, 2])
        )
        if same.any():
            raise ValueError("degenerate triangle with repeated vertex")

        self.tri_vertices = tri_vertices
        self.coords = coords
        self.kind = kind
        self.x_period = x_period
        self._dims = dims
        self._attach = attach

        if labels is not None:
            labels = np.ascontiguousarray(labels, dtype=np.int64)
            if labels.shape != (len(tri_vertices), 3):
                raise ValueError("labels must have shape (T, 3)")
        self.labels = labels

        self._build_edges()
        self._dedge_keys_cache: np.ndarray | None = None

    # -- construction helpers -------------------------------------------------

    def _build_edges(self) -> None:
        tv = self.tri_vertices
        V = len(self.coords)
        # all edge instances, triangle-major: (v0,v1), (v1,v2), (v2,v0)
        pair_a = tv[:, [0, 1, 2]].ravel()
        pair_b = tv[:, [1, 2, 0]].ravel()
        mn = np.minimum(pair_a, pair_b)
        mx = np.maximum(pair_a, pair_b)
        key = mn * np.int64(V) + mx
        uniq, inverse = np.unique(key, return_inverse=True)
        self.edges = np.column_stack((uniq // V, uniq % V))
        self._edge_keys = uniq
        counts = np.bincount(inverse, minlength=len(uniq))
        order = np.argsort(inverse, kind="stable")
        self._edge_tri_indptr = np.concatenate(([0], np.cumsum(counts)))
        self._edge_tri = order // 3  # ascending triangle id within each edge
        self.edge_degrees = counts
        self.max_coface_degree = int(counts.max()) if len(counts) else 0
        self.boundary_edge_ids = np.flatnonzero(counts == 1)

    # -- sizes ----------------------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.coords)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def n_triangles(self) -> int:
        return len(self.tri_vertices)

    @property
    def n_basis(self) -> int:
        return 6 * len(self.tri_vertices)

    # -- incidence ------------------------------------------------------------

    def edge_cofaces(self, edge_id: int) -> np.ndarray:
        """Triangle ids incident to an edge, ascending."""
        lo, hi = self._edge_tri_indptr[edge_id], self._edge_tri_indptr[edge_id + 1]
        return self._edge_tri[lo:hi]

    def edge_id(self, u: int, v: int) -> int:
        if u > v:
            u, v = v, u
        key = np.int64(u) * self.n_vertices + v
        pos = np.searchsorted(self._edge_keys, key)
        if pos >= len(self._edge_keys) or self._edge_keys[pos] != key:
            raise KeyError(f"no edge ({u}, {v})")
        return int(pos)

    def boundary_edges(self) -> np.ndarray:
        """Vertex pairs (u, v), u < v, of edges with exactly one coface."""
        return self.edges[self.boundary_edge_ids]

    def boundary_basis_indices(self) -> np.ndarray:
        """Basis indices of every triangle that touches a boundary edge."""
        lo = self._edge_tri_indptr[self.boundary_edge_ids]
        tris = np.unique(self._edge_tri[lo])  # degree-1 edges have one coface
        return (6 * tris[:, None] + np.arange(6)).ravel()

    # -- directed basis -------------------------------------------------------

    def basis_tuple(self, n: int) -> tuple[int, int, int]:
        """Vertex order of directed triangle n = 6*t + l."""
        t, l = divmod(n, 6)
        return tuple(int(v) for v in self.tri_vertices[t, ROTATIONS[l]])

    def dedge_keys(self) -> np.ndarray:
        """Encoded directed edge head*V + tail of the 0-face of every basis index."""
        if self._dedge_keys_cache is None:
            tv = self.tri_vertices
            V = np.int64(self.n_vertices)
            heads = tv[:, ROTATIONS[:, 1]]
            tails = tv[:, ROTATIONS[:, 2]]
            self._dedge_keys_cache = (heads * V + tails).ravel()
        return self._dedge_keys_cache

    def directed_edge_of_basis(self, n: int) -> tuple[int, int]:
        key = int(self.dedge_keys()[n])
        return key // self.n_vertices, key % self.n_vertices

    # -- labels ---------------------------------------------------------------

    def label_of_triangle(self, t: int) -> tuple[int, int, int]:
        if self.labels is None:
            raise ValueError("complex has no grid labels")
        return tuple(int(x) for x in self.labels[t])

    def triangle_of_label(self, i: int, j: int, k: int) -> int:
        if self.labels is None:
            raise ValueError("complex has no grid labels")
        if self._dims is not None:
            R_or_N, N = self._dims
            if k in (0, 1) and 0 <= i < R_or_N and 0 <= j < N:
                t = 2 * (i * N + j) + k
                if tuple(self.labels[t]) == (i, j, k):
                    return t
            if k in (2, 3, 4) and self._attach is not None and (i, j) == self._attach:
                return 2 * R_or_N * N + (k - 2)
            raise KeyError(f"no triangle labeled ({i}, {j}, {k})")
        hits = np.flatnonzero(
            (self.labels[:, 0] == i) & (self.labels[:, 1] == j) & (self.labels[:, 2] == k)
        )
        if len(hits) != 1:
            raise KeyError(f"no triangle labeled ({i}, {j}, {k})")
        return int(hits[0])

    # -- geometry -------------------------------------------------------------

    def tri_barycenters(self) -> np.ndarray:
        """Representative point per triangle; corner x-coordinates are unwrapped
        across the fundamental domain before averaging on periodic complexes."""
        xs = self.coords[self.tri_vertices, 0]
        ys = self.coords[self.tri_vertices, 1]
        if self.x_period is not None:
            period = float(self.x_period)
            spread = xs.max(axis=1) - xs.min(axis=1)
            wrap = spread > period / 2
            if wrap.any():
                xs = xs.copy()
                rows = np.flatnonzero(wrap)
                low = xs[rows] < period / 2
                xs[rows] += low * period
        return np.column_stack((xs.mean(axis=1), ys.mean(axis=1)))

    # -- export ---------------------------------------------------------------

    def export_json(self) -> str:
        doc = {
            "vertices": list(range(self.n_vertices)),
            "triangles": self.tri_vertices.tolist(),
            "labels": self.labels.tolist() if self.labels is not None else None,
            "embedding": self.coords.tolist(),
            "boundary_edges": self.boundary_edges().tolist(),
        }
        return json.dumps(doc, sort_keys=True, indent=2) + "\n"

    def __repr__(self) -> str:
        return (
            f"SimplicialComplex2D(kind={self.kind!r}, V={self.n_vertices}, "
            f"E={self.n_edges}, T={self.n_triangles})"
        )


# -- admissibility and orientability ----------------------------------------


def check_admissible(K: SimplicialComplex2D) -> AdmissibilityReport:
    """Strong connectivity through shared edges, facet-coface coverage, max degree."""
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components

    every = bool((K.edge_degrees >= 1).all()) if K.n_edges else True
    T = K.n_triangles
    rows = []
    cols = []
    for e in np.flatnonzero(K.edge_degrees >= 2):
        tris = K.edge_cofaces(e)
        for a in tris:
            for b in tris:
                if a != b:
                    rows.append(a)
                    cols.append(b)
    if T == 0:
        connected = True
    elif rows:
        adj = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(T, T))
        ncomp, _ = connected_components(adj, directed=False)
        connected = ncomp == 1
    else:
        connected = T == 1
    return AdmissibilityReport(connected, every, K.max_coface_degree)


def check_orientability(K: SimplicialComplex2D) -> OrientabilityResult:
    """2-color the dual graph over degree-2 edges so shared edges receive
    opposite induced directions; edges of degree >= 3 are skipped and reported."""
    from collections import deque

    skipped = np.flatnonzero(K.edge_degrees >= 3)
    # parity of the canonical traversal on each edge of each triangle:
    # +1 when traversed min->max, -1 otherwise
    tv = K.tri_vertices
    T = K.n_triangles

    sign_of: dict[tuple[int, int], int] = {}

    def traversal_sign(t: int, e: int) -> int:
        u, v = K.edges[e]
        a, b, c = tv[t]
        for x, y in ((a, b), (b, c), (c, a)):
            if x == u and y == v:
                return 1
            if x == v and y == u:
                return -1
        raise AssertionError("edge not on triangle")

    # adjacency over degree-2 edges with relation flip(t2) = -s1*s2*flip(t1)
    neighbors: list[list[tuple[int, int]]] = [[] for _ in range(T)]
    for e in np.flatnonzero(K.edge_degrees == 2):
        t1, t2 = K.edge_cofaces(e)
        rel = -traversal_sign(int(t1), int(e)) * traversal_sign(int(t2), int(e))
        neighbors[t1].append((int(t2), rel))
        neighbors[t2].append((int(t1), rel))

    flip = np.zeros(T, dtype=np.int8)
    for start in range(T):
        if flip[start]:
            continue
        flip[start] = 1
        queue = deque([start])
        while queue:
            t = queue.popleft()
            for t2, rel in neighbors[t]:
                want = rel * flip[t]
                if flip[t2] == 0:
                    flip[t2] = want
                    queue.append(t2)
                elif flip[t2] != want:
                    return OrientabilityResult(False, skipped)
    return OrientabilityResult(True, skipped)


# -- builders -----------------------------------------------------------------


def _strip_arrays(R: int, N: int, wrap_x: bool, moebius: bool):
    """Triangle and label arrays for an R x N column-major strip of squares.

    Square (i, j) splits into the lower triangle ((i,j),(i+1,j),(i,j+1)) and
    the upper triangle ((i+1,j),(i+1,j+1),(i,j+1)).  Vertex (i, j) has id
    i*(N+1) + j; with wrap_x the column i = R identifies with column 0,
    flipped upside down when moebius is set.
    """
    cols = N + 1

    def vid(i: np.ndarray, j: np.ndarray) -> np.ndarray:
        if wrap_x:
            if moebius:
                j = np.where(i >= R, N - j, j)
            i = np.mod(i, R)
        return i * cols + j

    ii, jj = np.meshgrid(np.arange(R, dtype=np.int64), np.arange(N, dtype=np.int64), indexing="ij")
    ii = ii.ravel()
    jj = jj.ravel()
    v00 = vid(ii, jj)
    v10 = vid(ii + 1, jj)
    v01 = vid(ii, jj + 1)
    v11 = vid(ii + 1, jj + 1)

    T = 2 * R * N
    tri = np.empty((T, 3), dtype=np.int64)
    tri[0::2] = np.column_stack((v00, v10, v01))
    tri[1::2] = np.column_stack((v10, v11, v01))
    labels = np.empty((T, 3), dtype=np.int64)
    labels[0::2] = np.column_stack((ii, jj, np.zeros_like(ii)))
    labels[1::2] = np.column_stack((ii, jj, np.ones_like(ii)))

    n_cols_x = R if wrap_x else R + 1
    gx, gy = np.meshgrid(np.arange(n_cols_x, dtype=np.float64), np.arange(cols, dtype=np.float64), indexing="ij")
    coords = np.column_stack((gx.ravel(), gy.ravel()))
    return tri, coords, labels


def build_grid_patch(N: int) -> SimplicialComplex2D:
    """N x N square patch, each square split into a lower and an upper triangle.

    Triangle (i, j, k) has index 2*(i*N + j) + k; the embedding puts square
    corners on integer coordinates.
    """
    if N < 1:
        raise ValueError("N must be >= 1")
    tri, coords, labels = _strip_arrays(N, N, wrap_x=False, moebius=False)
    return SimplicialComplex2D(tri, coords, labels, kind="grid", dims=(N, N))


def build_cylinder(R: int, N: int) -> SimplicialComplex2D:
    """R x N strip with x-periodic identification (a triangulated cylinder)."""
    if R < 3:
        raise ValueError("R must be >= 3 (smaller R duplicates simplices)")
    if N < 1:
        raise ValueError("N must be >= 1")
    tri, coords, labels = _strip_arrays(R, N, wrap_x=True, moebius=False)
    return SimplicialComplex2D(tri, coords, labels, kind="cylinder", x_period=float(R), dims=(R, N))


def build_cylinder_with_tetrahedron(
    R: int, N: int, attach: tuple[int, int] | None = None
) -> SimplicialComplex2D:
    """Cylinder with a tetrahedron glued onto one lower triangle.

    The lower triangle (i0, j0, 0) with vertices a, b, c becomes one face of a
    tetrahedron; a new apex d and the faces (a,b,d), (b,c,d), (c,a,d) are
    appended with labels (i0, j0, 2), (i0, j0, 3), (i0, j0, 4).  The edges of
    the base triangle then have coface degree 3.
    """
    if R < 3:
        raise ValueError("R must be >= 3")
    if N < 1:
        raise ValueError("N must be >= 1")
    if attach is None:
        attach = (R // 2, N // 2)
    i0, j0 = attach
    if not (0 <= i0 < R and 0 <= j0 < N):
        raise ValueError(f"attach label {attach} out of range for {R} x {N} cylinder")

    tri, coords, labels = _strip_arrays(R, N, wrap_x=True, moebius=False)
    cols = N + 1
    a = i0 * cols + j0
    b = ((i0 + 1) % R) * cols + j0
    c = i0 * cols + (j0 + 1)
    d = len(coords)
    apex = np.array([[i0 + 1.0 / 3.0, j0 + 1.0 / 3.0]])
    coords = np.vstack((coords, apex))
    extra = np.array([[a, b, d], [b, c, d], [c, a, d]], dtype=np.int64)
    tri = np.vstack((tri, extra))
    extra_labels = np.array([[i0, j0, 2], [i0, j0, 3], [i0, j0, 4]], dtype=np.int64)
    labels = np.vstack((labels, extra_labels))
    return SimplicialComplex2D(
        tri, coords, labels, kind="cylinder_tetra", x_period=float(R), dims=(R, N), attach=attach
    )


def build_moebius(R: int, N: int) -> SimplicialComplex2D:
    """R x N strip with the twisted x-identification (x, j) ~ (x - R, N - j)."""
    if R < 3 or N < 3:
        raise ValueError("Moebius band needs R >= 3 and N >= 3")
    tri, coords, labels = _strip_arrays(R, N, wrap_x=True, moebius=True)
    return SimplicialComplex2D(tri, coords, labels, kind="moebius", x_period=float(R), dims=(R, N))


_S3 = np.sqrt(3.0) / 2.0


def build_two_triangles() -> SimplicialComplex2D:
    """Two triangles sharing one edge: supports |abc| and |dbc|."""
    tri = np.array([[0, 1, 2], [3, 1, 2]], dtype=np.int64)
    coords = np.array([[0.0, 0.0], [1.0, 0.0], [0.5, _S3], [1.5, _S3]])
    labels = np.array([[0, 0, 0], [0, 0, 1]], dtype=np.int64)
    return SimplicialComplex2D(tri, coords, labels, kind="two_triangles")


def build_tether_example() -> SimplicialComplex2D:
    """Four triangles |abc|, |dbc|, |abd'|, |abd''|; the edge |ab| has three cofaces."""
    tri = np.array([[0, 1, 2], [3, 1, 2], [0, 1, 4], [0, 1, 5]], dtype=np.int64)
    coords = np.array(
        [
            [0.0, 0.0],
            [1.0, 0.0],
            [0.5, _S3],
            [1.5, _S3],
            [0.5, -_S3],
            [0.5, -2 * _S3],
        ]
    )
    labels = np.array([[0, 0, 0], [1, 0, 0], [2, 0, 0], [3, 0, 0]], dtype=np.int64)
    return SimplicialComplex2D(tri, coords, labels, kind="tether_example")
