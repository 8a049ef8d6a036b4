"""Weights, the walk operator U, and state evolution.

One step of the walk is U = S C, where C reflects each state about the range
of the 0-face co-boundary and S relabels every directed triangle by a fixed
positional permutation of its vertex tuple.  Only U is ever materialized; it
acts on vectors indexed by directed triangles (six per triangle, see
``complexes.ROTATIONS``).

Column action, writing G(s) for the set of directed triangles whose 0-face
equals that of s:

    U e_s  =  sum over s' in G(s) of  2 conj(w(s)) w(s') e_{perm(s')}  -  e_{perm(s)}

Weights with |w|^2 = 1/2 make the reflection coefficient 2|w|^2 - 1 vanish;
the builder stores exact squared moduli separately so those entries come out
as exact zeros and are pruned, keeping "transmission only" walks genuinely
one-entry-per-column.
"""

from __future__ import annotations

import os
from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

from .complexes import ROTATIONS, SimplicialComplex2D

__all__ = [
    "WeightAssignment",
    "WeightValidation",
    "PermutationSpec",
    "WalkOperator",
    "BoundaryTouchError",
    "weight_uniform",
    "weight_lower_upper",
    "weight_grover",
    "weight_moebius",
    "weight_random",
    "weight_from_values",
    "validate_weight",
    "build_U",
    "apply",
    "evolve",
    "initial_state_symmetric",
    "initial_state_single",
    "initial_state_pair_cyclic",
    "initial_state_pair_swap",
    "face_operator",
    "shift_operator",
    "coin_operator",
]

_ASSEMBLY_CHUNK = 1_500_000  # output rows per assembly block; bounds transients


class BoundaryTouchError(RuntimeError):
    """The wavefront reached a boundary-incident triangle of a finite patch."""

    def __init__(self, step: int):
        super().__init__(
            f"nonzero amplitude on a boundary-incident triangle at step {step}; "
            "enlarge the patch so the wavefront stays interior"
        )
        self.step = step


# -- permutations --------------------------------------------------------------


def _l_table(mapping: tuple[int, int, int]) -> np.ndarray:
    table = np.empty(6, dtype=np.int64)
    rows = [tuple(r) for r in ROTATIONS]
    for l in range(6):
        image = tuple(ROTATIONS[l][q] for q in mapping)
        table[l] = rows.index(image)
    return table


@dataclass(frozen=True)
class PermutationSpec:
    """Positional permutation of a directed triangle's vertex tuple.

    ``mapping`` gives the output tuple as input positions: applied to
    (x0, x1, x2) it yields (x[mapping[0]], x[mapping[1]], x[mapping[2]]).
    The word form names the image of the canonical order, e.g. "bca" sends
    [abc] to [bca].
    """

    mapping: tuple[int, int, int]

    def __post_init__(self):
        if sorted(self.mapping) != [0, 1, 2]:
            raise ValueError(f"{self.mapping} is not a permutation of (0, 1, 2)")

    @classmethod
    def from_word(cls, word: str) -> "PermutationSpec":
        if sorted(word) != ["a", "b", "c"]:
            raise ValueError(f"permutation word must rearrange 'abc', got {word!r}")
        return cls(tuple("abc".index(ch) for ch in word))

    @classmethod
    def cyclic(cls) -> "PermutationSpec":
        return cls.from_word("bca")

    @property
    def word(self) -> str:
        return "".join("abc"[p] for p in self.mapping)

    @property
    def order(self) -> int:
        n = 1
        cur = list(self.mapping)
        while cur != [0, 1, 2]:
            cur = [cur[p] for p in self.mapping]
            n += 1
        return n

    def apply_tuple(self, tup: tuple[int, int, int]) -> tuple[int, int, int]:
        return tuple(tup[p] for p in self.mapping)

    def l_table(self) -> np.ndarray:
        """Rotation index of the image, per input rotation index."""
        return _l_table(self.mapping)

    def basis_permutation(self, n_basis: int) -> np.ndarray:
        """Image basis index per basis index, as an int64 array."""
        table = self.l_table()
        n = np.arange(n_basis, dtype=np.int64)
        return n - n % 6 + table[n % 6]


# -- weights -------------------------------------------------------------------


@dataclass(frozen=True)
class WeightAssignment:
    """Amplitude per directed triangle plus exact squared moduli.

    ``sq`` carries |w|^2 as assigned (not recomputed from ``values``), so
    reflection coefficients 2|w|^2 - 1 cancel exactly for schemes designed
    to suppress reflection.
    """

    values: np.ndarray
    sq: np.ndarray

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.values)

    def __len__(self) -> int:
        return len(self.values)


@dataclass(frozen=True)
class WeightValidation:
    ok: bool
    zero_weight_indices: np.ndarray
    facet_violations: list[dict]

    def __bool__(self) -> bool:
        return self.ok


def _facet_degree_per_basis(K: SimplicialComplex2D) -> np.ndarray:
    """Coface degree of the (undirected) 0-face edge, per basis index."""
    keys = K.dedge_keys()
    V = np.int64(K.n_vertices)
    h, t = keys // V, keys % V
    ek = np.minimum(h, t) * V + np.maximum(h, t)
    eid = np.searchsorted(K._edge_keys, ek)
    return K.edge_degrees[eid]


def _directed_groups(K: SimplicialComplex2D):
    """Group the basis by directed 0-face.

    Returns (order, starts, sizes, group_id): ``order`` lists basis indices
    sorted by directed-edge key, ascending within a group; group g occupies
    order[starts[g] : starts[g] + sizes[g]].
    """
    keys = K.dedge_keys()
    B = len(keys)
    order = np.argsort(keys, kind="stable")
    sk = keys[order]
    new_group = np.empty(B, dtype=bool)
    new_group[0] = True
    np.not_equal(sk[1:], sk[:-1], out=new_group[1:])
    starts = np.flatnonzero(new_group)
    sizes = np.diff(np.append(starts, B))
    gid_by_pos = np.cumsum(new_group) - 1
    group_id = np.empty(B, dtype=np.int64)
    group_id[order] = gid_by_pos
    return order, starts, sizes, group_id


def weight_uniform(K: SimplicialComplex2D, check: bool = True) -> WeightAssignment:
    """|w|^2 = 1/2 everywhere; boundary facets (single coface) get |w| = 1.

    Valid only when every facet has at most two cofaces: three cofaces would
    sum squared moduli to 3/2.
    """
    deg = _facet_degree_per_basis(K)
    if check and K.max_coface_degree > 2:
        raise ValueError(
            "uniform weight needs coface degree <= 2; "
            f"this complex has a facet with degree {K.max_coface_degree}"
        )
    sq = np.where(deg == 1, 1.0, 0.5)
    values = np.where(deg == 1, 1.0, 1.0 / np.sqrt(2.0))
    return WeightAssignment(values, sq)


def weight_lower_upper(K: SimplicialComplex2D, p: float, check: bool = True) -> WeightAssignment:
    """sqrt(p) on lower (k=0) triangles, sqrt(1-p) on upper (k=1) ones.

    Interior facets must join exactly one lower and one upper triangle;
    boundary facets reflect with |w| = 1.
    """
    if not 0.0 < p < 1.0:
        raise ValueError(f"p must lie in (0, 1), got {p}")
    if K.labels is None:
        raise ValueError("lower/upper weight needs grid labels")
    kflag = K.labels[:, 2]
    if check:
        if K.max_coface_degree > 2:
            raise ValueError("lower/upper weight needs coface degree <= 2")
        if (kflag > 1).any():
            raise ValueError("lower/upper weight defined only for k in {0, 1} labels")
        for e in np.flatnonzero(K.edge_degrees == 2):
            t1, t2 = K.edge_cofaces(e)
            if kflag[t1] == kflag[t2]:
                u, v = K.edges[e]
                raise ValueError(
                    f"facet ({u}, {v}) joins two triangles of the same kind; "
                    "lower/upper weight is not valid here"
                )
    deg = _facet_degree_per_basis(K)
    k_per_basis = np.repeat(kflag, 6)
    sq = np.where(k_per_basis == 0, p, 1.0 - p)
    sq = np.where(deg == 1, 1.0, sq)
    return WeightAssignment(np.sqrt(sq), sq)


def weight_grover(K: SimplicialComplex2D) -> WeightAssignment:
    """|w(s)|^2 = 1 / (coface degree of the 0-face); valid on any complex."""
    deg = _facet_degree_per_basis(K)
    sq = 1.0 / deg
    return WeightAssignment(np.sqrt(sq), sq)


def weight_moebius(K: SimplicialComplex2D, check: bool = True) -> WeightAssignment:
    """The lower/upper scheme with squared moduli 0.9/2 and 1.1/2."""
    return weight_lower_upper(K, 0.45, check=check)


def weight_random(K: SimplicialComplex2D, seed: int) -> WeightAssignment:
    """Random valid positive weight: per facet group, a Dirichlet draw mixed
    with the flat distribution so squared moduli stay bounded away from 0."""
    rng = np.random.default_rng(seed)
    _, _, sizes, group_id = _directed_groups(K)
    e = rng.exponential(1.0, size=K.n_basis)
    totals = np.bincount(group_id, weights=e, minlength=len(sizes))
    g = sizes[group_id].astype(np.float64)
    sq = 0.8 * e / totals[group_id] + 0.2 / g
    return WeightAssignment(np.sqrt(sq), sq)


def weight_from_values(
    K: SimplicialComplex2D, values: np.ndarray, check: bool = True
) -> WeightAssignment:
    """Wrap explicit per-basis amplitudes; validates unless check=False."""
    values = np.asarray(values)
    if values.shape != (K.n_basis,):
        raise ValueError(f"expected {K.n_basis} amplitudes, got shape {values.shape}")
    if not np.iscomplexobj(values):
        values = values.astype(np.float64)
    sq = np.abs(values) ** 2
    w = WeightAssignment(values, sq)
    if check:
        report = validate_weight(K, w)
        if not report.ok:
            raise ValueError(f"invalid weight: {_violation_summary(report)}")
    return w


def _violation_summary(report: WeightValidation) -> str:
    parts = []
    if len(report.zero_weight_indices):
        parts.append(f"{len(report.zero_weight_indices)} zero weights")
    if report.facet_violations:
        parts.append(f"unit-sum violations on {len(report.facet_violations)} facets")
    return "; ".join(parts) or "ok"


def validate_weight(
    K: SimplicialComplex2D, w: WeightAssignment, tol: float = 1e-12, _groups=None
) -> WeightValidation:
    """Check w != 0 everywhere and unit squared-sum over every directed facet.

    Directional sums are reported aggregated per undirected facet; an entry
    lists both directions' sums so one report line covers one geometric edge.
    """
    abssq = np.abs(np.asarray(w.values)) ** 2
    zero_idx = np.flatnonzero(abssq <= tol * tol)

    order, starts, sizes, group_id = _groups if _groups is not None else _directed_groups(K)
    sums = np.bincount(group_id, weights=abssq, minlength=len(sizes))
    bad_groups = np.flatnonzero(np.abs(sums - 1.0) > tol)

    # map violating groups to undirected edges
    violations: dict[tuple[int, int], dict] = {}
    if len(bad_groups):
        keys = K.dedge_keys()
        V = K.n_vertices
        for g in bad_groups:
            key = int(keys[order[starts[g]]])
            head, tail = key // V, key % V
            u, v = (head, tail) if head < tail else (tail, head)
            entry = violations.setdefault(
                (u, v), {"edge": [u, v], "sums": {}}
            )
            entry["sums"][f"{head}->{tail}"] = float(sums[g])
    facet_violations = [violations[k] for k in sorted(violations)]
    ok = len(zero_idx) == 0 and not facet_violations
    return WeightValidation(ok, zero_idx, facet_violations)


# -- the walk operator ---------------------------------------------------------


class WalkOperator:
    """Sparse one-step operator with deterministic row-major storage.

    Rows and the columns within each row are ascending, and ``apply`` sums in
    that fixed order, so results are bit-identical across runs and across
    worker counts.
    """

    def __init__(
        self,
        matrix: csr_matrix,
        K: SimplicialComplex2D,
        perm: PermutationSpec,
    ):
        self.matrix = matrix
        self.K = K
        self.perm = perm

    @property
    def n_basis(self) -> int:
        return self.matrix.shape[0]

    @property
    def is_real(self) -> bool:
        return not np.iscomplexobj(self.matrix.data)

    @property
    def dtype(self):
        return self.matrix.dtype

    def apply(self, x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
        return apply(self, x, out=out)


def build_U(
    K: SimplicialComplex2D,
    w: WeightAssignment,
    perm: PermutationSpec | None = None,
    validate: bool = True,
) -> WalkOperator:
    """Assemble U = S C as one sparse matrix, row blocks at a time.

    Row r of U is the group of the basis index the permutation sends to r;
    entries with value exactly 0.0 (suppressed reflection) are dropped.
    """
    if perm is None:
        perm = PermutationSpec.cyclic()
    B = K.n_basis
    groups = _directed_groups(K)
    if validate:
        report = validate_weight(K, w, _groups=groups)
        if not report.ok:
            raise ValueError(f"invalid weight: {_violation_summary(report)}")
    order, starts, sizes, group_id = groups
    del groups
    K._dedge_keys_cache = None  # grouping is done, drop the 6T-entry key array

    l_tab = perm.l_table()
    inv_l = np.empty(6, dtype=np.int64)
    inv_l[l_tab] = np.arange(6)

    values = np.asarray(w.values)
    sq = np.asarray(w.sq, dtype=np.float64)
    complex_w = np.iscomplexobj(values)
    data_dtype = np.complex128 if complex_w else np.float64

    # Pass 1: exact row counts.  The only entry ever dropped is a diagonal
    # whose reflection coefficient 2|w|^2 - 1 is exactly 0.0, so the count
    # is the group size minus that one slot; nonzero off-diagonal products
    # of unit-scale weights cannot round to zero.
    src_of_row = np.arange(B, dtype=np.int64)
    src_of_row -= src_of_row % 6
    src_of_row += np.tile(inv_l, B // 6)
    counts = sizes[group_id[src_of_row]].astype(np.int64, copy=True)
    counts -= sq[src_of_row] == 0.5

    indptr = np.zeros(B + 1, dtype=np.int64)
    np.cumsum(counts, out=indptr[1:])
    nnz = int(indptr[-1])
    del counts
    indices = np.empty(nnz, dtype=np.int32)
    data = np.empty(nnz, dtype=data_dtype)

    # Pass 2: fill the preallocated arrays chunk by chunk.
    for r0 in range(0, B, _ASSEMBLY_CHUNK):
        r1 = min(r0 + _ASSEMBLY_CHUNK, B)
        src = src_of_row[r0:r1]
        g = group_id[src]
        gsz = sizes[g]
        total = int(gsz.sum())
        cum = np.cumsum(gsz)
        row_entry = np.repeat(np.arange(r1 - r0, dtype=np.int64), gsz)
        intra = np.arange(total, dtype=np.int64) - np.repeat(cum - gsz, gsz)
        cols = order[np.repeat(starts[g], gsz) + intra]
        src_rep = src[row_entry]

        vals = (2.0 * np.conj(values[cols]) * values[src_rep]).astype(data_dtype, copy=False)
        equal = values[cols] == values[src_rep]
        if equal.any():
            vals[equal] = 2.0 * sq[cols[equal]]
        diag = cols == src_rep
        vals[diag] = 2.0 * sq[cols[diag]] - 1.0

        keep = ~(diag & (sq[cols] == 0.5))  # same predicate as the count pass
        p0, p1 = int(indptr[r0]), int(indptr[r1])
        indices[p0:p1] = cols[keep]
        data[p0:p1] = vals[keep]

    del order, starts, sizes, group_id, src_of_row
    if nnz < np.iinfo(np.int32).max:
        indptr = indptr.astype(np.int32)

    mat = csr_matrix((data, indices, indptr), shape=(B, B))
    mat.has_canonical_format = True  # columns ascending per row by construction
    return WalkOperator(mat, K, perm)


# -- application and evolution -------------------------------------------------

def _worker_count(n_rows: int) -> int:
    auto = os.cpu_count() or 1
    env = os.environ.get("SWALK_THREADS", "")
    if env.strip():
        try:
            cap = max(1, int(env))
        except ValueError:
            cap = auto
        auto = min(auto, cap)
    return max(1, min(auto, n_rows // 32768))


def _csr_matvec_into(mat: csr_matrix, x: np.ndarray, out: np.ndarray, r0: int, r1: int) -> None:
    """out[r0:r1] = mat[r0:r1] @ x without slicing the matrix."""
    from scipy.sparse import _sparsetools

    seg = out[r0:r1]
    seg[:] = 0
    _sparsetools.csr_matvec(
        r1 - r0,
        mat.shape[1],
        mat.indptr[r0 : r1 + 1],
        mat.indices,
        mat.data,
        x,
        seg,
    )


def apply(op: WalkOperator, x: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """One walk step.  Row blocks may be computed by separate workers; each
    output row is written once with a fixed summation order, so the result is
    bit-identical for any worker count."""
    mat = op.matrix
    B = mat.shape[0]
    x = np.asarray(x)
    if x.shape != (B,):
        raise ValueError(f"state has shape {x.shape}, operator needs ({B},)")
    result_dtype = np.result_type(mat.dtype, x.dtype)
    if x.dtype != result_dtype:
        x = x.astype(result_dtype)
    if out is None:
        out = np.empty(B, dtype=result_dtype)
    elif out.dtype != result_dtype or out.shape != (B,):
        raise ValueError("out buffer has wrong dtype or shape")

    workers = _worker_count(B)
    try:
        if workers <= 1:
            _csr_matvec_into(mat, x, out, 0, B)
        else:
            from concurrent.futures import ThreadPoolExecutor

            bounds = np.linspace(0, B, workers + 1, dtype=np.int64)
            with ThreadPoolExecutor(max_workers=workers) as pool:
                futures = [
                    pool.submit(_csr_matvec_into, mat, x, out, int(bounds[i]), int(bounds[i + 1]))
                    for i in range(workers)
                ]
                for f in futures:
                    f.result()
    except ImportError:
        out[:] = mat @ x
    return out


def evolve(
    op: WalkOperator,
    f0: np.ndarray,
    steps: int,
    snapshot_steps=(),
    callback=None,
    boundary_guard: np.ndarray | None = None,
):
    """Apply ``steps`` walk steps to f0.

    Returns (final_state, snapshots) where snapshots maps requested step
    numbers (step 0 = initial state) to copies of the state.  ``callback``
    receives (m, state) at every step including 0.  ``boundary_guard`` is an
    array of basis indices that must stay at amplitude exactly 0; any nonzero
    raises BoundaryTouchError.
    """
    if steps < 0:
        raise ValueError("steps must be >= 0")
    dtype = np.result_type(op.dtype, np.asarray(f0).dtype)
    f = np.array(f0, dtype=dtype, copy=True)
    buf = np.empty_like(f)
    want = {int(s) for s in snapshot_steps}
    snaps: dict[int, np.ndarray] = {}

    def record(m: int, state: np.ndarray) -> None:
        if boundary_guard is not None and np.any(state[boundary_guard]):
            raise BoundaryTouchError(m)
        if m in want:
            snaps[m] = state.copy()
        if callback is not None:
            callback(m, state)

    record(0, f)
    for m in range(1, steps + 1):
        apply(op, f, out=buf)
        f, buf = buf, f
        record(m, f)
    return f, snaps


# -- initial states ------------------------------------------------------------


def _check_triangle(K: SimplicialComplex2D, t: int) -> int:
    t = int(t)
    if not 0 <= t < K.n_triangles:
        raise ValueError(f"triangle {t} out of range")
    return t


def initial_state_symmetric(K: SimplicialComplex2D, triangle: int) -> np.ndarray:
    """1/sqrt(6) on all six orientations of the triangle."""
    t = _check_triangle(K, triangle)
    f = np.zeros(K.n_basis)
    f[6 * t : 6 * t + 6] = 1.0 / np.sqrt(6.0)
    return f


def initial_state_single(K: SimplicialComplex2D, triangle: int) -> np.ndarray:
    """The canonical orientation alone."""
    t = _check_triangle(K, triangle)
    f = np.zeros(K.n_basis)
    f[6 * t] = 1.0
    return f


def initial_state_pair_cyclic(K: SimplicialComplex2D, triangle: int) -> np.ndarray:
    """(e_[abc] + e_[bca]) / sqrt(2): the canonical orientation plus its rotation."""
    t = _check_triangle(K, triangle)
    f = np.zeros(K.n_basis)
    f[6 * t] = f[6 * t + 1] = 1.0 / np.sqrt(2.0)
    return f


def initial_state_pair_swap(K: SimplicialComplex2D, triangle: int) -> np.ndarray:
    """(e_[abc] + e_[acb]) / sqrt(2): the canonical orientation plus its reversal."""
    t = _check_triangle(K, triangle)
    f = np.zeros(K.n_basis)
    f[6 * t] = f[6 * t + 3] = 1.0 / np.sqrt(2.0)
    return f


# -- constituent operators (test support; never used to build U) ---------------


def _directed_edge_index(K: SimplicialComplex2D):
    keys = np.unique(K.dedge_keys())
    return keys


def face_operator(K: SimplicialComplex2D, w: WeightAssignment, i: int) -> csr_matrix:
    """The i-th face operator as a sparse matrix from triangle space to
    directed-edge space: e_s maps to conj(w(rot^i s)) e_{face_i(s)}.

    Rows are indexed by the sorted distinct directed edges.  Intended for
    property tests on small complexes.
    """
    if i not in (0, 1, 2):
        raise ValueError("face index must be 0, 1, or 2")
    cyc = PermutationSpec.cyclic()
    B = K.n_basis
    rot = np.arange(B, dtype=np.int64)
    for _ in range(i):
        rot = cyc.basis_permutation(B)[rot]
    keys = K.dedge_keys()
    edge_keys = _directed_edge_index(K)
    rows = np.searchsorted(edge_keys, keys[rot])  # face_i(s) = face_0(rot^i s)
    vals = np.conj(np.asarray(w.values)[rot])
    cols = np.arange(B, dtype=np.int64)
    return csr_matrix((vals, (rows, cols)), shape=(len(edge_keys), B))


def shift_operator(K: SimplicialComplex2D, perm: PermutationSpec) -> csr_matrix:
    B = K.n_basis
    pi = perm.basis_permutation(B)
    return csr_matrix(
        (np.ones(B), (pi, np.arange(B, dtype=np.int64))), shape=(B, B)
    )


def coin_operator(K: SimplicialComplex2D, w: WeightAssignment) -> csr_matrix:
    """2 d0* d0 - I, materialized densely enough for small-complex tests."""
    from scipy.sparse import identity

    d0 = face_operator(K, w, 0)
    return 2.0 * (d0.conjugate().T @ d0) - identity(K.n_basis, dtype=d0.dtype, format="csr")
