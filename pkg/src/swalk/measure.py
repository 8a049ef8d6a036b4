"""Observables over walk states and their CSV/SVG emitters.

The finding probability aggregates squared amplitudes over the six
orientations of each triangle.  Time averages and the radial variance are
computed streaming, one walk step at a time, so long runs never hold more
than two state vectors.

CSV files use shortest round-trip float formatting and fixed row order, so
re-running a configuration reproduces files byte for byte.
"""

from __future__ import annotations

import numpy as np

from .complexes import SimplicialComplex2D
from .walk import WalkOperator, evolve

__all__ = [
    "finding_probability",
    "time_averaged_probability",
    "radial_variance",
    "support",
    "write_probability_csv",
    "write_variance_csv",
    "write_timeavg_csv",
    "write_state_csv",
    "svg_heatmap",
]

NORM_TOL = 1e-9


def finding_probability(K: SimplicialComplex2D, f: np.ndarray, check_norm: bool = True) -> np.ndarray:
    """Probability per triangle: sum of |amplitude|^2 over the 6 orientations."""
    f = np.asarray(f)
    if f.shape != (K.n_basis,):
        raise ValueError(f"state has shape {f.shape}, expected ({K.n_basis},)")
    absq = np.abs(f) ** 2
    mu = absq.reshape(-1, 6).sum(axis=1)
    if check_norm:
        total = float(mu.sum())
        if abs(total - 1.0) > NORM_TOL:
            raise ValueError(f"state is not normalized: total probability {total!r}")
    return mu


def support(f: np.ndarray, tol: float = 1e-12):
    """Basis indices and triangle ids carrying amplitude above tol."""
    basis = np.flatnonzero(np.abs(np.asarray(f)) > tol)
    return basis, np.unique(basis // 6)


def time_averaged_probability(
    op: WalkOperator,
    f0: np.ndarray,
    T: int,
    target_triangles,
    record_at=None,
) -> dict[int, np.ndarray]:
    """Running averages (1/T') sum_{m<T'} mu_m at the targets.

    Returns {T': array over targets} for every requested T' <= T
    (default: just T itself).
    """
    if T < 1:
        raise ValueError("T must be >= 1")
    targets = np.asarray(list(target_triangles), dtype=np.int64)
    if targets.size and (targets.min() < 0 or targets.max() >= op.K.n_triangles):
        raise ValueError("target triangle out of range")
    record = sorted({int(t) for t in (record_at if record_at is not None else [T])})
    if record and (record[0] < 1 or record[-1] > T):
        raise ValueError("record points must lie in 1..T")
    record_set = set(record)

    idx = (6 * targets[:, None] + np.arange(6)).ravel()
    acc = np.zeros(len(targets))
    out: dict[int, np.ndarray] = {}

    def cb(m: int, f: np.ndarray) -> None:
        amps = f[idx]
        acc_step = (np.abs(amps) ** 2).reshape(-1, 6).sum(axis=1)
        acc[:] += acc_step
        if (m + 1) in record_set:
            out[m + 1] = acc / (m + 1)

    evolve(op, f0, T - 1, callback=cb)
    return out


def radial_variance(
    op: WalkOperator,
    f0: np.ndarray,
    n_max: int,
    mode: str = "standard",
    origin: np.ndarray | None = None,
    record_at=None,
) -> np.ndarray:
    """Radial variance series; rows (n, V_n, V_n / n^2).

    Each triangle is condensed onto its barycenter.  Radii are measured from
    ``origin`` (default: the probability-weighted barycenter of the initial
    distribution).  Mode ``standard`` computes sum r^2 mu - (sum r mu)^2;
    mode ``literal`` squares mu inside the second-moment sum instead.
    """
    if mode not in ("standard", "literal"):
        raise ValueError(f"unknown variance mode {mode!r}")
    if n_max < 1:
        raise ValueError("n_max must be >= 1")
    K = op.K
    bary = K.tri_barycenters()
    mu0 = finding_probability(K, np.asarray(f0))
    if origin is None:
        origin = mu0 @ bary
    r = np.hypot(bary[:, 0] - origin[0], bary[:, 1] - origin[1])
    r2 = r * r

    record = sorted({int(n) for n in (record_at if record_at is not None else range(1, n_max + 1))})
    if record and (record[0] < 1 or record[-1] > n_max):
        raise ValueError("record points must lie in 1..n_max")
    record_set = set(record)
    rows = np.empty((len(record), 3))
    pos = 0

    def cb(m: int, f: np.ndarray) -> None:
        nonlocal pos
        if m not in record_set:
            return
        mu = finding_probability(K, f, check_norm=False)
        m1 = float(r @ mu)
        if mode == "standard":
            m2 = float(r2 @ mu)
        else:
            m2 = float(r2 @ (mu * mu))
        v = m2 - m1 * m1
        rows[pos] = (m, v, v / (m * m))
        pos += 1

    evolve(op, f0, n_max, callback=cb)
    return rows


# -- emitters -------------------------------------------------------------------


def _fmt(x: float) -> str:
    return repr(float(x))


def write_probability_csv(path, K: SimplicialComplex2D, mu_by_step: dict[int, np.ndarray]) -> None:
    """Rows m,i,j,k,mu for every triangle with nonzero probability, ordered by
    step then triangle id."""
    if K.labels is None:
        raise ValueError("probability CSV needs grid labels")
    with open(path, "w", newline="\n") as fh:
        fh.write("m,i,j,k,mu\n")
        for m in sorted(mu_by_step):
            mu = mu_by_step[m]
            for t in np.flatnonzero(mu > 0.0):
                i, j, k = K.labels[t]
                fh.write(f"{m},{i},{j},{k},{_fmt(mu[t])}\n")


def write_variance_csv(path, rows: np.ndarray) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write("n,Vn,Vn_over_n2\n")
        for n, v, vn2 in rows:
            fh.write(f"{int(n)},{_fmt(v)},{_fmt(vn2)}\n")


def write_timeavg_csv(
    path, K: SimplicialComplex2D, results: dict[int, np.ndarray], target_triangles
) -> None:
    if K.labels is None:
        raise ValueError("time-average CSV needs grid labels")
    targets = list(target_triangles)
    with open(path, "w", newline="\n") as fh:
        fh.write("T,label,mu_bar\n")
        for T in sorted(results):
            vals = results[T]
            for t, v in zip(targets, vals):
                i, j, k = K.labels[t]
                fh.write(f"{T},{i}:{j}:{k},{_fmt(v)}\n")


def write_state_csv(path, K: SimplicialComplex2D, m: int, f: np.ndarray) -> None:
    """Amplitude rows m,i,j,k,l,re,im for every nonzero basis entry."""
    if K.labels is None:
        raise ValueError("state CSV needs grid labels")
    f = np.asarray(f)
    with open(path, "w", newline="\n") as fh:
        fh.write("m,i,j,k,l,re,im\n")
        for n in np.flatnonzero(f):
            t, l = divmod(int(n), 6)
            i, j, k = K.labels[t]
            amp = complex(f[n])
            fh.write(f"{m},{i},{j},{k},{l},{_fmt(amp.real)},{_fmt(amp.imag)}\n")


_COLOR_LO = (13, 8, 135)
_COLOR_HI = (240, 249, 33)


def _triangle_corners(K: SimplicialComplex2D, tris: np.ndarray):
    xs = K.coords[K.tri_vertices[tris], 0]
    ys = K.coords[K.tri_vertices[tris], 1]
    if K.x_period is not None:
        period = float(K.x_period)
        wrap = xs.max(axis=1) - xs.min(axis=1) > period / 2
        if wrap.any():
            rows = np.flatnonzero(wrap)
            xs = xs.copy()
            low = xs[rows] < period / 2
            xs[rows] += low * period
    return xs, ys


def svg_heatmap(path, K: SimplicialComplex2D, mu: np.ndarray, floor: float = 1e-12) -> None:
    """Fill each above-floor triangle by log10(mu) on a two-color ramp.

    Triangles below the floor are left as background, which keeps files small
    when the support is a tiny fraction of a large complex.
    """
    mu = np.asarray(mu)
    tris = np.flatnonzero(mu >= floor)
    log_lo = np.log10(floor)
    log_hi = float(np.log10(mu.max())) if len(tris) else log_lo + 1.0
    if log_hi <= log_lo:
        log_hi = log_lo + 1.0

    scale = 10.0
    x_all = K.coords[:, 0]
    y_all = K.coords[:, 1]
    x_min, x_max = float(x_all.min()), float(x_all.max())
    if K.x_period is not None:
        x_max = max(x_max, x_min + float(K.x_period))
    y_min, y_max = float(y_all.min()), float(y_all.max())
    width = (x_max - x_min + 1.0) * scale
    height = (y_max - y_min + 1.0) * scale

    def px(x: float) -> float:
        return (x - x_min + 0.5) * scale

    def py(y: float) -> float:
        return (y_max - y + 0.5) * scale

    with open(path, "w", newline="\n") as fh:
        fh.write(
            f'<svg xmlns="http://www.w3.org/2000/svg" width="{width:.0f}" '
            f'height="{height:.0f}" viewBox="0 0 {width:.2f} {height:.2f}">\n'
        )
        fh.write(f'<rect width="{width:.2f}" height="{height:.2f}" fill="#1a1a2e"/>\n')
        if len(tris):
            xs, ys = _triangle_corners(K, tris)
            frac = (np.log10(np.maximum(mu[tris], floor)) - log_lo) / (log_hi - log_lo)
            frac = np.clip(frac, 0.0, 1.0)
            for row in range(len(tris)):
                t_val = frac[row]
                rgb = tuple(
                    int(round(lo + t_val * (hi - lo))) for lo, hi in zip(_COLOR_LO, _COLOR_HI)
                )
                pts = " ".join(
                    f"{px(xs[row, c]):.2f},{py(ys[row, c]):.2f}" for c in range(3)
                )
                fh.write(f'<polygon points="{pts}" fill="rgb{rgb}"/>\n')
        fh.write("</svg>\n")
