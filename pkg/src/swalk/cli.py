"""Command-line front end: build complexes, run experiments, inspect them.

Subcommands
-----------
build            emit the complex description as JSON
run              evolve a walk and write CSV/SVG artifacts to --out-dir
homology         print Betti numbers and the Euler characteristic
classify         print tether/interactivity verdicts as JSON lines
validate-weight  check a weight scheme against the unit-sum facet rule

Exit codes: 0 success, 2 invalid configuration, 3 wavefront touched the
boundary of a finite patch.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

import numpy as np

from . import classify as _classify
from . import complexes as _cx
from . import homology as _hm
from . import measure as _ms
from . import walk as _wk

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BOUNDARY = 3

_COMPLEX_KINDS = (
    "grid",
    "cylinder",
    "cylinder_tetra",
    "moebius",
    "two_triangles",
    "tether_example",
)
_WEIGHT_SCHEMES = ("uniform", "lower_upper", "grover", "moebius", "custom_file")
_INITIAL_KINDS = ("symmetric", "single", "pair_cyclic", "pair_swap")
_OBSERVABLES = ("probability", "variance", "timeavg")


class ConfigError(ValueError):
    pass


def _parse_label(text: str) -> list[int]:
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"label must look like i:j:k, got {text!r}")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"label must be three integers, got {text!r}") from None


def _parse_attach(text: str) -> list[int]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ConfigError(f"attach must look like i:j, got {text!r}")
    try:
        return [int(p) for p in parts]
    except ValueError:
        raise ConfigError(f"attach must be two integers, got {text!r}") from None


def _build_complex(cfg: dict) -> _cx.SimplicialComplex2D:
    kind = cfg.get("kind")
    if kind not in _COMPLEX_KINDS:
        raise ConfigError(f"complex kind must be one of {_COMPLEX_KINDS}, got {kind!r}")
    R, N = cfg.get("R"), cfg.get("N")
    try:
        if kind == "grid":
            if N is None:
                raise ConfigError("grid needs --N")
            return _cx.build_grid_patch(int(N))
        if kind == "cylinder":
            if R is None or N is None:
                raise ConfigError("cylinder needs --R and --N")
            return _cx.build_cylinder(int(R), int(N))
        if kind == "cylinder_tetra":
            if R is None or N is None:
                raise ConfigError("cylinder_tetra needs --R and --N")
            attach = cfg.get("attach")
            return _cx.build_cylinder_with_tetrahedron(
                int(R), int(N), tuple(attach) if attach is not None else None
            )
        if kind == "moebius":
            if R is None or N is None:
                raise ConfigError("moebius needs --R and --N")
            return _cx.build_moebius(int(R), int(N))
        if kind == "two_triangles":
            return _cx.build_two_triangles()
        return _cx.build_tether_example()
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _default_label(K: _cx.SimplicialComplex2D, cfg: dict) -> list[int]:
    kind = cfg["kind"]
    if kind == "grid":
        n = int(cfg["N"])
        return [n // 2, n // 2, 0]
    if kind in ("cylinder", "cylinder_tetra", "moebius"):
        return [int(cfg["R"]) // 2, int(cfg["N"]) // 2, 0]
    return [0, 0, 0]


def _triangle_from_label(K: _cx.SimplicialComplex2D, label) -> int:
    try:
        return K.triangle_of_label(*label)
    except KeyError:
        raise ConfigError(f"no triangle labeled {tuple(label)}") from None


def _build_weight(K, wcfg: dict, check: bool = True) -> _wk.WeightAssignment:
    scheme = wcfg.get("scheme")
    if scheme not in _WEIGHT_SCHEMES:
        raise ConfigError(f"weight scheme must be one of {_WEIGHT_SCHEMES}, got {scheme!r}")
    try:
        if scheme == "uniform":
            return _wk.weight_uniform(K, check=check)
        if scheme == "lower_upper":
            p = wcfg.get("p")
            if p is None:
                raise ConfigError("lower_upper weight needs --p")
            return _wk.weight_lower_upper(K, float(p), check=check)
        if scheme == "grover":
            return _wk.weight_grover(K)
        if scheme == "moebius":
            return _wk.weight_moebius(K, check=check)
        path = wcfg.get("file")
        if not path:
            raise ConfigError("custom_file weight needs --weight-file")
        return _load_weight_file(K, path, check=check)
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


def _load_weight_file(K, path: str, check: bool = True) -> _wk.WeightAssignment:
    """CSV with header n,re,im: one amplitude per directed basis index."""
    try:
        raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    except OSError as exc:
        raise ConfigError(f"cannot read weight file: {exc}") from None
    if raw.shape[1] != 3:
        raise ConfigError("weight file needs columns n,re,im")
    values = np.zeros(K.n_basis, dtype=np.complex128)
    n = raw[:, 0].astype(np.int64)
    if len(np.unique(n)) != len(n) or n.min() < 0 or n.max() >= K.n_basis:
        raise ConfigError("weight file indices must be unique and in range")
    values[n] = raw[:, 1] + 1j * raw[:, 2]
    if np.all(values.imag == 0.0):
        values = values.real.copy()
    return _wk.weight_from_values(K, values, check=check)


# -- run ------------------------------------------------------------------------


def _resolve_run_config(args) -> dict:
    cfg: dict = {}
    if args.config:
        try:
            with open(args.config) as fh:
                cfg = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot load config: {exc}") from None

    complex_cfg = dict(cfg.get("complex", {}))
    if args.complex is not None:
        complex_cfg["kind"] = args.complex
    if args.R is not None:
        complex_cfg["R"] = args.R
    if args.N is not None:
        complex_cfg["N"] = args.N
    if args.attach is not None:
        complex_cfg["attach"] = _parse_attach(args.attach)
    complex_cfg.setdefault("R", None)
    complex_cfg.setdefault("N", None)
    complex_cfg.setdefault("attach", None)

    weight_cfg = dict(cfg.get("weight", {}))
    if args.weight is not None:
        weight_cfg["scheme"] = args.weight
    if args.p is not None:
        weight_cfg["p"] = args.p
    if args.weight_file is not None:
        weight_cfg["file"] = args.weight_file
    weight_cfg.setdefault("scheme", "uniform")
    weight_cfg.setdefault("p", None)
    weight_cfg.setdefault("file", None)

    initial_cfg = dict(cfg.get("initial", {}))
    if args.initial is not None:
        initial_cfg["kind"] = args.initial
    if args.label is not None:
        initial_cfg["label"] = _parse_label(args.label)
    initial_cfg.setdefault("kind", "symmetric")

    resolved = {
        "complex": complex_cfg,
        "weight": weight_cfg,
        "initial": initial_cfg,
        "steps": args.steps if args.steps is not None else cfg.get("steps", 0),
        "snapshots": args.snapshots if args.snapshots is not None else cfg.get("snapshots", 0),
        "observables": (
            args.observables.split(",") if args.observables else cfg.get("observables", ["probability"])
        ),
        "variance_mode": (
            args.variance_mode if args.variance_mode is not None else cfg.get("variance_mode", "standard")
        ),
        "targets": (
            [_parse_label(t) for t in args.targets.split(",")]
            if args.targets
            else cfg.get("targets", [])
        ),
        "seed": args.seed if args.seed is not None else cfg.get("seed", 0),
        "permutation": (
            args.permutation if args.permutation is not None else cfg.get("permutation", "bca")
        ),
    }
    if resolved["steps"] < 0:
        raise ConfigError("steps must be >= 0")
    if resolved["snapshots"] < 0:
        raise ConfigError("snapshots cadence must be >= 0")
    if resolved["variance_mode"] not in ("standard", "literal"):
        raise ConfigError("variance mode must be standard or literal")
    if resolved["initial"]["kind"] not in _INITIAL_KINDS:
        raise ConfigError(f"initial kind must be one of {_INITIAL_KINDS}")
    for obs in resolved["observables"]:
        if obs not in _OBSERVABLES:
            raise ConfigError(f"unknown observable {obs!r}")
    return resolved


_INITIAL_BUILDERS = {
    "symmetric": _wk.initial_state_symmetric,
    "single": _wk.initial_state_single,
    "pair_cyclic": _wk.initial_state_pair_cyclic,
    "pair_swap": _wk.initial_state_pair_swap,
}


def _cmd_run(args) -> int:
    cfg = _resolve_run_config(args)
    K = _build_complex(cfg["complex"])
    if "label" not in cfg["initial"]:
        cfg["initial"]["label"] = _default_label(K, cfg["complex"])
    t0 = _triangle_from_label(K, cfg["initial"]["label"])
    target_tris = [_triangle_from_label(K, lab) for lab in cfg["targets"]]
    if not target_tris:
        target_tris = [t0]
        cfg["targets"] = [cfg["initial"]["label"]]

    w = _build_weight(K, cfg["weight"])
    perm = _wk.PermutationSpec.from_word(cfg["permutation"])
    op = _wk.build_U(K, w, perm, validate=False)
    f0 = _INITIAL_BUILDERS[cfg["initial"]["kind"]](K, t0)

    steps = int(cfg["steps"])
    cadence = int(cfg["snapshots"])
    snap_steps = {steps}
    if cadence > 0:
        snap_steps.update(range(0, steps + 1, cadence))
    if steps == 0:
        snap_steps = {0}
    snap_steps = sorted(snap_steps)

    observables = cfg["observables"]
    out_dir = args.out_dir
    os.makedirs(out_dir, exist_ok=True)

    # streaming accumulators
    mu_by_step: dict[int, np.ndarray] = {}
    snap_set = set(snap_steps)
    want_prob = "probability" in observables
    want_var = "variance" in observables and steps >= 1
    want_avg = "timeavg" in observables and steps >= 1

    bary = K.tri_barycenters() if want_var else None
    if want_var:
        mu0 = _ms.finding_probability(K, f0)
        origin = mu0 @ bary
        radius = np.hypot(bary[:, 0] - origin[0], bary[:, 1] - origin[1])
        radius2 = radius * radius
        var_rows = []
    avg_T = sorted(
        {m for m in snap_steps if m >= 1} | {steps}
    ) if want_avg else []
    if want_avg:
        avg_idx = (6 * np.asarray(target_tris)[:, None] + np.arange(6)).ravel()
        avg_acc = np.zeros(len(target_tris))
        avg_out: dict[int, np.ndarray] = {}

    literal = cfg["variance_mode"] == "literal"

    def cb(m: int, f: np.ndarray) -> None:
        mu = None
        if (want_prob or args.emit_state) and m in snap_set:
            mu = _ms.finding_probability(K, f, check_norm=False)
            mu_by_step[m] = mu
            if args.emit_state:
                _ms.write_state_csv(os.path.join(out_dir, f"state_{m}.csv"), K, m, f)
        if want_var and m >= 1:
            mu_v = mu if mu is not None else _ms.finding_probability(K, f, check_norm=False)
            m1 = float(radius @ mu_v)
            m2 = float(radius2 @ (mu_v * mu_v)) if literal else float(radius2 @ mu_v)
            v = m2 - m1 * m1
            var_rows.append((m, v, v / (m * m)))
        if want_avg and m < steps:
            amps = f[avg_idx]
            avg_acc[:] += (np.abs(amps) ** 2).reshape(-1, 6).sum(axis=1)
            if (m + 1) in avg_T:
                avg_out[m + 1] = avg_acc / (m + 1)

    guard = K.boundary_basis_indices() if cfg["complex"]["kind"] == "grid" else None
    try:
        _wk.evolve(op, f0, steps, callback=cb, boundary_guard=guard)
    except _wk.BoundaryTouchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_BOUNDARY

    with open(os.path.join(out_dir, "config.json"), "w", newline="\n") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")
    if want_prob:
        _ms.write_probability_csv(os.path.join(out_dir, "probability.csv"), K, mu_by_step)
        for m in snap_steps:
            _ms.svg_heatmap(os.path.join(out_dir, f"heatmap_{m}.svg"), K, mu_by_step[m])
    if want_var:
        _ms.write_variance_csv(os.path.join(out_dir, "variance.csv"), np.array(var_rows))
    if want_avg:
        _ms.write_timeavg_csv(os.path.join(out_dir, "timeavg.csv"), K, avg_out, target_tris)
    return EXIT_OK


# -- other subcommands ------------------------------------------------------------


def _complex_cfg_from_args(args) -> dict:
    return {
        "kind": args.complex,
        "R": args.R,
        "N": args.N,
        "attach": _parse_attach(args.attach) if args.attach else None,
    }


def _cmd_build(args) -> int:
    K = _build_complex(_complex_cfg_from_args(args))
    doc = K.export_json()
    if args.emit and args.emit != "-":
        with open(args.emit, "w", newline="\n") as fh:
            fh.write(doc)
    else:
        sys.stdout.write(doc)
    return EXIT_OK


def _cmd_homology(args) -> int:
    K = _build_complex(_complex_cfg_from_args(args))
    b = _hm.betti_numbers(K)
    chi = _hm.euler_characteristic(K)
    print(f"b0={b.b0},b1={b.b1},b2={b.b2},chi={chi}")
    return EXIT_OK


def _cmd_classify(args) -> int:
    cfg = _complex_cfg_from_args(args)
    K = _build_complex(cfg)
    perm = _wk.PermutationSpec.from_word(args.permutation)
    label = _parse_label(args.start) if args.start else _default_label(K, cfg)
    t0 = _triangle_from_label(K, label)
    res = _classify.tethered_check(K, perm, 6 * t0, m_max=args.m_max)
    print(
        json.dumps(
            {
                "check": "tethered",
                "permutation": args.permutation,
                "start": list(label),
                "verdict": res.verdict,
                "anchors": sorted(res.anchors),
                "stabilized_at": res.stabilized_at,
            },
            sort_keys=True,
        )
    )
    w = _build_weight(K, {"scheme": args.weight, "p": args.p, "file": args.weight_file})
    op = _wk.build_U(K, w, perm, validate=False)
    print(
        json.dumps(
            {
                "check": "noninteractive",
                "weight": args.weight,
                "value": _classify.is_noninteractive(op),
            },
            sort_keys=True,
        )
    )
    return EXIT_OK


def _cmd_validate_weight(args) -> int:
    K = _build_complex(_complex_cfg_from_args(args))
    w = _build_weight(
        K, {"scheme": args.weight, "p": args.p, "file": args.weight_file}, check=False
    )
    report = _wk.validate_weight(K, w)
    doc = {
        "ok": report.ok,
        "zero_weights": [int(n) for n in report.zero_weight_indices],
        "facet_violations": report.facet_violations,
        "violation_count": len(report.facet_violations),
    }
    print(json.dumps(doc, sort_keys=True))
    return EXIT_OK if report.ok else EXIT_CONFIG


def _add_complex_flags(p: argparse.ArgumentParser, required: bool = True) -> None:
    p.add_argument("--complex", choices=_COMPLEX_KINDS, required=required,
                   help="complex kind")
    p.add_argument("--R", type=int, help="circumference in squares (periodic kinds)")
    p.add_argument("--N", type=int, help="height in squares (grid: side length)")
    p.add_argument("--attach", help="tetrahedron base label i:j (cylinder_tetra)")


def _add_weight_flags(p: argparse.ArgumentParser, default=None) -> None:
    p.add_argument("--weight", choices=_WEIGHT_SCHEMES, default=default,
                   help="weight scheme")
    p.add_argument("--p", type=float, help="lower-triangle squared modulus for lower_upper")
    p.add_argument("--weight-file", help="CSV n,re,im for custom_file weights")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="swalk",
        description="Quantum walks on 2-dimensional simplicial complexes.",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("build", help="emit the complex description as JSON")
    _add_complex_flags(p)
    p.add_argument("--emit", nargs="?", const="-", default="-",
                   help="output path (default: stdout)")
    p.set_defaults(func=_cmd_build)

    p = sub.add_parser("run", help="run an experiment and write artifacts")
    _add_complex_flags(p, required=False)
    _add_weight_flags(p)
    p.add_argument("--config", help="JSON config file; flags override its fields")
    p.add_argument("--initial", choices=_INITIAL_KINDS, help="initial state kind")
    p.add_argument("--label", help="initial triangle label i:j:k")
    p.add_argument("--steps", type=int, help="number of walk steps")
    p.add_argument("--snapshots", type=int, help="snapshot cadence (0: final only)")
    p.add_argument("--variance-mode", choices=("standard", "literal"))
    p.add_argument("--targets", help="comma-separated labels i:j:k for time averages")
    p.add_argument("--observables", help="comma-separated subset of probability,variance,timeavg")
    p.add_argument("--permutation", help="vertex permutation word (default bca)")
    p.add_argument("--seed", type=int, help="seed recorded in the config echo")
    p.add_argument("--emit-state", action="store_true", help="write state_<m>.csv per snapshot")
    p.add_argument("--out-dir", required=True, help="artifact directory")
    p.set_defaults(func=_cmd_run)

    p = sub.add_parser("homology", help="print Betti numbers and Euler characteristic")
    _add_complex_flags(p)
    p.set_defaults(func=_cmd_homology)

    p = sub.add_parser("classify", help="tether and interactivity verdicts")
    _add_complex_flags(p)
    _add_weight_flags(p, default="grover")
    p.add_argument("--permutation", default="bca", help="vertex permutation word")
    p.add_argument("--start", help="start triangle label i:j:k")
    p.add_argument("--m-max", type=int, default=None, help="step bound for the reachability check")
    p.set_defaults(func=_cmd_classify)

    p = sub.add_parser("validate-weight", help="check a weight against the unit-sum rule")
    _add_complex_flags(p)
    _add_weight_flags(p, default="uniform")
    p.set_defaults(func=_cmd_validate_weight)

    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
