"""Command-line experiments: blow-up tables, conjugate times, sub-Laplacian.

Four subcommands:

* ``blowup``: scalar model blow-up times and upper bounds, optionally
  swept over kappa_a and cross-checked against the 2x2 Jacobi system;
* ``conjugate``: quaternionic Hopf conjugate times against both model
  bounds, single covector or a sweep over the vertical momentum norm;
* ``laplacian``: the radial sub-Laplacian trace formula against the
  model right-hand side on a radius grid;
* ``verify-all``: the full deterministic verification suite.

Output goes to CSV (default) or JSON. CSV files start with ``#`` metadata
lines (tool version, command, configuration echo, seed) followed by a
single header; rows are ordered by input index regardless of --jobs, all
floats are written with repr so identical runs produce identical bytes,
and every row carries the tolerance it was computed with. Timing is
printed to stdout only, never serialized. Exit status: 0 on success, 1
when a --verify comparison or a verification check fails, 2 on usage
errors.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
from typing import Sequence

import numpy as np

from . import __version__
from .checks import CheckResult, run_all
from .hopf import conjugate_time, sublaplacian_along
from .models import (
    DomainError,
    blowup_time_kab,
    blowup_time_kc,
    upper_bound_kab,
)
from .riccati import first_blowup, integrate_jacobi, wedge_det_sign_changes, wedge_first_zero
from .structure import typeI_pair

OUT_DIR_ENV = "FATCOMP_OUT_DIR"


# ----------------------------------------------------------------------
# argument parsing
# ----------------------------------------------------------------------

def _triple(text: str) -> tuple[float, float, float]:
    parts = text.split(",")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(
            f"expected three comma-separated values, got {text!r}"
        )
    try:
        return tuple(float(p) for p in parts)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def _grid(text: str) -> list[float]:
    parts = text.split(":")
    if len(parts) != 3:
        raise argparse.ArgumentTypeError(f"expected lo:hi:n, got {text!r}")
    try:
        lo, hi, n = float(parts[0]), float(parts[1]), int(parts[2])
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None
    if n < 1:
        raise argparse.ArgumentTypeError("grid needs at least one point")
    return [float(x) for x in np.linspace(lo, hi, n)]


def _add_common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--out", help="output file path (default: out dir / <command>.<format>)")
    sp.add_argument("--format", choices=("csv", "json"), default="csv")
    sp.add_argument("--tol", type=float, default=1e-9, help="numeric tolerance recorded and enforced per row")
    sp.add_argument("--jobs", type=int, default=1, help="worker processes for row-parallel commands")
    sp.add_argument("--seed", type=int, default=42, help="seed for randomized content")
    sp.add_argument("--verify", action="store_true", help="enforce the per-row comparisons; exit 1 on failure")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fatcomp",
        description="comparison experiments for fat sub-Riemannian structures",
    )
    parser.add_argument("--version", action="version", version=f"fatcomp {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_blow = sub.add_parser("blowup", help="scalar model blow-up times and bounds")
    p_blow.add_argument("--ka", type=float, help="two-frequency constant kappa_a")
    p_blow.add_argument("--kb", type=float, help="two-frequency constant kappa_b")
    p_blow.add_argument("--kc", type=float, help="single-frequency constant kappa_c")
    p_blow.add_argument("--sweep", type=_grid, metavar="LO:HI:N", help="sweep kappa_a (requires --kb)")
    p_blow.add_argument("--tmax", type=float, default=1000.0, help="horizon for verifying the absence of a blow-up")
    _add_common(p_blow)
    p_blow.set_defaults(func=cmd_blowup)

    p_conj = sub.add_parser("conjugate", help="quaternionic Hopf conjugate times")
    p_conj.add_argument("--d", type=int, default=2, help="quaternionic dimension of the base")
    p_conj.add_argument("--v", type=_triple, metavar="VI,VJ,VK", help="vertical momentum components")
    p_conj.add_argument("--vnorm", type=float, help="vertical momentum norm, direction (1,0,0)")
    p_conj.add_argument("--sweep", type=_grid, metavar="LO:HI:N", help="sweep the vertical momentum norm")
    _add_common(p_conj)
    p_conj.set_defaults(func=cmd_conjugate)

    p_lap = sub.add_parser("laplacian", help="radial sub-Laplacian against the model sum")
    p_lap.add_argument("--d", type=int, default=2, help="quaternionic dimension of the base")
    p_lap.add_argument("--v", type=_triple, metavar="VI,VJ,VK", help="vertical momentum components")
    p_lap.add_argument("--vnorm", type=float, help="vertical momentum norm, direction (1,0,0)")
    p_lap.add_argument(
        "--rgrid",
        type=_grid,
        metavar="LO:HI:N",
        default="0.1:3.0:20",
        help="radius grid; must end below the conjugate time",
    )
    _add_common(p_lap)
    p_lap.set_defaults(func=cmd_laplacian)

    p_ver = sub.add_parser("verify-all", help="run the full verification suite")
    _add_common(p_ver)
    p_ver.set_defaults(func=cmd_verify_all)

    return parser


# ----------------------------------------------------------------------
# serialization
# ----------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def _config_echo(args: argparse.Namespace) -> str:
    # jobs and out are execution mechanics: they change neither row content
    # nor ordering, and echoing them would break byte-identical reruns
    skip = {"func", "command", "jobs", "out"}
    items = []
    for key in sorted(vars(args)):
        if key in skip:
            continue
        value = getattr(args, key)
        if isinstance(value, list):
            value = ",".join(_fmt(v) for v in value)
        items.append(f"{key}={_fmt(value)}")
    return " ".join(items)


def _out_path(args: argparse.Namespace) -> str:
    if args.out:
        return args.out
    out_dir = os.environ.get(OUT_DIR_ENV, ".")
    return os.path.join(out_dir, f"{args.command}.{args.format}")


def _write_rows(args: argparse.Namespace, header: list[str], rows: list[dict]) -> str:
    path = _out_path(args)
    parent = os.path.dirname(path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    meta = {
        "tool": f"fatcomp {__version__}",
        "command": args.command,
        "config": _config_echo(args),
        "seed": args.seed,
    }
    if args.format == "csv":
        with open(path, "w", newline="") as f:
            for key, value in meta.items():
                f.write(f"# {key}: {value}\n")
            writer = csv.writer(f, lineterminator="\n")
            writer.writerow(header)
            for row in rows:
                writer.writerow([_fmt(row.get(col)) for col in header])
    else:
        def clean(v):
            if isinstance(v, float) and not math.isfinite(v):
                return repr(v)
            return v

        payload = {
            "meta": meta,
            "rows": [{col: clean(row.get(col)) for col in header} for row in rows],
        }
        with open(path, "w") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
            f.write("\n")
    return path


# ----------------------------------------------------------------------
# blowup
# ----------------------------------------------------------------------

def _blowup_row_kab(idx: int, ka: float, kb: float, args) -> dict:
    tbar = blowup_time_kab(ka, kb)
    row = {
        "index": idx,
        "model": "two-frequency",
        "kappa_a": ka,
        "kappa_b": kb,
        "kappa_c": None,
        "tbar": tbar.time,
        "upper_bound": upper_bound_kab(ka, kb),
        "finite": tbar.is_finite,
        "tol": args.tol,
    }
    if args.verify:
        a_I, b_I = typeI_pair()
        Q = np.diag([ka, kb])
        if tbar.is_finite:
            hit = wedge_first_zero(a_I, b_I, Q, 1.05 * tbar.time + 0.1)
            row["check_tbar"] = hit.time
            row["check_err"] = abs(hit.time - tbar.time)
            row["check_ok"] = row["check_err"] <= args.tol
        else:
            changes, _ = wedge_det_sign_changes(a_I, b_I, Q, args.tmax)
            row["check_tbar"] = None
            row["check_err"] = None
            row["check_ok"] = changes == 0
    return row


def _blowup_row_kc(idx: int, kc: float, args) -> dict:
    tbar = blowup_time_kc(kc)
    row = {
        "index": idx,
        "model": "single-frequency",
        "kappa_a": None,
        "kappa_b": None,
        "kappa_c": kc,
        "tbar": tbar.time,
        "upper_bound": None,
        "finite": tbar.is_finite,
        "tol": args.tol,
    }
    if args.verify:
        A, B, Q = np.zeros((1, 1)), np.eye(1), np.array([[kc]])
        if tbar.is_finite:
            sol = integrate_jacobi(A, B, Q, 1.1 * tbar.time, tol=1e-12)
            hit = first_blowup(sol, t_min=0.01 * sol.t_max, tol=1e-12)
            row["check_tbar"] = hit.time
            row["check_err"] = abs(hit.time - tbar.time)
            row["check_ok"] = row["check_err"] <= args.tol
        else:
            # keep the hyperbolic mode below the overflow threshold
            horizon = min(args.tmax, 300.0 / max(1.0, math.sqrt(abs(kc))))
            sol = integrate_jacobi(A, B, Q, horizon, tol=1e-12)
            hit = first_blowup(sol, t_min=0.01 * sol.t_max, tol=1e-12)
            row["check_tbar"] = None
            row["check_err"] = None
            row["check_ok"] = not hit.is_finite
    return row


def cmd_blowup(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    rows: list[dict] = []
    if args.sweep is not None:
        if args.kb is None:
            parser.error("--sweep sweeps kappa_a and requires --kb")
        if args.ka is not None:
            parser.error("--sweep replaces --ka")
        for idx, ka in enumerate(args.sweep):
            rows.append(_blowup_row_kab(idx, ka, args.kb, args))
    else:
        if (args.ka is None) != (args.kb is None):
            parser.error("--ka and --kb must be given together")
        if args.ka is None and args.kc is None:
            parser.error("nothing to compute: give --ka/--kb, --kc, or --sweep")
        idx = 0
        if args.ka is not None:
            rows.append(_blowup_row_kab(idx, args.ka, args.kb, args))
            idx += 1
        if args.kc is not None:
            rows.append(_blowup_row_kc(idx, args.kc, args))

    header = [
        "index", "model", "kappa_a", "kappa_b", "kappa_c",
        "tbar", "upper_bound", "finite", "tol",
    ]
    if args.verify:
        header += ["check_tbar", "check_err", "check_ok"]
    path = _write_rows(args, header, rows)
    print(f"wrote {len(rows)} rows to {path}")
    if args.verify:
        bad = [r["index"] for r in rows if not r["check_ok"]]
        if bad:
            print(f"verification FAILED on rows {bad}", file=sys.stderr)
            return 1
        print("verification passed on all rows")
    return 0


# ----------------------------------------------------------------------
# conjugate
# ----------------------------------------------------------------------

def _conjugate_worker(task: tuple[int, int, tuple[float, float, float], float]) -> dict:
    idx, d, v, tol = task
    res = conjugate_time(d, np.array(v), tol=tol)
    row = {
        "index": idx,
        "d": d,
        "v_I": v[0],
        "v_J": v[1],
        "v_K": v[2],
        "v_norm": math.sqrt(v[0] ** 2 + v[1] ** 2 + v[2] ** 2),
        "t_star": res.t_star,
        "bound_kab": res.bound_kab.time,
        "margin_kab": res.margin_kab,
        "tol": tol,
    }
    if res.bound_kc is not None:
        row["bound_kc"] = res.bound_kc
        row["margin_kc"] = res.margin_kc
    return row


def _momenta_from_args(args, parser) -> list[tuple[float, float, float]]:
    given = [x for x in (args.v, args.vnorm, args.sweep if hasattr(args, "sweep") else None) if x is not None]
    if len(given) > 1:
        parser.error("give only one of --v, --vnorm, --sweep")
    if args.v is not None:
        return [args.v]
    if args.vnorm is not None:
        return [(args.vnorm, 0.0, 0.0)]
    if getattr(args, "sweep", None) is not None:
        return [(x, 0.0, 0.0) for x in args.sweep]
    return [(0.0, 0.0, 0.0)]


def cmd_conjugate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.d < 1:
        parser.error("--d must be >= 1")
    momenta = _momenta_from_args(args, parser)
    tasks = [(i, args.d, v, args.tol) for i, v in enumerate(momenta)]
    if args.jobs > 1 and len(tasks) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=args.jobs) as ex:
            rows = list(ex.map(_conjugate_worker, tasks))
    else:
        rows = [_conjugate_worker(t) for t in tasks]

    header = [
        "index", "d", "v_I", "v_J", "v_K", "v_norm",
        "t_star", "bound_kab", "margin_kab",
    ]
    if args.d >= 2:
        header += ["bound_kc", "margin_kc"]
    header += ["tol"]
    path = _write_rows(args, header, rows)
    print(f"wrote {len(rows)} rows to {path}")
    if args.verify:
        bad = []
        for r in rows:
            margins = [r["margin_kab"]]
            if "margin_kc" in r:
                margins.append(r["margin_kc"])
            if args.d == 1:
                margins.append(math.pi - r["t_star"])
            if min(margins) < -args.tol:
                bad.append(r["index"])
        if bad:
            print(f"bound verification FAILED on rows {bad}", file=sys.stderr)
            return 1
        print("bounds verified on all rows")
    return 0


# ----------------------------------------------------------------------
# laplacian
# ----------------------------------------------------------------------

def cmd_laplacian(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    if args.d < 1:
        parser.error("--d must be >= 1")
    momenta = _momenta_from_args(args, parser)
    if len(momenta) != 1:
        parser.error("laplacian takes a single vertical momentum")
    v = np.array(momenta[0])
    rgrid = args.rgrid if isinstance(args.rgrid, list) else _grid(args.rgrid)
    rep = sublaplacian_along(args.d, v, rgrid)
    rows = [
        {
            "index": i,
            "d": args.d,
            "v_norm": float(np.linalg.norm(v)),
            "t_star": rep.t_star,
            "r": float(rep.r[i]),
            "laplacian": float(rep.lhs[i]),
            "model_rhs": float(rep.rhs[i]),
            "margin": float(rep.margin[i]),
            "r_times_laplacian": float(rep.r_times_lhs[i]),
            "tol": args.tol,
        }
        for i in range(len(rep.r))
    ]
    header = [
        "index", "d", "v_norm", "t_star", "r",
        "laplacian", "model_rhs", "margin", "r_times_laplacian", "tol",
    ]
    path = _write_rows(args, header, rows)
    print(f"wrote {len(rows)} rows to {path}")
    if args.verify:
        bad = [r["index"] for r in rows if r["margin"] < -args.tol]
        if bad:
            print(f"margin verification FAILED on rows {bad}", file=sys.stderr)
            return 1
        print("margins verified on all rows")
    return 0


# ----------------------------------------------------------------------
# verify-all
# ----------------------------------------------------------------------

def cmd_verify_all(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    results: list[CheckResult] = run_all(seed=args.seed, jobs=max(1, args.jobs))
    rows = [
        {
            "index": i,
            "name": r.name,
            "passed": r.passed,
            "worst": r.worst,
            "tol": r.tol,
            "n_cases": r.n_cases,
            "detail": r.detail,
        }
        for i, r in enumerate(results)
    ]
    header = ["index", "name", "passed", "worst", "tol", "n_cases", "detail"]
    path = _write_rows(args, header, rows)
    width = max(len(r.name) for r in results)
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        print(f"{r.name:<{width}}  {status}  worst={r.worst!r}  tol={r.tol:g}  [{r.elapsed:.2f}s]")
    n_pass = sum(r.passed for r in results)
    print(f"{n_pass}/{len(results)} checks passed; rows written to {path}")
    return 0 if n_pass == len(results) else 1


# ----------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------

def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args, parser)
    except DomainError as exc:
        print(f"domain error: {exc}", file=sys.stderr)
        return 2
    except (RuntimeError, FloatingPointError) as exc:
        print(f"computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
