"""Command-line surface: iterate metrics, estimate convergence rates, check
the distance envelope, regenerate the benchmark tables, and export density
profiles.

Exit codes: 0 success, 1 validation error, 2 numerical failure,
3 benchmark-table mismatch.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from math import comb

import numpy as np

from . import __version__
from .cp1 import OperatorKind, density_profile
from .cpn import (
    build_basis,
    classify_symmetry,
    full_symmetry_orbits,
    metric_from_class_values,
    multinomial_coeffs,
    MultiIndexMetric,
)
from .dynamics import (
    DEFAULT_CONV_TOL,
    DEFAULT_ERR_FLOOR,
    DEFAULT_MAX_ITER,
    NormalizationMode,
    build_trajectory,
    coordinate_sigma_series,
    is_palindromic,
    iterate,
    sigma_closed_form,
    sigma_probe,
)
from .cpn import sigma_predict_cpn
from .errors import ConvergenceError, MetricError, QuadratureError
from .metrics import BalancedFamily, DiagonalMetric, balanced_coeffs
from .tables import TABLE_IDS, golden_table, reproduce

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_MISMATCH = 3


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on usage errors, which collides with the
    # "numerical failure" code; route usage errors to the validation code.
    def error(self, message):
        self.print_usage(sys.stderr)
        raise SystemExit_(EXIT_VALIDATION, f"{self.prog}: error: {message}")


class SystemExit_(Exception):
    def __init__(self, code: int, message: str = ""):
        super().__init__(message)
        self.code = code


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _parse_floats(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip() != ""]
    except ValueError as exc:
        raise MetricError(f"could not parse coefficient list {text!r}") from exc


def _bool_flag(text: str) -> bool:
    low = text.strip().lower()
    if low in ("true", "yes", "1"):
        return True
    if low in ("false", "no", "0"):
        return False
    raise MetricError(f"expected true/false, got {text!r}")


def _write_text(text: str, out: str | None) -> None:
    if out is None:
        sys.stdout.write(text)
    else:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def _csv_text(header: list[str], rows: list[list]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else _fmt(v) for v in row])
    return buf.getvalue()


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tol", type=float, default=None,
                   help="per-application quadrature tolerance")
    p.add_argument("--conv-tol", type=float, default=DEFAULT_CONV_TOL,
                   help="balanced-limit convergence tolerance")
    p.add_argument("--max-iter", type=int, default=DEFAULT_MAX_ITER,
                   help="iteration cap for the balanced limit")
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _add_metric_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--op", required=True, help="operator: T, Tnu, or TK")
    p.add_argument("--n", type=int, default=1, help="projective dimension (1..3)")
    p.add_argument("--k", type=int, required=True, help="line-bundle power")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--coeffs", help="comma-separated coefficients (full vector)")
    src.add_argument("--class-coeffs",
                     help="one value per full-symmetry class (CP^n, n >= 2)")
    src.add_argument("--family", choices=("round", "binomial"),
                     help="named start: the round metric, or the binomial family")
    p.add_argument("--alpha", type=float, default=1.0, help="family scale")
    p.add_argument("--c", type=float, default=1.0, help="binomial family parameter")


def _build_start(args):
    """Returns (metric, class_indices or None)."""
    n, k = args.n, args.k
    if n < 1 or n > 3:
        raise MetricError(f"projective dimension n={n} unsupported; expected 1..3")
    if k < 0:
        raise MetricError("k must be nonnegative")
    if n == 1:
        if args.class_coeffs:
            raise MetricError("--class-coeffs applies to CP^n with n >= 2")
        if args.coeffs:
            coeffs = _parse_floats(args.coeffs)
            if len(coeffs) != k + 1:
                raise MetricError(
                    f"expected {k + 1} coefficients for k={k}, got {len(coeffs)}")
            return DiagonalMetric(np.asarray(coeffs)), None
        if args.family == "round":
            return balanced_coeffs(BalancedFamily(k, args.alpha, 1.0)), None
        if args.family == "binomial":
            return balanced_coeffs(BalancedFamily(k, args.alpha, args.c)), None
        raise MetricError("provide --coeffs or --family for the start metric")
    basis = build_basis(n, k)
    if args.coeffs:
        coeffs = _parse_floats(args.coeffs)
        if len(coeffs) != basis.size:
            raise MetricError(
                f"expected {basis.size} coefficients for n={n}, k={k}, "
                f"got {len(coeffs)}")
        return MultiIndexMetric(basis, np.asarray(coeffs)), None
    if args.class_coeffs:
        values = _parse_floats(args.class_coeffs)
        metric = metric_from_class_values(basis, values)
        reps = [o[0] for o in full_symmetry_orbits(basis)]
        return metric, reps
    if args.family == "round":
        return MultiIndexMetric(basis, args.alpha * multinomial_coeffs(basis)), \
            [o[0] for o in full_symmetry_orbits(basis)]
    raise MetricError("provide --coeffs, --class-coeffs, or --family round")


def _display_columns(metric, class_indices):
    if isinstance(metric, MultiIndexMetric):
        if class_indices is not None:
            return class_indices, [f"a{i + 1}" for i in class_indices]
        idx = list(range(metric.basis.size))
        return idx, [f"a{i + 1}" for i in idx]
    idx = list(range(metric.coeffs.size))
    return idx, [f"a{i}" for i in idx]


def cmd_iterate(args) -> int:
    metric, class_indices = _build_start(args)
    kind = OperatorKind.parse(args.op)
    mode = NormalizationMode.parse(args.normalize)
    traj = build_trajectory(kind, metric, steps=args.steps, normalization=mode,
                            tol=args.tol, conv_tol=args.conv_tol,
                            max_iter=args.max_iter)
    idx, names = _display_columns(metric, class_indices)
    shown = traj.display_iterates()
    with_sigma = mode is NormalizationMode.FIRST_COEFF
    sig = coordinate_sigma_series(traj, coord=idx[1] if len(idx) > 1 else 0) \
        if with_sigma else [float("nan")] + [
            traj.err[r] / traj.err[r - 1] if traj.err[r - 1] > 0 else float("nan")
            for r in range(1, len(traj.err))
        ]
    rows = []
    for r in range(traj.steps + 1):
        coeffs = [float(shown[r].coeffs[i]) for i in idx]
        rows.append([r] + coeffs + [traj.err[r], traj.bound[r], sig[r]])
    header = ["r"] + names + ["err", "bnd", "sigma_tilde"]
    if args.format == "csv":
        _write_text(_csv_text(header, rows), args.out)
    else:
        payload = {
            "meta": {
                "operator": kind.value,
                "n": args.n,
                "k": args.k,
                "normalization": mode.value,
                "tolerances": {"apply": args.tol, "conv": args.conv_tol},
                "columns": names,
            },
            "rows": [
                {
                    "r": r,
                    "coeffs": row[1:-3],
                    "err": row[-3],
                    "sigma_tilde": None if r == 0 or not np.isfinite(row[-1]) else row[-1],
                    "bnd": row[-2],
                }
                for r, row in enumerate(rows)
            ],
        }
        _write_text(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK


def cmd_sigma(args) -> int:
    if args.coeffs or args.class_coeffs or args.family:
        metric, _ = _build_start(args)
    else:
        metric = _random_start(args)
    kind = OperatorKind.parse(args.op)
    if isinstance(metric, MultiIndexMetric):
        sym = classify_symmetry(metric).generally_symmetric
        predicted = sigma_predict_cpn(metric.basis.n, metric.basis.k, sym)
        regime = "generally symmetric" if sym else "generic"
    else:
        pal = is_palindromic(metric)
        predicted = sigma_closed_form(kind, metric.k, palindromic=pal)
        regime = "palindromic" if pal else "non-palindromic"
    sigma_hat, used = sigma_probe(kind, metric, err_floor=args.err_floor,
                                  tol=args.tol, max_steps=args.steps,
                                  conv_tol=args.conv_tol, max_iter=args.max_iter)
    report = {
        "operator": kind.value,
        "n": args.n,
        "k": args.k,
        "regime": regime,
        "sigma_hat": sigma_hat,
        "sigma_predicted": predicted,
        "abs_difference": abs(sigma_hat - predicted),
        "iterations_used": used,
    }
    if args.format == "json":
        _write_text(json.dumps(report, indent=2) + "\n", args.out)
    else:
        lines = "".join(f"{key}: {val}\n" for key, val in report.items())
        _write_text(lines, args.out)
    return EXIT_OK


def _random_start(args):
    rng = np.random.default_rng(args.seed)
    n, k = args.n, args.k
    if n == 1:
        base = np.array([comb(k, q) for q in range(k + 1)], float)
        if args.palindromic is True:
            half = rng.uniform(-0.5, 0.5, (k + 2) // 2)
            pert = np.array([half[min(q, k - q)] for q in range(k + 1)])
        else:
            pert = rng.uniform(-0.5, 0.5, k + 1)
            if is_palindromic(DiagonalMetric(base * np.exp(pert))):
                pert[0] += 0.25
        return DiagonalMetric(base * np.exp(pert))
    basis = build_basis(n, k)
    base = multinomial_coeffs(basis)
    if args.symmetric is True:
        # invariant under a full-cycle coordinate permutation; a single cycle
        # kills every linear slow mode (a product of shorter cycles does not,
        # and such metrics still converge at the generic rate)
        pi = (1, 2, 0) if n == 2 else (1, 2, 3, 0)
        from .cpn import permutation_action
        from .cpn import _orbits_from_maps
        orbits = _orbits_from_maps(basis.size, [permutation_action(basis, pi)])
        coeffs = np.empty(basis.size)
        for orbit in orbits:
            coeffs[list(orbit)] = base[orbit[0]] * np.exp(rng.uniform(-0.5, 0.5))
        return MultiIndexMetric(basis, coeffs)
    return MultiIndexMetric(basis, base * np.exp(rng.uniform(-0.5, 0.5, basis.size)))


def cmd_reproduce(args) -> int:
    report = reproduce(args.table)
    table = golden_table(args.table)
    lines = [f"table {report.table_id}: {len(report.computed_rows)} rows "
             f"in {report.elapsed_s:.2f}s"]
    for col in table.columns:
        dev = report.max_deviation[col.name]
        lines.append(f"  column {col.name}: max deviation {dev:.3e}")
    if report.failures:
        lines.append(f"  {len(report.failures)} cells out of tolerance:")
        for f in report.failures:
            lines.append(
                f"    r={f.r} {f.column}: computed {f.computed!r} vs "
                f"golden {f.golden!r} (|dev| {f.deviation:.3e} > {f.allowed:.3e})"
            )
        lines.append("RESULT: FAIL")
    else:
        lines.append("RESULT: PASS")
    sys.stdout.write("\n".join(lines) + "\n")
    if args.out is not None:
        header = ["r"] + list(report.column_names)
        rows = [list(row) for row in report.computed_rows]
        if args.format == "csv":
            _write_text(_csv_text(header, rows), args.out)
        else:
            payload = {
                "meta": {"table": report.table_id, "columns": header},
                "rows": [dict(zip(header, row)) for row in rows],
            }
            _write_text(json.dumps(payload, indent=2) + "\n", args.out)
    return EXIT_OK if report.ok else EXIT_MISMATCH


def _profile_path(base: str, r: int) -> str:
    if "{r}" in base:
        return base.replace("{r}", str(r))
    if "." in base.rsplit("/", maxsplit=1)[-1]:
        stem, ext = base.rsplit(".", 1)
        return f"{stem}_r{r}.{ext}"
    return f"{base}_r{r}"


def cmd_profile(args) -> int:
    if args.n != 1:
        raise MetricError("density profiles are defined on CP^1 (n=1)")
    metric, _ = _build_start(args)
    if args.xs:
        xs = np.asarray(_parse_floats(args.xs))
    else:
        xs = np.geomspace(args.x_min, args.x_max, args.x_count)
    if args.steps > 0:
        kind = OperatorKind.parse(args.op)
        iterates = iterate(kind, metric, args.steps, tol=args.tol)
    else:
        iterates = [metric]
    profiles = [density_profile(g, xs) for g in iterates]
    if args.out is None:
        rows = []
        for r, prof in enumerate(profiles):
            rows.extend([r, x, v] for x, v in zip(prof.x, prof.rho))
        _write_text(_csv_text(["r", "x", "rho"], rows), None)
    else:
        for r, prof in enumerate(profiles):
            rows = [[x, v] for x, v in zip(prof.x, prof.rho)]
            _write_text(_csv_text(["x", "rho"], rows), _profile_path(args.out, r))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="balmet",
                     description="Balanced-metric iterations on projective space")
    parser.add_argument("--version", action="version", version=f"balmet {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_it = sub.add_parser("iterate", help="run an operator trajectory",
                          parents=[], description="Iterate an operator and "
                          "tabulate coefficients, distance to the balanced "
                          "limit, and the conjectured envelope.")
    _add_metric_args(p_it)
    p_it.add_argument("--steps", type=int, required=True)
    p_it.add_argument("--normalize", default="balanced",
                      choices=[m.value for m in NormalizationMode])
    _add_common(p_it)
    p_it.set_defaults(fn=cmd_iterate)

    p_sig = sub.add_parser("sigma", help="estimate the convergence ratio")
    _add_metric_args(p_sig)
    p_sig.add_argument("--steps", type=int, default=300,
                       help="iteration cap for the estimate")
    p_sig.add_argument("--err-floor", type=float, default=DEFAULT_ERR_FLOOR,
                       help="ignore distance ratios below this floor")
    p_sig.add_argument("--palindromic", type=_bool_flag, default=None,
                       help="with no explicit start: generate one of this parity")
    p_sig.add_argument("--symmetric", type=_bool_flag, default=None,
                       help="with no explicit start (CP^n): generate one of this symmetry")
    p_sig.add_argument("--seed", type=int, default=0,
                       help="seed for generated starts")
    _add_common(p_sig)
    p_sig.set_defaults(fn=cmd_sigma)

    p_rep = sub.add_parser("reproduce", help="regenerate a benchmark table")
    p_rep.add_argument("table", choices=list(TABLE_IDS))
    _add_common(p_rep)
    p_rep.set_defaults(fn=cmd_reproduce)

    p_prof = sub.add_parser("profile", help="export density profiles rho(x)")
    _add_metric_args(p_prof)
    p_prof.add_argument("--steps", type=int, default=0,
                        help="also profile this many operator iterates")
    p_prof.add_argument("--xs", default=None, help="explicit sample points")
    p_prof.add_argument("--x-min", type=float, default=1e-3)
    p_prof.add_argument("--x-max", type=float, default=1e3)
    p_prof.add_argument("--x-count", type=int, default=200)
    _add_common(p_prof)
    p_prof.set_defaults(fn=cmd_profile)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.fn(args)
    except SystemExit_ as exc:
        if str(exc):
            print(str(exc), file=sys.stderr)
        return exc.code
    except (MetricError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (QuadratureError, ConvergenceError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    raise SystemExit(main())
