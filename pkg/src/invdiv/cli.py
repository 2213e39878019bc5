"""Command-line front end.

Subcommands: sample, estimate, check, bias, experiment, lemmas.  Global
flags --seed, --threads and --out-dir apply where meaningful.  The exit
code is 0 whenever every requested verdict was produced (a 'divergent' or
'undetermined' verdict is a result, not an error) and 1 on any input or
numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import os
import sys

import numpy as np

from . import __version__
from .bias import bias_monte_carlo, bias_quadrature, verify_coordinate_reduction, verify_radial_identity
from .conditions import ConditionQuery, check_condition, check_normalization, condition_matrix, write_condition_csv
from .distributions import MigtModel, ModelError, parse_model
from .divergence import DomainError
from .estimator import EstimationProblem, solve
from .experiments import ConfigError, emit_outputs, parse_config, run_experiment, write_condition_heatmap
from .funcs import CatalogError, default_f_catalog, default_g_catalog, make_g, parse_f, parse_g
from .sampling import RngStream, sample_contaminated, sample_model


def _build_parser():
    parser = argparse.ArgumentParser(prog="invdiv", description=__doc__)
    parser.add_argument("--version", action="version", version=f"invdiv {__version__}")
    parser.add_argument("--seed", type=int, default=0, help="base RNG seed")
    parser.add_argument("--threads", type=int, default=1, help="worker count for replications")
    parser.add_argument("--out-dir", default=".", help="directory for file outputs")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("sample", help="draw from a model, emit CSV")
    p.add_argument("--model", required=True, help="e.g. igt(theta=2,lambda=3,g=gauss)")
    p.add_argument("-n", type=int, required=True, help="number of draws")
    p.add_argument("--stream", type=int, default=0, help="RNG stream id")
    p.add_argument("--contaminate", help="outlier model spec")
    p.add_argument("--eps", type=float, default=0.0, help="contamination fraction")
    p.add_argument("--out", help="output CSV path (default stdout)")

    p = sub.add_parser("estimate", help="solve the estimating equation on CSV data")
    p.add_argument("--data", required=True, help="CSV with one row per observation")
    p.add_argument("--divergence", required=True,
                   choices=["inverse", "multivariate_inverse", "squared", "itakura_saito"])
    p.add_argument("--lambda", dest="lam", required=True,
                   help="scale parameter(s), comma-separated for vectors")
    p.add_argument("--f", required=True, help="shaper spec, e.g. log1p:1")
    p.add_argument("--tol", type=float, default=1e-10)
    p.add_argument("--max-iter", type=int, default=500)
    p.add_argument("--multistart", type=int, default=0)
    p.add_argument("--trace", help="write the iteration trace CSV here")
    p.add_argument("--out", help="result CSV path (default stdout)")

    p = sub.add_parser("check", help="convergence-condition verdicts")
    p.add_argument("--family", choices=["igt", "gigt_mixture", "migt"])
    p.add_argument("--g", help="generating function spec, e.g. gauss or student:5")
    p.add_argument("--f", help="shaper spec, e.g. log1p:1")
    p.add_argument("--d", type=int, default=2, help="dimension for migt (d=1 delegates to igt)")
    p.add_argument("--normalization", action="store_true",
                   help="probe the family's existence integral instead")
    p.add_argument("--matrix", action="store_true",
                   help="full catalog cross-product; writes CSV and heatmap")

    p = sub.add_parser("bias", help="bias-term verdict by quadrature or Monte Carlo")
    p.add_argument("--model", required=True)
    p.add_argument("--f", required=True)
    p.add_argument("--method", choices=["quadrature", "mc"], default="quadrature")
    p.add_argument("--n", type=int, default=100_000, help="draws for --method mc")
    p.add_argument("--divergence", choices=["inverse", "multivariate_inverse", "squared", "itakura_saito"],
                   help="override the model's natural scoring divergence")
    p.add_argument("--scale", type=float, help="scale for the overriding divergence")
    p.add_argument("--out", help="CSV row path (default stdout summary only)")

    p = sub.add_parser("experiment", help="run a declarative experiment config")
    p.add_argument("--config", required=True)

    sub.add_parser("lemmas", help="verify the dimension-reduction integral identities")
    return parser


def _write_rows(path, header, rows):
    out = open(path, "w", newline="") if path else sys.stdout
    try:
        writer = csv.writer(out)
        writer.writerow(header)
        writer.writerows(rows)
    finally:
        if path:
            out.close()


def _cmd_sample(args):
    model = parse_model(args.model)
    if getattr(model, "flagged", False):
        print("warning: model existence probe was inconclusive", file=sys.stderr)
    rng = RngStream(args.seed, args.stream)
    if args.contaminate:
        outlier = parse_model(args.contaminate)
        data, labels = sample_contaminated(model, outlier, args.eps, args.n, rng)
    else:
        data = np.asarray(sample_model(model, rng, size=args.n), dtype=float)
        labels = None
    if data.ndim == 1:
        data = data[:, None]
    d = data.shape[1]
    header = [f"dim_{j + 1}" for j in range(d)] + (["label"] if labels is not None else [])
    rows = []
    for i in range(data.shape[0]):
        row = [f"{v:.17g}" for v in data[i]]
        if labels is not None:
            row.append(str(int(labels[i])))
        rows.append(row)
    _write_rows(args.out, header, rows)
    return 0


def _read_data_csv(path):
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        rows = [row for row in reader if row]
    start = 0
    drop = []
    try:
        [float(v) for v in rows[0]]
    except ValueError:
        header = rows[0]
        drop = [i for i, name in enumerate(header) if name.strip().lower() == "label"]
        start = 1
    data = []
    for row in rows[start:]:
        data.append([float(v) for i, v in enumerate(row) if i not in drop])
    return np.asarray(data, dtype=float)


def _cmd_estimate(args):
    data = _read_data_csv(args.data)
    lam = tuple(float(v) for v in args.lam.split(","))
    problem = EstimationProblem(data=data, divergence=args.divergence, lam=lam, f=parse_f(args.f))
    result = solve(problem, tol=args.tol, max_iter=args.max_iter,
                   multistart=args.multistart, keep_trace=bool(args.trace))
    d = problem.dim
    header = [f"theta_hat_{j + 1}" for j in range(d)] + [
        "iterations", "residual_norm", "converged", "loss", "divergence", "f", "lambda",
    ]
    row = [f"{v:.17g}" for v in result.theta_hat] + [
        str(result.iterations), f"{result.residual_norm:.6g}", str(int(result.converged)),
        f"{result.loss:.12g}", args.divergence, args.f, args.lam,
    ]
    _write_rows(args.out, header, [row])
    if args.trace and result.weight_trace is not None:
        with open(args.trace, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=["iteration", "w_min", "w_mean", "w_max", "residual"])
            writer.writeheader()
            writer.writerows(result.weight_trace)
    return 0


def _cmd_check(args):
    os.makedirs(args.out_dir, exist_ok=True)
    if args.matrix:
        rows = condition_matrix(default_g_catalog(), default_f_catalog(),
                                ["igt", "gigt_mixture", "migt"], d=max(args.d, 2))
        csv_path = os.path.join(args.out_dir, "condition_matrix.csv")
        write_condition_csv(rows, csv_path)
        heat_path = write_condition_heatmap(rows, os.path.join(args.out_dir, "condition_matrix.svg"))
        for row in rows:
            print(f"{row['family']:13s} g={row['g']:10s} f={row['f']:12s} d={row['d']}: {row['status']}")
        print(f"wrote {csv_path} and {heat_path}")
        return 0
    if not (args.family and args.g):
        print("error: check needs --family and --g (or --matrix)", file=sys.stderr)
        return 1
    g = parse_g(args.g)
    if args.normalization:
        verdict = check_normalization(args.family, g, d=args.d if args.family == "migt" else None)
        label = f"normalization[{args.family}, g={g.spec}]"
    else:
        if not args.f:
            print("error: condition checks need --f", file=sys.stderr)
            return 1
        f = parse_f(args.f)
        query = ConditionQuery(args.family, g, f,
                               d=args.d if args.family == "migt" else None)
        if args.family == "migt" and args.d == 1:
            print("note: d=1 delegates to the igt condition")
        verdict = check_condition(query)
        label = f"condition[{args.family}, g={g.spec}, f={f.spec}" + (
            f", d={args.d}]" if args.family == "migt" else "]")
    print(f"{label}: {verdict}")
    row = {
        "family": args.family, "g": g.spec, "f": args.f or "",
        "d": args.d if args.family == "migt" else 1,
        "status": verdict.status.value,
        "value": "" if verdict.value is None else f"{verdict.value:.12g}",
        "tail_exponent": f"{verdict.diagnostics.get('tail_exponent', float('nan')):.4f}",
        "note": verdict.diagnostics.get("note", ""),
    }
    write_condition_csv([row], os.path.join(args.out_dir, "condition_check.csv"))
    return 0


def _cmd_bias(args):
    model = parse_model(args.model)
    f = parse_f(args.f)
    divergence = None
    if args.divergence:
        if args.scale is None:
            print("error: --divergence override needs --scale", file=sys.stderr)
            return 1
        divergence = (args.divergence, args.scale)
    if args.method == "quadrature":
        report = bias_quadrature(model, f, divergence=divergence)
    else:
        report = bias_monte_carlo(model, f, args.n, RngStream(args.seed), divergence=divergence)
    bias_txt = ",".join(f"{v:.6g}" for v in np.atleast_1d(report.bias_estimate))
    se_txt = ("" if report.standard_error is None
              else ",".join(f"{v:.3g}" for v in np.atleast_1d(report.standard_error)))
    norm_txt = "" if report.normalizer is None else f"{report.normalizer:.10g}"
    print(f"bias[{report.model}, f={report.f}, {report.method}]: {report.verdict}")
    print(f"  estimate = [{bias_txt}]" + (f"  se = [{se_txt}]" if se_txt else "")
          + (f"  E[f'] = {norm_txt}" if norm_txt else ""))
    if getattr(model, "flagged", False):
        print("  warning: model existence probe was inconclusive")
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["model", "f", "method", "n", "seed", "bias", "se", "normalizer", "verdict"])
            writer.writerow([report.model, report.f, report.method,
                             args.n if args.method == "mc" else "",
                             args.seed if args.method == "mc" else "",
                             bias_txt, se_txt, norm_txt, report.verdict])
    return 0


def _cmd_experiment(args):
    cfg = parse_config(args.config)
    report = run_experiment(cfg, threads=max(args.threads, 1))
    paths = emit_outputs(report, args.out_dir)
    for row in report.summary_rows:
        print(f"{row['estimator']:12s} bias={row['bias']} mse={row['mse']} "
              f"converged={row['converged_rate']:.3f}")
    for path in paths:
        print(f"wrote {path}")
    return 0


def _cmd_lemmas(args):
    os.makedirs(args.out_dir, exist_ok=True)
    u_exp = lambda t: np.exp(-np.asarray(t, dtype=float))
    u_poly = lambda t: (1.0 + np.asarray(t, dtype=float)) ** -3.0
    cases = [
        ("radial m=1 a=(1/2) u=exp", verify_radial_identity(1, (0.5,), u_exp)),
        ("radial m=2 a=(1/2,3/2) u=exp", verify_radial_identity(2, (0.5, 1.5), u_exp)),
        ("radial m=2 a=(1/2,1/2) u=exp", verify_radial_identity(2, (0.5, 0.5), u_exp)),
        ("radial m=3 a=(1/2,..) u=exp", verify_radial_identity(3, (0.5, 0.5, 0.5), u_exp)),
        ("radial m=2 a=(1/2,1/2) u=poly", verify_radial_identity(2, (0.5, 0.5), u_poly)),
        ("radial m=3 a=(1/2,..) u=poly", verify_radial_identity(3, (0.5, 0.5, 0.5), u_poly)),
    ]
    rows = []
    ok = True
    for name, rep in cases:
        good = rep.rel_gap < 1e-6
        ok &= good
        print(f"{name:32s} lhs={rep.lhs:.10g} rhs={rep.rhs:.10g} rel_gap={rep.rel_gap:.2e} "
              f"{'ok' if good else 'FAIL'}")
        rows.append([name, f"{rep.lhs:.12g}", f"{rep.rhs:.12g}", f"{rep.rel_gap:.3e}", int(good)])
    model = MigtModel(np.array([1.0, 2.0]), np.array([1.0, 1.0]), make_g("gauss_kernel"))
    cr = verify_coordinate_reduction(model, parse_f("identity"), 0)
    good = abs(cr.signed) < 1e-6 and cr.rel_gap < 1e-4
    ok &= good
    print(f"{'coordinate reduction d=2':32s} signed={cr.signed:.2e} direct={cr.direct_positive:.10g} "
          f"reduced={cr.reduced_positive:.10g} {'ok' if good else 'FAIL'}")
    rows.append(["coordinate reduction d=2", f"{cr.direct_positive:.12g}",
                 f"{cr.reduced_positive:.12g}", f"{cr.rel_gap:.3e}", int(good)])
    with open(os.path.join(args.out_dir, "identity_checks.csv"), "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["identity", "lhs", "rhs", "rel_gap", "ok"])
        writer.writerows(rows)
    return 0 if ok else 1


_COMMANDS = {
    "sample": _cmd_sample,
    "estimate": _cmd_estimate,
    "check": _cmd_check,
    "bias": _cmd_bias,
    "experiment": _cmd_experiment,
    "lemmas": _cmd_lemmas,
}


def main(argv=None):
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (ModelError, CatalogError, DomainError, ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
