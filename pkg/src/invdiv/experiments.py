"""Declarative Monte Carlo experiment harness.

Configs are flat INI files with nested sections:

    [model]
    spec = igt(theta=2,lambda=3,g=gauss)

    [contamination]            ; optional
    outlier = igt(theta=20,lambda=3,g=gauss)
    eps = 0.1

    [estimator.mle]            ; one section per estimator
    divergence = inverse
    f = identity
    lambda = 3

    [estimator.robust]
    divergence = inverse
    f = log1p:1
    lambda = 3
    multistart = 2             ; optional, with tol and max_iter

    [run]
    replications = 200
    n_per_rep = 1000
    seed = 42

Replication r draws its data from stream (seed, r), so reports are
bit-identical for a fixed config regardless of worker count or scheduling.
Every knob that affects results is echoed into the report header.
"""

from __future__ import annotations

import configparser
import csv
import dataclasses
import io
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Optional

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np

from . import __version__
from .distributions import ModelError, parse_model
from .estimator import EstimationProblem, solve
from .funcs import CatalogError, parse_f
from .sampling import RngStream, sample_contaminated, sample_model

__all__ = [
    "ConfigError",
    "EstimatorSpec",
    "ExperimentConfig",
    "ExperimentReport",
    "parse_config",
    "run_experiment",
    "emit_outputs",
    "read_summary_csv",
    "write_condition_heatmap",
]

# deterministic SVG bytes for fixed inputs
matplotlib.rcParams["svg.hashsalt"] = "invdiv"


class ConfigError(ValueError):
    """Raised with every config problem at once, one per line."""

    def __init__(self, problems):
        self.problems = list(problems)
        super().__init__("invalid experiment config:\n" + "\n".join(f"  - {p}" for p in self.problems))


@dataclasses.dataclass(frozen=True)
class EstimatorSpec:
    name: str
    divergence: str
    f_spec: str
    lam: tuple
    tol: float = 1e-10
    max_iter: int = 500
    multistart: int = 0


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    model_spec: str
    estimators: tuple
    replications: int
    n_per_rep: int
    seed: int
    outlier_spec: Optional[str] = None
    eps: float = 0.0


def _parse_lam(text):
    return tuple(float(v) for v in str(text).replace("[", "").replace("]", "").split(",") if v.strip())


def parse_config(source):
    """Parse and fully validate an experiment config (path or INI text)."""
    parser = configparser.ConfigParser()
    if os.path.exists(str(source)):
        parser.read(str(source))
    else:
        parser.read_file(io.StringIO(str(source)))
    problems = []

    model_spec = None
    if not parser.has_section("model") or not parser.has_option("model", "spec"):
        problems.append("missing [model] section with a 'spec' key")
    else:
        model_spec = parser.get("model", "spec")
        try:
            parse_model(model_spec)
        except ModelError as exc:
            problems.append(f"model spec: {exc}")

    outlier_spec, eps = None, 0.0
    if parser.has_section("contamination"):
        if not parser.has_option("contamination", "outlier"):
            problems.append("[contamination] needs an 'outlier' key")
        else:
            outlier_spec = parser.get("contamination", "outlier")
            try:
                parse_model(outlier_spec)
            except ModelError as exc:
                problems.append(f"outlier spec: {exc}")
        try:
            eps = parser.getfloat("contamination", "eps", fallback=0.0)
            if not (0.0 <= eps < 1.0):
                problems.append(f"eps must lie in [0, 1), got {eps}")
        except ValueError:
            problems.append("eps must be a number")

    estimators = []
    est_sections = [s for s in parser.sections() if s.startswith("estimator.")]
    if not est_sections:
        problems.append("need at least one [estimator.NAME] section")
    for section in est_sections:
        name = section.split(".", 1)[1]
        divergence = parser.get(section, "divergence", fallback=None)
        f_spec = parser.get(section, "f", fallback=None)
        lam_text = parser.get(section, "lambda", fallback=None)
        if divergence is None or f_spec is None or lam_text is None:
            problems.append(f"[{section}] needs divergence, f and lambda keys")
            continue
        try:
            parse_f(f_spec)
        except CatalogError as exc:
            problems.append(f"[{section}] f: {exc}")
        try:
            lam = _parse_lam(lam_text)
            if not lam or any(v <= 0 for v in lam):
                problems.append(f"[{section}] lambda must be positive")
                lam = (1.0,)
        except ValueError:
            problems.append(f"[{section}] lambda must be numeric")
            lam = (1.0,)
        try:
            estimators.append(
                EstimatorSpec(
                    name=name,
                    divergence=divergence,
                    f_spec=f_spec,
                    lam=lam,
                    tol=parser.getfloat(section, "tol", fallback=1e-10),
                    max_iter=parser.getint(section, "max_iter", fallback=500),
                    multistart=parser.getint(section, "multistart", fallback=0),
                )
            )
        except ValueError as exc:
            problems.append(f"[{section}] bad numeric option: {exc}")
        if divergence is not None and divergence not in (
            "inverse", "multivariate_inverse", "squared", "itakura_saito"
        ):
            problems.append(f"[{section}] unknown divergence {divergence!r}")

    replications = n_per_rep = seed = None
    if not parser.has_section("run"):
        problems.append("missing [run] section")
    else:
        try:
            replications = parser.getint("run", "replications")
            if replications < 1:
                problems.append("replications must be >= 1")
        except (ValueError, configparser.NoOptionError):
            problems.append("[run] needs an integer 'replications'")
        try:
            n_per_rep = parser.getint("run", "n_per_rep")
            if n_per_rep < 1:
                problems.append("n_per_rep must be >= 1")
        except (ValueError, configparser.NoOptionError):
            problems.append("[run] needs an integer 'n_per_rep'")
        try:
            seed = parser.getint("run", "seed")
        except (ValueError, configparser.NoOptionError):
            problems.append("[run] needs an integer 'seed'")

    if problems:
        raise ConfigError(problems)
    return ExperimentConfig(
        model_spec=model_spec,
        estimators=tuple(estimators),
        replications=replications,
        n_per_rep=n_per_rep,
        seed=seed,
        outlier_spec=outlier_spec,
        eps=eps,
    )


@dataclasses.dataclass(frozen=True)
class ExperimentReport:
    header: dict          # config echo + version; every result-affecting knob
    summary_rows: list    # one per estimator
    rep_rows: list        # one per (replication, estimator)


def _run_replication(cfg, model, outlier, estimators, rep):
    rng = RngStream(cfg.seed, rep)
    if outlier is not None and cfg.eps > 0:
        data, labels = sample_contaminated(model, outlier, cfg.eps, cfg.n_per_rep, rng)
    else:
        data = np.asarray(sample_model(model, rng, size=cfg.n_per_rep), dtype=float)
        labels = np.zeros(cfg.n_per_rep, dtype=bool)
    rows = []
    for spec, f in estimators:
        problem = EstimationProblem(data=data, divergence=spec.divergence, lam=spec.lam, f=f)
        result = solve(problem, tol=spec.tol, max_iter=spec.max_iter, multistart=spec.multistart)
        rows.append(
            {
                "replication": rep,
                "estimator": spec.name,
                "theta_hat": result.theta_hat.tolist(),
                "converged": result.converged,
                "iterations": result.iterations,
                "loss": result.loss,
                "n_outliers": int(labels.sum()),
            }
        )
    return rows


def run_experiment(cfg, threads=1):
    """Run all replications and aggregate bias, variance and MSE per estimator."""
    model = parse_model(cfg.model_spec)
    outlier = parse_model(cfg.outlier_spec) if cfg.outlier_spec else None
    estimators = [(spec, parse_f(spec.f_spec)) for spec in cfg.estimators]
    truth = np.atleast_1d(np.asarray(model.theta, dtype=float))

    reps = range(cfg.replications)
    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            per_rep = list(pool.map(
                lambda r: _run_replication(cfg, model, outlier, estimators, r), reps
            ))
    else:
        per_rep = [_run_replication(cfg, model, outlier, estimators, r) for r in reps]

    rep_rows = [row for rows in per_rep for row in rows]
    summary_rows = []
    for spec, _ in estimators:
        hats = np.array([r["theta_hat"] for r in rep_rows if r["estimator"] == spec.name])
        err = hats - truth[None, :]
        converged = np.array([r["converged"] for r in rep_rows if r["estimator"] == spec.name])
        iters = np.array([r["iterations"] for r in rep_rows if r["estimator"] == spec.name])
        summary_rows.append(
            {
                "estimator": spec.name,
                "divergence": spec.divergence,
                "f": spec.f_spec,
                "lambda": ",".join(f"{v:g}" for v in spec.lam),
                "bias": np.mean(err, axis=0).tolist(),
                "variance": np.var(hats, axis=0, ddof=1).tolist() if hats.shape[0] > 1 else [0.0] * hats.shape[1],
                "mse": np.mean(err ** 2, axis=0).tolist(),
                "converged_rate": float(converged.mean()),
                "mean_iterations": float(iters.mean()),
            }
        )
    header = {
        "version": __version__,
        "model": cfg.model_spec,
        "outlier": cfg.outlier_spec or "",
        "eps": f"{cfg.eps:g}",
        "replications": str(cfg.replications),
        "n_per_rep": str(cfg.n_per_rep),
        "seed": str(cfg.seed),
        "estimators": ";".join(
            f"{s.name}:{s.divergence}:{s.f_spec}:lam={','.join(f'{v:g}' for v in s.lam)}"
            f":tol={s.tol:g}:max_iter={s.max_iter}:multistart={s.multistart}"
            for s in cfg.estimators
        ),
    }
    return ExperimentReport(header, summary_rows, rep_rows)


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.12g}"
    if isinstance(v, list):
        return "|".join(f"{x:.12g}" for x in v)
    return str(v)


_SUMMARY_COLUMNS = [
    "estimator", "divergence", "f", "lambda", "bias", "variance", "mse",
    "converged_rate", "mean_iterations",
]
_REP_COLUMNS = [
    "replication", "estimator", "theta_hat", "converged", "iterations", "loss", "n_outliers",
]


def emit_outputs(report, out_dir, formats=("csv", "svg")):
    """Write the report tables (CSV) and the error-distribution plot (SVG).

    Returns the list of written paths.  Bytes are deterministic for a fixed
    report (hash-salted SVG ids, no timestamps).
    """
    os.makedirs(out_dir, exist_ok=True)
    written = []
    if "csv" in formats:
        summary_path = os.path.join(out_dir, "experiment_summary.csv")
        with open(summary_path, "w", newline="") as fh:
            for key, value in report.header.items():
                fh.write(f"# {key} = {value}\n")
            writer = csv.DictWriter(fh, fieldnames=_SUMMARY_COLUMNS)
            writer.writeheader()
            for row in report.summary_rows:
                writer.writerow({k: _fmt(row[k]) for k in _SUMMARY_COLUMNS})
        written.append(summary_path)

        reps_path = os.path.join(out_dir, "experiment_replications.csv")
        with open(reps_path, "w", newline="") as fh:
            writer = csv.DictWriter(fh, fieldnames=_REP_COLUMNS)
            writer.writeheader()
            for row in report.rep_rows:
                writer.writerow({k: _fmt(row[k]) for k in _REP_COLUMNS})
        written.append(reps_path)

    if "svg" in formats:
        truth = np.atleast_1d(np.asarray(parse_model(report.header["model"]).theta, dtype=float))
        names = [row["estimator"] for row in report.summary_rows]
        errors = []
        for name in names:
            hats = np.array([r["theta_hat"] for r in report.rep_rows if r["estimator"] == name])
            errors.append(np.linalg.norm(hats - truth[None, :], axis=1))
        fig, ax = plt.subplots(figsize=(6.0, 4.0))
        ax.boxplot(errors, tick_labels=names)
        ax.set_ylabel(r"$\|\hat\theta - \theta\|$")
        ax.set_title(f"estimation error over {report.header['replications']} replications")
        plot_path = os.path.join(out_dir, "estimator_errors.svg")
        fig.savefig(plot_path, format="svg", metadata={"Date": None})
        plt.close(fig)
        written.append(plot_path)
    return written


def read_summary_csv(path):
    """Parse an emitted summary back into (header, rows); inverse of emit."""
    header, rows = {}, []
    with open(path, newline="") as fh:
        lines = [ln for ln in fh]
    data_lines = []
    for ln in lines:
        if ln.startswith("# "):
            key, _, value = ln[2:].partition(" = ")
            header[key.strip()] = value.rstrip("\n")
        else:
            data_lines.append(ln)
    reader = csv.DictReader(data_lines)
    for row in reader:
        rows.append(dict(row))
    return header, rows


_STATUS_LEVEL = {"finite": 1.0, "inconclusive": 0.5, "divergent": 0.0}


def write_condition_heatmap(rows, path):
    """Render a condition-matrix as one heatmap panel per family (SVG)."""
    families = sorted({r["family"] for r in rows})
    g_names = sorted({r["g"] for r in rows})
    f_names = sorted({r["f"] for r in rows})
    fig, axes = plt.subplots(1, len(families), figsize=(4.2 * len(families), 3.6), squeeze=False)
    for ax, family in zip(axes[0], families):
        grid = np.full((len(g_names), len(f_names)), np.nan)
        for row in rows:
            if row["family"] != family:
                continue
            i = g_names.index(row["g"])
            j = f_names.index(row["f"])
            grid[i, j] = _STATUS_LEVEL.get(row["status"], np.nan)
        im = ax.imshow(grid, vmin=0.0, vmax=1.0, cmap="RdYlGn")
        ax.set_xticks(range(len(f_names)), f_names, rotation=45, ha="right")
        ax.set_yticks(range(len(g_names)), g_names)
        ax.set_title(family)
    fig.colorbar(im, ax=axes[0], shrink=0.8, label="divergent=0, inconclusive=0.5, finite=1")
    fig.savefig(path, format="svg", metadata={"Date": None}, bbox_inches="tight")
    plt.close(fig)
    return path
