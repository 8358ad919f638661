"""Experiment harness: protocol runners and machine-readable reports.

Each runner takes one ExperimentConfig, executes a full protocol (repeated
label sampling and refitting, mismatch pairs, variational classification,
density estimation, impulse responses), and returns an ExperimentReport with
per-repetition rows, quantile aggregates, and everything needed to regenerate
its plot series. Reports serialize to report.json plus one CSV per plot.

All randomness is seeded explicitly; a report rerun with the same config is
bitwise identical within one build.
"""

from __future__ import annotations

import csv
import json
import time
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .classify import (
    VariationalFitConfig,
    WaveletGPClassifier,
    fit_variational,
    predict_class,
    rejection_curve,
)
from .datasets import load_dataset, tfidf
from .density import estimate_cdf
from .filters import FilterSpec, MotherWavelet, combined_filter, evaluate_filter, impulse_response
from .graphs import Graph, NormalizedLaplacian, eigendecompose, normalized_laplacian
from .polyfit import ProjectionMatrix, build_projection, chebyshev_projection
from .regression import (
    WaveletGPModel,
    filter_mae,
    identity_kernel,
    optimize_hyperparameters,
    polynomial_kernel,
    predict,
)
from .synthetic import MultiScaleSpec, generate_multiscale, sample_labels, split_nodes

APPROX_MODES = ("exact", "uls", "wls", "cheb")


@dataclass(frozen=True)
class ExperimentConfig:
    """Flat, JSON-serializable bundle of protocol settings."""

    kind: str = "scale-recovery"
    # Graph source: nested-ER spec for synthetic runs, bundle path otherwise.
    levels: tuple[tuple[int, float], ...] = ((4, 0.9), (4, 0.3), (8, 0.6))
    cross_probs: tuple[float, ...] = (0.15, 0.02)
    dataset_path: str | None = None
    # Generating and fitting filters.
    truth_alpha: float = 12.0
    truth_betas: tuple[float, ...] = (1.2, 6.0)
    truth_mother: str = "mexican_hat"
    fit_mother: str = "mexican_hat"
    n_scales: int = 2
    # Covariance backend.
    mode: str = "exact"
    degree: int = 5
    # Regression protocol.
    fractions: tuple[float, ...] = (0.1, 0.3, 0.5, 0.7)
    repetitions: int = 30
    restarts: int = 3
    max_iters: int = 300
    lr: float = 0.01
    seed: int = 0
    # Spectral density settings (weights for wls mode and density runs).
    density_grid: int = 30
    density_probes: int = 100
    density_degree: int = 100
    # Classification protocol.
    feature_degree: int = 3
    identity_features: bool = False
    mc_samples: int = 16
    max_epochs: int = 300
    # Impulse runs.
    impulse_nodes: tuple[int, ...] = (0,)
    out_dir: str | None = None

    def __post_init__(self):
        if self.mode not in APPROX_MODES:
            raise ValueError(f"mode must be one of {APPROX_MODES}, got {self.mode!r}")
        if self.repetitions < 1 or self.restarts < 1:
            raise ValueError("repetitions and restarts must be positive")
        for f in self.fractions:
            if not 0.0 < f < 1.0:
                raise ValueError(f"training fraction must be in (0, 1), got {f}")
        if self.dataset_path is not None and not Path(self.dataset_path).exists():
            raise FileNotFoundError(f"dataset path does not exist: {self.dataset_path}")

    def multiscale_spec(self) -> MultiScaleSpec:
        return MultiScaleSpec(
            levels=tuple((int(s), float(p)) for s, p in self.levels),
            cross_probs=tuple(float(p) for p in self.cross_probs),
            seed=self.seed,
        )

    def truth_filter(self) -> FilterSpec:
        return FilterSpec(
            low_pass_scale=self.truth_alpha,
            band_scales=self.truth_betas,
            mother=MotherWavelet(self.truth_mother),
        )

    def init_filter(self) -> FilterSpec:
        return FilterSpec(
            low_pass_scale=1.0,
            band_scales=(1.0,) * self.n_scales,
            mother=MotherWavelet(self.fit_mother),
        )

    def to_json_dict(self) -> dict:
        out = asdict(self)
        out["levels"] = [list(lv) for lv in self.levels]
        return out

    @classmethod
    def from_json_dict(cls, data: dict) -> "ExperimentConfig":
        kwargs = dict(data)
        if "levels" in kwargs:
            kwargs["levels"] = tuple((int(s), float(p)) for s, p in kwargs["levels"])
        for key in ("cross_probs", "truth_betas", "fractions", "impulse_nodes"):
            if key in kwargs:
                kwargs[key] = tuple(kwargs[key])
        return cls(**kwargs)

    @classmethod
    def from_json_file(cls, path) -> "ExperimentConfig":
        return cls.from_json_dict(json.loads(Path(path).read_text()))


@dataclass(frozen=True, eq=False)
class ExperimentReport:
    config: dict
    rows: list[dict]
    aggregates: list[dict]
    failures: int
    wall_clock: float
    library_version: str
    extra: dict = field(default_factory=dict)

    def to_json_dict(self) -> dict:
        return {
            "config": self.config,
            "rows": self.rows,
            "aggregates": self.aggregates,
            "failures": self.failures,
            "wall_clock_seconds": self.wall_clock,
            "library_version": self.library_version,
            "extra": self.extra,
        }


def _aggregate(rows: list[dict], group_key: str, metrics: tuple[str, ...]) -> list[dict]:
    """Median and 5/95% quantiles of each metric per group value."""
    out = []
    for value in sorted({r[group_key] for r in rows}):
        member_rows = [r for r in rows if r[group_key] == value]
        entry: dict = {group_key: value, "count": len(member_rows)}
        for m in metrics:
            vals = np.array([r[m] for r in member_rows if r[m] is not None], dtype=np.float64)
            if len(vals):
                entry[f"{m}_median"] = float(np.median(vals))
                entry[f"{m}_q05"] = float(np.quantile(vals, 0.05))
                entry[f"{m}_q95"] = float(np.quantile(vals, 0.95))
        out.append(entry)
    return out


def _projection_for(
    config: ExperimentConfig, lap: NormalizedLaplacian, mode: str
) -> ProjectionMatrix | None:
    if mode == "exact":
        return None
    if mode == "cheb":
        return chebyshev_projection(config.degree)
    xi = np.linspace(0.0, 2.0, config.density_grid)
    if mode == "uls":
        return build_projection(xi, config.degree)
    est = estimate_cdf(
        lap,
        grid_size=config.density_grid,
        probes=config.density_probes,
        degree=config.density_degree,
        seed=config.seed,
    )
    return build_projection(est.sample_points, config.degree, weights=est.weights)


def _seed_int(seq: np.random.SeedSequence) -> int:
    return int(seq.generate_state(1, dtype=np.uint64)[0])


def _recovery_rows(
    config: ExperimentConfig,
    graph: Graph,
    truth: FilterSpec,
    fit_mother: MotherWavelet,
    mode: str,
) -> tuple[list[dict], int, dict]:
    """Shared engine for scale-recovery and mismatch runs."""
    lap = normalized_laplacian(graph)
    dec = eigendecompose(lap)
    proj = _projection_for(config, lap, mode)
    init_spec = replace(config.init_filter(), mother=fit_mother)

    rows: list[dict] = []
    failures = 0
    rep_seeds = np.random.SeedSequence(config.seed).spawn(config.repetitions)
    best_fit: dict | None = None
    for rep, rep_seed in enumerate(rep_seeds):
        subs = rep_seed.spawn(1 + 2 * len(config.fractions))
        sample = sample_labels(dec, truth, _seed_int(subs[0]))
        for i, frac in enumerate(config.fractions):
            train, test = split_nodes(graph.n_nodes, frac, _seed_int(subs[1 + 2 * i]))
            kwargs = dict(decomposition=dec) if mode == "exact" else dict(projection=proj)
            model = WaveletGPModel(
                lap, init_spec, identity_kernel(), 0.1, train, **kwargs
            )
            try:
                res = optimize_hyperparameters(
                    model,
                    sample.values[train],
                    restarts=config.restarts,
                    max_iters=config.max_iters,
                    seed=_seed_int(subs[2 + 2 * i]),
                    lr=config.lr,
                )
                pred = predict(res.model, sample.values[train], test)
            except (RuntimeError, np.linalg.LinAlgError):
                failures += 1
                rows.append({
                    "repetition": rep, "fraction": frac,
                    "filter_mae": None, "prediction_mae": None, "objective": None,
                    "fitted_scales": None, "failed": True,
                })
                continue
            fmae = filter_mae(res.model.filter_spec, truth, dec.eigenvalues)
            pmae = float(np.mean(np.abs(pred.mean - sample.values[test])))
            rows.append({
                "repetition": rep, "fraction": frac,
                "filter_mae": fmae, "prediction_mae": pmae,
                "objective": res.objective,
                "fitted_scales": res.model.filter_spec.scales().tolist(),
                "failed": False,
            })
            if frac == max(config.fractions):
                if best_fit is None or fmae < best_fit["filter_mae"]:
                    best_fit = {
                        "fraction": frac,
                        "filter_mae": fmae,
                        "filter": res.model.filter_spec.to_json_dict(),
                    }
    extra = {
        "eigenvalues": dec.eigenvalues.tolist(),
        "truth_filter": truth.to_json_dict(),
        "representative_fit": best_fit,
        "mode": mode,
    }
    return rows, failures, extra


def run_scale_recovery(config: ExperimentConfig) -> ExperimentReport:
    """Repeatedly sample labels from the truth filter, refit, measure MAEs."""
    start = time.time()
    graph = generate_multiscale(config.multiscale_spec())
    truth = config.truth_filter()
    rows, failures, extra = _recovery_rows(
        config, graph, truth, MotherWavelet(config.fit_mother), config.mode
    )
    return ExperimentReport(
        config=config.to_json_dict(),
        rows=rows,
        aggregates=_aggregate(rows, "fraction", ("filter_mae", "prediction_mae")),
        failures=failures,
        wall_clock=time.time() - start,
        library_version=__version__,
        extra=extra,
    )


def run_morlet_mismatch(config: ExperimentConfig) -> ExperimentReport:
    """Mismatch protocol: generate with one mother, fit with another.

    Runs the mismatched fit and, under identical seeds, a matched companion
    (fitting mother equal to the generating mother) for paired comparison.
    """
    start = time.time()
    cfg = replace(config, truth_mother=MotherWavelet.MORLET.value) if (
        config.truth_mother == config.fit_mother
    ) else config
    graph = generate_multiscale(cfg.multiscale_spec())
    truth = cfg.truth_filter()
    rows, failures, extra = _recovery_rows(
        cfg, graph, truth, MotherWavelet(cfg.fit_mother), cfg.mode
    )
    matched_rows, matched_failures, _ = _recovery_rows(
        cfg, graph, truth, truth.mother, cfg.mode
    )
    med = lambda rs: float(np.median([
        r["prediction_mae"] for r in rs if r["prediction_mae"] is not None
    ]))
    extra.update({
        "generating_mother": truth.mother.value,
        "fitting_mother": cfg.fit_mother,
        "matched_median_prediction_mae": med(matched_rows),
        "mismatch_median_prediction_mae": med(rows),
        "matched_failures": matched_failures,
    })
    return ExperimentReport(
        config=cfg.to_json_dict(),
        rows=rows,
        aggregates=_aggregate(rows, "fraction", ("filter_mae", "prediction_mae")),
        failures=failures,
        wall_clock=time.time() - start,
        library_version=__version__,
        extra=extra,
    )


def run_classification(config: ExperimentConfig) -> ExperimentReport:
    """Variational classification on a dataset bundle, with rejection curve."""
    if config.dataset_path is None:
        raise ValueError("classification runs need a dataset bundle path")
    start = time.time()
    dataset = load_dataset(config.dataset_path)
    lap = normalized_laplacian(dataset.graph)
    if config.identity_features:
        kernel = identity_kernel()
    else:
        kernel = polynomial_kernel(tfidf(dataset.features), degree=config.feature_degree)
    proj = _projection_for(config, lap, config.mode)
    kwargs = (
        dict(decomposition=eigendecompose(lap)) if config.mode == "exact"
        else dict(projection=proj)
    )
    init_spec = config.init_filter()

    rows: list[dict] = []
    failures = 0
    traces: list[list[float]] = []
    rejection_rows: list[dict] = []
    rep_seeds = np.random.SeedSequence(config.seed).spawn(config.repetitions)
    for rep, rep_seed in enumerate(rep_seeds):
        classifier = WaveletGPClassifier(
            lap, init_spec, kernel, dataset.n_classes, dataset.train_indices, **kwargs
        )
        try:
            fit = fit_variational(
                classifier,
                dataset.labels[dataset.train_indices],
                VariationalFitConfig(
                    lr=config.lr,
                    max_epochs=config.max_epochs,
                    mc_samples=config.mc_samples,
                    seed=_seed_int(rep_seed),
                ),
            )
            pred = predict_class(
                fit.model, fit.state, fit.inducing, dataset.test_indices,
                seed=_seed_int(rep_seed.spawn(1)[0]),
            )
        except (RuntimeError, np.linalg.LinAlgError):
            failures += 1
            rows.append({"repetition": rep, "accuracy": None, "elbo": None, "failed": True})
            continue
        acc = float(np.mean(pred.classes == dataset.labels[dataset.test_indices]))
        rows.append({
            "repetition": rep,
            "accuracy": acc,
            "elbo": fit.best_elbo,
            "fitted_scales": fit.model.filter_spec.scales().tolist()
            if isinstance(fit.model.filter_spec, FilterSpec) else None,
            "failed": False,
        })
        traces.append(fit.elbo_trace.tolist())
        thresholds = np.quantile(pred.variance, np.linspace(0.05, 1.0, 20))
        for point in rejection_curve(
            pred.probabilities, pred.variance,
            dataset.labels[dataset.test_indices], thresholds,
        ):
            rejection_rows.append({
                "repetition": rep,
                "threshold": point.threshold,
                "kept_fraction": point.kept_fraction,
                "accuracy": point.accuracy,
            })
    rows_key = [dict(r, protocol=0) for r in rows]
    return ExperimentReport(
        config=config.to_json_dict(),
        rows=rows_key,
        aggregates=_aggregate(rows_key, "protocol", ("accuracy", "elbo")),
        failures=failures,
        wall_clock=time.time() - start,
        library_version=__version__,
        extra={
            "dataset": dataset.name,
            "identity_features": config.identity_features,
            "elbo_traces": traces,
            "rejection_rows": rejection_rows,
        },
    )


def run_density(config: ExperimentConfig) -> ExperimentReport:
    """Estimate the spectral density of the configured graph."""
    start = time.time()
    if config.dataset_path is not None:
        graph = load_dataset(config.dataset_path).graph
    else:
        graph = generate_multiscale(config.multiscale_spec())
    lap = normalized_laplacian(graph)
    est = estimate_cdf(
        lap,
        grid_size=config.density_grid,
        probes=config.density_probes,
        degree=config.density_degree,
        seed=config.seed,
    )
    extra: dict = {"density": est.to_json_dict()}
    rows = [{
        "sample_point": float(x), "cdf": float(c), "weight": float(w), "protocol": 0,
    } for x, c, w in zip(est.sample_points, est.cdf_values, est.weights)]
    if graph.n_nodes <= 2000:
        dec = eigendecompose(lap)
        extra["eigenvalues"] = dec.eigenvalues.tolist()
    return ExperimentReport(
        config=config.to_json_dict(),
        rows=rows,
        aggregates=_aggregate(rows, "protocol", ("cdf", "weight")),
        failures=0,
        wall_clock=time.time() - start,
        library_version=__version__,
        extra=extra,
    )


def run_impulse(config: ExperimentConfig) -> ExperimentReport:
    """Impulse responses of the truth filter at the configured nodes."""
    start = time.time()
    graph = generate_multiscale(config.multiscale_spec())
    lap = normalized_laplacian(graph)
    dec = eigendecompose(lap)
    truth = config.truth_filter()
    rows = []
    for node in config.impulse_nodes:
        resp = impulse_response(dec, truth, int(node))
        for target, value in enumerate(resp):
            rows.append({
                "source": int(node), "node": target, "response": float(value),
                "protocol": 0,
            })
    return ExperimentReport(
        config=config.to_json_dict(),
        rows=rows,
        aggregates=_aggregate(rows, "protocol", ("response",)),
        failures=0,
        wall_clock=time.time() - start,
        library_version=__version__,
        extra={
            "filter": truth.to_json_dict(),
            "eigenvalues": dec.eigenvalues.tolist(),
        },
    )


def _write_csv(path: Path, fieldnames: list[str], rows: list[dict]) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames)
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    return path


PLOT_KINDS = ("boxplot", "spectrum", "filter-curves", "elbo", "rejection", "density")


def emit_plot_data(report: ExperimentReport, kind: str, out_dir) -> list[Path]:
    """Write one plot-ready CSV series; returns the created paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if kind == "boxplot":
        aggs = report.aggregates
        if not aggs:
            return []
        names = list(aggs[0].keys())
        return [_write_csv(out / "boxplot.csv", names, aggs)]
    if kind == "spectrum":
        evs = report.extra.get("eigenvalues")
        if evs is None:
            raise ValueError("report has no eigenvalues to plot")
        rows = [{"rank": i, "eigenvalue": v} for i, v in enumerate(sorted(evs))]
        return [_write_csv(out / "spectrum.csv", ["rank", "eigenvalue"], rows)]
    if kind == "filter-curves":
        truth = report.extra.get("truth_filter") or report.extra.get("filter")
        if truth is None:
            raise ValueError("report has no filter curves to plot")
        truth_spec = FilterSpec.from_json_dict(truth)
        grid = np.linspace(0.0, 2.0, 400)
        series = {"lambda": grid, "truth": combined_filter(truth_spec, grid)}
        rep_fit = report.extra.get("representative_fit")
        if rep_fit:
            fitted = FilterSpec.from_json_dict(rep_fit["filter"])
            series["fitted"] = combined_filter(fitted, grid)
        rows = [
            {k: float(v[i]) for k, v in series.items()} for i in range(len(grid))
        ]
        paths = [_write_csv(out / "filter_curves.csv", list(series.keys()), rows)]
        evs = report.extra.get("eigenvalues")
        if evs is not None:
            marker_rows = [{
                "eigenvalue": float(ev),
                "truth": float(combined_filter(truth_spec, ev)),
            } for ev in evs]
            paths.append(_write_csv(
                out / "filter_markers.csv", ["eigenvalue", "truth"], marker_rows
            ))
        return paths
    if kind == "elbo":
        traces = report.extra.get("elbo_traces", [])
        paths = []
        for i, trace in enumerate(traces):
            rows = [{"epoch": e, "elbo": v} for e, v in enumerate(trace)]
            paths.append(_write_csv(out / f"elbo_{i}.csv", ["epoch", "elbo"], rows))
        return paths
    if kind == "rejection":
        rej = report.extra.get("rejection_rows", [])
        if not rej:
            return []
        return [_write_csv(
            out / "rejection.csv",
            ["repetition", "threshold", "kept_fraction", "accuracy"], rej,
        )]
    if kind == "density":
        dens = report.extra.get("density")
        if dens is None:
            raise ValueError("report has no density estimate")
        rows = [{
            "sample_point": x, "cdf": c, "weight": w,
        } for x, c, w in zip(dens["sample_points"], dens["cdf_values"], dens["weights"])]
        return [_write_csv(out / "density.csv", ["sample_point", "cdf", "weight"], rows)]
    raise ValueError(f"unknown plot kind {kind!r}; known kinds: {PLOT_KINDS}")


def write_report(report: ExperimentReport, out_dir) -> Path:
    """Write report.json plus every applicable plot CSV into out_dir.

    Verifies on write that the stored aggregates match a recomputation from
    the per-repetition rows.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    group_key = "fraction" if report.rows and "fraction" in report.rows[0] else "protocol"
    metrics = tuple(
        k for k in ("filter_mae", "prediction_mae", "accuracy", "elbo", "cdf", "weight", "response")
        if report.rows and k in report.rows[0]
    )
    recomputed = _aggregate(report.rows, group_key, metrics)
    if json.dumps(recomputed, sort_keys=True) != json.dumps(report.aggregates, sort_keys=True):
        raise ValueError("report aggregates do not match their rows")
    path = out / "report.json"
    path.write_text(json.dumps(report.to_json_dict(), indent=2))
    for kind in PLOT_KINDS:
        try:
            emit_plot_data(report, kind, out)
        except ValueError:
            continue
    return path
