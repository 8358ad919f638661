"""Experiment protocol runners, report serialization, and the CLI."""

import json

import numpy as np
import pytest

from wavegp import (
    ExperimentConfig,
    NodeDataset,
    build_graph,
    emit_plot_data,
    run_classification,
    run_density,
    run_impulse,
    run_morlet_mismatch,
    run_scale_recovery,
    write_bundle,
    write_report,
)
from wavegp.cli import main


def tiny_config(**overrides):
    base = dict(
        levels=((3, 0.9), (3, 0.8)),
        cross_probs=(0.5,),
        fractions=(0.3, 0.6),
        repetitions=2,
        restarts=1,
        max_iters=20,
        seed=0,
    )
    base.update(overrides)
    return ExperimentConfig(**base)


def toy_bundle(tmp_path, block=6):
    """Two cliques joined by one edge, labels equal to the clique id."""
    n = 2 * block
    edges = []
    for lo in (0, block):
        for i in range(lo, lo + block):
            for j in range(i + 1, lo + block):
                edges.append((i, j, 1.0))
    edges.append((0, block, 1.0))
    labels = np.repeat([0, 1], block)
    ds = NodeDataset(
        graph=build_graph(n, edges),
        features=np.eye(2)[labels],
        labels=labels,
        train_indices=np.array([0, 2, block, block + 2]),
        val_indices=np.array([], dtype=np.int64),
        test_indices=np.setdiff1d(np.arange(n), [0, 2, block, block + 2]),
        name="two-cliques",
        n_classes=2,
    )
    out = tmp_path / "bundle"
    write_bundle(ds, out)
    return out


class TestConfig:
    def test_json_round_trip(self):
        cfg = tiny_config(mode="wls", degree=4, truth_betas=(0.9, 3.0))
        back = ExperimentConfig.from_json_dict(cfg.to_json_dict())
        assert back == cfg

    def test_from_json_file(self, tmp_path):
        cfg = tiny_config(repetitions=7)
        path = tmp_path / "c.json"
        path.write_text(json.dumps(cfg.to_json_dict()))
        assert ExperimentConfig.from_json_file(path) == cfg

    def test_validation(self):
        with pytest.raises(ValueError):
            tiny_config(mode="dense")
        with pytest.raises(ValueError):
            tiny_config(fractions=(0.0,))
        with pytest.raises(ValueError):
            tiny_config(repetitions=0)
        with pytest.raises(FileNotFoundError):
            tiny_config(dataset_path="/nonexistent/bundle")

    def test_filter_builders(self):
        cfg = tiny_config(truth_alpha=12.0, truth_betas=(1.2, 6.0), n_scales=3)
        truth = cfg.truth_filter()
        assert truth.low_pass_scale == 12.0
        assert truth.band_scales == (1.2, 6.0)
        init = cfg.init_filter()
        assert init.band_scales == (1.0, 1.0, 1.0)


class TestScaleRecovery:
    def test_row_cardinality_and_aggregates(self):
        cfg = tiny_config()
        report = run_scale_recovery(cfg)
        assert len(report.rows) == cfg.repetitions * len(cfg.fractions)
        assert {r["fraction"] for r in report.rows} == set(cfg.fractions)
        assert len(report.aggregates) == len(cfg.fractions)
        for agg in report.aggregates:
            assert agg["count"] == cfg.repetitions
            for metric in ("filter_mae", "prediction_mae"):
                assert (agg[f"{metric}_q05"] <= agg[f"{metric}_median"]
                        <= agg[f"{metric}_q95"])
        assert report.extra["mode"] == "exact"
        assert len(report.extra["eigenvalues"]) == 9
        assert report.extra["representative_fit"]["fraction"] == 0.6

    def test_deterministic_given_config(self):
        cfg = tiny_config()
        a = run_scale_recovery(cfg)
        b = run_scale_recovery(cfg)
        assert json.dumps(a.rows) == json.dumps(b.rows)

    def test_approximate_modes_run(self):
        for mode in ("uls", "cheb"):
            report = run_scale_recovery(
                tiny_config(mode=mode, degree=3, repetitions=1, fractions=(0.5,))
            )
            assert report.extra["mode"] == mode
            assert report.failures == 0


class TestMismatch:
    def test_forces_distinct_mothers_and_pairs_runs(self):
        report = run_morlet_mismatch(tiny_config(fractions=(0.5,)))
        extra = report.extra
        assert extra["generating_mother"] == "morlet"
        assert extra["fitting_mother"] == "mexican_hat"
        assert extra["generating_mother"] != extra["fitting_mother"]
        assert np.isfinite(extra["matched_median_prediction_mae"])
        assert np.isfinite(extra["mismatch_median_prediction_mae"])
        assert report.config["truth_mother"] == "morlet"

    def test_respects_explicit_mother_choice(self):
        report = run_morlet_mismatch(
            tiny_config(fractions=(0.5,), truth_mother="morlet",
                        fit_mother="mexican_hat")
        )
        assert report.extra["generating_mother"] == "morlet"


class TestClassification:
    def test_toy_bundle_run(self, tmp_path):
        bundle = toy_bundle(tmp_path)
        cfg = tiny_config(
            kind="classify", dataset_path=str(bundle), repetitions=2,
            max_epochs=40, mc_samples=4, identity_features=True, lr=0.05,
        )
        report = run_classification(cfg)
        assert len(report.rows) == 2
        for row in report.rows:
            assert row["accuracy"] is not None
            assert 0.0 <= row["accuracy"] <= 1.0
        assert len(report.extra["elbo_traces"]) == 2
        # 20 rejection thresholds per successful repetition
        assert len(report.extra["rejection_rows"]) == 40
        assert report.extra["identity_features"] is True

    def test_requires_dataset(self):
        with pytest.raises(ValueError):
            run_classification(tiny_config(kind="classify"))


class TestDensity:
    def test_rows_follow_grid(self):
        cfg = tiny_config(density_grid=12, density_probes=20, density_degree=40)
        report = run_density(cfg)
        assert len(report.rows) == 12
        cdf = [r["cdf"] for r in report.rows]
        assert all(b >= a for a, b in zip(cdf, cdf[1:]))
        assert len(report.extra["eigenvalues"]) == 9


class TestImpulse:
    def test_one_row_per_source_target_pair(self):
        cfg = tiny_config(impulse_nodes=(0, 4))
        report = run_impulse(cfg)
        assert len(report.rows) == 2 * 9
        assert {r["source"] for r in report.rows} == {0, 4}
        assert "eigenvalues" in report.extra
        assert report.extra["filter"]["alpha"] == 12.0


class TestReportOutput:
    def test_write_report_emits_json_and_plots(self, tmp_path):
        report = run_scale_recovery(tiny_config())
        path = write_report(report, tmp_path)
        assert path.name == "report.json"
        loaded = json.loads(path.read_text())
        assert loaded["rows"] == report.rows
        assert loaded["library_version"] == report.library_version
        for fname in ("boxplot.csv", "spectrum.csv", "filter_curves.csv"):
            assert (tmp_path / fname).exists(), fname

    def test_tampered_aggregates_rejected(self, tmp_path):
        report = run_scale_recovery(tiny_config())
        report.aggregates[0]["filter_mae_median"] = 0.0
        with pytest.raises(ValueError, match="aggregates"):
            write_report(report, tmp_path)

    def test_filter_curves_shape(self, tmp_path):
        report = run_scale_recovery(tiny_config())
        paths = emit_plot_data(report, "filter-curves", tmp_path)
        curve = (tmp_path / "filter_curves.csv").read_text().strip().splitlines()
        assert len(curve) == 401  # header + 400 grid points
        assert curve[0].split(",")[:3] == ["lambda", "truth", "fitted"]
        assert any(p.name == "filter_markers.csv" for p in paths)

    def test_spectrum_sorted_ascending(self, tmp_path):
        report = run_density(tiny_config(density_grid=8, density_probes=10,
                                         density_degree=30))
        emit_plot_data(report, "spectrum", tmp_path)
        rows = (tmp_path / "spectrum.csv").read_text().strip().splitlines()[1:]
        evs = [float(r.split(",")[1]) for r in rows]
        assert evs == sorted(evs)

    def test_unknown_plot_kind_raises(self, tmp_path):
        report = run_scale_recovery(tiny_config())
        with pytest.raises(ValueError, match="unknown plot kind"):
            emit_plot_data(report, "violin", tmp_path)


class TestCli:
    def write_config(self, tmp_path, **overrides):
        cfg = tiny_config(**overrides)
        path = tmp_path / "config.json"
        path.write_text(json.dumps(cfg.to_json_dict()))
        return path

    def test_density_run_succeeds(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path, density_grid=8, density_probes=10,
                                density_degree=30)
        out = tmp_path / "results"
        code = main(["density", "--config", str(cfg), "--out", str(out)])
        assert code == 0
        assert (out / "report.json").exists()
        assert (out / "density.csv").exists()
        assert "report.json" in capsys.readouterr().out

    def test_scale_recovery_with_flag_overrides(self, tmp_path):
        cfg = self.write_config(tmp_path)
        out = tmp_path / "results"
        code = main([
            "scale-recovery", "--config", str(cfg), "--out", str(out),
            "--reps", "1", "--fractions", "0.5", "--seed", "3",
        ])
        assert code == 0
        loaded = json.loads((out / "report.json").read_text())
        assert loaded["config"]["repetitions"] == 1
        assert loaded["config"]["fractions"] == [0.5]
        assert loaded["config"]["seed"] == 3

    def test_missing_out_dir_fails_cleanly(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        assert main(["density", "--config", str(cfg)]) == 1
        assert "output directory" in capsys.readouterr().err

    def test_bad_fraction_fails_cleanly(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        code = main(["scale-recovery", "--config", str(cfg),
                     "--out", str(tmp_path / "r"), "--fractions", "1.5"])
        assert code == 1
        assert "configuration error" in capsys.readouterr().err

    def test_classify_without_dataset_fails_cleanly(self, tmp_path, capsys):
        cfg = self.write_config(tmp_path)
        code = main(["classify", "--config", str(cfg), "--out", str(tmp_path / "r")])
        assert code == 1
        assert "dataset" in capsys.readouterr().err

    def test_malformed_config_file_fails_cleanly(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text("{not json")
        code = main(["density", "--config", str(bad), "--out", str(tmp_path / "r")])
        assert code == 1
        assert "configuration error" in capsys.readouterr().err
