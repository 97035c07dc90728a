"""Tests for the experiment runner: graph execution and files on disk."""

import csv
import json
from dataclasses import replace
from pathlib import Path

import pytest

from invariant_osc.autodiff import inject_fault
from invariant_osc.errors import CheckpointError, GradientCheckError
from invariant_osc.harness import runner
from invariant_osc.harness.checkpoint import load_checkpoint
from invariant_osc.harness.metrics import METRICS_COLUMNS
from invariant_osc.sim.replay_log import read_replay_archive
from tests.conftest import tiny_config


def _csv_rows(path):
    with path.open(encoding="utf-8", newline="") as handle:
        return list(csv.DictReader(handle))


@pytest.fixture(scope="module")
def train_run(tmp_path_factory):
    config = tiny_config(tmp_path_factory.mktemp("runs"))
    return config, runner.run_regime(config, "train")


class TestRunRegime:
    """Tests for run_regime."""

    def test_train_files(self, train_run):
        """Training writes metrics, summary, checkpoints, curves, gains and a plot."""
        config, result = train_run
        out = result.out_dir
        assert out.name == "train"
        for name in (
            "metrics.csv",
            "summary.json",
            "pretrain_s0.ckpt",
            "pretrain_s0_loss.csv",
            "train_s0.ckpt",
            "train_s0_loss.csv",
            "gains.json",
            "tracking_plot_s0.png",
        ):
            assert (out / name).exists(), name
            assert out / name in result.files

    def test_metrics_csv(self, train_run):
        """One row per controller and episode with the fixed header."""
        _, result = train_run
        rows = _csv_rows(result.out_dir / "metrics.csv")
        assert tuple(rows[0]) == METRICS_COLUMNS
        assert {r["controller"] for r in rows} >= {"oscar", "analytical_osc", "joint_pd"}

    def test_summary_json(self, train_run):
        """The summary is strict JSON with millimetre units."""
        _, result = train_run
        doc = json.loads((result.out_dir / "summary.json").read_text(encoding="utf-8"))
        assert doc["units"]["rmse"] == "mm"
        assert "oscar" in doc["cells"]["train"]["oscar"]

    def test_checkpoint_records_config(self, train_run):
        """Checkpoints carry the config hash."""
        config, result = train_run
        checkpoint = load_checkpoint(result.out_dir / "train_s0.ckpt")
        assert checkpoint.meta["config_hash"] == config.stable_hash()
        assert checkpoint.namespaces == ("base", "encoder", "residual")

    def test_zeroshot_from_checkpoint(self, train_run):
        """Out-of-distribution evaluation reuses the trained model and trains nothing."""
        config, result = train_run
        zeroshot = runner.run_regime(
            config, "zeroshot", checkpoint=str(result.out_dir / "train_s0.ckpt"), sweep=False
        )
        assert zeroshot.out_dir.name == "zeroshot"
        assert not list(zeroshot.out_dir.glob("*.ckpt"))
        rows = _csv_rows(zeroshot.out_dir / "metrics.csv")
        assert {r["regime"] for r in rows} == {"zeroshot"}

    def test_episode_logs(self, train_run):
        """With log_episodes each controller's first episode is written as CSV and replay."""
        config, result = train_run
        config = config.with_overrides(evaluation=replace(config.evaluation, log_episodes=True))
        checkpoint = str(result.out_dir / "train_s0.ckpt")
        zeroshot = runner.run_regime(config, "zeroshot", checkpoint=checkpoint, sweep=False)
        logs = zeroshot.out_dir / "episodes"
        records = read_replay_archive(logs / "eval_s0.replay")
        controllers = [r["controller"] for r in records]
        assert controllers == sorted(controllers)
        assert "oscar" in controllers
        for record in records:
            rows = _csv_rows(logs / f"eval_s0_{record['controller']}.csv")
            assert len(rows) == record["steps"] == len(record["t"])

    def test_zeroshot_needs_checkpoint(self, tiny):
        """Without a checkpoint the zero-shot regime refuses to run."""
        with pytest.raises(CheckpointError, match="needs a checkpoint"):
            runner.run_regime(tiny, "zeroshot")

    def test_missing_checkpoint_file(self, tiny, tmp_path):
        """A checkpoint path that does not exist is reported."""
        with pytest.raises(CheckpointError, match="not found"):
            runner.run_regime(tiny, "adapt", checkpoint=str(tmp_path / "none.ckpt"))

    def test_parallel_matches_serial(self, tmp_path):
        """Thread-pool execution writes the same metrics as serial execution."""
        def metrics(out, parallel):
            config = tiny_config(tmp_path / out)
            config = config.with_overrides(evaluation=replace(config.evaluation, seed_count=2))
            result = runner.run_regime(config, "train", parallel=parallel, sweep=False)
            return (result.out_dir / "metrics.csv").read_bytes()

        assert metrics("serial", False) == metrics("threads", True)


class TestRobustness:
    """Tests for run_robustness and per-seed checkpoints."""

    def test_degradation_per_controller(self, tiny):
        """Train and zero-shot cells share seeds, models and gains; every controller degrades."""
        result = runner.run_robustness(tiny, sweep=False)
        out = result.out_dir
        assert out.name == "robustness"
        doc = json.loads((out / "summary.json").read_text(encoding="utf-8"))
        entries = doc["degradation_mm"]["oscar"]
        assert {"oscar", "fixed_gain_osc", "analytical_osc", "joint_pd"} <= set(entries)
        for entry in entries.values():
            assert set(entry["per_seed"]) == {str(s) for s in tiny.seeds}
        rows = _csv_rows(out / "degradation.csv")
        assert tuple(rows[0]) == runner.DEGRADATION_COLUMNS
        assert {r["controller"] for r in rows} == set(entries)
        regimes = {r["regime"] for r in _csv_rows(out / "metrics.csv")}
        assert regimes == {"train", "zeroshot"}
        assert (out / "train_s0.ckpt").exists()

    def test_degradation_from_train_directory(self, train_run):
        """A train output directory supplies the checkpoint; nothing is retrained."""
        config, trained = train_run
        result = runner.run_robustness(config, checkpoint=str(trained.out_dir), sweep=False)
        assert not list(result.out_dir.glob("*.ckpt"))
        doc = json.loads((result.out_dir / "summary.json").read_text(encoding="utf-8"))
        assert "oscar" in doc["degradation_mm"]["oscar"]

    def test_checkpoint_path(self, tmp_path):
        """Directories resolve to the seed's own file; files are used as given."""
        assert runner.checkpoint_path(tmp_path, 7) == tmp_path / "train_s7.ckpt"
        single = tmp_path / "model.ckpt"
        assert runner.checkpoint_path(single, 7) == single

    def test_each_seed_loads_its_own_checkpoint(self, tmp_path):
        """With two seeds, zero-shot evaluation reads train_s<seed>.ckpt for each seed."""
        config = tiny_config(tmp_path / "two")
        config = config.with_overrides(evaluation=replace(config.evaluation, seed_count=2))
        trained = runner.run_regime(config, "train", sweep=False)
        (trained.out_dir / "train_s1.ckpt").unlink()
        with pytest.raises(CheckpointError, match="train_s1.ckpt"):
            runner.run_regime(config, "zeroshot", checkpoint=str(trained.out_dir), sweep=False)


class TestOtherRuns:
    """Tests for pretraining, sweep, ablation and gradcheck runs."""

    def test_pretrain(self, tiny):
        """Pretraining writes one base checkpoint per seed."""
        result = runner.run_pretrain(tiny)
        assert load_checkpoint(result.out_dir / "pretrain_s0.ckpt").namespaces == ("base",)
        assert (result.out_dir / "pretrain_s0_loss.csv").exists()

    def test_sweep_with_checkpoint(self, tiny, train_run):
        """The sweep evaluates the given model without training."""
        _, trained = train_run
        result = runner.run_sweep(tiny, checkpoint=str(trained.out_dir / "train_s0.ckpt"))
        gains = json.loads((result.out_dir / "gains.json").read_text(encoding="utf-8"))
        assert set(gains["gains_s0"]) == {"oscar", "analytical_osc", "identity_osc"}
        assert not list(result.out_dir.glob("*.ckpt"))

    def test_ablation(self, tiny):
        """One ablation row per variant, in the requested order."""
        variants = ("oscar", "no_residual_no_pretrain")
        result = runner.run_ablation(tiny, variants=variants)
        rows = _csv_rows(result.out_dir / "ablation.csv")
        assert [r["variant"] for r in rows] == list(variants)
        assert tuple(rows[0]) == runner.ABLATION_COLUMNS
        doc = json.loads((result.out_dir / "ablation.json").read_text(encoding="utf-8"))
        assert [row["variant"] for row in doc["rows"]] == list(variants)
        assert (result.out_dir / "metrics.csv").exists()

    def test_gradcheck_passes(self, tiny):
        """A clean suite returns its results and writes them as JSON."""
        results = runner.run_gradcheck(tiny, samples=3)
        report = Path(tiny.out_dir) / "gradcheck" / "gradcheck.json"
        doc = json.loads(report.read_text(encoding="utf-8"))
        assert [entry["name"] for entry in doc] == [r.name for r in results]
        assert all(entry["passed"] for entry in doc)

    def test_gradcheck_fault(self, tiny):
        """An injected backward fault fails the run but still writes the report."""
        with pytest.raises(GradientCheckError, match="gradient checks failed"):
            runner.run_gradcheck(tiny, samples=3, fault=lambda: inject_fault("softplus"))
        assert (Path(tiny.out_dir) / "gradcheck" / "gradcheck.json").exists()
