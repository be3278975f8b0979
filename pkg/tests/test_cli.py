"""Tests for configuration loading and the command-line runs."""

import csv
import json

import numpy as np
import pytest
from scipy.stats import norm

from hemq.cli import build_parser, main, overrides_from_args
from hemq.errors import ConfigError
from hemq.io.datasets import load_csv, standardize
from hemq.io.runner import error_payload, exit_code_for, load_run_config
from hemq.models import RunCommand, TargetKind
from hemq.models.run_spec import nest_flat_config


def run_cli(capsys, *argv):
    """Run ``hemq`` in-process and return (exit code, parsed stdout JSON)."""
    code = main([str(a) for a in argv])
    return code, json.loads(capsys.readouterr().out)


def read_losses(path):
    with open(path, newline="") as fh:
        return np.array([float(row["loss"]) for row in csv.DictReader(fh)])


class TestConfigLoading:
    """Tests for KEY=VALUE files and flag overrides."""

    def test_flat_keys_nest(self):
        """Test that flat keys land in the nested model input."""
        nested = nest_flat_config({"SEED": "4", "r": "0.5", "lr": "0.01", "target": "recipe", "blank": ""})

        assert nested == {
            "seed": "4",
            "kernel": {"r": "0.5"},
            "optimizer": {"learning_rate": "0.01"},
            "target": {"kind": "recipe"},
        }

    def test_unknown_key(self):
        """Test that unknown keys raise KeyError."""
        with pytest.raises(KeyError):
            nest_flat_config({"colour": "blue"})

    def test_file_with_overrides(self, tmp_path):
        """Test that flags win over the file."""
        path = tmp_path / "run.env"
        path.write_text(
            "# mixture run\nSEED=3\nQ=36\nTARGET=recipe\nRECIPE=mixture-grid\nLR=0.05\n"
            'COMPONENTS=\nINIT_WEIGHTS=[0.5, 0.5]\n'
        )
        config = load_run_config(path, {"q": "2", "iters": "10"})

        assert config.seed == 3
        assert config.optimizer.seed == 3
        assert config.q == 2
        assert config.optimizer.learning_rate == 0.05
        assert config.optimizer.max_iterations == 10
        assert config.init_weights == [0.5, 0.5]
        assert config.target.kind == TargetKind.RECIPE

    def test_config_errors(self, tmp_path):
        """Test that every configuration problem becomes a ConfigError."""
        with pytest.raises(ConfigError, match="not found"):
            load_run_config(tmp_path / "missing.env")
        with pytest.raises(ConfigError, match="unknown config key"):
            load_run_config(None, {"seed": "1", "colour": "blue"})
        with pytest.raises(ConfigError, match="JSON"):
            load_run_config(None, {"seed": "1", "init_weights": "[0.5,"})
        with pytest.raises(ConfigError, match="invalid configuration"):
            load_run_config(None, {"target": "recipe", "recipe": "mixture-grid"})

    def test_parser_overrides(self):
        """Test flag parsing into flat keys."""
        args = build_parser().parse_args(
            ["flow", "--seed", "1", "--Q", "10", "--T", "1.75", "--lambda", "0.5", "--standardize"]
        )
        overrides = overrides_from_args(args)

        assert overrides["command"] == "flow"
        assert overrides["q"] == "10"
        assert overrides["t"] == "1.75"
        assert overrides["lambda"] == "0.5"
        assert overrides["standardize"] == "true"

    def test_error_payload(self):
        """Test the failure document and exit codes."""
        payload = error_payload("quantize", ConfigError("bad"))

        assert payload == {"ok": False, "error": "bad", "command": "quantize", "module": "io"}
        assert exit_code_for(ConfigError("bad")) == 2
        assert exit_code_for(RuntimeError("boom")) == 1


class TestCommands:
    """End-to-end runs of each subcommand."""

    def test_quantize_mixture_grid(self, tmp_path, capsys):
        """Test a short run on the grid mixture."""
        out = tmp_path / "quantize"
        code, result = run_cli(
            capsys, "quantize", "--seed", 1, "--target", "recipe", "--recipe", "mixture-grid",
            "--Q", 12, "--iters", 200, "--batch", 128, "--out", out,
        )

        assert code == 0
        assert result["ok"] is True
        assert result["command"] == RunCommand.QUANTIZE.value
        assert set(result["files"]) >= {"config.json", "metrics.json", "trajectory.csv", "quantizer.json"}
        losses = read_losses(out / "trajectory.csv")
        assert losses.shape == (200,)
        assert losses[-20:].mean() < losses[:20].mean()
        quantizer = json.loads((out / "quantizer.json").read_text())
        assert np.array(quantizer["points"]).shape == (12, 2)
        assert json.loads((out / "config.json").read_text())["seed"] == 1

    def test_identical_runs_reproduce(self, tmp_path, capsys):
        """Test equal iteration and loss columns, and bitwise quantizers, for one config."""
        outputs = []
        for name in ("first", "second"):
            out = tmp_path / name
            code, _ = run_cli(
                capsys, "quantize", "--seed", 7, "--target", "recipe", "--recipe", "mixture-grid",
                "--Q", 6, "--iters", 50, "--batch", 32, "--out", out,
            )
            assert code == 0
            with open(out / "trajectory.csv", newline="") as fh:
                rows = [(row["iteration"], row["loss"]) for row in csv.DictReader(fh)]
            outputs.append((rows, (out / "quantizer.json").read_text()))

        assert outputs[0] == outputs[1]

    def test_flow_monotone(self, tmp_path, capsys):
        """Test the flow run on a 2D standard normal."""
        out = tmp_path / "flow"
        code, result = run_cli(
            capsys, "flow", "--seed", 2, "--target", "recipe", "--recipe", "standard-normal",
            "--config", self_config(tmp_path, "DIMENSION=2\nA=0\n"),
            "--Q", 10, "--T", 1.0, "--dt", 0.005, "--out", out,
        )

        assert code == 0
        losses = read_losses(out / "trajectory.csv")
        assert losses.shape == (201,)
        assert np.all(np.diff(losses) < 0)
        assert result["metrics"]["method"] == "gradient-flow"

    def test_exact1d(self, tmp_path, capsys):
        """Test the closed-form quantiles of N(0, 1)."""
        out = tmp_path / "exact"
        code, _ = run_cli(
            capsys, "exact1d", "--seed", 0, "--target", "recipe", "--recipe", "standard-normal",
            "--a", 0, "--Q", 4, "--out", out,
        )

        assert code == 0
        points = np.array(json.loads((out / "quantizer.json").read_text())["points"])[:, 0]
        np.testing.assert_allclose(points, norm.ppf([0.125, 0.375, 0.625, 0.875]))
        assert (out / "trajectory.csv").read_text() == "iteration,loss,wall_ms\n"

    def test_exact1d_needs_energy_kernel(self, tmp_path, capsys):
        """Test the input-error exit code for a smoothed kernel."""
        code, result = run_cli(
            capsys, "exact1d", "--seed", 0, "--target", "recipe", "--recipe", "standard-normal",
            "--out", tmp_path / "exact",
        )

        assert code == 2
        assert result["ok"] is False
        assert result["module"] == "optimizers"
        assert not (tmp_path / "exact").exists()

    def test_estimate_one_sample(self, tmp_path, capsys):
        """Test the one-sample estimate against a stored quantizer."""
        quantizer = tmp_path / "quantizer.json"
        quantizer.write_text(json.dumps({"points": [[-0.6745], [0.6745]], "weights": [0.5, 0.5]}))
        code, result = run_cli(
            capsys, "estimate", "--seed", 5, "--target", "recipe", "--recipe", "standard-normal",
            "--quantizer", quantizer, "--samples", 400, "--out", tmp_path / "estimate",
        )

        assert code == 0
        estimate = result["metrics"]["estimate"]
        assert estimate["kind"] == "blue-one-sample"
        assert estimate["q"] == 2 and estimate["j"] == 400
        assert abs(estimate["value"]) < 0.1

    def test_estimate_two_sample_csv(self, tmp_path, capsys):
        """Test the two-sample estimate between two CSV files."""
        rng = np.random.default_rng(0)
        xs, zs = tmp_path / "xs.csv", tmp_path / "zs.csv"
        np.savetxt(xs, rng.normal(size=(50, 2)), delimiter=",")
        np.savetxt(zs, rng.normal(size=(60, 2)) + 3.0, delimiter=",")
        code, result = run_cli(
            capsys, "estimate", "--seed", 5, "--target", "csv", "--path", zs, "--xs", xs,
            "--estimator", "blue-two-sample", "--out", tmp_path / "estimate",
        )

        assert code == 0
        estimate = result["metrics"]["estimate"]
        assert (estimate["q"], estimate["j"]) == (50, 60)
        assert estimate["value"] > 1.0

    def test_eval_wine(self, wine_csv, tmp_path, capsys):
        """Test labelled metrics for a three-atom quantizer on the wines."""
        data = standardize(load_csv(wine_csv, label_col=0).data)
        quantizer = tmp_path / "quantizer.json"
        quantizer.write_text(
            json.dumps({"points": data[[0, 70, 150]].tolist(), "weights": [1 / 3, 1 / 3, 1 / 3]})
        )
        code, result = run_cli(
            capsys, "eval", "--seed", 0, "--target", "csv", "--path", wine_csv, "--label-col", 0,
            "--standardize", "--quantizer", quantizer, "--out", tmp_path / "eval",
        )

        assert code == 0
        metrics = result["metrics"]
        assert np.sum(metrics["confusion"]) == 178
        assert -1.0 <= metrics["ari"] <= 1.0
        assert 1 <= metrics["dve"] <= 3

    def test_malformed_config(self, tmp_path, capsys):
        """Test a nonzero exit and no outputs for a bad config file."""
        out = tmp_path / "never"
        code, result = run_cli(
            capsys, "quantize", "--config", self_config(tmp_path, "SEED=1\nNO_SUCH_KEY=3\n"),
            "--target", "recipe", "--recipe", "mixture-grid", "--out", out,
        )

        assert code == 2
        assert result["ok"] is False
        assert not out.exists()

    def test_divergence_exit_code(self, tmp_path, capsys):
        """Test the runtime-error exit code when the loss overflows."""
        out = tmp_path / "diverged"
        code, result = run_cli(
            capsys, "quantize", "--seed", 0, "--target", "recipe", "--recipe", "standard-normal",
            "--Q", 2, "--lr", "1e300", "--iters", 10, "--batch", 8, "--out", out,
        )

        assert code == 1
        assert "non-finite" in result["error"]
        assert not out.exists()


def self_config(tmp_path, text):
    """Write a KEY=VALUE file and return its path."""
    path = tmp_path / "run.env"
    path.write_text(text)
    return path
