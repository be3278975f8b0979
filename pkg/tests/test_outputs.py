"""Test output directory fallback and the run file formats."""

import json
from pathlib import Path

import numpy as np
import pytest

from hemq.errors import DatasetFormatError
from hemq.io.outputs import (
    load_quantizer,
    quantizer_json,
    resolve_output_dir,
    snapshots_json,
    trajectory_csv,
    write_outputs,
)
from hemq.measures import DiscreteMeasure
from hemq.models import OptimizerConfig, RunRecord, Snapshot, TrajectoryPoint


def blocked_dir(tmp_path: Path) -> Path:
    """A directory path that cannot be created: its parent is a regular file."""
    blocker = tmp_path / "blocker"
    blocker.write_text("not a directory")
    return blocker / "outputs"


def test_inaccessible_directory_fallback(tmp_path, monkeypatch):
    """Test that outputs fall back to HEMQ_OUTPUT_DIR when the directory is not usable."""
    fallback = tmp_path / "fallback"
    monkeypatch.setenv("HEMQ_OUTPUT_DIR", str(fallback))

    directory, message = resolve_output_dir(blocked_dir(tmp_path))

    assert directory == fallback
    assert fallback.is_dir()
    assert message is not None and str(fallback) in message


def test_valid_directory(tmp_path):
    """Test that the requested directory is used (and created) when accessible."""
    requested = tmp_path / "runs" / "first"

    directory, message = resolve_output_dir(requested)

    assert directory == requested
    assert message is None
    assert requested.is_dir()
    assert not (requested / ".write_test").exists()


def test_no_writable_directory(tmp_path, monkeypatch):
    """Test the error when neither directory is usable."""
    monkeypatch.setenv("HEMQ_OUTPUT_DIR", str(blocked_dir(tmp_path) / "again"))

    with pytest.raises(RuntimeError, match="Cannot write"):
        resolve_output_dir(blocked_dir(tmp_path))


def test_write_outputs(tmp_path):
    """Test that staged files land with their exact contents and no temporaries."""
    written = write_outputs(tmp_path, {"a.json": "{}\n", "b.csv": "x\n1\n"})

    assert sorted(written) == ["a.json", "b.csv"]
    assert (tmp_path / "b.csv").read_text() == "x\n1\n"
    assert not list(tmp_path.glob("*.tmp"))


def test_trajectory_csv_round_trips_floats():
    """Test the header and bit-exact float formatting."""
    loss = 0.1 + 0.2
    record = RunRecord(
        trajectory=[TrajectoryPoint(iteration=1, loss=loss, wall_ms=1.5)],
        quantizer=DiscreteMeasure.uniform([[0.0]]),
        config=OptimizerConfig(),
    )
    lines = trajectory_csv(record).splitlines()

    assert lines[0] == "iteration,loss,wall_ms"
    assert float(lines[1].split(",")[1]) == loss
    assert trajectory_csv(None) == "iteration,loss,wall_ms\n"


def test_snapshots_json():
    """Test snapshot serialization."""
    record = RunRecord(
        quantizer=DiscreteMeasure.uniform([[0.0]]),
        config=OptimizerConfig(),
        snapshots=[Snapshot(iteration=10, points=[[0.5]])],
    )

    assert json.loads(snapshots_json(record)) == [{"iteration": 10, "points": [[0.5]]}]


def test_quantizer_file_round_trip(tmp_path):
    """Test that a written quantizer loads back bit for bit."""
    measure = DiscreteMeasure(points=[[0.1, 1 / 3], [2.0, -7.25]], weights=[0.3, 0.7])
    path = tmp_path / "quantizer.json"
    path.write_text(quantizer_json(measure))

    loaded = load_quantizer(path)

    np.testing.assert_array_equal(loaded.points, measure.points)
    np.testing.assert_array_equal(loaded.weights, measure.weights)


def test_load_quantizer_rejects_other_json(tmp_path):
    """Test that files without points and weights are rejected."""
    path = tmp_path / "quantizer.json"
    path.write_text('{"points": [[0.0]]}')
    with pytest.raises(DatasetFormatError):
        load_quantizer(path)

    path.write_text("not json")
    with pytest.raises(DatasetFormatError):
        load_quantizer(path)
