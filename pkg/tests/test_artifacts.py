"""Unit tests for the osc artifact types."""

import json
import math
from io import BytesIO

import numpy as np
import pytest
from PIL import Image

from invariant_osc.artifacts import (
    CheckpointArtifact,
    EvaluationArtifact,
    GainTableArtifact,
    ImageArtifact,
    SummaryArtifact,
    TableArtifact,
    TrainingArtifact,
)


def _through_stream(artifact):
    stream = BytesIO()
    artifact.to_stream(stream)
    stream.seek(0)
    return type(artifact).from_stream(stream)


@pytest.fixture
def table():
    rows = [("oscar", 0, 1.25), ("identity_osc", 0, 0.1)]
    return TableArtifact(("name", "seed", "rmse_mm"), rows)


class TestImageArtifact:
    """Tests for ImageArtifact."""

    def test_rgba_normalization(self):
        """Images are normalized to RGBA mode."""
        artifact = ImageArtifact(Image.new("RGB", (10, 12), (255, 0, 0)))
        assert artifact.image.mode == "RGBA"
        assert (artifact.width, artifact.height) == (10, 12)

    def test_hash_tracks_pixels(self):
        """Identical pixels hash equal; different pixels do not."""
        red = ImageArtifact(Image.new("RGBA", (8, 8), (255, 0, 0, 255)))
        also_red = ImageArtifact(Image.new("RGBA", (8, 8), (255, 0, 0, 255)))
        green = ImageArtifact(Image.new("RGBA", (8, 8), (0, 255, 0, 255)))
        assert red.get_stable_hash() == also_red.get_stable_hash()
        assert red.get_stable_hash() != green.get_stable_hash()

    def test_stream_preserves_pixels(self):
        """Pixels and hash survive the stream."""
        artifact = ImageArtifact(Image.new("RGBA", (15, 25), (128, 64, 32, 200)))
        restored = _through_stream(artifact)
        assert restored.image.getpixel((0, 0)) == (128, 64, 32, 200)
        assert restored.get_stable_hash() == artifact.get_stable_hash()


class TestCheckpointArtifact:
    """Tests for CheckpointArtifact."""

    def test_namespaces(self):
        """Namespaces are the sorted distinct name prefixes."""
        artifact = CheckpointArtifact(
            {"residual/w0": np.ones(2), "base/w0": np.zeros(3), "base/b0": [1.0]}
        )
        assert artifact.namespaces == ("base", "residual")

    def test_bytes_are_the_archive(self):
        """The stream body equals the on-disk archive bytes."""
        artifact = CheckpointArtifact({"base/w0": np.arange(4.0)}, {"variant": "oscar"})
        stream = BytesIO()
        artifact.to_stream(stream)
        assert stream.getvalue()[8:] == artifact.to_bytes()
        restored = CheckpointArtifact.from_bytes(artifact.to_bytes())
        assert restored.meta == {"variant": "oscar"}
        np.testing.assert_array_equal(restored.state["base/w0"], np.arange(4.0))

    def test_hash_tracks_values(self):
        """A changed weight changes the hash."""
        a = CheckpointArtifact({"base/w0": np.zeros(3)})
        b = CheckpointArtifact({"base/w0": np.array([0.0, 0.0, 1e-12])})
        assert a.get_stable_hash() != b.get_stable_hash()


class TestTableArtifact:
    """Tests for TableArtifact."""

    def test_row_width_checked(self):
        """Rows must match the column count."""
        with pytest.raises(ValueError, match="expected 2"):
            TableArtifact(("a", "b"), [(1, 2, 3)])

    def test_records_and_columns(self, table):
        """Records map column names to cells."""
        assert table.records()[0] == {"name": "oscar", "seed": 0, "rmse_mm": 1.25}
        assert table.column("name") == ["oscar", "identity_osc"]
        assert len(table) == 2

    def test_from_records_orders_columns(self):
        """Cells follow the declared column order, not the record's."""
        built = TableArtifact.from_records(("b", "a"), [{"a": 1, "b": 2}])
        assert built.rows == [(2, 1)]

    def test_csv_floats_are_exact(self):
        """Floats are written with repr; booleans as 0/1."""
        text = TableArtifact(("x", "flag"), [(0.1 + 0.2, True)]).to_csv()
        assert text == "x,flag\n0.30000000000000004,1\n"

    def test_stream_round_trip(self, table):
        """Columns, rows and hash survive the stream."""
        restored = _through_stream(table)
        assert restored.columns == table.columns
        assert restored.records() == table.records()
        assert restored.get_stable_hash() == table.get_stable_hash()


class TestCompositeArtifacts:
    """Tests for training, gain, evaluation and summary artifacts."""

    def test_training_artifact(self, table):
        """Checkpoint and curve are read back in order."""
        artifact = TrainingArtifact(CheckpointArtifact({"base/w0": np.ones(2)}), table)
        restored = _through_stream(artifact)
        assert restored.curve.records() == table.records()
        assert restored.get_stable_hash() == artifact.get_stable_hash()

    def test_gain_table(self):
        """Gains are looked up per kind; unknown kinds give None."""
        grid = TableArtifact(("kind", "kp"), [("joint_pd", 50.0)])
        best = {"kp": 50.0, "damping_ratio": 1.0, "rmse_mm": 3.0}
        gains = GainTableArtifact({"joint_pd": best}, grid)
        assert gains.gain_for("joint_pd") == (50.0, 1.0)
        assert gains.gain_for("oscar") is None
        assert _through_stream(gains).to_dict() == gains.to_dict()

    def test_evaluation_traces(self, table):
        """Traces are regrouped by controller after the stream."""
        traces = {"oscar": {"x": np.ones((3, 2)), "x_d": np.zeros((3, 2))}}
        artifact = EvaluationArtifact(table, traces)
        restored = _through_stream(artifact)
        assert set(restored.traces) == {"oscar"}
        np.testing.assert_array_equal(restored.traces["oscar"]["x"], np.ones((3, 2)))
        assert restored.get_stable_hash() == artifact.get_stable_hash()

    def test_summary_json_is_strict(self):
        """NaN and infinity are written as null on disk."""
        summary = SummaryArtifact({"mean": math.nan, "per_seed": [1.0, math.inf], "units": "mm"})
        expected = {"mean": None, "per_seed": [1.0, None], "units": "mm"}
        assert json.loads(summary.to_json()) == expected
        assert _through_stream(summary).doc["units"] == "mm"
