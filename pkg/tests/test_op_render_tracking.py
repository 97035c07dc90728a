"""Tests for osc:render_tracking operation."""

import numpy as np
import pytest

from invariant_osc.artifacts import EvaluationArtifact, ImageArtifact, TableArtifact
from invariant_osc.ops import render_tracking
from invariant_osc.ops.render_tracking import BACKGROUND, PALETTE


def _evaluation(traces):
    return EvaluationArtifact(TableArtifact(("controller",), []), traces)


@pytest.fixture
def circle():
    angle = np.linspace(0.0, 2.0 * np.pi, 40)
    target = np.column_stack([0.4 + 0.1 * np.cos(angle), 0.1 * np.sin(angle)])
    return {"x": target + 0.005, "x_d": target}


class TestRenderTracking:
    """Test suite for osc:render_tracking operation."""

    def test_basic(self, circle):
        """Test that the plot has the requested size on a white background."""
        result = render_tracking(_evaluation({"analytical_osc": circle}), width=200, height=160)
        assert isinstance(result, ImageArtifact)
        assert (result.width, result.height) == (200, 160)
        assert result.image.getpixel((199, 159)) == BACKGROUND

    def test_controller_colors_drawn(self, circle):
        """Each controller's palette colour appears in the image."""
        result = render_tracking(_evaluation({"oscar": circle, "joint_pd": circle}))
        colors = {c for _, c in result.image.getcolors(maxcolors=1 << 16)}
        assert PALETTE["oscar"] in colors
        assert PALETTE["joint_pd"] in colors

    def test_deterministic(self, circle):
        """Same traces, same PNG bytes."""
        a = render_tracking(_evaluation({"oscar": circle}))
        b = render_tracking(_evaluation({"oscar": circle}))
        assert a.get_stable_hash() == b.get_stable_hash()

    def test_short_traces_skipped(self, circle):
        """Traces with fewer than two points are left out; none left is an error."""
        point = {"x": np.zeros((1, 2)), "x_d": np.zeros((1, 2))}
        render_tracking(_evaluation({"oscar": circle, "ik_dls": point}))
        with pytest.raises(ValueError, match="at least two points"):
            render_tracking(_evaluation({"ik_dls": point}))

    @pytest.mark.parametrize(("width", "height"), [(32, 200), (200, 10), (100.0, 100)])
    def test_invalid_size(self, circle, width, height):
        """Test that sizes below 64 pixels or non-int sizes are rejected."""
        with pytest.raises(ValueError, match="width and height"):
            render_tracking(_evaluation({"oscar": circle}), width=width, height=height)

    def test_invalid_evaluation(self):
        """Test that non-evaluation inputs are rejected."""
        with pytest.raises(ValueError, match="evaluation must be EvaluationArtifact"):
            render_tracking({"oscar": {}})
