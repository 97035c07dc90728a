"""osc:render_tracking operation - plots desired vs achieved end-effector paths."""

import numpy as np
from invariant.protocol import ICacheable
from PIL import Image, ImageDraw

from invariant_osc.artifacts import EvaluationArtifact, ImageArtifact

BACKGROUND = (255, 255, 255, 255)
TARGET_COLOR = (0, 0, 0, 255)
PALETTE = {
    "oscar": (214, 39, 40, 255),
    "analytical_osc": (31, 119, 180, 255),
    "identity_osc": (255, 127, 14, 255),
    "fixed_gain_osc": (148, 103, 189, 255),
    "joint_pd": (44, 160, 44, 255),
    "ik_dls": (140, 86, 75, 255),
}
FALLBACK_COLOR = (127, 127, 127, 255)
MARGIN = 24
LEGEND_ROW = 14


def render_tracking(
    evaluation: EvaluationArtifact,
    width: int = 480,
    height: int = 480,
) -> ICacheable:
    """Draw the first evaluation episode's target path and each controller's path.

    The target is black; controllers use a fixed palette and are listed in a
    legend in the top-left corner. Both axes share one scale (metres map to
    pixels isotropically) and y points up.

    Args:
        evaluation: EvaluationArtifact carrying traces.
        width: Image width in pixels (>= 64).
        height: Image height in pixels (>= 64).

    Returns:
        ImageArtifact (RGBA).

    Raises:
        ValueError: If no trace has two points or the size is too small.
    """
    if not isinstance(evaluation, EvaluationArtifact):
        raise ValueError(f"evaluation must be EvaluationArtifact, got {type(evaluation)}")
    if not isinstance(width, int) or not isinstance(height, int) or width < 64 or height < 64:
        raise ValueError(f"width and height must be ints >= 64, got {width}x{height}")
    traces = {name: t for name, t in sorted(evaluation.traces.items()) if len(t["x"]) >= 2}
    if not traces:
        raise ValueError("evaluation has no trace with at least two points")

    points = np.concatenate([np.concatenate([t["x"], t["x_d"]]) for t in traces.values()])
    low, high = points.min(axis=0), points.max(axis=0)
    span = float(max(np.max(high - low), 1e-6))
    scale = min(width, height) - 2 * MARGIN
    centre = (low + high) / 2.0

    def to_pixels(xy: np.ndarray) -> list[tuple[float, float]]:
        u = (xy[:, 0] - centre[0]) / span * scale + width / 2.0
        v = height / 2.0 - (xy[:, 1] - centre[1]) / span * scale
        return list(zip(u.tolist(), v.tolist()))

    image = Image.new("RGBA", (width, height), BACKGROUND)
    draw = ImageDraw.Draw(image)

    target = next(iter(traces.values()))["x_d"]
    draw.line(to_pixels(target), fill=TARGET_COLOR, width=2)
    for name, trace in traces.items():
        draw.line(to_pixels(trace["x"]), fill=PALETTE.get(name, FALLBACK_COLOR), width=1)

    legend = [("target", TARGET_COLOR)] + [(n, PALETTE.get(n, FALLBACK_COLOR)) for n in traces]
    for row, (label, color) in enumerate(legend):
        y = 4 + row * LEGEND_ROW
        draw.rectangle((4, y + 2, 12, y + 10), fill=color)
        draw.text((16, y), label, fill=TARGET_COLOR)
    return ImageArtifact(image)
