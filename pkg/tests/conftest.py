import numpy as np
import pytest

from focalpipe.imagecore import BinaryMask, Image


def disk_mask(radius: int, size: int | None = None, cx: float | None = None, cy: float | None = None) -> np.ndarray:
    size = size or (2 * radius + 9)
    cx = cx if cx is not None else size / 2
    cy = cy if cy is not None else size / 2
    yy, xx = np.mgrid[0:size, 0:size]
    return (xx - cx) ** 2 + (yy - cy) ** 2 <= radius**2


def disk_image(
    radius: int = 40,
    size: int = 128,
    base: float = 0.45,
    bg: float = 0.86,
    rim: float = 0.12,
    noise: float = 0.0,
    seed: int = 0,
) -> tuple[Image, np.ndarray]:
    """Anti-aliased dark disk with a dark rim on a bright background, plus
    its exact boolean mask (the test-side analogue of a rendered grain)."""
    yy, xx = np.mgrid[0:size, 0:size].astype(float)
    d = np.hypot(yy - size / 2, xx - size / 2) - radius
    interior = np.full((size, size), base) - rim * np.exp(-(((d + 1.3) / 0.9) ** 2))
    w = np.clip(0.5 - d, 0.0, 1.0)
    img = w * interior + (1.0 - w) * bg
    if noise:
        img = img + np.random.default_rng(seed).normal(0.0, noise, img.shape)
    return Image(np.clip(img, 0.0, 1.0)), d <= 0


def iou(a: np.ndarray, b: np.ndarray) -> float:
    union = np.logical_or(a, b).sum()
    return float(np.logical_and(a, b).sum() / union) if union else 0.0


@pytest.fixture
def rng():
    return np.random.default_rng(1234)
