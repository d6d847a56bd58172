"""Sharpness measures over focal planes and optimal-plane selection.

Four measure families are provided: derivative (absolute gradient),
autocorrelation (Vollath F4), statistics (population variance) and
histogram (Shannon entropy, 256 bins). All scores are normalized by pixel
count so they are comparable across image sizes.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import EmptyStack, ImageTooSmall
from .imagecore import FocalStack, Image


class FocusMeasureKind(enum.Enum):
    ABSOLUTE_GRADIENT = "absolute_gradient"
    VOLLATH_F4 = "vollath_f4"
    VARIANCE = "variance"
    HISTOGRAM_ENTROPY = "histogram_entropy"


@dataclass(frozen=True)
class FocusCurve:
    """Per-plane scores plus the winning plane (argmax, lowest-index ties)."""

    scores: tuple[float, ...]
    best_index: int


def absolute_gradient_score(img: Image) -> float:
    """Mean absolute forward difference along both axes, borders excluded."""
    px = img.pixels
    if px.shape[0] < 2 or px.shape[1] < 2:
        raise ImageTooSmall("absolute gradient needs at least 2x2 pixels")
    dx = np.abs(np.diff(px, axis=1)).sum()
    dy = np.abs(np.diff(px, axis=0)).sum()
    return float((dx + dy) / px.size)


def vollath_f4_score(img: Image) -> float:
    """Vollath F4: lag-1 minus lag-2 horizontal autocorrelation, mean-normalized."""
    px = img.pixels
    if px.shape[1] < 3:
        raise ImageTooSmall("Vollath F4 needs at least 3 columns")
    s1 = (px[:, :-1] * px[:, 1:]).sum()
    s2 = (px[:, :-2] * px[:, 2:]).sum()
    return float((s1 - s2) / px.size)


def variance_score(img: Image) -> float:
    return float(np.var(img.pixels))


def histogram_entropy_score(img: Image) -> float:
    """Shannon entropy (nats) of the 256-bin intensity histogram."""
    hist, _ = np.histogram(img.pixels, bins=256, range=(0.0, 1.0))
    p = hist[hist > 0] / img.pixels.size
    return float(-(p * np.log(p)).sum())


_MEASURES = {
    FocusMeasureKind.ABSOLUTE_GRADIENT: absolute_gradient_score,
    FocusMeasureKind.VOLLATH_F4: vollath_f4_score,
    FocusMeasureKind.VARIANCE: variance_score,
    FocusMeasureKind.HISTOGRAM_ENTROPY: histogram_entropy_score,
}


def score_image(img: Image, kind: FocusMeasureKind) -> float:
    return _MEASURES[kind](img)


def select_optimal_plane(stack: FocalStack, kind: FocusMeasureKind) -> FocusCurve:
    """Score every plane with the chosen measure and pick the argmax.

    Ties break to the lowest plane index.
    """
    if len(stack) == 0:
        raise EmptyStack("cannot select a plane from an empty stack")
    scores = tuple(score_image(p, kind) for p in stack.planes)
    best = int(np.argmax(scores))  # np.argmax returns the first maximum
    return FocusCurve(scores=scores, best_index=best)
