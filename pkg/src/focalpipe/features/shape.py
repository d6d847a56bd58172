"""The fixed 25-value shape descriptor computed from a grain mask."""
from __future__ import annotations

import numpy as np
from scipy import ndimage
from skimage import measure

from ..errors import EmptyMask, MultipleComponents
from ..imagecore import BinaryMask

SHAPE_FEATURE_NAMES = (
    "area",
    "perimeter",
    "equivalent_diameter",
    "major_axis",
    "minor_axis",
    "eccentricity",
    "orientation",
    "solidity",
    "extent",
    "convex_area",
    "circularity",
    "aspect_ratio",
    "hu_1",
    "hu_2",
    "hu_3",
    "hu_4",
    "hu_5",
    "hu_6",
    "hu_7",
    "fourier_desc_1",
    "fourier_desc_2",
    "fourier_desc_3",
    "fourier_desc_4",
    "fourier_desc_5",
    "fourier_desc_6",
)

_FD_SAMPLES = 128


def _resample_closed(points: np.ndarray, n: int) -> np.ndarray:
    closed = np.vstack([points, points[:1]])
    seg = np.linalg.norm(np.diff(closed, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    if s[-1] <= 0:
        return np.repeat(points[:1], n, axis=0)
    targets = np.linspace(0.0, s[-1], n, endpoint=False)
    return np.column_stack([np.interp(targets, s, closed[:, 0]), np.interp(targets, s, closed[:, 1])])


def _orientation(mask: np.ndarray) -> float:
    """Major-axis angle from the x (column) axis; 0 when the second moments
    are rotationally degenerate (e.g. squares, disks)."""
    ys, xs = np.nonzero(mask)
    xc, yc = xs.mean(), ys.mean()
    mu20 = float(((xs - xc) ** 2).sum())
    mu02 = float(((ys - yc) ** 2).sum())
    mu11 = float(((xs - xc) * (ys - yc)).sum())
    scale = max(mu20 + mu02, 1.0)
    if max(abs(2.0 * mu11), abs(mu20 - mu02)) <= 1e-9 * scale:
        return 0.0
    return float(0.5 * np.arctan2(2.0 * mu11, mu20 - mu02))


def _fourier_descriptors(mask: np.ndarray) -> np.ndarray:
    contours = measure.find_contours(mask.astype(float), 0.5)
    boundary = max(contours, key=len)
    if len(boundary) > 1 and np.allclose(boundary[0], boundary[-1]):
        boundary = boundary[:-1]
    pts = _resample_closed(boundary, _FD_SAMPLES)
    ys, xs = np.nonzero(mask)
    centroid = np.array([ys.mean(), xs.mean()])
    radii = np.linalg.norm(pts - centroid, axis=1)
    spectrum = np.abs(np.fft.fft(radii))
    if spectrum[0] <= 0:
        return np.zeros(6)
    return spectrum[1:7] / spectrum[0]


def shape_features(mask: BinaryMask) -> np.ndarray:
    """25 shape features; requires exactly one 4-connected foreground blob."""
    px = mask.pixels
    if not px.any():
        raise EmptyMask("shape features need a non-empty mask")
    labeled, n = ndimage.label(px)
    if n > 1:
        raise MultipleComponents(f"expected one component, found {n}")

    props = measure.regionprops(labeled)[0]
    area = float(props.area)
    perimeter = float(props.perimeter)
    major = float(props.axis_major_length)
    minor = float(props.axis_minor_length)
    circularity = 4.0 * np.pi * area / (perimeter * perimeter) if perimeter > 0 else 0.0
    aspect = major / minor if minor > 1e-9 else 0.0

    hu = measure.moments_hu(measure.moments_normalized(measure.moments_central(px.astype(float))))

    basic = np.array(
        [
            area,
            perimeter,
            float(props.equivalent_diameter_area),
            major,
            minor,
            float(props.eccentricity),
            _orientation(px),
            float(props.solidity),
            float(props.extent),
            float(props.area_convex),
            circularity,
            aspect,
        ]
    )
    return np.concatenate([basic, hu, _fourier_descriptors(px)])
