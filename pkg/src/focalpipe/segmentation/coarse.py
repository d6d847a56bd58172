"""Coarse grain segmentation: CLAHE + median preprocessing, two-cluster
K-Means thresholding, hole filling, morphological cleanup and component
extraction."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage
from skimage import exposure

from ..errors import DegenerateClustering, ImageTooSmall
from ..imagecore import BinaryMask, BoundingBox, Image


@dataclass(frozen=True)
class CoarseParams:
    """Knobs of the coarse stage.

    max_area None means 40% of the image area, resolved when components
    are extracted.
    """

    clahe_tiles: int = 8
    clahe_clip: float = 0.01
    median_radius: int = 2
    struct_radius: int = 5
    min_area: int = 500
    max_area: int | None = None

    def __post_init__(self):
        if self.clahe_tiles < 1 or self.clahe_clip <= 0:
            raise ValueError("CLAHE parameters must be positive")
        if self.median_radius < 1 or self.struct_radius < 1:
            raise ValueError("filter radii must be >= 1")
        if self.min_area < 1:
            raise ValueError("min_area must be positive")
        if self.max_area is not None and self.max_area <= self.min_area:
            raise ValueError("max_area must exceed min_area")


def disk_element(radius: int) -> np.ndarray:
    """Disk structuring element: pixels with x^2 + y^2 <= r^2."""
    r = int(radius)
    yy, xx = np.mgrid[-r : r + 1, -r : r + 1]
    return (xx * xx + yy * yy) <= r * r


def preprocess(img: Image, p: CoarseParams) -> Image:
    """Contrast-limited adaptive histogram equalization, then median filter."""
    if img.height < p.clahe_tiles or img.width < p.clahe_tiles:
        raise ImageTooSmall(
            f"{img.width}x{img.height} image too small for a {p.clahe_tiles}-tile grid"
        )
    kernel = (max(1, img.height // p.clahe_tiles), max(1, img.width // p.clahe_tiles))
    eq = exposure.equalize_adapthist(img.pixels, kernel_size=kernel, clip_limit=p.clahe_clip)
    med = ndimage.median_filter(eq, footprint=disk_element(p.median_radius), mode="nearest")
    return Image(np.clip(med, 0.0, 1.0))


def kmeans_binary(img: Image) -> BinaryMask:
    """Two-cluster 1-D K-Means on intensities; foreground is the cluster
    holding the minority of image-border pixels.

    Deterministic: centers start at the min and max intensity and Lloyd
    iterations stop once the center shift drops below 1e-6 (or after 100
    rounds).
    """
    px = img.pixels
    values = px.ravel()
    lo, hi = float(values.min()), float(values.max())
    if hi - lo <= 0.0:
        raise DegenerateClustering("all pixels share one intensity")

    c0, c1 = lo, hi
    for _ in range(100):
        thresh = 0.5 * (c0 + c1)
        low = values <= thresh
        n0 = np.sum(low)
        new0 = float(values[low].mean()) if n0 else c0
        new1 = float(values[~low].mean()) if n0 < values.size else c1
        shift = abs(new0 - c0) + abs(new1 - c1)
        c0, c1 = new0, new1
        if shift < 1e-6:
            break

    in_high = px > 0.5 * (c0 + c1)
    border = np.zeros_like(in_high)
    border[0, :] = border[-1, :] = True
    border[:, 0] = border[:, -1] = True
    high_on_border = int(np.sum(in_high & border))
    low_on_border = int(np.sum(~in_high & border))
    # tie: prefer the low-intensity cluster (dark grains on bright fields)
    foreground = in_high if high_on_border < low_on_border else ~in_high
    return BinaryMask(foreground)


def fill_holes(mask: BinaryMask) -> BinaryMask:
    """Turn background components not 4-connected to the border into foreground."""
    return BinaryMask(ndimage.binary_fill_holes(mask.pixels))


def morph_open_close(mask: BinaryMask, radius: int) -> BinaryMask:
    """Morphological opening then closing with a disk of the given radius."""
    if radius < 1:
        raise ValueError("radius must be >= 1")
    elem = disk_element(radius)
    opened = ndimage.binary_opening(mask.pixels, structure=elem)
    closed = ndimage.binary_closing(opened, structure=elem)
    # closing must not lose the opened foreground (scipy clips at borders)
    return BinaryMask(closed | opened)


def _perimeter_interior_fraction(comp: np.ndarray) -> float:
    """Fraction of the component's perimeter pixels that are not on the frame."""
    pad = np.pad(comp, 1, constant_values=False)
    interior4 = pad[:-2, 1:-1] & pad[2:, 1:-1] & pad[1:-1, :-2] & pad[1:-1, 2:]
    perim = comp & ~interior4
    total = int(perim.sum())
    if total == 0:
        return 1.0
    frame = np.zeros_like(comp)
    frame[0, :] = frame[-1, :] = True
    frame[:, 0] = frame[:, -1] = True
    on_frame = int((perim & frame).sum())
    return 1.0 - on_frame / total


def extract_components(
    mask: BinaryMask, p: CoarseParams
) -> list[tuple[BoundingBox, BinaryMask]]:
    """One (box, mask) pair per 4-connected component within the area band.

    Boxes are padded by 10% of each box dimension per side and clamped to
    the image. Components touching the frame survive only if at least 80%
    of their perimeter is interior. Returned masks are cropped to the box.
    """
    h, w = mask.pixels.shape
    max_area = p.max_area if p.max_area is not None else int(0.4 * h * w)
    labels, n = ndimage.label(mask.pixels)  # default structure = 4-connectivity
    out: list[tuple[BoundingBox, BinaryMask]] = []
    if n == 0:
        return out
    slices = ndimage.find_objects(labels)
    for idx, sl in enumerate(slices, start=1):
        comp = labels == idx
        area = int(comp.sum())
        if area < p.min_area or area > max_area:
            continue
        if _perimeter_interior_fraction(comp) < 0.8:
            continue
        ys, xs = sl
        bw, bh = xs.stop - xs.start, ys.stop - ys.start
        pad_x, pad_y = max(1, round(0.1 * bw)), max(1, round(0.1 * bh))
        x0 = max(0, xs.start - pad_x)
        y0 = max(0, ys.start - pad_y)
        x1 = min(w, xs.stop + pad_x)
        y1 = min(h, ys.stop + pad_y)
        box = BoundingBox(x=x0, y=y0, w=x1 - x0, h=y1 - y0)
        out.append((box, BinaryMask(comp[y0:y1, x0:x1])))
    return out
