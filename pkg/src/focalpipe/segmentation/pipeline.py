"""Coarse-to-fine grain segmentation producing one GrainRecord per grain."""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from ..errors import ContourCollapsed, DegenerateClustering, PipelineError
from ..imagecore import BinaryMask, BoundingBox, Image, crop
from .coarse import (
    CoarseParams,
    extract_components,
    fill_holes,
    kmeans_binary,
    morph_open_close,
    preprocess,
)
from .snake import (
    Contour,
    SnakeParams,
    densify_contour,
    mask_to_contour,
    rasterize_contour,
    snake_refine,
    subsample_contour,
)

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class GrainRecord:
    """Cropped grain image, its mask, and provenance."""

    source_id: str
    box: BoundingBox
    image: Image
    mask: BinaryMask
    masked_image: Image

    def __post_init__(self):
        shape = self.image.pixels.shape
        if self.mask.pixels.shape != shape or self.masked_image.pixels.shape != shape:
            raise ValueError("image, mask and masked_image must share dimensions")
        _, n = ndimage.label(self.mask.pixels)
        if n != 1:
            raise ValueError(f"grain mask must contain exactly one component, got {n}")


def make_record(source_id: str, box: BoundingBox, image: Image, mask: BinaryMask) -> GrainRecord:
    masked = Image(image.pixels * mask.pixels)
    return GrainRecord(source_id=source_id, box=box, image=image, mask=mask, masked_image=masked)


def _tidy_mask(mask: np.ndarray) -> np.ndarray | None:
    """Largest 4-connected component, holes filled; None if empty."""
    labels, n = ndimage.label(mask)
    if n == 0:
        return None
    if n > 1:
        areas = ndimage.sum_labels(mask, labels, index=np.arange(1, n + 1))
        mask = labels == (1 + int(np.argmax(areas)))
    return ndimage.binary_fill_holes(mask)


def coarse_mask(img: Image, cp: CoarseParams) -> tuple[Image, BinaryMask | None]:
    """Run the coarse stage; returns the preprocessed image and the cleaned
    field mask (None when clustering is degenerate, e.g. a blank field)."""
    pre = preprocess(img, cp)
    try:
        binary = kmeans_binary(pre)
    except DegenerateClustering:
        return pre, None
    filled = fill_holes(binary)
    cleaned = morph_open_close(filled, cp.struct_radius)
    return pre, cleaned


def segment_grains(
    img: Image,
    cp: CoarseParams | None = None,
    sp: SnakeParams | None = None,
    source_id: str = "image",
) -> list[GrainRecord]:
    """Full coarse-to-fine pipeline over one field image.

    Grains whose refinement fails are skipped with a logged diagnostic;
    the rest are returned in deterministic (row-major component) order.
    """
    cp = cp or CoarseParams()
    sp = sp or SnakeParams()
    pre, cleaned = coarse_mask(img, cp)
    if cleaned is None:
        log.warning("%s: degenerate clustering, no grains extracted", source_id)
        return []
    components = extract_components(cleaned, cp)
    records: list[GrainRecord] = []
    for k, (box, comp_mask) in enumerate(components):
        try:
            records.append(_refine_grain(img, box, comp_mask, sp, f"{source_id}/grain_{k}"))
        except PipelineError as exc:
            log.warning("%s grain %d skipped: %s", source_id, k, exc)
    return records


def _refine_grain(
    img: Image,
    box: BoundingBox,
    comp_mask: BinaryMask,
    sp: SnakeParams,
    grain_id: str,
) -> GrainRecord:
    # edge energy comes from the original image: equalization distorts
    # gradient structure inside translucent grain margins
    img_crop = crop(img, box)
    init = subsample_contour(mask_to_contour(comp_mask), sp.subsample_stride)
    try:
        refined = snake_refine(img_crop, init, sp)
    except ContourCollapsed:
        # fall back to the coarse boundary rather than losing the grain
        log.warning("%s: snake collapsed, keeping coarse mask", grain_id)
        refined = init
    raster = rasterize_contour(densify_contour(refined), width=box.w, height=box.h)
    tidy = _tidy_mask(raster.pixels)
    if tidy is None or not tidy.any():
        raise ContourCollapsed("refined contour rasterized to an empty mask")
    return make_record(grain_id, box, crop(img, box), BinaryMask(tidy))
