from .coarse import (
    CoarseParams,
    disk_element,
    extract_components,
    fill_holes,
    kmeans_binary,
    morph_open_close,
    preprocess,
)
from .pipeline import GrainRecord, coarse_mask, make_record, segment_grains
from .snake import (
    Contour,
    SnakeParams,
    gvf_field,
    mask_to_contour,
    rasterize_contour,
    snake_refine,
    subsample_contour,
)

__all__ = [
    "CoarseParams",
    "Contour",
    "GrainRecord",
    "SnakeParams",
    "coarse_mask",
    "disk_element",
    "extract_components",
    "fill_holes",
    "gvf_field",
    "kmeans_binary",
    "make_record",
    "mask_to_contour",
    "morph_open_close",
    "preprocess",
    "rasterize_contour",
    "segment_grains",
    "snake_refine",
    "subsample_contour",
]
