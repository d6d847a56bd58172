from .catalog import PLANES, CatalogEntry, FeatureCatalog, default_catalog
from .extract import (
    FeatureMatrix,
    FeatureVector,
    extract_all,
    extract_batch,
    read_features_csv,
    write_features_csv,
)
from .families import (
    chebyshev_coeff_histogram,
    edge_statistics,
    haralick_glcm,
    multiscale_histograms,
    pixel_statistics,
    tamura_features,
    zernike_magnitudes,
)
from .shape import SHAPE_FEATURE_NAMES, shape_features
from .transforms import TransformPlane, transform_image

__all__ = [
    "PLANES",
    "CatalogEntry",
    "FeatureCatalog",
    "FeatureMatrix",
    "FeatureVector",
    "SHAPE_FEATURE_NAMES",
    "TransformPlane",
    "chebyshev_coeff_histogram",
    "default_catalog",
    "edge_statistics",
    "extract_all",
    "extract_batch",
    "haralick_glcm",
    "multiscale_histograms",
    "pixel_statistics",
    "read_features_csv",
    "shape_features",
    "tamura_features",
    "transform_image",
    "write_features_csv",
    "zernike_magnitudes",
]
