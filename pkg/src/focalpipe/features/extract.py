"""Feature extraction driver: catalog evaluation over grain records plus
feature-matrix CSV serialization."""
from __future__ import annotations

import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import EmptyMatrix, PipelineError
from ..imagecore import Image
from ..segmentation.pipeline import GrainRecord
from .catalog import PLANES, FeatureCatalog, default_catalog
from .families import (
    chebyshev_coeff_histogram,
    edge_statistics,
    haralick_glcm,
    multiscale_histograms,
    pixel_statistics,
    tamura_features,
    zernike_magnitudes,
)
from .shape import shape_features
from .transforms import TransformPlane, transform_image

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class FeatureVector:
    """Values aligned to a catalog's feature order; always finite."""

    values: np.ndarray
    catalog_version: str

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)


@dataclass(frozen=True, eq=False)
class FeatureMatrix:
    """Row-per-sample feature matrix with labels and sample ids."""

    values: np.ndarray
    labels: tuple[str, ...]
    ids: tuple[str, ...]
    feature_names: tuple[str, ...]

    def __post_init__(self):
        vals = np.ascontiguousarray(self.values, dtype=np.float64)
        if vals.ndim != 2:
            raise ValueError("feature matrix must be 2-D")
        if len(self.labels) != vals.shape[0] or len(self.ids) != vals.shape[0]:
            raise ValueError("labels/ids must match row count")
        if len(self.feature_names) != vals.shape[1]:
            raise ValueError("feature_names must match column count")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "labels", tuple(self.labels))
        object.__setattr__(self, "ids", tuple(self.ids))
        object.__setattr__(self, "feature_names", tuple(self.feature_names))

    @property
    def n_samples(self) -> int:
        return self.values.shape[0]

    @property
    def n_features(self) -> int:
        return self.values.shape[1]

    @property
    def categories(self) -> tuple[str, ...]:
        return tuple(sorted(set(self.labels)))

    def rows_for(self, label: str) -> np.ndarray:
        return self.values[np.array([lb == label for lb in self.labels])]

    def subset_rows(self, idx: np.ndarray) -> "FeatureMatrix":
        return FeatureMatrix(
            values=self.values[idx],
            labels=tuple(self.labels[i] for i in idx),
            ids=tuple(self.ids[i] for i in idx),
            feature_names=self.feature_names,
        )

    def subset_columns(self, idx) -> "FeatureMatrix":
        idx = np.asarray(idx, dtype=int)
        return FeatureMatrix(
            values=self.values[:, idx],
            labels=self.labels,
            ids=self.ids,
            feature_names=tuple(self.feature_names[i] for i in idx),
        )


def _safe(block_len: int, fn, *args, context: str = ""):
    """Evaluate one family; substitute zeros (logged) on domain failures or
    non-finite results so the vector length never changes."""
    try:
        out = np.asarray(fn(*args), dtype=np.float64)
    except PipelineError as exc:
        log.debug("feature family %s substituted with zeros: %s", context, exc)
        return np.zeros(block_len)
    if out.shape != (block_len,):
        raise ValueError(f"{context}: expected {block_len} values, got {out.shape}")
    bad = ~np.isfinite(out)
    if bad.any():
        log.warning("%s: %d non-finite values replaced by 0", context, int(bad.sum()))
        out = np.where(bad, 0.0, out)
    return out


def extract_all(rec: GrainRecord, catalog: FeatureCatalog | None = None) -> FeatureVector:
    """Evaluate the full catalog for one grain.

    Intensity families run on each transform plane of the masked image
    (background zeroed); raw-plane pixel statistics are restricted to the
    mask; shape features come from the mask alone.
    """
    catalog = catalog or default_catalog()
    planes: dict[TransformPlane, Image | None] = {}
    for plane in PLANES:
        try:
            planes[plane] = transform_image(rec.masked_image, plane)
        except PipelineError as exc:
            log.debug("plane %s unavailable: %s", plane.value, exc)
            planes[plane] = None

    blocks: list[np.ndarray] = []
    for plane in PLANES:
        img = planes[plane]
        ctx = plane.value
        if img is None:
            blocks.append(np.zeros(58))
            continue
        if plane is TransformPlane.RAW:
            stats = _safe(5, pixel_statistics, img, rec.mask.pixels, context=f"{ctx}.stats")
        else:
            stats = _safe(5, pixel_statistics, img, context=f"{ctx}.stats")
        blocks.append(stats)
        blocks.append(_safe(24, multiscale_histograms, img, context=f"{ctx}.hist"))
        blocks.append(_safe(26, haralick_glcm, img, context=f"{ctx}.haralick"))
        blocks.append(_safe(3, tamura_features, img, context=f"{ctx}.tamura"))

    raw = planes[TransformPlane.RAW]
    blocks.append(_safe(25, zernike_magnitudes, raw, context="raw.zernike") if raw is not None else np.zeros(25))
    blocks.append(_safe(8, edge_statistics, raw, context="raw.edge") if raw is not None else np.zeros(8))
    for plane in (TransformPlane.RAW, TransformPlane.FOURIER):
        img = planes[plane]
        ctx = f"{plane.value}.chebhist"
        blocks.append(_safe(32, chebyshev_coeff_histogram, img, context=ctx) if img is not None else np.zeros(32))
    blocks.append(_safe(25, shape_features, rec.mask, context="shape"))

    values = np.concatenate(blocks)
    if values.shape[0] != len(catalog):
        raise ValueError(f"catalog length {len(catalog)} != extracted {values.shape[0]}")
    return FeatureVector(values=values, catalog_version=catalog.version)


def extract_batch(
    records: list[GrainRecord],
    labels: list[str],
    catalog: FeatureCatalog | None = None,
    threads: int = 1,
) -> FeatureMatrix:
    """Extract every record; deterministic row order regardless of threads."""
    catalog = catalog or default_catalog()
    if len(records) != len(labels):
        raise ValueError("records and labels must align")
    if not records:
        raise EmptyMatrix("no records to extract")
    if threads <= 1:
        vectors = [extract_all(r, catalog) for r in records]
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            vectors = list(pool.map(lambda r: extract_all(r, catalog), records))
    return FeatureMatrix(
        values=np.stack([v.values for v in vectors]),
        labels=tuple(labels),
        ids=tuple(r.source_id for r in records),
        feature_names=catalog.names,
    )


def write_features_csv(matrix: FeatureMatrix, path: str | Path) -> None:
    """CSV with source_id and label columns followed by catalog-named columns."""
    path = Path(path)
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["source_id", "label", *matrix.feature_names])
        for sid, label, row in zip(matrix.ids, matrix.labels, matrix.values):
            writer.writerow([sid, label, *(repr(float(v)) for v in row)])


def read_features_csv(path: str | Path) -> FeatureMatrix:
    path = Path(path)
    with path.open(newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[:2] != ["source_id", "label"]:
            raise ValueError(f"{path}: expected header starting with source_id,label")
        names = tuple(header[2:])
        ids, labels, rows = [], [], []
        for line in reader:
            ids.append(line[0])
            labels.append(line[1])
            rows.append([float(v) for v in line[2:]])
    if not rows:
        raise EmptyMatrix(f"{path} contains no feature rows")
    return FeatureMatrix(
        values=np.array(rows, dtype=np.float64),
        labels=tuple(labels),
        ids=tuple(ids),
        feature_names=names,
    )
