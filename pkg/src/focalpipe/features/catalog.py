"""The fixed, versioned feature catalog.

Composition (documented in docs/feature_catalog.md):
  - per transform plane (6 planes): 5 pixel statistics + 24 multiscale
    histogram bins + 26 Haralick values + 3 Tamura values = 58 -> 348
  - raw plane only: 25 Zernike magnitudes + 8 edge statistics = 33
  - Chebyshev coefficient histogram (32 bins) on raw and Fourier planes = 64
  - 25 shape features from the mask
  total: 445 intensity + 25 shape = 470 features, fixed order.
"""
from __future__ import annotations

from dataclasses import dataclass

from .families import HARALICK_NAMES, zernike_pairs
from .shape import SHAPE_FEATURE_NAMES
from .transforms import TransformPlane

CATALOG_VERSION = "1"

PLANES = (
    TransformPlane.RAW,
    TransformPlane.FOURIER,
    TransformPlane.CHEBYSHEV,
    TransformPlane.WAVELET,
    TransformPlane.FOURIER_OF_WAVELET,
    TransformPlane.CHEBYSHEV_OF_FOURIER,
)

STAT_NAMES = ("mean", "std", "skewness", "kurtosis", "median")
EDGE_NAMES = (
    "edge_fraction",
    "grad_mean",
    "grad_std",
    "orient_0",
    "orient_1",
    "orient_2",
    "orient_3",
    "orient_homogeneity",
)


@dataclass(frozen=True)
class CatalogEntry:
    name: str
    plane: TransformPlane | None  # None for shape features
    family: str
    index: int  # position within the family block


@dataclass(frozen=True)
class FeatureCatalog:
    entries: tuple[CatalogEntry, ...]
    version: str = CATALOG_VERSION

    def __post_init__(self):
        names = [e.name for e in self.entries]
        if len(set(names)) != len(names):
            raise ValueError("catalog feature names must be unique")

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def names(self) -> tuple[str, ...]:
        return tuple(e.name for e in self.entries)


def _family_block(plane: TransformPlane, family: str, subnames) -> list[CatalogEntry]:
    return [
        CatalogEntry(name=f"{plane.value}.{family}.{sub}", plane=plane, family=family, index=i)
        for i, sub in enumerate(subnames)
    ]


def default_catalog() -> FeatureCatalog:
    entries: list[CatalogEntry] = []
    hist_names = [f"hist{b}_{i}" for b in (3, 5, 7, 9) for i in range(b)]
    haralick_names = [f"{n}_mean" for n in HARALICK_NAMES] + [f"{n}_range" for n in HARALICK_NAMES]
    tamura_names = ("coarseness", "contrast", "directionality")
    for plane in PLANES:
        entries += _family_block(plane, "stats", STAT_NAMES)
        entries += _family_block(plane, "hist", hist_names)
        entries += _family_block(plane, "haralick", haralick_names)
        entries += _family_block(plane, "tamura", tamura_names)
    entries += _family_block(TransformPlane.RAW, "zernike", [f"z{n}_{m}" for n, m in zernike_pairs()])
    entries += _family_block(TransformPlane.RAW, "edge", EDGE_NAMES)
    for plane in (TransformPlane.RAW, TransformPlane.FOURIER):
        entries += _family_block(plane, "chebhist", [f"bin_{i:02d}" for i in range(32)])
    entries += [
        CatalogEntry(name=f"shape.{sub}", plane=None, family="shape", index=i)
        for i, sub in enumerate(SHAPE_FEATURE_NAMES)
    ]
    return FeatureCatalog(entries=tuple(entries))
