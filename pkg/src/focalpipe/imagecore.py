"""Image, mask and focal-stack value types plus file I/O.

Intensities are stored as float64 in [0, 1]; quantization to integer pixel
formats happens only when reading or writing files. All value types freeze
their underlying arrays after construction so they can be shared freely.
"""
from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as PILImage, UnidentifiedImageError

from .errors import CorruptData, EmptyStack, OutOfBounds, UnsupportedFormat

_RANGE_TOL = 1e-9

# ITU-R BT.601 luminance weights
_LUMA = np.array([0.299, 0.587, 0.114])


def _freeze(arr: np.ndarray) -> np.ndarray:
    arr = np.ascontiguousarray(arr)
    arr.flags.writeable = False
    return arr


def _check_unit_range(data: np.ndarray, what: str) -> np.ndarray:
    if not np.isfinite(data).all():
        raise ValueError(f"{what} contains non-finite values")
    lo, hi = float(data.min()), float(data.max())
    if lo < -_RANGE_TOL or hi > 1.0 + _RANGE_TOL:
        raise ValueError(f"{what} values outside [0, 1]: min={lo}, max={hi}")
    # tolerate float round-off from filters that may overshoot by ~1 ulp
    if lo < 0.0 or hi > 1.0:
        data = np.clip(data, 0.0, 1.0)
    return data


@dataclass(frozen=True, eq=False)
class Image:
    """Single-channel image, row-major float64 intensities in [0, 1]."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("Image requires a non-empty 2-D array")
        px = _check_unit_range(px, "Image")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class ColorImage:
    """RGB image, channels float64 in [0, 1], shape (height, width, 3)."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels, dtype=np.float64)
        if px.ndim != 3 or px.shape[2] != 3 or px.size == 0:
            raise ValueError("ColorImage requires a non-empty (h, w, 3) array")
        px = _check_unit_range(px, "ColorImage")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class BinaryMask:
    """Boolean foreground mask with the same layout as its paired Image."""

    pixels: np.ndarray

    def __post_init__(self):
        px = np.asarray(self.pixels)
        if px.dtype != np.bool_:
            px = px.astype(bool)
        if px.ndim != 2 or px.size == 0:
            raise ValueError("BinaryMask requires a non-empty 2-D boolean array")
        object.__setattr__(self, "pixels", _freeze(px))

    @property
    def height(self) -> int:
        return self.pixels.shape[0]

    @property
    def width(self) -> int:
        return self.pixels.shape[1]

    def area(self) -> int:
        return int(self.pixels.sum())


@dataclass(frozen=True)
class FocalStack:
    """Ordered, co-registered focal planes of one microscope field."""

    planes: tuple[Image, ...]
    plane_step: float = 1.0

    def __post_init__(self):
        planes = tuple(self.planes)
        if not planes:
            raise EmptyStack("focal stack needs at least one plane")
        shape = planes[0].pixels.shape
        for i, p in enumerate(planes):
            if p.pixels.shape != shape:
                raise ValueError(f"plane {i} shape {p.pixels.shape} != {shape}")
        object.__setattr__(self, "planes", planes)

    def __len__(self) -> int:
        return len(self.planes)


@dataclass(frozen=True)
class BoundingBox:
    x: int
    y: int
    w: int
    h: int

    def __post_init__(self):
        if self.w < 1 or self.h < 1:
            raise ValueError("bounding box needs w >= 1 and h >= 1")

    def check_inside(self, width: int, height: int) -> None:
        if self.x < 0 or self.y < 0 or self.x + self.w > width or self.y + self.h > height:
            raise OutOfBounds(
                f"box ({self.x},{self.y},{self.w},{self.h}) exceeds {width}x{height} image"
            )


def to_grayscale(img: ColorImage) -> Image:
    """Collapse RGB to luminance with BT.601 weights (0.299, 0.587, 0.114)."""
    return Image(img.pixels @ _LUMA)


def crop(img: Image, box: BoundingBox) -> Image:
    box.check_inside(img.width, img.height)
    return Image(img.pixels[box.y : box.y + box.h, box.x : box.x + box.w])


def crop_mask(mask: BinaryMask, box: BoundingBox) -> BinaryMask:
    box.check_inside(mask.width, mask.height)
    return BinaryMask(mask.pixels[box.y : box.y + box.h, box.x : box.x + box.w])


_SUFFIXES = {".png", ".tif", ".tiff"}


def load_image(path: str | Path) -> ColorImage:
    """Decode a PNG or TIFF file into a ColorImage scaled to [0, 1].

    Grayscale files are replicated across the three channels. 8-bit and
    16-bit integer sample depths are supported.
    """
    path = Path(path)
    if not path.exists():
        raise FileNotFoundError(str(path))
    if path.suffix.lower() not in _SUFFIXES:
        raise UnsupportedFormat(f"unsupported extension: {path.suffix!r}")
    try:
        with PILImage.open(path) as im:
            im.load()
            arr = np.asarray(im)
            mode = im.mode
    except (UnidentifiedImageError, OSError, SyntaxError) as exc:
        raise CorruptData(f"cannot decode {path}: {exc}") from None

    if arr.dtype == np.uint8:
        scale = 255.0
    elif arr.dtype == np.uint16:
        scale = 65535.0
    elif arr.dtype == np.int32 and mode == "I":
        # Pillow promotes 16-bit grayscale TIFF to mode "I"
        scale = 65535.0
    else:
        raise UnsupportedFormat(f"unsupported sample format {arr.dtype} ({mode})")

    data = arr.astype(np.float64) / scale
    if data.ndim == 2:
        data = np.repeat(data[:, :, None], 3, axis=2)
    elif data.ndim == 3 and data.shape[2] >= 3:
        data = data[:, :, :3]
    else:
        raise UnsupportedFormat(f"unsupported channel layout {arr.shape}")
    return ColorImage(data)


def save_image(img: Image | ColorImage | BinaryMask, path: str | Path) -> None:
    """Write an 8-bit PNG (grayscale, RGB, or 0/255 mask) for debug dumps."""
    path = Path(path)
    if path.suffix.lower() != ".png":
        raise UnsupportedFormat("save_image writes PNG only")
    if isinstance(img, BinaryMask):
        data = np.where(img.pixels, 255, 0).astype(np.uint8)
    else:
        data = np.rint(img.pixels * 255.0).astype(np.uint8)
    PILImage.fromarray(data).save(path)
