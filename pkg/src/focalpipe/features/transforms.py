"""Transform planes on which the intensity feature families are evaluated."""
from __future__ import annotations

import enum
from functools import lru_cache

import numpy as np
from numpy.polynomial import chebyshev

from ..errors import ImageTooSmall
from ..imagecore import Image

CHEBYSHEV_ORDER = 20


class TransformPlane(enum.Enum):
    RAW = "raw"
    FOURIER = "fourier"
    CHEBYSHEV = "chebyshev"
    WAVELET = "wavelet"
    FOURIER_OF_WAVELET = "fourier_of_wavelet"
    CHEBYSHEV_OF_FOURIER = "chebyshev_of_fourier"


def _rescale_unit(arr: np.ndarray) -> np.ndarray:
    lo, hi = float(arr.min()), float(arr.max())
    if hi - lo <= 0:
        return np.zeros_like(arr)
    return (arr - lo) / (hi - lo)


def fourier_magnitude(px: np.ndarray) -> np.ndarray:
    """log(1 + |DFT|), DC centered, min-max rescaled to [0, 1]."""
    mag = np.abs(np.fft.fftshift(np.fft.fft2(px)))
    return _rescale_unit(np.log1p(mag))


@lru_cache(maxsize=64)
def _cheb_pinv(n: int) -> np.ndarray:
    """Pseudo-inverse of the Chebyshev Vandermonde basis on n uniform points."""
    x = np.linspace(-1.0, 1.0, n)
    v = chebyshev.chebvander(x, CHEBYSHEV_ORDER)
    return np.linalg.pinv(v)


def chebyshev_coefficients(px: np.ndarray) -> np.ndarray:
    """Least-squares 2-D Chebyshev decomposition of order 20: a 21x21 array."""
    h, w = px.shape
    return _cheb_pinv(h) @ px @ _cheb_pinv(w).T


def haar_ll(px: np.ndarray) -> np.ndarray:
    """One-level Haar approximation band; halves each dimension (floor)."""
    h, w = px.shape
    px = px[: h - h % 2, : w - w % 2]
    return 0.5 * (px[0::2, 0::2] + px[0::2, 1::2] + px[1::2, 0::2] + px[1::2, 1::2])


def transform_image(img: Image, plane: TransformPlane) -> Image:
    """Evaluate one transform plane; output intensities rescaled to [0, 1].

    Compound planes compose right to left: FOURIER_OF_WAVELET applies the
    wavelet first, then the Fourier magnitude.
    """
    px = img.pixels
    if px.shape[0] < 8 or px.shape[1] < 8:
        raise ImageTooSmall("transform planes need at least an 8x8 image")
    if plane is TransformPlane.RAW:
        return img
    if plane is TransformPlane.FOURIER:
        return Image(fourier_magnitude(px))
    if plane is TransformPlane.CHEBYSHEV:
        return Image(_rescale_unit(chebyshev_coefficients(px)))
    if plane is TransformPlane.WAVELET:
        return Image(_rescale_unit(haar_ll(px)))
    if plane is TransformPlane.FOURIER_OF_WAVELET:
        return Image(fourier_magnitude(haar_ll(px)))
    if plane is TransformPlane.CHEBYSHEV_OF_FOURIER:
        return Image(_rescale_unit(chebyshev_coefficients(fourier_magnitude(px))))
    raise ValueError(f"unknown plane {plane!r}")
