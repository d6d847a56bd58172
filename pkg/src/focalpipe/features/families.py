"""Intensity feature families evaluated on transform planes.

Degenerate inputs (zero variance, zero gradient, single gray level) map to
the documented zero conventions instead of NaN so feature vectors stay
finite.
"""
from __future__ import annotations

from functools import lru_cache
from math import factorial

import numpy as np
from scipy import ndimage

from ..errors import EmptyMask, ImageTooSmall
from ..imagecore import Image
from .transforms import chebyshev_coefficients

GLCM_LEVELS = 32
HISTOGRAM_SCALES = (3, 5, 7, 9)
_EPS = 1e-12


def pixel_statistics(img: Image, mask: np.ndarray | None = None) -> np.ndarray:
    """Mean, population std, skewness, excess kurtosis, median.

    Skewness/kurtosis are defined as 0 when the variance vanishes.
    """
    values = img.pixels[mask] if mask is not None else img.pixels.ravel()
    if values.size == 0:
        raise EmptyMask("pixel statistics need at least one pixel")
    mean = float(values.mean())
    centered = values - mean
    var = float(np.mean(centered * centered))
    std = float(np.sqrt(var))
    if var > 0:
        skew = float(np.mean(centered**3) / std**3)
        kurt = float(np.mean(centered**4) / var**2 - 3.0)
    else:
        skew = kurt = 0.0
    return np.array([mean, std, skew, kurt, float(np.median(values))])


def multiscale_histograms(img: Image) -> np.ndarray:
    """Normalized 3/5/7/9-bin histograms over [0, 1], concatenated (24 values)."""
    values = img.pixels.ravel()
    parts = []
    for bins in HISTOGRAM_SCALES:
        counts, _ = np.histogram(values, bins=bins, range=(0.0, 1.0))
        parts.append(counts / values.size)
    return np.concatenate(parts)


_GLCM_OFFSETS = ((0, 1), (-1, 1), (-1, 0), (-1, -1))  # 0, 45, 90, 135 degrees

HARALICK_NAMES = (
    "asm",
    "contrast",
    "correlation",
    "variance",
    "idm",
    "sum_average",
    "sum_variance",
    "sum_entropy",
    "entropy",
    "difference_variance",
    "difference_entropy",
    "info_corr_1",
    "info_corr_2",
)


def _glcm(q: np.ndarray, dy: int, dx: int) -> np.ndarray:
    h, w = q.shape
    ys = slice(max(0, -dy), min(h, h - dy))
    xs = slice(max(0, -dx), min(w, w - dx))
    a = q[ys, xs].ravel()
    b = q[max(0, dy) : h + min(0, dy), max(0, dx) : w + min(0, dx)].ravel()
    counts = np.bincount(a * GLCM_LEVELS + b, minlength=GLCM_LEVELS * GLCM_LEVELS)
    mat = counts.reshape(GLCM_LEVELS, GLCM_LEVELS).astype(np.float64)
    mat = mat + mat.T
    total = mat.sum()
    return mat / total if total > 0 else mat


def _entropy(p: np.ndarray) -> float:
    p = p[p > 0]
    return float(-(p * np.log(p)).sum())


def _haralick_stats(P: np.ndarray) -> np.ndarray:
    n = P.shape[0]
    i = np.arange(n, dtype=np.float64)
    ii = i[:, None]
    jj = i[None, :]
    px = P.sum(axis=1)
    mu = float((i * px).sum())
    sd = float(np.sqrt(((i - mu) ** 2 * px).sum()))

    asm = float((P * P).sum())
    contrast = float(((ii - jj) ** 2 * P).sum())
    if sd > _EPS:
        correlation = float((((ii - mu) * (jj - mu) * P).sum()) / (sd * sd))
    else:
        correlation = 0.0
    variance = float(((ii - mu) ** 2 * P).sum())
    idm = float((P / (1.0 + (ii - jj) ** 2)).sum())

    p_sum = np.bincount((ii + jj).astype(int).ravel(), weights=P.ravel(), minlength=2 * n - 1)
    p_diff = np.bincount(np.abs(ii - jj).astype(int).ravel(), weights=P.ravel(), minlength=n)
    ks = np.arange(p_sum.size, dtype=np.float64)
    kd = np.arange(p_diff.size, dtype=np.float64)
    sum_avg = float((ks * p_sum).sum())
    sum_var = float(((ks - sum_avg) ** 2 * p_sum).sum())
    sum_ent = _entropy(p_sum)
    entropy = _entropy(P.ravel())
    diff_avg = float((kd * p_diff).sum())
    diff_var = float(((kd - diff_avg) ** 2 * p_diff).sum())
    diff_ent = _entropy(p_diff)

    hx = _entropy(px)
    joint = np.outer(px, px)
    log_joint = np.zeros_like(joint)
    np.log(joint, where=joint > 0, out=log_joint)
    hxy1 = float(-(P[joint > 0] * log_joint[joint > 0]).sum())
    hxy2 = float(-(joint * log_joint).sum())
    ic1 = (entropy - hxy1) / hx if hx > _EPS else 0.0
    ic2 = float(np.sqrt(max(0.0, 1.0 - np.exp(-2.0 * (hxy2 - entropy)))))

    return np.array(
        [asm, contrast, correlation, variance, idm, sum_avg, sum_var, sum_ent,
         entropy, diff_var, diff_ent, ic1, ic2]
    )


def haralick_glcm(img: Image) -> np.ndarray:
    """13 Haralick statistics over distance-1 symmetric GLCMs in 4 directions,
    quantized to 32 gray levels; returns 13 direction-means then 13 ranges."""
    q = np.minimum((img.pixels * GLCM_LEVELS).astype(np.int64), GLCM_LEVELS - 1)
    per_dir = np.stack([_haralick_stats(_glcm(q, dy, dx)) for dy, dx in _GLCM_OFFSETS])
    return np.concatenate([per_dir.mean(axis=0), per_dir.max(axis=0) - per_dir.min(axis=0)])


def _shifted_diff(avg: np.ndarray, half: int, axis: int) -> np.ndarray:
    pad_width = [(0, 0), (0, 0)]
    pad_width[axis] = (half, half)
    padded = np.pad(avg, pad_width, mode="edge")
    if axis == 0:
        return np.abs(padded[2 * half :, :] - padded[: avg.shape[0], :])
    return np.abs(padded[:, 2 * half :] - padded[:, : avg.shape[1]])


def tamura_features(img: Image) -> np.ndarray:
    """Tamura coarseness, contrast, and directionality (peak orientation
    share of the gradient-weighted 16-bin histogram)."""
    px = img.pixels
    if px.shape[0] < 32 or px.shape[1] < 32:
        raise ImageTooSmall("Tamura features need at least 32x32 pixels")

    # coarseness: best window size per pixel from shifted window-mean differences
    k_max = 5
    while 2**k_max > min(px.shape) // 2:
        k_max -= 1
    energies = []
    for k in range(1, k_max + 1):
        avg = ndimage.uniform_filter(px, size=2**k, mode="nearest")
        half = 2 ** (k - 1)
        e_h = _shifted_diff(avg, half, axis=1)
        e_v = _shifted_diff(avg, half, axis=0)
        energies.append(np.maximum(e_h, e_v))
    best = np.argmax(np.stack(energies), axis=0)
    coarseness = float(np.mean(2.0 ** (best + 1)))

    mean = px.mean()
    var = float(np.mean((px - mean) ** 2))
    if var > 0:
        kurt = float(np.mean((px - mean) ** 4) / var**2)
        contrast = float(np.sqrt(var) / kurt**0.25)
    else:
        contrast = 0.0

    dh = ndimage.prewitt(px, axis=1, mode="nearest")
    dv = ndimage.prewitt(px, axis=0, mode="nearest")
    mag = 0.5 * (np.abs(dh) + np.abs(dv))
    theta = np.mod(np.arctan2(dv, dh), np.pi)
    weights = mag.ravel()
    total = float(weights.sum())
    if total <= 0:
        directionality = 0.0
    else:
        hist, _ = np.histogram(theta.ravel(), bins=16, range=(0.0, np.pi), weights=weights)
        directionality = float(hist.max() / total)

    return np.array([coarseness, contrast, directionality])


def zernike_pairs(max_order: int = 8) -> list[tuple[int, int]]:
    return [(n, m) for n in range(max_order + 1) for m in range(n % 2, n + 1, 2)]


@lru_cache(maxsize=32)
def _zernike_basis(h: int, w: int) -> tuple[np.ndarray, np.ndarray]:
    """Conjugated Zernike basis stack (25, h, w) and the unit-disk mask."""
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    radius = min(h, w) / 2.0
    yy, xx = np.mgrid[0:h, 0:w]
    rho = np.hypot(yy - cy, xx - cx) / radius
    theta = np.arctan2(yy - cy, xx - cx)
    disk = rho <= 1.0
    basis = []
    for n, m in zernike_pairs():
        radial = np.zeros_like(rho)
        for s in range((n - m) // 2 + 1):
            coef = (
                (-1) ** s
                * factorial(n - s)
                / (factorial(s) * factorial((n + m) // 2 - s) * factorial((n - m) // 2 - s))
            )
            radial += coef * rho ** (n - 2 * s)
        basis.append((n + 1) / np.pi * radial * np.exp(-1j * m * theta) * disk)
    stack = np.stack(basis) / (radius * radius)  # unit-disk area element
    return stack, disk


def zernike_magnitudes(img: Image) -> np.ndarray:
    """|Z_nm| for n <= 8, m >= 0, n - m even (25 moments) on the inscribed disk."""
    basis, _ = _zernike_basis(*img.pixels.shape)
    moments = np.tensordot(basis, img.pixels, axes=([1, 2], [0, 1]))
    return np.abs(moments)


def chebyshev_coeff_histogram(img: Image) -> np.ndarray:
    """32-bin normalized histogram of the order-20 Chebyshev coefficients."""
    coeffs = chebyshev_coefficients(img.pixels).ravel()
    lo, hi = float(coeffs.min()), float(coeffs.max())
    if hi - lo <= 0:
        out = np.zeros(32)
        out[0] = 1.0
        return out
    counts, _ = np.histogram(coeffs, bins=32, range=(lo, hi))
    return counts / coeffs.size


def edge_statistics(img: Image) -> np.ndarray:
    """Sobel-gradient summary: edge fraction, magnitude mean/std, 4-bin
    orientation histogram over edge pixels, and peak-bin homogeneity."""
    px = img.pixels
    if px.shape[0] < 3 or px.shape[1] < 3:
        raise ImageTooSmall("edge statistics need at least 3x3 pixels")
    gx = ndimage.sobel(px, axis=1, mode="nearest")
    gy = ndimage.sobel(px, axis=0, mode="nearest")
    mag = np.hypot(gx, gy)
    peak = float(mag.max())
    if peak <= 0:
        return np.zeros(8)
    edges = mag > 0.1 * peak
    frac = float(edges.mean())
    theta = np.mod(np.arctan2(gy[edges], gx[edges]), np.pi)
    hist, _ = np.histogram(theta, bins=4, range=(0.0, np.pi))
    n_edges = hist.sum()
    hist = hist / n_edges if n_edges > 0 else hist.astype(float)
    homogeneity = float(hist.max()) if n_edges > 0 else 0.0
    return np.concatenate([[frac, float(mag.mean()), float(mag.std())], hist, [homogeneity]])
