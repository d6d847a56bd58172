"""Synthetic multi-focal microscopy generator with exact ground truth.

Fields hold dark textured grains on a bright background; each grain type
has its own base intensity, spot/stripe texture and shape family, with
per-grain jitter so categories overlap realistically. Focal stacks blur
the clean render by sigma = blur_per_plane * |i - sharp_plane| and add
sensor noise per plane.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import ndimage

from ..imagecore import BinaryMask, BoundingBox, FocalStack, Image
from ..segmentation.pipeline import GrainRecord, make_record

BACKGROUND = 0.86


@dataclass(frozen=True)
class TypeParams:
    """Texture and shape family of one synthetic grain type."""

    base_intensity: float
    spot_density: float          # dark spots per interior pixel
    stripe_frequency: float      # stripe cycles across the grain diameter
    radius_range: tuple[float, float]
    elongation: float            # major/minor axis ratio
    stripe_amplitude: float = 0.10
    pore_density: float = 0.0    # bright vesicle blobs per interior pixel
    ripple_amplitude: float = 0.02  # fine echinate boundary ripple (relative)
    soft_edge: float = 0.0       # extra edge-ramp width (px) on 1-3 random arcs
    edge_glow: float = 0.0       # translucent-exine brightening toward the rim
    glow_width: float = 6.0      # glow band depth in px


_BASES = (0.50, 0.38, 0.58, 0.45, 0.64, 0.42, 0.55, 0.35)
_SPOTS = (0.004, 0.014, 0.0, 0.008, 0.002, 0.0, 0.010, 0.016)
_STRIPES = (0.0, 0.0, 5.0, 9.0, 2.5, 7.0, 0.0, 4.0)
_RADII = ((15, 19), (13, 17), (18, 23), (12, 15), (20, 26), (14, 18), (16, 21), (13, 16))
_ELONG = (1.0, 1.35, 1.0, 1.6, 1.15, 1.0, 1.45, 1.25)
_PORES = (2e-4, 0.0, 1.5e-4, 0.0, 2.5e-4, 1e-4, 0.0, 1e-4)


def default_type_params(n_types: int) -> tuple[TypeParams, ...]:
    """Deterministic, well-separated parameter families for any type count."""
    params = []
    for t in range(n_types):
        i = t % len(_BASES)
        cycle = t // len(_BASES)
        lo, hi = _RADII[i]
        params.append(
            TypeParams(
                base_intensity=min(0.72, _BASES[i] + 0.015 * cycle),
                spot_density=_SPOTS[i] * (1.0 + 0.2 * cycle),
                stripe_frequency=_STRIPES[i] + 0.5 * cycle,
                radius_range=(lo * (1.0 + 0.05 * cycle), hi * (1.0 + 0.05 * cycle)),
                elongation=_ELONG[i],
                pore_density=_PORES[i],
            )
        )
    return tuple(params)


@dataclass(frozen=True)
class SynthConfig:
    n_types: int = 5
    grains_per_type: int = 40
    planes: int = 31
    sharp_plane: int = 15
    blur_per_plane: float = 0.5
    field_size: tuple[int, int] = (256, 256)   # (height, width) of stack fields
    grains_per_field: int = 3
    crop_size: int = 96                        # grain-corpus crop side
    type_params: tuple[TypeParams, ...] | None = None
    debris_density: float = 2e-5               # debris specks per field pixel
    cluster_probability: float = 0.0
    grain_gap: float = 10.0                    # min clearance between grains, px
    noise_sigma: float = 0.02
    optics_blur: float = 0.6                   # residual blur at perfect focus
    seed: int = 0

    def __post_init__(self):
        if self.planes < 1 or not (0 <= self.sharp_plane < self.planes):
            raise ValueError("sharp_plane must index a plane")
        if self.n_types < 1 or self.grains_per_type < 1 or self.grains_per_field < 1:
            raise ValueError("counts must be positive")
        if self.blur_per_plane < 0 or self.noise_sigma < 0:
            raise ValueError("blur and noise must be non-negative")
        if self.type_params is not None and len(self.type_params) < self.n_types:
            raise ValueError("need type_params for every type")

    def params_for(self, type_id: int) -> TypeParams:
        if self.type_params is not None:
            return self.type_params[type_id]
        return default_type_params(self.n_types)[type_id]

    def label_for(self, type_id: int) -> str:
        return f"type_{type_id}"


@dataclass
class _Grain:
    cx: float
    cy: float
    r0: float
    angle: float
    elongation: float


def _grain_geometry(rng: np.random.Generator, tp: TypeParams) -> tuple[float, float, float]:
    lo, hi = tp.radius_range
    r0 = float(rng.uniform(lo, hi))
    angle = float(rng.uniform(0.0, np.pi))
    return r0, angle, tp.elongation


def _paint_grain(
    canvas: np.ndarray,
    grain: _Grain,
    tp: TypeParams,
    rng: np.random.Generator,
) -> np.ndarray:
    """Render one grain in place; returns its exact boolean mask."""
    h, w = canvas.shape
    a = grain.r0 * np.sqrt(grain.elongation)
    b = grain.r0 / np.sqrt(grain.elongation)
    pad = int(np.ceil(max(a, b) * 1.35)) + 3
    x0, x1 = max(0, int(grain.cx) - pad), min(w, int(grain.cx) + pad + 1)
    y0, y1 = max(0, int(grain.cy) - pad), min(h, int(grain.cy) + pad + 1)
    yy, xx = np.mgrid[y0:y1, x0:x1].astype(np.float64)
    dx, dy = xx - grain.cx, yy - grain.cy
    ca, sa = np.cos(grain.angle), np.sin(grain.angle)
    u = (ca * dx + sa * dy) / a
    v = (-sa * dx + ca * dy) / b
    rho = np.hypot(u, v)
    theta = np.arctan2(v, u)

    # low-order radial wobble keeps boundaries organic but smooth; the
    # high-order ripple mimics an echinate exine
    amp2, amp3 = rng.uniform(0.02, 0.05), rng.uniform(0.01, 0.04)
    ph2, ph3 = rng.uniform(0, 2 * np.pi, size=2)
    boundary = 1.0 + amp2 * np.cos(2 * theta + ph2) + amp3 * np.cos(3 * theta + ph3)
    if tp.ripple_amplitude > 0:
        k = int(rng.integers(8, 14))
        phk = rng.uniform(0, 2 * np.pi)
        boundary += tp.ripple_amplitude * np.cos(k * theta + phk)
    dist = (rho - boundary) * grain.r0  # approx signed distance in pixels

    interior = np.full(dist.shape, tp.base_intensity)
    jitter = rng.uniform(-0.02, 0.02)
    interior += jitter
    if tp.stripe_frequency > 0:
        phase = rng.uniform(0, 2 * np.pi)
        stripe_dir = rng.uniform(0, np.pi)
        proj = np.cos(stripe_dir) * dx + np.sin(stripe_dir) * dy
        interior += tp.stripe_amplitude * np.sin(np.pi * tp.stripe_frequency * proj / grain.r0 + phase)

    def _interior_point(rho_lo: float, rho_hi: float) -> tuple[float, float]:
        srho = np.sqrt(rng.uniform(rho_lo**2, rho_hi**2))
        stheta = rng.uniform(0, 2 * np.pi)
        px = grain.cx + (ca * srho * np.cos(stheta) * a - sa * srho * np.sin(stheta) * b)
        py = grain.cy + (sa * srho * np.cos(stheta) * a + ca * srho * np.sin(stheta) * b)
        return px, py

    if tp.spot_density > 0:
        area = np.pi * a * b
        for _ in range(int(rng.poisson(tp.spot_density * area))):
            scx, scy = _interior_point(0.0, 0.70)
            sr = rng.uniform(1.4, 2.6)
            depth = rng.uniform(0.12, 0.28)
            d2 = (xx - scx) ** 2 + (yy - scy) ** 2
            interior -= depth * np.exp(-d2 / (2.0 * sr * sr))

    if tp.pore_density > 0:
        # bright vesicles straddling the boundary; they read as background
        # to intensity clustering and notch the coarse mask, which is what
        # the fine stage must repair. Angular separation keeps notches from
        # merging into grain-splitting channels.
        area = np.pi * a * b
        n_pores = max(1, int(rng.poisson(tp.pore_density * area)))
        pore_angles: list[float] = []
        for _ in range(n_pores):
            stheta = None
            for _ in range(40):
                cand = rng.uniform(0, 2 * np.pi)
                if all(abs((cand - t0 + np.pi) % (2 * np.pi) - np.pi) > 0.9 for t0 in pore_angles):
                    stheta = cand
                    break
            if stheta is None:
                continue
            pore_angles.append(stheta)
            srho = rng.uniform(0.90, 1.0)
            pcx = grain.cx + (ca * srho * np.cos(stheta) * a - sa * srho * np.sin(stheta) * b)
            pcy = grain.cy + (sa * srho * np.cos(stheta) * a + ca * srho * np.sin(stheta) * b)
            pr = grain.r0 * rng.uniform(0.09, 0.14)
            value = rng.uniform(0.78, 0.88)
            d2 = (xx - pcx) ** 2 + (yy - pcy) ** 2
            blend = np.exp(-((d2 / (pr * pr)) ** 2))
            interior = interior * (1.0 - blend) + value * blend

    if tp.edge_glow > 0:
        # translucent exine: intensity rises toward the boundary, which
        # biases plain intensity thresholds inward while the sharp outer
        # step keeps the true gradient at the real border
        glow = tp.edge_glow * np.clip(1.0 + dist / tp.glow_width, 0.0, 1.0)
        interior = interior + glow
    else:
        # opaque exine: dark rim just inside the boundary
        rim = 0.12 * np.exp(-((dist + 1.3) / 0.9) ** 2)
        interior = interior - rim
    interior = np.clip(interior, 0.02, 0.98)

    # edge ramp: nominally 1 px; soft_edge widens it along random arcs,
    # imitating locally defocused exine
    ramp = np.ones_like(dist)
    if tp.soft_edge > 0:
        n_arcs = int(rng.integers(1, 4))
        envelope = np.zeros_like(theta)
        for _ in range(n_arcs):
            center = rng.uniform(0, 2 * np.pi)
            width = rng.uniform(0.35, 0.7)
            delta = np.abs((theta - center + np.pi) % (2 * np.pi) - np.pi)
            envelope = np.maximum(envelope, np.clip(1.0 - delta / width, 0.0, 1.0))
        ramp = ramp + tp.soft_edge * envelope
    weight = np.clip(0.5 - dist / ramp, 0.0, 1.0)
    canvas[y0:y1, x0:x1] = weight * interior + (1.0 - weight) * canvas[y0:y1, x0:x1]

    mask = np.zeros((h, w), dtype=bool)
    mask[y0:y1, x0:x1] = dist <= 0.0
    return mask


def _paint_debris(canvas: np.ndarray, rng: np.random.Generator, density: float) -> None:
    h, w = canvas.shape
    n = int(rng.poisson(density * h * w))
    for _ in range(n):
        cx, cy = rng.uniform(0, w), rng.uniform(0, h)
        sr = rng.uniform(1.0, 2.4)
        depth = rng.uniform(0.2, 0.45)
        pad = int(np.ceil(3 * sr)) + 1
        x0, x1 = max(0, int(cx) - pad), min(w, int(cx) + pad + 1)
        y0, y1 = max(0, int(cy) - pad), min(h, int(cy) + pad + 1)
        if x1 <= x0 or y1 <= y0:
            continue
        yy, xx = np.mgrid[y0:y1, x0:x1].astype(np.float64)
        d2 = (xx - cx) ** 2 + (yy - cy) ** 2
        canvas[y0:y1, x0:x1] -= depth * np.exp(-d2 / (2.0 * sr * sr))
    np.clip(canvas, 0.0, 1.0, out=canvas)


def _background(h: int, w: int) -> np.ndarray:
    yy, xx = np.mgrid[0:h, 0:w].astype(np.float64)
    vignette = 0.015 * np.hypot((yy - h / 2) / h, (xx - w / 2) / w)
    return BACKGROUND - vignette


def render_field(
    cfg: SynthConfig, type_id: int, rng: np.random.Generator
) -> tuple[np.ndarray, list[np.ndarray]]:
    """Clean (noise-free, blur-free) field of one type plus per-grain masks."""
    h, w = cfg.field_size
    tp = cfg.params_for(type_id)
    canvas = _background(h, w)
    placed: list[_Grain] = []
    masks: list[np.ndarray] = []
    attempts = 0
    while len(placed) < cfg.grains_per_field and attempts < 250:
        attempts += 1
        r0, angle, elong = _grain_geometry(rng, tp)
        margin = r0 * np.sqrt(elong) * 1.25 + 4
        touching = placed and rng.uniform() < cfg.cluster_probability
        if touching:
            host = placed[int(rng.integers(0, len(placed)))]
            direction = rng.uniform(0, 2 * np.pi)
            dist = host.r0 + r0 - 2.0
            cx, cy = host.cx + dist * np.cos(direction), host.cy + dist * np.sin(direction)
            if not (margin <= cx < w - margin and margin <= cy < h - margin):
                continue
        else:
            if w - 2 * margin <= 0 or h - 2 * margin <= 0:
                break
            cx = rng.uniform(margin, w - margin)
            cy = rng.uniform(margin, h - margin)
            too_close = any(
                np.hypot(cx - g.cx, cy - g.cy)
                < (r0 * np.sqrt(elong) + g.r0 * np.sqrt(g.elongation) + cfg.grain_gap)
                for g in placed
            )
            if too_close:
                continue
        grain = _Grain(cx=cx, cy=cy, r0=r0, angle=angle, elongation=elong)
        masks.append(_paint_grain(canvas, grain, tp, rng))
        placed.append(grain)
    _paint_debris(canvas, rng, cfg.debris_density)
    return canvas, masks


def _stack_rng(cfg: SynthConfig, type_id: int, seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(type_id, seed)))


def synth_stack(
    cfg: SynthConfig, type_id: int, seed: int
) -> tuple[FocalStack, list[BinaryMask], str]:
    """One focal stack: plane i is the clean field blurred by
    blur_per_plane * |i - sharp_plane| plus per-plane sensor noise."""
    rng = _stack_rng(cfg, type_id, seed)
    clean, masks = render_field(cfg, type_id, rng)
    planes = []
    for i in range(cfg.planes):
        sigma = cfg.blur_per_plane * abs(i - cfg.sharp_plane)
        plane = ndimage.gaussian_filter(clean, sigma) if sigma > 0 else clean.copy()
        if cfg.noise_sigma > 0:
            plane = plane + rng.normal(0.0, cfg.noise_sigma, size=plane.shape)
        planes.append(Image(np.clip(plane, 0.0, 1.0)))
    return (
        FocalStack(planes=tuple(planes), plane_step=1.0),
        [BinaryMask(m) for m in masks],
        cfg.label_for(type_id),
    )


def synth_grain_record(cfg: SynthConfig, type_id: int, seed: int) -> GrainRecord:
    """One grain rendered directly at optimal focus into a fixed-size crop,
    with its exact mask (bypasses focus selection and segmentation)."""
    rng = np.random.default_rng(np.random.SeedSequence(cfg.seed, spawn_key=(1000 + type_id, seed)))
    side = cfg.crop_size
    tp = cfg.params_for(type_id)
    canvas = _background(side, side)
    r0, angle, elong = _grain_geometry(rng, tp)
    jitter = min(5.0, max(1.0, side / 2 - r0 * np.sqrt(elong) * 1.3 - 2))
    cx = side / 2 + rng.uniform(-jitter, jitter)
    cy = side / 2 + rng.uniform(-jitter, jitter)
    grain = _Grain(cx=cx, cy=cy, r0=r0, angle=angle, elongation=elong)
    mask = _paint_grain(canvas, grain, tp, rng)
    if cfg.optics_blur > 0:
        canvas = ndimage.gaussian_filter(canvas, cfg.optics_blur)
    if cfg.noise_sigma > 0:
        canvas = canvas + rng.normal(0.0, cfg.noise_sigma, size=canvas.shape)
    image = Image(np.clip(canvas, 0.0, 1.0))
    box = BoundingBox(x=0, y=0, w=side, h=side)
    return make_record(f"{cfg.label_for(type_id)}/grain_{seed}", box, image, BinaryMask(mask))


def segmentation_suite_config(seed: int = 0, grains_per_field: int = 5) -> SynthConfig:
    """Field configuration used by the segmentation validation suite: large
    translucent-edged grains on bright fields with debris, where intensity
    clustering under-segments and the contour stage must recover."""
    types = tuple(
        TypeParams(
            base_intensity=b,
            spot_density=s,
            stripe_frequency=f,
            radius_range=(45.0, 60.0),
            elongation=e,
            stripe_amplitude=0.06,
            ripple_amplitude=0.0,
            edge_glow=0.22,
        )
        for b, s, f, e in (
            (0.46, 0.001, 0.0, 1.0),
            (0.38, 0.003, 0.0, 1.2),
            (0.52, 0.0, 4.0, 1.0),
            (0.42, 0.002, 7.0, 1.35),
            (0.50, 0.0005, 2.0, 1.1),
        )
    )
    return SynthConfig(
        n_types=5,
        field_size=(448, 448),
        grains_per_field=grains_per_field,
        type_params=types,
        debris_density=2e-5,
        noise_sigma=0.03,
        seed=seed,
    )


def make_grain_corpus(
    cfg: SynthConfig, type_ids: tuple[int, ...] | None = None, seed_offset: int = 0
) -> tuple[list[GrainRecord], list[str]]:
    """The default synthetic corpus: grains_per_type records per type with
    exact masks. seed_offset yields fresh, disjoint corpora (e.g. inlier or
    fuzz sets) from the same configuration."""
    type_ids = type_ids if type_ids is not None else tuple(range(cfg.n_types))
    records, labels = [], []
    for t in type_ids:
        for g in range(cfg.grains_per_type):
            records.append(synth_grain_record(cfg, t, seed_offset + g))
            labels.append(cfg.label_for(t))
    return records, labels
