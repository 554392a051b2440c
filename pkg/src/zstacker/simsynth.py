"""Synthetic Z-stack generator with exact ground truth.

Renders a procedural all-in-focus scene (band-limited value noise plus dark
line segments, so focus operators respond strongly) and defocuses it through
a depth model: the frame at index k blurs each plane region with a Gaussian
of sigma = blur_slope * |k - z_index|. Optional layers: a dirt blob sheet
that is sharp at its own z and blurred elsewhere, radial vignetting,
adjacent near-duplicate frames, and per-pixel Gaussian noise.

Everything is keyed off a 64-bit seed through counter-based hashing, so a
spec renders bit-identically on any platform and frames can be rendered in
parallel in any order.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import ndimage

from .errors import ConfigError
from .imgcore import Frame, ZStack
from .parallel import map_ordered
from .rng import Xorshift64Star, mix, normal_field, splitmix64, unit_floats

BLUR_IDENTITY_EPS = 0.3  # sigma below this renders as an exact copy
BLUR_TRUNCATE = 3.0  # Gaussian kernel support in sigmas
SHARP_SIGMA = 1.0  # visibly-sharp bound defining the true focused segment
DIRT_COLOR = 0.05

_TAG_NOISE_OCTAVE = 0x01
_TAG_LINES = 0x02
_TAG_DIRT = 0x03
_TAG_FRAME_NOISE = 0x04


@dataclass(frozen=True)
class Rect:
    """Half-open pixel rectangle [x0, x1) x [y0, y1)."""

    x0: int
    y0: int
    x1: int
    y1: int

    def __post_init__(self) -> None:
        if not (0 <= self.x0 < self.x1 and 0 <= self.y0 < self.y1):
            raise ConfigError(f"degenerate rectangle {self}")

    @property
    def width(self) -> int:
        return self.x1 - self.x0

    @property
    def height(self) -> int:
        return self.y1 - self.y0


@dataclass(frozen=True)
class PlaneSpec:
    region: Rect
    z_index: int


@dataclass(frozen=True)
class DirtSpec:
    z_index: int
    blob_count: int = 4
    blob_radius: float = 6.0

    def __post_init__(self) -> None:
        if self.blob_count < 1 or self.blob_radius <= 0:
            raise ConfigError("dirt needs blob_count >= 1 and blob_radius > 0")


@dataclass(frozen=True)
class SceneSpec:
    width: int
    height: int
    planes: tuple[PlaneSpec, ...]
    n_frames: int
    blur_slope: float = 0.5
    dirt: DirtSpec | None = None
    vignette_strength: float = 0.0
    duplicates_per_frame: int = 0
    noise_sigma: float = 0.0
    seed: int = 0

    def __post_init__(self) -> None:
        if self.width < 3 or self.height < 3:
            raise ConfigError("scene must be at least 3x3 pixels")
        if self.n_frames < 1:
            raise ConfigError("scene needs at least one frame")
        if not self.planes:
            raise ConfigError("scene needs at least one plane")
        if self.blur_slope < 0 or self.noise_sigma < 0:
            raise ConfigError("blur_slope and noise_sigma must be non-negative")
        if not 0.0 <= self.vignette_strength < 1.0:
            raise ConfigError("vignette_strength must be in [0, 1)")
        if self.duplicates_per_frame < 0:
            raise ConfigError("duplicates_per_frame must be non-negative")
        for p in self.planes:
            if not 0 <= p.z_index < self.n_frames:
                raise ConfigError(f"plane z_index {p.z_index} outside [0, {self.n_frames})")
            r = p.region
            if r.x1 > self.width or r.y1 > self.height:
                raise ConfigError(f"plane region {r} exceeds the {self.width}x{self.height} frame")
        if self.dirt is not None and not 0 <= self.dirt.z_index < self.n_frames:
            raise ConfigError(f"dirt z_index {self.dirt.z_index} outside [0, {self.n_frames})")
        owner = np.full((self.height, self.width), -1, dtype=np.int32)
        for i, p in enumerate(self.planes):
            sub = owner[p.region.y0 : p.region.y1, p.region.x0 : p.region.x1]
            if (sub != -1).any():
                raise ConfigError(f"plane {i} overlaps an earlier plane")
            sub[:] = i
        if (owner == -1).any():
            raise ConfigError("plane regions do not tile the frame")
        object.__setattr__(self, "planes", tuple(self.planes))

    @property
    def frames_per_z(self) -> int:
        """Rendered frames per depth position (the original plus duplicates)."""
        return 1 + self.duplicates_per_frame

    def to_dict(self) -> dict:
        d = {
            "width": self.width,
            "height": self.height,
            "planes": [
                {"region": [p.region.x0, p.region.y0, p.region.x1, p.region.y1], "z_index": p.z_index}
                for p in self.planes
            ],
            "n_frames": self.n_frames,
            "blur_slope": self.blur_slope,
            "dirt": None,
            "vignette_strength": self.vignette_strength,
            "duplicates_per_frame": self.duplicates_per_frame,
            "noise_sigma": self.noise_sigma,
            "seed": self.seed,
        }
        if self.dirt is not None:
            d["dirt"] = {
                "z_index": self.dirt.z_index,
                "blob_count": self.dirt.blob_count,
                "blob_radius": self.dirt.blob_radius,
            }
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "SceneSpec":
        try:
            planes = tuple(
                PlaneSpec(region=Rect(*p["region"]), z_index=int(p["z_index"]))
                for p in d["planes"]
            )
            dirt = None
            if d.get("dirt") is not None:
                dd = d["dirt"]
                dirt = DirtSpec(
                    z_index=int(dd["z_index"]),
                    blob_count=int(dd.get("blob_count", 4)),
                    blob_radius=float(dd.get("blob_radius", 6.0)),
                )
            return cls(
                width=int(d["width"]),
                height=int(d["height"]),
                planes=planes,
                n_frames=int(d["n_frames"]),
                blur_slope=float(d.get("blur_slope", 0.5)),
                dirt=dirt,
                vignette_strength=float(d.get("vignette_strength", 0.0)),
                duplicates_per_frame=int(d.get("duplicates_per_frame", 0)),
                noise_sigma=float(d.get("noise_sigma", 0.0)),
                seed=int(d.get("seed", 0)),
            )
        except (KeyError, TypeError) as e:
            raise ConfigError(f"bad scene spec: {e}") from e


def load_spec(path: str | Path) -> SceneSpec:
    with open(path, "r", encoding="utf-8") as fh:
        return SceneSpec.from_dict(json.load(fh))


@dataclass(frozen=True)
class SceneTruth:
    all_in_focus: Frame
    plane_best: tuple[int, ...]  # sharpest rendered frame per plane (first copy of its group)
    focused_segment: tuple[int, int]  # inclusive z-position range rendered visibly sharp
    dirt_frames: tuple[int, ...]  # every rendered frame with the dirt layer sharp

    def to_dict(self) -> dict:
        return {
            "plane_best": list(self.plane_best),
            "focused_segment": list(self.focused_segment),
            "dirt_frames": list(self.dirt_frames),
        }


# --- procedural texture -------------------------------------------------------


def _value_noise(key: np.ndarray | int, h: int, w: int, cell: int) -> np.ndarray:
    """Bilinear value noise in [0, 1): hash a lattice of cell x cell pixels,
    smoothstep-interpolate between lattice corners."""
    ny = h // cell + 2
    nx = w // cell + 2
    counters = (np.arange(ny, dtype=np.uint64)[:, None] * np.uint64(nx)
                + np.arange(nx, dtype=np.uint64)[None, :])
    lattice = unit_floats(splitmix64(np.asarray(key, dtype=np.uint64) ^ counters))
    gy = np.arange(h) / cell
    gx = np.arange(w) / cell
    y0 = gy.astype(int)
    x0 = gx.astype(int)
    ty = gy - y0
    tx = gx - x0
    ty = ty * ty * (3.0 - 2.0 * ty)
    tx = tx * tx * (3.0 - 2.0 * tx)
    v00 = lattice[np.ix_(y0, x0)]
    v01 = lattice[np.ix_(y0, x0 + 1)]
    v10 = lattice[np.ix_(y0 + 1, x0)]
    v11 = lattice[np.ix_(y0 + 1, x0 + 1)]
    top = v00 + (v01 - v00) * tx[None, :]
    bot = v10 + (v11 - v10) * tx[None, :]
    return top + (bot - top) * ty[:, None]


def _segment_distance(yy: np.ndarray, xx: np.ndarray, p0: tuple[float, float], p1: tuple[float, float]) -> np.ndarray:
    """Per-pixel distance to the segment p0-p1 (points as (x, y))."""
    dx, dy = p1[0] - p0[0], p1[1] - p0[1]
    L2 = dx * dx + dy * dy
    if L2 == 0.0:
        return np.hypot(xx - p0[0], yy - p0[1])
    t = np.clip(((xx - p0[0]) * dx + (yy - p0[1]) * dy) / L2, 0.0, 1.0)
    return np.hypot(xx - (p0[0] + t * dx), yy - (p0[1] + t * dy))


def scene_texture(seed: int, height: int, width: int) -> np.ndarray:
    """All-in-focus texture: 3 octaves of value noise darkened by random line
    segments. High contrast edges, values inside (0, 1)."""
    acc = np.zeros((height, width))
    for octave, (cell, amp) in enumerate(((16, 0.5), (8, 0.3), (4, 0.2))):
        key = mix(seed, _TAG_NOISE_OCTAVE, octave)
        acc += amp * _value_noise(key, height, width, cell)
    tex = 0.15 + 0.7 * acc

    rng = Xorshift64Star(int(mix(seed, _TAG_LINES)))
    yy, xx = np.mgrid[0:height, 0:width].astype(np.float64)
    n_lines = max(8, (height * width) // 600)
    for _ in range(n_lines):
        p0 = (rng.uniform() * width, rng.uniform() * height)
        p1 = (rng.uniform() * width, rng.uniform() * height)
        thickness = 0.8 + 1.8 * rng.uniform()
        darkness = 0.35 + 0.4 * rng.uniform()
        falloff = np.clip(1.0 - _segment_distance(yy, xx, p0, p1) / thickness, 0.0, 1.0)
        tex *= 1.0 - darkness * falloff
    return tex


def generate_scene(spec: SceneSpec) -> SceneTruth:
    """Build the ground truth: the clean scene plus oracle metadata.

    plane_best and dirt_frames use rendered-stack indices (z * frames_per_z
    for the first copy of a duplicate group); focused_segment stays in
    z-position coordinates.
    """
    tex = scene_texture(spec.seed, spec.height, spec.width)
    zs = [p.z_index for p in spec.planes]
    if spec.blur_slope > 0:
        margin = int(SHARP_SIGMA / spec.blur_slope)
        segment = (max(0, min(zs) - margin), min(spec.n_frames - 1, max(zs) + margin))
    else:
        segment = (0, spec.n_frames - 1)
    g = spec.frames_per_z
    dirt_frames: tuple[int, ...] = ()
    if spec.dirt is not None:
        dirt_frames = tuple(spec.dirt.z_index * g + c for c in range(g))
    return SceneTruth(
        all_in_focus=Frame.from_array(tex),
        plane_best=tuple(z * g for z in zs),
        focused_segment=segment,
        dirt_frames=dirt_frames,
    )


# --- rendering ------------------------------------------------------------------


def _sigma_cap(spec: SceneSpec) -> float:
    # keep kernels smaller than the frame on tiny scenes
    return max(3.0, min(spec.width, spec.height) / 8.0)


def _blur_region(base: np.ndarray, rect: Rect, sigma: float) -> np.ndarray:
    """Gaussian blur of the full image restricted to rect, computed on a crop
    padded by the kernel support so it matches the full-image blur exactly
    away from the frame border."""
    if sigma < BLUR_IDENTITY_EPS:
        return base[rect.y0 : rect.y1, rect.x0 : rect.x1]
    h, w = base.shape
    m = int(math.ceil(BLUR_TRUNCATE * sigma)) + 1
    y0, y1 = max(0, rect.y0 - m), min(h, rect.y1 + m)
    x0, x1 = max(0, rect.x0 - m), min(w, rect.x1 + m)
    crop = ndimage.gaussian_filter(base[y0:y1, x0:x1], sigma, truncate=BLUR_TRUNCATE, mode="nearest")
    return crop[rect.y0 - y0 : rect.y1 - y0, rect.x0 - x0 : rect.x1 - x0]


def _dirt_alpha(spec: SceneSpec) -> np.ndarray:
    """Sharp dirt opacity sheet: a handful of soft-edged blobs."""
    assert spec.dirt is not None
    rng = Xorshift64Star(int(mix(spec.seed, _TAG_DIRT)))
    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    alpha = np.zeros((spec.height, spec.width))
    for _ in range(spec.dirt.blob_count):
        cx = rng.uniform() * spec.width
        cy = rng.uniform() * spec.height
        radius = spec.dirt.blob_radius * (0.7 + 0.6 * rng.uniform())
        r2 = ((xx - cx) ** 2 + (yy - cy) ** 2) / (radius * radius)
        alpha = np.maximum(alpha, 0.9 * np.clip(1.0 - r2, 0.0, 1.0))
    return alpha


def _vignette(spec: SceneSpec) -> np.ndarray | None:
    if spec.vignette_strength <= 0:
        return None
    yy, xx = np.mgrid[0 : spec.height, 0 : spec.width].astype(np.float64)
    cy, cx = (spec.height - 1) / 2.0, (spec.width - 1) / 2.0
    r2 = ((yy - cy) ** 2 + (xx - cx) ** 2) / (cy * cy + cx * cx)
    return 1.0 - spec.vignette_strength * r2


def render_zstack(truth: SceneTruth, spec: SceneSpec) -> ZStack:
    """Render every frame (and its duplicates) of the scene."""
    base = truth.all_in_focus.pixels
    cap = _sigma_cap(spec)
    vignette = _vignette(spec)
    dirt_alpha = _dirt_alpha(spec) if spec.dirt is not None else None

    def render_z(k: int) -> list[np.ndarray]:
        img = np.empty_like(base)
        for p in spec.planes:
            sigma = min(spec.blur_slope * abs(k - p.z_index), cap)
            r = p.region
            img[r.y0 : r.y1, r.x0 : r.x1] = _blur_region(base, r, sigma)
        if dirt_alpha is not None:
            sigma_d = min(spec.blur_slope * abs(k - spec.dirt.z_index), cap)
            if sigma_d < BLUR_IDENTITY_EPS:
                a = dirt_alpha
            else:
                a = ndimage.gaussian_filter(dirt_alpha, sigma_d, truncate=BLUR_TRUNCATE, mode="nearest")
            img = img * (1.0 - a) + DIRT_COLOR * a
        if vignette is not None:
            img = img * vignette
        out = []
        for copy in range(spec.frames_per_z):
            frame = img
            if spec.noise_sigma > 0:
                key = mix(spec.seed, _TAG_FRAME_NOISE, k, copy)
                noise = normal_field(key, base.size).reshape(base.shape)
                frame = img + spec.noise_sigma * noise
            out.append(np.clip(frame, 0.0, 1.0))
        return out

    groups = map_ordered(render_z, range(spec.n_frames))
    arrays = [a for group in groups for a in group]
    return ZStack(tuple(Frame.from_array(a) for a in arrays), stride=1)


def simulate(spec: SceneSpec) -> tuple[SceneTruth, ZStack]:
    truth = generate_scene(spec)
    return truth, render_zstack(truth, spec)
