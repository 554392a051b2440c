"""Focus stacking: fuse a coverage set into one all-in-focus image.

Three methods with different speed/quality trade-offs:

- pixel: per-pixel argmax of a windowed Tenengrad sharpness map; fastest,
  copies every pixel verbatim from some input frame.
- neighbor: per-tile Tenengrad vote on a block grid, then a median pass over
  the tile label map to suppress isolated labels; tiles copied whole.
- wavelet: multilevel separable Haar transform per frame, detail coefficients
  fused by largest magnitude, approximation band averaged, inverse transform;
  slowest but blends focus boundaries instead of cutting them.

All tie-breaks go to the lower frame index and fusion reductions run in fixed
frame order, so outputs are bit-stable regardless of thread count.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Sequence

import numpy as np
from scipy import ndimage, signal

from .errors import ConfigError, DimensionMismatchError
from .focus import teng_kernel
from .imgcore import Frame, save_frame
from .parallel import map_ordered

DEFAULT_PIXEL_WINDOW = 9
DEFAULT_BLOCK = 16
DEFAULT_MEDIAN_WINDOW = 3
DEFAULT_LEVELS = 4


class StackMethod(str, Enum):
    PIXEL = "pixel"
    NEIGHBOR = "neighbor"
    WAVELET = "wavelet"


@dataclass(frozen=True, eq=False)
class FocusMap:
    """Per-pixel sharpness, same shape as the source frame."""

    values: np.ndarray

    @property
    def height(self) -> int:
        return int(self.values.shape[0])

    @property
    def width(self) -> int:
        return int(self.values.shape[1])


@dataclass(frozen=True, eq=False)
class FusionResult:
    image: Frame
    method: StackMethod
    label_map: np.ndarray | None  # (h, w) int source indices; None for wavelet


def _check_frames(frames: Sequence[Frame]) -> tuple[int, int]:
    if len(frames) < 2:
        raise ConfigError(f"fusion needs at least 2 frames, got {len(frames)}")
    h, w = frames[0].height, frames[0].width
    for i, f in enumerate(frames):
        if f.height != h or f.width != w:
            raise DimensionMismatchError(f"frame {i} is {f.width}x{f.height}, expected {w}x{h}")
    return h, w


def _box_sum(a: np.ndarray, radius: int) -> np.ndarray:
    """Sum over the (2 radius + 1)^2 window around each cell, windows clipped
    at the array edge. Integral-image subtraction, so sums are exact."""
    h, w = a.shape
    ii = np.zeros((h + 1, w + 1))
    ii[1:, 1:] = a.cumsum(axis=0).cumsum(axis=1)
    r0 = np.clip(np.arange(h) - radius, 0, h)
    r1 = np.clip(np.arange(h) + radius + 1, 0, h)
    c0 = np.clip(np.arange(w) - radius, 0, w)
    c1 = np.clip(np.arange(w) + radius + 1, 0, w)
    return ii[np.ix_(r1, c1)] - ii[np.ix_(r0, c1)] - ii[np.ix_(r1, c0)] + ii[np.ix_(r0, c0)]


def focus_map_teng(frame: Frame, window: int = DEFAULT_PIXEL_WINDOW) -> FocusMap:
    """Windowed Sobel energy around every pixel.

    Each pixel gets the sum of Gx^2 + Gy^2 over the window centered on it;
    stencil positions outside the frame contribute zero.
    """
    if window % 2 == 0 or window < 3:
        raise ConfigError(f"window must be odd and >= 3, got {window}")
    a = frame.pixels
    gx = (a[:-2, 2:] - a[:-2, :-2]) + 2.0 * (a[1:-1, 2:] - a[1:-1, :-2]) + (a[2:, 2:] - a[2:, :-2])
    gy = (a[2:, :-2] - a[:-2, :-2]) + 2.0 * (a[2:, 1:-1] - a[:-2, 1:-1]) + (a[2:, 2:] - a[:-2, 2:])
    energy = np.zeros(a.shape)
    energy[1:-1, 1:-1] = gx * gx + gy * gy
    return FocusMap(_box_sum(energy, window // 2))


def stack_pixel(frames: Sequence[Frame], window: int = DEFAULT_PIXEL_WINDOW) -> FusionResult:
    """Copy every pixel from the frame whose focus map wins there."""
    _check_frames(frames)
    maps = np.stack(map_ordered(lambda f: focus_map_teng(f, window).values, frames))
    label = np.argmax(maps, axis=0)
    px = np.stack([f.pixels for f in frames])
    image = np.take_along_axis(px, label[None], axis=0)[0]
    return FusionResult(Frame.from_array(image), StackMethod.PIXEL, label)


def _tile_edges(extent: int, block: int) -> list[int]:
    # trailing partial tile allowed
    return list(range(0, extent, block)) + [extent]


def median_relabel(labels: np.ndarray, window: int) -> np.ndarray:
    """Median-filter an integer label map (edge-replicated borders). Odd
    window sizes pick the middle sorted element, so the result is always an
    existing label and ties resolve to the lower index."""
    if window % 2 == 0 or window < 1:
        raise ConfigError(f"median window must be odd and >= 1, got {window}")
    if window == 1:
        return labels.copy()
    return ndimage.median_filter(labels, size=window, mode="nearest")


def stack_neighbor(
    frames: Sequence[Frame],
    block: int = DEFAULT_BLOCK,
    median_window: int = DEFAULT_MEDIAN_WINDOW,
) -> FusionResult:
    """Copy block x block tiles from the frame with the sharpest tile."""
    h, w = _check_frames(frames)
    if block < 1:
        raise ConfigError(f"block must be >= 1, got {block}")
    row_edges = _tile_edges(h, block)
    col_edges = _tile_edges(w, block)
    nr, nc = len(row_edges) - 1, len(col_edges) - 1

    def tile_scores(f: Frame) -> np.ndarray:
        s = np.zeros((nr, nc))
        px = f.pixels
        for i in range(nr):
            for j in range(nc):
                t = px[row_edges[i] : row_edges[i + 1], col_edges[j] : col_edges[j + 1]]
                # degenerate partial tiles (<3 px a side) have no stencil
                # positions, hence zero energy
                s[i, j] = teng_kernel(t) if min(t.shape) >= 3 else 0.0
        return s

    scores = np.stack(map_ordered(tile_scores, frames))
    tile_label = median_relabel(np.argmax(scores, axis=0), median_window)

    image = np.empty((h, w))
    label = np.empty((h, w), dtype=int)
    for i in range(nr):
        for j in range(nc):
            sl = (slice(row_edges[i], row_edges[i + 1]), slice(col_edges[j], col_edges[j + 1]))
            k = int(tile_label[i, j])
            image[sl] = frames[k].pixels[sl]
            label[sl] = k
    return FusionResult(Frame.from_array(image), StackMethod.NEIGHBOR, label)


# --- separable Haar filter bank ----------------------------------------------

_S = np.sqrt(0.5)
_LO = np.array([_S, _S])
_HI = np.array([_S, -_S])
# subband kernels: outer(row filter, column filter)
_KERNELS = (
    np.outer(_LO, _LO),  # approximation
    np.outer(_LO, _HI),
    np.outer(_HI, _LO),
    np.outer(_HI, _HI),
)


def _analyze(a: np.ndarray) -> list[np.ndarray]:
    """One decomposition level: correlate with each subband kernel, keep every
    second sample. Returns [approx, detail_lh, detail_hl, detail_hh]."""
    return [signal.correlate2d(a, k, mode="valid")[::2, ::2] for k in _KERNELS]


def _synthesize(bands: Sequence[np.ndarray]) -> np.ndarray:
    """Inverse of _analyze: zero-stuff each subband, convolve with its kernel,
    sum the four contributions."""
    sh, sw = bands[0].shape
    out = np.zeros((2 * sh, 2 * sw))
    up = np.zeros((2 * sh, 2 * sw))
    for sub, k in zip(bands, _KERNELS):
        up[:] = 0.0
        up[::2, ::2] = sub
        out += signal.convolve2d(up, k, mode="full")[: 2 * sh, : 2 * sw]
    return out


def haar_forward(a: np.ndarray, levels: int) -> tuple[np.ndarray, list[tuple[np.ndarray, ...]]]:
    """Multilevel transform; both sides must be multiples of 2**levels.
    Returns (approximation, per-level detail triples, finest first)."""
    if levels < 1:
        raise ConfigError(f"levels must be >= 1, got {levels}")
    h, w = a.shape
    m = 2**levels
    if h % m or w % m:
        raise ConfigError(f"shape {a.shape} is not a multiple of 2**levels = {m}")
    details: list[tuple[np.ndarray, ...]] = []
    cur = a
    for _ in range(levels):
        approx, lh, hl, hh = _analyze(cur)
        details.append((lh, hl, hh))
        cur = approx
    return cur, details


def haar_inverse(approx: np.ndarray, details: list[tuple[np.ndarray, ...]]) -> np.ndarray:
    cur = approx
    for lh, hl, hh in reversed(details):
        cur = _synthesize([cur, lh, hl, hh])
    return cur


def stack_wavelet(frames: Sequence[Frame], levels: int = DEFAULT_LEVELS) -> FusionResult:
    """Fuse in the Haar domain: largest-magnitude detail coefficients across
    frames, averaged approximation band."""
    h, w = _check_frames(frames)
    if levels < 1:
        raise ConfigError(f"levels must be >= 1, got {levels}")
    m = 2**levels
    if m > min(h, w):
        raise ConfigError(f"levels {levels} too large for a {w}x{h} frame")
    ph, pw = -(-h // m) * m, -(-w // m) * m

    def transform(f: Frame):
        padded = np.pad(f.pixels, ((0, ph - h), (0, pw - w)), mode="edge")
        return haar_forward(padded, levels)

    transforms = map_ordered(transform, frames)
    approx = np.mean([t[0] for t in transforms], axis=0)
    fused: list[tuple[np.ndarray, ...]] = []
    for lvl in range(levels):
        bands = []
        for b in range(3):
            coef = np.stack([t[1][lvl][b] for t in transforms])
            pick = np.argmax(np.abs(coef), axis=0)
            bands.append(np.take_along_axis(coef, pick[None], axis=0)[0])
        fused.append(tuple(bands))
    rec = haar_inverse(approx, fused)
    image = np.clip(rec[:h, :w], 0.0, 1.0)
    return FusionResult(Frame.from_array(image), StackMethod.WAVELET, None)


def fuse(
    frames: Sequence[Frame],
    method: StackMethod | str,
    *,
    window: int = DEFAULT_PIXEL_WINDOW,
    block: int = DEFAULT_BLOCK,
    median_window: int = DEFAULT_MEDIAN_WINDOW,
    levels: int = DEFAULT_LEVELS,
) -> FusionResult:
    method = StackMethod(method)
    if method is StackMethod.PIXEL:
        return stack_pixel(frames, window=window)
    if method is StackMethod.NEIGHBOR:
        return stack_neighbor(frames, block=block, median_window=median_window)
    return stack_wavelet(frames, levels=levels)


def save_label_map(path: str | Path, label_map: np.ndarray, n_frames: int) -> Path:
    """Write a label map as an 8-bit image, indices scaled across the range."""
    if n_frames < 1:
        raise ConfigError("n_frames must be >= 1")
    scale = 1.0 / (n_frames - 1) if n_frames > 1 else 0.0
    return save_frame(Frame.from_array(label_map.astype(np.float64) * scale), path)
