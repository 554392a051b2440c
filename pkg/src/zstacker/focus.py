"""Focus-measure operators, focal curves, and sector-wise evaluation.

Four whole-frame sharpness operators:

- VOLL4: Vollath F4 autocorrelation, sum(I(x,y) I(x+1,y)) - sum(I(x,y) I(x+2,y))
  over rows.
- TENG: Tenengrad, sum of squared 3x3 Sobel gradients over the interior.
- LAPM: sum of modified-Laplacian magnitudes |2I - I_left - I_right| +
  |2I - I_up - I_down| over the interior.
- LAPV: population variance of the 3x3 Laplacian (0,1,0 / 1,-4,1 / 0,1,0)
  response over the interior.

Operators sum over valid stencil positions only; frames are never padded.
Stencils are grouped as differences from the center pixel, so TENG, LAPM and
LAPV are exactly zero on constant frames. A frame's value is deterministic:
summation runs over a fixed row-major layout regardless of thread count.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Callable

import numpy as np
from scipy import ndimage

from .errors import ConfigError, FrameRangeError
from .imgcore import BinaryMask, Frame, ZStack
from .parallel import map_ordered


class FMOperator(str, Enum):
    VOLL4 = "voll4"
    TENG = "teng"
    LAPM = "lapm"
    LAPV = "lapv"


# fm(s * I) == s**degree * fm(I)
HOMOGENEITY_DEGREE = {
    FMOperator.VOLL4: 2,
    FMOperator.TENG: 2,
    FMOperator.LAPM: 1,
    FMOperator.LAPV: 2,
}

_LAPLACE_KERNEL = np.array([[0.0, 1.0, 0.0], [1.0, -4.0, 1.0], [0.0, 1.0, 0.0]])


def _require(arr: np.ndarray, min_h: int, min_w: int, name: str) -> None:
    if arr.ndim != 2 or arr.shape[0] < min_h or arr.shape[1] < min_w:
        raise FrameRangeError(f"{name} needs at least {min_h}x{min_w} pixels, got {arr.shape}")


def voll4_kernel(a: np.ndarray) -> float:
    """Vollath F4 on a raw 2-D array (width >= 3)."""
    _require(a, 1, 3, "voll4")
    buf = np.multiply(a[:, :-1], a[:, 1:])
    lag1 = float(buf.sum())
    np.multiply(a[:, :-2], a[:, 2:], out=buf[:, :-1])
    lag2 = float(buf[:, :-1].sum())
    return lag1 - lag2


def teng_kernel(a: np.ndarray) -> float:
    """Sum of squared Sobel responses over interior pixels."""
    _require(a, 3, 3, "teng")
    gx = (a[:-2, 2:] - a[:-2, :-2]) + 2.0 * (a[1:-1, 2:] - a[1:-1, :-2]) + (a[2:, 2:] - a[2:, :-2])
    gy = (a[2:, :-2] - a[:-2, :-2]) + 2.0 * (a[2:, 1:-1] - a[:-2, 1:-1]) + (a[2:, 2:] - a[:-2, 2:])
    gx *= gx
    gy *= gy
    gx += gy
    return float(gx.sum())


def lapm_kernel(a: np.ndarray) -> float:
    """Sum of modified-Laplacian magnitudes over interior pixels."""
    _require(a, 3, 3, "lapm")
    c = a[1:-1, 1:-1]
    buf = np.subtract(c, a[1:-1, :-2])
    buf += c
    buf -= a[1:-1, 2:]
    np.abs(buf, out=buf)
    total = float(buf.sum())
    np.subtract(c, a[:-2, 1:-1], out=buf)
    buf += c
    buf -= a[2:, 1:-1]
    np.abs(buf, out=buf)
    return total + float(buf.sum())


def lapv_kernel(a: np.ndarray) -> float:
    """Population variance of the 3x3 Laplacian response over interior pixels."""
    _require(a, 3, 3, "lapv")
    lap = ndimage.correlate(a, _LAPLACE_KERNEL, mode="nearest")
    return float(np.var(lap[1:-1, 1:-1]))


OPERATOR_KERNELS: dict[FMOperator, Callable[[np.ndarray], float]] = {
    FMOperator.VOLL4: voll4_kernel,
    FMOperator.TENG: teng_kernel,
    FMOperator.LAPM: lapm_kernel,
    FMOperator.LAPV: lapv_kernel,
}


def fm_value(frame: Frame, op: FMOperator) -> float:
    return OPERATOR_KERNELS[FMOperator(op)](frame.pixels)


def fm_voll4(frame: Frame) -> float:
    return voll4_kernel(frame.pixels)


def fm_teng(frame: Frame) -> float:
    return teng_kernel(frame.pixels)


def fm_lapm(frame: Frame) -> float:
    return lapm_kernel(frame.pixels)


def fm_lapv(frame: Frame) -> float:
    return lapv_kernel(frame.pixels)


# --- focal curves -----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class FocalCurve:
    """Per-frame focus values along a stack.

    mirror_offset > 0 marks a mirror-extended curve: the first mirror_offset
    samples (and the trailing mirror_offset samples) are reflections, and
    original sample k sits at position k + mirror_offset.
    """

    values: np.ndarray
    source_stride: int = 1
    mirror_offset: int = 0
    smooth_window: int = 1

    def __post_init__(self) -> None:
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 1 or v.size < 1:
            raise ConfigError("focal curve must be a non-empty 1-D sequence")
        if not np.isfinite(v).all():
            raise ConfigError("focal curve contains non-finite values")
        if self.mirror_offset < 0 or v.size - 2 * self.mirror_offset < 1:
            raise ConfigError(f"mirror_offset {self.mirror_offset} inconsistent with length {v.size}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def __len__(self) -> int:
        return int(self.values.size)

    @property
    def original_length(self) -> int:
        """Length of the unmirrored curve this one represents."""
        return int(self.values.size - 2 * self.mirror_offset)


def focal_curve(stack: ZStack, op: FMOperator = FMOperator.VOLL4) -> FocalCurve:
    """Whole-frame focus measure of every frame, in stack order."""
    kernel = OPERATOR_KERNELS[FMOperator(op)]
    values = np.array(map_ordered(lambda f: kernel(f.pixels), stack.frames))
    return FocalCurve(values, source_stride=stack.stride)


# --- sector-wise evaluation -------------------------------------------------


@dataclass(frozen=True)
class SectorGrid:
    rows: int = 4
    cols: int = 4

    def __post_init__(self) -> None:
        if self.rows < 1 or self.cols < 1:
            raise ConfigError(f"sector grid must be at least 1x1, got {self.rows}x{self.cols}")


def sector_edges(extent: int, parts: int) -> list[int]:
    """Split extent pixels into parts contiguous runs; remainder pixels go to
    the trailing sectors. Returns parts+1 boundary offsets."""
    base = extent // parts
    rem = extent % parts
    sizes = [base] * (parts - rem) + [base + 1] * rem
    edges = [0]
    for s in sizes:
        edges.append(edges[-1] + s)
    return edges


@dataclass(frozen=True, eq=False)
class SectorFMMap:
    """Per-sector focus values plus a validity flag per sector."""

    values: np.ndarray  # (rows, cols) float64
    valid: np.ndarray  # (rows, cols) bool
    grid: SectorGrid


def sector_fm(
    frame: Frame,
    grid: SectorGrid,
    op: FMOperator = FMOperator.VOLL4,
    mask: BinaryMask | None = None,
) -> SectorFMMap:
    """Apply the operator to every sector of the frame.

    A sector is invalid when more than half of its pixels are set in the mask.
    The grid must leave every sector at least 3x3 pixels.
    """
    if frame.height // grid.rows < 3 or frame.width // grid.cols < 3:
        raise ConfigError(
            f"grid {grid.rows}x{grid.cols} leaves sectors below 3x3 "
            f"for a {frame.width}x{frame.height} frame"
        )
    if mask is not None and mask.shape != frame.pixels.shape:
        raise ConfigError("mask shape does not match the frame")
    kernel = OPERATOR_KERNELS[FMOperator(op)]
    row_edges = sector_edges(frame.height, grid.rows)
    col_edges = sector_edges(frame.width, grid.cols)
    values = np.zeros((grid.rows, grid.cols))
    valid = np.ones((grid.rows, grid.cols), dtype=bool)
    px = frame.pixels
    for r in range(grid.rows):
        for c in range(grid.cols):
            tile = px[row_edges[r] : row_edges[r + 1], col_edges[c] : col_edges[c + 1]]
            values[r, c] = kernel(tile)
            if mask is not None:
                m = mask[row_edges[r] : row_edges[r + 1], col_edges[c] : col_edges[c + 1]]
                valid[r, c] = int(m.sum()) * 2 <= m.size
    return SectorFMMap(values=values, valid=valid, grid=grid)
