"""Frames, stacks and basic raster operations.

A Frame holds one grayscale image as a read-only float64 array with
intensities in [0, 1] and both dimensions >= 3. A ZStack is an ordered,
uniform-resolution sequence of frames taken at equally spaced focus positions;
``stride`` records how many motor steps separate adjacent frames.

Supported file formats: binary PGM (P5, 8-bit) and PNG (8/16-bit grayscale or
8-bit RGB/RGBA; color is reduced with BT.601 luma 0.299 R + 0.587 G + 0.114 B
in float, before any re-quantization).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator, Sequence

import numpy as np
from PIL import Image

from .errors import DimensionMismatchError, FrameRangeError, StackLoadError, ConfigError

MIN_SIDE = 3
STACK_EXTENSIONS = {".pgm", ".png"}

# BT.601 luma weights
_LUMA = np.array([0.299, 0.587, 0.114])


@dataclass(frozen=True, eq=False)
class Frame:
    """One grayscale image; pixels are float64 in [0, 1], shape (height, width)."""

    pixels: np.ndarray

    def __post_init__(self) -> None:
        px = self.pixels
        if not isinstance(px, np.ndarray) or px.ndim != 2 or px.dtype != np.float64:
            raise FrameRangeError("frame pixels must be a 2-D float64 array")
        if px.shape[0] < MIN_SIDE or px.shape[1] < MIN_SIDE:
            raise FrameRangeError(
                f"frame must be at least {MIN_SIDE}x{MIN_SIDE}, got {px.shape[1]}x{px.shape[0]}"
            )
        if not np.isfinite(px).all():
            raise FrameRangeError("frame contains non-finite values")
        lo = float(px.min())
        hi = float(px.max())
        if lo < 0.0 or hi > 1.0:
            raise FrameRangeError(f"intensities outside [0, 1]: min={lo}, max={hi}")
        px.flags.writeable = False

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Frame":
        return cls(np.ascontiguousarray(arr, dtype=np.float64))

    @property
    def height(self) -> int:
        return int(self.pixels.shape[0])

    @property
    def width(self) -> int:
        return int(self.pixels.shape[1])


BinaryMask = np.ndarray  # boolean array with one entry per pixel


@dataclass(frozen=True, eq=False)
class ZStack:
    """Ordered frames at equally spaced focus positions."""

    frames: tuple[Frame, ...]
    stride: int = 1

    def __post_init__(self) -> None:
        if not self.frames:
            raise StackLoadError("stack has no frames")
        if not isinstance(self.stride, int) or self.stride < 1:
            raise ConfigError(f"stride must be a positive integer, got {self.stride!r}")
        w, h = self.frames[0].width, self.frames[0].height
        for i, f in enumerate(self.frames):
            if f.width != w or f.height != h:
                raise DimensionMismatchError(
                    f"frame {i} is {f.width}x{f.height}, expected {w}x{h}"
                )
        object.__setattr__(self, "frames", tuple(self.frames))

    def __len__(self) -> int:
        return len(self.frames)

    def __iter__(self) -> Iterator[Frame]:
        return iter(self.frames)

    def __getitem__(self, i: int) -> Frame:
        return self.frames[i]

    @property
    def width(self) -> int:
        return self.frames[0].width

    @property
    def height(self) -> int:
        return self.frames[0].height


def from_arrays(arrays: Sequence[np.ndarray], stride: int = 1) -> ZStack:
    return ZStack(tuple(Frame.from_array(a) for a in arrays), stride=stride)


def subsample(stack: ZStack, step: int) -> ZStack:
    """Every step-th frame; the stride grows accordingly."""
    if step < 1:
        raise ConfigError(f"subsample step must be >= 1, got {step}")
    return ZStack(stack.frames[::step], stride=stack.stride * step)


# --- file I/O ---------------------------------------------------------------


def _read_pgm(path: Path) -> np.ndarray:
    data = path.read_bytes()
    if data[:2] != b"P5":
        raise StackLoadError(f"{path.name}: not a binary PGM (P5) file")
    # header tokens: width, height, maxval; '#' starts a comment to end of line
    pos = 2
    tokens: list[int] = []
    while len(tokens) < 3:
        while pos < len(data) and data[pos : pos + 1].isspace():
            pos += 1
        if pos < len(data) and data[pos : pos + 1] == b"#":
            while pos < len(data) and data[pos : pos + 1] != b"\n":
                pos += 1
            continue
        start = pos
        while pos < len(data) and not data[pos : pos + 1].isspace():
            pos += 1
        if start == pos:
            raise StackLoadError(f"{path.name}: truncated PGM header")
        try:
            tokens.append(int(data[start:pos]))
        except ValueError as e:
            raise StackLoadError(f"{path.name}: malformed PGM header") from e
    pos += 1  # single whitespace byte after maxval
    width, height, maxval = tokens
    if not (0 < maxval < 256):
        raise StackLoadError(f"{path.name}: unsupported PGM maxval {maxval}")
    if len(data) - pos < width * height:
        raise StackLoadError(f"{path.name}: truncated PGM raster")
    raster = np.frombuffer(data, dtype=np.uint8, count=width * height, offset=pos)
    return raster.reshape(height, width).astype(np.float64) / float(maxval)


def _read_png(path: Path) -> np.ndarray:
    with Image.open(path) as im:
        mode = im.mode
        if mode in ("L", "P"):
            arr = np.asarray(im.convert("L"), dtype=np.float64) / 255.0
        elif mode in ("I", "I;16"):
            arr = np.asarray(im, dtype=np.float64) / 65535.0
        elif mode in ("RGB", "RGBA"):
            rgb = np.asarray(im.convert("RGB"), dtype=np.float64) / 255.0
            arr = rgb @ _LUMA
        else:
            raise StackLoadError(f"{path.name}: unsupported PNG mode {mode}")
    return arr


def load_frame(path: str | Path) -> Frame:
    p = Path(path)
    if not p.is_file():
        raise StackLoadError(f"no such frame file: {p}")
    ext = p.suffix.lower()
    if ext == ".pgm":
        arr = _read_pgm(p)
    elif ext == ".png":
        arr = _read_png(p)
    else:
        raise StackLoadError(f"{p.name}: unsupported format {ext!r}")
    return Frame.from_array(np.clip(arr, 0.0, 1.0))


def save_frame(frame: Frame, path: str | Path) -> Path:
    """Write as 8-bit PGM (P5) or PNG depending on the extension."""
    p = Path(path)
    p.parent.mkdir(parents=True, exist_ok=True)
    raster = np.round(frame.pixels * 255.0).astype(np.uint8)
    ext = p.suffix.lower()
    if ext == ".pgm":
        header = f"P5\n{frame.width} {frame.height}\n255\n".encode("ascii")
        p.write_bytes(header + raster.tobytes())
    elif ext == ".png":
        Image.fromarray(raster, mode="L").save(p)
    else:
        raise ConfigError(f"unsupported output format {ext!r} (use .pgm or .png)")
    return p


def load_stack(directory: str | Path, stride: int = 1) -> ZStack:
    """Load all PGM/PNG frames from a directory in lexicographic name order."""
    d = Path(directory)
    if not d.is_dir():
        raise StackLoadError(f"no such stack directory: {d}")
    paths = sorted(
        (p for p in d.iterdir() if p.suffix.lower() in STACK_EXTENSIONS),
        key=lambda p: p.name,
    )
    if not paths:
        raise StackLoadError(f"no readable frames (*.pgm, *.png) in {d}")
    frames = [load_frame(p) for p in paths]
    w, h = frames[0].width, frames[0].height
    for p, f in zip(paths, frames):
        if f.width != w or f.height != h:
            raise DimensionMismatchError(
                f"{p.name}: frame is {f.width}x{f.height}, expected {w}x{h}"
            )
    return ZStack(tuple(frames), stride=stride)


# --- raster operations ------------------------------------------------------


def _resample_weights(src: int, dst: int) -> np.ndarray:
    """(dst, src) row-stochastic matrix of exact area-overlap weights."""
    scale = src / dst
    w = np.zeros((dst, src))
    for i in range(dst):
        lo = i * scale
        hi = lo + scale
        j0 = int(np.floor(lo))
        j1 = min(int(np.ceil(hi)), src)
        for j in range(j0, j1):
            w[i, j] = min(hi, j + 1.0) - max(lo, float(j))
    return w / scale


def downscale(frame: Frame, size: tuple[int, int]) -> Frame:
    """Area-average resample to (width, height); only shrinking is allowed."""
    new_w, new_h = size
    if new_w < MIN_SIDE or new_h < MIN_SIDE:
        raise ConfigError(f"downscale target too small: {new_w}x{new_h}")
    if new_w > frame.width or new_h > frame.height:
        raise ConfigError(
            f"downscale target {new_w}x{new_h} exceeds source {frame.width}x{frame.height}"
        )
    wr = _resample_weights(frame.height, new_h)
    wc = _resample_weights(frame.width, new_w)
    out = wr @ frame.pixels @ wc.T
    return Frame.from_array(np.clip(out, 0.0, 1.0))


def frame_diff_mad(a: Frame, b: Frame) -> float:
    """Mean absolute difference of two equally sized frames."""
    if a.width != b.width or a.height != b.height:
        raise DimensionMismatchError(
            f"cannot compare {a.width}x{a.height} with {b.width}x{b.height}"
        )
    return float(np.mean(np.abs(a.pixels - b.pixels)))


def dark_mask(frame: Frame, threshold: float) -> BinaryMask:
    """True where intensity is strictly below the threshold."""
    return frame.pixels < threshold
