"""Focal-curve peak detection and the fast focal-plane search.

The fast search finds the in-focus z-range of a coarse stack from its focal
curve alone: smooth the curve, mirror-extend the ends so boundary peaks keep
both flanks, binary-search a prominence threshold until exactly one peak
survives, and map that peak's full base back to frame indices.

Peak geometry follows topographic prominence: a peak's prominence is its
height minus the higher of the two minima reached by descending left and
right until a strictly higher sample (or a curve end); its bases are the last
crossings of (height - prominence) on each side, scanning outward from the
peak within those descents.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidPeakError, NoPeakError
from .focus import FMOperator, FocalCurve, focal_curve
from .imgcore import ZStack

log = logging.getLogger(__name__)

BIN_SEARCH_MAX_ITER = 64
BIN_SEARCH_REL_EPS = 1e-12


@dataclass(frozen=True)
class Peak:
    """A local maximum with topographic prominence and full-base extent."""

    index: int
    height: float
    prominence: float
    left_base: int
    right_base: int

    @property
    def width(self) -> int:
        return self.right_base - self.left_base


@dataclass(frozen=True)
class Segment:
    """An in-focus range; frame indices and z positions in fine-scan units."""

    start_frame: int
    end_frame: int
    start_z: int
    end_z: int


def default_smooth_window(n: int) -> int:
    """max(3, round(n / 20)), forced odd."""
    w = max(3, round(n / 20))
    return w + 1 if w % 2 == 0 else w


def smoothen(curve: FocalCurve, window: int) -> FocalCurve:
    """Centered moving average; end windows clip to the curve and average
    whatever samples they cover.

    Window sums come from a direct convolution anchored at v[0], not a cumsum:
    cumsum differences carry position-dependent rounding that breaks the exact
    flatness of constant curve regions, and base placement downstream depends
    on that flatness.
    """
    if window < 1 or window % 2 == 0:
        raise ConfigError(f"smooth window must be odd and >= 1, got {window}")
    v = curve.values
    if window == 1:
        out = v.copy()
    else:
        n = v.size
        shifted = v - v[0]
        sums = np.convolve(shifted, np.ones(window), mode="same")
        counts = np.convolve(np.ones(n), np.ones(window), mode="same")
        out = v[0] + sums / counts
    return FocalCurve(
        out,
        source_stride=curve.source_stride,
        mirror_offset=curve.mirror_offset,
        smooth_window=window,
    )


def mirror_extend(curve: FocalCurve) -> FocalCurve:
    """Prepend the reversed first half and append the reversed second half.

    The left extension reverses samples [0, ceil(n/2)), the right extension
    reverses samples [floor(n/2), n); mirror_offset = ceil(n/2).
    """
    if curve.mirror_offset != 0:
        raise ConfigError("curve is already mirror-extended")
    v = curve.values
    n = v.size
    half = (n + 1) // 2
    left = v[:half][::-1]
    right = v[n // 2 :][::-1]
    return FocalCurve(
        np.concatenate([left, v, right]),
        source_stride=curve.source_stride,
        mirror_offset=half,
        smooth_window=curve.smooth_window,
    )


def _plateau_maxima(v: np.ndarray) -> list[int]:
    """Indices of strict local maxima; a plateau counts once at its center
    (rounding left). Boundary samples are never maxima."""
    n = v.size
    out = []
    i = 0
    while i < n:
        j = i
        while j + 1 < n and v[j + 1] == v[i]:
            j += 1
        if i > 0 and j < n - 1 and v[i - 1] < v[i] and v[j + 1] < v[i]:
            out.append((i + j) // 2)
        i = j + 1
    return out


def find_peaks(values: np.ndarray | FocalCurve, min_prominence: float = 0.0) -> list[Peak]:
    """All local maxima with prominence >= min_prominence, by ascending index."""
    v = values.values if isinstance(values, FocalCurve) else np.asarray(values, dtype=np.float64)
    n = v.size
    peaks: list[Peak] = []
    for p in _plateau_maxima(v):
        height = float(v[p])
        left_min = height
        k = p - 1
        while k >= 0 and v[k] <= height:
            if v[k] < left_min:
                left_min = float(v[k])
            k -= 1
        left_stop = k + 1  # first index of the left descent
        right_min = height
        k = p + 1
        while k < n and v[k] <= height:
            if v[k] < right_min:
                right_min = float(v[k])
            k += 1
        right_stop = k - 1  # last index of the right descent
        # ref is the saddle value itself, not height - prominence: the
        # subtraction can round 1 ulp below the saddle and the crossing scan
        # would then walk past the descent.
        ref = max(left_min, right_min)
        prominence = height - ref
        lb = p - 1
        while lb > left_stop and v[lb] > ref:
            lb -= 1
        rb = p + 1
        while rb < right_stop and v[rb] > ref:
            rb += 1
        if prominence >= min_prominence:
            peaks.append(Peak(p, height, prominence, lb, rb))
    return peaks


def _in_original_range(peak: Peak, curve: FocalCurve) -> bool:
    off = curve.mirror_offset
    return off <= peak.index < off + curve.original_length


def bin_search_prominent_peak(curve: FocalCurve) -> Peak:
    """Binary-search a prominence threshold until exactly one peak survives.

    Runs at most 64 iterations or until the threshold interval shrinks below
    1e-12 of the curve range. When no threshold isolates a single peak (exact
    prominence ties), the globally most prominent peak wins; ties prefer peaks
    inside the original (unmirrored) range, then the lower index.
    """
    v = curve.values
    vmin = float(v.min())
    vmax = float(v.max())
    if vmax == vmin:
        raise NoPeakError("flat focal curve has no peak")
    peaks = find_peaks(v, 0.0)
    if not peaks:
        raise NoPeakError("focal curve has no local maximum")
    lo = 0.0
    hi = vmax - vmin
    span = hi
    for _ in range(BIN_SEARCH_MAX_ITER):
        if hi - lo < BIN_SEARCH_REL_EPS * span:
            break
        mid = (lo + hi) / 2.0
        survivors = [p for p in peaks if p.prominence >= mid]
        if len(survivors) == 1:
            return survivors[0]
        if survivors:
            lo = mid
        else:
            hi = mid
    return max(
        peaks,
        key=lambda p: (p.prominence, _in_original_range(p, curve), -p.index),
    )


def map_back(peak: Peak, curve: FocalCurve) -> Segment:
    """Translate a peak on a (possibly mirror-extended) curve to a Segment.

    Base positions are shifted by the mirror offset and clamped into the
    original range; a segment that collapses to a single frame is logged as
    degenerate. Frame indices and z positions scale by the source stride.
    """
    n_ext = len(curve)
    if not (0 <= peak.left_base <= peak.index <= peak.right_base <= n_ext - 1):
        raise InvalidPeakError(
            f"peak bases ({peak.left_base}, {peak.right_base}) do not fit a curve of length {n_ext}"
        )
    n = curve.original_length
    off = curve.mirror_offset
    i0 = peak.left_base - off
    i1 = peak.right_base - off
    start = min(max(i0, 0), n - 1)
    end = min(max(i1, 0), n - 1)
    if start == end:
        log.warning(
            "degenerate segment: peak base interval (%d, %d) clamped to frame %d",
            i0,
            i1,
            start,
        )
    stride = curve.source_stride
    return Segment(start * stride, end * stride, start * stride, end * stride)


def fast_search(
    stack: ZStack,
    op: FMOperator = FMOperator.VOLL4,
    smooth_window: int | None = None,
) -> Segment:
    """Locate the in-focus segment of a stack from its focal curve."""
    curve = focal_curve(stack, op)
    window = default_smooth_window(len(curve)) if smooth_window is None else smooth_window
    smooth = smoothen(curve, window)
    extended = mirror_extend(smooth)
    peak = bin_search_prominent_peak(extended)
    return map_back(peak, extended)
